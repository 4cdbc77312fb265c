#include "mtm/backlund.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mtm {

RiccatiField riccati_field(const LaxVector& phi) {
    const int n = phi.grid.n();
    RiccatiField r{phi.grid, CArray(n), std::vector<bool>(n, true)};
    for (int j = 0; j < n; ++j) {
        if (std::abs(phi.phi2[j]) < 1e-300) {
            r.valid[j] = false;
            continue;
        }
        r.gamma_var[j] = phi.phi1[j] / phi.phi2[j];
        if (!std::isfinite(std::abs(r.gamma_var[j]))) r.valid[j] = false;
    }
    return r;
}

RiccatiResidual riccati_residual(const RiccatiField& g, const SpinorField& f, cplx lambda) {
    require_same_grid(g.grid, f.grid, "riccati_residual");
    if (lambda == cplx(0.0, 0.0)) throw ParameterError("lambda must be nonzero");
    const int n = g.grid.n();
    const double h = g.grid.dx();
    const cplx rho1 = 1.0 / (2.0 * lambda), rho2 = lambda / 2.0;
    const cplx lin = 2.0 * I * (rho2 * rho2 - rho1 * rho1);
    RiccatiResidual out;
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
        bool ok = j >= 2 && j <= n - 3;
        for (int k = -2; ok && k <= 2; ++k) ok = g.valid[j + k];
        if (!ok) {
            ++out.excluded;
            continue;
        }
        const CArray& G = g.gamma_var;
        const cplx dG = (G[j - 2] - 8.0 * G[j - 1] + 8.0 * G[j + 1] - G[j + 2]) / (12.0 * h);
        const cplx u = f.u[j], v = f.v[j], z = G[j];
        const cplx rhs = lin * z + 0.5 * I * (std::norm(u) - std::norm(v)) * z + I * (rho2 * v - rho1 * u) * z * z -
                         I * (rho2 * std::conj(v) - rho1 * std::conj(u));
        const double r = std::abs(dG - rhs) / (1.0 + std::norm(z));
        sum += quad_weight(g.grid, j) * r * r;
    }
    out.residual = std::sqrt(sum);
    return out;
}

namespace {

void require_gamma(double gamma) {
    if (!(gamma > 0.0 && gamma < kPi)) throw ParameterError("gamma outside (0, pi)");
}

}  // namespace

SpinorField backlund_transform(const SpinorField& f, const LaxVector& phi, cplx lambda) {
    require_same_grid(f.grid, phi.grid, "backlund_transform");
    if (lambda == cplx(0.0, 0.0)) throw ParameterError("lambda must be nonzero");
    const double delta = std::abs(lambda);
    const double gamma = 2.0 * std::arg(lambda);
    require_gamma(gamma);
    const double s = std::sin(gamma);
    const cplx eh = std::polar(1.0, 0.5 * gamma);
    SpinorField out(f.grid);
    for (int j = 0; j < f.grid.n(); ++j) {
        cplx p1 = phi.phi1[j], p2 = phi.phi2[j];
        const double mag = std::norm(p1) + std::norm(p2);
        if (!(mag >= 1e-280))
            throw DegenerateVector("Lax vector vanishes at x = " + std::to_string(f.grid.x(j)));
        // The map is homogeneous of degree zero in phi; rescale to keep |phi| near 1.
        const double m = std::max(std::abs(p1), std::abs(p2));
        p1 /= m;
        p2 /= m;
        const double a1 = std::norm(p1), a2 = std::norm(p2);
        const cplx d1 = eh * a1 + std::conj(eh) * a2;
        const cplx d2 = std::conj(d1);
        const cplx cross = std::conj(p1) * p2;
        out.u[j] = -f.u[j] * d2 / d1 + 2.0 * I * s / delta * cross / d1;
        out.v[j] = -f.v[j] * d1 / d2 - 2.0 * I * s * delta * cross / d2;
    }
    return out;
}

LaxVector pushforward_eigenvector(const LaxVector& phi, double gamma) {
    require_gamma(gamma);
    const cplx eh = std::polar(1.0, 0.5 * gamma);
    LaxVector out(phi.grid);
    for (int j = 0; j < phi.grid.n(); ++j) {
        const cplx p1 = phi.phi1[j], p2 = phi.phi2[j];
        const double mag = std::norm(p1) + std::norm(p2);
        if (!(mag >= 1e-280))
            throw DegenerateVector("Lax vector vanishes at x = " + std::to_string(phi.grid.x(j)));
        const double d = std::abs(eh * std::norm(p1) + std::conj(eh) * std::norm(p2));
        out.phi1[j] = std::conj(p2) / d;
        out.phi2[j] = std::conj(p1) / d;
    }
    return out;
}

SpinorField down_map(const SpinorField& f0, const EigenResult& res) {
    return backlund_transform(f0, res.eigenvector, res.lambda);
}

namespace {

LaxVector superpose(const JostPair& jost, double a, double theta) {
    const cplx c1 = std::exp(0.5 * cplx(a, theta));
    return c1 * jost.right + (1.0 / c1) * jost.left;
}

}  // namespace

SpinorField up_map(const SpinorField& f_t, const JostPair& jost, cplx lambda, double a, double theta) {
    require_same_grid(f_t.grid, jost.left.grid, "up_map");
    return backlund_transform(f_t, superpose(jost, a, theta), lambda);
}

OrbitParameters orbit_parameters_from_vector(const LaxVector& psi, const JostPair& jost) {
    require_same_grid(psi.grid, jost.left.grid, "orbit_parameters_from_vector");
    const int j0 = psi.grid.nearest(0.0);
    const cplx r1 = jost.right.phi1[j0], r2 = jost.right.phi2[j0];
    const cplx l1 = jost.left.phi1[j0], l2 = jost.left.phi2[j0];
    const cplx det = r1 * l2 - l1 * r2;
    if (std::abs(det) == 0.0) throw DegenerateVector("Jost solutions are collinear at x = 0");
    const cplx c1 = (psi.phi1[j0] * l2 - l1 * psi.phi2[j0]) / det;
    const cplx c2 = (r1 * psi.phi2[j0] - psi.phi1[j0] * r2) / det;
    if (std::abs(c1) == 0.0 || std::abs(c2) == 0.0)
        throw DegenerateVector("vector lies on a single Jost solution; orbit parameters undefined");
    const cplx ratio = c1 / c2;
    return {std::log(std::abs(ratio)), std::arg(ratio)};
}

OrbitFit fit_up_map(const SpinorField& f_t, const JostPair& jost, cplx lambda, const SpinorField& target,
                    OrbitParameters start, int max_iterations) {
    require_same_grid(f_t.grid, target.grid, "fit_up_map");
    const Grid& g = f_t.grid;
    const int n = g.n();
    auto residual = [&](double a, double th) {
        const SpinorField U = up_map(f_t, jost, lambda, a, th);
        CArray r(2 * n);
        for (int j = 0; j < n; ++j) {
            const double w = std::sqrt(quad_weight(g, j));
            r[j] = w * (U.u[j] - target.u[j]);
            r[n + j] = w * (U.v[j] - target.v[j]);
        }
        return r;
    };
    auto sq = [](const CArray& r) {
        double s = 0.0;
        for (const auto& z : r) s += std::norm(z);
        return s;
    };
    OrbitFit fit{start.a, start.theta, 0.0, 0};
    CArray r = residual(fit.a, fit.theta);
    double cost = sq(r);
    const double h = 1e-6;
    for (int it = 0; it < max_iterations; ++it) {
        fit.iterations = it + 1;
        const CArray ra_p = residual(fit.a + h, fit.theta), ra_m = residual(fit.a - h, fit.theta);
        const CArray rt_p = residual(fit.a, fit.theta + h), rt_m = residual(fit.a, fit.theta - h);
        double jaa = 0, jat = 0, jtt = 0, ga = 0, gt = 0;
        for (std::size_t k = 0; k < r.size(); ++k) {
            const cplx da = (ra_p[k] - ra_m[k]) / (2 * h), dt = (rt_p[k] - rt_m[k]) / (2 * h);
            jaa += std::norm(da);
            jtt += std::norm(dt);
            jat += std::real(std::conj(da) * dt);
            ga += std::real(std::conj(da) * r[k]);
            gt += std::real(std::conj(dt) * r[k]);
        }
        const double det = jaa * jtt - jat * jat;
        if (!(std::abs(det) > 0.0)) break;
        double sa = -(jtt * ga - jat * gt) / det;
        double st = -(jaa * gt - jat * ga) / det;
        // Halve the step until the cost does not increase.
        bool accepted = false;
        for (int k = 0; k < 30; ++k) {
            const CArray rn = residual(fit.a + sa, fit.theta + st);
            const double cn = sq(rn);
            if (cn <= cost) {
                fit.a += sa;
                fit.theta += st;
                r = rn;
                cost = cn;
                accepted = true;
                break;
            }
            sa *= 0.5;
            st *= 0.5;
        }
        if (!accepted || std::hypot(sa, st) < 1e-12) break;
    }
    const SpinorField U = up_map(f_t, jost, lambda, fit.a, fit.theta);
    fit.distance = split_norm(U - target);
    fit.theta = std::remainder(fit.theta, 2.0 * kPi);
    return fit;
}

}  // namespace mtm
