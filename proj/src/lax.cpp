#include "mtm/lax.hpp"

#include <cmath>
#include <string>

namespace mtm {

Mat2 Mat2::operator*(const Mat2& o) const {
    return {a11 * o.a11 + a12 * o.a21, a11 * o.a12 + a12 * o.a22, a21 * o.a11 + a22 * o.a21,
            a21 * o.a12 + a22 * o.a22};
}

Mat2 Mat2::operator-(const Mat2& o) const { return {a11 - o.a11, a12 - o.a12, a21 - o.a21, a22 - o.a22}; }
Mat2 Mat2::operator+(const Mat2& o) const { return {a11 + o.a11, a12 + o.a12, a21 + o.a21, a22 + o.a22}; }

namespace {

void require_nonzero(cplx lambda) {
    if (lambda == cplx(0.0, 0.0) || !std::isfinite(lambda.real()) || !std::isfinite(lambda.imag()))
        throw ParameterError("spectral parameter must be finite and nonzero");
}

void require_gamma(double gamma) {
    if (!(gamma > 0.0 && gamma < kPi)) throw ParameterError("gamma outside (0, pi)");
}

cplx k1_of(cplx lambda) {
    const cplx l2 = lambda * lambda;
    return 0.25 * I * (l2 - 1.0 / l2);
}

cplx k2_of(cplx lambda) {
    const cplx l2 = lambda * lambda;
    return 0.25 * (l2 + 1.0 / l2);
}

}  // namespace

Mat2 lax_L(cplx u, cplx v, cplx lambda) {
    const cplx d = 0.25 * I * (std::norm(u) - std::norm(v)) + k1_of(lambda);
    return {d, 0.5 * I * (std::conj(u) / lambda - lambda * std::conj(v)), 0.5 * I * (u / lambda - lambda * v), -d};
}

Mat2 lax_A(cplx u, cplx v, cplx lambda) {
    const cplx d = -0.25 * I * (std::norm(u) + std::norm(v)) + I * k2_of(lambda);
    return {d, -0.5 * I * (lambda * std::conj(v) + std::conj(u) / lambda), -0.5 * I * (lambda * v + u / lambda),
            -d};
}

LaxOperatorSample::LaxOperatorSample(const Grid& g) : grid(g), a11(g.n()), a12(g.n()), a21(g.n()), a22(g.n()) {}

namespace {

template <class F>
LaxOperatorSample assemble(const SpinorField& f, cplx lambda, F pointwise) {
    require_nonzero(lambda);
    LaxOperatorSample s(f.grid);
    for (int j = 0; j < f.grid.n(); ++j) {
        const Mat2 m = pointwise(f.u[j], f.v[j], lambda);
        s.a11[j] = m.a11;
        s.a12[j] = m.a12;
        s.a21[j] = m.a21;
        s.a22[j] = m.a22;
    }
    return s;
}

}  // namespace

LaxOperatorSample assemble_L(const SpinorField& f, cplx lambda) { return assemble(f, lambda, lax_L); }
LaxOperatorSample assemble_A(const SpinorField& f, cplx lambda) { return assemble(f, lambda, lax_A); }

GaugePhase gauge_transform(const SpinorField& f) {
    const int n = f.grid.n();
    std::vector<double> w(n);
    for (int j = 0; j < n; ++j) w[j] = 0.25 * (std::norm(f.u[j]) - std::norm(f.v[j]));
    const auto c = cumulative_integral4(f.grid, w);
    const double total = c[n - 1];
    GaugePhase g{f.grid, CArray(n), CArray(n)};
    for (int j = 0; j < n; ++j) {
        g.m1[j] = std::polar(1.0, c[j]);
        g.m2[j] = std::polar(1.0, total - c[j]);
    }
    return g;
}

namespace {

// Coefficient value at x_{m+1/2}: six-point Lagrange where the stencil fits,
// dropping to four and two points near the ends.
cplx half_point(const CArray& c, int m) {
    const int n = static_cast<int>(c.size());
    if (m >= 2 && m + 3 < n)
        return (3.0 * c[m - 2] - 25.0 * c[m - 1] + 150.0 * c[m] + 150.0 * c[m + 1] - 25.0 * c[m + 2] +
                3.0 * c[m + 3]) /
               256.0;
    if (m >= 1 && m + 2 < n) return (-c[m - 1] + 9.0 * c[m] + 9.0 * c[m + 1] - c[m + 2]) / 16.0;
    return 0.5 * (c[m] + c[m + 1]);
}

// Classical RK4 for y' = [[d1, c12(x)], [c21(x), d2]] y on grid indices,
// from `start` towards decreasing (dir = -1) or increasing (dir = +1) index.
LaxVector integrate_reduced(const Grid& g, cplx d1, cplx d2, const CArray& c12, const CArray& c21, cplx y1,
                            cplx y2, int start, int dir) {
    const int n = g.n();
    LaxVector out(g);
    out.phi1[start] = y1;
    out.phi2[start] = y2;
    const double h = dir * g.dx();
    auto rhs = [&](cplx a12, cplx a21, cplx z1, cplx z2, cplx& r1, cplx& r2) {
        r1 = d1 * z1 + a12 * z2;
        r2 = a21 * z1 + d2 * z2;
    };
    for (int j = start; j + dir >= 0 && j + dir < n; j += dir) {
        const int jn = j + dir;
        const int m = std::min(j, jn);
        const cplx h12 = half_point(c12, m), h21 = half_point(c21, m);
        cplx k1a, k1b, k2a, k2b, k3a, k3b, k4a, k4b;
        rhs(c12[j], c21[j], y1, y2, k1a, k1b);
        rhs(h12, h21, y1 + 0.5 * h * k1a, y2 + 0.5 * h * k1b, k2a, k2b);
        rhs(h12, h21, y1 + 0.5 * h * k2a, y2 + 0.5 * h * k2b, k3a, k3b);
        rhs(c12[jn], c21[jn], y1 + h * k3a, y2 + h * k3b, k4a, k4b);
        y1 += h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
        y2 += h / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
        if (!std::isfinite(std::abs(y1)) || !std::isfinite(std::abs(y2)))
            throw IntegrationError("Jost integration overflowed at x = " + std::to_string(g.x(jn)));
        out.phi1[jn] = y1;
        out.phi2[jn] = y2;
    }
    return out;
}

enum class Frame { Phi, Chi };

struct Reduced {
    Frame frame;
    LaxVector y;
};

LaxVector to_original(const Reduced& r, const GaugePhase& gp, cplx k1) {
    const Grid& g = gp.grid;
    LaxVector out(g);
    for (int j = 0; j < g.n(); ++j) {
        const double x = g.x(j);
        if (r.frame == Frame::Phi) {
            const cplx e = std::exp(k1 * x);
            out.phi1[j] = e * gp.m1[j] * r.y.phi1[j];
            out.phi2[j] = e * std::conj(gp.m1[j]) * r.y.phi2[j];
        } else {
            const cplx e = std::exp(-k1 * x);
            out.phi1[j] = e * std::conj(gp.m2[j]) * r.y.phi1[j];
            out.phi2[j] = e * gp.m2[j] * r.y.phi2[j];
        }
        if (!std::isfinite(std::abs(out.phi1[j])) || !std::isfinite(std::abs(out.phi2[j])))
            throw IntegrationError("Jost solution not representable at x = " + std::to_string(x));
    }
    return out;
}

struct JostCore {
    cplx k1;
    GaugePhase gauge;
    Reduced left, right;
};

JostCore jost_core(const SpinorField& f, cplx lambda) {
    require_nonzero(lambda);
    const cplx k1 = k1_of(lambda);
    if (std::abs(k1.real()) <= 1e-12 * std::max(1.0, std::abs(k1)))
        throw IntegrationError("degenerate exponent: lambda^2 is real, no recessive direction");
    const Grid& g = f.grid;
    const int n = g.n();
    GaugePhase gp = gauge_transform(f);
    CArray phi12(n), phi21(n), chi12(n), chi21(n);
    for (int j = 0; j < n; ++j) {
        const Mat2 L = lax_L(f.u[j], f.v[j], lambda);
        const cplx m1 = gp.m1[j], m2 = gp.m2[j];
        phi12[j] = L.a12 * std::conj(m1 * m1);
        phi21[j] = L.a21 * m1 * m1;
        chi12[j] = L.a12 * m2 * m2;
        chi21[j] = L.a21 * std::conj(m2 * m2);
    }
    // Each solution is integrated from the end where it is recessive,
    // which is also the numerically stable direction.
    const bool decays_right = k1.real() < 0.0;  // e^{k1 x} recessive at +inf
    Reduced right{decays_right ? Frame::Phi : Frame::Chi, {}};
    Reduced left{decays_right ? Frame::Chi : Frame::Phi, {}};
    if (decays_right) {
        right.y = integrate_reduced(g, 0.0, -2.0 * k1, phi12, phi21, 1.0, 0.0, n - 1, -1);
        left.y = integrate_reduced(g, 2.0 * k1, 0.0, chi12, chi21, 0.0, 1.0, 0, +1);
    } else {
        right.y = integrate_reduced(g, 2.0 * k1, 0.0, chi12, chi21, 0.0, 1.0, n - 1, -1);
        left.y = integrate_reduced(g, 0.0, -2.0 * k1, phi12, phi21, 1.0, 0.0, 0, +1);
    }
    return {k1, std::move(gp), std::move(left), std::move(right)};
}

JostPair assemble_pair(const JostCore& c, cplx lambda, bool time_phases, double t) {
    JostPair jp;
    jp.lambda = lambda;
    jp.gauge = c.gauge;
    jp.left_reduced = c.left.y;
    jp.right_reduced = c.right.y;
    jp.left = to_original(c.left, c.gauge, c.k1);
    jp.right = to_original(c.right, c.gauge, c.k1);
    const int n = c.gauge.grid.n();
    jp.normalization.time_phases = time_phases;
    jp.normalization.t = t;
    jp.normalization.k1 = c.k1;
    jp.normalization.left_at_min[0] = jp.left.phi1[0];
    jp.normalization.left_at_min[1] = jp.left.phi2[0];
    jp.normalization.right_at_max[0] = jp.right.phi1[n - 1];
    jp.normalization.right_at_max[1] = jp.right.phi2[n - 1];
    return jp;
}

}  // namespace

JostPair solve_jost(const SpinorField& f, cplx lambda) {
    return assemble_pair(jost_core(f, lambda), lambda, false, 0.0);
}

JostPair solve_time_bvp(const SpinorField& f_t, cplx lambda, double t) {
    JostCore c = jost_core(f_t, lambda);
    if (!(c.k1.real() < 0.0)) throw ParameterError("time boundary problem needs Re k1 < 0 (gamma in (0, pi))");
    const int n = f_t.grid.n();
    const cplx ph = std::exp(I * t * k2_of(lambda));
    const cplx a = c.right.y.phi1[0], b = c.left.y.phi2[n - 1];
    if (std::abs(a) < 1e-300 || std::abs(b) < 1e-300)
        throw IntegrationError("Jost solution vanishes at the normalizing boundary");
    c.right.y = (ph / a) * c.right.y;
    c.left.y = (1.0 / (ph * b)) * c.left.y;
    return assemble_pair(c, lambda, true, t);
}

namespace {

cplx unit_det_at(const JostPair& jp, int j) {
    const cplx l1 = jp.left.phi1[j], l2 = jp.left.phi2[j];
    const cplx r1 = jp.right.phi1[j], r2 = jp.right.phi2[j];
    const double nl = std::sqrt(std::norm(l1) + std::norm(l2));
    const double nr = std::sqrt(std::norm(r1) + std::norm(r2));
    if (nl == 0.0 || nr == 0.0) throw DegenerateVector("Jost solution vanishes at x = 0");
    return (l1 * r2 - l2 * r1) / (nl * nr);
}

}  // namespace

cplx evans_function(const SpinorField& f, cplx lambda) {
    const JostPair jp = solve_jost(f, lambda);
    return unit_det_at(jp, f.grid.nearest(0.0));
}

LaxVector eigenvector_from_jost(const JostPair& jp) {
    const Grid& g = jp.left.grid;
    const int n = g.n();
    const int j0 = g.nearest(0.0);
    const cplx r1 = jp.right.phi1[j0], r2 = jp.right.phi2[j0];
    const double rr = std::norm(r1) + std::norm(r2);
    if (rr == 0.0) throw DegenerateVector("right Jost solution vanishes at x = 0");
    const cplx c = (std::conj(r1) * jp.left.phi1[j0] + std::conj(r2) * jp.left.phi2[j0]) / rr;
    LaxVector e(g);
    for (int j = 0; j < n; ++j) {
        if (j <= j0) {
            e.phi1[j] = jp.left.phi1[j];
            e.phi2[j] = jp.left.phi2[j];
        } else {
            e.phi1[j] = c * jp.right.phi1[j];
            e.phi2[j] = c * jp.right.phi2[j];
        }
    }
    const double nrm = std::sqrt(l2_norm_sq(e));
    if (!(nrm > 0.0) || !std::isfinite(nrm)) throw DegenerateVector("eigenvector has zero or infinite norm");
    cplx peak = 0.0;
    for (int j = 0; j < n; ++j) {
        if (std::abs(e.phi1[j]) > std::abs(peak)) peak = e.phi1[j];
        if (std::abs(e.phi2[j]) > std::abs(peak)) peak = e.phi2[j];
    }
    return (std::conj(peak) / (std::abs(peak) * nrm)) * e;
}

EigenResult find_eigenvalue(const SpinorField& f, cplx lambda_guess, const SecantOptions& opt) {
    require_nonzero(lambda_guess);
    auto E = [&](cplx lam) {
        try {
            return evans_function(f, lam);
        } catch (const std::runtime_error& e) {
            throw NoEigenvalue(std::string("Evans function failed during search: ") + e.what());
        }
    };
    cplx z0 = lambda_guess, z1 = lambda_guess * (1.0 + opt.second_point);
    cplx e0 = E(z0), e1 = E(z1);
    for (int it = 0; it <= opt.max_iterations; ++it) {
        if (std::abs(e1) < opt.tolerance) {
            const JostPair jp = solve_jost(f, z1);
            return {z1, eigenvector_from_jost(jp), std::abs(e1), it};
        }
        if (it == opt.max_iterations) break;
        const cplx denom = e1 - e0;
        if (std::abs(denom) < 1e-300)
            throw NoEigenvalue("Evans function is flat near the guess; no eigenvalue found");
        const cplx z2 = z1 - e1 * (z1 - z0) / denom;
        if (!std::isfinite(z2.real()) || !std::isfinite(z2.imag()) || z2 == cplx(0.0, 0.0))
            throw NoEigenvalue("secant iterate left the admissible region");
        z0 = z1;
        e0 = e1;
        z1 = z2;
        e1 = E(z1);
    }
    throw NoEigenvalue("secant iteration did not converge in " + std::to_string(opt.max_iterations) +
                       " iterations");
}

NullVectors null_vectors(double gamma, const Grid& grid) {
    require_gamma(gamma);
    const double s = std::sin(gamma), s2g = std::sin(2.0 * gamma), cg = std::cos(gamma);
    NullVectors nv{LaxVector(grid), LaxVector(grid), LaxVector(grid)};
    for (int j = 0; j < grid.n(); ++j) {
        const double x = grid.x(j);
        const double lq = log_abs_sech(x * s, 0.5 * gamma);
        const double ep = std::exp(0.5 * x * s + lq), em = std::exp(-0.5 * x * s + lq);
        nv.phi.phi1[j] = ep;
        nv.phi.phi2[j] = em;
        nv.eta.phi1[j] = em;
        nv.eta.phi2[j] = -ep;
        nv.xi.phi1[j] = std::exp(-1.5 * x * s + lq) - x * s2g * ep;
        nv.xi.phi2[j] = -(std::exp(1.5 * x * s + lq) + (2.0 * cg + x * s2g) * em);
    }
    return nv;
}

LaxVector project_P(double gamma, const LaxVector& v) {
    const NullVectors nv = null_vectors(gamma, v.grid);
    const LaxVector s3eta = sigma3(nv.eta);
    const cplx c = inner_product(s3eta, v) / inner_product(s3eta, nv.phi);
    return v - c * nv.phi;
}

LaxVector project_P_hat(double gamma, const LaxVector& f) { return sigma3(project_P(gamma, sigma3(f))); }

namespace {

Mat2 soliton_operator(double gamma, double x) {
    auto [u, v] = stationary_point(gamma, 0.0, 0.0, x, 0.0);
    return lax_L(u, v, std::polar(1.0, 0.5 * gamma));
}

}  // namespace

LaxVector resolvent_solve(double gamma, const LaxVector& f_in, const ResolventOptions& opt) {
    require_gamma(gamma);
    const Grid& g = f_in.grid;
    const int n = g.n();
    const NullVectors nv = null_vectors(gamma, g);
    const double nf = std::sqrt(l2_norm_sq(f_in));
    if (nf == 0.0) return LaxVector(g);
    const double neta = std::sqrt(l2_norm_sq(nv.eta));
    const double violation = std::abs(inner_product(nv.eta, f_in)) / (neta * nf);
    if (violation > opt.solvability_tolerance)
        throw OrthogonalityError("right-hand side not orthogonal to the adjoint kernel (relative violation " +
                                 std::to_string(violation) + ")");
    const LaxVector f = project_P_hat(gamma, f_in);

    // Variation of parameters with the fundamental pair (phi, xi), det[phi, xi] = -4:
    // w = phi A + xi B, A' = (xi1 f2 - xi2 f1)/4, B' = (phi2 f1 - phi1 f2)/4.
    CArray da(n), db(n);
    for (int j = 0; j < n; ++j) {
        da[j] = 0.25 * (nv.xi.phi1[j] * f.phi2[j] - nv.xi.phi2[j] * f.phi1[j]);
        db[j] = 0.25 * (nv.phi.phi2[j] * f.phi1[j] - nv.phi.phi1[j] * f.phi2[j]);
    }
    const CArray A = cumulative_integral4(g, da);
    const CArray Bl = cumulative_integral4(g, db);
    // B is accumulated from the nearer infinity so the growth of xi multiplies a small tail.
    CArray db_rev(db.rbegin(), db.rend());
    const CArray Br_rev = cumulative_integral4(g, db_rev);
    const int j0 = g.nearest(0.0);
    LaxVector w(g);
    for (int j = 0; j < n; ++j) {
        const cplx a = A[j] - A[j0];
        const cplx b = (j <= j0) ? Bl[j] : -Br_rev[n - 1 - j];
        w.phi1[j] = nv.phi.phi1[j] * a + nv.xi.phi1[j] * b;
        w.phi2[j] = nv.phi.phi2[j] * a + nv.xi.phi2[j] * b;
    }
    return project_P(gamma, w);
}

namespace {

// Lax vectors are not periodic even on periodic grids, so residuals use one-sided end stencils.
Grid as_open(const Grid& g) { return Grid(g.x_min(), g.x_max(), g.n(), false); }

}  // namespace

double lax_residual(const SpinorField& f, const LaxVector& psi, cplx lambda, int order) {
    require_same_grid(f.grid, psi.grid, "lax_residual");
    const Grid open = as_open(psi.grid);
    const CArray d1 = derivative(open, psi.phi1, order), d2 = derivative(open, psi.phi2, order);
    LaxVector r(psi.grid);
    for (int j = 0; j < psi.grid.n(); ++j) {
        const Mat2 L = lax_L(f.u[j], f.v[j], lambda);
        r.phi1[j] = d1[j] - (L.a11 * psi.phi1[j] + L.a12 * psi.phi2[j]);
        r.phi2[j] = d2[j] - (L.a21 * psi.phi1[j] + L.a22 * psi.phi2[j]);
    }
    return std::sqrt(l2_norm_sq(r));
}

double soliton_lax_residual(double gamma, const LaxVector& w, const LaxVector& rhs, int order) {
    require_same_grid(w.grid, rhs.grid, "soliton_lax_residual");
    const Grid open = as_open(w.grid);
    const CArray d1 = derivative(open, w.phi1, order), d2 = derivative(open, w.phi2, order);
    LaxVector r(w.grid);
    for (int j = 0; j < w.grid.n(); ++j) {
        const Mat2 M = soliton_operator(gamma, w.grid.x(j));
        r.phi1[j] = d1[j] - (M.a11 * w.phi1[j] + M.a12 * w.phi2[j]) - rhs.phi1[j];
        r.phi2[j] = d2[j] - (M.a21 * w.phi1[j] + M.a22 * w.phi2[j]) - rhs.phi2[j];
    }
    return std::sqrt(l2_norm_sq(r));
}

SConstant s_constant(double gamma) {
    require_gamma(gamma);
    const double s = std::sin(gamma), c = std::cos(gamma);
    SConstant out;
    out.closed_form = 4.0 * I * std::exp(-0.5 * I * gamma) / s;

    // The integrand decays like e^{-2|x| sin gamma}; |x| <= 20/sin gamma leaves a tail below 1e-17.
    {
        const double half = 20.0 / s;
        const int n = 40000;
        const double h = 2.0 * half / n;
        double sum = 0.0;
        for (int j = 0; j <= n; ++j) {
            const double ch = std::cosh(2.0 * (-half + j * h) * s);
            const double val = (1.0 + c * ch) / ((ch + c) * (ch + c));
            sum += (j == 0 || j == n) ? 0.5 * val : val;
        }
        out.quadrature = 4.0 * I * std::exp(-0.5 * I * gamma) * (sum * h);
    }

    // (i/2) <eta, dL/dlambda-type matrix phi> on a grid wide enough for e^{-|x| sin gamma} decay.
    {
        const Grid g = Grid::symmetric(40.0 / s, 1 << 15);
        const NullVectors nv = null_vectors(gamma, g);
        const cplx lam = std::polar(1.0, 0.5 * gamma);
        const cplx b11 = lam + std::pow(lam, -3);
        LaxVector bphi(g);
        for (int j = 0; j < g.n(); ++j) {
            auto [u, v] = stationary_point(gamma, 0.0, 0.0, g.x(j), 0.0);
            const cplx b12 = -(std::conj(u) / (lam * lam) + std::conj(v));
            const cplx b21 = -(u / (lam * lam) + v);
            bphi.phi1[j] = b11 * nv.phi.phi1[j] + b12 * nv.phi.phi2[j];
            bphi.phi2[j] = b21 * nv.phi.phi1[j] - b11 * nv.phi.phi2[j];
        }
        out.matrix_form = 0.5 * I * inner_product(nv.eta, bphi);
    }
    out.relative_error = std::abs(out.quadrature - out.closed_form) / std::abs(out.closed_form);
    return out;
}

RemainderDiagnostics eigenvector_remainder(const SpinorField& f, const EigenResult& res) {
    require_same_grid(f.grid, res.eigenvector.grid, "eigenvector_remainder");
    const double gamma = 2.0 * std::arg(res.lambda);
    require_gamma(gamma);
    const Grid& g = f.grid;
    const int n = g.n();
    const double s = std::sin(gamma);
    const int j0 = g.nearest(0.0);
    const GaugePhase gp = gauge_transform(f);

    LaxVector red(g);
    for (int j = 0; j < n; ++j) {
        const cplx fj = gp.m1[j] / gp.m1[j0];
        red.phi1[j] = std::conj(fj) * res.eigenvector.phi1[j];
        red.phi2[j] = fj * res.eigenvector.phi2[j];
    }
    const NullVectors nv = null_vectors(gamma, g);
    const LaxVector s3eta = sigma3(nv.eta);
    const cplx denom = inner_product(s3eta, red);
    if (std::abs(denom) == 0.0) throw DegenerateVector("eigenvector orthogonal to sigma3 eta");
    const cplx scale = inner_product(s3eta, nv.phi) / denom;
    red = scale * red;

    RemainderDiagnostics r;
    r.gamma = gamma;
    r.grid = g;
    r.r11.assign(n, 0.0);
    r.r12.assign(n, 0.0);
    r.r21.assign(n, 0.0);
    r.r22.assign(n, 0.0);
    r.window = 12.0 / s;
    r.scale = scale;
    for (int j = 0; j < n; ++j) {
        const double x = g.x(j);
        const double lq = log_abs_sech(x * s, 0.5 * gamma);
        if (x >= 0.0) {
            const double w = std::exp(-0.5 * x * s - lq);
            r.r11[j] = w * red.phi1[j] - 1.0;
            r.r21[j] = w * red.phi2[j] - std::exp(-x * s);
        } else {
            const double w = std::exp(0.5 * x * s - lq);
            r.r12[j] = w * red.phi1[j] - std::exp(x * s);
            r.r22[j] = w * red.phi2[j] - 1.0;
        }
    }
    const CArray* comps[4] = {&r.r11, &r.r12, &r.r21, &r.r22};
    for (int k = 0; k < 4; ++k) {
        double sup = 0.0, sq = 0.0;
        for (int j = 0; j < n; ++j) {
            if (std::abs(g.x(j)) > r.window) continue;
            const double a = std::abs((*comps[k])[j]);
            sup = std::max(sup, a);
            sq += quad_weight(g, j) * a * a;
        }
        r.sup[k] = sup;
        r.l2[k] = std::sqrt(sq);
    }
    r.reduced = std::move(red);
    return r;
}

LaxVector reconstruct_from_remainder(const RemainderDiagnostics& r) {
    const Grid& g = r.grid;
    const double s = std::sin(r.gamma);
    LaxVector out(g);
    for (int j = 0; j < g.n(); ++j) {
        const double x = g.x(j);
        const double lq = log_abs_sech(x * s, 0.5 * r.gamma);
        if (x >= 0.0) {
            const double e = std::exp(0.5 * x * s + lq);
            out.phi1[j] = e * (1.0 + r.r11[j]);
            out.phi2[j] = e * (std::exp(-x * s) + r.r21[j]);
        } else {
            const double e = std::exp(-0.5 * x * s + lq);
            out.phi1[j] = e * (std::exp(x * s) + r.r12[j]);
            out.phi2[j] = e * (1.0 + r.r22[j]);
        }
    }
    return out;
}

Mat2 expm_traceless(const Mat2& m) {
    const cplx mu2 = m.a11 * m.a11 + m.a12 * m.a21;
    cplx ch, sh;  // cosh(mu), sinh(mu)/mu
    if (std::abs(mu2) < 1e-8) {
        ch = 1.0 + mu2 / 2.0 + mu2 * mu2 / 24.0;
        sh = 1.0 + mu2 / 6.0 + mu2 * mu2 / 120.0;
    } else {
        const cplx mu = std::sqrt(mu2);
        ch = std::cosh(mu);
        sh = std::sinh(mu) / mu;
    }
    return {ch + sh * m.a11, sh * m.a12, sh * m.a21, ch + sh * m.a22};
}

LaxVector advance_lax_vector(const LaxVector& phi, const SpinorField& before, const SpinorField& after,
                             cplx lambda, double dt) {
    require_same_grid(phi.grid, before.grid, "advance_lax_vector");
    require_same_grid(phi.grid, after.grid, "advance_lax_vector");
    LaxVector out(phi.grid);
    for (int j = 0; j < phi.grid.n(); ++j) {
        Mat2 a = lax_A(0.5 * (before.u[j] + after.u[j]), 0.5 * (before.v[j] + after.v[j]), lambda);
        a = {dt * a.a11, dt * a.a12, dt * a.a21, dt * a.a22};
        const Mat2 e = expm_traceless(a);
        out.phi1[j] = e.a11 * phi.phi1[j] + e.a12 * phi.phi2[j];
        out.phi2[j] = e.a21 * phi.phi1[j] + e.a22 * phi.phi2[j];
    }
    return out;
}

double zero_curvature_residual(const SpaceTimeField& f, cplx lambda, double t, const Grid& grid, double dt) {
    const SpinorField fm = sample(f, t - dt, grid), f0 = sample(f, t, grid), fp = sample(f, t + dt, grid);
    const LaxOperatorSample Lm = assemble_L(fm, lambda), Lp = assemble_L(fp, lambda);
    const LaxOperatorSample L0 = assemble_L(f0, lambda), A0 = assemble_A(f0, lambda);
    const CArray dA[4] = {derivative(grid, A0.a11), derivative(grid, A0.a12), derivative(grid, A0.a21),
                          derivative(grid, A0.a22)};
    double sum = 0.0;
    for (int j = 0; j < grid.n(); ++j) {
        const Mat2 A = A0.at(j), L = L0.at(j);
        const Mat2 comm = A * L - L * A;
        const Mat2 Lt = {(Lp.a11[j] - Lm.a11[j]) / (2 * dt), (Lp.a12[j] - Lm.a12[j]) / (2 * dt),
                         (Lp.a21[j] - Lm.a21[j]) / (2 * dt), (Lp.a22[j] - Lm.a22[j]) / (2 * dt)};
        const Mat2 r = Mat2{dA[0][j], dA[1][j], dA[2][j], dA[3][j]} - Lt + comm;
        sum += quad_weight(grid, j) * (std::norm(r.a11) + std::norm(r.a12) + std::norm(r.a21) + std::norm(r.a22));
    }
    return std::sqrt(sum);
}

}  // namespace mtm
