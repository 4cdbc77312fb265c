#include "mtm/solitons.hpp"

#include <cmath>
#include <string>

namespace mtm {

SpectralParameter::SpectralParameter(cplx lam) : lambda(lam) {
    if (lam == cplx(0.0, 0.0) || !std::isfinite(lam.real()) || !std::isfinite(lam.imag()))
        throw ParameterError("spectral parameter must be finite and nonzero");
    delta = std::abs(lam);
    gamma = 2.0 * std::arg(lam);
    const double d2 = delta * delta, dm2 = 1.0 / d2;
    const double kk = 0.5 * (d2 + dm2);
    nu = (d2 - dm2) / (d2 + dm2);
    alpha = kk * std::sin(gamma);
    beta = kk * std::cos(gamma);
    const cplx l2 = lam * lam, lm2 = 1.0 / l2;
    k1 = 0.25 * I * (l2 - lm2);
    k2 = 0.25 * (l2 + lm2);
}

SpectralParameter SpectralParameter::from_polar(double delta, double gamma) {
    if (!(delta > 0.0)) throw ParameterError("delta must be positive");
    return SpectralParameter(std::polar(delta, 0.5 * gamma));
}

void SpectralParameter::require_soliton_range() const {
    if (!(gamma > 0.0 && gamma < kPi))
        throw ParameterError("gamma = " + std::to_string(gamma) + " outside (0, pi)");
}

cplx csech(cplx z) {
    // Factor out the decaying exponential so neither branch overflows.
    if (z.real() >= 0.0) {
        const cplx e = std::exp(-z);
        return 2.0 * e / (1.0 + e * e);
    }
    const cplx e = std::exp(z);
    return 2.0 * e / (1.0 + e * e);
}

SpinorField sample(const SpaceTimeField& f, double t, const Grid& grid) {
    SpinorField out(grid);
    for (int j = 0; j < grid.n(); ++j) {
        auto [u, v] = f(grid.x(j), t);
        out.u[j] = u;
        out.v[j] = v;
    }
    return out;
}

std::pair<cplx, cplx> soliton_point(const SpectralParameter& p, double x, double t) {
    const double s = std::sin(p.gamma);
    const double xi = p.alpha * (x + p.nu * t);
    const cplx phase = std::exp(-I * p.beta * (t + p.nu * x));
    const cplx u = I / p.delta * s * csech(cplx(xi, -0.5 * p.gamma)) * phase;
    const cplx v = -I * p.delta * s * csech(cplx(xi, 0.5 * p.gamma)) * phase;
    return {u, v};
}

SpaceTimeField soliton_evaluator(const SpectralParameter& p) {
    p.require_soliton_range();
    return [p](double x, double t) { return soliton_point(p, x, t); };
}

SpinorField soliton_field(const SpectralParameter& p, double t, const Grid& grid) {
    p.require_soliton_range();
    SpinorField out(grid);
    for (int j = 0; j < grid.n(); ++j) {
        auto [u, v] = soliton_point(p, grid.x(j), t);
        out.u[j] = u;
        out.v[j] = v;
    }
    return out;
}

std::pair<cplx, cplx> stationary_point(double gamma, double a, double theta, double x, double t) {
    const double s = std::sin(gamma);
    const cplx phase = std::exp(I * (theta - t * std::cos(gamma)));
    const double xi = (x + a) * s;
    return {I * s * csech(cplx(xi, -0.5 * gamma)) * phase, -I * s * csech(cplx(xi, 0.5 * gamma)) * phase};
}

SpinorField stationary_soliton(double gamma, double a, double theta, double t, const Grid& grid) {
    if (!(gamma > 0.0 && gamma < kPi)) throw ParameterError("gamma outside (0, pi)");
    SpinorField out(grid);
    for (int j = 0; j < grid.n(); ++j) {
        auto [u, v] = stationary_point(gamma, a, theta, grid.x(j), t);
        out.u[j] = u;
        out.v[j] = v;
    }
    return out;
}

SpaceTimeField lorentz_boost(SpaceTimeField f, double delta) {
    if (!(delta > 0.0) || !std::isfinite(delta)) throw ParameterError("boost factor must be positive");
    const double d2 = delta * delta;
    const double c = 0.5 * (d2 + 1.0 / d2);
    const double s = 0.5 * (d2 - 1.0 / d2);
    return [f = std::move(f), delta, c, s](double x, double t) {
        auto [u, v] = f(c * x + s * t, c * t + s * x);
        return std::pair<cplx, cplx>{u / delta, delta * v};
    };
}

LaxVector free_lax_vector(const SpectralParameter& p, double t, const Grid& grid) {
    LaxVector out(grid);
    for (int j = 0; j < grid.n(); ++j) {
        const cplx e = p.k1 * grid.x(j) + I * p.k2 * t;
        out.phi1[j] = std::exp(e);
        out.phi2[j] = std::exp(-e);
    }
    return out;
}

double log_abs_sech(double r, double g) {
    const double ar = std::abs(r);
    const cplx e = std::exp(cplx(-2.0 * ar, r >= 0 ? 2.0 * g : -2.0 * g));
    return std::log(2.0) - ar - std::log(std::abs(1.0 + e));
}

LaxVector soliton_eigenvector(double gamma, double t, const Grid& grid) {
    if (!(gamma > 0.0 && gamma < kPi)) throw ParameterError("gamma outside (0, pi)");
    const double s = std::sin(gamma);
    const cplx ph = std::exp(0.5 * I * t * std::cos(gamma));
    LaxVector out(grid);
    for (int j = 0; j < grid.n(); ++j) {
        const double x = grid.x(j);
        const double lq = log_abs_sech(x * s, 0.5 * gamma);
        out.phi1[j] = std::exp(0.5 * x * s + lq) * ph;
        out.phi2[j] = std::exp(-0.5 * x * s + lq) / ph;
    }
    return out;
}

}  // namespace mtm
