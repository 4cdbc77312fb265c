#pragma once

#include <functional>
#include <utility>

#include "mtm/fields.hpp"

namespace mtm {

/// Spectral parameter lambda = delta * exp(i gamma / 2) with the derived soliton constants.
struct SpectralParameter {
    cplx lambda{1.0, 0.0};
    double delta = 1.0;  // |lambda|
    double gamma = 0.0;  // 2 arg(lambda)
    double nu = 0.0;     // velocity
    double alpha = 0.0;  // inverse width
    double beta = 0.0;   // frequency
    cplx k1;             // (i/4)(lambda^2 - lambda^-2)
    cplx k2;             // (1/4)(lambda^2 + lambda^-2)

    SpectralParameter() = default;
    explicit SpectralParameter(cplx lam);

    static SpectralParameter from_polar(double delta, double gamma);

    /// Throws ParameterError unless gamma lies in (0, pi).
    void require_soliton_range() const;
};

/// Soliton orbit parameters: spectral parameter plus shift a and gauge phase theta.
struct SolitonParams {
    SpectralParameter spectral;
    double a = 0.0;
    double theta = 0.0;
};

/// sech(z) = 2/(e^z + e^-z), safe for large |Re z|.
cplx csech(cplx z);

/// log |sech(r - i g)| without forming cosh(r).
double log_abs_sech(double r, double g);

/// Closed-form (u, v) at a single space-time point.
using SpaceTimeField = std::function<std::pair<cplx, cplx>(double x, double t)>;

/// Sample a space-time evaluator on a grid at time t.
SpinorField sample(const SpaceTimeField& f, double t, const Grid& grid);

/// One-soliton solution for arbitrary lambda with gamma in (0, pi).
std::pair<cplx, cplx> soliton_point(const SpectralParameter& p, double x, double t);
SpaceTimeField soliton_evaluator(const SpectralParameter& p);
SpinorField soliton_field(const SpectralParameter& p, double t, const Grid& grid);

/// exp(i theta - i t cos gamma) times the |lambda| = 1 soliton at x + a.
std::pair<cplx, cplx> stationary_point(double gamma, double a, double theta, double x, double t);
SpinorField stationary_soliton(double gamma, double a, double theta, double t, const Grid& grid);

/// Lorentz boost with rapidity factor delta > 0:
/// (u', v')(x, t) = (u / delta, delta v)(c x + s t, c t + s x),
/// c = (delta^2 + delta^-2)/2, s = (delta^2 - delta^-2)/2.
SpaceTimeField lorentz_boost(SpaceTimeField f, double delta);

/// Lax vector of the zero background: (e^{k1 x + i k2 t}, e^{-k1 x - i k2 t}).
LaxVector free_lax_vector(const SpectralParameter& p, double t, const Grid& grid);

/// Decaying Lax eigenvector of the |lambda| = 1 soliton.
LaxVector soliton_eigenvector(double gamma, double t, const Grid& grid);

}  // namespace mtm
