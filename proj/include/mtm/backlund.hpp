#pragma once

#include <vector>

#include "mtm/fields.hpp"
#include "mtm/lax.hpp"

namespace mtm {

/// Gamma = phi1/phi2 sampled on the grid; samples with |phi2| < 1e-300 are flagged invalid.
struct RiccatiField {
    Grid grid;
    CArray gamma_var;
    std::vector<bool> valid;
};

RiccatiField riccati_field(const LaxVector& phi);

struct RiccatiResidual {
    double residual = 0.0;  // L2 norm over the accepted samples
    int excluded = 0;       // samples dropped (boundary stencil or invalid)
};

/// Residual of the x-part Riccati equation for Gamma with potential (u, v).
/// Each sample is measured in the chordal metric (divided by 1 + |Gamma|^2) so that
/// Gamma and 1/conj(Gamma) are treated alike; derivatives are fourth-order centered
/// differences and the two samples nearest each end are excluded.
RiccatiResidual riccati_residual(const RiccatiField& g, const SpinorField& f, cplx lambda);

/// New potential generated from (u, v) and a Lax vector at lambda = delta e^{i gamma/2}.
SpinorField backlund_transform(const SpinorField& f, const LaxVector& phi, cplx lambda);

/// psi1 = conj(phi2)/|D|, psi2 = conj(phi1)/|D|, D = e^{i gamma/2}|phi1|^2 + e^{-i gamma/2}|phi2|^2.
LaxVector pushforward_eigenvector(const LaxVector& phi, double gamma);

/// Soliton neighbourhood -> zero neighbourhood with the found eigenvector.
SpinorField down_map(const SpinorField& f0, const EigenResult& res);

/// Zero neighbourhood -> soliton neighbourhood from Jost solutions at time t:
/// phi = e^{(a+i theta)/2} right + e^{-(a+i theta)/2} left, then the Backlund transform.
SpinorField up_map(const SpinorField& f_t, const JostPair& jost, cplx lambda, double a, double theta);

/// Orbit parameters (a, theta) whose up_map superposition is collinear with `psi`
/// at x = 0. `psi` is typically the pushed-forward eigenvector.
struct OrbitParameters {
    double a = 0.0;
    double theta = 0.0;
};

OrbitParameters orbit_parameters_from_vector(const LaxVector& psi, const JostPair& jost);

struct OrbitFit {
    double a = 0.0;
    double theta = 0.0;
    double distance = 0.0;  // ||U - target_u|| + ||V - target_v||
    int iterations = 0;
};

/// Gauss-Newton least squares for (a, theta) minimizing ||up_map(a, theta) - target||.
OrbitFit fit_up_map(const SpinorField& f_t, const JostPair& jost, cplx lambda, const SpinorField& target,
                    OrbitParameters start, int max_iterations = 20);

}  // namespace mtm
