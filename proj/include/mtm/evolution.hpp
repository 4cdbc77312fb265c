#pragma once

#include <functional>

#include "mtm/fields.hpp"

namespace mtm {

/// Time stepping parameters. The scheme transports exactly along characteristics,
/// so |dt| must equal the grid spacing; a negative dt runs the flow backwards.
struct EvolutionConfig {
    double dt = 0.0;
    double t_end = 1.0;
    int output_stride = 1;
    int nonlinear_substeps = 1;  // implicit midpoint substeps per half local update
    int max_fixed_point = 8;
    double fixed_point_tol = 1e-14;
    /// A local solve that has not met fixed_point_tol after max_fixed_point sweeps is
    /// still accepted when its midpoint residual is below this bound.
    double accept_residual = 1e-10;
};

/// Config with dt = grid.dx().
EvolutionConfig default_config(const Grid& grid, double t_end, int stride = 1);

/// One Strang step: half local update, exact shift (u right, v left), half local update.
SpinorField step(const SpinorField& f, const EvolutionConfig& cfg);

/// Local update z' = i (v + u|v|^2, u + v|u|^2) over time tau by implicit midpoint, in place.
void local_update(cplx& u, cplx& v, double tau, const EvolutionConfig& cfg);

using Observer = std::function<void(double t, const SpinorField& f)>;

/// Repeated steps up to t_end (rounded to a whole number of steps).
/// The observer sees t = 0, every output_stride steps, and the final state.
SpinorField evolve(const SpinorField& f0, const EvolutionConfig& cfg, const Observer& observer = {});

/// Conserved charge ||u||^2 + ||v||^2.
double charge(const SpinorField& f);

/// Charge bookkeeping against the initial value.
class ChargeMonitor {
public:
    explicit ChargeMonitor(const SpinorField& f0) : initial_(charge(f0)) {}
    double initial() const { return initial_; }
    /// Relative drift |Q(f) - Q0| / Q0 (absolute when Q0 = 0); updates the running maximum.
    double observe(const SpinorField& f);
    double max_drift() const { return max_drift_; }

private:
    double initial_;
    double max_drift_ = 0.0;
};

}  // namespace mtm
