#include "mtm/evolution.hpp"

#include <cmath>
#include <string>

namespace mtm {

EvolutionConfig default_config(const Grid& grid, double t_end, int stride) {
    EvolutionConfig cfg;
    cfg.dt = grid.dx();
    cfg.t_end = t_end;
    cfg.output_stride = stride;
    return cfg;
}

namespace {

inline void rhs(cplx u, cplx v, cplx& du, cplx& dv) {
    du = I * (v + u * std::norm(v));
    dv = I * (u + v * std::norm(u));
}

void validate(const SpinorField& f, const EvolutionConfig& cfg) {
    if (!f.grid.periodic()) throw ParameterError("evolution needs a periodic grid");
    if (std::abs(std::abs(cfg.dt) - f.grid.dx()) > 1e-12 * f.grid.dx())
        throw ParameterError("time step must equal the grid spacing (|dt| = dx)");
    if (cfg.nonlinear_substeps < 1 || cfg.max_fixed_point < 1)
        throw ParameterError("substep and iteration counts must be positive");
}

}  // namespace

void local_update(cplx& u, cplx& v, double tau, const EvolutionConfig& cfg) {
    const double h = tau / cfg.nonlinear_substeps;
    for (int sub = 0; sub < cfg.nonlinear_substeps; ++sub) {
        const cplx u0 = u, v0 = v;
        cplx du, dv;
        rhs(u0, v0, du, dv);
        cplx u1 = u0 + h * du, v1 = v0 + h * dv;  // explicit Euler predictor
        bool converged = false;
        for (int it = 0; it < cfg.max_fixed_point; ++it) {
            rhs(0.5 * (u0 + u1), 0.5 * (v0 + v1), du, dv);
            const cplx un = u0 + h * du, vn = v0 + h * dv;
            const double change = std::abs(un - u1) + std::abs(vn - v1);
            u1 = un;
            v1 = vn;
            if (change <= cfg.fixed_point_tol * (1.0 + std::abs(u1) + std::abs(v1))) {
                converged = true;
                break;
            }
        }
        if (!converged) {
            rhs(0.5 * (u0 + u1), 0.5 * (v0 + v1), du, dv);
            const double res = std::abs(u1 - u0 - h * du) + std::abs(v1 - v0 - h * dv);
            if (!(res <= cfg.accept_residual * (1.0 + std::abs(u1) + std::abs(v1))))
                throw StepError("implicit midpoint did not converge (residual " + std::to_string(res) +
                                "); time step too large for the field amplitude");
        }
        u = u1;
        v = v1;
    }
}

SpinorField step(const SpinorField& f, const EvolutionConfig& cfg) {
    validate(f, cfg);
    const int n = f.grid.n();
    const double half = 0.5 * cfg.dt;
    CArray u = f.u, v = f.v;
    for (int j = 0; j < n; ++j) local_update(u[j], v[j], half, cfg);
    SpinorField out(f.grid);
    // Forward in time u moves one cell right and v one cell left; backward reverses both.
    const int su = cfg.dt > 0 ? 1 : n - 1;
    const int sv = cfg.dt > 0 ? n - 1 : 1;
    for (int j = 0; j < n; ++j) {
        out.u[(j + su) % n] = u[j];
        out.v[(j + sv) % n] = v[j];
    }
    for (int j = 0; j < n; ++j) local_update(out.u[j], out.v[j], half, cfg);
    return out;
}

SpinorField evolve(const SpinorField& f0, const EvolutionConfig& cfg, const Observer& observer) {
    validate(f0, cfg);
    if (!(cfg.t_end > 0.0)) throw ParameterError("t_end must be positive");
    if (cfg.output_stride < 1) throw ParameterError("output stride must be positive");
    const long steps = std::lround(cfg.t_end / std::abs(cfg.dt));
    SpinorField f = f0;
    if (observer) observer(0.0, f);
    for (long k = 1; k <= steps; ++k) {
        f = step(f, cfg);
        if (observer && (k % cfg.output_stride == 0 || k == steps)) observer(k * cfg.dt, f);
    }
    return f;
}

double charge(const SpinorField& f) { return l2_norm_sq(f); }

double ChargeMonitor::observe(const SpinorField& f) {
    const double q = charge(f);
    const double d = initial_ > 0.0 ? std::abs(q - initial_) / initial_ : std::abs(q);
    if (d > max_drift_) max_drift_ = d;
    return d;
}

}  // namespace mtm
