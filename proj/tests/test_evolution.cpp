#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>

#include "mtm/evolution.hpp"
#include "mtm/harness.hpp"
#include "mtm/solitons.hpp"
#include "oracles.hpp"

using namespace mtm;
using oracle::pi;

namespace {

const cplx i1(0.0, 1.0);

SpinorField rotated(const SpinorField& f, int k) {
    SpinorField out = f;
    std::rotate(out.u.begin(), out.u.begin() + k, out.u.end());
    std::rotate(out.v.begin(), out.v.begin() + k, out.v.end());
    return out;
}

// Evolves and also reports the time actually reached.
std::pair<SpinorField, double> run(const SpinorField& f0, const EvolutionConfig& cfg) {
    double t_last = 0.0;
    SpinorField f = evolve(f0, cfg, [&](double t, const SpinorField&) { t_last = t; });
    return {f, t_last};
}

SpinorField perturbed(double eps) {
    ExperimentConfig cfg;
    cfg.epsilon = eps;
    return make_perturbed_initial(cfg);
}

}  // namespace

TEST_CASE("zero field stays zero") {
    const Grid g = Grid::symmetric(30.0, 1024);
    const SpinorField f = evolve(SpinorField(g), default_config(g, 3.0));
    CHECK(charge(f) == 0.0);
    CHECK(charge(SpinorField(g)) == 0.0);
}

TEST_CASE("uniform state rotates at frequency 1 + c0^2") {
    const Grid g(0.0, 0.008, 8);  // dx = 1e-3
    SpinorField f(g);
    for (int j = 0; j < g.n(); ++j) f.u[j] = f.v[j] = 0.5;
    const auto [out, t] = run(f, default_config(g, 1.0));
    CHECK(t == doctest::Approx(1.0).epsilon(1e-9));
    const cplx exact = 0.5 * std::exp(1.25 * i1 * t);
    for (int j = 0; j < g.n(); ++j) {
        CHECK(std::abs(out.u[j] - exact) < 1e-6);
        CHECK(std::abs(out.v[j] - exact) < 1e-6);
    }
}

TEST_CASE("second-order convergence on the stationary soliton") {
    std::vector<double> dts, errs;
    for (int n : {1024, 2048, 4096}) {
        const Grid g = Grid::symmetric(30.0, n);
        const auto [out, t] = run(stationary_soliton(pi / 2, 0.0, 0.0, 0.0, g), default_config(g, 1.0));
        const SpinorField ref = oracle::sample(g, [&, t = t](double x) { return oracle::stationary(pi / 2, 0.0, 0.0, x, t); });
        dts.push_back(g.dx());
        errs.push_back(oracle::dist(g, out.u, ref.u) + oracle::dist(g, out.v, ref.v));
    }
    const double order = oracle::slope(dts, errs);
    MESSAGE("errors " << errs[0] << " " << errs[1] << " " << errs[2] << ", order " << order);
    CHECK(order >= 1.8);
    CHECK(order <= 2.2);
}

TEST_CASE("charge is conserved by a single step and pointwise by the local update") {
    const Grid g = Grid::symmetric(30.0, 4096);
    const SpinorField f = cplx(0.8) * oracle::random_smooth(g, 17);
    const EvolutionConfig cfg = default_config(g, 1.0);
    CHECK(std::abs(charge(step(f, cfg)) - charge(f)) < 1e-12 * charge(f));

    for (int j = 0; j < g.n(); j += 13) {
        cplx u = f.u[j], v = f.v[j];
        const double before = std::norm(u) + std::norm(v);
        local_update(u, v, 0.5 * cfg.dt, cfg);
        CHECK(std::abs(std::norm(u) + std::norm(v) - before) < 1e-12);
    }
}

TEST_CASE("charge drift on a perturbed soliton over t in [0, 20]") {
    const SpinorField f0 = perturbed(0.01);
    ChargeMonitor mon(f0);
    evolve(f0, default_config(f0.grid, 20.0), [&](double, const SpinorField& f) { mon.observe(f); });
    MESSAGE("relative drift " << mon.max_drift());
    CHECK(mon.max_drift() < 1e-6);
}

TEST_CASE("time reversal") {
    const SpinorField f0 = perturbed(0.05);
    EvolutionConfig fwd = default_config(f0.grid, 5.0);
    const SpinorField f5 = evolve(f0, fwd);
    EvolutionConfig back = fwd;
    back.dt = -fwd.dt;
    const SpinorField b = evolve(f5, back);
    const double err = std::sqrt(l2_norm_sq(b - f0));
    MESSAGE("round-trip error " << err);
    CHECK(err < 1e-5);
}

TEST_CASE("translation and gauge equivariance") {
    const Grid g = Grid::symmetric(20.0, 1024);
    const SpinorField f = oracle::random_smooth(g, 23);
    const EvolutionConfig cfg = default_config(g, 2.0);
    const SpinorField base = evolve(f, cfg);

    const SpinorField shifted = evolve(rotated(f, 37), cfg);
    const SpinorField expect = rotated(base, 37);
    CHECK(oracle::max_abs_diff(shifted.u, expect.u) < 1e-13);
    CHECK(oracle::max_abs_diff(shifted.v, expect.v) < 1e-13);

    const cplx ph = std::polar(1.0, 0.9);
    const SpinorField phased = evolve(ph * f, cfg);
    const SpinorField pexpect = ph * base;
    CHECK(oracle::max_abs_diff(phased.u, pexpect.u) < 1e-12);
    CHECK(oracle::max_abs_diff(phased.v, pexpect.v) < 1e-12);
}

TEST_CASE("small data stays bounded") {
    const Grid g = Grid::symmetric(60.0, 8192);
    SpinorField p = oracle::random_smooth(g, 41);
    p = cplx(0.05 / std::sqrt(l2_norm_sq(p))) * p;
    auto sup = [](const SpinorField& f) { return std::max(sup_norm(f.u), sup_norm(f.v)); };
    const double s0 = sup(p);
    double worst = 0.0;
    evolve(p, default_config(g, 20.0, 8), [&](double, const SpinorField& f) { worst = std::max(worst, sup(f)); });
    MESSAGE("sup-norm ratio " << worst / s0);
    CHECK(worst <= 2.0 * s0);
}

TEST_CASE("observer schedule and final time") {
    const Grid g = Grid::symmetric(10.0, 256);
    const EvolutionConfig cfg = default_config(g, 1.0, 10);
    std::vector<double> ts;
    evolve(stationary_soliton(1.0, 0.0, 0.0, 0.0, g), cfg, [&](double t, const SpinorField&) { ts.push_back(t); });
    const long steps = std::lround(1.0 / cfg.dt);
    CHECK(ts.front() == 0.0);
    CHECK(std::abs(ts.back() - 1.0) <= cfg.dt / 2);
    CHECK(ts.size() == static_cast<std::size_t>(steps / 10 + 1 + (steps % 10 ? 1 : 0)));
    for (std::size_t k = 1; k + 1 < ts.size(); ++k) CHECK(ts[k] == doctest::Approx(10 * k * cfg.dt));
}

TEST_CASE("charge monitor") {
    const Grid g = Grid::symmetric(10.0, 256);
    const SpinorField f = stationary_soliton(1.0, 0.0, 0.0, 0.0, g);
    ChargeMonitor m(f);
    CHECK(m.initial() == doctest::Approx(4.0).epsilon(1e-6));
    CHECK(m.observe(f) == 0.0);
    CHECK(m.observe(cplx(std::sqrt(1.1)) * f) == doctest::Approx(0.1));
    CHECK(m.observe(f) == 0.0);
    CHECK(m.max_drift() == doctest::Approx(0.1));
    ChargeMonitor z{SpinorField(g)};
    CHECK(z.observe(f) == doctest::Approx(charge(f)));
}

TEST_CASE("evolution errors") {
    const Grid g = Grid::symmetric(10.0, 256);
    const SpinorField f = stationary_soliton(1.0, 0.0, 0.0, 0.0, g);
    EvolutionConfig cfg = default_config(g, 1.0);
    cfg.dt *= 0.5;
    CHECK_THROWS_AS(step(f, cfg), ParameterError);
    cfg = default_config(g, 1.0);
    cfg.t_end = 0.0;
    CHECK_THROWS_AS(evolve(f, cfg), ParameterError);
    cfg = default_config(g, 1.0);
    cfg.output_stride = 0;
    CHECK_THROWS_AS(evolve(f, cfg), ParameterError);
    CHECK_THROWS_AS(step(SpinorField(Grid::symmetric(10.0, 256, false)), default_config(g, 1.0)), ParameterError);
    CHECK_THROWS_AS(step(cplx(1e3) * f, default_config(g, 1.0)), StepError);
}
