#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "mtm/backlund.hpp"
#include "mtm/evolution.hpp"
#include "mtm/harness.hpp"
#include "mtm/lax.hpp"
#include "mtm/solitons.hpp"
#include "oracles.hpp"

using namespace mtm;
using oracle::pi;

namespace {

const cplx i1(0.0, 1.0);

Grid std_grid() { return Grid::symmetric(30.0, 4096); }

double collinearity_defect(const LaxVector& a, const LaxVector& b) {
    const cplx c = inner_product(a, b) / inner_product(a, a);
    return std::sqrt(l2_norm_sq(b - c * a) / l2_norm_sq(b));
}

// Transform of the zero field by the free vector at time t.
SpinorField dressed_zero(cplx lam, double t, const Grid& g) {
    return backlund_transform(SpinorField(g), free_lax_vector(SpectralParameter(lam), t, g), lam);
}

// MTM residual norm from three time levels t - h/2, t, t + h/2 on one grid, centered in space.
double mtm_residual(const SpinorField& before, const SpinorField& now, const SpinorField& after) {
    const Grid& g = now.grid;
    const double h = g.dx();
    double s = 0.0;
    for (int j = 1; j + 1 < g.n(); ++j) {
        const cplx u = now.u[j], v = now.v[j];
        const cplx ut = (after.u[j] - before.u[j]) / h, vt = (after.v[j] - before.v[j]) / h;
        const cplx ux = (now.u[j + 1] - now.u[j - 1]) / (2 * h), vx = (now.v[j + 1] - now.v[j - 1]) / (2 * h);
        s += std::norm(i1 * (ut + ux) + v + u * std::norm(v)) + std::norm(i1 * (vt - vx) + u + v * std::norm(u));
    }
    return std::sqrt(s * h);
}

SpinorField perturbed(double eps) {
    ExperimentConfig cfg;
    cfg.epsilon = eps;
    return make_perturbed_initial(cfg);
}

}  // namespace

TEST_CASE("zero background dresses into the soliton") {
    const Grid g = std_grid();
    const cplx lam = std::polar(1.0, pi / 4);
    const SpinorField s = dressed_zero(lam, 0.0, g);
    const int j0 = g.nearest(0.0);
    CHECK(std::abs(s.u[j0] - i1 * std::sqrt(2.0)) < 1e-12);

    for (cplx l : {lam, std::polar(1.0, 0.6), std::polar(1.3, 0.9), std::polar(0.8, 0.4)}) {
        for (double t : {0.0, 1.5}) {
            const SpinorField d = dressed_zero(l, t, g);
            const SpinorField ref = oracle::sample(g, [&](double x) { return oracle::soliton(l, x, t); });
            CHECK(oracle::max_abs_diff(d.u, ref.u) < 1e-10);
            CHECK(oracle::max_abs_diff(d.v, ref.v) < 1e-10);
        }
    }
}

TEST_CASE("soliton is undressed to zero") {
    const Grid g = std_grid();
    for (double gam : {pi / 2, pi / 4, 2.0}) {
        const SpinorField s = stationary_soliton(gam, 0.0, 0.0, 0.0, g);
        const SpinorField z = backlund_transform(s, soliton_eigenvector(gam, 0.0, g), std::polar(1.0, gam / 2));
        CHECK(std::sqrt(l2_norm_sq(z)) < 1e-6);
    }
}

TEST_CASE("charge of the dressed zero field is 4 gamma") {
    const Grid g = std_grid();
    for (double gam : {0.7, pi / 2, 2.4})
        CHECK(std::abs(charge(dressed_zero(std::polar(1.0, gam / 2), 0.0, g)) - 4 * gam) < 1e-6);
}

TEST_CASE("prefactors have unit modulus where the correction term vanishes") {
    const Grid g = Grid::symmetric(10.0, 256);
    const SpinorField f = oracle::random_smooth(g, 3);
    const cplx lam = std::polar(1.2, 0.5);
    LaxVector phi(g);
    std::mt19937 rng(2);
    std::normal_distribution<double> n01;
    for (int j = 0; j < g.n(); ++j) {
        // One component zero, the other random.
        const cplx r(n01(rng), n01(rng));
        if (j % 2) phi.phi1[j] = r;
        else phi.phi2[j] = r;
    }
    const SpinorField b = backlund_transform(f, phi, lam);
    for (int j = 0; j < g.n(); ++j) {
        CHECK(std::abs(std::abs(b.u[j]) - std::abs(f.u[j])) < 1e-12);
        CHECK(std::abs(std::abs(b.v[j]) - std::abs(f.v[j])) < 1e-12);
    }
}

TEST_CASE("Backlund output solves the MTM system to second order") {
    const cplx lam = std::polar(1.1, 0.6);
    auto residual = [&](int n) {
        const Grid g = Grid::symmetric(25.0, n);
        const double h = g.dx(), t = 0.4;
        return mtm_residual(dressed_zero(lam, t - 0.5 * h, g), dressed_zero(lam, t, g), dressed_zero(lam, t + 0.5 * h, g));
    };
    const double r1 = residual(1024), r2 = residual(2048);
    CHECK(std::log2(r1 / r2) == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("push-forward of the eigenvector") {
    const Grid g = Grid::symmetric(5.0, 16);
    LaxVector one(g);
    for (int j = 0; j < g.n(); ++j) one.phi1[j] = one.phi2[j] = 1.0;
    const LaxVector p = pushforward_eigenvector(one, pi / 2);
    CHECK(std::abs(p.phi1[3] - 1.0 / std::sqrt(2.0)) < 1e-15);
    CHECK(std::abs(p.phi2[3] - 1.0 / std::sqrt(2.0)) < 1e-15);

    const Grid sg = std_grid();
    for (double gam : {pi / 2, 1.0}) {
        const cplx lam = std::polar(1.0, gam / 2);
        const LaxVector free = free_lax_vector(SpectralParameter(lam), 0.0, sg);
        const LaxVector psi = pushforward_eigenvector(free, gam);
        CHECK(collinearity_defect(soliton_eigenvector(gam, 0.0, sg), psi) < 1e-8);
    }

    // Residual against the new potential, on a perturbed soliton.
    const SpinorField f = perturbed(0.05);
    const EigenResult r = find_eigenvalue(f, std::polar(1.0, pi / 4));
    const double gam = 2 * std::arg(r.lambda);
    const SpinorField nf = backlund_transform(f, r.eigenvector, r.lambda);
    const LaxVector psi = pushforward_eigenvector(r.eigenvector, gam);
    // psi grows like 1/|phi| in the tails, so the residual is taken relative to its norm.
    CHECK(lax_residual(nf, psi, r.lambda, 2) / std::sqrt(l2_norm_sq(psi)) < 1e-4);

    // Norm identity.
    const LaxVector phi = LaxVector(f.grid, f.u, f.v);
    const LaxVector q = pushforward_eigenvector(phi, 1.3);
    for (int j = 0; j < f.grid.n(); j += 7) {
        const double n2 = std::norm(phi.phi1[j]) + std::norm(phi.phi2[j]);
        if (n2 < 1e-200) continue;
        const double D = std::abs(std::exp(0.65 * i1) * std::norm(phi.phi1[j]) + std::exp(-0.65 * i1) * std::norm(phi.phi2[j]));
        CHECK(std::abs(std::norm(q.phi1[j]) + std::norm(q.phi2[j]) - n2 / (D * D)) < 1e-12 * (n2 / (D * D)) + 1e-300);
    }
}

TEST_CASE("Riccati residual") {
    const Grid g = std_grid();
    const cplx lam = std::polar(1.0, pi / 4);
    const LaxVector free = free_lax_vector(SpectralParameter(lam), 0.0, g);
    const RiccatiResidual r0 = riccati_residual(riccati_field(free), SpinorField(g), lam);
    CHECK(r0.residual < 1e-6);
    CHECK(r0.excluded >= 4);

    // Invariance: Gamma' = 1/conj(Gamma) with the transformed potential. Gamma' is the
    // ratio of the pushed-forward components, which also flags samples where Gamma = 0.
    auto invariance = [&](const SpinorField& f, const LaxVector& phi, cplx l) {
        const RiccatiField G = riccati_field(phi);
        const RiccatiField Gp = riccati_field(pushforward_eigenvector(phi, 2 * std::arg(l)));
        for (int j = 0; j < g.n(); j += 53)
            if (G.valid[j] && Gp.valid[j] && std::abs(G.gamma_var[j]) > 1e-100)
                CHECK(std::abs(Gp.gamma_var[j] * std::conj(G.gamma_var[j]) - 1.0) < 1e-12);
        return riccati_residual(Gp, backlund_transform(f, phi, l), l).residual;
    };
    CHECK(invariance(SpinorField(g), free, lam) < 1e-4);
    const SpinorField f = perturbed(0.05);
    const EigenResult er = find_eigenvalue(f, lam);
    CHECK(invariance(f, er.eigenvector, er.lambda) < 1e-4);
    const SpinorField small = cplx(0.1) * oracle::random_smooth(g, 12);
    const JostPair jp = solve_jost(small, std::polar(1.2, 0.5));
    CHECK(invariance(small, jp.right, jp.lambda) < 1e-4);

    // A generic field is not a solution.
    RiccatiField rnd{g, CArray(g.n()), std::vector<bool>(g.n(), true)};
    const SpinorField z = oracle::random_smooth(g, 13);
    for (int j = 0; j < g.n(); ++j) rnd.gamma_var[j] = z.u[j] + 0.5;
    CHECK(riccati_residual(rnd, stationary_soliton(pi / 2, 0.0, 0.0, 0.0, g), lam).residual > 0.1);
}

TEST_CASE("Backlund errors") {
    const Grid g = Grid::symmetric(5.0, 16);
    LaxVector phi(g);
    for (int j = 0; j < g.n(); ++j) phi.phi1[j] = 1.0;
    phi.phi1[5] = 0.0;
    CHECK_THROWS_AS(backlund_transform(SpinorField(g), phi, std::polar(1.0, pi / 4)), DegenerateVector);
    CHECK_THROWS_AS(pushforward_eigenvector(phi, pi / 2), DegenerateVector);
    phi.phi1[5] = 1.0;
    CHECK_THROWS_AS(backlund_transform(SpinorField(g), phi, cplx(1.0, 0.0)), ParameterError);
    CHECK_THROWS_AS(backlund_transform(SpinorField(g), phi, std::polar(1.0, -0.3)), ParameterError);
    CHECK_THROWS_AS(backlund_transform(SpinorField(g), phi, 0.0), ParameterError);
}

TEST_CASE("down map") {
    const Grid g = std_grid();
    const SpinorField s = stationary_soliton(pi / 2, 0.0, 0.0, 0.0, g);
    CHECK(std::sqrt(l2_norm_sq(down_map(s, find_eigenvalue(s, std::polar(1.0, pi / 4))))) < 1e-6);

    std::vector<double> eps{1e-3, 1e-2, 1e-1}, sizes;
    for (double e : eps) {
        const SpinorField f = perturbed(e);
        sizes.push_back(split_norm(down_map(f, find_eigenvalue(f, std::polar(1.0, pi / 4)))));
    }
    const double sl = oracle::slope(eps, sizes);
    MESSAGE("down-map sizes " << sizes[0] << " " << sizes[1] << " " << sizes[2] << ", slope " << sl);
    CHECK(sl == doctest::Approx(1.0).epsilon(0.15));
    CHECK(sizes[2] / eps[2] < 10.0);

    const SpinorField f = perturbed(0.05);
    const SpinorField p0 = down_map(f, find_eigenvalue(f, std::polar(1.0, pi / 4)));
    const double q0 = charge(p0);
    double drift = 0.0;
    evolve(p0, default_config(g, 5.0, 16), [&](double, const SpinorField& x) { drift = std::max(drift, std::abs(charge(x) - q0)); });
    CHECK(drift < 1e-6);
}

TEST_CASE("up map on the zero background reproduces the soliton orbit") {
    const Grid g = std_grid();
    for (double gam : {pi / 2, 1.1}) {
        const cplx lam = std::polar(1.0, gam / 2);
        for (double t : {0.0, 2.0}) {
            const JostPair jp = solve_time_bvp(SpinorField(g), lam, t);
            for (auto [a, th] : {std::pair{0.0, 0.0}, std::pair{1.0, pi / 3}, std::pair{-0.7, 2.0}}) {
                const SpinorField u = up_map(SpinorField(g), jp, lam, a, th);
                const SpinorField ref = oracle::sample(g, [&](double x) { return oracle::reconstruction_orbit(gam, a, th, x, t); });
                CHECK(oracle::max_abs_diff(u.u, ref.u) < 1e-10);
                CHECK(oracle::max_abs_diff(u.v, ref.v) < 1e-10);
            }
        }
    }
}

TEST_CASE("down then up recovers the initial field") {
    for (double e : {0.01, 0.05}) {
        const SpinorField f = perturbed(e);
        const EigenResult r = find_eigenvalue(f, std::polar(1.0, pi / 4));
        const SpinorField p0 = down_map(f, r);
        const JostPair jp = solve_time_bvp(p0, r.lambda, 0.0);
        const OrbitParameters start = orbit_parameters_from_vector(pushforward_eigenvector(r.eigenvector, 2 * std::arg(r.lambda)), jp);
        const OrbitFit fit = fit_up_map(p0, jp, r.lambda, f, start);
        const double smallness = split_norm(p0);
        MESSAGE("eps " << e << ": round-trip distance " << fit.distance << ", smallness " << smallness);
        CHECK(fit.distance <= 2.0 * smallness);
        const SpinorField back = up_map(p0, jp, r.lambda, fit.a, fit.theta);
        CHECK(split_norm(back - f) == doctest::Approx(fit.distance).epsilon(1e-9));
    }
}
