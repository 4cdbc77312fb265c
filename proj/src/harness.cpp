#include "mtm/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>

namespace mtm {

namespace {

constexpr double kGolden = 0.6180339887498949;

template <class F>
double golden_section(F f, double lo, double hi, double tol) {
    double a = lo, b = hi;
    double c = b - kGolden * (b - a), d = a + kGolden * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kGolden * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kGolden * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

// Sufficient statistics of ||u - e^{i th} Su|| + ||v - e^{i th} Sv|| at a fixed shift.
struct Overlap {
    double nu, nv, su, sv;
    cplx cu, cv;  // <Su, u>, <Sv, v>

    double value(double th) const {
        const cplx e = std::polar(1.0, -th);
        const double du = nu + su - 2.0 * std::real(e * cu);
        const double dv = nv + sv - 2.0 * std::real(e * cv);
        return std::sqrt(std::max(du, 0.0)) + std::sqrt(std::max(dv, 0.0));
    }

    // The combined correlation fixes theta exactly for the squared metric;
    // a short scalar search between arg(cu) and arg(cv) finishes it for the sum of norms.
    std::pair<double, double> best() const {
        const cplx c = cu + cv;
        const double th0 = std::abs(c) > 0.0 ? std::arg(c) : 0.0;
        double span = 0.0;
        if (std::abs(cu) > 0.0) span = std::max(span, std::abs(std::remainder(std::arg(cu) - th0, 2 * kPi)));
        if (std::abs(cv) > 0.0) span = std::max(span, std::abs(std::remainder(std::arg(cv) - th0, 2 * kPi)));
        if (span < 1e-15) return {value(th0), th0};
        const double th = golden_section([&](double x) { return value(x); }, th0 - span, th0 + span, 1e-13);
        const double v0 = value(th0), v1 = value(th);
        return v1 <= v0 ? std::pair{v1, th} : std::pair{v0, th0};
    }
};

}  // namespace

ModulatedDistance modulated_distance(const SpinorField& f, const SpectralParameter& p, double t,
                                     const DistanceOptions& opt) {
    p.require_soliton_range();
    const Grid& g = f.grid;
    const int n = g.n();
    const double dx = g.dx();
    const double half = opt.scan_half_width > 0.0 ? opt.scan_half_width : 0.25 * (g.x_max() - g.x_min());
    const int stride = std::max(1, opt.scan_stride);
    const int K = std::max(1, static_cast<int>(half / (stride * dx)));
    const int pad = K * stride;

    double nu = 0.0, nv = 0.0;
    for (int j = 0; j < n; ++j) {
        nu += quad_weight(g, j) * std::norm(f.u[j]);
        nv += quad_weight(g, j) * std::norm(f.v[j]);
    }

    // Shifts on the coarse lattice are whole numbers of cells, so one sampling of the
    // soliton on an extended grid serves every coarse shift.
    CArray eu(n + 2 * pad), ev(n + 2 * pad);
    for (int m = 0; m < n + 2 * pad; ++m) {
        auto [a, b] = soliton_point(p, g.x_min() + (m - pad) * dx, t);
        eu[m] = a;
        ev[m] = b;
    }
    auto overlap_grid = [&](int k) {
        Overlap o{nu, nv, 0.0, 0.0, 0.0, 0.0};
        const int off = pad + k * stride;
        for (int j = 0; j < n; ++j) {
            const double w = quad_weight(g, j);
            const cplx a = eu[j + off], b = ev[j + off];
            o.su += w * std::norm(a);
            o.sv += w * std::norm(b);
            o.cu += w * std::conj(a) * f.u[j];
            o.cv += w * std::conj(b) * f.v[j];
        }
        return o;
    };
    // Near the optimum the expanded form loses half the digits, so the refinement
    // measures the residual directly.
    auto direct_at = [&](double a) {
        Overlap o{nu, nv, 0.0, 0.0, 0.0, 0.0};
        CArray su(n), sv(n);
        for (int j = 0; j < n; ++j) {
            const double w = quad_weight(g, j);
            auto [pu, pv] = soliton_point(p, g.x(j) + a, t);
            su[j] = pu;
            sv[j] = pv;
            o.su += w * std::norm(pu);
            o.sv += w * std::norm(pv);
            o.cu += w * std::conj(pu) * f.u[j];
            o.cv += w * std::conj(pv) * f.v[j];
        }
        const double th0 = std::abs(o.cu + o.cv) > 0.0 ? std::arg(o.cu + o.cv) : 0.0;
        const double th1 = o.best().second;
        auto resid = [&](double th) {
            const cplx e = std::polar(1.0, th);
            double ru = 0.0, rv = 0.0;
            for (int j = 0; j < n; ++j) {
                const double w = quad_weight(g, j);
                ru += w * std::norm(f.u[j] - e * su[j]);
                rv += w * std::norm(f.v[j] - e * sv[j]);
            }
            return std::sqrt(ru) + std::sqrt(rv);
        };
        const double d0 = resid(th0), d1 = resid(th1);
        return d1 < d0 ? std::pair{d1, th1} : std::pair{d0, th0};
    };

    int kbest = 0;
    double dbest = std::numeric_limits<double>::infinity();
    for (int k = -K; k <= K; ++k) {
        const double d = overlap_grid(k).best().first;
        if (d < dbest) {
            dbest = d;
            kbest = k;
        }
    }
    const double step = stride * dx;
    const double lo = (kbest - 1) * step, hi = (kbest + 1) * step;
    const double a = golden_section([&](double s) { return direct_at(s).first; }, lo, hi, opt.a_tolerance);
    auto [d, th] = direct_at(a);
    ModulatedDistance out{d, a, std::remainder(th, 2 * kPi)};
    auto [dk, thk] = direct_at(kbest * step);
    if (dk < d) out = {dk, kbest * step, std::remainder(thk, 2 * kPi)};
    return out;
}

PerturbationShape parse_shape(const std::string& s) {
    if (s == "gaussian_bump") return PerturbationShape::GaussianBump;
    if (s == "random_fourier") return PerturbationShape::RandomFourier;
    throw ParameterError("unknown perturbation shape '" + s + "'");
}

Pipeline parse_pipeline(const std::string& s) {
    if (s == "direct") return Pipeline::Direct;
    if (s == "backlund") return Pipeline::Backlund;
    if (s == "both") return Pipeline::Both;
    throw ParameterError("unknown pipeline '" + s + "'");
}

std::string to_string(PerturbationShape s) {
    return s == PerturbationShape::GaussianBump ? "gaussian_bump" : "random_fourier";
}

std::string to_string(Pipeline p) {
    switch (p) {
        case Pipeline::Direct: return "direct";
        case Pipeline::Backlund: return "backlund";
        default: return "both";
    }
}

SpinorField perturbation_shape(const ExperimentConfig& cfg) {
    const Grid g = cfg.grid();
    SpinorField d(g);
    if (cfg.perturbation_shape == PerturbationShape::GaussianBump) {
        // Unit-width bumps with different centres, widths and phases in u and v.
        for (int j = 0; j < g.n(); ++j) {
            const double x = g.x(j);
            d.u[j] = cplx(1.0, 0.5) * std::exp(-0.5 * (x - 1.0) * (x - 1.0));
            d.v[j] = cplx(-0.3, 0.8) * std::exp(-0.5 * (x + 0.5) * (x + 0.5) / 1.44);
        }
        return d;
    }
    std::mt19937_64 rng(cfg.perturbation_seed);
    std::uniform_real_distribution<double> wave(0.2, 3.0);
    std::normal_distribution<double> amp(0.0, 1.0);
    constexpr int modes = 8;
    double ku[modes], kv[modes];
    cplx au[modes], av[modes];
    for (int m = 0; m < modes; ++m) {
        ku[m] = wave(rng);
        kv[m] = wave(rng);
        au[m] = cplx(amp(rng), amp(rng));
        av[m] = cplx(amp(rng), amp(rng));
    }
    for (int j = 0; j < g.n(); ++j) {
        const double x = g.x(j);
        const double env = std::exp(-x * x / 8.0);
        cplx su = 0.0, sv = 0.0;
        for (int m = 0; m < modes; ++m) {
            su += au[m] * std::exp(I * ku[m] * x);
            sv += av[m] * std::exp(I * kv[m] * x);
        }
        d.u[j] = env * su;
        d.v[j] = env * sv;
    }
    return d;
}

SpinorField make_perturbed_initial(const ExperimentConfig& cfg) {
    if (!(cfg.gamma0 > 0.0 && cfg.gamma0 < kPi)) throw ParameterError("gamma0 outside (0, pi)");
    if (!(cfg.epsilon >= 0.0)) throw ParameterError("epsilon must be nonnegative");
    const Grid g = cfg.grid();
    SpinorField s = soliton_field(SpectralParameter(cfg.lambda0()), 0.0, g);
    if (cfg.epsilon == 0.0) return s;
    const SpinorField d = perturbation_shape(cfg);
    return s + (cfg.epsilon / split_norm(d)) * d;
}

double ExperimentResult::max_direct_dist() const {
    double m = 0.0;
    for (const auto& r : direct) m = std::max(m, r.dist);
    return m;
}

double ExperimentResult::max_backlund_dist() const {
    double m = 0.0;
    for (const auto& r : backlund) m = std::max(m, r.dist);
    return m;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    ExperimentResult res;
    res.cfg = cfg;
    res.lambda0 = cfg.lambda0();
    const Grid g = cfg.grid();
    const SpinorField f0 = make_perturbed_initial(cfg);
    res.initial_distance = split_norm(f0 - soliton_field(SpectralParameter(res.lambda0), 0.0, g));
    res.eigen = find_eigenvalue(f0, res.lambda0);
    const cplx lam = res.eigen.lambda;
    const SpectralParameter P(lam);
    P.require_soliton_range();

    const bool want_direct = cfg.pipeline != Pipeline::Backlund;
    const bool want_back = cfg.pipeline != Pipeline::Direct;
    const bool want_both = cfg.pipeline == Pipeline::Both;

    const EvolutionConfig ecfg = default_config(g, cfg.t_end);
    if (!(cfg.t_end > 0.0)) throw ParameterError("t_end must be positive");
    const long steps = std::lround(cfg.t_end / ecfg.dt);
    const long stride = std::max(1L, std::lround(cfg.sample_interval / ecfg.dt));

    SpinorField f = f0, small, ref;
    std::optional<ChargeMonitor> direct_q, small_q;
    if (want_direct) direct_q.emplace(f);
    if (want_back) {
        small = down_map(f0, res.eigen);
        res.small_norm0 = std::sqrt(l2_norm_sq(small));
        small_q.emplace(small);
        const JostPair jp0 = solve_time_bvp(small, lam, 0.0);
        const LaxVector pushed = pushforward_eigenvector(res.eigen.eigenvector, P.gamma);
        res.fit = fit_up_map(small, jp0, lam, f0, orbit_parameters_from_vector(pushed, jp0));
    }
    if (want_both) ref = soliton_field(P, 0.0, g);

    for (long k = 0; k <= steps; ++k) {
        const bool sample = (k % stride == 0) || k == steps;
        const double t = k * ecfg.dt;
        if (sample) {
            ExperimentRecord rd{}, rb{};
            SpinorField U;
            if (want_direct) {
                const auto md = modulated_distance(f, P, t);
                rd = {t, charge(f), md.dist, md.a_star, md.theta_star, lam, std::numeric_limits<double>::quiet_NaN()};
                direct_q->observe(f);
            }
            if (want_back) {
                const JostPair jp = solve_time_bvp(small, lam, t);
                U = up_map(small, jp, lam, res.fit.a, res.fit.theta);
                const auto md = modulated_distance(U, P, t);
                rb = {t, charge(U), md.dist, md.a_star, md.theta_star, lam, std::sqrt(l2_norm_sq(small))};
                small_q->observe(small);
                res.backlund.push_back(rb);
                if (want_direct) rd.small_norm = rb.small_norm;
            }
            if (want_direct) res.direct.push_back(rd);
            if (want_both) {
                res.pipeline_gap.push_back(split_norm(U - f));
                res.scheme_error.push_back(split_norm(ref - soliton_field(P, t, g)) + res.fit.distance);
            }
        }
        if (k == steps) break;
        if (want_direct) f = step(f, ecfg);
        if (want_back) small = step(small, ecfg);
        if (want_both) ref = step(ref, ecfg);
    }
    if (direct_q) res.direct_charge_drift = direct_q->max_drift();
    if (small_q) res.small_charge_drift = small_q->max_drift();
    return res;
}

std::vector<ExperimentRecord> run_direct(const ExperimentConfig& cfg) {
    ExperimentConfig c = cfg;
    c.pipeline = Pipeline::Direct;
    return run_experiment(c).direct;
}

std::vector<ExperimentRecord> run_backlund_pipeline(const ExperimentConfig& cfg) {
    ExperimentConfig c = cfg;
    c.pipeline = Pipeline::Backlund;
    return run_experiment(c).backlund;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t m = x.size();
    if (m < 2 || y.size() != m) throw ParameterError("slope fit needs at least two points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

SweepSummary sweep(const ExperimentConfig& tmpl, const std::vector<double>& epsilons) {
    SweepSummary s;
    std::vector<double> eps, lerr, small, dist, consts;
    for (double e : epsilons) {
        SweepRow row;
        row.epsilon = e;
        try {
            ExperimentConfig c = tmpl;
            c.epsilon = e;
            ExperimentResult r = run_experiment(c);
            row.ok = true;
            row.lambda_error = std::abs(r.eigen.lambda - r.lambda0);
            row.small_norm0 = r.small_norm0;
            row.max_dist = c.pipeline == Pipeline::Backlund ? r.max_backlund_dist() : r.max_direct_dist();
            row.constant = e > 0.0 ? row.max_dist / e : 0.0;
            row.charge_drift = std::max(r.direct_charge_drift, r.small_charge_drift);
            for (std::size_t i = 0; i < r.pipeline_gap.size(); ++i)
                if (r.scheme_error[i] > 0.0)
                    row.max_gap_ratio = std::max(row.max_gap_ratio, r.pipeline_gap[i] / r.scheme_error[i]);
            if (e > 0.0) {
                eps.push_back(e);
                lerr.push_back(row.lambda_error);
                small.push_back(row.small_norm0);
                dist.push_back(row.max_dist);
                consts.push_back(row.constant);
            }
            s.runs.push_back(std::move(r));
        } catch (const std::exception& ex) {
            row.ok = false;
            row.error = ex.what();
        }
        s.rows.push_back(row);
    }
    if (eps.size() >= 2) {
        s.slope_lambda = loglog_slope(eps, lerr);
        if (tmpl.pipeline != Pipeline::Direct) s.slope_small = loglog_slope(eps, small);
        s.slope_dist = loglog_slope(eps, dist);
        s.constant_spread = *std::max_element(consts.begin(), consts.end()) /
                            *std::min_element(consts.begin(), consts.end());
    }
    return s;
}

namespace {

template <class W>
void write_atomic(const std::string& path, W writer) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp);
        if (!os) throw FormatError("cannot open " + tmp + " for writing");
        os << std::setprecision(17);
        writer(os);
        if (!os) throw FormatError("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace

void write_records_csv(const std::string& path, const std::vector<ExperimentRecord>& recs) {
    write_atomic(path, [&](std::ostream& os) {
        os << "t,charge,dist,a_star,theta_star,lambda_re,lambda_im,small_norm\n";
        for (const auto& r : recs)
            os << r.t << ',' << r.charge << ',' << r.dist << ',' << r.a_star << ',' << r.theta_star << ','
               << r.lambda.real() << ',' << r.lambda.imag() << ',' << r.small_norm << '\n';
    });
}

void write_summary_csv(const std::string& path, const SweepSummary& s) {
    write_atomic(path, [&](std::ostream& os) {
        os << "epsilon,status,lambda_error,small_norm0,max_dist,constant,charge_drift,max_gap_ratio\n";
        for (const auto& r : s.rows) {
            os << r.epsilon << ',' << (r.ok ? "ok" : "failed") << ',';
            if (r.ok)
                os << r.lambda_error << ',' << r.small_norm0 << ',' << r.max_dist << ',' << r.constant << ','
                   << r.charge_drift << ',' << r.max_gap_ratio;
            else
                os << ",,,,,";
            os << '\n';
        }
    });
}

}  // namespace mtm
