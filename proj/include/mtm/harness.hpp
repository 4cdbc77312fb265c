#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mtm/backlund.hpp"
#include "mtm/evolution.hpp"
#include "mtm/fields.hpp"
#include "mtm/lax.hpp"
#include "mtm/solitons.hpp"

namespace mtm {

/// Result of the infimum over the soliton orbit.
/// Convention: f is closest to e^{i theta_star} S(x + a_star, t), S the lambda-soliton.
struct ModulatedDistance {
    double dist = 0.0;
    double a_star = 0.0;
    double theta_star = 0.0;
};

struct DistanceOptions {
    double scan_half_width = 0.0;  // 0: a quarter of the domain length
    int scan_stride = 8;           // coarse scan step in grid cells
    double a_tolerance = 1e-9;  // golden-section bracket width on the shift
};

/// inf over (a, theta) of ||u - e^{i theta} S_u(. + a, t)|| + ||v - e^{i theta} S_v(. + a, t)||.
ModulatedDistance modulated_distance(const SpinorField& f, const SpectralParameter& p, double t,
                                     const DistanceOptions& opt = {});

enum class PerturbationShape { GaussianBump, RandomFourier };
enum class Pipeline { Direct, Backlund, Both };

PerturbationShape parse_shape(const std::string& s);
Pipeline parse_pipeline(const std::string& s);
std::string to_string(PerturbationShape s);
std::string to_string(Pipeline p);

struct ExperimentConfig {
    double gamma0 = kPi / 2;
    double epsilon = 0.01;
    std::uint64_t perturbation_seed = 1;
    PerturbationShape perturbation_shape = PerturbationShape::GaussianBump;
    double half_width = 60.0;
    int n = 8192;
    double t_end = 20.0;
    double sample_interval = 1.0;  // rounded to a whole number of steps
    Pipeline pipeline = Pipeline::Both;

    Grid grid() const { return Grid::symmetric(half_width, n, true); }
    cplx lambda0() const { return std::polar(1.0, 0.5 * gamma0); }
};

/// Perturbation shape before scaling. The Gaussian bump is fixed; the random
/// Fourier shape is deterministic in the seed.
SpinorField perturbation_shape(const ExperimentConfig& cfg);

/// Soliton at lambda0 plus a perturbation with ||du|| + ||dv|| = epsilon.
SpinorField make_perturbed_initial(const ExperimentConfig& cfg);

struct ExperimentRecord {
    double t = 0.0;
    double charge = 0.0;
    double dist = 0.0;
    double a_star = 0.0;
    double theta_star = 0.0;
    cplx lambda;
    double small_norm = 0.0;  // sqrt(||p||^2 + ||q||^2), conserved; NaN when only the direct pipeline runs
};

struct ExperimentResult {
    ExperimentConfig cfg;
    cplx lambda0;
    EigenResult eigen;
    double initial_distance = 0.0;  // ||u0 - u_lambda0|| + ||v0 - v_lambda0||
    std::vector<ExperimentRecord> direct;
    std::vector<ExperimentRecord> backlund;
    double direct_charge_drift = 0.0;  // max relative
    double small_charge_drift = 0.0;   // max relative
    double small_norm0 = 0.0;
    OrbitFit fit;  // (a, theta) for the reconstruction, fitted at t = 0
    /// Filled when both pipelines run: L2 gap between them, and the reference
    /// numerical error (evolution error of the exact lambda-soliton plus the
    /// reconstruction residual at t = 0).
    std::vector<double> pipeline_gap;
    std::vector<double> scheme_error;

    double max_direct_dist() const;
    double max_backlund_dist() const;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);
std::vector<ExperimentRecord> run_direct(const ExperimentConfig& cfg);
std::vector<ExperimentRecord> run_backlund_pipeline(const ExperimentConfig& cfg);

struct SweepRow {
    double epsilon = 0.0;
    bool ok = false;
    std::string error;
    double lambda_error = 0.0;  // |lambda - lambda0|
    double small_norm0 = 0.0;
    double max_dist = 0.0;
    double constant = 0.0;  // max_dist / epsilon
    double charge_drift = 0.0;
    double max_gap_ratio = 0.0;  // max over samples of gap / scheme error
};

struct SweepSummary {
    std::vector<SweepRow> rows;
    std::optional<double> slope_lambda;
    std::optional<double> slope_small;
    std::optional<double> slope_dist;
    std::optional<double> constant_spread;  // max C / min C
    std::vector<ExperimentResult> runs;
};

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

SweepSummary sweep(const ExperimentConfig& tmpl, const std::vector<double>& epsilons);

void write_records_csv(const std::string& path, const std::vector<ExperimentRecord>& recs);
void write_summary_csv(const std::string& path, const SweepSummary& s);

}  // namespace mtm
