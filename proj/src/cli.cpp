#include "mtm/cli.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "mtm/backlund.hpp"
#include "mtm/evolution.hpp"
#include "mtm/fields.hpp"
#include "mtm/harness.hpp"
#include "mtm/lax.hpp"
#include "mtm/solitons.hpp"

#ifndef MTM_VERSION
#define MTM_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace mtm::cli {

std::string default_out_dir() {
    const char* env = std::getenv("MTM_OUT_DIR");
    return (env && *env) ? std::string(env) : std::string(".");
}

std::string file_digest(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open " + path + " for hashing");
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[1 << 16];
    while (is) {
        is.read(buf, sizeof buf);
        if (is.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(is.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md, &len);
    EVP_MD_CTX_free(ctx);
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
    return hex;
}

std::string RunManifest::to_json() const {
    json j;
    j["subcommand"] = subcommand;
    j["parameters"] = parameters;
    j["tool_version"] = tool_version;
    j["wall_time_s"] = wall_time_s;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    return j.dump(2);
}

RunManifest RunManifest::from_json(const std::string& text) {
    RunManifest m;
    try {
        const json j = json::parse(text);
        m.subcommand = j.at("subcommand").get<std::string>();
        m.parameters = j.at("parameters").get<std::map<std::string, std::string>>();
        m.tool_version = j.at("tool_version").get<std::string>();
        m.wall_time_s = j.at("wall_time_s").get<double>();
        m.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
        m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad manifest: ") + e.what());
    }
    return m;
}

namespace {

void write_text_atomic(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        if (!os) throw FormatError("cannot open " + tmp + " for writing");
        os << text;
        if (!os) throw FormatError("write failed: " + tmp);
    }
    fs::rename(tmp, path);
}

void ensure_parent(const std::string& path) {
    const fs::path p = fs::path(path).parent_path();
    if (!p.empty()) fs::create_directories(p);
}

}  // namespace

void RunManifest::write(const std::string& path) const {
    ensure_parent(path);
    write_text_atomic(path, to_json() + "\n");
}

namespace {

using Clock = std::chrono::steady_clock;

/// Shared bookkeeping for one subcommand invocation.
struct Invocation {
    CLI::App* app = nullptr;
    std::string config_path;
    RunManifest manifest;
    Clock::time_point start = Clock::now();

    void input(const std::string& path) { manifest.inputs[path] = file_digest(path); }
    void output(const std::string& path) { manifest.outputs[path] = file_digest(path); }

    void finish(const std::string& manifest_path) {
        for (const CLI::Option* o : app->get_options()) {
            const std::string name = o->get_single_name();
            if (name.empty() || name == "help" || name == "config") continue;
            std::string value;
            if (o->count() > 0) {
                for (const auto& r : o->results()) value += (value.empty() ? "" : ",") + r;
            } else {
                value = o->get_default_str();
            }
            manifest.parameters[name] = value;
        }
        if (!config_path.empty()) manifest.parameters["config"] = config_path;
        manifest.subcommand = app->get_name();
        manifest.tool_version = MTM_VERSION;
        manifest.wall_time_s = std::chrono::duration<double>(Clock::now() - start).count();
        manifest.write(manifest_path);
    }
};

/// Flat key = value file; keys are long option names without dashes.
/// Keys already given on the command line keep their command-line value.
void apply_config(CLI::App* app, const std::string& path) {
    if (path.empty()) return;
    if (!fs::exists(path)) throw CLI::FileError::Missing(path);
    for (const auto& item : CLI::ConfigINI().from_file(path)) {
        if (!item.parents.empty() && !(item.parents.size() == 1 && item.parents[0] == "default"))
            throw CLI::ConfigError("sections are not supported in config files: " + item.fullname());
        CLI::Option* o = app->get_option_no_throw("--" + item.name);
        if (!o || item.name == "config") throw CLI::ConfigError::Extras(item.name);
        if (o->count() > 0) continue;
        o->add_result(item.inputs);
        o->run_callback();
    }
}

void require(CLI::App* app, std::initializer_list<const char*> names) {
    for (const char* n : names) {
        CLI::Option* o = app->get_option(n);
        if (o->count() == 0) throw CLI::RequiredError(n);
    }
}

std::string out_path(const std::string& given, const std::string& fallback) {
    return given.empty() ? (fs::path(default_out_dir()) / fallback).string() : given;
}

const CLI::Validator kOpenAngle(
    [](std::string& v) -> std::string {
        double g = 0.0;
        if (!CLI::detail::lexical_cast(v, g) || !(g > 0.0 && g < kPi)) return "angle must lie in (0, pi) radians";
        return {};
    },
    "(0, pi)");

std::string manifest_beside(const std::string& path) {
    return path + ".manifest.json";
}

// ---------------------------------------------------------------- soliton

struct SolitonArgs {
    double gamma = kPi / 2;
    double delta = 1.0;
    double lambda_re = 0.0, lambda_im = 0.0;
    double a = 0.0, theta = 0.0, t = 0.0;
    double grid_l = 30.0;
    int grid_n = 4096;
    std::string out;
};

void add_soliton(CLI::App& root, SolitonArgs& s, Invocation& inv) {
    auto* c = root.add_subcommand("soliton", "Write a one-soliton field snapshot CSV");
    c->add_option("--config", inv.config_path, "Flat key=value file; flags take precedence");
    c->add_option("--gamma", s.gamma, "gamma in (0, pi), radians")->capture_default_str()->check(kOpenAngle);
    c->add_option("--delta", s.delta, "|lambda| > 0")->capture_default_str()->check(CLI::PositiveNumber);
    c->add_option("--lambda-re", s.lambda_re, "Re lambda (with --lambda-im, overrides gamma/delta)");
    c->add_option("--lambda-im", s.lambda_im, "Im lambda");
    c->add_option("--a", s.a, "Shift")->capture_default_str();
    c->add_option("--theta", s.theta, "Gauge phase, radians")->capture_default_str();
    c->add_option("--t", s.t, "Time")->capture_default_str();
    c->add_option("--grid-l", s.grid_l, "Half width of the domain")->capture_default_str()->check(CLI::PositiveNumber);
    c->add_option("--grid-n", s.grid_n, "Number of samples")->capture_default_str()->check(CLI::Range(8, 1 << 24));
    c->add_option("--out", s.out, "Output CSV (default: $MTM_OUT_DIR/soliton.csv)");
}

int run_soliton(CLI::App* c, const SolitonArgs& s, Invocation& inv) {
    const bool by_lambda = c->get_option("--lambda-re")->count() > 0 || c->get_option("--lambda-im")->count() > 0;
    const SpectralParameter p =
        by_lambda ? SpectralParameter(cplx(s.lambda_re, s.lambda_im)) : SpectralParameter::from_polar(s.delta, s.gamma);
    p.require_soliton_range();
    const Grid g = Grid::symmetric(s.grid_l, s.grid_n, true);
    // Orbit convention e^{i theta} S(x + a, t); the stationary closed form is used when |lambda| = 1.
    SpinorField f;
    if (std::abs(p.delta - 1.0) < 1e-15) {
        f = stationary_soliton(p.gamma, s.a, s.theta, s.t, g);
    } else {
        const cplx ph = std::polar(1.0, s.theta);
        f = SpinorField(g);
        for (int j = 0; j < g.n(); ++j) {
            auto [u, v] = soliton_point(p, g.x(j) + s.a, s.t);
            f.u[j] = ph * u;
            f.v[j] = ph * v;
        }
    }
    const std::string out = out_path(s.out, "soliton.csv");
    ensure_parent(out);
    write_field_csv(out, f);
    inv.output(out);
    inv.finish(manifest_beside(out));
    json r{{"charge", charge(f)}, {"gamma", p.gamma}, {"delta", p.delta}, {"out", out}};
    std::cout << r.dump() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- eigen

struct EigenArgs {
    std::string field;
    double guess_re = 0.0, guess_im = 1.0;
    std::string out_json, out_vector;
};

void add_eigen(CLI::App& root, EigenArgs& s, Invocation& inv) {
    auto* c = root.add_subcommand("eigen", "Locate a discrete eigenvalue near a guess");
    c->add_option("--config", inv.config_path, "Flat key=value file; flags take precedence");
    c->add_option("--field", s.field, "Field snapshot CSV (required)");
    c->add_option("--guess-re", s.guess_re, "Re of the starting guess")->capture_default_str();
    c->add_option("--guess-im", s.guess_im, "Im of the starting guess")->capture_default_str();
    c->add_option("--out-json", s.out_json, "Result JSON (default: $MTM_OUT_DIR/eigen.json)");
    c->add_option("--out-vector", s.out_vector, "Eigenvector CSV (default: $MTM_OUT_DIR/eigenvector.csv)");
}

int run_eigen(CLI::App* c, const EigenArgs& s, Invocation& inv) {
    require(c, {"--field"});
    const SpinorField f = read_field_csv(s.field);
    inv.input(s.field);
    const EigenResult r = find_eigenvalue(f, cplx(s.guess_re, s.guess_im));
    const std::string oj = out_path(s.out_json, "eigen.json");
    const std::string ov = out_path(s.out_vector, "eigenvector.csv");
    ensure_parent(oj);
    ensure_parent(ov);
    json j{{"lambda_re", r.lambda.real()},
           {"lambda_im", r.lambda.imag()},
           {"evans_residual", r.evans_residual},
           {"iterations", r.iterations}};
    write_text_atomic(oj, j.dump(2) + "\n");
    write_lax_csv(ov, r.eigenvector);
    inv.output(oj);
    inv.output(ov);
    inv.finish(manifest_beside(oj));
    std::cout << j.dump() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- backlund

struct BacklundArgs {
    std::string field, vector;
    double lambda_re = 0.0, lambda_im = 1.0;
    double a = 0.0, theta = 0.0, t = 0.0;
    std::string direction = "transform";
    std::string out;
};

void add_backlund(CLI::App& root, BacklundArgs& s, Invocation& inv) {
    auto* c = root.add_subcommand("backlund", "Apply the Backlund transformation to a field");
    c->add_option("--config", inv.config_path, "Flat key=value file; flags take precedence");
    c->add_option("--field", s.field, "Field snapshot CSV (required)");
    c->add_option("--vector", s.vector, "Lax vector CSV (required unless --direction up)");
    c->add_option("--lambda-re", s.lambda_re, "Re lambda")->capture_default_str();
    c->add_option("--lambda-im", s.lambda_im, "Im lambda")->capture_default_str();
    c->add_option("--a", s.a, "Shift used by --direction up")->capture_default_str();
    c->add_option("--theta", s.theta, "Phase used by --direction up")->capture_default_str();
    c->add_option("--t", s.t, "Time of the field, used by --direction up")->capture_default_str();
    c->add_option("--direction", s.direction,
                  "transform: use the given vector; down: same, vector must be the eigenvector; "
                  "up: build the vector from Jost solutions of the field")
        ->capture_default_str()
        ->check(CLI::IsMember({"transform", "down", "up"}));
    c->add_option("--out", s.out, "Output CSV (default: $MTM_OUT_DIR/backlund.csv)");
}

int run_backlund(CLI::App* c, const BacklundArgs& s, Invocation& inv) {
    require(c, {"--field"});
    const cplx lam(s.lambda_re, s.lambda_im);
    const SpinorField f = read_field_csv(s.field);
    inv.input(s.field);
    SpinorField out_f;
    if (s.direction == "up") {
        const JostPair jp = solve_time_bvp(f, lam, s.t);
        out_f = up_map(f, jp, lam, s.a, s.theta);
    } else {
        require(c, {"--vector"});
        const LaxVector phi = read_lax_csv(s.vector);
        inv.input(s.vector);
        out_f = backlund_transform(f, phi, lam);
    }
    const std::string out = out_path(s.out, "backlund.csv");
    ensure_parent(out);
    write_field_csv(out, out_f);
    inv.output(out);
    inv.finish(manifest_beside(out));
    json r{{"charge_in", charge(f)}, {"charge_out", charge(out_f)}, {"out", out}};
    std::cout << r.dump() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- evolve

struct EvolveArgs {
    std::string field;
    double dt = 0.0;
    double t_end = 1.0;
    int stride = 1;
    std::string out_prefix;
};

void add_evolve(CLI::App& root, EvolveArgs& s, Invocation& inv) {
    auto* c = root.add_subcommand("evolve", "Evolve a field snapshot in time");
    c->add_option("--config", inv.config_path, "Flat key=value file; flags take precedence");
    c->add_option("--field", s.field, "Initial field CSV (required)");
    c->add_option("--dt", s.dt, "Time step; must be +dx or -dx (default dx)");
    c->add_option("--t-end", s.t_end, "Final time magnitude")->capture_default_str()->check(CLI::PositiveNumber);
    c->add_option("--stride", s.stride, "Steps between snapshots")->capture_default_str()->check(CLI::PositiveNumber);
    c->add_option("--out-prefix", s.out_prefix,
                  "Prefix for <prefix>series.csv and <prefix>snapshot_<step>.csv (default: $MTM_OUT_DIR/)");
}

int run_evolve(CLI::App* c, const EvolveArgs& s, Invocation& inv) {
    require(c, {"--field"});
    const SpinorField f0 = read_field_csv(s.field);
    inv.input(s.field);
    EvolutionConfig cfg = default_config(f0.grid, s.t_end, s.stride);
    if (c->get_option("--dt")->count() > 0) {
        if (std::abs(std::abs(s.dt) - f0.grid.dx()) > 1e-9 * f0.grid.dx())
            throw ParameterError(fmt::format("dt must be +-dx = +-{}", f0.grid.dx()));
        cfg.dt = std::copysign(f0.grid.dx(), s.dt);
    }
    const std::string prefix = s.out_prefix.empty() ? default_out_dir() + "/" : s.out_prefix;
    ensure_parent(prefix + "x");
    std::vector<std::pair<double, double>> series;
    std::vector<std::string> snaps;
    int k = 0;
    evolve(f0, cfg, [&](double t, const SpinorField& f) {
        series.emplace_back(t, charge(f));
        const std::string name = fmt::format("{}snapshot_{:06d}.csv", prefix, k++);
        write_field_csv(name, f);
        snaps.push_back(name);
    });
    std::ostringstream os;
    os.precision(17);
    os << "t,charge\n";
    for (auto [t, q] : series) os << t << ',' << q << '\n';
    const std::string series_path = prefix + "series.csv";
    write_text_atomic(series_path, os.str());
    inv.output(series_path);
    for (const auto& n : snaps) inv.output(n);
    inv.finish(prefix + "manifest.json");
    const double q0 = series.front().second, q1 = series.back().second;
    json r{{"snapshots", snaps.size()}, {"charge_drift", q0 > 0 ? std::abs(q1 - q0) / q0 : std::abs(q1 - q0)}};
    std::cout << r.dump() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- stability

struct StabilityArgs {
    double gamma0 = kPi / 2;
    std::vector<double> epsilon{0.01};
    std::uint64_t seed = 1;
    double t_end = 20.0;
    double sample_interval = 1.0;
    std::string pipeline = "both";
    std::string shape = "gaussian_bump";
    double grid_l = 60.0;
    int grid_n = 8192;
    std::string out_dir;
};

void add_stability(CLI::App& root, StabilityArgs& s, Invocation& inv) {
    auto* c = root.add_subcommand("stability", "Orbital stability experiment or epsilon sweep");
    c->add_option("--config", inv.config_path, "Flat key=value file; flags take precedence");
    c->add_option("--gamma0", s.gamma0, "Soliton gamma in (0, pi)")->capture_default_str()->check(kOpenAngle);
    c->add_option("--epsilon", s.epsilon, "Perturbation size; repeat for a sweep")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    c->add_option("--seed", s.seed, "Perturbation seed")->capture_default_str();
    c->add_option("--t-end", s.t_end, "Final time")->capture_default_str()->check(CLI::PositiveNumber);
    c->add_option("--sample-interval", s.sample_interval, "Time between records")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    c->add_option("--pipeline", s.pipeline, "direct|backlund|both")
        ->capture_default_str()
        ->check(CLI::IsMember({"direct", "backlund", "both"}));
    c->add_option("--shape", s.shape, "gaussian_bump|random_fourier")
        ->capture_default_str()
        ->check(CLI::IsMember({"gaussian_bump", "random_fourier"}));
    c->add_option("--grid-l", s.grid_l, "Half width of the domain")->capture_default_str()->check(CLI::PositiveNumber);
    c->add_option("--grid-n", s.grid_n, "Number of samples")->capture_default_str()->check(CLI::Range(8, 1 << 24));
    c->add_option("--out-dir", s.out_dir, "Output directory (default: $MTM_OUT_DIR)");
}

void write_run(const std::string& dir, const ExperimentResult& r, Invocation& inv) {
    fs::create_directories(dir);
    const bool direct = r.cfg.pipeline != Pipeline::Backlund;
    const std::string rec = (fs::path(dir) / "records.csv").string();
    write_records_csv(rec, direct ? r.direct : r.backlund);
    inv.output(rec);
    if (r.cfg.pipeline == Pipeline::Both) {
        const std::string brec = (fs::path(dir) / "backlund_records.csv").string();
        write_records_csv(brec, r.backlund);
        inv.output(brec);
        std::ostringstream os;
        os.precision(17);
        os << "t,gap,scheme_error\n";
        for (std::size_t i = 0; i < r.pipeline_gap.size(); ++i)
            os << r.direct[i].t << ',' << r.pipeline_gap[i] << ',' << r.scheme_error[i] << '\n';
        const std::string gp = (fs::path(dir) / "pipeline_gap.csv").string();
        write_text_atomic(gp, os.str());
        inv.output(gp);
    }
}

int run_stability(CLI::App*, const StabilityArgs& s, Invocation& inv) {
    ExperimentConfig cfg;
    cfg.gamma0 = s.gamma0;
    cfg.perturbation_seed = s.seed;
    cfg.perturbation_shape = parse_shape(s.shape);
    cfg.pipeline = parse_pipeline(s.pipeline);
    cfg.half_width = s.grid_l;
    cfg.n = s.grid_n;
    cfg.t_end = s.t_end;
    cfg.sample_interval = s.sample_interval;
    if (!(cfg.gamma0 > 0.0 && cfg.gamma0 < kPi)) throw ParameterError("gamma0 must lie in (0, pi)");

    const std::string dir = s.out_dir.empty() ? default_out_dir() : s.out_dir;
    fs::create_directories(dir);
    const SweepSummary sum = sweep(cfg, s.epsilon);

    std::size_t run = 0;
    for (const auto& row : sum.rows) {
        if (!row.ok) {
            std::cerr << fmt::format("epsilon {}: {}\n", row.epsilon, row.error);
            continue;
        }
        const std::string sub = s.epsilon.size() == 1 ? dir : (fs::path(dir) / fmt::format("eps_{}", row.epsilon)).string();
        write_run(sub, sum.runs[run++], inv);
    }
    const std::string summary = (fs::path(dir) / "summary.csv").string();
    write_summary_csv(summary, sum);
    inv.output(summary);

    json slopes = json::object();
    auto put = [&](const char* k, const std::optional<double>& v) { slopes[k] = v ? json(*v) : json(nullptr); };
    put("slope_lambda", sum.slope_lambda);
    put("slope_small", sum.slope_small);
    put("slope_dist", sum.slope_dist);
    put("constant_spread", sum.constant_spread);
    const std::string sp = (fs::path(dir) / "slopes.json").string();
    write_text_atomic(sp, slopes.dump(2) + "\n");
    inv.output(sp);
    inv.finish((fs::path(dir) / "manifest.json").string());

    bool all_ok = true;
    for (const auto& row : sum.rows) all_ok = all_ok && row.ok;
    std::cout << slopes.dump() << "\n";
    return all_ok ? kExitOk : kExitDomain;
}

}  // namespace

int run(int argc, char** argv) {
    CLI::App app{"Massive Thirring model soliton lab"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(MTM_VERSION));

    Invocation inv;
    SolitonArgs so;
    EigenArgs ei;
    BacklundArgs ba;
    EvolveArgs ev;
    StabilityArgs st;
    add_soliton(app, so, inv);
    add_eigen(app, ei, inv);
    add_backlund(app, ba, inv);
    add_evolve(app, ev, inv);
    add_stability(app, st, inv);

    if (argc <= 1) {
        std::cerr << app.help();
        return kExitUsage;
    }
    CLI::App* sub = nullptr;
    try {
        app.parse(argc, argv);
        sub = app.get_subcommands().front();
        inv.app = sub;
        apply_config(sub, inv.config_path);
        if (sub->get_name() == "soliton") return run_soliton(sub, so, inv);
        if (sub->get_name() == "eigen") return run_eigen(sub, ei, inv);
        if (sub->get_name() == "backlund") return run_backlund(sub, ba, inv);
        if (sub->get_name() == "evolve") return run_evolve(sub, ev, inv);
        return run_stability(sub, st, inv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << fmt::format("error: {}\n", e.what());
        return kExitDomain;
    }
}

}  // namespace mtm::cli
