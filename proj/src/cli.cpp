#include "choquard/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "choquard/errors.hpp"
#include "choquard/functionals.hpp"
#include "choquard/ground_state.hpp"
#include "choquard/rearrangement.hpp"
#include "choquard/version.hpp"

namespace choquard::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Invalid command-line input that CLI11 cannot detect by itself.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

void require_p(double p) {
    if (!(p >= 2.0 && p < 5.0)) throw UsageError("p must satisfy 2 <= p < 5, got " + format_double(p));
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << text;
    if (!os) throw std::runtime_error("write failed: " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataFormatError("cannot open " + path.string(), 0);
    try {
        return json::parse(is);
    } catch (const json::parse_error& e) {
        throw DataFormatError(path.string() + ": " + e.what(), 0);
    }
}

void write_ground_state(const fs::path& path, const GroundState& gs) {
    std::ostringstream os;
    write_ground_state_csv(os, gs);
    write_text(path, os.str());
}

double weinstein_from_norms(const GroundState& gs) {
    const double p = gs.p;
    return std::pow(gs.grad_sq, p / (6.0 - p)) * std::pow(gs.lp_mass, 2.0 * (5.0 - p) / (6.0 - p)) / gs.coulomb;
}

std::vector<std::string> failed_checks(const VerificationDocument& d) {
    std::vector<std::string> names;
    for (const auto& c : d.checks)
        if (!c.pass) names.push_back(c.name);
    return names;
}

// The manifest is written before any computation and rewritten once the
// command has finished. Wall-clock duration is the only field that varies
// between identical runs.
class Manifest {
public:
    Manifest(fs::path path, std::string command, json config, json seeds, json inputs, json outputs)
        : path_(std::move(path)), start_(std::chrono::steady_clock::now()) {
        doc_ = json{{"command", std::move(command)},
                    {"tool_version", kVersion},
                    {"config", std::move(config)},
                    {"seeds", std::move(seeds)},
                    {"inputs", std::move(inputs)},
                    {"outputs", std::move(outputs)},
                    {"status", "running"}};
        write_json(path_, doc_);
    }

    int finish(int code, const std::string& status, json summary) {
        doc_["status"] = status;
        doc_["exit_code"] = code;
        doc_["duration_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        doc_["summary"] = std::move(summary);
        write_json(path_, doc_);
        return code;
    }

private:
    fs::path path_;
    std::chrono::steady_clock::time_point start_;
    json doc_;
};

void prepare_out(const fs::path& out) {
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec || !fs::is_directory(out)) throw std::runtime_error("cannot create output directory " + out.string());
}

VerificationOptions verification_from_json(const json& j) {
    VerificationOptions o;
    o.pohozaev_tolerance = j.value("pohozaev_tolerance", o.pohozaev_tolerance);
    o.residual_tolerance = j.value("residual_tolerance", o.residual_tolerance);
    o.decay_tolerance = j.value("decay_tolerance", o.decay_tolerance);
    o.decay_r_squared = j.value("decay_r_squared", o.decay_r_squared);
    o.riesz_tolerance = j.value("riesz_tolerance", o.riesz_tolerance);
    o.gn_tolerance = j.value("gn_tolerance", o.gn_tolerance);
    o.norm_tolerance = j.value("norm_tolerance", o.norm_tolerance);
    o.gn_samples = j.value("gn_samples", o.gn_samples);
    o.seed = j.value("seed", o.seed);
    auto opt = [&j](const char* key) -> std::optional<double> {
        if (!j.contains(key) || j[key].is_null()) return std::nullopt;
        return j[key].get<double>();
    };
    o.window_lo = opt("window_lo");
    o.window_hi = opt("window_hi");
    o.riesz_radius = opt("riesz_radius");
    o.include_decay = j.value("include_decay", o.include_decay);
    return o;
}

// --tol-* flags; unset ones leave the options untouched.
struct ToleranceFlags {
    std::optional<double> pohozaev, residual, decay, decay_r2, riesz, gn, norm;
    std::optional<std::size_t> gn_samples;
    std::optional<std::uint64_t> seed;

    void add(CLI::App* app) {
        app->add_option("--tol-pohozaev", pohozaev, "Pohozaev deviation and identity tolerance (1e-3)");
        app->add_option("--tol-residual", residual, "Euler-Lagrange relative residual tolerance (1e-3)");
        app->add_option("--tol-decay", decay, "decay exponent relative tolerance (0.10)");
        app->add_option("--tol-decay-r2", decay_r2, "R^2 threshold of the p = 2 decay fit (0.99)");
        app->add_option("--tol-riesz", riesz, "Riesz tail ratio tolerance (0.02)");
        app->add_option("--tol-gn", gn, "GN optimality slack (1e-6)");
        app->add_option("--tol-norm", norm, "stored norm consistency tolerance (1e-10)");
        app->add_option("--gn-samples", gn_samples, "number of GN test functions (200)");
        app->add_option("--seed", seed, "PRNG seed (42)");
    }

    void apply(VerificationOptions& v) const {
        if (pohozaev) v.pohozaev_tolerance = *pohozaev;
        if (residual) v.residual_tolerance = *residual;
        if (decay) v.decay_tolerance = *decay;
        if (decay_r2) v.decay_r_squared = *decay_r2;
        if (riesz) v.riesz_tolerance = *riesz;
        if (gn) v.gn_tolerance = *gn;
        if (norm) v.norm_tolerance = *norm;
        if (gn_samples) v.gn_samples = *gn_samples;
        if (seed) v.seed = *seed;
    }
};

void add_grid_flags(CLI::App* app, GridSpec& g, const std::string& prefix, const std::string& what) {
    app->add_option("--" + prefix + "r-max", g.r_max, what + " radius")->capture_default_str();
    app->add_option("--" + prefix + "n", g.n, what + " node count")->capture_default_str();
    app->add_option("--" + prefix + "stretch", g.stretch,
                    what + " geometric stretch; replaces the uniform core when given");
    app->add_option("--" + prefix + "core-spacing", g.core_spacing, what + " uniform core spacing")
        ->capture_default_str();
    app->add_option("--" + prefix + "core-intervals", g.core_intervals, what + " uniform core cell count")
        ->capture_default_str();
}

GroundState verified_state(const fs::path& csv, double p, const std::string& hash) {
    GroundState gs = load_ground_state(csv, p);
    gs.config_hash = hash;
    return gs;
}

struct SolveSummary {
    std::optional<GroundState> ground_state;
    std::optional<DecayFit> decay;
    bool verified = false;
    std::string status;
};

FlowConfig cross_check_config(const SolveOptions& o) {
    FlowConfig fc;
    fc.p = o.p;
    fc.grid = o.flow_grid.build();
    fc.tolerance = o.flow_tolerance;
    fc.max_iterations = o.flow_max_iterations;
    fc.seed = o.verification.seed;
    return fc;
}

int solve_impl(const SolveOptions& o, const fs::path& out, SolveSummary& summary) {
    require_p(o.p);
    ShootingConfig sc = o.shooting;
    sc.p = o.p;
    const GridPtr grid = o.grid.build();
    sc.profile_radius = grid->r_max();
    sc.validate();
    std::optional<FlowConfig> fc;
    if (o.cross_check) {
        fc = cross_check_config(o);
        fc->validate();
    }
    prepare_out(out);

    json outputs = {"ground_state.csv", "verify.json"};
    if (o.cross_check) {
        outputs.push_back("flow_ground_state.csv");
        outputs.push_back("cross_check.json");
    }
    Manifest manifest(out / "manifest.json", "solve", o, {{"verification", o.verification.seed}}, json::array(),
                      outputs);

    ShootingOutcome shot;
    try {
        shot = solve_shooting(sc, grid);
    } catch (const NoSeparatrix& e) {
        std::cerr << "solve: " << e.what() << '\n';
        summary.status = "no_separatrix";
        return manifest.finish(kSolverFailure, summary.status, {{"error", e.what()}});
    } catch (const NumericalFailure& e) {
        std::cerr << "solve: " << e.what() << " (r = " << e.last_r() << ")\n";
        summary.status = "numerical_failure";
        return manifest.finish(kSolverFailure, summary.status, {{"error", e.what()}, {"last_r", e.last_r()}});
    } catch (const InvalidTrajectory& e) {
        std::cerr << "solve: " << e.what() << '\n';
        summary.status = "invalid_trajectory";
        return manifest.finish(kSolverFailure, summary.status, {{"error", e.what()}});
    }

    // Verification runs on the profile as stored, so that verifying the file
    // later reproduces verify.json exactly.
    write_ground_state(out / "ground_state.csv", *shot.ground_state);
    GroundState gs = verified_state(out / "ground_state.csv", o.p, shot.ground_state->config_hash);
    const VerificationDocument doc = verify_ground_state(gs, o.verification);
    write_json(out / "verify.json", doc);

    json result = {{"b_star", shot.b_star},
                   {"B_infinity", shot.B_infinity},
                   {"trust_radius", shot.trust_radius},
                   {"tail_continued", shot.tail_continued},
                   {"k", gs.k},
                   {"grad_sq", gs.grad_sq},
                   {"lp_mass", gs.lp_mass},
                   {"coulomb", gs.coulomb},
                   {"W", weinstein_from_norms(gs)},
                   {"verification_pass", doc.all_pass()},
                   {"failed_checks", failed_checks(doc)}};
    bool pass = doc.all_pass();

    if (fc) {
        FlowResult fr = [&] {
            try {
                return minimize_weinstein(*fc);
            } catch (const NonConvergence& e) {
                return e.last();
            }
        }();
        if (fr.stopping_reason != "tolerance") {
            std::cerr << "solve: cross-check flow stopped by " << fr.stopping_reason << '\n';
            summary.ground_state = std::move(gs);
            summary.status = "flow_nonconvergence";
            result["flow"] = flow_manifest(*fc, fr);
            return manifest.finish(kSolverFailure, summary.status, result);
        }
        const GroundState flow_gs =
            ground_state_from_flow(normalize_to_EL(fr.u, o.p), o.p, config_hash(json(*fc)));
        write_ground_state(out / "flow_ground_state.csv", flow_gs);
        VerificationOptions flow_opts = o.verification;
        flow_opts.include_decay = false;  // the Dirichlet boundary distorts the far tail
        flow_opts.gn_samples = 0;
        const VerificationDocument pair = verify_pair(gs, flow_gs, o.phi_tolerance, o.lp_tolerance);
        const VerificationDocument flow_doc = verify_ground_state(flow_gs, flow_opts);
        const bool cross_pass = pair.all_pass() && flow_doc.all_pass();
        write_json(out / "cross_check.json", json{{"flow", flow_manifest(*fc, fr)},
                                                  {"pair", pair},
                                                  {"flow_verification", flow_doc},
                                                  {"all_pass", cross_pass}});
        result["cross_check_pass"] = cross_pass;
        result["flow_iterations"] = fr.iterations;
        pass = pass && cross_pass;
    }

    summary.decay = decay_fit(gs);
    summary.verified = pass;
    summary.ground_state = std::move(gs);
    summary.status = pass ? "ok" : "verification_failed";
    std::cout << "solve p=" << format_double(o.p) << ": " << (pass ? "all checks pass" : "verification failed")
              << " (" << out.string() << ")\n";
    return manifest.finish(pass ? kSuccess : kVerificationFailure, summary.status, result);
}

template <class F>
int guarded(const char* who, F&& body) {
    try {
        return body();
    } catch (const UsageError& e) {
        std::cerr << who << ": " << e.what() << '\n';
        return kUsage;
    } catch (const InvalidArgument& e) {
        std::cerr << who << ": " << e.what() << '\n';
        return kUsage;
    } catch (const DataFormatError& e) {
        std::cerr << who << ": " << e.what() << '\n';
        return kDataFormat;
    } catch (const json::exception& e) {
        std::cerr << who << ": malformed JSON: " << e.what() << '\n';
        return kDataFormat;
    } catch (const NumericalFailure& e) {
        std::cerr << who << ": " << e.what() << '\n';
        return kSolverFailure;
    } catch (const std::exception& e) {
        std::cerr << who << ": " << e.what() << '\n';
        return kInternalError;
    }
}

std::string p_label(double p) {
    std::ostringstream os;
    os << "p_" << p;
    return os.str();
}

}  // namespace

GridPtr GridSpec::build() const {
    if (stretch) return make_grid(r_max, n, *stretch, core_intervals);
    return make_grid_with_core(r_max, n, core_spacing, core_intervals);
}

GridSpec GridSpec::shooting_default() { return GridSpec{200.0, 4096, 0.01, 400, std::nullopt}; }

GridSpec GridSpec::flow_default() { return GridSpec{1000.0, 8192, 0.005, 800, std::nullopt}; }

void to_json(json& j, const GridSpec& g) {
    j = json{{"r_max", g.r_max},
             {"n", g.n},
             {"core_spacing", g.core_spacing},
             {"core_intervals", g.core_intervals},
             {"stretch", g.stretch ? json(*g.stretch) : json()}};
}

void from_json(const json& j, GridSpec& g) {
    g.r_max = j.at("r_max").get<double>();
    g.n = j.at("n").get<std::size_t>();
    g.core_spacing = j.at("core_spacing").get<double>();
    g.core_intervals = j.at("core_intervals").get<std::size_t>();
    if (j.contains("stretch") && !j["stretch"].is_null())
        g.stretch = j["stretch"].get<double>();
    else
        g.stretch.reset();
}

void to_json(json& j, const SolveOptions& o) {
    ShootingConfig sc = o.shooting;
    sc.p = o.p;
    j = json{{"p", o.p},
             {"grid", o.grid},
             {"shooting", sc},
             {"verification", o.verification},
             {"cross_check", o.cross_check},
             {"flow_grid", o.flow_grid},
             {"flow_tolerance", o.flow_tolerance},
             {"flow_max_iterations", o.flow_max_iterations},
             {"phi_tolerance", o.phi_tolerance},
             {"lp_tolerance", o.lp_tolerance}};
}

void from_json(const json& j, SolveOptions& o) {
    o = SolveOptions{};
    o.p = j.at("p").get<double>();
    o.grid = j.at("grid").get<GridSpec>();
    o.shooting = j.at("shooting").get<ShootingConfig>();
    o.verification = verification_from_json(j.at("verification"));
    o.cross_check = j.at("cross_check").get<bool>();
    o.flow_grid = j.at("flow_grid").get<GridSpec>();
    o.flow_tolerance = j.at("flow_tolerance").get<double>();
    o.flow_max_iterations = j.at("flow_max_iterations").get<int>();
    o.phi_tolerance = j.at("phi_tolerance").get<double>();
    o.lp_tolerance = j.at("lp_tolerance").get<double>();
}

void to_json(json& j, const MinimizeOptions& o) {
    j = json{{"p", o.p},
             {"grid", o.grid},
             {"seed_shape", o.seed_shape},
             {"tolerance", o.tolerance},
             {"max_iterations", o.max_iterations},
             {"restarts", o.restarts},
             {"phi_tolerance", o.phi_tolerance},
             {"seed", o.seed}};
}

void from_json(const json& j, MinimizeOptions& o) {
    o = MinimizeOptions{};
    o.p = j.at("p").get<double>();
    o.grid = j.at("grid").get<GridSpec>();
    o.seed_shape = j.at("seed_shape").get<std::string>();
    o.tolerance = j.at("tolerance").get<double>();
    o.max_iterations = j.at("max_iterations").get<int>();
    o.restarts = j.at("restarts").get<std::size_t>();
    o.phi_tolerance = j.at("phi_tolerance").get<double>();
    o.seed = j.at("seed").get<std::uint64_t>();
}

void to_json(json& j, const SweepOptions& o) { j = json{{"p", o.ps}, {"base", o.base}}; }

void from_json(const json& j, SweepOptions& o) {
    o.ps = j.at("p").get<std::vector<double>>();
    o.base = j.at("base").get<SolveOptions>();
}

void to_json(json& j, const VerifyOptions& o) {
    j = json{{"input", o.input}, {"p", o.p}, {"verification", o.verification}};
}

void from_json(const json& j, VerifyOptions& o) {
    o.input = j.at("input").get<std::string>();
    o.p = j.at("p").get<double>();
    o.verification = verification_from_json(j.at("verification"));
}

void to_json(json& j, const RearrangeOptions& o) {
    j = json{{"p", o.p}, {"count", o.count}, {"seed", o.seed}, {"grid", o.grid}};
}

void from_json(const json& j, RearrangeOptions& o) {
    o.p = j.at("p").get<double>();
    o.count = j.at("count").get<std::size_t>();
    o.seed = j.at("seed").get<std::uint64_t>();
    o.grid = j.at("grid").get<GridSpec>();
}

GroundState load_ground_state(const fs::path& csv, double p) {
    std::ifstream is(csv, std::ios::binary);
    if (!is) throw DataFormatError("cannot open " + csv.string(), 0);
    try {
        return read_ground_state_csv(is, p);
    } catch (const DataFormatError& e) {
        throw DataFormatError(csv.string() + ": " + e.what(), e.line());
    }
}

int run_solve(const SolveOptions& o, const fs::path& out) {
    return guarded("solve", [&] {
        SolveSummary s;
        return solve_impl(o, out, s);
    });
}

int run_minimize(const MinimizeOptions& o, const fs::path& out) {
    return guarded("minimize", [&] {
        require_p(o.p);
        if (o.restarts < 1) throw UsageError("--restarts must be at least 1");
        FlowConfig fc;
        fc.p = o.p;
        fc.seed_shape = SeedDescriptor::parse(o.seed_shape);
        fc.grid = o.grid.build();
        fc.tolerance = o.tolerance;
        fc.max_iterations = o.max_iterations;
        fc.seed = o.seed;
        fc.validate();
        prepare_out(out);

        json outputs = json::array();
        for (std::size_t k = 0; k < o.restarts; ++k) outputs.push_back("restart_" + std::to_string(k) + ".csv");
        outputs.push_back("restarts.json");
        outputs.push_back("phi_matrix.json");
        Manifest manifest(out / "manifest.json", "minimize", o, {{"restarts", o.seed}}, json::array(), outputs);

        std::vector<RestartResult> runs;
        std::vector<std::size_t> failed;
        if (o.restarts == 1) {
            try {
                FlowResult fr = minimize_weinstein_from(fc, perturbed_seed(fc, 0));
                NormalizedProfile np = normalize_to_EL(fr.u, o.p);
                runs.push_back(RestartResult{0, std::move(fr), std::move(np)});
            } catch (const NonConvergence&) {
                failed.push_back(0);
            }
        } else {
            try {
                runs = perturbed_restarts(fc, o.restarts);
            } catch (const PartialResult& e) {
                runs = e.converged();
                failed = e.failed();
            }
        }

        const std::string hash = config_hash(json(fc));
        std::vector<GroundState> states;
        json per_run = json::array();
        for (const auto& r : runs) {
            states.push_back(ground_state_from_flow(r.normalized, o.p, hash));
            write_ground_state(out / ("restart_" + std::to_string(r.seed) + ".csv"), states.back());
            json entry = flow_manifest(fc, r.flow);
            entry["index"] = r.seed;
            entry["lambda"] = r.normalized.lambda;
            entry["mu"] = r.normalized.mu;
            per_run.push_back(std::move(entry));
        }
        write_json(out / "restarts.json", json{{"runs", per_run}, {"failed", failed}});

        if (!failed.empty()) {
            std::cerr << "minimize: " << failed.size() << " of " << o.restarts << " restarts did not converge\n";
            return manifest.finish(kSolverFailure, "nonconvergence", {{"failed", failed}});
        }

        // φ_ij / Q_i(0): both orders, since each probe lives on the first grid.
        json matrix = json::array();
        double worst = 0.0;
        for (std::size_t i = 0; i < states.size(); ++i) {
            json row = json::array();
            for (std::size_t j = 0; j < states.size(); ++j) {
                double v = 0.0;
                if (i != j) {
                    const UniquenessProbe u = uniqueness_probe(states[i], states[j]);
                    v = u.sup / u.q0;
                }
                worst = std::max(worst, v);
                row.push_back(v);
            }
            matrix.push_back(std::move(row));
        }
        const bool pass = worst < o.phi_tolerance;
        write_json(out / "phi_matrix.json", json{{"relative_to", "Q(0) of the row state"},
                                                 {"matrix", matrix},
                                                 {"max", worst},
                                                 {"threshold", o.phi_tolerance},
                                                 {"pass", pass}});
        std::cout << "minimize p=" << format_double(o.p) << ": " << runs.size()
                  << " restarts, max relative phi = " << worst << '\n';
        return manifest.finish(pass ? kSuccess : kVerificationFailure, pass ? "ok" : "verification_failed",
                               {{"max_phi", worst}, {"pass", pass}});
    });
}

int run_sweep(const SweepOptions& o, const fs::path& out) {
    return guarded("sweep", [&] {
        if (o.ps.empty()) throw UsageError("sweep needs at least one p");
        std::vector<double> ps;
        std::set<double> seen;
        for (double p : o.ps) {
            require_p(p);
            if (!seen.insert(p).second) {
                std::cerr << "sweep: warning: duplicate p = " << format_double(p) << " ignored\n";
                continue;
            }
            ps.push_back(p);
        }
        prepare_out(out);
        json outputs = {"sweep.csv"};
        for (double p : ps) outputs.push_back(p_label(p));
        SweepOptions materialized = o;
        materialized.ps = ps;
        materialized.base.p = ps.front();
        Manifest manifest(out / "manifest.json", "sweep", materialized,
                          {{"verification", o.base.verification.seed}}, json::array(), outputs);

        std::ostringstream csv;
        csv << "p,k,grad_sq,lp_mass,coulomb,W,C_GN,decay_exponent,status\n";
        bool all_ok = true;
        json rows = json::array();
        for (double p : ps) {
            SolveOptions so = o.base;
            so.p = p;
            SolveSummary s;
            const int code = guarded("sweep", [&] { return solve_impl(so, out / p_label(p), s); });
            if (s.status.empty()) s.status = "error_" + std::to_string(code);
            all_ok = all_ok && code == kSuccess;
            const double nan = std::nan("");
            double k = nan, g = nan, m = nan, d = nan, w = nan, c = nan, e = nan;
            if (s.ground_state) {
                const GroundState& gs = *s.ground_state;
                k = gs.k;
                g = gs.grad_sq;
                m = gs.lp_mass;
                d = gs.coulomb;
                w = weinstein_from_norms(gs);
                c = 1.0 / w;
            }
            if (s.decay) e = s.decay->exponent;
            csv << format_double(p) << ',' << format_double(k) << ',' << format_double(g) << ','
                << format_double(m) << ',' << format_double(d) << ',' << format_double(w) << ','
                << format_double(c) << ',' << format_double(e) << ',' << s.status << '\n';
            rows.push_back({{"p", p}, {"exit_code", code}, {"status", s.status}});
        }
        write_text(out / "sweep.csv", csv.str());
        return manifest.finish(all_ok ? kSuccess : kVerificationFailure, all_ok ? "ok" : "verification_failed",
                               {{"runs", rows}});
    });
}

int run_verify(const VerifyOptions& o, const fs::path& out) {
    return guarded("verify", [&] {
        require_p(o.p);
        prepare_out(out);
        Manifest manifest(out / "verify_manifest.json", "verify", o, {{"verification", o.verification.seed}},
                          json::array({o.input}), json::array({"verify.json"}));
        GroundState gs = [&] {
            try {
                return load_ground_state(o.input, o.p);
            } catch (const DataFormatError& e) {
                manifest.finish(kDataFormat, "data_format_error", {{"error", e.what()}});
                throw;
            }
        }();
        const VerificationDocument doc = verify_ground_state(gs, o.verification);
        write_json(out / "verify.json", doc);
        const bool pass = doc.all_pass();
        std::cout << "verify " << o.input << ": " << (pass ? "all checks pass" : "verification failed") << '\n';
        for (const auto& name : failed_checks(doc)) std::cout << "  failed: " << name << '\n';
        return manifest.finish(pass ? kSuccess : kVerificationFailure, pass ? "ok" : "verification_failed",
                               {{"all_pass", pass}, {"failed_checks", failed_checks(doc)}});
    });
}

int run_rearrange_test(const RearrangeOptions& o, const fs::path& out) {
    return guarded("rearrange-test", [&] {
        require_p(o.p);
        if (o.count < 1) throw UsageError("--count must be positive");
        const GridPtr grid = o.grid.build();
        prepare_out(out);
        Manifest manifest(out / "manifest.json", "rearrange-test", o, {{"battery", o.seed}}, json::array(),
                          json::array({"rearrangement.json"}));
        const RearrangementBattery b = rearrangement_battery(grid, o.p, o.count, o.seed);
        write_json(out / "rearrangement.json", b);
        const bool pass = b.violations() == 0;
        std::cout << "rearrange-test: " << b.reports.size() << " profiles, violations gradient "
                  << b.gradient_violations << ", L^p " << b.lp_violations << ", Coulomb " << b.coulomb_violations
                  << '\n';
        return manifest.finish(pass ? kSuccess : kVerificationFailure, pass ? "ok" : "verification_failed",
                               {{"gradient_violations", b.gradient_violations},
                                {"lp_violations", b.lp_violations},
                                {"coulomb_violations", b.coulomb_violations},
                                {"worst_lp", b.worst_lp}});
    });
}

int run_replay(const fs::path& manifest, const fs::path& out) {
    return guarded("replay", [&] {
        const json m = read_json(manifest);
        const std::string command = m.at("command").get<std::string>();
        const json& cfg = m.at("config");
        if (command == "solve") return run_solve(cfg.get<SolveOptions>(), out);
        if (command == "minimize") return run_minimize(cfg.get<MinimizeOptions>(), out);
        if (command == "sweep") return run_sweep(cfg.get<SweepOptions>(), out);
        if (command == "verify") return run_verify(cfg.get<VerifyOptions>(), out);
        if (command == "rearrange-test") return run_rearrange_test(cfg.get<RearrangeOptions>(), out);
        throw DataFormatError("unknown command in manifest: " + command, 0);
    });
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Ground states of the p-Choquard equation in three dimensions", "choquard"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    SolveOptions solve;
    ToleranceFlags solve_tol;
    bool no_cross_check = false;
    std::string solve_out = "out";
    auto* cmd_solve = app.add_subcommand("solve", "shooting solve, verification and flow cross-check");
    cmd_solve->add_option("--p", solve.p, "exponent, 2 <= p < 5")->required();
    add_grid_flags(cmd_solve, solve.grid, "", "profile grid");
    add_grid_flags(cmd_solve, solve.flow_grid, "flow-", "cross-check flow grid");
    cmd_solve->add_option("--tol-ode-abs", solve.shooting.atol, "ODE absolute tolerance")->capture_default_str();
    cmd_solve->add_option("--tol-ode-rel", solve.shooting.rtol, "ODE relative tolerance")->capture_default_str();
    cmd_solve->add_option("--tol-b", solve.shooting.b_tolerance, "bisection width on B(0)")->capture_default_str();
    cmd_solve->add_option("--tol-trust", solve.shooting.trust_tolerance, "trajectory agreement for the trusted range")
        ->capture_default_str();
    cmd_solve->add_option("--tol-flow", solve.flow_tolerance, "cross-check flow gradient tolerance")
        ->capture_default_str();
    cmd_solve->add_option("--tol-phi", solve.phi_tolerance, "cross-solver sup phi / Q(0) tolerance")
        ->capture_default_str();
    cmd_solve->add_option("--tol-lp", solve.lp_tolerance, "cross-solver L^p norm agreement")->capture_default_str();
    cmd_solve->add_flag("--no-cross-check", no_cross_check, "skip the flow cross-check");
    cmd_solve->add_option("--out", solve_out, "output directory")->capture_default_str();
    solve_tol.add(cmd_solve);

    MinimizeOptions minimize;
    std::string minimize_out = "out";
    auto* cmd_minimize = app.add_subcommand("minimize", "Weinstein flow from perturbed seeds");
    cmd_minimize->add_option("--p", minimize.p, "exponent, 2 <= p < 5")->required();
    add_grid_flags(cmd_minimize, minimize.grid, "", "flow grid");
    cmd_minimize->add_option("--restarts", minimize.restarts, "number of perturbed restarts")->capture_default_str();
    cmd_minimize->add_option("--seed", minimize.seed, "PRNG seed")->capture_default_str();
    cmd_minimize->add_option("--seed-shape", minimize.seed_shape, "gaussian:W or tent:W")->capture_default_str();
    cmd_minimize->add_option("--tol-flow", minimize.tolerance, "gradient-norm tolerance")->capture_default_str();
    cmd_minimize->add_option("--tol-phi", minimize.phi_tolerance, "pairwise sup phi / Q(0) tolerance")
        ->capture_default_str();
    cmd_minimize->add_option("--max-iterations", minimize.max_iterations, "iteration cap")->capture_default_str();
    cmd_minimize->add_option("--out", minimize_out, "output directory")->capture_default_str();

    SweepOptions sweep;
    ToleranceFlags sweep_tol;
    bool sweep_no_cross_check = false;
    std::string sweep_out = "sweep";
    auto* cmd_sweep = app.add_subcommand("sweep", "solve over a list of exponents");
    cmd_sweep->add_option("--p", sweep.ps, "exponents (comma separated)")->delimiter(',')->capture_default_str();
    add_grid_flags(cmd_sweep, sweep.base.grid, "", "profile grid");
    cmd_sweep->add_flag("--no-cross-check", sweep_no_cross_check, "skip the flow cross-check");
    cmd_sweep->add_option("--out", sweep_out, "output directory")->capture_default_str();
    sweep_tol.add(cmd_sweep);

    std::string verify_input;
    std::optional<double> verify_p;
    std::optional<std::string> verify_out;
    ToleranceFlags verify_tol;
    auto* cmd_verify = app.add_subcommand("verify", "verify a stored r,Q,A profile");
    cmd_verify->add_option("file", verify_input, "ground-state CSV")->required();
    cmd_verify->add_option("--p", verify_p, "exponent; defaults to the p of an adjacent manifest.json");
    cmd_verify->add_option("--out", verify_out, "output directory (default: the directory of the file)");
    verify_tol.add(cmd_verify);

    RearrangeOptions rearrange;
    std::string rearrange_out = "out";
    auto* cmd_rearrange = app.add_subcommand("rearrange-test", "rearrangement inequality battery");
    cmd_rearrange->add_option("--p", rearrange.p, "exponent")->capture_default_str();
    cmd_rearrange->add_option("--count", rearrange.count, "number of random profiles")->capture_default_str();
    cmd_rearrange->add_option("--seed", rearrange.seed, "PRNG seed")->capture_default_str();
    add_grid_flags(cmd_rearrange, rearrange.grid, "", "grid");
    cmd_rearrange->add_option("--out", rearrange_out, "output directory")->capture_default_str();

    std::string replay_manifest, replay_out;
    auto* cmd_replay = app.add_subcommand("replay", "re-run the command recorded in a manifest");
    cmd_replay->add_option("manifest", replay_manifest, "manifest.json of an earlier run")->required();
    cmd_replay->add_option("--out", replay_out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kSuccess : kUsage;
    }

    if (*cmd_solve) {
        solve.cross_check = !no_cross_check;
        solve_tol.apply(solve.verification);
        return run_solve(solve, solve_out);
    }
    if (*cmd_minimize) return run_minimize(minimize, minimize_out);
    if (*cmd_sweep) {
        sweep.base.cross_check = !sweep_no_cross_check;
        sweep_tol.apply(sweep.base.verification);
        return run_sweep(sweep, sweep_out);
    }
    if (*cmd_verify) {
        return guarded("verify", [&] {
            VerifyOptions vo;
            vo.input = verify_input;
            const fs::path dir = fs::path(verify_input).parent_path();
            const fs::path adjacent = dir / "manifest.json";
            if (fs::exists(adjacent)) {
                const json m = read_json(adjacent);
                if (m.value("command", "") == "solve") {
                    vo.p = m.at("config").at("p").get<double>();
                    vo.verification = verification_from_json(m.at("config").at("verification"));
                }
            }
            if (verify_p) vo.p = *verify_p;
            if (vo.p == 0.0) throw UsageError("no --p given and no solve manifest next to " + verify_input);
            verify_tol.apply(vo.verification);
            return run_verify(vo, verify_out ? fs::path(*verify_out) : (dir.empty() ? fs::path(".") : dir));
        });
    }
    if (*cmd_rearrange) return run_rearrange_test(rearrange, rearrange_out);
    if (*cmd_replay) return run_replay(replay_manifest, replay_out);
    return kUsage;
}

int run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv{"choquard"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace choquard::cli
