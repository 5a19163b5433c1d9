// Runs the eleven acceptance criteria and prints one PASS/FAIL line for each,
// followed by indented diagnostics. Exit status is nonzero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "choquard/cli.hpp"
#include "choquard/flow_minimizer.hpp"
#include "choquard/functionals.hpp"
#include "choquard/prng.hpp"
#include "choquard/rearrangement.hpp"
#include "choquard/riesz_potential.hpp"
#include "choquard/shooting_solver.hpp"
#include "choquard/verification.hpp"

using namespace choquard;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;
const std::vector<double> kExponents{2.0, 2.5, 3.0, 3.5, 4.0};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

struct Criterion {
    int id;
    std::string title;
    bool pass = true;
    std::vector<std::string> notes;

    void require(bool ok, const std::string& what) {
        if (!ok) pass = false;
        notes.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
    }
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

struct Solved {
    GroundState shooting;
    GroundState flow;
    double shooting_seconds = 0.0;
    double flow_seconds = 0.0;
};

// Both solvers at their default settings, computed once per exponent.
const Solved& solved(double p) {
    static std::map<double, Solved> cache;
    auto it = cache.find(p);
    if (it != cache.end()) return it->second;
    auto t0 = std::chrono::steady_clock::now();
    ShootingConfig sc;
    sc.p = p;
    GroundState s = *solve_shooting(sc, default_grid()).ground_state;
    const double ts = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    FlowConfig fc;
    fc.p = p;
    FlowResult fr = minimize_weinstein(fc);
    GroundState f = ground_state_from_flow(normalize_to_EL(fr.u, p), p, "");
    const double tf = seconds_since(t0);
    return cache.emplace(p, Solved{std::move(s), std::move(f), ts, tf}).first->second;
}

Criterion riesz_oracle() {
    Criterion c{1, "Riesz oracle"};
    auto t0 = std::chrono::steady_clock::now();
    auto g = default_grid();
    auto chi = indicator(g, 0, 1);
    auto A = newton_potential(chi);
    double worst = 0.0;
    for (std::size_t i = 0; i < g->size(); ++i) {
        const double r = (*g)[i];
        worst = std::max(worst, rel(A.A[i], r >= 1 ? 1 / (3 * r) : 0.5 - r * r / 6));
    }
    const double e0 = rel(A.A[0], 0.5), e5 = rel(interpolate(A.A, 0.5), 11.0 / 24);
    const double eD = rel(coulomb_form(chi, chi), 8 * kPi / 15);
    const double t = seconds_since(t0);
    c.require(e0 < 1e-6, fmt("A(0) rel error %.2e", e0));
    c.require(e5 < 1e-6, fmt("A(0.5) rel error %.2e", e5));
    c.require(worst < 1e-6, fmt("max nodal rel error vs closed form %.2e", worst));
    c.require(eD < 1e-5, fmt("D(chi, chi) rel error %.2e", eD));
    c.require(t < 1.0, fmt("runtime %.3f s", t));
    return c;
}

Criterion cross_solver() {
    Criterion c{2, "Cross-solver agreement"};
    for (double p : kExponents) {
        const Solved& s = solved(p);
        auto probe = uniqueness_probe(s.shooting, s.flow);
        const double t = s.shooting_seconds + s.flow_seconds;
        c.require(probe.sup < 1e-3 * probe.q0,
                  fmt("p=%.1f sup phi / Q(0) = %.2e (at r=%.3g)", p, probe.sup / probe.q0, probe.r_at_sup));
        c.require(t < 60.0, fmt("p=%.1f runtime %.2f s", p, t));
    }
    return c;
}

template <class F>
void for_each_state(F&& f) {
    for (double p : kExponents) {
        f(p, "shooting", solved(p).shooting);
        f(p, "flow", solved(p).flow);
    }
}

Criterion pohozaev() {
    Criterion c{3, "Pohozaev"};
    for_each_state([&](double p, const char* who, const GroundState& gs) {
        auto r = pohozaev_report(gs);
        c.require(r.max_deviation < 1e-3 && r.pohoz0_residual < 1e-3,
                  fmt("p=%.1f max deviation %.2e, identity residual %.2e", p, r.max_deviation, r.pohoz0_residual) +
                      " (" + who + ")");
    });
    return c;
}

Criterion euler_lagrange() {
    Criterion c{4, "Euler-Lagrange residual"};
    for_each_state([&](double p, const char* who, const GroundState& gs) {
        const double r = el_residual(gs.Q, gs.A, p).relative_norm;
        c.require(r < 1e-3, fmt("p=%.1f relative residual %.2e", p, r) + " (" + who + ")");
    });
    return c;
}

Criterion decay() {
    Criterion c{5, "Decay"};
    for (double p : kExponents) {
        const GroundState& gs = solved(p).shooting;
        auto d = decay_fit(gs);
        if (p == 2.0) {
            c.require(d.r_squared > 0.99,
                      fmt("p=2.0 log(rQ) vs r slope %.4f, R^2 %.6f on [%g, %g]", d.exponent, d.r_squared, d.lo, d.hi));
        } else {
            const double err = std::abs(d.exponent / d.expected - 1);
            c.require(err < 0.10, fmt("p=%.1f exponent %.4f vs %.4f, relative error %.3f", p, d.exponent, d.expected,
                                      err) +
                                      fmt(" on [%g, %g]", d.lo, d.hi));
        }
    }
    c.notes.push_back("     shooting ground states on the default grid, r_max = 200");
    return c;
}

Criterion riesz_tail() {
    Criterion c{6, "Riesz tail"};
    for_each_state([&](double p, const char* who, const GroundState& gs) {
        const double R = gs.Q.grid().r_max();
        auto t = riesz_tail_check(gs, R / 2);
        c.require(std::abs(t.ratio - 1) < 0.02 && t.bounded,
                  fmt("p=%.1f ratio at r=%g is %.6f, A r^delta sup %.3g", p, R / 2, t.ratio,
                      std::max(t.sup_inner, t.sup_outer)) +
                      (t.bounded ? "" : " unbounded") + " (" + who + ")");
    });
    return c;
}

Criterion gn_optimality() {
    Criterion c{7, "GN optimality"};
    for (double p : {2.0, 3.0, 4.0}) {
        auto s = gn_sampling(solved(p).shooting, 200, 42);
        c.require(s.min_ratio >= 1 - 1e-6 && s.evaluated > 0,
                  fmt("p=%.1f min W(u)/W(Q) = %.6f over %g samples (%g skipped)", p, s.min_ratio,
                      static_cast<double>(s.evaluated), static_cast<double>(s.skipped)));
    }
    return c;
}

Criterion rearrangement() {
    Criterion c{8, "Rearrangement"};
    auto b = rearrangement_battery(default_grid(), 3.0, 50, 42);
    c.require(b.gradient_violations == 0,
              fmt("gradient: %g violations, worst excess %.2e (slack 1e-4)", static_cast<double>(b.gradient_violations),
                  b.worst_gradient));
    c.require(b.lp_violations == 0, fmt("L^p: %g violations, worst |ratio - 1| %.2e (slack 1e-10)",
                                        static_cast<double>(b.lp_violations), b.worst_lp));
    c.require(b.coulomb_violations == 0,
              fmt("Coulomb: %g violations, worst deficit %.2e (slack 1e-8)", static_cast<double>(b.coulomb_violations),
                  b.worst_coulomb));
    return c;
}

Criterion gradient() {
    Criterion c{9, "Gradient correctness"};
    auto g = default_grid();
    for (std::size_t k = 0; k < 10; ++k) {
        auto rng = Xorshift64Star::derived(9, k);
        const double p = rng.uniform(2.0, 4.9);
        auto q = random_bumps(g, 100, k);
        auto h = random_bumps(g, 200, k);
        const double analytic = variational_pairing(weinstein_gradient(q, p), h);
        const double eps = 1e-5;
        std::vector<double> a(q.values()), b(q.values());
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] += eps * h[i];
            b[i] -= eps * h[i];
        }
        const double fd = (weinstein(RadialProfile(g, a), p).value - weinstein(RadialProfile(g, b), p).value) / (2 * eps);
        const double e = rel(fd, analytic);
        c.require(e < 1e-5, fmt("pair %g p=%.3f relative difference %.2e", static_cast<double>(k), p, e));
    }
    return c;
}

std::string slurp(const fs::path& f) {
    std::ifstream is(f, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// Manifests record wall time, so they are compared without it.
std::string comparable(const fs::path& f) {
    if (f.filename().string().find("manifest") == std::string::npos) return slurp(f);
    auto j = nlohmann::json::parse(slurp(f));
    j.erase("duration_seconds");
    j.erase("outputs");
    return j.dump();
}

Criterion determinism(const fs::path& root) {
    Criterion c{10, "Determinism"};
    const std::vector<std::vector<std::string>> commands{
        {"solve", "--p", "3"},
        {"minimize", "--p", "3", "--restarts", "2"},
        {"rearrange-test", "--p", "3", "--count", "10"},
    };
    for (const auto& cmd : commands) {
        fs::path dirs[2] = {root / (cmd[0] + "_a"), root / (cmd[0] + "_b")};
        int codes[2];
        for (int k = 0; k < 2; ++k) {
            fs::remove_all(dirs[k]);
            auto args = cmd;
            args.push_back("--out");
            args.push_back(dirs[k].string());
            codes[k] = cli::run_cli(args);
        }
        std::size_t files = 0, differing = 0;
        for (const auto& e : fs::directory_iterator(dirs[0])) {
            const auto ext = e.path().extension();
            if (ext != ".csv" && ext != ".json") continue;
            ++files;
            const fs::path other = dirs[1] / e.path().filename();
            if (!fs::exists(other) || comparable(e.path()) != comparable(other)) {
                ++differing;
                c.notes.push_back("     differs: " + e.path().filename().string());
            }
        }
        c.require(codes[0] == codes[1] && files > 0 && differing == 0,
                  cmd[0] + ": " + std::to_string(files) + " files, " + std::to_string(differing) +
                      " differ, exit codes " + std::to_string(codes[0]) + "/" + std::to_string(codes[1]));
    }
    return c;
}

Criterion uniqueness_restarts() {
    Criterion c{11, "Uniqueness restarts"};
    for (double p : {2.0, 3.0}) {
        FlowConfig fc;
        fc.p = p;
        std::vector<RestartResult> runs;
        try {
            runs = perturbed_restarts(fc, 5);
        } catch (const std::exception& e) {
            c.require(false, fmt("p=%.1f restarts failed: ", p) + e.what());
            continue;
        }
        std::vector<GroundState> states;
        for (const auto& r : runs) states.push_back(ground_state_from_flow(r.normalized, p, ""));
        double worst = 0.0;
        for (std::size_t i = 0; i < states.size(); ++i)
            for (std::size_t j = i + 1; j < states.size(); ++j) {
                auto probe = uniqueness_probe(states[i], states[j]);
                worst = std::max(worst, probe.sup / probe.q0);
            }
        c.require(states.size() == 5 && worst < 1e-3,
                  fmt("p=%.1f %g restarts converged, max pairwise sup phi / Q(0) = %.2e", p,
                      static_cast<double>(states.size()), worst));
    }
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    const fs::path root = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "choquard_acceptance";
    fs::create_directories(root);

    const std::vector<std::function<Criterion()>> criteria{
        riesz_oracle, cross_solver, pohozaev,     euler_lagrange, decay,
        riesz_tail,   gn_optimality, rearrangement, gradient,      [&] { return determinism(root); },
        uniqueness_restarts};

    int failed = 0;
    for (const auto& run : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Criterion c = run();
        std::printf("%s %2d %s (%.2f s)\n", c.pass ? "PASS" : "FAIL", c.id, c.title.c_str(), seconds_since(t0));
        for (const auto& n : c.notes) std::printf("       %s\n", n.c_str());
        std::fflush(stdout);
        if (!c.pass) ++failed;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
