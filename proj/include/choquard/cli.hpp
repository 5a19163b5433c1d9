#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "choquard/flow_minimizer.hpp"
#include "choquard/radial_core.hpp"
#include "choquard/shooting_solver.hpp"
#include "choquard/verification.hpp"
#include "json.hpp"

namespace choquard::cli {

enum ExitCode : int {
    kSuccess = 0,
    kInternalError = 1,
    kSolverFailure = 2,
    kVerificationFailure = 3,
    kUsage = 64,
    kDataFormat = 65,
};

// Without `stretch` the grid has a uniform core of `core_intervals` cells of
// width `core_spacing`; with it, make_grid(r_max, n, stretch) is used.
struct GridSpec {
    double r_max = 200.0;
    std::size_t n = 4096;
    double core_spacing = 0.01;
    std::size_t core_intervals = 400;
    std::optional<double> stretch;

    GridPtr build() const;
    static GridSpec shooting_default();
    static GridSpec flow_default();
};

void to_json(nlohmann::json& j, const GridSpec& g);
void from_json(const nlohmann::json& j, GridSpec& g);

struct SolveOptions {
    double p = 3.0;
    GridSpec grid = GridSpec::shooting_default();
    ShootingConfig shooting;  // p and profile_radius are overwritten from the fields above
    VerificationOptions verification;
    bool cross_check = true;
    GridSpec flow_grid = GridSpec::flow_default();
    double flow_tolerance = 1e-5;
    int flow_max_iterations = 20000;
    double phi_tolerance = 1e-3;
    double lp_tolerance = 1e-3;
};

struct MinimizeOptions {
    double p = 3.0;
    GridSpec grid = GridSpec::flow_default();
    std::string seed_shape = "gaussian:1.5";
    double tolerance = 1e-5;
    int max_iterations = 20000;
    std::size_t restarts = 5;
    double phi_tolerance = 1e-3;
    std::uint64_t seed = 42;
};

struct SweepOptions {
    std::vector<double> ps{2.0, 2.5, 3.0, 3.5, 4.0};
    SolveOptions base;  // base.p is ignored
};

struct VerifyOptions {
    std::string input;
    double p = 0.0;
    VerificationOptions verification;
};

struct RearrangeOptions {
    double p = 3.0;
    std::size_t count = 50;
    std::uint64_t seed = 42;
    GridSpec grid = GridSpec::shooting_default();
};

void to_json(nlohmann::json& j, const SolveOptions& o);
void from_json(const nlohmann::json& j, SolveOptions& o);
void to_json(nlohmann::json& j, const MinimizeOptions& o);
void from_json(const nlohmann::json& j, MinimizeOptions& o);
void to_json(nlohmann::json& j, const SweepOptions& o);
void from_json(const nlohmann::json& j, SweepOptions& o);
void to_json(nlohmann::json& j, const VerifyOptions& o);
void from_json(const nlohmann::json& j, VerifyOptions& o);
void to_json(nlohmann::json& j, const RearrangeOptions& o);
void from_json(const nlohmann::json& j, RearrangeOptions& o);

// Each command writes manifest.json (verify: verify_manifest.json) into
// `out` before computing and rewrites it with the outcome afterwards.
int run_solve(const SolveOptions& o, const std::filesystem::path& out);
int run_minimize(const MinimizeOptions& o, const std::filesystem::path& out);
int run_sweep(const SweepOptions& o, const std::filesystem::path& out);
int run_verify(const VerifyOptions& o, const std::filesystem::path& out);
int run_rearrange_test(const RearrangeOptions& o, const std::filesystem::path& out);

// Re-runs the command recorded in a manifest, writing into `out`.
int run_replay(const std::filesystem::path& manifest, const std::filesystem::path& out);

GroundState load_ground_state(const std::filesystem::path& csv, double p);

int run_cli(int argc, const char* const* argv);
// Arguments without the program name.
int run_cli(const std::vector<std::string>& args);

}  // namespace choquard::cli
