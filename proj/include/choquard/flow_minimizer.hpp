#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "choquard/functionals.hpp"
#include "choquard/radial_core.hpp"
#include "json.hpp"

namespace choquard {

enum class SeedShape { Gaussian, Tent, Explicit };

struct SeedDescriptor {
    SeedShape shape = SeedShape::Gaussian;
    double width = 1.5;
    double amplitude = 1.0;
    std::optional<RadialProfile> profile;  // Explicit only; resampled onto the flow grid

    // "gaussian:W", "tent:W" (amplitude 1).
    static SeedDescriptor parse(const std::string& text);
    std::string describe() const;
};

// n = 8192, r_max = 1000, h = 0.005 on [0, 4]. The flow carries a Dirichlet
// condition at r_max, so it needs a wider domain than the shooting profile.
GridPtr default_flow_grid();

struct FlowConfig {
    double p = 3.0;
    SeedDescriptor seed_shape;
    GridPtr grid;  // null selects default_flow_grid()
    double initial_step = 1.0;
    double backtrack = 0.5;
    double growth = 1.5;
    double max_step = 10.0;
    double armijo = 1e-4;
    double tolerance = 1e-5;
    int max_iterations = 20000;
    // Hold the normalization length scale fixed along the flow.
    bool pin_scale = true;
    // Unpinned gradient norm below which pinning starts.
    double pin_threshold = 1e-2;
    std::uint64_t seed = 42;

    void validate() const;
    const GridPtr& resolved_grid() const;
};

void to_json(nlohmann::json& j, const FlowConfig& c);

struct FlowResult {
    RadialProfile u;  // unnormalized critical point
    int iterations = 0;
    double W = 0.0;
    double gradient_norm = 0.0;
    std::string stopping_reason;  // "tolerance" | "max_iterations" | "line_search"
    std::vector<double> history;  // W after the seed and after every accepted step
};

void to_json(nlohmann::json& j, const FlowResult& r);

// Flow did not reach the tolerance; the last iterate is kept.
class NonConvergence : public std::runtime_error {
public:
    NonConvergence(const std::string& what, FlowResult last)
        : std::runtime_error(what), last_(std::move(last)) {}
    const FlowResult& last() const noexcept { return last_; }

private:
    FlowResult last_;
};

RadialProfile seed_profile(const FlowConfig& cfg);

// Relative size of the component of the Weinstein gradient orthogonal to the
// ray {c u}, in the units of the Euler-Lagrange equation: ‖r⊥‖ / ‖c1 u^{p-1}‖
// with r = -Lap u + c1 u^{p-1} - c2 Ā u^{p-1}. With `pinned` the gradient of
// the normalization scale λ(u) is projected out as well, since the pinned
// flow cannot move along it.
double projected_gradient_norm(const RadialProfile& u, double p, bool pinned = true);

// Preconditioned projected descent u <- max(u + τ d, 0) with Armijo
// backtracking and u = 0 at r_max. d solves
// (S + c1 diag(V u^{p-2})) d = -(G / (2aW)) ∂W/∂u with S the Dirichlet
// stiffness matrix, which is the descent direction of W in that metric.
FlowResult minimize_weinstein(const FlowConfig& cfg);

// Same as above from an explicit starting profile on cfg's grid.
FlowResult minimize_weinstein_from(const FlowConfig& cfg, RadialProfile start);

struct RestartResult {
    std::uint64_t seed = 0;
    FlowResult flow;
    NormalizedProfile normalized;
};

class PartialResult : public std::runtime_error {
public:
    PartialResult(const std::string& what, std::vector<RestartResult> converged, std::vector<std::size_t> failed)
        : std::runtime_error(what), converged_(std::move(converged)), failed_(std::move(failed)) {}
    const std::vector<RestartResult>& converged() const noexcept { return converged_; }
    const std::vector<std::size_t>& failed() const noexcept { return failed_; }

private:
    std::vector<RestartResult> converged_;
    std::vector<std::size_t> failed_;
};

// Seed multiplied by 1 + 0.2 ξ_i (ξ uniform in [-1, 1], stream derived from
// (seed, index)) and smoothed once by (1, 2, 1) / 4.
RadialProfile perturbed_seed(const FlowConfig& cfg, std::size_t index);

std::vector<RestartResult> perturbed_restarts(const FlowConfig& cfg, std::size_t count);

nlohmann::json flow_manifest(const FlowConfig& cfg, const FlowResult& r);

}  // namespace choquard
