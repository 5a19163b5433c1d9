#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "choquard/flow_minimizer.hpp"
#include "choquard/functionals.hpp"
#include "choquard/ground_state.hpp"
#include "json.hpp"

namespace choquard {

struct PohozaevReport {
    double k1 = 0.0;  // lp_mass / (5 - p)
    double k2 = 0.0;  // grad_sq
    double k3 = 0.0;  // coulomb / (6 - p)
    double dev12 = 0.0, dev13 = 0.0, dev23 = 0.0;  // |ki - kj| / max(ki, kj)
    double max_deviation = 0.0;
    double pohoz0_residual = 0.0;  // |G + M - D| / D
    double pohoz_residual = 0.0;   // |G - D / (6 - p)| / G
};

void to_json(nlohmann::json& j, const PohozaevReport& r);

PohozaevReport pohozaev_report(double p, double grad_sq, double lp_mass, double coulomb);
PohozaevReport pohozaev_report(const GroundState& gs);

struct DecayFit {
    double exponent = 0.0;   // slope of log Q vs log r (p > 2) or of log(rQ) vs r (p = 2)
    double r_squared = 0.0;  // coefficient of determination of the fit
    double expected = 0.0;   // -2 / (p - 2); NaN for p = 2
    double lo = 0.0, hi = 0.0;
    std::size_t samples = 0;
};

void to_json(nlohmann::json& j, const DecayFit& d);

// Least-squares fit over the nodes in [lo, hi]. Throws InvalidWindow if the
// window leaves (0, r_max], holds fewer than three nodes, or Q <= 0 there.
DecayFit decay_fit(const RadialProfile& Q, double p, double lo, double hi);
DecayFit decay_fit(const GroundState& gs, double lo, double hi);
// Default window [r_max / 4, r_max / 2].
DecayFit decay_fit(const GroundState& gs);

struct RieszTail {
    double r_eval = 0.0;
    double ratio = 0.0;  // 4π r A(r) / ‖Q‖_p^p
    double delta = 0.0;  // 2 (p - 2) / (p + 2)
    double sup_inner = 0.0;  // sup of A r^δ over [1, r_max / 2]
    double sup_outer = 0.0;  // sup of A r^δ over [r_max / 2, r_max]
    bool bounded = false;    // finite and not growing toward r_max
};

void to_json(nlohmann::json& j, const RieszTail& r);

RieszTail riesz_tail_check(const PotentialProfile& A, double p, double r_eval);
RieszTail riesz_tail_check(const GroundState& gs, double r_eval);

struct StraussReport {
    double exponent = 0.0;  // 4 / (p + 2)
    double sup = 0.0;       // sup of r^e Q / (‖∇Q‖^{2/(p+2)} ‖Q‖_p^{p/(p+2)})
    double r_at_sup = 0.0;
    bool interior = false;  // finite, attained before r_max and not rising there
};

void to_json(nlohmann::json& j, const StraussReport& s);

StraussReport strauss_check(const RadialProfile& Q, double p, double grad_norm, double lp_norm_value);
StraussReport strauss_check(const GroundState& gs);

struct UniquenessProbe {
    RadialProfile phi;  // on the grid of the first state
    double sup = 0.0;   // over r > r0
    double r_at_sup = 0.0;
    double r0 = 1.0;
    double q0 = 0.0;           // Q1(0), the scale of the threshold
    bool both_normalized = false;  // Pohozaev deviations < 1e-2 for both
};

void to_json(nlohmann::json& j, const UniquenessProbe& u);

// φ = |Q1 - Q2| + |A1 - A2| on the grid of gs1. Beyond the domain of gs2
// its Q is taken as 0 and A as the exterior potential mass / (4π r).
// Throws InvalidComparison when the exponents differ.
UniquenessProbe uniqueness_probe(const GroundState& gs1, const GroundState& gs2, double r0 = 1.0);

struct GNSampling {
    double min_ratio = 0.0;  // min over samples of W_p(u) / W_p(Q)
    std::size_t argmin = 0;
    std::size_t evaluated = 0;
    std::size_t skipped = 0;  // samples with undefined W_p
    double W_ground_state = 0.0;
};

void to_json(nlohmann::json& j, const GNSampling& g);

// Sample `index` of the battery: 1 to 4 Gaussian bumps with centers in
// [0, 8], widths in [0.3, 3] and amplitudes in [0.1, 2], on `grid`.
RadialProfile gn_test_function(const GridPtr& grid, std::uint64_t seed, std::size_t index);

GNSampling gn_sampling(const GroundState& gs, std::size_t count, std::uint64_t seed);

struct VerificationOptions {
    double pohozaev_tolerance = 1e-3;
    double residual_tolerance = 1e-3;
    double decay_tolerance = 0.10;     // relative to -2 / (p - 2)
    double decay_r_squared = 0.99;     // p = 2
    double riesz_tolerance = 0.02;
    double gn_tolerance = 1e-6;
    double norm_tolerance = 1e-10;
    std::size_t gn_samples = 200;  // 0 skips the GN check
    std::uint64_t seed = 42;
    std::optional<double> window_lo, window_hi;  // default r_max / 4, r_max / 2
    std::optional<double> riesz_radius;          // default r_max / 2
    bool include_decay = true;
};

void to_json(nlohmann::json& j, const VerificationOptions& o);

struct Check {
    std::string name;
    nlohmann::json value;
    nlohmann::json threshold;
    bool pass = false;
};

struct VerificationDocument {
    std::vector<Check> checks;
    bool all_pass() const;
    const Check* find(const std::string& name) const;
};

void to_json(nlohmann::json& j, const VerificationDocument& d);

// Every single-state check with its threshold.
VerificationDocument verify_ground_state(const GroundState& gs, const VerificationOptions& opt = {});

// Cross-solver checks: sup φ < 1e-3 Q(0) and equal ‖Q‖_p within 1e-3.
VerificationDocument verify_pair(const GroundState& a, const GroundState& b, double phi_tolerance = 1e-3,
                                 double lp_tolerance = 1e-3);

// Flow output normalized and packaged with its Newton potential.
GroundState ground_state_from_flow(const NormalizedProfile& np, double p, const std::string& config_hash);

}  // namespace choquard
