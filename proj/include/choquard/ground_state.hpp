#pragma once

#include <iosfwd>
#include <string>

#include "choquard/radial_core.hpp"
#include "choquard/riesz_potential.hpp"
#include "json.hpp"

namespace choquard {

// A computed pair (Q, A). Norms are measured with the Simpson rule:
// grad_sq = h1_seminorm(Q)^2, lp_mass = ‖Q‖_p^p, coulomb = D(Q^p, Q^p).
struct GroundState {
    double p = 0.0;
    RadialProfile Q;
    PotentialProfile A;
    double k = 0.0;  // mean of the three Pohozaev estimates
    double grad_sq = 0.0;
    double lp_mass = 0.0;
    double coulomb = 0.0;
    std::string provenance;  // "shooting" | "flow" | "file"
    std::string config_hash;
};

// Validates Q (finite, nonnegative, Q(0) > 0, same grid as A) and fills in
// the norms and k.
GroundState make_ground_state(double p, RadialProfile Q, PotentialProfile A, std::string provenance,
                             std::string config_hash);

// Nonincreasing within `slack * Q(0)` and positive on all but the last node.
bool has_ground_state_shape(const GroundState& gs, double slack = 1e-12);

// Largest relative difference between the stored norms and a recomputation.
double norm_consistency(const GroundState& gs);

// `r,Q,A` with 17 significant digits, so that reading back is exact.
void write_ground_state_csv(std::ostream& os, const GroundState& gs);

// Parses `r,Q,A`; the source mass of A is recomputed from Q. Malformed input,
// including a Q that cannot be a ground state (negative, or Q(0) <= 0),
// throws DataFormatError.
GroundState read_ground_state_csv(std::istream& is, double p, std::string provenance = "file");

// 64-bit FNV-1a of a JSON document's compact dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& config);

}  // namespace choquard
