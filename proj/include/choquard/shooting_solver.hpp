#pragma once

#include <optional>
#include <string>
#include <vector>

#include "choquard/ground_state.hpp"
#include "choquard/radial_core.hpp"
#include "json.hpp"

namespace choquard {

enum class Classification { Crossing, Escaping, Undetermined };

std::string to_string(Classification c);

struct ShootingConfig {
    double p = 3.0;
    double q0 = 1.0;
    double b_lo = 0.1;
    double b_hi = 1.5;
    double r_max = 5000.0;  // raw integration horizon
    double atol = 1e-10;
    double rtol = 1e-10;
    int max_bisection = 200;
    double b_tolerance = 1e-15;
    int max_expansions = 60;
    double crossing_level = 0.0;
    double escape_factor = 2.0;
    double escape_threshold = 1e-3;
    double series_radius = 1e-4;
    // Relative spread of the final bracket trajectories that still counts
    // as agreement; beyond it the asymptotic tail takes over.
    double trust_tolerance = 1e-6;
    // Normalized radius the rescaled profile must cover.
    double profile_radius = 200.0;

    void validate() const;
};

void to_json(nlohmann::json& j, const ShootingConfig& c);
void from_json(const nlohmann::json& j, ShootingConfig& c);

// Samples at r = 0, the series radius and every accepted step. Second
// derivatives come from the ODE itself and feed quintic Hermite
// interpolation, which is C^2 across samples.
struct Trajectory {
    std::vector<double> r, Q, Qp, B, Bp, Qpp, Bpp;
    double termination_radius = 0.0;
    Classification classification = Classification::Undetermined;

    std::size_t size() const noexcept { return r.size(); }
    double Q_at(double x) const;
    double B_at(double x) const;
    double Qp_at(double x) const;
    double Bp_at(double x) const;
};

// Q'' + (2/r) Q' = Q^{p-1} B,  B'' + (2/r) B' = Q^p,  Q(0) = q0, B(0) = b.
Trajectory integrate_system(const ShootingConfig& cfg, double b);

Classification classify(const Trajectory& traj, const ShootingConfig& cfg);

struct ProbeResult {
    double b;
    Classification classification;
};

struct NormalizedSolution {
    RadialProfile Q;
    PotentialProfile A;
    double alpha = 1.0;
    double lambda = 1.0;
};

struct ShootingOutcome {
    ShootingConfig config;
    double b_star = 0.0;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    int bisections = 0;
    int expansions = 0;
    double B_infinity = 0.0;
    double B_infinity_exterior = 0.0;  // B + r B' at the trust radius
    double trust_radius = 0.0;
    bool tail_continued = false;
    double tail_slope_mismatch = 0.0;  // |y_tail - Q'/Q| at the matching radius
    bool monotone = true;
    std::vector<ProbeResult> probes;
    Trajectory raw;      // forward trajectory at b_star
    Trajectory profile;  // raw up to the trust radius, asymptotic tail beyond
    std::optional<GroundState> ground_state;
};

void to_json(nlohmann::json& j, const ShootingOutcome& o);

// Least-squares fit of B(r) = B_inf - c / r over samples in [r_lo, r_hi].
double fit_B_infinity(const Trajectory& traj, double r_lo, double r_hi);

// Bisection on b = B(0) with auto-expanded bracket, then the trusted
// profile and B_inf. Throws NoSeparatrix if no sign change is found.
ShootingOutcome find_separatrix(const ShootingConfig& cfg);

// Q~(r) = α Q(λ r), A~(r) = 1 - B(λ r) / B_inf with α = 1 / B_inf and
// λ = B_inf^{-(p-1)/2}, sampled on `grid`.
NormalizedSolution rescale_to_normalized(const Trajectory& traj, double p, double B_inf, const GridPtr& grid);

// find_separatrix followed by rescaling onto `grid` (profile_radius is
// taken from it) and construction of the ground state.
ShootingOutcome solve_shooting(ShootingConfig cfg, const GridPtr& grid);

void write_trajectory_csv(std::ostream& os, const Trajectory& t);

}  // namespace choquard
