#pragma once

#include <cstdint>
#include <vector>

#include "choquard/radial_core.hpp"
#include "json.hpp"

namespace choquard {

// μ(a) = |{x : u(|x|) > a}| for the piecewise-linear interpolant of u: whole
// intervals above a contribute their shell volume, crossing intervals the
// shell up to the linearly interpolated crossing radius.
double distribution(const RadialProfile& u, double a);

struct DistributionFunction {
    std::vector<double> levels;    // descending
    std::vector<double> measures;  // μ(levels[k]), nondecreasing
};

DistributionFunction distribution_function(const RadialProfile& u, const std::vector<double>& levels);

// u*(r_i) = inf{a : μ(a) <= 4π r_i^3 / 3} on the grid of u, found exactly
// for the piecewise-linear distribution: the band between two consecutive
// node values is located first, then μ is inverted on that band, where it is
// a sum of cubics in a, by safeguarded bisection.
RadialProfile schwarz_rearrange(const RadialProfile& u);

struct RearrangementReport {
    double p = 0.0;
    double grad_sq = 0.0, grad_sq_star = 0.0;  // ‖∇u‖², ‖∇u*‖²
    double lp = 0.0, lp_star = 0.0;            // ‖u‖_p, ‖u*‖_p
    double coulomb = 0.0, coulomb_star = 0.0;  // D(u^p, u^p), D(u*^p, u*^p)
    double gradient_slack = 1e-4;
    double lp_slack = 1e-10;
    double coulomb_slack = 1e-8;
    bool gradient_ok = false;  // ‖∇u*‖² <= (1 + slack) ‖∇u‖²
    bool lp_ok = false;        // |‖u*‖_p - ‖u‖_p| <= slack ‖u‖_p
    bool coulomb_ok = false;   // D* >= (1 - slack) D

    bool all_ok() const noexcept { return gradient_ok && lp_ok && coulomb_ok; }
};

void to_json(nlohmann::json& j, const RearrangementReport& r);

// Measured with the Simpson rule, three-point derivatives and the Newton
// potential.
RearrangementReport rearrangement_report(const RadialProfile& u, double p);

// Sample `index` of the battery: 1 to 4 Gaussian bumps with centers in
// [0, 8], widths in [0.3, 2] and amplitudes in [0.2, 1.5].
RadialProfile random_bumps(const GridPtr& grid, std::uint64_t seed, std::size_t index);

struct RearrangementBattery {
    double p = 0.0;
    std::uint64_t seed = 0;
    std::vector<RearrangementReport> reports;
    std::size_t gradient_violations = 0, lp_violations = 0, coulomb_violations = 0;
    double worst_gradient = 0.0;  // max of ‖∇u*‖² / ‖∇u‖² - 1
    double worst_lp = 0.0;        // max of |‖u*‖_p / ‖u‖_p - 1|
    double worst_coulomb = 0.0;   // max of 1 - D* / D

    std::size_t violations() const noexcept { return gradient_violations + lp_violations + coulomb_violations; }
};

void to_json(nlohmann::json& j, const RearrangementBattery& b);

RearrangementBattery rearrangement_battery(const GridPtr& grid, double p, std::size_t count, std::uint64_t seed);

}  // namespace choquard
