#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace choquard {

// Uniform core of `core_intervals` cells of width `core_spacing`, followed
// by cells growing geometrically with ratio `stretch`.
struct GridScheme {
    double r_max = 0.0;
    std::size_t n = 0;
    double stretch = 1.0;
    double core_spacing = 0.0;
    std::size_t core_intervals = 0;
};

// Node set on [0, r_max] with two quadrature rules.
//
// weights(): composite Simpson over consecutive interval pairs (exact for
// quadratics on every pair, cubics on equal-width pairs); an odd trailing
// interval uses the three-point end formula. Used for every measurement.
//
// volumes(): ∫ s^2 ds over the dual cell [r_{i-1/2}, r_{i+1/2}] (clipped to
// [0, r_max]). This measure has no odd/even alternation, which the
// variational discretization in functionals needs.
//
// kink(): correction that makes node-kernel quadrature of s^2/max(r_i, s)
// consistent at the node r_i where the kernel has a derivative jump.
class RadialGrid {
public:
    RadialGrid(std::vector<double> nodes, GridScheme scheme);

    std::size_t size() const noexcept { return nodes_.size(); }
    double r_max() const noexcept { return nodes_.back(); }
    const std::vector<double>& nodes() const noexcept { return nodes_; }
    double operator[](std::size_t i) const { return nodes_[i]; }
    const std::vector<double>& weights() const noexcept { return weights_; }
    const std::vector<double>& volumes() const noexcept { return volumes_; }
    const std::vector<double>& kink() const noexcept { return kink_; }
    const GridScheme& scheme() const noexcept { return scheme_; }

    // Index of the last node <= r (clamped to [0, n-2]).
    std::size_t locate(double r) const;

    // Same nodes, each multiplied by `factor` > 0.
    std::shared_ptr<const RadialGrid> scaled(double factor) const;

    bool same_nodes(const RadialGrid& other) const noexcept { return nodes_ == other.nodes_; }

private:
    std::vector<double> nodes_;
    std::vector<double> weights_;
    std::vector<double> volumes_;
    std::vector<double> kink_;
    GridScheme scheme_;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

// core_intervals = 0 selects (n - 1) / 10 when stretch > 1.
GridPtr make_grid(double r_max, std::size_t n, double stretch, std::size_t core_intervals = 0);

// Uniform spacing `h` on [0, h * core_intervals], geometric beyond, with the
// stretch solved so that the last node lands on r_max.
GridPtr make_grid_with_core(double r_max, std::size_t n, double h, std::size_t core_intervals);

// n = 4096, r_max = 200, h = 0.01 on [0, 4].
GridPtr default_grid();

class RadialProfile {
public:
    RadialProfile(GridPtr grid, std::vector<double> values);

    const GridPtr& grid_ptr() const noexcept { return grid_; }
    const RadialGrid& grid() const noexcept { return *grid_; }
    const std::vector<double>& values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    double r(std::size_t i) const { return (*grid_)[i]; }

    RadialProfile scaled(double c) const;

private:
    GridPtr grid_;
    std::vector<double> values_;
};

template <class F>
RadialProfile sample(const GridPtr& grid, F&& f) {
    std::vector<double> v(grid->size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f((*grid)[i]);
    return RadialProfile(grid, std::move(v));
}

// Indicator of [a, b] with the half value at nodes that coincide with a
// jump, which is the midpoint convention that keeps Simpson exact.
RadialProfile indicator(const GridPtr& grid, double a, double b);

void require_same_grid(const RadialProfile& a, const RadialProfile& b, const char* who);

// ∫_0^{r_max} f(s) ds with the Simpson weights.
double integrate(const RadialProfile& f);
// 4π ∫ f(s) s^2 ds with the Simpson weights.
double integrate_radial(const RadialProfile& f);

double lp_norm(const RadialProfile& u, double p);

// Three-point nonuniform first derivative, one-sided at both ends.
RadialProfile derivative(const RadialProfile& u);

double h1_seminorm(const RadialProfile& u);

// Finite-volume r^{-2}(r^2 u')' with midpoint face radii and dual-cell
// volumes; exact for quadratics, including the origin node. The last node
// uses a zero outward flux.
RadialProfile radial_laplacian(const RadialProfile& u);

enum class Extrapolation { Forbid, Zero, Hold };

// Monotone piecewise-cubic Hermite interpolant of u at r: three-point
// parabolic slopes passed through the Hyman monotonicity filter.
double interpolate(const RadialProfile& u, double r, Extrapolation mode = Extrapolation::Forbid);

RadialProfile resample(const RadialProfile& u, const GridPtr& target,
                       Extrapolation mode = Extrapolation::Forbid);

void write_csv(std::ostream& os, const RadialProfile& u, const std::string& value_name = "value");
void write_csv(const std::string& path, const RadialProfile& u,
               const std::string& value_name = "value");

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;
};

// Strict numeric CSV with a header row; throws DataFormatError naming the
// offending line.
CsvTable read_csv_table(std::istream& is);

// Grid rebuilt from the r column of a table (must start at 0, increase).
GridPtr grid_from_nodes(const std::vector<double>& r);

// Parses `r,<name>` CSV. No scheme information survives the round trip.
RadialProfile read_csv(std::istream& is);

std::string format_double(double x);

}  // namespace choquard
