#include "choquard/radial_core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "choquard/errors.hpp"

namespace choquard {

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;

void simpson_weights(const std::vector<double>& x, std::vector<double>& w, std::vector<double>& kink) {
    const std::size_t n = x.size();
    w.assign(n, 0.0);
    kink.assign(n, 0.0);
    const std::size_t intervals = n - 1;
    const std::size_t pairs = intervals / 2;
    for (std::size_t k = 0; k < pairs; ++k) {
        const std::size_t i = 2 * k;
        const double h0 = x[i + 1] - x[i];
        const double h1 = x[i + 2] - x[i + 1];
        const double s = h0 + h1;
        const double w0 = s * (2.0 * h0 - h1) / (6.0 * h0);
        const double w1 = s * s * s / (6.0 * h0 * h1);
        const double w2 = s * (2.0 * h1 - h0) / (6.0 * h1);
        w[i] += w0;
        w[i + 1] += w1;
        w[i + 2] += w2;
        // Simpson applied to |t - x[i+1]| versus its exact integral.
        kink[i + 1] = -0.5 * (0.5 * (h0 * h0 + h1 * h1) - w0 * h0 - w2 * h1);
    }
    if (intervals % 2 == 1) {
        const std::size_t i = n - 3;
        const double h0 = x[i + 1] - x[i];
        const double h1 = x[i + 2] - x[i + 1];
        const double s = h0 + h1;
        w[i] += -h1 * h1 * h1 / (6.0 * h0 * s);
        w[i + 1] += h1 * (h1 + 3.0 * h0) / (6.0 * h0);
        w[i + 2] += h1 * (2.0 * h1 + 3.0 * h0) / (6.0 * s);
    }
}

std::vector<double> dual_volumes(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<double> v(n);
    double lo = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double hi = i + 1 < n ? 0.5 * (x[i] + x[i + 1]) : x[i];
        v[i] = (hi * hi * hi - lo * lo * lo) / 3.0;
        lo = hi;
    }
    return v;
}

// Sum of stretch^k for k = 1..count.
double geometric_sum(double stretch, std::size_t count) {
    if (stretch == 1.0) return static_cast<double>(count);
    return stretch * std::expm1(static_cast<double>(count) * std::log(stretch)) / (stretch - 1.0);
}

std::vector<double> build_nodes(double h, std::size_t m, double stretch, std::size_t n, double r_max) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i <= m && i < n; ++i) x[i] = static_cast<double>(i) * h;
    double step = h;
    for (std::size_t i = m + 1; i < n; ++i) {
        step *= stretch;
        x[i] = x[i - 1] + step;
    }
    x[n - 1] = r_max;
    return x;
}

double hermite(double x0, double x1, double y0, double y1, double d0, double d1, double x) {
    const double h = x1 - x0;
    const double t = (x - x0) / h;
    const double t2 = t * t;
    const double t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * h * d0 + (-2 * t3 + 3 * t2) * y1 +
           (t3 - t2) * h * d1;
}

double limit_slope(double d, double left, double right) {
    if (left * right <= 0.0) return 0.0;
    if (d * left <= 0.0) return 0.0;
    const double cap = 3.0 * std::min(std::abs(left), std::abs(right));
    return std::abs(d) > cap ? std::copysign(cap, d) : d;
}

// Hyman-filtered parabolic slope at node i.
double node_slope(const std::vector<double>& x, const std::vector<double>& y, std::size_t i) {
    const std::size_t n = x.size();
    if (i == 0) {
        const double h0 = x[1] - x[0], h1 = x[2] - x[1];
        const double d0 = (y[1] - y[0]) / h0, d1 = (y[2] - y[1]) / h1;
        const double d = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (d * d0 <= 0.0) return 0.0;
        return std::abs(d) > 3.0 * std::abs(d0) ? 3.0 * d0 : d;
    }
    if (i == n - 1) {
        const double h0 = x[n - 2] - x[n - 3], h1 = x[n - 1] - x[n - 2];
        const double d0 = (y[n - 2] - y[n - 3]) / h0, d1 = (y[n - 1] - y[n - 2]) / h1;
        const double d = ((2 * h1 + h0) * d1 - h1 * d0) / (h0 + h1);
        if (d * d1 <= 0.0) return 0.0;
        return std::abs(d) > 3.0 * std::abs(d1) ? 3.0 * d1 : d;
    }
    const double h0 = x[i] - x[i - 1], h1 = x[i + 1] - x[i];
    const double d0 = (y[i] - y[i - 1]) / h0, d1 = (y[i + 1] - y[i]) / h1;
    const double d = (h1 * d0 + h0 * d1) / (h0 + h1);
    return limit_slope(d, d0, d1);
}

}  // namespace

RadialGrid::RadialGrid(std::vector<double> nodes, GridScheme scheme)
    : nodes_(std::move(nodes)), scheme_(scheme) {
    if (nodes_.size() < 16) throw InvalidArgument("RadialGrid: need at least 16 nodes");
    if (nodes_.front() != 0.0) throw InvalidArgument("RadialGrid: first node must be 0");
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
        if (!(nodes_[i] > nodes_[i - 1]) || !std::isfinite(nodes_[i]))
            throw InvalidArgument("RadialGrid: nodes must be finite and strictly increasing");
    }
    scheme_.r_max = nodes_.back();
    scheme_.n = nodes_.size();
    simpson_weights(nodes_, weights_, kink_);
    volumes_ = dual_volumes(nodes_);
}

std::size_t RadialGrid::locate(double r) const {
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), r);
    std::size_t i = it == nodes_.begin() ? 0 : static_cast<std::size_t>(it - nodes_.begin()) - 1;
    return std::min(i, nodes_.size() - 2);
}

GridPtr RadialGrid::scaled(double factor) const {
    if (!(factor > 0.0)) throw InvalidArgument("RadialGrid::scaled: factor must be positive");
    std::vector<double> x(nodes_);
    for (double& v : x) v *= factor;
    GridScheme s = scheme_;
    s.core_spacing *= factor;
    return std::make_shared<RadialGrid>(std::move(x), s);
}

GridPtr make_grid(double r_max, std::size_t n, double stretch, std::size_t core_intervals) {
    if (!(r_max > 0.0) || !std::isfinite(r_max)) throw InvalidArgument("make_grid: r_max must be positive");
    if (n < 16) throw InvalidArgument("make_grid: n must be at least 16");
    if (!(stretch >= 1.0) || !std::isfinite(stretch)) throw InvalidArgument("make_grid: stretch must be >= 1");
    const std::size_t intervals = n - 1;
    std::size_t m = stretch == 1.0 ? intervals : (core_intervals == 0 ? intervals / 10 : core_intervals);
    if (m > intervals) throw InvalidArgument("make_grid: core_intervals exceeds n - 1");
    const double h = r_max / (static_cast<double>(m) + geometric_sum(stretch, intervals - m));
    GridScheme scheme{r_max, n, stretch, h, m};
    return std::make_shared<RadialGrid>(build_nodes(h, m, stretch, n, r_max), scheme);
}

GridPtr make_grid_with_core(double r_max, std::size_t n, double h, std::size_t core_intervals) {
    if (!(r_max > 0.0)) throw InvalidArgument("make_grid_with_core: r_max must be positive");
    if (n < 16) throw InvalidArgument("make_grid_with_core: n must be at least 16");
    if (!(h > 0.0)) throw InvalidArgument("make_grid_with_core: spacing must be positive");
    const std::size_t intervals = n - 1;
    if (core_intervals > intervals) throw InvalidArgument("make_grid_with_core: core too long");
    const std::size_t tail = intervals - core_intervals;
    const double need = r_max / h - static_cast<double>(core_intervals);
    if (need < static_cast<double>(tail) * (1.0 - 1e-12))
        throw InvalidArgument("make_grid_with_core: spacing too large for r_max and n");
    double lo = 1.0, hi = 2.0;
    while (geometric_sum(hi, tail) < need) hi = 1.0 + 2.0 * (hi - 1.0);
    for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
        const double mid = 0.5 * (lo + hi);
        (geometric_sum(mid, tail) < need ? lo : hi) = mid;
    }
    const double stretch = tail == 0 ? 1.0 : 0.5 * (lo + hi);
    GridScheme scheme{r_max, n, stretch, h, core_intervals};
    return std::make_shared<RadialGrid>(build_nodes(h, core_intervals, stretch, n, r_max), scheme);
}

GridPtr default_grid() {
    static const GridPtr grid = make_grid_with_core(200.0, 4096, 0.01, 400);
    return grid;
}

RadialProfile::RadialProfile(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
    if (!grid_) throw InvalidArgument("RadialProfile: null grid");
    if (values_.size() != grid_->size()) throw InvalidArgument("RadialProfile: length does not match grid");
    for (double v : values_)
        if (!std::isfinite(v)) throw InvalidArgument("RadialProfile: non-finite value");
}

RadialProfile RadialProfile::scaled(double c) const {
    std::vector<double> v(values_);
    for (double& x : v) x *= c;
    return RadialProfile(grid_, std::move(v));
}

RadialProfile indicator(const GridPtr& grid, double a, double b) {
    return sample(grid, [a, b](double r) {
        if (r > a && r < b) return 1.0;
        if ((r == a && a > 0.0) || r == b) return 0.5;
        if (r == a) return 1.0;
        return 0.0;
    });
}

void require_same_grid(const RadialProfile& a, const RadialProfile& b, const char* who) {
    if (a.grid_ptr() == b.grid_ptr()) return;
    if (!a.grid().same_nodes(b.grid())) throw InvalidArgument(std::string(who) + ": profiles live on different grids");
}

double integrate(const RadialProfile& f) {
    const auto& w = f.grid().weights();
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += w[i] * f[i];
    return s;
}

double integrate_radial(const RadialProfile& f) {
    const auto& w = f.grid().weights();
    const auto& x = f.grid().nodes();
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += w[i] * x[i] * x[i] * f[i];
    return kFourPi * s;
}

double lp_norm(const RadialProfile& u, double p) {
    if (!(p >= 1.0) || !std::isfinite(p)) throw InvalidArgument("lp_norm: p must be in [1, inf)");
    const auto& w = u.grid().weights();
    const auto& x = u.grid().nodes();
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += w[i] * x[i] * x[i] * std::pow(std::abs(u[i]), p);
    return std::pow(kFourPi * s, 1.0 / p);
}

RadialProfile derivative(const RadialProfile& u) {
    const auto& x = u.grid().nodes();
    const auto& y = u.values();
    const std::size_t n = x.size();
    std::vector<double> d(n);
    {
        const double h0 = x[1] - x[0], h1 = x[2] - x[1];
        d[0] = -(2 * h0 + h1) / (h0 * (h0 + h1)) * y[0] + (h0 + h1) / (h0 * h1) * y[1] -
               h0 / (h1 * (h0 + h1)) * y[2];
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double h0 = x[i] - x[i - 1], h1 = x[i + 1] - x[i];
        d[i] = -h1 / (h0 * (h0 + h1)) * y[i - 1] + (h1 - h0) / (h0 * h1) * y[i] +
               h0 / (h1 * (h0 + h1)) * y[i + 1];
    }
    {
        const double h0 = x[n - 2] - x[n - 3], h1 = x[n - 1] - x[n - 2];
        d[n - 1] = h1 / (h0 * (h0 + h1)) * y[n - 3] - (h0 + h1) / (h0 * h1) * y[n - 2] +
                   (2 * h1 + h0) / (h1 * (h0 + h1)) * y[n - 1];
    }
    return RadialProfile(u.grid_ptr(), std::move(d));
}

double h1_seminorm(const RadialProfile& u) {
    const RadialProfile d = derivative(u);
    const auto& w = u.grid().weights();
    const auto& x = u.grid().nodes();
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += w[i] * x[i] * x[i] * d[i] * d[i];
    return std::sqrt(kFourPi * s);
}

RadialProfile radial_laplacian(const RadialProfile& u) {
    const auto& x = u.grid().nodes();
    const auto& vol = u.grid().volumes();
    const auto& y = u.values();
    const std::size_t n = x.size();
    std::vector<double> out(n);
    double flux_in = 0.0;  // r_{i-1/2}^2 u'(r_{i-1/2})
    for (std::size_t i = 0; i < n; ++i) {
        double flux_out = 0.0;
        if (i + 1 < n) {
            const double rm = 0.5 * (x[i] + x[i + 1]);
            flux_out = rm * rm * (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
        }
        out[i] = (flux_out - flux_in) / vol[i];
        flux_in = flux_out;
    }
    return RadialProfile(u.grid_ptr(), std::move(out));
}

double interpolate(const RadialProfile& u, double r, Extrapolation mode) {
    const auto& x = u.grid().nodes();
    const auto& y = u.values();
    const double eps = 1e-12 * x.back();
    if (r < 0.0 || r > x.back() + eps) {
        switch (mode) {
            case Extrapolation::Forbid:
                throw InvalidArgument("interpolate: radius outside grid without extrapolation mode");
            case Extrapolation::Zero:
                return 0.0;
            case Extrapolation::Hold:
                return r < 0.0 ? y.front() : y.back();
        }
    }
    r = std::clamp(r, 0.0, x.back());
    const std::size_t i = u.grid().locate(r);
    if (r == x[i]) return y[i];
    return hermite(x[i], x[i + 1], y[i], y[i + 1], node_slope(x, y, i), node_slope(x, y, i + 1), r);
}

RadialProfile resample(const RadialProfile& u, const GridPtr& target, Extrapolation mode) {
    if (u.grid_ptr() == target) return u;
    const auto& x = u.grid().nodes();
    const auto& y = u.values();
    const double limit = x.back() * (1.0 + 1e-12);
    if (mode == Extrapolation::Forbid && target->r_max() > limit)
        throw InvalidArgument("resample: target extends beyond source without extrapolation mode");
    std::vector<double> slopes(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) slopes[i] = node_slope(x, y, i);
    std::vector<double> out(target->size());
    for (std::size_t k = 0; k < out.size(); ++k) {
        const double r = (*target)[k];
        if (r > limit) {
            out[k] = mode == Extrapolation::Zero ? 0.0 : y.back();
            continue;
        }
        const double rc = std::min(r, x.back());
        const std::size_t i = u.grid().locate(rc);
        out[k] = rc == x[i] ? y[i] : hermite(x[i], x[i + 1], y[i], y[i + 1], slopes[i], slopes[i + 1], rc);
    }
    return RadialProfile(target, std::move(out));
}

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_csv(std::ostream& os, const RadialProfile& u, const std::string& value_name) {
    os << "r," << value_name << '\n';
    for (std::size_t i = 0; i < u.size(); ++i) os << format_double(u.r(i)) << ',' << format_double(u[i]) << '\n';
}

void write_csv(const std::string& path, const RadialProfile& u, const std::string& value_name) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_csv: cannot open " + path);
    write_csv(os, u, value_name);
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

}  // namespace

CsvTable read_csv_table(std::istream& is) {
    CsvTable t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!trim(line).empty()) break;
    }
    if (trim(line).empty()) throw DataFormatError("empty CSV input", lineno);
    for (auto& h : split(trim(line))) t.header.push_back(trim(h));
    t.columns.resize(t.header.size());
    while (std::getline(is, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto cells = split(trim(line));
        if (cells.size() != t.header.size())
            throw DataFormatError("line " + std::to_string(lineno) + ": expected " +
                                      std::to_string(t.header.size()) + " fields, found " +
                                      std::to_string(cells.size()),
                                  lineno);
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const std::string cell = trim(cells[c]);
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(cell, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (cell.empty() || used != cell.size() || !std::isfinite(v))
                throw DataFormatError("line " + std::to_string(lineno) + ": field '" + t.header[c] +
                                          "' is not a finite number: '" + cell + "'",
                                      lineno);
            t.columns[c].push_back(v);
        }
    }
    if (t.columns.empty() || t.columns[0].empty()) throw DataFormatError("CSV has no data rows", lineno);
    return t;
}

GridPtr grid_from_nodes(const std::vector<double>& r) {
    GridScheme s;
    return std::make_shared<RadialGrid>(r, s);
}

RadialProfile read_csv(std::istream& is) {
    CsvTable t = read_csv_table(is);
    if (t.header.size() != 2 || t.header[0] != "r") throw DataFormatError("expected header r,<name>", 1);
    GridPtr g;
    try {
        g = grid_from_nodes(t.columns[0]);
    } catch (const InvalidArgument& e) {
        throw DataFormatError(std::string("invalid r column: ") + e.what(), 0);
    }
    return RadialProfile(g, std::move(t.columns[1]));
}

}  // namespace choquard
