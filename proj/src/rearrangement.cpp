#include "choquard/rearrangement.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numbers>

#include "choquard/prng.hpp"
#include "choquard/riesz_potential.hpp"

namespace choquard {

namespace {

constexpr double kBall = 4.0 * std::numbers::pi / 3.0;

struct Segment {
    double r0, r1, y0, y1;
    double lo() const { return std::min(y0, y1); }
    double hi() const { return std::max(y0, y1); }
    double full() const { return r1 * r1 * r1 - r0 * r0 * r0; }

    // ∫ over {s in [r0, r1] : linear interpolant > a} of 3 s^2 ds.
    double above(double a) const {
        const bool in0 = y0 > a, in1 = y1 > a;
        if (in0 && in1) return full();
        if (!in0 && !in1) return 0.0;
        const double s = r0 + (a - y0) / (y1 - y0) * (r1 - r0);
        return in0 ? s * s * s - r0 * r0 * r0 : r1 * r1 * r1 - s * s * s;
    }
};

std::vector<Segment> segments(const RadialProfile& u) {
    const auto& x = u.grid().nodes();
    std::vector<Segment> s(u.size() - 1);
    for (std::size_t i = 0; i + 1 < u.size(); ++i) s[i] = Segment{x[i], x[i + 1], u[i], u[i + 1]};
    return s;
}

}  // namespace

double distribution(const RadialProfile& u, double a) {
    double v = 0.0;
    for (const Segment& s : segments(u)) v += s.above(a);
    return kBall * v;
}

DistributionFunction distribution_function(const RadialProfile& u, const std::vector<double>& levels) {
    DistributionFunction d{levels, {}};
    std::sort(d.levels.begin(), d.levels.end(), std::greater<>());
    const auto segs = segments(u);
    for (double a : d.levels) {
        double v = 0.0;
        for (const Segment& s : segs) v += s.above(a);
        d.measures.push_back(kBall * v);
    }
    return d;
}

RadialProfile schwarz_rearrange(const RadialProfile& u) {
    const auto segs = segments(u);
    std::vector<double> L(u.values());
    std::sort(L.begin(), L.end(), std::greater<>());
    L.erase(std::unique(L.begin(), L.end()), L.end());
    const std::size_t m = L.size();
    auto index_of = [&](double y) {  // L is descending
        return static_cast<std::size_t>(std::lower_bound(L.begin(), L.end(), y, std::greater<>()) - L.begin());
    };

    // mu[k] = μ(L[k]) / (4π/3). A segment is full for levels below its
    // minimum and partial on [min, max), i.e. for k in [first, last].
    struct Span {
        std::size_t first, last;
        const Segment* seg;
    };
    std::vector<Span> spans;
    std::vector<double> mu(m, 0.0), full_from(m + 1, 0.0);
    for (const Segment& s : segs) {
        const std::size_t kmin = index_of(s.lo());
        full_from[kmin + 1] += s.full();
        if (s.lo() < s.hi()) {
            const std::size_t first = index_of(s.hi()) + 1;
            spans.push_back(Span{first, kmin, &s});
            for (std::size_t k = first; k <= kmin; ++k) mu[k] += s.above(L[k]);
        }
    }
    std::vector<double> below(m, 0.0);  // total of segments full in band k
    double acc = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        acc += full_from[k];
        below[k] = acc;
        mu[k] += acc;
    }
    std::sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) { return a.first < b.first; });

    // Targets increase with r, so bands are visited in increasing order and
    // the active set is maintained by a sweep. Band k is (L[k], L[k-1]).
    const auto& x = u.grid().nodes();
    std::vector<double> out(u.size());
    std::size_t band = 0, next_span = 0;
    std::vector<const Span*> active;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double V = x[i] * x[i] * x[i];
        const std::size_t k = static_cast<std::size_t>(std::upper_bound(mu.begin(), mu.end(), V) - mu.begin());
        if (k == 0) {
            out[i] = L[0];
            continue;
        }
        if (k >= m) {
            out[i] = L[m - 1];
            continue;
        }
        if (k != band) {
            band = k;
            while (next_span < spans.size() && spans[next_span].first <= k) active.push_back(&spans[next_span++]);
            std::erase_if(active, [k](const Span* sp) { return sp->last < k; });
        }
        const double constant = below[k - 1] + full_from[k];
        auto measure = [&](double a) {
            double v = constant;
            for (const Span* sp : active) v += sp->seg->above(a);
            return v;
        };
        double lo = L[k], hi = L[k - 1];
        if (measure(hi) <= V) {
            for (int it = 0; it < 200 && hi - lo > 2.0 * std::numeric_limits<double>::epsilon() * hi; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (measure(mid) > V) lo = mid;
                else hi = mid;
            }
        }
        out[i] = hi;
    }
    return RadialProfile(u.grid_ptr(), std::move(out));
}

void to_json(nlohmann::json& j, const RearrangementReport& r) {
    j = nlohmann::json{{"p", r.p},
                       {"grad_sq", r.grad_sq},
                       {"grad_sq_star", r.grad_sq_star},
                       {"lp_norm", r.lp},
                       {"lp_norm_star", r.lp_star},
                       {"coulomb", r.coulomb},
                       {"coulomb_star", r.coulomb_star},
                       {"gradient_slack", r.gradient_slack},
                       {"lp_slack", r.lp_slack},
                       {"coulomb_slack", r.coulomb_slack},
                       {"gradient_ok", r.gradient_ok},
                       {"lp_ok", r.lp_ok},
                       {"coulomb_ok", r.coulomb_ok}};
}

RearrangementReport rearrangement_report(const RadialProfile& u, double p) {
    const RadialProfile star = schwarz_rearrange(u);
    auto powp = [p](const RadialProfile& v) {
        std::vector<double> f(v.size());
        for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::pow(std::abs(v[i]), p);
        return RadialProfile(v.grid_ptr(), std::move(f));
    };
    RearrangementReport r;
    r.p = p;
    const double g = h1_seminorm(u), gs = h1_seminorm(star);
    r.grad_sq = g * g;
    r.grad_sq_star = gs * gs;
    r.lp = lp_norm(u, p);
    r.lp_star = lp_norm(star, p);
    const RadialProfile f = powp(u), fs = powp(star);
    r.coulomb = coulomb_form(f, f);
    r.coulomb_star = coulomb_form(fs, fs);
    r.gradient_ok = r.grad_sq_star <= (1.0 + r.gradient_slack) * r.grad_sq;
    r.lp_ok = std::abs(r.lp_star - r.lp) <= r.lp_slack * r.lp;
    r.coulomb_ok = r.coulomb_star >= (1.0 - r.coulomb_slack) * r.coulomb;
    return r;
}

RadialProfile random_bumps(const GridPtr& grid, std::uint64_t seed, std::size_t index) {
    auto rng = Xorshift64Star::derived(seed, index);
    const int count = static_cast<int>(rng.uniform_int(1, 4));
    double c[4], w[4], a[4];
    for (int b = 0; b < count; ++b) {
        c[b] = rng.uniform(0.0, 8.0);
        w[b] = rng.uniform(0.3, 2.0);
        a[b] = rng.uniform(0.2, 1.5);
    }
    return sample(grid, [&](double r) {
        double t = 0.0;
        for (int b = 0; b < count; ++b) {
            const double z = (r - c[b]) / w[b];
            t += a[b] * std::exp(-z * z);
        }
        return t;
    });
}

void to_json(nlohmann::json& j, const RearrangementBattery& b) {
    j = nlohmann::json{{"p", b.p},
                       {"seed", b.seed},
                       {"count", b.reports.size()},
                       {"violations", b.violations()},
                       {"gradient_violations", b.gradient_violations},
                       {"lp_violations", b.lp_violations},
                       {"coulomb_violations", b.coulomb_violations},
                       {"worst_gradient", b.worst_gradient},
                       {"worst_lp", b.worst_lp},
                       {"worst_coulomb", b.worst_coulomb},
                       {"reports", b.reports}};
}

RearrangementBattery rearrangement_battery(const GridPtr& grid, double p, std::size_t count, std::uint64_t seed) {
    RearrangementBattery b;
    b.p = p;
    b.seed = seed;
    for (std::size_t k = 0; k < count; ++k) {
        const RearrangementReport r = rearrangement_report(random_bumps(grid, seed, k), p);
        b.gradient_violations += !r.gradient_ok;
        b.lp_violations += !r.lp_ok;
        b.coulomb_violations += !r.coulomb_ok;
        b.worst_gradient = std::max(b.worst_gradient, r.grad_sq_star / r.grad_sq - 1.0);
        b.worst_lp = std::max(b.worst_lp, std::abs(r.lp_star / r.lp - 1.0));
        b.worst_coulomb = std::max(b.worst_coulomb, 1.0 - r.coulomb_star / r.coulomb);
        b.reports.push_back(r);
    }
    return b;
}

}  // namespace choquard
