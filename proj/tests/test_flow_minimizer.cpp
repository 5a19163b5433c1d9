#include <cmath>
#include <map>

#include "choquard/errors.hpp"
#include "choquard/flow_minimizer.hpp"
#include "choquard/shooting_solver.hpp"
#include "choquard/verification.hpp"
#include "doctest.h"

using namespace choquard;

namespace {
FlowConfig config(double p, const std::string& seed = "gaussian:1.5") {
    FlowConfig c;
    c.p = p;
    c.seed_shape = SeedDescriptor::parse(seed);
    return c;
}

const GroundState& shooting_state(double p) {
    static std::map<double, GroundState> cache;
    auto it = cache.find(p);
    if (it == cache.end()) {
        ShootingConfig c;
        c.p = p;
        it = cache.emplace(p, *solve_shooting(c, default_grid()).ground_state).first;
    }
    return it->second;
}

const FlowResult& flow_p3() {
    static const FlowResult r = minimize_weinstein(config(3, "gaussian:1"));
    return r;
}
}  // namespace

TEST_CASE("seed descriptors") {
    auto g = SeedDescriptor::parse("gaussian:2.5");
    CHECK(g.shape == SeedShape::Gaussian);
    CHECK(g.width == 2.5);
    auto t = SeedDescriptor::parse("tent:2");
    CHECK(t.shape == SeedShape::Tent);
    CHECK(SeedDescriptor::parse(t.describe()).width == 2.0);
    for (const char* bad : {"", "gaussian:", "gaussian:-1", "box:1", "tent:x"})
        CHECK_THROWS_AS(SeedDescriptor::parse(bad), InvalidArgument);
}

TEST_CASE("config validation") {
    auto c = config(5.0);
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = config(3);
    c.tolerance = 0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = config(3);
    c.max_iterations = -1;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    CHECK(config(3).resolved_grid()->nodes() == default_flow_grid()->nodes());
}

TEST_CASE("flow from a Gaussian converges to the shooting ground state") {
    const auto& r = flow_p3();
    CHECK(r.stopping_reason == "tolerance");
    CHECK(r.gradient_norm < 1e-5);
    for (double x : r.u.values()) CHECK(x >= 0.0);
    CHECK(r.u.values().back() == 0.0);
    for (std::size_t i = 1; i < r.history.size(); ++i) CHECK(r.history[i] <= r.history[i - 1]);
    auto gs = ground_state_from_flow(normalize_to_EL(r.u, 3), 3, "");
    auto probe = uniqueness_probe(shooting_state(3), gs);
    CHECK(probe.sup < 1e-3 * probe.q0);
    CHECK(pohozaev_report(gs).max_deviation < 1e-3);
}

TEST_CASE("the shooting state is nearly stationary") {
    auto c = config(3);
    c.grid = default_grid();
    auto r = minimize_weinstein_from(c, shooting_state(3).Q);
    CHECK(r.iterations <= 10);
    CHECK(r.stopping_reason == "tolerance");
    // Only the Dirichlet cut of the r^-2 tail at r = 200 moves it.
    auto gs = ground_state_from_flow(normalize_to_EL(r.u, 3), 3, "");
    auto probe = uniqueness_probe(shooting_state(3), gs);
    CHECK(probe.sup < 1e-3 * probe.q0);
}

TEST_CASE("amplitude of the seed does not matter") {
    auto c = config(3, "gaussian:1");
    c.seed_shape.amplitude = 10.0;
    auto r = minimize_weinstein(c);
    auto a = normalize_to_EL(r.u, 3).v, b = normalize_to_EL(flow_p3().u, 3).v;
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    CHECK(worst < 1e-4 * b[0]);
}

TEST_CASE("iteration cap raises NonConvergence with the last iterate") {
    auto c = config(3);
    c.max_iterations = 3;
    try {
        minimize_weinstein(c);
        FAIL("expected NonConvergence");
    } catch (const NonConvergence& e) {
        CHECK(e.last().iterations == 3);
        CHECK(e.last().stopping_reason == "max_iterations");
    }
}

TEST_CASE("perturbed seeds") {
    auto c = config(3);
    auto a = perturbed_seed(c, 0), b = perturbed_seed(c, 0), d = perturbed_seed(c, 1);
    CHECK(a.values() == b.values());
    CHECK(a.values() != d.values());
    auto s = seed_profile(c);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - s[i]) <= 0.2 * s[i] + 1e-15);
    CHECK_THROWS_AS(perturbed_restarts(c, 1), InvalidArgument);
}

TEST_CASE("restarts agree pairwise and are deterministic") {
    for (double p : {2.0, 3.0}) {
        auto c = config(p);
        auto runs = perturbed_restarts(c, 3);
        REQUIRE(runs.size() == 3);
        std::vector<GroundState> states;
        for (const auto& r : runs) states.push_back(ground_state_from_flow(r.normalized, p, ""));
        for (std::size_t i = 0; i < states.size(); ++i)
            for (std::size_t j = i + 1; j < states.size(); ++j) {
                auto probe = uniqueness_probe(states[i], states[j]);
                CHECK(probe.sup < 1e-3 * probe.q0);
            }
        if (p == 3.0) {
            auto again = perturbed_restarts(c, 2);
            CHECK(again[0].flow.u.values() == runs[0].flow.u.values());
            CHECK(again[1].flow.u.values() == runs[1].flow.u.values());
        }
    }
}

TEST_CASE("manifest carries config and result") {
    auto j = flow_manifest(config(3, "gaussian:1"), flow_p3());
    CHECK(j.dump().find("gaussian") != std::string::npos);
    CHECK(j.dump().find("iterations") != std::string::npos);
}
