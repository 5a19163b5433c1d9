#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "choquard/cli.hpp"
#include "doctest.h"

using namespace choquard;
namespace fs = std::filesystem;

namespace {
fs::path scratch(const std::string& name) {
    fs::path d = fs::temp_directory_path() / "choquard_cli_tests" / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& f) {
    std::ifstream is(f, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

nlohmann::json load(const fs::path& f) { return nlohmann::json::parse(slurp(f)); }

int run(std::vector<std::string> args) { return cli::run_cli(args); }

int tool(const std::string& args) {
    const int status = std::system((std::string(CHOQUARD_TOOL) + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

bool all_pass(const nlohmann::json& doc) {
    for (const auto& c : doc.at("checks"))
        if (!c.at("pass").get<bool>()) return false;
    return true;
}

const fs::path& solved_p3() {
    static const fs::path d = [] {
        auto dir = scratch("solve_p3");
        REQUIRE(run({"solve", "--p", "3", "--out", dir.string()}) == 0);
        return dir;
    }();
    return d;
}
}  // namespace

TEST_CASE("solve writes a verified ground state") {
    const auto& d = solved_p3();
    for (const char* f : {"manifest.json", "ground_state.csv", "verify.json", "flow_ground_state.csv", "cross_check.json"})
        CHECK(fs::exists(d / f));
    CHECK(all_pass(load(d / "verify.json")));
    auto cross = load(d / "cross_check.json");
    CHECK(cross.at("all_pass") == true);
    CHECK(all_pass(cross.at("pair")));
    CHECK(all_pass(cross.at("flow_verification")));
    auto m = load(d / "manifest.json");
    CHECK(m.at("command") == "solve");
    CHECK(m.at("exit_code") == 0);
    CHECK(m.at("config").at("p") == 3.0);
    CHECK(m.contains("tool_version"));
    CHECK(slurp(d / "ground_state.csv").rfind("r,Q,A\n", 0) == 0);
}

TEST_CASE("identical runs give identical files") {
    auto d = scratch("solve_p3_again");
    REQUIRE(run({"solve", "--p", "3", "--out", d.string()}) == 0);
    for (const char* f : {"ground_state.csv", "verify.json", "flow_ground_state.csv", "cross_check.json"})
        CHECK(slurp(d / f) == slurp(solved_p3() / f));
    auto r = scratch("replay");
    CHECK(run({"replay", (d / "manifest.json").string(), "--out", r.string()}) == 0);
    CHECK(slurp(r / "ground_state.csv") == slurp(d / "ground_state.csv"));
    CHECK(slurp(r / "verify.json") == slurp(d / "verify.json"));
}

TEST_CASE("usage errors") {
    auto d = scratch("usage");
    CHECK(run({"solve", "--p", "5", "--out", d.string()}) == 64);
    CHECK(run({"solve", "--p", "1.5", "--out", d.string()}) == 64);
    CHECK(run({"minimize", "--p", "3", "--restarts", "0", "--out", d.string()}) == 64);
    CHECK(run({"frobnicate"}) == 64);
    CHECK(run({}) == 64);
    CHECK(tool("solve --p 5 --out " + d.string()) == 64);
    CHECK(tool("--version") == 0);
}

TEST_CASE("verify reproduces the solve verdict") {
    auto d = scratch("verify");
    fs::copy(solved_p3() / "ground_state.csv", d / "ground_state.csv");
    fs::copy(solved_p3() / "manifest.json", d / "manifest.json");
    CHECK(run({"verify", (d / "ground_state.csv").string()}) == 0);
    CHECK(slurp(d / "verify.json") == slurp(solved_p3() / "verify.json"));
    CHECK(fs::exists(d / "verify_manifest.json"));
}

TEST_CASE("verify rejects a corrupted profile") {
    auto d = scratch("corrupt");
    std::istringstream in(slurp(solved_p3() / "ground_state.csv"));
    std::ofstream out(d / "ground_state.csv");
    std::string line;
    std::getline(in, line);
    out << line << "\n";
    while (std::getline(in, line)) {
        std::istringstream row(line);
        std::string r, q, a;
        std::getline(row, r, ',');
        std::getline(row, q, ',');
        std::getline(row, a, ',');
        out << r << "," << std::stod(q) * (1 + 0.05 * std::exp(-std::stod(r))) << "," << a << "\n";
    }
    out.close();
    CHECK(run({"verify", (d / "ground_state.csv").string(), "--p", "3"}) == 3);
    auto doc = load(d / "verify.json");
    for (const auto& c : doc.at("checks"))
        if (c.at("name") == "pohozaev_deviation") CHECK_FALSE(c.at("pass").get<bool>());
}

TEST_CASE("verify rejects unreadable input") {
    auto d = scratch("empty");
    std::ofstream(d / "ground_state.csv").close();
    CHECK(run({"verify", (d / "ground_state.csv").string(), "--p", "3"}) == 65);
    std::ofstream(d / "bad.csv") << "r,Q,A\n0,1,1\n0.1,x,1\n0.2,0.5,1\n";
    CHECK(run({"verify", (d / "bad.csv").string(), "--p", "3"}) == 65);
}

TEST_CASE("minimize with restarts") {
    auto d = scratch("minimize");
    CHECK(run({"minimize", "--p", "2", "--restarts", "3", "--out", d.string()}) == 0);
    for (const char* f : {"restart_0.csv", "restart_2.csv", "restarts.json", "phi_matrix.json", "manifest.json"})
        CHECK(fs::exists(d / f));
    auto t = scratch("minimize_tent");
    CHECK(run({"minimize", "--p", "3", "--restarts", "1", "--seed-shape", "tent:2", "--out", t.string()}) == 0);
    CHECK(run({"minimize", "--p", "3", "--seed-shape", "box:1", "--out", t.string()}) == 64);
}

TEST_CASE("sweep collapses repeated exponents") {
    auto d = scratch("sweep");
    CHECK(run({"sweep", "--p", "3", "--p", "3", "--p", "2", "--no-cross-check", "--out", d.string()}) == 0);
    std::istringstream csv(slurp(d / "sweep.csv"));
    std::string line;
    std::size_t rows = 0;
    std::getline(csv, line);
    CHECK(line == "p,k,grad_sq,lp_mass,coulomb,W,C_GN,decay_exponent,status");
    while (std::getline(csv, line)) ++rows;
    CHECK(rows == 2);
}

TEST_CASE("rearrange-test writes its battery") {
    auto d = scratch("rearrange");
    const int code = run({"rearrange-test", "--p", "3", "--count", "5", "--out", d.string()});
    CHECK((code == 0 || code == 3));
    auto j = load(d / "rearrangement.json");
    CHECK(j.at("reports").size() == 5);
    CHECK(code == (j.at("violations").get<int>() == 0 ? 0 : 3));
}
