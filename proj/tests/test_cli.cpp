#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "weakjoint/cli.hpp"

using namespace weakjoint;
using namespace weakjoint::cli;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    const fs::path p = fs::temp_directory_path() / ("weakjoint_test_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t line_count(const std::string& text) {
    std::size_t n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

OperatorSpecFile pauli_spec() {
    OperatorSpecFile spec;
    spec.dimension = 2;
    qlinalg::Matrix sx(2, 2), sz(2, 2);
    sx << 0, 1, 1, 0;
    sz << 1, 0, 0, -1;
    spec.operators.push_back({"sx", qlinalg::Operator(sx), true});
    spec.operators.push_back({"sz", qlinalg::Operator(sz), true});
    spec.pair = {"sx", "sz"};
    return spec;
}

}  // namespace

TEST_CASE("operator spec round trip preserves matrices") {
    const auto dir = temp_dir("spec");
    std::mt19937_64 rng(2718);
    std::normal_distribution<double> dist;

    OperatorSpecFile spec;
    spec.dimension = 4;
    qlinalg::Matrix m(4, 4);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) m(r, c) = qlinalg::cd(dist(rng), dist(rng));
    spec.operators.push_back({"random", qlinalg::Operator(m), false});
    spec.targets.emplace_back("random", qlinalg::cd(0.25, -1.5));

    const auto path = (dir / "spec.json").string();
    write_operator_spec(spec, path);
    const auto loaded = read_operator_spec(path);
    CHECK(loaded.dimension == 4);
    REQUIRE(loaded.operators.size() == 1);
    CHECK((loaded.operators[0].op.mat - m).cwiseAbs().maxCoeff() <= 1e-15);
    REQUIRE(loaded.targets.size() == 1);
    CHECK(loaded.targets[0].second == qlinalg::cd(0.25, -1.5));
}

TEST_CASE("spec parse diagnostics") {
    const auto dir = temp_dir("parse");
    {
        std::ofstream out(dir / "bad.json");
        out << "{\"operators\": []}";
    }
    CHECK_THROWS_WITH_AS(read_operator_spec((dir / "bad.json").string()),
                         doctest::Contains("dimension"), std::runtime_error);
    {
        std::ofstream out(dir / "bad2.json");
        out << "{\"dimension\": 2, \"operators\": [{\"name\": \"a\", \"matrix\": [[[0,0]]]}]}";
    }
    CHECK_THROWS_WITH_AS(read_operator_spec((dir / "bad2.json").string()),
                         doctest::Contains("expected 2 rows"), std::runtime_error);
    CHECK_THROWS_AS(read_operator_spec((dir / "missing.json").string()), std::runtime_error);
}

TEST_CASE("nogo run: exit code, row contract, determinism") {
    const auto dir = temp_dir("nogo");
    write_operator_spec(pauli_spec(), (dir / "paulis.json").string());

    RunConfig config;
    config.subcommand = "nogo";
    config.spec_path = (dir / "paulis.json").string();
    config.out_dir = (dir / "out").string();
    config.alpha1 = 1.0;
    config.alpha2 = 1.0;
    config.n_theta = 61;

    CHECK(run(config) == kExitNegative);  // obstruction found
    const std::string csv = slurp(dir / "out" / "nogo_profile.csv");
    CHECK(line_count(csv) == 62);  // header + n_theta rows
    CHECK(csv.rfind("theta,beta,distance", 0) == 0);

    const std::string report1 = slurp(dir / "out" / "report.json");
    CHECK(run(config) == kExitNegative);
    CHECK(slurp(dir / "out" / "report.json") == report1);  // byte-identical

    // A pair with a common eigenvector is not obstructed.
    OperatorSpecFile shared;
    shared.dimension = 2;
    qlinalg::Matrix a1 = qlinalg::Matrix::Zero(2, 2), a2 = qlinalg::Matrix::Zero(2, 2);
    a1(0, 0) = 1.0;
    a2(0, 0) = 2.0;
    shared.operators.push_back({"a1", qlinalg::Operator(a1), true});
    shared.operators.push_back({"a2", qlinalg::Operator(a2), true});
    write_operator_spec(shared, (dir / "shared.json").string());
    config.spec_path = (dir / "shared.json").string();
    config.alpha1 = 1.0;
    config.alpha2 = 2.0;
    CHECK(run(config) == kExitOk);
}

TEST_CASE("assign run solves shipped-style targets") {
    const auto dir = temp_dir("assign");
    auto spec = pauli_spec();
    spec.targets.emplace_back("sx", qlinalg::cd(2.0, 0.0));
    spec.targets.emplace_back("sz", qlinalg::cd(3.0, 0.0));
    write_operator_spec(spec, (dir / "targets.json").string());

    RunConfig config;
    config.subcommand = "assign";
    config.spec_path = (dir / "targets.json").string();
    config.out_dir = (dir / "out").string();
    CHECK(run(config) == kExitOk);
    const std::string report = slurp(dir / "out" / "report.json");
    CHECK(report.find("\"realized\": true") != std::string::npos);
    CHECK(slurp(dir / "out" / "assign_weak_vector.csv").rfind("index,re,im", 0) == 0);

    // Contradictory targets produce the negative exit code.
    spec.targets.push_back({"sx", qlinalg::cd(5.0, 0.0)});
    write_operator_spec(spec, (dir / "bad.json").string());
    config.spec_path = (dir / "bad.json").string();
    CHECK(run(config) == kExitNegative);
}

TEST_CASE("kernel run emits the root table and rejects even degree") {
    const auto dir = temp_dir("kernel");
    RunConfig config;
    config.subcommand = "kernel";
    config.out_dir = (dir / "out").string();
    config.f_coeffs = {0.0, 0.0, 0.0, 1.0};
    config.z1_min = -2.0;
    config.z1_max = 2.0;
    config.z1_step = 0.5;
    CHECK(run(config) == kExitOk);
    const std::string csv = slurp(dir / "out" / "kernel_roots.csv");
    CHECK(csv.rfind("zeta1,u_root,residual", 0) == 0);
    CHECK(line_count(csv) == 10);  // header + 9 grid rows

    config.f_coeffs = {0.0, 0.0, 1.0};
    config.out_dir = (dir / "out2").string();
    CHECK(run(config) == kExitNegative);
}

TEST_CASE("weyl run verifies the phase-point identity") {
    const auto dir = temp_dir("weyl");
    RunConfig config;
    config.subcommand = "weyl";
    config.out_dir = (dir / "out").string();
    config.weyl_d = 5;
    config.zeta_i = {1, 3};
    config.eta_f = {2, 0};
    CHECK(run(config) == kExitOk);
    const std::string report = slurp(dir / "out" / "report.json");
    CHECK(report.find("\"weak_value_operator_is_phase_point\": true") != std::string::npos);
    CHECK(line_count(slurp(dir / "out" / "weyl_transform.csv")) == 26);
    CHECK(line_count(slurp(dir / "out" / "weyl_symbol.csv")) == 26);
}

TEST_CASE("approx run with the built-in spin pair") {
    const auto dir = temp_dir("approx");
    RunConfig config;
    config.subcommand = "approx";
    config.out_dir = (dir / "out").string();
    config.alpha1 = 0.3;
    config.alpha2 = -0.7;
    CHECK(run(config) == kExitOk);
    const std::string report = slurp(dir / "out" / "report.json");
    CHECK(report.find("\"s\": 2") != std::string::npos);
    CHECK(report.find("\"realized\": true") != std::string::npos);
}

TEST_CASE("infer-xp smoke run at reduced size") {
    const auto dir = temp_dir("inferxp");
    RunConfig config;
    config.subcommand = "infer-xp";
    config.out_dir = (dir / "out").string();
    config.d_values = {32};
    config.L = 32.0;
    config.fit_n = 8;
    config.pointer_n = 16;
    config.pointer_qmax = 5.0;
    CHECK(run(config) == kExitOk);
    const std::string pointer = slurp(dir / "out" / "infer_xp_pointer.csv");
    CHECK(pointer.rfind("pi1,pi2,probability", 0) == 0);
    CHECK(line_count(pointer) == 1 + 16 * 16);
    const std::string conv = slurp(dir / "out" / "infer_xp_convergence.csv");
    CHECK(line_count(conv) == 2);
    CHECK(slurp(dir / "out" / "report.json").find("\"back_action_suppressed\": true") !=
          std::string::npos);
}

TEST_CASE("unknown subcommand is an operational error") {
    RunConfig config;
    config.subcommand = "frobnicate";
    CHECK_THROWS_AS(run(config), std::runtime_error);
}
