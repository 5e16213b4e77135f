#pragma once

#include <array>
#include <string>
#include <vector>

#include "weakjoint/qlinalg.hpp"

namespace weakjoint::cli {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes: 0 success, 1 operational error, 2 scientifically negative
// verdict (obstruction found, assignment infeasible, rejected f).
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNegative = 2;

struct NamedOperator {
    std::string name;
    qlinalg::Operator op;
    bool hermitian = false;
};

struct OperatorSpecFile {
    int dimension = 0;
    std::vector<NamedOperator> operators;
    std::vector<std::pair<std::string, qlinalg::cd>> targets;
    std::vector<std::string> pair;  // optional default pair for nogo/approx

    const qlinalg::Operator& find(const std::string& name) const;
};

OperatorSpecFile read_operator_spec(const std::string& path);
void write_operator_spec(const OperatorSpecFile& spec, const std::string& path);

struct RunConfig {
    std::string subcommand;
    std::string spec_path;
    std::string out_dir = "weakjoint-out";
    int threads = 0;

    // infer-xp
    std::vector<int> d_values = {32, 64, 128};
    double L = 64.0;
    double x_minus = 1.0, p_plus = 0.6, x_plus = 0.4, p_minus = -0.2;
    double sigma_env = 0.0;  // 0 selects L/8
    int fit_n = 16;
    double fit_qmax = 0.5;
    int pointer_n = 48;
    double pointer_qmax = 2.5;
    std::vector<double> spreads = {1.5, 1.5};
    std::string method = "split";

    // infer-xp4
    int d4 = 16;
    double L4 = 12.0;
    int fit4_n = 9;
    double fit4_qmax = 0.4;
    int pointer4_n = 21;
    double pointer4_qmax = 6.0;

    // nogo / approx / assign
    std::vector<std::string> pair_names;
    double alpha1 = 1.0, alpha2 = 1.0;
    int n_theta = 181;

    // weyl
    int weyl_d = 5;
    std::array<long long, 2> zeta_i = {1, 2};
    std::array<long long, 2> eta_f = {0, 1};

    // kernel
    std::vector<double> f_coeffs = {0.0, 0.0, 0.0, 1.0};
    double kappa = 0.0, phi = 2.0;
    double z1_min = -5.0, z1_max = 5.0, z1_step = 0.1;
};

/// Dispatches the configured experiment, writes report.json, meta.json and
/// the experiment's CSV tables into out_dir, and returns the exit code.
/// Operational failures propagate as exceptions.
int run(const RunConfig& config);

}  // namespace weakjoint::cli
