#include <CLI11.hpp>

#include <cstdio>
#include <exception>

#include "weakjoint/cli.hpp"

int main(int argc, char** argv) {
    using weakjoint::cli::RunConfig;
    RunConfig config;

    CLI::App app{"weakjoint: joint-measurement inference experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", weakjoint::cli::kVersion);

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--out", config.out_dir, "output directory");
        sub->add_option("--threads", config.threads,
                        "worker threads (0 = hardware concurrency; WEAKJOINT_THREADS overrides)");
    };

    auto* infer = app.add_subcommand("infer-xp", "two-instrument canonical inference run");
    add_common(infer);
    infer->add_option("--d", config.d_values, "system grid sizes (convergence table)");
    infer->add_option("--L", config.L, "grid length");
    infer->add_option("--x-minus", config.x_minus);
    infer->add_option("--p-plus", config.p_plus);
    infer->add_option("--x-plus", config.x_plus);
    infer->add_option("--p-minus", config.p_minus);
    infer->add_option("--sigma-env", config.sigma_env, "envelope width (0 = L/8)");
    infer->add_option("--fit-n", config.fit_n);
    infer->add_option("--fit-qmax", config.fit_qmax);
    infer->add_option("--pointer-n", config.pointer_n);
    infer->add_option("--pointer-qmax", config.pointer_qmax);
    infer->add_option("--spreads", config.spreads, "pointer spreads (two values)")
        ->expected(2);
    infer->add_option("--kraus", config.method, "kraus evaluation: split | spectral")
        ->check(CLI::IsMember({"split", "spectral"}));

    auto* infer4 = app.add_subcommand("infer-xp4", "four-instrument run with crossed back-action");
    add_common(infer4);
    infer4->add_option("--d", config.d4, "system grid size");
    infer4->add_option("--L", config.L4, "grid length");
    infer4->add_option("--x-minus", config.x_minus);
    infer4->add_option("--p-plus", config.p_plus);
    infer4->add_option("--x-plus", config.x_plus);
    infer4->add_option("--p-minus", config.p_minus);
    infer4->add_option("--sigma-env", config.sigma_env, "envelope width (0 = L/8)");
    infer4->add_option("--fit-n", config.fit4_n);
    infer4->add_option("--fit-qmax", config.fit4_qmax);
    infer4->add_option("--pointer-n", config.pointer4_n);
    infer4->add_option("--pointer-qmax", config.pointer4_qmax);

    auto* nogo = app.add_subcommand("nogo", "finite-dimensional obstruction sweep");
    add_common(nogo);
    nogo->add_option("--spec", config.spec_path, "operator spec JSON")->required();
    nogo->add_option("--pair", config.pair_names, "two operator names")->expected(2);
    nogo->add_option("--alpha", [&config](const std::vector<std::string>& vals) {
            config.alpha1 = std::stod(vals.at(0));
            config.alpha2 = std::stod(vals.at(1));
            return true;
        },
        "target values alpha1 alpha2")->expected(2);
    nogo->add_option("--n-theta", config.n_theta);

    auto* approx = app.add_subcommand("approx", "approximate spin assignment");
    add_common(approx);
    approx->add_option("--spec", config.spec_path, "operator spec JSON (default spin-1/2 pair)");
    approx->add_option("--pair", config.pair_names, "two operator names")->expected(2);
    approx->add_option("--alpha", [&config](const std::vector<std::string>& vals) {
            config.alpha1 = std::stod(vals.at(0));
            config.alpha2 = std::stod(vals.at(1));
            return true;
        },
        "assigned weak values alpha1 alpha2")->expected(2);

    auto* assign = app.add_subcommand("assign", "solve and realize a weak-value assignment");
    add_common(assign);
    assign->add_option("--spec", config.spec_path, "operator spec JSON with targets")->required();

    auto* weyl = app.add_subcommand("weyl", "discrete phase-space tables");
    add_common(weyl);
    weyl->add_option("--d", config.weyl_d, "odd dimension >= 3");
    weyl->add_option("--zeta-i", config.zeta_i, "initial translation label")->expected(2);
    weyl->add_option("--eta-f", config.eta_f, "final phase-point label")->expected(2);

    auto* kern = app.add_subcommand("kernel", "continuum kernel solution tables");
    add_common(kern);
    kern->add_option("--f", config.f_coeffs, "ascending coefficients of f(x)");
    kern->add_option("--kappa", config.kappa);
    kern->add_option("--phi", config.phi);
    kern->add_option("--z1-min", config.z1_min);
    kern->add_option("--z1-max", config.z1_max);
    kern->add_option("--z1-step", config.z1_step);

    auto* self = app.add_subcommand("selftest", "run the built-in invariant battery");
    add_common(self);

    CLI11_PARSE(app, argc, argv);

    config.subcommand = app.get_subcommands().front()->get_name();
    if (config.threads == 0) {
        if (const char* env = std::getenv("WEAKJOINT_THREADS")) config.threads = std::atoi(env);
    }

    try {
        return weakjoint::cli::run(config);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return weakjoint::cli::kExitError;
    }
}
