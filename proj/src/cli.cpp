#include "weakjoint/cli.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "weakjoint/jointmeas.hpp"
#include "weakjoint/kernel_continuum.hpp"
#include "weakjoint/nogo.hpp"
#include "weakjoint/weakcore.hpp"
#include "weakjoint/weyl_discrete.hpp"

namespace weakjoint::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;
using qlinalg::cd;
using qlinalg::Matrix;
using qlinalg::Operator;

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

json complex_to_json(const cd& z) { return json::array({z.real(), z.imag()}); }

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_to_json(m(r, c)));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& rows, int dim, const std::string& name) {
    if (!rows.is_array() || static_cast<int>(rows.size()) != dim)
        throw std::runtime_error("operator '" + name + "': expected " + std::to_string(dim) +
                                 " rows");
    Matrix m(dim, dim);
    for (int r = 0; r < dim; ++r) {
        const json& row = rows[r];
        if (!row.is_array() || static_cast<int>(row.size()) != dim)
            throw std::runtime_error("operator '" + name + "', row " + std::to_string(r) +
                                     ": expected " + std::to_string(dim) + " entries");
        for (int c = 0; c < dim; ++c) {
            const json& e = row[c];
            if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
                throw std::runtime_error("operator '" + name + "', entry (" + std::to_string(r) +
                                         "," + std::to_string(c) + "): expected [re, im]");
            m(r, c) = cd(e[0].get<double>(), e[1].get<double>());
        }
    }
    return m;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

json config_to_json(const RunConfig& c) {
    json j;
    j["subcommand"] = c.subcommand;
    j["spec_path"] = c.spec_path;
    j["threads"] = c.threads;
    j["d_values"] = c.d_values;
    j["L"] = c.L;
    j["x_minus"] = c.x_minus;
    j["p_plus"] = c.p_plus;
    j["x_plus"] = c.x_plus;
    j["p_minus"] = c.p_minus;
    j["sigma_env"] = c.sigma_env;
    j["fit_n"] = c.fit_n;
    j["fit_qmax"] = c.fit_qmax;
    j["pointer_n"] = c.pointer_n;
    j["pointer_qmax"] = c.pointer_qmax;
    j["spreads"] = c.spreads;
    j["method"] = c.method;
    j["d4"] = c.d4;
    j["L4"] = c.L4;
    j["fit4_n"] = c.fit4_n;
    j["fit4_qmax"] = c.fit4_qmax;
    j["pointer4_n"] = c.pointer4_n;
    j["pointer4_qmax"] = c.pointer4_qmax;
    j["pair_names"] = c.pair_names;
    j["alpha1"] = c.alpha1;
    j["alpha2"] = c.alpha2;
    j["n_theta"] = c.n_theta;
    j["weyl_d"] = c.weyl_d;
    j["zeta_i"] = {c.zeta_i[0], c.zeta_i[1]};
    j["eta_f"] = {c.eta_f[0], c.eta_f[1]};
    j["f_coeffs"] = c.f_coeffs;
    j["kappa"] = c.kappa;
    j["phi"] = c.phi;
    j["z1_min"] = c.z1_min;
    j["z1_max"] = c.z1_max;
    j["z1_step"] = c.z1_step;
    return j;
}

struct Emitter {
    fs::path dir;

    explicit Emitter(const std::string& out_dir) : dir(out_dir) {
        fs::create_directories(dir);
    }

    void csv(const std::string& name, const std::string& header,
             const std::vector<std::vector<double>>& rows) const {
        std::string text = header + "\n";
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (i) text += ',';
                text += fmt(row[i]);
            }
            text += '\n';
        }
        write_text(dir / name, text);
    }

    void report(const RunConfig& config, json results, json verdicts) const {
        json j;
        j["version"] = kVersion;
        j["experiment"] = config.subcommand;
        j["config"] = config_to_json(config);
        j["results"] = std::move(results);
        j["verdicts"] = std::move(verdicts);
        write_text(dir / "report.json", j.dump(2) + "\n");

        // Timestamps live in a sidecar so report.json stays byte-identical
        // across reruns of the same configuration.
        const auto now = std::chrono::system_clock::now();
        json meta;
        meta["timestamp_unix"] =
            std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
        write_text(dir / "meta.json", meta.dump(2) + "\n");
    }
};

jointmeas::EPRSelection selection_from(const RunConfig& c, double L) {
    jointmeas::EPRSelection sel;
    sel.x_minus = c.x_minus;
    sel.p_plus = c.p_plus;
    sel.x_plus = c.x_plus;
    sel.p_minus = c.p_minus;
    sel.sigma_env = c.sigma_env > 0.0 ? c.sigma_env : L / 8.0;
    return sel;
}

std::pair<nogo::ObservablePair, std::vector<std::string>> load_pair(const RunConfig& c) {
    if (c.spec_path.empty()) {
        // Built-in spin-1/2 pair (sigma_x/2, sigma_z/2).
        Matrix sx(2, 2), sz(2, 2);
        sx << 0, 0.5, 0.5, 0;
        sz << 0.5, 0, 0, -0.5;
        return {nogo::ObservablePair(Operator(sx), Operator(sz)), {"sx/2", "sz/2"}};
    }
    const OperatorSpecFile spec = read_operator_spec(c.spec_path);
    std::vector<std::string> names = c.pair_names;
    if (names.empty()) names = spec.pair;
    if (names.empty() && spec.operators.size() >= 2)
        names = {spec.operators[0].name, spec.operators[1].name};
    if (names.size() != 2)
        throw std::runtime_error("nogo/approx need an observable pair (--pair or spec 'pair')");
    return {nogo::ObservablePair(spec.find(names[0]), spec.find(names[1])), names};
}

int run_infer_xp(const RunConfig& c, const Emitter& out) {
    jointmeas::InferenceOptions opts;
    opts.d_values = c.d_values;
    opts.L = c.L;
    opts.fit_grid = jointmeas::InstrumentGrid(c.fit_n, c.fit_qmax, 2, {c.spreads[0], c.spreads[1]});
    opts.pointer_grid =
        jointmeas::InstrumentGrid(c.pointer_n, c.pointer_qmax, 2, {c.spreads[0], c.spreads[1]});
    opts.method = c.method == "spectral" ? jointmeas::KrausMethod::Spectral
                                         : jointmeas::KrausMethod::Split;
    opts.threads = c.threads;

    const auto report = jointmeas::canonical_inference_experiment(selection_from(c, c.L), opts);

    json rows = json::array();
    std::vector<std::vector<double>> conv;
    for (const auto& r : report.rows) {
        json jr;
        jr["d"] = r.d;
        jr["x_minus"] = r.sel.x_minus;
        jr["x_plus"] = r.sel.x_plus;
        jr["p_plus"] = r.sel.p_plus;
        jr["p_minus"] = r.sel.p_minus;
        jr["alpha"] = {r.alpha1, r.alpha2};
        jr["expected"] = {r.expected_x, r.expected_p};
        jr["requested"] = {r.requested_x, r.requested_p};
        jr["beta12_epr"] = r.beta12_epr;
        jr["beta12_naive"] = r.beta12_naive;
        jr["amplitude_flatness"] = r.flatness_epr;
        jr["fit_residual_rms"] = r.residual_epr;
        jr["pointer_mean"] = {r.pointer_mean1, r.pointer_mean2};
        jr["pointer_sigma"] = {r.pointer_sigma1, r.pointer_sigma2};
        jr["dual_spacing"] = {r.dual_spacing_x, r.dual_spacing_p};
        rows.push_back(std::move(jr));
        conv.push_back({static_cast<double>(r.d), r.alpha1, r.alpha2, r.beta12_epr,
                        r.beta12_naive, r.pointer_sigma1, r.pointer_sigma2});
    }
    out.csv("infer_xp_convergence.csv",
            "d,alpha1,alpha2,beta12_epr,beta12_naive,pointer_sigma1,pointer_sigma2", conv);

    const auto& dist = report.final_pointer;
    const auto pi = dist.grid.pi_values();
    std::vector<std::vector<double>> prows;
    prows.reserve(dist.p.size());
    for (std::size_t flat = 0; flat < dist.p.size(); ++flat) {
        const auto idx = dist.grid.decode(flat);
        prows.push_back({pi[idx[0]], pi[idx[1]], dist.p[flat]});
    }
    out.csv("infer_xp_pointer.csv", "pi1,pi2,probability", prows);

    const auto& last = report.rows.back();
    json verdicts;
    verdicts["back_action_suppressed"] =
        std::abs(last.beta12_epr) <= 0.05 * std::abs(last.beta12_naive);
    verdicts["alpha_within_dual_spacing"] =
        std::abs(last.alpha1 - last.requested_x) <= 1.5 * last.dual_spacing_x &&
        std::abs(last.alpha2 - last.requested_p) <= 1.5 * last.dual_spacing_p;

    json results;
    results["rows"] = std::move(rows);
    out.report(c, std::move(results), std::move(verdicts));
    return kExitOk;
}

int run_infer_xp4(const RunConfig& c, const Emitter& out) {
    jointmeas::FourVarOptions opts;
    opts.d = c.d4;
    opts.L = c.L4;
    opts.fit_grid = jointmeas::InstrumentGrid(c.fit4_n, c.fit4_qmax, 4, {0.5, 0.5, 0.5, 0.5});
    opts.pointer_n = c.pointer4_n;
    opts.pointer_q_max = c.pointer4_qmax;
    opts.threads = c.threads;

    const auto rep = jointmeas::four_variable_experiment(selection_from(c, c.L4), opts);

    json results;
    results["d"] = rep.d;
    results["alpha_fit"] = rep.alpha_fit;
    results["alpha_expected"] = rep.alpha_expected;
    json beta = json::array();
    for (int r = 0; r < 4; ++r) {
        json row = json::array();
        for (int col = 0; col < 4; ++col) row.push_back(rep.beta(r, col));
        beta.push_back(std::move(row));
    }
    results["beta"] = std::move(beta);
    results["amplitude_flatness"] = rep.flatness;
    results["fit_residual_rms"] = rep.residual;

    std::vector<std::vector<double>> sweep;
    json jsweep = json::array();
    bool four_ok = true;
    for (const auto& row : rep.sweep) {
        std::vector<double> line = row.spreads;
        line.insert(line.end(), row.sigma.begin(), row.sigma.end());
        line.push_back(row.four_product);
        sweep.push_back(std::move(line));
        json jr;
        jr["spreads"] = row.spreads;
        jr["sigma"] = row.sigma;
        jr["four_product"] = row.four_product;
        jsweep.push_back(std::move(jr));
        four_ok = four_ok && row.four_product >= 0.25;
    }
    results["sweep"] = std::move(jsweep);
    out.csv("infer_xp4_sweep.csv",
            "dpi1,dpi2,dpi3,dpi4,sigma1,sigma2,sigma3,sigma4,four_product", sweep);

    json verdicts;
    verdicts["crossed_pairs"] = std::abs(rep.beta(0, 3) - 0.5) <= 0.02 &&
                                std::abs(rep.beta(1, 2) - 0.5) <= 0.02;
    verdicts["direct_pairs_clean"] =
        std::abs(rep.beta(0, 1)) <= 0.02 && std::abs(rep.beta(2, 3)) <= 0.02;
    verdicts["four_product_at_least_quarter"] = four_ok;
    out.report(c, std::move(results), std::move(verdicts));
    return kExitOk;
}

int run_nogo(const RunConfig& c, const Emitter& out) {
    auto [pair, names] = load_pair(c);
    const auto profile = nogo::btheta_spectrum_sweep(pair, c.alpha1, c.alpha2, c.n_theta);

    std::vector<std::vector<double>> rows;
    double min_d = std::numeric_limits<double>::infinity(), max_d = 0.0;
    for (std::size_t i = 0; i < profile.thetas.size(); ++i) {
        rows.push_back({profile.thetas[i], profile.beta[i], profile.distance[i]});
        min_d = std::min(min_d, profile.distance[i]);
        max_d = std::max(max_d, profile.distance[i]);
    }
    out.csv("nogo_profile.csv", "theta,beta,distance", rows);

    json results;
    results["pair"] = names;
    results["alpha"] = {c.alpha1, c.alpha2};
    results["n_theta"] = c.n_theta;
    results["min_distance"] = min_d;
    results["max_distance"] = max_d;
    results["worst_window"] = profile.worst_window;
    json verdicts;
    verdicts["infeasible"] = profile.infeasible;
    out.report(c, std::move(results), std::move(verdicts));
    return profile.infeasible ? kExitNegative : kExitOk;
}

int run_approx(const RunConfig& c, const Emitter& out) {
    auto [pair, names] = load_pair(c);
    const int s = nogo::minimal_polynomial(Operator(pair.b_theta(0.0))).degree();
    auto basis = weakcore::OperatorBasis::gell_mann(pair.dim());

    json results;
    results["pair"] = names;
    results["alpha"] = {c.alpha1, c.alpha2};
    results["s"] = s;
    json verdicts;
    try {
        const auto prob = nogo::approx_assignment_problem(pair, c.alpha1, c.alpha2, s, basis);
        const auto ens = nogo::approx_assignment(pair, c.alpha1, c.alpha2, s, basis);
        const auto residuals = weakcore::verify_assignment(ens, prob);

        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < residuals.per_target.size(); ++i)
            rows.push_back({static_cast<double>(i), std::abs(residuals.per_target[i])});
        out.csv("approx_residuals.csv", "target_index,abs_error", rows);

        results["max_residual"] = residuals.max_abs;
        results["n_targets"] = residuals.per_target.size();
        verdicts["realized"] = true;
        out.report(c, std::move(results), std::move(verdicts));
        return kExitOk;
    } catch (const Infeasible& e) {
        results["error"] = e.what();
        verdicts["realized"] = false;
        out.report(c, std::move(results), std::move(verdicts));
        return kExitNegative;
    } catch (const DependentSymmetrizedSet& e) {
        results["error"] = e.what();
        verdicts["realized"] = false;
        out.report(c, std::move(results), std::move(verdicts));
        return kExitNegative;
    }
}

int run_assign(const RunConfig& c, const Emitter& out) {
    if (c.spec_path.empty()) throw std::runtime_error("assign needs --spec with a target list");
    const OperatorSpecFile spec = read_operator_spec(c.spec_path);
    if (spec.targets.empty()) throw std::runtime_error("spec file has no targets");

    weakcore::AssignmentProblem prob;
    prob.basis = weakcore::OperatorBasis::gell_mann(spec.dimension);
    for (const auto& [name, value] : spec.targets) prob.targets.emplace_back(spec.find(name), value);

    json results;
    results["dimension"] = spec.dimension;
    results["n_targets"] = prob.targets.size();
    json verdicts;
    try {
        const auto w = weakcore::solve_assignment(prob);
        const auto ens = weakcore::realize_entangled(w);
        const auto residuals = weakcore::verify_assignment(ens, prob);

        std::vector<std::vector<double>> rows;
        for (Eigen::Index i = 0; i < w.w.size(); ++i)
            rows.push_back({static_cast<double>(i), w.w(i).real(), w.w(i).imag()});
        out.csv("assign_weak_vector.csv", "index,re,im", rows);

        results["max_residual"] = residuals.max_abs;
        results["w_norm_sq"] = w.w.squaredNorm();
        verdicts["realized"] = true;
        out.report(c, std::move(results), std::move(verdicts));
        return kExitOk;
    } catch (const Infeasible& e) {
        results["error"] = e.what();
        verdicts["realized"] = false;
        out.report(c, std::move(results), std::move(verdicts));
        return kExitNegative;
    }
}

int run_weyl(const RunConfig& c, const Emitter& out) {
    const weyl::DiscreteWeylBasis basis(c.weyl_d);
    const weyl::PhasePoint zi{c.zeta_i[0], c.zeta_i[1]};
    const weyl::PhasePoint ef{c.eta_f[0], c.eta_f[1]};

    const auto ens = weyl::epr_ensemble(basis, zi, ef);
    const auto w_op = weakcore::weak_value_operator(ens);
    const auto es = weyl::eta_s(basis, zi, ef);
    const auto delta = weyl::phase_point_op(basis, es);
    const double dev = (w_op.mat - delta.mat).cwiseAbs().maxCoeff();

    const Matrix transform = weyl::weyl_transform(basis, w_op);
    const Matrix symbol = weyl::weyl_symbol(basis, w_op);
    std::vector<std::vector<double>> trows, srows;
    for (int a = 0; a < basis.d; ++a) {
        for (int b = 0; b < basis.d; ++b) {
            trows.push_back({static_cast<double>(a), static_cast<double>(b),
                             transform(a, b).real(), transform(a, b).imag()});
            srows.push_back({static_cast<double>(a), static_cast<double>(b),
                             symbol(a, b).real(), symbol(a, b).imag()});
        }
    }
    out.csv("weyl_transform.csv", "zeta1,zeta2,re,im", trows);
    out.csv("weyl_symbol.csv", "eta1,eta2,re,im", srows);

    json results;
    results["d"] = basis.d;
    results["zeta_i"] = {zi.z1, zi.z2};
    results["eta_f"] = {ef.z1, ef.z2};
    results["eta_s"] = {es.z1, es.z2};
    results["phase_point_deviation"] = dev;
    results["overlap_modulus"] = std::abs(ens.overlap());
    json verdicts;
    verdicts["weak_value_operator_is_phase_point"] = dev <= 1e-10;
    out.report(c, std::move(results), std::move(verdicts));
    return kExitOk;
}

int run_kernel(const RunConfig& c, const Emitter& out) {
    const kernel::PolynomialF f(c.f_coeffs);
    json results;
    results["degree"] = f.degree();
    json verdicts;
    if (kernel::feasibility(f) == kernel::Feasibility::RejectedEvenDegree) {
        verdicts["feasible"] = false;
        out.csv("kernel_roots.csv", "zeta1,u_root,residual", {});
        out.report(c, std::move(results), std::move(verdicts));
        return kExitNegative;
    }
    verdicts["feasible"] = true;

    std::vector<double> grid;
    for (double z = c.z1_min; z <= c.z1_max + 1e-12; z += c.z1_step) grid.push_back(z);
    const std::vector<std::pair<double, double>> t_samples = {{0.5, 0.5}, {1.0, 0.3}, {0.25, 1.0}};
    const auto res = kernel::verify_solution(f, c.kappa, c.phi, t_samples, grid);
    const auto branch = kernel::root_branch(f, c.phi, grid);

    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < grid.size(); ++i)
        rows.push_back({grid[i], branch[i], res.algebraic[i]});
    out.csv("kernel_roots.csv", "zeta1,u_root,residual", rows);

    results["kappa"] = c.kappa;
    results["phi"] = c.phi;
    results["max_algebraic_residual"] = res.max_algebraic;
    results["max_quadrature_residual"] = res.max_quadrature;
    results["quadrature_epsilon"] = res.epsilon;
    results["quadrature_zeta2_halfwidth"] = res.zeta2_halfwidth;
    results["quadrature_u_halfwidth"] = res.u_halfwidth;
    json qs = json::array();
    for (const auto& s : res.quadrature) {
        json jq;
        jq["t"] = {s.t1, s.t2};
        jq["residual"] = s.residual;
        qs.push_back(std::move(jq));
    }
    results["quadrature_samples"] = std::move(qs);
    out.report(c, std::move(results), std::move(verdicts));
    return kExitOk;
}

int run_selftest(const RunConfig& c, const Emitter& out) {
    std::vector<std::pair<std::string, bool>> checks;
    std::mt19937_64 rng(20240811);
    auto randn = [&] {
        std::normal_distribution<double> dist;
        return dist(rng);
    };
    auto random_hermitian = [&](int d) {
        Matrix m(d, d);
        for (int r = 0; r < d; ++r)
            for (int col = 0; col < d; ++col) m(r, col) = cd(randn(), randn());
        return Operator(Matrix(0.5 * (m + m.adjoint())));
    };

    {
        // Discrete phase-space localization of the entangled selection.
        bool ok = true;
        for (int d : {3, 5}) {
            const weyl::DiscreteWeylBasis basis(d);
            const weyl::PhasePoint zi{1, d - 1}, ef{2, 1};
            const auto ens = weyl::epr_ensemble(basis, zi, ef);
            const auto w_op = weakcore::weak_value_operator(ens);
            const auto delta = weyl::phase_point_op(basis, weyl::eta_s(basis, zi, ef));
            ok = ok && (w_op.mat - delta.mat).cwiseAbs().maxCoeff() <= 1e-10;
            const auto a = random_hermitian(d);
            const auto symbol = weyl::weyl_symbol(basis, a);
            const auto es = weyl::eta_s(basis, zi, ef);
            ok = ok && std::abs(weakcore::weak_value(a, ens) - symbol(es.z1, es.z2)) <= 1e-10;
        }
        checks.emplace_back("weyl_phase_space_localization", ok);
    }
    {
        // Pauli-pair obstruction profile against the closed form.
        Matrix sx(2, 2), sz(2, 2);
        sx << 0, 1, 1, 0;
        sz << 1, 0, 0, -1;
        nogo::ObservablePair pair{Operator(sx), Operator(sz)};
        const auto profile = nogo::btheta_spectrum_sweep(pair, 1.0, 1.0, 61);
        bool ok = profile.infeasible;
        for (std::size_t i = 0; i < profile.thetas.size(); ++i) {
            const double expect =
                std::min(std::abs(profile.beta[i] - 1.0), std::abs(profile.beta[i] + 1.0));
            ok = ok && std::abs(profile.distance[i] - expect) <= 1e-12;
        }
        checks.emplace_back("nogo_pauli_profile", ok);
    }
    {
        // Assignment round trips at small dimension.
        bool ok = true;
        for (int d : {2, 3}) {
            auto basis = weakcore::OperatorBasis::gell_mann(d);
            weakcore::AssignmentProblem prob;
            prob.basis = basis;
            for (int t = 0; t < d; ++t)
                prob.targets.emplace_back(random_hermitian(d), cd(randn(), randn()));
            const auto ens = weakcore::realize_entangled(weakcore::solve_assignment(prob));
            ok = ok && weakcore::verify_assignment(ens, prob).max_abs <= 1e-8;
        }
        checks.emplace_back("assignment_round_trip", ok);
    }
    {
        // Cubic kernel branch satisfies the defining equation.
        const kernel::PolynomialF f({0.0, 0.0, 0.0, 1.0});
        std::vector<double> grid;
        for (double z = -5.0; z <= 5.0; z += 0.25) grid.push_back(z);
        const auto branch = kernel::root_branch(f, 2.0, grid);
        bool ok = true;
        for (std::size_t i = 0; i < grid.size(); ++i)
            ok = ok && std::abs(kernel::g_poly(f, grid[i]).eval(branch[i]) - 2.0) <= 1e-10;
        checks.emplace_back("kernel_cubic_branch", ok);
    }
    {
        // Grid canonical pair: plane waves are momentum eigenvectors.
        const qlinalg::CanonicalGrid grid(32, 16.0);
        auto [x, p] = qlinalg::grid_canonical_pair(grid);
        const auto xs = grid.positions();
        const auto ps = grid.momenta();
        bool ok = true;
        for (int k : {0, 1, 5, 31}) {
            qlinalg::Vector wave(grid.d);
            for (int j = 0; j < grid.d; ++j) wave(j) = std::polar(1.0, ps[k] * xs[j]);
            ok = ok && (p.mat * wave - ps[k] * wave).norm() / wave.norm() <= 1e-10;
        }
        ok = ok && x.is_hermitian() && p.is_hermitian();
        checks.emplace_back("grid_momentum_eigenvectors", ok);
    }

    bool all = true;
    json jchecks = json::array();
    for (const auto& [name, pass] : checks) {
        std::printf("[%s] %s\n", pass ? "PASS" : "FAIL", name.c_str());
        json jc;
        jc["name"] = name;
        jc["pass"] = pass;
        jchecks.push_back(std::move(jc));
        all = all && pass;
    }
    json results;
    results["checks"] = std::move(jchecks);
    json verdicts;
    verdicts["all_passed"] = all;
    out.report(c, std::move(results), std::move(verdicts));
    return all ? kExitOk : kExitError;
}

}  // namespace

const qlinalg::Operator& OperatorSpecFile::find(const std::string& name) const {
    for (const auto& entry : operators)
        if (entry.name == name) return entry.op;
    throw std::runtime_error("operator '" + name + "' not found in spec");
}

OperatorSpecFile read_operator_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open spec file " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error("spec file " + path + ": " + e.what());
    }

    OperatorSpecFile spec;
    if (!j.contains("dimension") || !j["dimension"].is_number_integer())
        throw std::runtime_error("spec file " + path + ": missing integer 'dimension'");
    spec.dimension = j["dimension"].get<int>();
    if (spec.dimension < 2) throw std::runtime_error("spec dimension must be >= 2");

    if (!j.contains("operators") || !j["operators"].is_array())
        throw std::runtime_error("spec file " + path + ": missing 'operators' array");
    for (const auto& e : j["operators"]) {
        NamedOperator op;
        op.name = e.at("name").get<std::string>();
        op.hermitian = e.value("hermitian", false);
        op.op = Operator(matrix_from_json(e.at("matrix"), spec.dimension, op.name));
        if (op.hermitian && !op.op.is_hermitian())
            throw std::runtime_error("operator '" + op.name + "' declared hermitian but is not");
        spec.operators.push_back(std::move(op));
    }

    if (j.contains("targets")) {
        for (const auto& e : j["targets"]) {
            const auto& v = e.at("value");
            spec.targets.emplace_back(e.at("operator").get<std::string>(),
                                      cd(v.at(0).get<double>(), v.at(1).get<double>()));
        }
    }
    if (j.contains("pair")) spec.pair = j["pair"].get<std::vector<std::string>>();
    return spec;
}

void write_operator_spec(const OperatorSpecFile& spec, const std::string& path) {
    json j;
    j["dimension"] = spec.dimension;
    json ops = json::array();
    for (const auto& entry : spec.operators) {
        json e;
        e["name"] = entry.name;
        e["hermitian"] = entry.hermitian;
        e["matrix"] = matrix_to_json(entry.op.mat);
        ops.push_back(std::move(e));
    }
    j["operators"] = std::move(ops);
    if (!spec.targets.empty()) {
        json ts = json::array();
        for (const auto& [name, value] : spec.targets) {
            json t;
            t["operator"] = name;
            t["value"] = complex_to_json(value);
            ts.push_back(std::move(t));
        }
        j["targets"] = std::move(ts);
    }
    if (!spec.pair.empty()) j["pair"] = spec.pair;
    write_text(path, j.dump(2) + "\n");
}

int run(const RunConfig& config) {
    const Emitter out(config.out_dir);
    if (config.subcommand == "infer-xp") return run_infer_xp(config, out);
    if (config.subcommand == "infer-xp4") return run_infer_xp4(config, out);
    if (config.subcommand == "nogo") return run_nogo(config, out);
    if (config.subcommand == "approx") return run_approx(config, out);
    if (config.subcommand == "assign") return run_assign(config, out);
    if (config.subcommand == "weyl") return run_weyl(config, out);
    if (config.subcommand == "kernel") return run_kernel(config, out);
    if (config.subcommand == "selftest") return run_selftest(config, out);
    throw std::runtime_error("unknown subcommand '" + config.subcommand + "'");
}

}  // namespace weakjoint::cli
