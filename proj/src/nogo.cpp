#include "weakjoint/nogo.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace weakjoint::nogo {

ObservablePair::ObservablePair(Operator a1_, Operator a2_)
    : a1(std::move(a1_)), a2(std::move(a2_)) {
    if (a1.dim() != a2.dim())
        throw std::invalid_argument("observable pair must share dimension");
    if (!a1.is_hermitian() || !a2.is_hermitian())
        throw NonHermitianInput("observable pair must be Hermitian");
}

Matrix ObservablePair::b_theta(double theta) const {
    return std::cos(theta) * a1.mat + std::sin(theta) * a2.mat;
}

ObstructionProfile btheta_spectrum_sweep(const ObservablePair& pair, double alpha1,
                                         double alpha2, int n_theta) {
    if (n_theta < 3) throw std::invalid_argument("theta sweep needs at least 3 points");
    ObstructionProfile profile;
    profile.thetas.resize(n_theta);
    profile.beta.resize(n_theta);
    profile.spectra.resize(n_theta);
    profile.distance.resize(n_theta);

    std::vector<bool> above(n_theta, false);
    for (int t = 0; t < n_theta; ++t) {
        const double theta = std::numbers::pi * t / (n_theta - 1);
        profile.thetas[t] = theta;
        profile.beta[t] = alpha1 * std::cos(theta) + alpha2 * std::sin(theta);

        Eigen::SelfAdjointEigenSolver<Matrix> es(pair.b_theta(theta));
        const auto& ev = es.eigenvalues();
        profile.spectra[t].assign(ev.data(), ev.data() + ev.size());

        double dist = std::numeric_limits<double>::infinity();
        double norm = 0.0;
        for (double b : profile.spectra[t]) {
            dist = std::min(dist, std::abs(profile.beta[t] - b));
            norm = std::max(norm, std::abs(b));
        }
        profile.distance[t] = dist;
        above[t] = dist > 1e-8 * std::max(norm, 1e-300);
    }

    // Widest contiguous window where the distance clears the tolerance.
    const double spacing = std::numbers::pi / (n_theta - 1);
    int run = 0;
    for (int t = 0; t <= n_theta; ++t) {
        if (t < n_theta && above[t]) {
            ++run;
        } else {
            if (run > 1) profile.worst_window = std::max(profile.worst_window, (run - 1) * spacing);
            run = 0;
        }
    }
    profile.infeasible = profile.worst_window >= std::numbers::pi / n_theta;
    return profile;
}

double MinimalPolynomial::eval(double z) const {
    double acc = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * z + *it;
    return acc;
}

MinimalPolynomial minimal_polynomial(const Operator& b) {
    if (!b.is_hermitian()) throw NonHermitianInput("minimal polynomial needs a Hermitian operator");
    Eigen::SelfAdjointEigenSolver<Matrix> es(b.mat, Eigen::EigenvaluesOnly);
    std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + b.dim());
    std::sort(ev.begin(), ev.end());

    const double norm = std::max(std::abs(ev.front()), std::abs(ev.back()));
    const double gap_tol = 1e-8 * std::max(norm, 1e-300);

    MinimalPolynomial mp;
    double cluster_sum = ev[0];
    int cluster_count = 1;
    for (std::size_t i = 1; i <= ev.size(); ++i) {
        if (i < ev.size() && ev[i] - ev[i - 1] <= gap_tol) {
            cluster_sum += ev[i];
            ++cluster_count;
            continue;
        }
        mp.roots.push_back(cluster_sum / cluster_count);
        if (i < ev.size()) {
            // Distinct but barely: flag instead of silently merging.
            if (ev[i] - ev[i - 1] <= 100.0 * gap_tol) mp.near_degenerate = true;
            cluster_sum = ev[i];
            cluster_count = 1;
        }
    }

    mp.coeffs = {1.0};
    for (double r : mp.roots) {
        std::vector<double> next(mp.coeffs.size() + 1, 0.0);
        for (std::size_t i = 0; i < mp.coeffs.size(); ++i) {
            next[i] -= r * mp.coeffs[i];
            next[i + 1] += mp.coeffs[i];
        }
        mp.coeffs = std::move(next);
    }
    return mp;
}

std::vector<Operator> symmetrized_operators(const ObservablePair& pair, int k) {
    if (k < 0) throw std::invalid_argument("power must be nonnegative");
    const int d = pair.dim();
    const int m = k + 1;

    // Chebyshev nodes keep the Vandermonde system well conditioned.
    std::vector<double> nodes(m);
    for (int i = 0; i < m; ++i)
        nodes[i] = std::cos((2.0 * i + 1.0) * std::numbers::pi / (2.0 * m));

    Eigen::MatrixXd vander(m, m);
    Matrix samples(m, d * d);  // row i holds vec((A1 t_i + A2)^k)
    for (int i = 0; i < m; ++i) {
        for (int l = 0; l < m; ++l) vander(i, l) = std::pow(nodes[i], l);
        Matrix base = nodes[i] * pair.a1.mat + pair.a2.mat;
        Matrix power = Matrix::Identity(d, d);
        for (int p = 0; p < k; ++p) power = (power * base).eval();
        samples.row(i) = Eigen::Map<const Eigen::VectorXcd>(power.data(), d * d).transpose();
    }

    Matrix coeffs = vander.lu().solve(Eigen::MatrixXd::Identity(m, m)).cast<cd>() * samples;

    std::vector<Operator> out;
    out.reserve(m);
    double binom = 1.0;
    for (int l = 0; l < m; ++l) {
        const Eigen::VectorXcd flat = coeffs.row(l).transpose();
        Matrix s = Eigen::Map<const Matrix>(flat.data(), d, d);
        out.emplace_back(Matrix(s / binom));
        binom = binom * (k - l) / (l + 1);
    }
    return out;
}

weakcore::AssignmentProblem approx_assignment_problem(const ObservablePair& pair,
                                                      double alpha1, double alpha2, int s,
                                                      weakcore::BasisPtr basis) {
    weakcore::AssignmentProblem prob;
    prob.basis = std::move(basis);
    std::vector<Operator> all;
    for (int k = 0; k < s; ++k) {
        auto sym = symmetrized_operators(pair, k);
        for (int l = 0; l <= k; ++l) {
            prob.targets.emplace_back(sym[l],
                                      std::pow(alpha1, l) * std::pow(alpha2, k - l));
            all.push_back(sym[l]);
        }
    }

    const int m = static_cast<int>(all.size());
    Matrix gram(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            gram(i, j) = (all[i].mat.adjoint() * all[j].mat).trace();
    Eigen::JacobiSVD<Matrix> svd(gram);
    if (svd.singularValues().minCoeff() <= 1e-8)
        throw DependentSymmetrizedSet("symmetrized operators are linearly dependent");
    return prob;
}

weakcore::PrePostEnsemble approx_assignment(const ObservablePair& pair, double alpha1,
                                            double alpha2, int s, weakcore::BasisPtr basis) {
    const int deg0 = minimal_polynomial(Operator(pair.b_theta(0.0))).degree();
    const int deg45 = minimal_polynomial(Operator(pair.b_theta(std::numbers::pi / 4))).degree();
    if (s != deg0 || s != deg45)
        throw std::invalid_argument("s does not match the minimal polynomial degree");

    auto prob = approx_assignment_problem(pair, alpha1, alpha2, s, std::move(basis));
    return weakcore::realize_entangled(weakcore::solve_assignment(prob));
}

cd leading_correction(const ObservablePair& pair, double alpha1, double alpha2, double q1,
                      double q2) {
    const double qnorm = std::hypot(q1, q2);
    if (qnorm == 0.0) return 0.0;
    const double theta = std::atan2(q2, q1);
    const MinimalPolynomial mp = minimal_polynomial(Operator(pair.b_theta(theta)));
    const int s = mp.degree();
    const double beta = alpha1 * std::cos(theta) + alpha2 * std::sin(theta);

    double factorial = 1.0;
    for (int i = 2; i <= s; ++i) factorial *= i;
    cd i_pow_s = 1.0;
    for (int i = 0; i < s; ++i) i_pow_s *= cd(0.0, 1.0);
    return -i_pow_s * std::pow(qnorm, s) * mp.eval(beta) / factorial;
}

}  // namespace weakjoint::nogo
