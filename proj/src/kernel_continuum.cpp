#include "weakjoint/kernel_continuum.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace weakjoint::kernel {

namespace {

double poly_eval(const std::vector<double>& c, double x) {
    double acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
    return acc;
}

double poly_deriv(const std::vector<double>& c, double x) {
    double acc = 0.0;
    for (std::size_t i = c.size(); i-- > 1;) acc = acc * x + c[i] * static_cast<double>(i);
    return acc;
}

}  // namespace

PolynomialF::PolynomialF(std::vector<double> c) : coeffs(std::move(c)) {
    while (coeffs.size() > 1 && coeffs.back() == 0.0) coeffs.pop_back();
    if (coeffs.empty() || coeffs.back() == 0.0)
        throw std::invalid_argument("polynomial needs a nonzero leading coefficient");
}

double PolynomialF::eval(double x) const { return poly_eval(coeffs, x); }

double GPolynomial::eval(double u) const { return poly_eval(coeffs, u); }
double GPolynomial::deriv(double u) const { return poly_deriv(coeffs, u); }

GPolynomial g_poly(const PolynomialF& f, double zeta1) {
    GPolynomial g;
    g.zeta1 = zeta1;
    g.coeffs.assign(f.coeffs.size(), 0.0);
    const double h = zeta1 / 2.0;
    for (std::size_t m = 0; m < f.coeffs.size(); ++m) {
        const double cm = f.coeffs[m];
        if (cm == 0.0) continue;
        double binom = 1.0;  // binom(m, j)
        double hj = 1.0;     // h^j
        for (std::size_t j = 0; j <= m; ++j) {
            if (j % 2 == 0) g.coeffs[m - j] += cm * binom * hj / (j + 1);
            binom = binom * static_cast<double>(m - j) / static_cast<double>(j + 1);
            hj *= h;
        }
    }
    return g;
}

Feasibility feasibility(const PolynomialF& f) {
    return (f.degree() % 2 == 1) ? Feasibility::Feasible : Feasibility::RejectedEvenDegree;
}

std::vector<double> real_roots(const std::vector<double>& ascending_coeffs) {
    std::vector<double> c = ascending_coeffs;
    while (c.size() > 1 && c.back() == 0.0) c.pop_back();
    const int n = static_cast<int>(c.size()) - 1;
    std::vector<double> roots;
    if (n <= 0) return roots;
    if (n == 1) {
        roots.push_back(-c[0] / c[1]);
        return roots;
    }

    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) companion(i, i - 1) = 1.0;
    for (int i = 0; i < n; ++i) companion(i, n - 1) = -c[i] / c[n];
    Eigen::EigenSolver<Eigen::MatrixXd> es(companion);

    for (int i = 0; i < n; ++i) {
        const cd lam = es.eigenvalues()(i);
        if (std::abs(lam.imag()) > 1e-9 * (1.0 + std::abs(lam.real()))) continue;
        double u = lam.real();
        // Newton polish against the full polynomial.
        for (int it = 0; it < 4; ++it) {
            const double fu = poly_eval(c, u);
            const double du = poly_deriv(c, u);
            if (du == 0.0) break;
            u -= fu / du;
        }
        roots.push_back(u);
    }
    std::sort(roots.begin(), roots.end());
    return roots;
}

std::vector<double> root_branch(const PolynomialF& f, double phi,
                                const std::vector<double>& zeta1_grid, double max_jump) {
    if (feasibility(f) != Feasibility::Feasible)
        throw std::invalid_argument("even-degree f admits no global real branch");
    if (zeta1_grid.empty()) return {};

    std::vector<double> branch;
    branch.reserve(zeta1_grid.size());
    const double tol = 1e-10 * (1.0 + std::abs(phi));

    for (std::size_t i = 0; i < zeta1_grid.size(); ++i) {
        GPolynomial g = g_poly(f, zeta1_grid[i]);
        std::vector<double> shifted = g.coeffs;
        shifted[0] -= phi;
        std::vector<double> roots = real_roots(shifted);
        if (roots.empty())
            throw Error("no real root of g(u|zeta1) = phi at zeta1 = " +
                        std::to_string(zeta1_grid[i]));

        double pick;
        if (i == 0) {
            // Smallest |u|; ties toward smaller u.
            pick = roots.front();
            for (double r : roots)
                if (std::abs(r) < std::abs(pick) - 1e-15 ||
                    (std::abs(std::abs(r) - std::abs(pick)) <= 1e-15 && r < pick))
                    pick = r;
        } else {
            pick = roots.front();
            for (double r : roots)
                if (std::abs(r - branch.back()) < std::abs(pick - branch.back())) pick = r;
            if (std::abs(pick - branch.back()) > max_jump)
                throw RootTrackingBreak("root jump " + std::to_string(std::abs(pick - branch.back())) +
                                        " exceeds continuity bound at zeta1 = " +
                                        std::to_string(zeta1_grid[i]));
        }
        if (std::abs(g.eval(pick) - phi) > tol)
            throw Error("root polish failed to meet residual tolerance");
        branch.push_back(pick);
    }
    return branch;
}

WeakTransformSolution weak_transform_solution(const PolynomialF& f, double kappa, double phi,
                                              const std::vector<double>& zeta1_grid,
                                              const std::vector<double>& zeta2_grid) {
    WeakTransformSolution sol;
    sol.zeta1 = zeta1_grid;
    sol.zeta2 = zeta2_grid;
    sol.roots = root_branch(f, phi, zeta1_grid);
    sol.values.resize(static_cast<Eigen::Index>(zeta1_grid.size()),
                      static_cast<Eigen::Index>(zeta2_grid.size()));
    for (std::size_t i = 0; i < zeta1_grid.size(); ++i)
        for (std::size_t j = 0; j < zeta2_grid.size(); ++j)
            sol.values(i, j) = std::polar(1.0, sol.roots[i] * zeta2_grid[j] - kappa * zeta1_grid[i]);
    return sol;
}

SolutionResiduals verify_solution(const PolynomialF& f, double kappa, double phi,
                                  const std::vector<std::pair<double, double>>& t_samples,
                                  const std::vector<double>& zeta1_grid, double epsilon) {
    SolutionResiduals out;
    out.epsilon = epsilon;

    const auto branch = root_branch(f, phi, zeta1_grid);
    out.algebraic.reserve(branch.size());
    for (std::size_t i = 0; i < branch.size(); ++i) {
        const double r = std::abs(g_poly(f, zeta1_grid[i]).eval(branch[i]) - phi);
        out.algebraic.push_back(r);
        out.max_algebraic = std::max(out.max_algebraic, r);
    }

    // Regularized kernel quadrature. The delta in the kernel eats the zeta1
    // integral, leaving a double integral over (u, zeta2) with the Gaussian
    // factor exp(-eps zeta2^2) making the oscillatory integral convergent.
    const double zeta2_hw = 4.0 / std::sqrt(epsilon);
    const double u_hw = 1.5;
    out.zeta2_halfwidth = zeta2_hw;
    out.u_halfwidth = u_hw;
    const int n_z = 1536;  // even, Simpson
    const int n_u = 1200;

    for (const auto& [t1, t2] : t_samples) {
        const double u0 = root_branch(f, phi, {t1}).front();
        const GPolynomial g = g_poly(f, t1);

        const double hu = 2.0 * u_hw / n_u;
        const double hz = 2.0 * zeta2_hw / n_z;
        cd outer = 0.0;
        for (int iu = 0; iu <= n_u; ++iu) {
            const double u = u0 - u_hw + iu * hu;
            // Inner Simpson over zeta2 of e^{i zeta2 (u0 - u)} e^{-eps zeta2^2}.
            cd inner = 0.0;
            for (int iz = 0; iz <= n_z; ++iz) {
                const double z2 = -zeta2_hw + iz * hz;
                const double wz = (iz == 0 || iz == n_z) ? 1.0 : (iz % 2 ? 4.0 : 2.0);
                inner += wz * std::polar(std::exp(-epsilon * z2 * z2), z2 * (u0 - u));
            }
            inner *= hz / 3.0;
            const double wu = (iu == 0 || iu == n_u) ? 1.0 : (iu % 2 ? 4.0 : 2.0);
            outer += wu * std::polar(1.0, g.eval(u) * t2) * inner;
        }
        outer *= hu / 3.0;

        QuadratureSample sample;
        sample.t1 = t1;
        sample.t2 = t2;
        sample.integral = outer * std::polar(1.0, -kappa * t1) / (2.0 * std::numbers::pi);
        sample.expected = std::polar(1.0, phi * t2 - kappa * t1);
        sample.residual = std::abs(sample.integral - sample.expected);
        out.quadrature.push_back(sample);
        out.max_quadrature = std::max(out.max_quadrature, sample.residual);
    }
    return out;
}

}  // namespace weakjoint::kernel
