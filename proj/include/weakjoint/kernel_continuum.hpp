#pragma once

#include <complex>
#include <vector>

#include "weakjoint/errors.hpp"

#include <Eigen/Dense>

namespace weakjoint::kernel {

using cd = std::complex<double>;

/// Real polynomial f(x) with ascending coefficients and nonzero leading
/// coefficient (trailing zeros are trimmed on construction).
struct PolynomialF {
    std::vector<double> coeffs;

    explicit PolynomialF(std::vector<double> c);
    int degree() const { return static_cast<int>(coeffs.size()) - 1; }
    double eval(double x) const;
};

/// g(u | zeta1) = (1/2) Integral_{-1}^{1} f(u - s zeta1 / 2) ds as a
/// polynomial in u for fixed zeta1. Only even powers of zeta1 enter.
struct GPolynomial {
    std::vector<double> coeffs;  // ascending in u
    double zeta1 = 0.0;

    int degree() const { return static_cast<int>(coeffs.size()) - 1; }
    double eval(double u) const;
    double deriv(double u) const;
};

/// Exact coefficient computation: the term c_m x^m contributes
/// c_m sum_{j even} binom(m,j) u^{m-j} (zeta1/2)^j / (j+1).
GPolynomial g_poly(const PolynomialF& f, double zeta1);

enum class Feasibility { Feasible, RejectedEvenDegree };

/// Feasible iff deg f is odd, which guarantees a real root of
/// g(u|zeta1) = phi for every zeta1 and phi.
Feasibility feasibility(const PolynomialF& f);

/// All real roots of a polynomial (companion-matrix eigenvalues with
/// imaginary tolerance 1e-9, Newton-polished), ascending.
std::vector<double> real_roots(const std::vector<double>& ascending_coeffs);

/// Tracks the real branch u_phi(zeta1) of g(u|zeta1) = phi along the grid:
/// the smallest-|u| real root at the first point (ties broken toward
/// smaller u), then nearest-root continuation. Every value satisfies
/// |g(u|zeta1) - phi| <= 1e-10 (1 + |phi|). Throws RootTrackingBreak when
/// consecutive roots jump by more than max_jump.
std::vector<double> root_branch(const PolynomialF& f, double phi,
                                const std::vector<double>& zeta1_grid, double max_jump = 1.0);

/// w(zeta) = exp(i (u_phi(zeta1) zeta2 - kappa zeta1)) on the product grid.
struct WeakTransformSolution {
    std::vector<double> zeta1;
    std::vector<double> zeta2;
    std::vector<double> roots;   // u_phi per zeta1
    Eigen::MatrixXcd values;     // (zeta1 index, zeta2 index)
};

WeakTransformSolution weak_transform_solution(const PolynomialF& f, double kappa, double phi,
                                              const std::vector<double>& zeta1_grid,
                                              const std::vector<double>& zeta2_grid);

struct QuadratureSample {
    double t1 = 0.0, t2 = 0.0;
    cd integral;
    cd expected;
    double residual = 0.0;
};

/// Two-tier verification of the defining kernel identity.
/// Tier (a): |g(u_phi(z1)|z1) - phi| across the grid (the delta-reduction
/// of the kernel integral). Tier (b): regularized double quadrature of the
/// kernel against the solution, with the regularization strength and
/// truncation bounds reported alongside the residuals.
struct SolutionResiduals {
    std::vector<double> algebraic;    // per zeta1 grid point
    double max_algebraic = 0.0;
    std::vector<QuadratureSample> quadrature;
    double max_quadrature = 0.0;
    double epsilon = 0.0;             // Gaussian regularization strength
    double zeta2_halfwidth = 0.0;
    double u_halfwidth = 0.0;
};

SolutionResiduals verify_solution(const PolynomialF& f, double kappa, double phi,
                                  const std::vector<std::pair<double, double>>& t_samples,
                                  const std::vector<double>& zeta1_grid,
                                  double epsilon = 1e-3);

}  // namespace weakjoint::kernel
