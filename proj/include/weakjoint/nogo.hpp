#pragma once

#include <complex>
#include <vector>

#include "weakjoint/qlinalg.hpp"
#include "weakjoint/weakcore.hpp"

namespace weakjoint::nogo {

using qlinalg::cd;
using qlinalg::Matrix;
using qlinalg::Operator;

/// Two Hermitian observables of equal dimension with (generically) no
/// common eigenstates.
struct ObservablePair {
    Operator a1;
    Operator a2;

    ObservablePair(Operator a1_, Operator a2_);
    int dim() const { return a1.dim(); }
    /// B_theta = A1 cos(theta) + A2 sin(theta).
    Matrix b_theta(double theta) const;
};

/// Distance of beta_theta = alpha1 cos(theta) + alpha2 sin(theta) from the
/// spectrum of B_theta, swept over theta in [0, pi].
struct ObstructionProfile {
    std::vector<double> thetas;
    std::vector<double> beta;
    std::vector<std::vector<double>> spectra;
    std::vector<double> distance;
    bool infeasible = false;
    // Widest contiguous theta window on which the distance exceeds the
    // spectral tolerance.
    double worst_window = 0.0;
};

/// Sweeps n_theta >= 3 points. The verdict is infeasible when the distance
/// stays above 1e-8 * ||B_theta|| on a contiguous window of width >=
/// pi / n_theta.
ObstructionProfile btheta_spectrum_sweep(const ObservablePair& pair, double alpha1,
                                         double alpha2, int n_theta);

/// Monic polynomial over the distinct eigenvalues of a Hermitian operator.
/// Coefficients are ascending: m(z) = c[0] + c[1] z + ... + z^degree.
struct MinimalPolynomial {
    std::vector<double> coeffs;
    std::vector<double> roots;  // distinct eigenvalues (cluster means)
    bool near_degenerate = false;

    int degree() const { return static_cast<int>(coeffs.size()) - 1; }
    double eval(double z) const;
};

MinimalPolynomial minimal_polynomial(const Operator& b);

/// Symmetrized operators S_{l,k-l} from the expansion
/// (A1 t + A2)^k = sum_l binom(k,l) t^l S_{l,k-l}, extracted by evaluating
/// the matrix polynomial at Chebyshev nodes and solving the Vandermonde
/// system. Element [l] of the result is S_{l,k-l}.
std::vector<Operator> symmetrized_operators(const ObservablePair& pair, int k);

/// Assignment problem sending S_{l,k-l} -> alpha1^l alpha2^{k-l} for all
/// k < s. Throws DependentSymmetrizedSet when the operators fail the
/// linear-independence check.
weakcore::AssignmentProblem approx_assignment_problem(const ObservablePair& pair,
                                                      double alpha1, double alpha2, int s,
                                                      weakcore::BasisPtr basis);

/// Solves and realizes the approximate assignment, returning the entangled
/// pre/postselection ensemble. s must equal the minimal-polynomial degree
/// of B_theta (checked at theta = 0 and pi/4).
weakcore::PrePostEnsemble approx_assignment(const ObservablePair& pair, double alpha1,
                                            double alpha2, int s, weakcore::BasisPtr basis);

/// Leading correction to the exponent of the weak value of
/// exp(i (A1 q1 + A2 q2)): -(i^s) |q|^s m_theta(beta_theta) / s! with
/// theta = atan2(q2, q1).
cd leading_correction(const ObservablePair& pair, double alpha1, double alpha2, double q1,
                      double q2);

}  // namespace weakjoint::nogo
