#pragma once

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <utility>
#include <vector>

#include "weakjoint/errors.hpp"

namespace weakjoint::qlinalg {

using cd = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

/// Dense complex square matrix with a declared subsystem factorization.
/// Index order over subsystems is fixed system-major lexicographic: for
/// factors (d0, d1, ...) the composite index is  i = ((i0*d1 + i1)*d2 + ...).
struct Operator {
    Matrix mat;
    std::vector<int> factors;

    Operator() = default;
    explicit Operator(Matrix m);
    Operator(Matrix m, std::vector<int> f);

    int dim() const { return static_cast<int>(mat.rows()); }
    bool is_hermitian(double rel_tol = 1e-12) const;
    bool is_unitary(double tol = 1e-10) const;

    static Operator identity(int d);
};

/// State vector on a factorized Hilbert space. Normalized to 1 on
/// construction unless `normalized = false` is requested explicitly.
struct StateVector {
    Vector amps;
    std::vector<int> factors;

    StateVector() = default;
    explicit StateVector(Vector a, bool normalize = true);
    StateVector(Vector a, std::vector<int> f, bool normalize = true);

    int dim() const { return static_cast<int>(amps.size()); }

    static StateVector basis_state(int d, int j);
};

Operator tensor_product(const Operator& a, const Operator& b);
StateVector tensor_product(const StateVector& a, const StateVector& b);

/// Traces out every subsystem except `keep` (0-based index into factors).
Operator partial_trace(const Operator& m, int keep);

/// exp(i H) for Hermitian H, via spectral decomposition.
Matrix expi_hermitian(const Matrix& h);

/// exp(i sum_k q_k A_k) for Hermitian A_k. Throws NonHermitianInput.
Operator unitary_from_generator(
    const std::vector<std::pair<Operator, double>>& terms);

/// Periodic position grid of d points spanning [-L/2, L/2) with spacing
/// L/d; momentum samples are the signed DFT frequencies 2*pi*k/L.
struct CanonicalGrid {
    int d = 0;
    double L = 0.0;

    CanonicalGrid() = default;
    CanonicalGrid(int d_, double L_);

    double dx() const { return L / d; }
    /// x_j = (j - d/2) * dx, strictly increasing, centered on 0.
    std::vector<double> positions() const;
    /// Momentum value carried by DFT bin k (FFT frequency layout).
    std::vector<double> momenta() const;
    double p_max() const;
    /// Index of the grid point closest to x.
    int index_of(double x) const;
};

/// Unitary forward DFT, U(k,j) = exp(-2*pi*i*k*j/d)/sqrt(d).
Matrix dft_matrix(int d);

/// (x_hat, p_hat) on the grid: x_hat = diag(x_j), p_hat = U^dag diag(p_k) U.
std::pair<Operator, Operator> grid_canonical_pair(const CanonicalGrid& grid);

/// exp(i H) v for Hermitian H given only through its matvec, via a Lanczos
/// Krylov subspace. Intended for large structured H (sums of diagonal and
/// Fourier-diagonal pieces) where a dense spectral decomposition is not
/// affordable.
Vector expi_krylov(const std::function<Vector(const Vector&)>& h_matvec,
                   const Vector& v, double tol = 1e-12, int max_dim = 96);

}  // namespace weakjoint::qlinalg
