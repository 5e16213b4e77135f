#include "weakjoint/qlinalg.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <numeric>

namespace weakjoint::qlinalg {

namespace {

int checked_product(const std::vector<int>& factors, int dim) {
    long long prod = 1;
    for (int f : factors) {
        if (f <= 0) throw std::invalid_argument("subsystem dimensions must be positive");
        prod *= f;
    }
    if (prod != dim)
        throw std::invalid_argument("factorization product does not match dimension");
    return dim;
}

}  // namespace

Operator::Operator(Matrix m) : mat(std::move(m)) {
    if (mat.rows() != mat.cols()) throw std::invalid_argument("operator matrix must be square");
    factors = {dim()};
}

Operator::Operator(Matrix m, std::vector<int> f) : mat(std::move(m)), factors(std::move(f)) {
    if (mat.rows() != mat.cols()) throw std::invalid_argument("operator matrix must be square");
    checked_product(factors, dim());
}

bool Operator::is_hermitian(double rel_tol) const {
    const double scale = mat.cwiseAbs().maxCoeff();
    if (scale == 0.0) return true;
    return (mat - mat.adjoint()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

bool Operator::is_unitary(double tol) const {
    Matrix r = mat.adjoint() * mat;
    r.diagonal().array() -= 1.0;
    return r.cwiseAbs().maxCoeff() <= tol;
}

Operator Operator::identity(int d) { return Operator(Matrix::Identity(d, d)); }

StateVector::StateVector(Vector a, bool normalize) : amps(std::move(a)) {
    factors = {dim()};
    const double n = amps.norm();
    if (!std::isfinite(n) || n == 0.0)
        throw std::invalid_argument("state vector norm must be finite and nonzero");
    if (normalize) amps /= n;
}

StateVector::StateVector(Vector a, std::vector<int> f, bool normalize)
    : amps(std::move(a)), factors(std::move(f)) {
    checked_product(factors, dim());
    const double n = amps.norm();
    if (!std::isfinite(n) || n == 0.0)
        throw std::invalid_argument("state vector norm must be finite and nonzero");
    if (normalize) amps /= n;
}

StateVector StateVector::basis_state(int d, int j) {
    Vector v = Vector::Zero(d);
    v(j) = 1.0;
    return StateVector(std::move(v), false);
}

Operator tensor_product(const Operator& a, const Operator& b) {
    const int da = a.dim(), db = b.dim();
    Matrix out(da * db, da * db);
    for (int i = 0; i < da; ++i)
        for (int j = 0; j < da; ++j)
            out.block(i * db, j * db, db, db) = a.mat(i, j) * b.mat;
    std::vector<int> f = a.factors;
    f.insert(f.end(), b.factors.begin(), b.factors.end());
    return Operator(std::move(out), std::move(f));
}

StateVector tensor_product(const StateVector& a, const StateVector& b) {
    const int da = a.dim(), db = b.dim();
    Vector out(da * db);
    for (int i = 0; i < da; ++i) out.segment(i * db, db) = a.amps(i) * b.amps;
    std::vector<int> f = a.factors;
    f.insert(f.end(), b.factors.begin(), b.factors.end());
    return StateVector(std::move(out), std::move(f), false);
}

Operator partial_trace(const Operator& m, int keep) {
    const auto& f = m.factors;
    const int nsub = static_cast<int>(f.size());
    if (nsub < 2) throw std::invalid_argument("partial_trace needs at least two subsystems");
    if (keep < 0 || keep >= nsub) throw std::invalid_argument("invalid subsystem index");

    // Strides of each subsystem index in the flat composite index.
    std::vector<long long> stride(nsub, 1);
    for (int s = nsub - 2; s >= 0; --s) stride[s] = stride[s + 1] * f[s + 1];

    const int dk = f[keep];
    const long long sk = stride[keep];
    // Enumerate the joint index of all traced-out subsystems.
    long long env = 1;
    for (int s = 0; s < nsub; ++s)
        if (s != keep) env *= f[s];

    Matrix out = Matrix::Zero(dk, dk);
    for (long long e = 0; e < env; ++e) {
        // Decode e into the composite offset with the kept index at 0.
        long long rem = e, base = 0;
        for (int s = nsub - 1; s >= 0; --s) {
            if (s == keep) continue;
            base += (rem % f[s]) * stride[s];
            rem /= f[s];
        }
        for (int i = 0; i < dk; ++i)
            for (int j = 0; j < dk; ++j) out(i, j) += m.mat(base + i * sk, base + j * sk);
    }
    return Operator(std::move(out), {dk});
}

Matrix expi_hermitian(const Matrix& h) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
    const auto& v = es.eigenvectors();
    Vector phases(h.rows());
    for (Eigen::Index k = 0; k < h.rows(); ++k)
        phases(k) = std::polar(1.0, es.eigenvalues()(k));
    return v * phases.asDiagonal() * v.adjoint();
}

Operator unitary_from_generator(const std::vector<std::pair<Operator, double>>& terms) {
    if (terms.empty()) throw std::invalid_argument("unitary_from_generator needs at least one term");
    const int d = terms.front().first.dim();
    Matrix h = Matrix::Zero(d, d);
    for (const auto& [op, q] : terms) {
        if (op.dim() != d) throw std::invalid_argument("generator terms must share dimension");
        if (!op.is_hermitian()) throw NonHermitianInput("generator term is not Hermitian");
        h += q * op.mat;
    }
    return Operator(expi_hermitian(h), terms.front().first.factors);
}

CanonicalGrid::CanonicalGrid(int d_, double L_) : d(d_), L(L_) {
    if (d < 2) throw std::invalid_argument("grid needs at least 2 points");
    if (L <= 0.0) throw std::invalid_argument("grid length must be positive");
}

std::vector<double> CanonicalGrid::positions() const {
    std::vector<double> x(d);
    for (int j = 0; j < d; ++j) x[j] = (j - d / 2) * dx();
    return x;
}

std::vector<double> CanonicalGrid::momenta() const {
    std::vector<double> p(d);
    const double dp = 2.0 * std::numbers::pi / L;
    for (int k = 0; k < d; ++k) {
        const int signed_k = (k <= (d - 1) / 2) ? k : k - d;
        p[k] = dp * signed_k;
    }
    return p;
}

double CanonicalGrid::p_max() const { return std::numbers::pi * d / L; }

int CanonicalGrid::index_of(double x) const {
    int j = static_cast<int>(std::lround(x / dx())) + d / 2;
    if (j < 0 || j >= d) throw std::invalid_argument("position outside grid range");
    return j;
}

Matrix dft_matrix(int d) {
    Matrix u(d, d);
    const double w = -2.0 * std::numbers::pi / d;
    const double norm = 1.0 / std::sqrt(static_cast<double>(d));
    for (int k = 0; k < d; ++k)
        for (int j = 0; j < d; ++j)
            u(k, j) = std::polar(norm, w * ((static_cast<long long>(k) * j) % d));
    return u;
}

std::pair<Operator, Operator> grid_canonical_pair(const CanonicalGrid& grid) {
    const auto xs = grid.positions();
    const auto ps = grid.momenta();
    Matrix x = Matrix::Zero(grid.d, grid.d);
    for (int j = 0; j < grid.d; ++j) x(j, j) = xs[j];

    const Matrix u = dft_matrix(grid.d);
    Vector pdiag(grid.d);
    for (int k = 0; k < grid.d; ++k) pdiag(k) = ps[k];
    Matrix p = u.adjoint() * pdiag.asDiagonal() * u;
    // Round off the anti-Hermitian noise from the triple product.
    p = 0.5 * (p + p.adjoint()).eval();
    return {Operator(std::move(x)), Operator(std::move(p))};
}

Vector expi_krylov(const std::function<Vector(const Vector&)>& h_matvec, const Vector& v,
                   double tol, int max_dim) {
    const double beta0 = v.norm();
    if (beta0 == 0.0) return v;

    std::vector<Vector> basis;
    basis.push_back(v / beta0);
    std::vector<double> alpha, beta;  // tridiagonal entries

    Vector result;
    double prev_err = std::numeric_limits<double>::infinity();
    for (int j = 0; j < max_dim; ++j) {
        Vector w = h_matvec(basis[j]);
        const double a = std::real(basis[j].dot(w));
        alpha.push_back(a);
        w -= a * basis[j];
        if (j > 0) w -= beta[j - 1] * basis[j - 1];
        // One pass of reorthogonalization keeps the basis clean for the
        // modest subspace sizes used here.
        for (const auto& q : basis) w -= q.dot(w) * q;
        const double b = w.norm();

        const int m = j + 1;
        Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
        for (int i = 0; i < m; ++i) {
            t(i, i) = alpha[i];
            if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[i];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
        Vector e1 = Vector::Zero(m);
        e1(0) = beta0;
        Vector y = es.eigenvectors().cast<cd>() *
                   (Eigen::VectorXd(es.eigenvalues())
                        .unaryExpr([](double lam) { return std::polar(1.0, lam); })
                        .asDiagonal() *
                    (es.eigenvectors().transpose().cast<cd>() * e1));

        // Standard a-posteriori estimate: the next coupling times the last
        // component of the small solution.
        const double err = (m > 1) ? b * std::abs(y(m - 1)) : b * beta0;
        if (err <= tol * beta0 || b <= 1e-14 * beta0 || j == max_dim - 1 ||
            (err > prev_err && err <= 1e-8 * beta0)) {
            result = Vector::Zero(v.size());
            for (int i = 0; i < m; ++i) result += y(i) * basis[i];
            return result;
        }
        prev_err = err;
        beta.push_back(b);
        basis.push_back(w / b);
    }
    throw std::runtime_error("expi_krylov failed to converge");
}

}  // namespace weakjoint::qlinalg
