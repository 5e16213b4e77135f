#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <complex>
#include <random>

#include "weakjoint/qlinalg.hpp"

using namespace weakjoint;
using namespace weakjoint::qlinalg;

namespace {

std::mt19937_64 rng(12345);

Matrix random_complex(int d) {
    std::normal_distribution<double> dist;
    Matrix m(d, d);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) m(r, c) = cd(dist(rng), dist(rng));
    return m;
}

Matrix random_hermitian(int d) {
    Matrix m = random_complex(d);
    return 0.5 * (m + m.adjoint());
}

Matrix pauli_x() {
    Matrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}

Matrix pauli_z() {
    Matrix m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

// Independent index-sum oracle for tracing out everything but `keep` on a
// two-factor operator.
Matrix partial_trace_oracle(const Matrix& m, int d0, int d1, int keep) {
    const int dk = keep == 0 ? d0 : d1;
    const int de = keep == 0 ? d1 : d0;
    Matrix out = Matrix::Zero(dk, dk);
    for (int i = 0; i < dk; ++i)
        for (int j = 0; j < dk; ++j)
            for (int e = 0; e < de; ++e) {
                const int row = keep == 0 ? i * d1 + e : e * d1 + i;
                const int col = keep == 0 ? j * d1 + e : e * d1 + j;
                out(i, j) += m(row, col);
            }
    return out;
}

}  // namespace

TEST_CASE("tensor product identities") {
    const Operator i2 = Operator::identity(2);
    CHECK((tensor_product(i2, i2).mat - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0);

    // Hand expansion of sigma_x (x) sigma_z: blocks (0, sz; sz, 0).
    const Operator sx{pauli_x()}, sz{pauli_z()};
    const Operator t = tensor_product(sx, sz);
    Matrix expect = Matrix::Zero(4, 4);
    expect.block(0, 2, 2, 2) = pauli_z();
    expect.block(2, 0, 2, 2) = pauli_z();
    CHECK((t.mat - expect).cwiseAbs().maxCoeff() == 0.0);
    CHECK(t.factors == std::vector<int>{2, 2});
}

TEST_CASE("partial trace") {
    SUBCASE("maximally entangled reduction") {
        Vector phi = Vector::Zero(4);
        phi(0) = phi(3) = 1.0;  // sum_k |kk>, unnormalized
        Operator rho(Matrix(phi * phi.adjoint()), {2, 2});
        const Operator reduced = partial_trace(rho, 0);
        CHECK((reduced.mat - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-15);
    }
    SUBCASE("product rule and trace preservation on random 2x3 input") {
        const Operator a{random_complex(2)}, b{random_complex(3)};
        const Operator ab = tensor_product(a, b);
        const Operator keep_a = partial_trace(ab, 0);
        CHECK((keep_a.mat - a.mat * b.mat.trace()).cwiseAbs().maxCoeff() <= 1e-12);

        Operator rho(random_complex(6), {2, 3});
        rho.mat = (rho.mat * rho.mat.adjoint()).eval();
        rho.mat /= rho.mat.trace();
        for (int keep : {0, 1}) {
            const Operator red = partial_trace(rho, keep);
            CHECK((red.mat - partial_trace_oracle(rho.mat, 2, 3, keep)).cwiseAbs().maxCoeff() <=
                  1e-14);
            CHECK(std::abs(red.mat.trace() - rho.mat.trace()) <= 1e-12);
        }
    }
    SUBCASE("composition over both subsystems equals full trace") {
        Operator m(random_complex(6), {2, 3});
        const cd full = m.mat.trace();
        CHECK(std::abs(partial_trace(m, 0).mat.trace() - full) <= 1e-12);
        CHECK(std::abs(partial_trace(m, 1).mat.trace() - full) <= 1e-12);
    }
    SUBCASE("invalid subsystem index") {
        Operator m(random_complex(6), {2, 3});
        CHECK_THROWS_AS(partial_trace(m, 2), std::invalid_argument);
        CHECK_THROWS_AS(partial_trace(Operator(random_complex(4)), 0), std::invalid_argument);
    }
}

TEST_CASE("unitary from generator") {
    SUBCASE("zero coefficients give the identity") {
        const Operator u = unitary_from_generator({{Operator{pauli_x()}, 0.0}});
        CHECK((u.mat - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-15);
    }
    SUBCASE("diagonal generator") {
        const double theta = 0.7343;
        const Operator u = unitary_from_generator({{Operator{pauli_z()}, theta}});
        CHECK(std::abs(u.mat(0, 0) - std::polar(1.0, theta)) <= 1e-14);
        CHECK(std::abs(u.mat(1, 1) - std::polar(1.0, -theta)) <= 1e-14);
        CHECK(std::abs(u.mat(0, 1)) <= 1e-14);
    }
    SUBCASE("closed-form exponential of a traceless 2x2 generator") {
        // exp(i(sx + sz)) = cos(sqrt 2) I + i sin(sqrt 2)(sx + sz)/sqrt 2.
        const Operator u =
            unitary_from_generator({{Operator{pauli_x()}, 1.0}, {Operator{pauli_z()}, 1.0}});
        const double r = std::sqrt(2.0);
        const Matrix expect = std::cos(r) * Matrix::Identity(2, 2) +
                              cd(0, 1) * std::sin(r) * (pauli_x() + pauli_z()) / r;
        CHECK((u.mat - expect).cwiseAbs().maxCoeff() <= 1e-14);
    }
    SUBCASE("rejects non-Hermitian input") {
        Matrix bad(2, 2);
        bad << 0, 1, 0, 0;
        CHECK_THROWS_AS(unitary_from_generator({{Operator{bad}, 1.0}}), NonHermitianInput);
    }
    SUBCASE("unitarity for random Hermitian generators up to dim 256") {
        for (int d : {3, 17, 64, 256}) {
            const Operator u = unitary_from_generator({{Operator{random_hermitian(d)}, 1.3}});
            CHECK(u.is_unitary(1e-10));
        }
    }
}

TEST_CASE("canonical grid") {
    SUBCASE("position samples centered and increasing") {
        const CanonicalGrid g(2, 2.0);
        const auto xs = g.positions();
        CHECK(xs[0] == doctest::Approx(-1.0));
        CHECK(xs[1] == doctest::Approx(0.0));
        auto [x, p] = grid_canonical_pair(g);
        CHECK(std::abs(x.mat(0, 0) - cd(-1.0)) <= 1e-15);
        CHECK(std::abs(x.mat(1, 1) - cd(0.0)) <= 1e-15);
    }
    SUBCASE("plane waves are momentum eigenvectors") {
        const CanonicalGrid g(16, 10.0);
        auto [x, p] = grid_canonical_pair(g);
        CHECK(x.is_hermitian());
        CHECK(p.is_hermitian());
        const auto xs = g.positions();
        const auto ps = g.momenta();
        for (int k = 0; k < g.d; ++k) {
            Vector wave(g.d);
            for (int j = 0; j < g.d; ++j) wave(j) = std::polar(1.0, ps[k] * xs[j]);
            CHECK((p.mat * wave - ps[k] * wave).norm() / wave.norm() <= 1e-10);
        }
    }
    SUBCASE("commutator expectation approaches i and converges in d") {
        const double L = 20.0;
        const double sigma = 0.26;  // underresolved at d=32 so refinement is visible
        double prev = std::numeric_limits<double>::infinity();
        for (int d : {32, 64, 128}) {
            const CanonicalGrid g(d, L);
            auto [x, p] = grid_canonical_pair(g);
            const auto xs = g.positions();
            Vector psi(d);
            for (int j = 0; j < d; ++j) psi(j) = std::exp(-xs[j] * xs[j] / (4 * sigma * sigma));
            psi /= psi.norm();
            const cd comm = psi.dot((x.mat * (p.mat * psi)) - p.mat * (x.mat * psi));
            const double err = std::abs(comm - cd(0.0, 1.0));
            CHECK(err < prev);
            prev = err;
        }
        CHECK(prev <= 1e-6);

        // The L/10-wide state quoted in the interface docs is already
        // converged at d = 128.
        const CanonicalGrid g(128, L);
        auto [x, p] = grid_canonical_pair(g);
        const auto xs = g.positions();
        Vector psi(128);
        const double s = L / 10.0;
        for (int j = 0; j < 128; ++j) psi(j) = std::exp(-xs[j] * xs[j] / (4 * s * s));
        psi /= psi.norm();
        const cd comm = psi.dot((x.mat * (p.mat * psi)) - p.mat * (x.mat * psi));
        CHECK(std::abs(comm - cd(0.0, 1.0)) <= 1e-3);
    }
}

TEST_CASE("krylov exponential matches the dense spectral route") {
    for (int d : {24, 64}) {
        const Matrix h = random_hermitian(d);
        Vector v = random_complex(d).col(0);
        v /= v.norm();
        const Vector dense = expi_hermitian(h) * v;
        const Vector krylov = expi_krylov([&](const Vector& w) { return Vector(h * w); }, v);
        CHECK((dense - krylov).norm() <= 1e-10);
    }
}

TEST_CASE("operator and state validation") {
    CHECK_THROWS_AS(Operator(random_complex(4), {2, 3}), std::invalid_argument);
    CHECK(Operator(random_hermitian(3)).is_hermitian());
    CHECK_FALSE(Operator(random_complex(3)).is_hermitian());
    CHECK_THROWS_AS(StateVector(Vector::Zero(3)), std::invalid_argument);
    const StateVector s(Vector::Ones(4));
    CHECK(s.amps.norm() == doctest::Approx(1.0));
}
