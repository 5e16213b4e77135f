#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>
#include <random>

#include "weakjoint/nogo.hpp"

using namespace weakjoint;
using namespace weakjoint::nogo;
using qlinalg::Operator;
using qlinalg::Vector;

namespace {

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

ObservablePair pauli_pair() { return {Operator(pauli_x()), Operator(pauli_z())}; }

ObservablePair spin_half_pair() {
    return {Operator(Matrix(0.5 * pauli_x())), Operator(Matrix(0.5 * pauli_z()))};
}

// Spin-1 operators with eigenvalues {-1, 0, 1}.
ObservablePair spin_one_pair() {
    Matrix jx = Matrix::Zero(3, 3), jz = Matrix::Zero(3, 3);
    const double s = 1.0 / std::sqrt(2.0);
    jx(0, 1) = jx(1, 0) = jx(1, 2) = jx(2, 1) = s;
    jz(0, 0) = 1.0;
    jz(2, 2) = -1.0;
    return {Operator(jx), Operator(jz)};
}

}  // namespace

TEST_CASE("theta sweep distances") {
    SUBCASE("pauli pair with alpha = (1,1)") {
        const auto profile = btheta_spectrum_sweep(pauli_pair(), 1.0, 1.0, 181);
        // Spectrum of cos(t) sx + sin(t) sz is {-1, +1} for every t, so the
        // distance is min(|b-1|, |b+1|) exactly.
        for (std::size_t i = 0; i < profile.thetas.size(); ++i) {
            const double b = profile.beta[i];
            CHECK(std::abs(profile.distance[i] -
                           std::min(std::abs(b - 1.0), std::abs(b + 1.0))) <= 1e-12);
        }
        const std::size_t quarter = 45;  // theta = pi/4
        CHECK(profile.beta[quarter] == doctest::Approx(std::sqrt(2.0)));
        CHECK(profile.distance[quarter] == doctest::Approx(std::sqrt(2.0) - 1.0));
        CHECK(profile.infeasible);

        // Minimum distance over [pi/8, 3pi/8] stays clear of zero.
        double min_mid = 1e9;
        for (std::size_t i = 0; i < profile.thetas.size(); ++i)
            if (profile.thetas[i] >= std::numbers::pi / 8 &&
                profile.thetas[i] <= 3 * std::numbers::pi / 8)
                min_mid = std::min(min_mid, profile.distance[i]);
        CHECK(min_mid >= 0.08);
    }
    SUBCASE("shared eigenvector zeroes the profile") {
        Matrix a1 = Matrix::Zero(2, 2), a2 = Matrix::Zero(2, 2);
        a1(0, 0) = 1.0;
        a2(0, 0) = 2.0;
        const auto profile =
            btheta_spectrum_sweep({Operator(a1), Operator(a2)}, 1.0, 2.0, 91);
        for (double dist : profile.distance) CHECK(dist <= 1e-10);
        CHECK_FALSE(profile.infeasible);
    }
    SUBCASE("alpha = (1,0) endpoints") {
        const auto profile = btheta_spectrum_sweep(pauli_pair(), 1.0, 0.0, 91);
        CHECK(profile.distance.front() <= 1e-12);  // theta = 0, beta = +1
        CHECK(profile.distance.back() <= 1e-12);   // theta = pi, beta = -1
        const std::size_t half = 45;               // theta = pi/2, beta = 0
        CHECK(profile.distance[half] == doctest::Approx(1.0));
        CHECK(profile.infeasible);
    }
    SUBCASE("n_theta precondition") {
        CHECK_THROWS_AS(btheta_spectrum_sweep(pauli_pair(), 1.0, 1.0, 2), std::invalid_argument);
    }
}

TEST_CASE("minimal polynomials") {
    SUBCASE("pauli z") {
        const auto mp = minimal_polynomial(Operator(pauli_z()));
        REQUIRE(mp.degree() == 2);
        CHECK(mp.coeffs[0] == doctest::Approx(-1.0));
        CHECK(std::abs(mp.coeffs[1]) <= 1e-14);
        CHECK(mp.coeffs[2] == doctest::Approx(1.0));
    }
    SUBCASE("degenerate identity") {
        const auto mp = minimal_polynomial(Operator::identity(3));
        REQUIRE(mp.degree() == 1);
        CHECK(mp.coeffs[0] == doctest::Approx(-1.0));
        CHECK(mp.coeffs[1] == doctest::Approx(1.0));
    }
    SUBCASE("spin-1 z component") {
        const auto mp = minimal_polynomial(spin_one_pair().a2);
        REQUIRE(mp.degree() == 3);
        // z^3 - z from the product over {-1, 0, 1}.
        CHECK(std::abs(mp.coeffs[0]) <= 1e-12);
        CHECK(mp.coeffs[1] == doctest::Approx(-1.0));
        CHECK(std::abs(mp.coeffs[2]) <= 1e-12);
        CHECK(mp.coeffs[3] == doctest::Approx(1.0));
    }
}

TEST_CASE("symmetrized operators") {
    SUBCASE("k = 0 is the identity") {
        const auto s = symmetrized_operators(pauli_pair(), 0);
        REQUIRE(s.size() == 1);
        CHECK((s[0].mat - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-13);
    }
    SUBCASE("anticommutator of orthogonal paulis vanishes") {
        const auto s = symmetrized_operators(pauli_pair(), 2);
        REQUIRE(s.size() == 3);
        CHECK(s[1].mat.cwiseAbs().maxCoeff() <= 1e-12);  // S_{1,1}
        CHECK((s[2].mat - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-12);  // S_{2,0}
        CHECK((s[0].mat - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-12);  // S_{0,2}
    }
    SUBCASE("reconstruction at random couplings") {
        std::mt19937_64 rng(5150);
        std::uniform_real_distribution<double> dist(-1.5, 1.5);
        const auto pair = spin_one_pair();
        for (int k = 1; k <= 4; ++k) {
            const auto s = symmetrized_operators(pair, k);
            for (int trial = 0; trial < 5; ++trial) {
                const double t = dist(rng);
                Matrix base = t * pair.a1.mat + pair.a2.mat;
                Matrix power = Matrix::Identity(3, 3);
                for (int p = 0; p < k; ++p) power = (power * base).eval();
                Matrix sum = Matrix::Zero(3, 3);
                double binom = 1.0, tl = 1.0;
                for (int l = 0; l <= k; ++l) {
                    sum += binom * tl * s[l].mat;
                    binom = binom * (k - l) / (l + 1);
                    tl *= t;
                }
                CHECK((sum - power).cwiseAbs().maxCoeff() <= 1e-9);
            }
        }
    }
}

TEST_CASE("approximate assignment") {
    auto basis = weakcore::OperatorBasis::gell_mann(2);
    SUBCASE("spin-1/2 weak values hit the requested pair") {
        const auto pair = spin_half_pair();
        const double a1 = 0.37, a2 = -0.81;
        const auto ens = approx_assignment(pair, a1, a2, 2, basis);
        CHECK(std::abs(weakcore::weak_value(pair.a1, ens) - cd(a1)) <= 1e-9);
        CHECK(std::abs(weakcore::weak_value(pair.a2, ens) - cd(a2)) <= 1e-9);
        CHECK(std::abs(weakcore::weak_value(Operator::identity(2), ens) - cd(1.0)) <= 1e-10);

        const auto prob = approx_assignment_problem(pair, a1, a2, 2, basis);
        CHECK(weakcore::verify_assignment(ens, prob).max_abs <= 1e-8);
    }
    SUBCASE("degree mismatch is rejected") {
        CHECK_THROWS_AS(approx_assignment(spin_half_pair(), 0.1, 0.2, 3, basis),
                        std::invalid_argument);
    }
    SUBCASE("dependent symmetrized set is detected") {
        // Proportional observables share all eigenvectors; {I, A, 2A} is
        // linearly dependent at k < 2.
        ObservablePair dependent{Operator(pauli_x()), Operator(Matrix(2.0 * pauli_x()))};
        CHECK_THROWS_AS(approx_assignment_problem(dependent, 0.3, 0.4, 2, basis),
                        DependentSymmetrizedSet);
    }
}

TEST_CASE("leading correction") {
    SUBCASE("vanishes at q = 0") {
        CHECK(std::abs(leading_correction(spin_half_pair(), 0.3, 0.4, 0.0, 0.0)) == 0.0);
    }
    SUBCASE("spin-1/2 closed form") {
        const auto pair = spin_half_pair();
        const double a1 = 0.29, a2 = -0.64;
        std::mt19937_64 rng(99);
        std::uniform_real_distribution<double> dist(-0.5, 0.5);
        for (int trial = 0; trial < 10; ++trial) {
            const double q1 = dist(rng), q2 = dist(rng);
            const cd got = leading_correction(pair, a1, a2, q1, q2);
            const double adotq = a1 * q1 + a2 * q2;
            const double qsq = q1 * q1 + q2 * q2;
            // s = 2, m(z) = z^2 - 1/4, and -i^2 = +1.
            const cd expect = (adotq * adotq - qsq / 4.0) / 2.0;
            CHECK(std::abs(got - expect) <= 1e-12);
        }
    }
    SUBCASE("spin-1 cubic form") {
        const auto pair = spin_one_pair();
        const double a1 = 0.5, a2 = 0.25, q1 = 0.07, q2 = -0.05;
        const cd got = leading_correction(pair, a1, a2, q1, q2);
        const double theta = std::atan2(q2, q1);
        const double qn = std::hypot(q1, q2);
        const double beta = a1 * std::cos(theta) + a2 * std::sin(theta);
        // s = 3, m(z) = z^3 - z, -i^3 = +i.
        const cd expect = cd(0, 1) * std::pow(qn, 3) * (beta * beta * beta - beta) / 6.0;
        CHECK(std::abs(got - expect) <= 1e-14);
    }
}

TEST_CASE("exponent error scaling for the spin-1/2 ensemble") {
    const auto pair = spin_half_pair();
    auto basis = weakcore::OperatorBasis::gell_mann(2);
    const double a1 = 0.4, a2 = -0.3;
    const auto ens = approx_assignment(pair, a1, a2, 2, basis);

    const double c = std::cos(0.43), s = std::sin(0.43);  // fixed direction
    std::vector<double> logq, logerr;
    for (double qn = 1e-3; qn <= 1e-1 * 1.0000001; qn *= std::pow(10.0, 0.25)) {
        const double q1 = qn * c, q2 = qn * s;
        const auto u = qlinalg::unitary_from_generator({{pair.a1, q1}, {pair.a2, q2}});
        const cd f = weakcore::weak_value(u, ens);
        const cd err = std::log(f) - cd(0, 1) * (a1 * q1 + a2 * q2) -
                       leading_correction(pair, a1, a2, q1, q2);
        logq.push_back(std::log(qn));
        logerr.push_back(std::log(std::abs(err)));
    }
    // Log-log slope by least squares.
    const int n = static_cast<int>(logq.size());
    double mx = 0, my = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        mx += logq[i];
        my += logerr[i];
    }
    mx /= n;
    my /= n;
    for (int i = 0; i < n; ++i) {
        sxx += (logq[i] - mx) * (logq[i] - mx);
        sxy += (logq[i] - mx) * (logerr[i] - my);
    }
    CHECK(sxy / sxx >= 2.7);

    // Absolute check at |q| = 1e-2: the correction reproduces the measured
    // exponent to 1e-4.
    const double q1 = 1e-2 * c, q2 = 1e-2 * s;
    const auto u = qlinalg::unitary_from_generator({{pair.a1, q1}, {pair.a2, q2}});
    const cd measured = std::log(weakcore::weak_value(u, ens)) - cd(0, 1) * (a1 * q1 + a2 * q2);
    CHECK(std::abs(measured - leading_correction(pair, a1, a2, q1, q2)) <= 1e-4);
}
