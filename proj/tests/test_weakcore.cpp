#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "weakjoint/weakcore.hpp"
#include "weakjoint/weyl_discrete.hpp"

using namespace weakjoint;
using namespace weakjoint::weakcore;

namespace {

std::mt19937_64 rng(777);

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

Vector random_state(int d) {
    Vector v = random_complex(d).col(0);
    return v / v.norm();
}

BasisPtr pauli_basis() {
    const double s = 1.0 / std::sqrt(2.0);
    Matrix i2 = Matrix::Identity(2, 2);
    Matrix sx(2, 2), sy(2, 2), sz(2, 2);
    sx << 0, 1, 1, 0;
    sy << 0, cd(0, -1), cd(0, 1), 0;
    sz << 1, 0, 0, -1;
    return OperatorBasis::from_elements(
        {Operator(Matrix(s * i2)), Operator(Matrix(s * sx)), Operator(Matrix(s * sy)),
         Operator(Matrix(s * sz))});
}

PrePostEnsemble simple_ensemble(const Vector& psi_i, const Vector& psi_f) {
    return PrePostEnsemble(StateVector(psi_i), StateVector(psi_f),
                           static_cast<int>(psi_i.size()), 0);
}

}  // namespace

TEST_CASE("weak value basics") {
    Vector zero = Vector::Zero(2), plus(2), one = Vector::Zero(2);
    zero(0) = 1.0;
    one(1) = 1.0;
    plus << 1.0, 1.0;

    const auto ens = simple_ensemble(zero, plus);
    CHECK(std::abs(weak_value(Operator::identity(2), ens) - cd(1.0)) <= 1e-14);

    Matrix sz(2, 2);
    sz << 1, 0, 0, -1;
    // Direct 2x2 arithmetic: <+|sz|0>/<+|0> = (1/sqrt2)/(1/sqrt2) = 1.
    CHECK(std::abs(weak_value(Operator(sz), ens) - cd(1.0)) <= 1e-13);

    CHECK_THROWS_AS(simple_ensemble(zero, one), OrthogonalSelection);
}

TEST_CASE("weak value linearity") {
    const int d = 3;
    const auto ens = simple_ensemble(random_state(d), random_state(d));
    for (int trial = 0; trial < 20; ++trial) {
        const Operator a{random_complex(d)}, b{random_complex(d)};
        const cd ca(0.3, -1.1), cb(-0.4, 0.2);
        const Operator combo{Matrix(ca * a.mat + cb * b.mat)};
        const cd lhs = weak_value(combo, ens);
        const cd rhs = ca * weak_value(a, ens) + cb * weak_value(b, ens);
        CHECK(std::abs(lhs - rhs) <= 1e-10);
    }
}

TEST_CASE("weak value operator") {
    SUBCASE("projector for coincident selections") {
        Vector zero = Vector::Zero(2);
        zero(0) = 1.0;
        const auto w = weak_value_operator(simple_ensemble(zero, zero));
        Matrix expect = Matrix::Zero(2, 2);
        expect(0, 0) = 1.0;
        CHECK((w.mat - expect).cwiseAbs().maxCoeff() <= 1e-14);
    }
    SUBCASE("maximally entangled selections reduce to I/2") {
        Vector phi = Vector::Zero(4);
        phi(0) = phi(3) = 1.0;
        PrePostEnsemble ens(StateVector(phi, {2, 2}), StateVector(phi, {2, 2}), 2, 2);
        const auto w = weak_value_operator(ens);
        CHECK((w.mat - 0.5 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-14);
    }
    SUBCASE("trace one and consistency with weak values") {
        const int ds = 3, da = 3;
        PrePostEnsemble ens(StateVector(random_state(ds * da), {ds, da}),
                            StateVector(random_state(ds * da), {ds, da}), ds, da);
        const auto w = weak_value_operator(ens);
        CHECK(std::abs(w.mat.trace() - cd(1.0)) <= 1e-10);
        for (int trial = 0; trial < 100; ++trial) {
            const Operator a{random_hermitian(ds)};
            CHECK(std::abs((a.mat * w.mat).trace() - weak_value(a, ens)) <= 1e-10);
        }
    }
}

TEST_CASE("weak vector expansion") {
    SUBCASE("identity operator picks out the identity element") {
        for (int d : {2, 3, 4}) {
            auto basis = OperatorBasis::gell_mann(d);
            const auto wv = weak_vector(Operator(Matrix(Matrix::Identity(d, d) / d)), basis);
            CHECK(std::abs(wv.w(0) - cd(1.0 / std::sqrt(double(d)))) <= 1e-12);
            CHECK(wv.w.tail(d * d - 1).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
    SUBCASE("projector in the Pauli basis") {
        Matrix proj = Matrix::Zero(2, 2);
        proj(0, 0) = 1.0;
        const auto wv = weak_vector(Operator(proj), pauli_basis());
        const double s = 1.0 / std::sqrt(2.0);
        CHECK(std::abs(wv.w(0) - cd(s)) <= 1e-14);
        CHECK(std::abs(wv.w(1)) <= 1e-14);
        CHECK(std::abs(wv.w(2)) <= 1e-14);
        CHECK(std::abs(wv.w(3) - cd(s)) <= 1e-14);
    }
    SUBCASE("round trip through reconstruct") {
        auto basis = OperatorBasis::gell_mann(3);
        Matrix w = random_complex(3);
        w /= w.trace();
        const auto wv = weak_vector(Operator(w), basis);
        CHECK((wv.reconstruct().mat - w).cwiseAbs().maxCoeff() <= 1e-12);
    }
    SUBCASE("basis validation") {
        auto basis = OperatorBasis::gell_mann(3);
        // Span completeness on random operators.
        for (int trial = 0; trial < 5; ++trial) {
            const Operator a{random_complex(3)};
            const Vector coeffs = basis->expand(a);
            Matrix rec = Matrix::Zero(3, 3);
            for (int i = 0; i < 9; ++i) rec += coeffs(i) * basis->elements[i].mat;
            CHECK((rec - a.mat).cwiseAbs().maxCoeff() <= 1e-10);
        }
        CHECK_THROWS_AS(
            OperatorBasis::from_elements({Operator::identity(2), Operator::identity(2),
                                          Operator::identity(2), Operator::identity(2)}),
            std::invalid_argument);
    }
}

TEST_CASE("product realizability") {
    SUBCASE("projector is product realizable with unit norm") {
        Matrix proj = Matrix::Zero(2, 2);
        proj(0, 0) = 1.0;
        const auto r = product_realizability(Operator(proj));
        REQUIRE(r.kind == RealizabilityKind::ProductRealizable);
        CHECK(r.norm_constraint == doctest::Approx(1.0));
        CHECK(r.gram_constraint_holds);
        CHECK(r.norm_constraint_holds);
    }
    SUBCASE("maximally mixed weak value operator needs entanglement") {
        const auto r = product_realizability(Operator(Matrix(0.5 * Matrix::Identity(2, 2))));
        CHECK(r.kind == RealizabilityKind::EntanglementRequired);
    }
    SUBCASE("discrete phase-point operator needs entanglement") {
        const weyl::DiscreteWeylBasis basis(3);
        const auto delta = weyl::phase_point_op(basis, {1, 2});
        const auto r = product_realizability(delta);
        CHECK(r.kind == RealizabilityKind::EntanglementRequired);
        // Parity-like spectrum: all singular values 1, so the ratio is 1.
        CHECK(r.singular_ratio == doctest::Approx(1.0));
    }
    SUBCASE("random product ensembles classify as product and reconstruct") {
        for (int trial = 0; trial < 25; ++trial) {
            const int d = 2 + trial % 3;
            Vector chi_i = random_state(d), chi_f = random_state(d);
            if (std::abs(chi_f.dot(chi_i)) < 1e-3) continue;
            const auto ens = simple_ensemble(chi_i, chi_f);
            const auto w = weak_value_operator(ens);
            const auto r = product_realizability(w);
            REQUIRE(r.kind == RealizabilityKind::ProductRealizable);
            const cd ovl = r.chi_f->amps.dot(r.chi_i->amps);
            const Matrix rec = r.chi_i->amps * r.chi_f->amps.adjoint() / ovl;
            CHECK((rec - w.mat).cwiseAbs().maxCoeff() <= 1e-9);
            CHECK(std::abs(r.gram_constraint - cd(1.0)) <= 1e-8);
            CHECK(r.norm_constraint >= 1.0 - 1e-8);
        }
    }
    SUBCASE("trace validation") {
        CHECK_THROWS_AS(product_realizability(Operator(Matrix(Matrix::Identity(2, 2)))),
                        TraceNotOne);
    }
}

TEST_CASE("assignment solving") {
    SUBCASE("empty target list gives the minimum-norm identity solution") {
        for (int d : {2, 3}) {
            AssignmentProblem prob;
            prob.basis = OperatorBasis::gell_mann(d);
            const auto wv = solve_assignment(prob);
            // Pseudoinverse of the single identity row: w = conj(I)/|I|^2.
            const Vector expect =
                prob.basis->identity_vector.conjugate() / prob.basis->identity_vector.squaredNorm();
            CHECK((wv.w - expect).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
    SUBCASE("hand-checked Pauli targets") {
        Matrix sx(2, 2), sz(2, 2);
        sx << 0, 1, 1, 0;
        sz << 1, 0, 0, -1;
        AssignmentProblem prob;
        prob.basis = pauli_basis();
        prob.targets = {{Operator(sx), cd(2.0)}, {Operator(sz), cd(3.0)}};
        const auto wv = solve_assignment(prob);
        const double s = std::sqrt(2.0);
        CHECK(std::abs(wv.w(0) - cd(1.0 / s)) <= 1e-10);
        CHECK(std::abs(wv.w(1) - cd(s)) <= 1e-10);
        CHECK(std::abs(wv.w(2)) <= 1e-10);  // minimum norm zeroes the sy component
        CHECK(std::abs(wv.w(3) - cd(3.0 / s)) <= 1e-10);
    }
    SUBCASE("contradictory targets are infeasible") {
        Matrix sx(2, 2);
        sx << 0, 1, 1, 0;
        AssignmentProblem prob;
        prob.basis = pauli_basis();
        prob.targets = {{Operator(sx), cd(0.0)}, {Operator(sx), cd(1.0)}};
        CHECK_THROWS_AS(solve_assignment(prob), Infeasible);
    }
}

TEST_CASE("entangled realization") {
    SUBCASE("projector weak vector round trips") {
        Matrix proj = Matrix::Zero(2, 2);
        proj(0, 0) = 1.0;
        auto basis = pauli_basis();
        const auto wv = weak_vector(Operator(proj), basis);
        const auto ens = realize_entangled(wv);
        CHECK(ens.ancilla_dim == 2);
        const auto w_out = weak_value_operator(ens);
        CHECK((w_out.mat - proj).cwiseAbs().maxCoeff() <= 1e-9);
    }
    SUBCASE("identity-only solution realizes I/d") {
        auto basis = OperatorBasis::gell_mann(3);
        AssignmentProblem prob;
        prob.basis = basis;
        const auto ens = realize_entangled(solve_assignment(prob));
        const auto w_out = weak_value_operator(ens);
        CHECK((w_out.mat - Matrix::Identity(3, 3) / 3.0).cwiseAbs().maxCoeff() <= 1e-9);
    }
    SUBCASE("solve, realize, verify round trips on random feasible problems") {
        for (int trial = 0; trial < 50; ++trial) {
            const int d = 2 + trial % 3;
            AssignmentProblem prob;
            prob.basis = OperatorBasis::gell_mann(d);
            const int n_targets = 1 + static_cast<int>(rng() % (d * d - 1));
            std::normal_distribution<double> dist;
            for (int t = 0; t < n_targets; ++t)
                prob.targets.emplace_back(Operator(random_hermitian(d)), cd(dist(rng), dist(rng)));
            const auto ens = realize_entangled(solve_assignment(prob));
            CHECK(verify_assignment(ens, prob).max_abs <= 1e-8);
        }
    }
}

TEST_CASE("verify assignment reporting") {
    Matrix sx(2, 2);
    sx << 0, 1, 1, 0;
    AssignmentProblem prob;
    prob.basis = pauli_basis();
    prob.targets = {{Operator(sx), cd(0.25, -0.5)}};
    auto ens = realize_entangled(solve_assignment(prob));

    SUBCASE("identity target has zero residual") {
        AssignmentProblem idprob;
        idprob.basis = prob.basis;
        idprob.targets = {{Operator::identity(2), cd(1.0)}};
        CHECK(verify_assignment(ens, idprob).max_abs <= 1e-12);
    }
    SUBCASE("perturbed ensemble reports a residual without throwing") {
        Vector bumped = ens.psi_i.amps;
        bumped(0) += 1e-3;
        PrePostEnsemble moved(StateVector(bumped, {2, 2}), ens.psi_f, 2, 2);
        const auto report = verify_assignment(moved, prob);
        CHECK(report.max_abs > 1e-6);
        CHECK(report.max_abs < 0.1);
    }
}
