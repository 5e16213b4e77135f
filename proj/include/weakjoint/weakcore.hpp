#pragma once

#include <complex>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "weakjoint/qlinalg.hpp"

namespace weakjoint::weakcore {

using qlinalg::cd;
using qlinalg::Matrix;
using qlinalg::Operator;
using qlinalg::StateVector;
using qlinalg::Vector;

/// Pure pre- and postselection pair on system (x) ancilla. ancilla_dim == 0
/// means the selection acts on the bare system.
struct PrePostEnsemble {
    StateVector psi_i;
    StateVector psi_f;
    int system_dim = 0;
    int ancilla_dim = 0;
    double overlap_floor = 1e-10;

    PrePostEnsemble() = default;
    PrePostEnsemble(StateVector i, StateVector f, int sys_dim, int anc_dim,
                    double floor = 1e-10);

    int total_dim() const { return system_dim * (ancilla_dim > 0 ? ancilla_dim : 1); }
    cd overlap() const { return psi_f.amps.dot(psi_i.amps); }
};

/// Orthonormal operator basis E_1..E_{d^2} with (E_i|E_j) = Tr(E_i^dag E_j)
/// = delta_ij. Carries the Gram tensor gamma_ij = Tr(E_i E_j) and the
/// identity vector I_i = Tr(E_i)^*.
struct OperatorBasis {
    int d = 0;
    std::vector<Operator> elements;
    Matrix gram;
    Vector identity_vector;

    /// Validates orthonormality (1e-12) and element count d^2.
    static std::shared_ptr<const OperatorBasis> from_elements(std::vector<Operator> els);
    /// Generalized Gell-Mann basis scaled to orthonormality, E_1 = I/sqrt(d).
    static std::shared_ptr<const OperatorBasis> gell_mann(int d);

    /// Expansion coefficients a_i = (E_i|A), so A = sum_i a_i E_i.
    Vector expand(const Operator& a) const;
};

using BasisPtr = std::shared_ptr<const OperatorBasis>;

/// Weak vector w over a basis: W = sum_i w_i E_i^dag, w_i the weak value of
/// E_i. Invariant I.w = 1.
struct WeakVector {
    Vector w;
    BasisPtr basis;

    WeakVector() = default;
    WeakVector(Vector w_, BasisPtr basis_);

    Operator reconstruct() const;  // sum_i w_i E_i^dag
};

struct AssignmentProblem {
    BasisPtr basis;
    std::vector<std::pair<Operator, cd>> targets;
};

cd weak_value(const Operator& a, const PrePostEnsemble& ens);

/// W = Tr_a(|psi_i><psi_f|) / <psi_f|psi_i>.
Operator weak_value_operator(const PrePostEnsemble& ens);

WeakVector weak_vector(const Operator& w_op, BasisPtr basis);

enum class RealizabilityKind { ProductRealizable, EntanglementRequired };

struct Realizability {
    RealizabilityKind kind;
    // Populated for ProductRealizable: W = |chi_i><chi_f| / <chi_f|chi_i>.
    std::optional<StateVector> chi_i;
    std::optional<StateVector> chi_f;
    double singular_ratio = 0.0;  // sigma_2 / sigma_1
    // Scalar constraint diagnostics (gamma^*_ij w_i w_j and w.w^*).
    cd gram_constraint;
    double norm_constraint = 0.0;
    bool gram_constraint_holds = false;
    bool norm_constraint_holds = false;
};

/// Rank-1 classification (singular-value ratio 1e-8). The scalar
/// constraints are verified as diagnostics, not used as the classifier.
Realizability product_realizability(const Operator& w_op, double rank_tol = 1e-8);

/// Minimum-norm solution of {a^(i).w = alpha^(i)} united with {I.w = 1}.
/// Throws Infeasible when the least-squares residual exceeds 1e-8.
WeakVector solve_assignment(const AssignmentProblem& prob);

/// Entangled realization of an arbitrary weak vector: psi_f = |Phi>,
/// psi_i proportional to sum_i w_i (E_i^dag x I)|Phi>, ancilla_dim = d.
PrePostEnsemble realize_entangled(const WeakVector& w);

struct ResidualReport {
    std::vector<cd> per_target;
    double max_abs = 0.0;
};

ResidualReport verify_assignment(const PrePostEnsemble& ens, const AssignmentProblem& prob);

}  // namespace weakjoint::weakcore
