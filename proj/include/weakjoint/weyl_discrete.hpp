#pragma once

#include <complex>
#include <vector>

#include "weakjoint/qlinalg.hpp"
#include "weakjoint/weakcore.hpp"

namespace weakjoint::weyl {

using qlinalg::cd;
using qlinalg::Matrix;
using qlinalg::Operator;
using qlinalg::StateVector;

/// Integer phase-space point. Discrete components are reduced mod d by the
/// operations below; the struct itself is plain.
struct PhasePoint {
    long long z1 = 0;
    long long z2 = 0;
};

/// Symplectic product z ^ w = z1 w2 - z2 w1.
inline long long symplectic(const PhasePoint& a, const PhasePoint& b) {
    return a.z1 * b.z2 - a.z2 * b.z1;
}

/// Odd-dimension Weyl-Heisenberg kinematics. Oddness makes the
/// multiplicative inverse of 2 exist mod d, so all half-point shifts are
/// exact lattice operations.
struct DiscreteWeylBasis {
    int d = 0;
    long long half = 0;  // 2 * half == 1 (mod d)

    explicit DiscreteWeylBasis(int d_);

    long long mod(long long v) const { return ((v % d) + d) % d; }
    PhasePoint reduce(const PhasePoint& z) const { return {mod(z.z1), mod(z.z2)}; }
    /// omega^e with omega = exp(2 pi i / d); e is reduced mod d first.
    cd omega_pow(long long e) const;
};

/// Translation operator: T_z |j> = omega^{z2 (j + half z1)} |j + z1>.
/// Composition law: T_z T_w = omega^{half (w ^ z)} T_{z+w}.
Operator translation_op(const DiscreteWeylBasis& basis, const PhasePoint& zeta);

/// Phase-point (displaced parity) operator, the symplectic Fourier pair of
/// the translations: Delta_eta = (1/d) sum_z omega^{z ^ eta} T_z.
Operator phase_point_op(const DiscreteWeylBasis& basis, const PhasePoint& eta);

/// Expansion coefficients over translations, a(z) = (1/d) Tr(A T_z^dag),
/// so A = sum_z a(z) T_z. Indexed (z1, z2).
Matrix weyl_transform(const DiscreteWeylBasis& basis, const Operator& a);

/// Phase-space symbol, s(eta) = Tr(A Delta_eta); A = (1/d) sum s Delta.
/// Indexed (eta1, eta2). Real for Hermitian A.
Matrix weyl_symbol(const DiscreteWeylBasis& basis, const Operator& a);

/// |Phi_0> = sum_k |k>|k> / sqrt(d).
StateVector maximally_entangled(const DiscreteWeylBasis& basis);

/// Pre/postselection psi_i = (T_{zeta_i} x I)|Phi_0>,
/// psi_f = (Delta_{eta_f} x I)|Phi_0>. Its weak value operator equals
/// Delta at eta_f + half * zeta_i.
weakcore::PrePostEnsemble epr_ensemble(const DiscreteWeylBasis& basis, const PhasePoint& zeta_i,
                                       const PhasePoint& eta_f);

/// Phase-space point the EPR ensemble localizes on.
PhasePoint eta_s(const DiscreteWeylBasis& basis, const PhasePoint& zeta_i,
                 const PhasePoint& eta_f);

/// Expansion of the composite (system x ancilla) weak value operator over
/// the conjugated product translations:
///   W = sum w(z, z') (T_z x T_{z'})^dag,  w(z, z') = Tr[W (T_z x T_{z'})]/d^2.
struct CompositeWeakTransform {
    int d = 0;
    std::vector<cd> values;  // index ((z1 d + z2) d + z1') d + z2'

    cd at(const PhasePoint& z, const PhasePoint& zp) const {
        return values[static_cast<std::size_t>(((z.z1 * d + z.z2) * d + zp.z1) * d + zp.z2)];
    }
};

CompositeWeakTransform composite_weak_transform(const DiscreteWeylBasis& basis,
                                                const PhasePoint& zeta_i,
                                                const PhasePoint& eta_f);

}  // namespace weakjoint::weyl
