#include "weakjoint/weyl_discrete.hpp"

#include <cmath>
#include <numbers>

namespace weakjoint::weyl {

DiscreteWeylBasis::DiscreteWeylBasis(int d_) : d(d_) {
    if (d < 3 || d % 2 == 0)
        throw std::invalid_argument("discrete Weyl basis requires odd dimension >= 3");
    half = (d + 1) / 2;
}

cd DiscreteWeylBasis::omega_pow(long long e) const {
    return std::polar(1.0, 2.0 * std::numbers::pi * mod(e) / d);
}

Operator translation_op(const DiscreteWeylBasis& basis, const PhasePoint& zeta) {
    const int d = basis.d;
    const PhasePoint z = basis.reduce(zeta);
    Matrix t = Matrix::Zero(d, d);
    for (int j = 0; j < d; ++j) {
        const long long row = basis.mod(j + z.z1);
        t(row, j) = basis.omega_pow(z.z2 * (j + basis.half * z.z1));
    }
    return Operator(std::move(t));
}

Operator phase_point_op(const DiscreteWeylBasis& basis, const PhasePoint& eta) {
    const int d = basis.d;
    const PhasePoint e = basis.reduce(eta);
    // Closed form of (1/d) sum_z omega^{z ^ eta} T_z: a displaced parity,
    // Delta_eta |j> = omega^{2 eta2 (eta1 - j)} |2 eta1 - j>.
    Matrix m = Matrix::Zero(d, d);
    for (int j = 0; j < d; ++j) {
        const long long row = basis.mod(2 * e.z1 - j);
        m(row, j) = basis.omega_pow(2 * e.z2 * (e.z1 - j));
    }
    return Operator(std::move(m));
}

Matrix weyl_transform(const DiscreteWeylBasis& basis, const Operator& a) {
    const int d = basis.d;
    if (a.dim() != d) throw std::invalid_argument("operator does not match basis dimension");
    Matrix out(d, d);
    for (int z1 = 0; z1 < d; ++z1) {
        for (int z2 = 0; z2 < d; ++z2) {
            // Tr(A T^dag) contracts A along the single nonzero of each T column.
            cd acc = 0.0;
            for (int j = 0; j < d; ++j) {
                const long long row = basis.mod(j + z1);
                acc += a.mat(row, j) * std::conj(basis.omega_pow(z2 * (j + basis.half * z1)));
            }
            out(z1, z2) = acc / static_cast<double>(d);
        }
    }
    return out;
}

Matrix weyl_symbol(const DiscreteWeylBasis& basis, const Operator& a) {
    const int d = basis.d;
    if (a.dim() != d) throw std::invalid_argument("operator does not match basis dimension");
    Matrix out(d, d);
    for (int e1 = 0; e1 < d; ++e1) {
        for (int e2 = 0; e2 < d; ++e2) {
            cd acc = 0.0;
            for (int j = 0; j < d; ++j)
                acc += a.mat(j, basis.mod(2 * e1 - j)) * basis.omega_pow(2 * e2 * (e1 - j));
            out(e1, e2) = acc;
        }
    }
    return out;
}

StateVector maximally_entangled(const DiscreteWeylBasis& basis) {
    const int d = basis.d;
    qlinalg::Vector phi = qlinalg::Vector::Zero(d * d);
    for (int k = 0; k < d; ++k) phi(k * d + k) = 1.0;
    return StateVector(std::move(phi), {d, d});
}

weakcore::PrePostEnsemble epr_ensemble(const DiscreteWeylBasis& basis, const PhasePoint& zeta_i,
                                       const PhasePoint& eta_f) {
    const int d = basis.d;
    const Matrix t = translation_op(basis, zeta_i).mat;
    const Matrix delta = phase_point_op(basis, eta_f).mat;
    // (M x I)|Phi_0> reshapes to the matrix M itself (system-major index).
    qlinalg::Vector psi_i(d * d), psi_f(d * d);
    for (int s = 0; s < d; ++s) {
        for (int a = 0; a < d; ++a) {
            psi_i(s * d + a) = t(s, a);
            psi_f(s * d + a) = delta(s, a);
        }
    }
    return weakcore::PrePostEnsemble(StateVector(std::move(psi_i), {d, d}),
                                     StateVector(std::move(psi_f), {d, d}), d, d);
}

PhasePoint eta_s(const DiscreteWeylBasis& basis, const PhasePoint& zeta_i,
                 const PhasePoint& eta_f) {
    return basis.reduce({eta_f.z1 + basis.half * zeta_i.z1, eta_f.z2 + basis.half * zeta_i.z2});
}

CompositeWeakTransform composite_weak_transform(const DiscreteWeylBasis& basis,
                                                const PhasePoint& zeta_i,
                                                const PhasePoint& eta_f) {
    const int d = basis.d;
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    const Matrix mi = inv_sqrt_d * translation_op(basis, zeta_i).mat;   // |Phi_zeta> reshaped
    const Matrix mf = inv_sqrt_d * phase_point_op(basis, eta_f).mat;    // |Psi_eta> reshaped
    const cd overlap = (mf.adjoint() * mi).trace();

    std::vector<Matrix> trans(d * d);
    for (int z1 = 0; z1 < d; ++z1)
        for (int z2 = 0; z2 < d; ++z2)
            trans[z1 * d + z2] = translation_op(basis, {z1, z2}).mat;

    CompositeWeakTransform out;
    out.d = d;
    out.values.resize(static_cast<std::size_t>(d) * d * d * d);
    const double scale = 1.0 / (d * d);
    std::size_t idx = 0;
    for (int z1 = 0; z1 < d; ++z1) {
        for (int z2 = 0; z2 < d; ++z2) {
            const Matrix left = trans[z1 * d + z2] * mi;
            for (int w1 = 0; w1 < d; ++w1) {
                for (int w2 = 0; w2 < d; ++w2) {
                    // <Psi|(T_z x T_w)|Phi> = Tr(Mf^dag T_z Mi T_w^T)
                    const cd amp = (mf.adjoint() * left * trans[w1 * d + w2].transpose()).trace();
                    out.values[idx++] = scale * amp / overlap;
                }
            }
        }
    }
    return out;
}

}  // namespace weakjoint::weyl
