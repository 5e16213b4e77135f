#include "weakjoint/weakcore.hpp"

#include <Eigen/SVD>

#include <cmath>

namespace weakjoint::weakcore {

namespace {

// View the composite amplitudes as a (system x ancilla) matrix. The flat
// index is system-major: amps(s*da + a).
Eigen::Map<const Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
as_matrix(const StateVector& psi, int ds, int da) {
    return {psi.amps.data(), ds, da};
}

}  // namespace

PrePostEnsemble::PrePostEnsemble(StateVector i, StateVector f, int sys_dim, int anc_dim,
                                 double floor)
    : psi_i(std::move(i)), psi_f(std::move(f)), system_dim(sys_dim), ancilla_dim(anc_dim),
      overlap_floor(floor) {
    if (system_dim <= 0 || ancilla_dim < 0)
        throw std::invalid_argument("invalid ensemble dimensions");
    const int total = total_dim();
    if (psi_i.dim() != total || psi_f.dim() != total)
        throw std::invalid_argument("selection states do not match system x ancilla dimension");
    if (std::abs(overlap()) <= overlap_floor)
        throw OrthogonalSelection("pre/postselection overlap at or below floor");
}

std::shared_ptr<const OperatorBasis> OperatorBasis::from_elements(std::vector<Operator> els) {
    if (els.empty()) throw std::invalid_argument("empty operator basis");
    const int d = els.front().dim();
    if (static_cast<int>(els.size()) != d * d)
        throw std::invalid_argument("operator basis must have d^2 elements");
    auto basis = std::make_shared<OperatorBasis>();
    basis->d = d;
    basis->elements = std::move(els);
    const int n = d * d;
    basis->gram.resize(n, n);
    basis->identity_vector.resize(n);
    for (int i = 0; i < n; ++i) {
        const auto& ei = basis->elements[i];
        if (ei.dim() != d) throw std::invalid_argument("basis elements must share dimension");
        basis->identity_vector(i) = std::conj(ei.mat.trace());
        for (int j = 0; j < n; ++j) {
            basis->gram(i, j) = (ei.mat * basis->elements[j].mat).trace();
            const cd inner = (ei.mat.adjoint() * basis->elements[j].mat).trace();
            const cd expect = (i == j) ? cd(1.0) : cd(0.0);
            if (std::abs(inner - expect) > 1e-12)
                throw std::invalid_argument("operator basis is not orthonormal");
        }
    }
    return basis;
}

std::shared_ptr<const OperatorBasis> OperatorBasis::gell_mann(int d) {
    if (d < 2) throw std::invalid_argument("basis dimension must be >= 2");
    std::vector<Operator> els;
    els.reserve(d * d);
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    els.emplace_back(Matrix(inv_sqrt_d * Matrix::Identity(d, d)));
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int j = 0; j < d; ++j) {
        for (int k = j + 1; k < d; ++k) {
            Matrix sym = Matrix::Zero(d, d);
            sym(j, k) = sym(k, j) = inv_sqrt2;
            els.emplace_back(std::move(sym));
            Matrix asym = Matrix::Zero(d, d);
            asym(j, k) = cd(0.0, -inv_sqrt2);
            asym(k, j) = cd(0.0, inv_sqrt2);
            els.emplace_back(std::move(asym));
        }
    }
    for (int l = 1; l < d; ++l) {
        Matrix diag = Matrix::Zero(d, d);
        const double norm = 1.0 / std::sqrt(static_cast<double>(l) * (l + 1));
        for (int m = 0; m < l; ++m) diag(m, m) = norm;
        diag(l, l) = -l * norm;
        els.emplace_back(std::move(diag));
    }
    return from_elements(std::move(els));
}

Vector OperatorBasis::expand(const Operator& a) const {
    if (a.dim() != d) throw std::invalid_argument("operator does not match basis dimension");
    const int n = d * d;
    Vector coeffs(n);
    for (int i = 0; i < n; ++i)
        coeffs(i) = (elements[i].mat.adjoint() * a.mat).trace();
    return coeffs;
}

WeakVector::WeakVector(Vector w_, BasisPtr basis_) : w(std::move(w_)), basis(std::move(basis_)) {
    if (!basis) throw std::invalid_argument("weak vector needs a basis");
    if (w.size() != basis->d * basis->d)
        throw std::invalid_argument("weak vector length must be d^2");
    const cd iw = basis->identity_vector.transpose() * w;  // euclidean dot, no conjugation
    if (std::abs(iw - cd(1.0)) > 1e-8)
        throw TraceNotOne("weak vector violates I.w = 1");
}

Operator WeakVector::reconstruct() const {
    Matrix out = Matrix::Zero(basis->d, basis->d);
    for (int i = 0; i < basis->d * basis->d; ++i)
        out += w(i) * basis->elements[i].mat.adjoint();
    return Operator(std::move(out));
}

cd weak_value(const Operator& a, const PrePostEnsemble& ens) {
    if (a.dim() != ens.system_dim)
        throw std::invalid_argument("observable does not match system dimension");
    const cd ovl = ens.overlap();
    if (std::abs(ovl) <= ens.overlap_floor)
        throw OrthogonalSelection("pre/postselection overlap at or below floor");
    if (ens.ancilla_dim == 0) return ens.psi_f.amps.dot(a.mat * ens.psi_i.amps) / ovl;
    const int ds = ens.system_dim, da = ens.ancilla_dim;
    auto mi = as_matrix(ens.psi_i, ds, da);
    auto mf = as_matrix(ens.psi_f, ds, da);
    // <psi_f|(A x I)|psi_i> = sum_{s,s',a} conj(F(s,a)) A(s,s') I(s',a)
    return ((a.mat * mi).array() * mf.array().conjugate()).sum() / ovl;
}

Operator weak_value_operator(const PrePostEnsemble& ens) {
    const cd ovl = ens.overlap();
    if (std::abs(ovl) <= ens.overlap_floor)
        throw OrthogonalSelection("pre/postselection overlap at or below floor");
    Matrix m;
    if (ens.ancilla_dim == 0) {
        m = ens.psi_i.amps * ens.psi_f.amps.adjoint();
    } else {
        const int ds = ens.system_dim, da = ens.ancilla_dim;
        auto mi = as_matrix(ens.psi_i, ds, da);
        auto mf = as_matrix(ens.psi_f, ds, da);
        // Tr_a(|psi_i><psi_f|) = Psi_i Psi_f^dag on the reshaped matrices.
        m = mi * mf.adjoint();
    }
    return Operator(Matrix(m / ovl));
}

WeakVector weak_vector(const Operator& w_op, BasisPtr basis) {
    if (w_op.dim() != basis->d)
        throw std::invalid_argument("operator does not match basis dimension");
    const int n = basis->d * basis->d;
    Vector w(n);
    for (int i = 0; i < n; ++i) w(i) = (basis->elements[i].mat * w_op.mat).trace();
    return WeakVector(std::move(w), std::move(basis));
}

Realizability product_realizability(const Operator& w_op, double rank_tol) {
    const cd tr = w_op.mat.trace();
    if (std::abs(tr - cd(1.0)) > 1e-8)
        throw TraceNotOne("weak value operator must have unit trace");

    Eigen::JacobiSVD<Matrix> svd(w_op.mat, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    Realizability result;
    result.singular_ratio = (sv.size() > 1 && sv(0) > 0.0) ? sv(1) / sv(0) : 0.0;

    auto basis = OperatorBasis::gell_mann(w_op.dim());
    const WeakVector wv = weak_vector(w_op, basis);
    result.gram_constraint = wv.w.transpose() * basis->gram.conjugate() * wv.w;
    result.norm_constraint = wv.w.squaredNorm();
    result.gram_constraint_holds = std::abs(result.gram_constraint - cd(1.0)) <= 1e-8;
    result.norm_constraint_holds = result.norm_constraint >= 1.0 - 1e-8;

    if (result.singular_ratio <= rank_tol) {
        result.kind = RealizabilityKind::ProductRealizable;
        result.chi_i = StateVector(svd.matrixU().col(0));
        result.chi_f = StateVector(svd.matrixV().col(0));
    } else {
        result.kind = RealizabilityKind::EntanglementRequired;
    }
    return result;
}

WeakVector solve_assignment(const AssignmentProblem& prob) {
    if (!prob.basis) throw std::invalid_argument("assignment problem needs a basis");
    const int n = prob.basis->d * prob.basis->d;
    const int m = static_cast<int>(prob.targets.size()) + 1;
    Matrix rows(m, n);
    Vector rhs(m);
    for (int i = 0; i < m - 1; ++i) {
        const auto& [op, alpha] = prob.targets[i];
        rows.row(i) = prob.basis->expand(op).transpose();
        rhs(i) = alpha;
    }
    rows.row(m - 1) = prob.basis->identity_vector.transpose();
    rhs(m - 1) = 1.0;

    // Minimum-norm least squares through the SVD pseudoinverse.
    Eigen::JacobiSVD<Matrix> svd(rows, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cutoff = 1e-10 * (sv.size() > 0 ? sv(0) : 0.0);
    Vector coeffs = svd.matrixU().adjoint() * rhs;
    for (Eigen::Index k = 0; k < sv.size(); ++k)
        coeffs(k) = (sv(k) > cutoff) ? coeffs(k) / sv(k) : cd(0.0);
    Vector w = svd.matrixV() * coeffs;

    const double residual = (rows * w - rhs).cwiseAbs().maxCoeff();
    if (residual > 1e-8)
        throw Infeasible("assignment targets are inconsistent (residual " +
                         std::to_string(residual) + ")");
    return WeakVector(std::move(w), prob.basis);
}

PrePostEnsemble realize_entangled(const WeakVector& wv) {
    const auto& basis = *wv.basis;
    const int d = basis.d;
    const cd zi = basis.identity_vector.transpose() * wv.w;
    if (std::abs(zi) < 1e-12)
        throw DegenerateRealization("z.I vanishes; no entangled realization");

    Matrix m = Matrix::Zero(d, d);
    for (int i = 0; i < d * d; ++i) m += wv.w(i) * basis.elements[i].mat.adjoint();

    // |Phi> = sum_k |k>|k>/sqrt(d); (M x I)|Phi> reshapes to M itself.
    Vector phi = Vector::Zero(d * d);
    for (int k = 0; k < d; ++k) phi(k * d + k) = 1.0;
    Vector psi_i(d * d);
    for (int s = 0; s < d; ++s)
        for (int a = 0; a < d; ++a) psi_i(s * d + a) = m(s, a);

    return PrePostEnsemble(StateVector(std::move(psi_i), {d, d}),
                           StateVector(std::move(phi), {d, d}), d, d);
}

ResidualReport verify_assignment(const PrePostEnsemble& ens, const AssignmentProblem& prob) {
    ResidualReport report;
    report.per_target.reserve(prob.targets.size());
    for (const auto& [op, alpha] : prob.targets) {
        const cd err = weak_value(op, ens) - alpha;
        report.per_target.push_back(err);
        report.max_abs = std::max(report.max_abs, std::abs(err));
    }
    return report;
}

}  // namespace weakjoint::weakcore
