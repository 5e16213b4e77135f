#include "weakjoint/jointmeas.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "weakjoint/parallel.hpp"

namespace weakjoint::jointmeas {

namespace {

using RowMajorMap =
    Eigen::Map<const Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// Reshape the composite amplitudes to (system x ancilla); ancilla-free
// states become a single column.
Matrix state_matrix(const PrePostEnsemble& ens, const StateVector& psi) {
    const int ds = ens.system_dim;
    const int da = ens.ancilla_dim > 0 ? ens.ancilla_dim : 1;
    return RowMajorMap(psi.amps.data(), ds, da);
}

Vector flatten_rowmajor(const Matrix& m) {
    Vector v(m.size());
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) v(r * m.cols() + c) = m(r, c);
    return v;
}

}  // namespace

InstrumentGrid::InstrumentGrid(int n_, double q_max_, int axes_, std::vector<double> spreads_)
    : n(n_), q_max(q_max_), axes(axes_), spreads(std::move(spreads_)) {
    if (n < 8) throw std::invalid_argument("instrument grid needs n >= 8");
    if (q_max <= 0.0) throw std::invalid_argument("q_max must be positive");
    if (axes != 2 && axes != 4) throw std::invalid_argument("axes must be 2 or 4");
    if (static_cast<int>(spreads.size()) != axes)
        throw std::invalid_argument("one pointer spread per axis required");
    for (double s : spreads)
        if (s <= 0.0) throw std::invalid_argument("pointer spreads must be positive");
}

double InstrumentGrid::dpi() const { return 2.0 * std::numbers::pi / (n * dq()); }

std::vector<double> InstrumentGrid::q_values() const {
    std::vector<double> q(n);
    for (int j = 0; j < n; ++j) q[j] = (j - n / 2) * dq();
    return q;
}

std::vector<double> InstrumentGrid::pi_values() const {
    std::vector<double> pi(n);
    for (int m = 0; m < n; ++m) pi[m] = (m - n / 2) * dpi();
    return pi;
}

std::size_t InstrumentGrid::total_points() const {
    std::size_t total = 1;
    for (int a = 0; a < axes; ++a) total *= static_cast<std::size_t>(n);
    return total;
}

std::vector<int> InstrumentGrid::decode(std::size_t flat) const {
    std::vector<int> idx(axes);
    for (int a = axes - 1; a >= 0; --a) {
        idx[a] = static_cast<int>(flat % n);
        flat /= n;
    }
    return idx;
}

std::size_t InstrumentGrid::zero_index() const {
    std::size_t flat = 0;
    for (int a = 0; a < axes; ++a) flat = flat * n + n / 2;
    return flat;
}

cd KrausSample::at(const std::vector<int>& idx) const {
    std::size_t flat = 0;
    for (int a = 0; a < grid.axes; ++a) flat = flat * grid.n + idx[a];
    return values[flat];
}

KrausSample kraus_sample(const PrePostEnsemble& ens, const std::vector<Operator>& observables,
                         const InstrumentGrid& grid, int threads) {
    if (static_cast<int>(observables.size()) != grid.axes)
        throw std::invalid_argument("one observable per grid axis required");
    for (const auto& a : observables) {
        if (a.dim() != ens.total_dim())
            throw std::invalid_argument("observable does not match ensemble dimension");
        if (!a.is_hermitian()) throw NonHermitianInput("coupling observables must be Hermitian");
    }
    const cd ovl = ens.overlap();
    if (std::abs(ovl) <= ens.overlap_floor)
        throw OrthogonalSelection("pre/postselection overlap at or below floor");

    const auto q = grid.q_values();
    KrausSample sample{grid, std::vector<cd>(grid.total_points())};
    parallel_for(
        grid.total_points(),
        [&](std::size_t flat) {
            const auto idx = grid.decode(flat);
            Matrix h = Matrix::Zero(ens.total_dim(), ens.total_dim());
            for (int a = 0; a < grid.axes; ++a) h += q[idx[a]] * observables[a].mat;
            sample.values[flat] =
                ens.psi_f.amps.dot(qlinalg::expi_hermitian(h) * ens.psi_i.amps) / ovl;
        },
        threads);
    return sample;
}

KrausSample kraus_sample(const PrePostEnsemble& ens,
                         const std::vector<FactoredObservable>& observables,
                         const InstrumentGrid& grid, int threads) {
    if (static_cast<int>(observables.size()) != grid.axes)
        throw std::invalid_argument("one observable per grid axis required");
    const int ds = ens.system_dim;
    const int da = ens.ancilla_dim > 0 ? ens.ancilla_dim : 1;
    bool any_sys = false, any_anc = false;
    for (const auto& fo : observables) {
        if (fo.system) {
            if (fo.system->dim() != ds)
                throw std::invalid_argument("system part does not match system dimension");
            if (!fo.system->is_hermitian()) throw NonHermitianInput("system part not Hermitian");
            any_sys = true;
        }
        if (fo.ancilla) {
            if (ens.ancilla_dim == 0)
                throw std::invalid_argument("ancilla observable on an ancilla-free ensemble");
            if (fo.ancilla->dim() != da)
                throw std::invalid_argument("ancilla part does not match ancilla dimension");
            if (!fo.ancilla->is_hermitian()) throw NonHermitianInput("ancilla part not Hermitian");
            any_anc = true;
        }
    }
    const cd ovl = ens.overlap();
    if (std::abs(ovl) <= ens.overlap_floor)
        throw OrthogonalSelection("pre/postselection overlap at or below floor");

    const Matrix mi = state_matrix(ens, ens.psi_i);
    const Matrix mf_conj = state_matrix(ens, ens.psi_f).conjugate();
    const auto q = grid.q_values();

    KrausSample sample{grid, std::vector<cd>(grid.total_points())};
    parallel_for(
        grid.total_points(),
        [&](std::size_t flat) {
            const auto idx = grid.decode(flat);
            Matrix tmp = mi;
            if (any_sys) {
                Matrix hs = Matrix::Zero(ds, ds);
                for (int a = 0; a < grid.axes; ++a)
                    if (observables[a].system) hs += q[idx[a]] * observables[a].system->mat;
                tmp = qlinalg::expi_hermitian(hs) * tmp;
            }
            if (any_anc) {
                Matrix ha = Matrix::Zero(da, da);
                for (int a = 0; a < grid.axes; ++a)
                    if (observables[a].ancilla) ha += q[idx[a]] * observables[a].ancilla->mat;
                tmp = tmp * qlinalg::expi_hermitian(ha).transpose();
            }
            sample.values[flat] = (mf_conj.array() * tmp.array()).sum() / ovl;
        },
        threads);
    return sample;
}

namespace {

struct SplitContext {
    Eigen::VectorXd xs;      // position samples
    Eigen::VectorXd ps;      // momentum per DFT bin
    Matrix u;                // forward unitary DFT
    Matrix u_adj;
};

Vector phase_vector(const Eigen::VectorXd& vals, double coeff) {
    Vector out(vals.size());
    for (Eigen::Index i = 0; i < vals.size(); ++i) out(i) = std::polar(1.0, coeff * vals(i));
    return out;
}

// One Strang substep exp(iX gx/2) exp(iP gp) exp(iX gx/2) applied on the
// system (row) index of the reshaped state.
void split_step_rows(Matrix& psi, const SplitContext& ctx, double gx, double gp) {
    const Vector half = phase_vector(ctx.xs, gx / 2.0);
    psi = half.asDiagonal() * psi;
    psi = (ctx.u_adj * (phase_vector(ctx.ps, gp).asDiagonal() * (ctx.u * psi))).eval();
    psi = half.asDiagonal() * psi;
}

// Same on the ancilla (column) index: right-multiplication by M^T with
// M = exp(iX gx/2) exp(iP gp) exp(iX gx/2) and U symmetric.
void split_step_cols(Matrix& psi, const SplitContext& ctx, double gx, double gp) {
    const Vector half = phase_vector(ctx.xs, gx / 2.0);
    psi = psi * half.asDiagonal();
    psi = (((psi * ctx.u) * phase_vector(ctx.ps, gp).asDiagonal()) * ctx.u.conjugate()).eval();
    psi = psi * half.asDiagonal();
}

}  // namespace

KrausSample kraus_sample_split(const PrePostEnsemble& ens, const CanonicalGrid& sys_grid,
                               const std::vector<CanonicalCoupling>& couplings,
                               const InstrumentGrid& grid, int substeps, int threads) {
    if (static_cast<int>(couplings.size()) != grid.axes)
        throw std::invalid_argument("one coupling per grid axis required");
    if (ens.system_dim != sys_grid.d)
        throw std::invalid_argument("system dimension does not match grid");
    if (substeps < 1) throw std::invalid_argument("substeps must be >= 1");
    for (const auto& c : couplings)
        if (c.side == CanonicalCoupling::Side::Ancilla && ens.ancilla_dim != sys_grid.d)
            throw std::invalid_argument("ancilla couplings need a same-grid ancilla");

    const cd ovl = ens.overlap();
    if (std::abs(ovl) <= ens.overlap_floor)
        throw OrthogonalSelection("pre/postselection overlap at or below floor");

    const int d = sys_grid.d;
    SplitContext ctx;
    ctx.xs = Eigen::Map<const Eigen::VectorXd>(sys_grid.positions().data(), d);
    ctx.ps = Eigen::Map<const Eigen::VectorXd>(sys_grid.momenta().data(), d);
    ctx.u = qlinalg::dft_matrix(d);
    ctx.u_adj = ctx.u.adjoint();

    const Matrix mi = state_matrix(ens, ens.psi_i);
    const Matrix mf_conj = state_matrix(ens, ens.psi_f).conjugate();
    const auto q = grid.q_values();

    KrausSample sample{grid, std::vector<cd>(grid.total_points())};

    auto is = [&](int a, CanonicalCoupling::Side s, CanonicalCoupling::Quad qd) {
        return couplings[a].side == s && couplings[a].quad == qd;
    };
    using Side = CanonicalCoupling::Side;
    using Quad = CanonicalCoupling::Quad;
    const bool canonical_two_axis = grid.axes == 2 && substeps == 1 &&
                                    is(0, Side::System, Quad::Position) &&
                                    is(1, Side::System, Quad::Momentum);
    const bool canonical_four_axis =
        grid.axes == 4 && substeps == 1 && is(0, Side::System, Quad::Position) &&
        is(1, Side::System, Quad::Momentum) && is(2, Side::Ancilla, Quad::Position) &&
        is(3, Side::Ancilla, Quad::Momentum);

    if (canonical_two_axis) {
        // F(q1, q2) = sum_k exp(i p_k q2) rho_{q1}(k) with
        // rho_{q1}(k) = sum_a conj((U e^{-iX q1/2} Mf)(k,a)) (U e^{iX q1/2} Mi)(k,a):
        // the q2 dependence collapses onto the momentum diagonal.
        const Matrix mf = state_matrix(ens, ens.psi_f);
        parallel_for(
            static_cast<std::size_t>(grid.n),
            [&](std::size_t j1) {
                const Vector half = phase_vector(ctx.xs, q[j1] / 2.0);
                const Matrix m1 = ctx.u * (half.asDiagonal() * mi);
                const Matrix m2 = ctx.u * (half.conjugate().asDiagonal() * mf);
                Vector rho = (m2.conjugate().array() * m1.array()).rowwise().sum();
                for (int j2 = 0; j2 < grid.n; ++j2) {
                    cd acc = 0.0;
                    for (int k = 0; k < d; ++k)
                        acc += std::polar(1.0, ctx.ps(k) * q[j2]) * rho(k);
                    sample.values[j1 * grid.n + j2] = acc / ovl;
                }
            },
            threads);
        return sample;
    }

    if (canonical_four_axis) {
        // Both momentum couplings collapse onto DFT diagonals:
        // F = sum_{k,l} e^{i(p_k q2 + p_l q4)} B(k,l) conj(C(k,l)) with
        // B = U D1 Mi D3 U and C = U conj(D1) Mf conj(D3) U per (q1, q3).
        const Matrix mf = state_matrix(ens, ens.psi_f);
        Matrix mom_phases(grid.n, d);  // e^{i p_k q_j}
        for (int j = 0; j < grid.n; ++j)
            for (int k = 0; k < d; ++k) mom_phases(j, k) = std::polar(1.0, ctx.ps(k) * q[j]);

        const std::size_t nn = static_cast<std::size_t>(grid.n) * grid.n;
        parallel_for(
            nn,
            [&](std::size_t flat13) {
                const int j1 = static_cast<int>(flat13 / grid.n);
                const int j3 = static_cast<int>(flat13 % grid.n);
                const Vector h1 = phase_vector(ctx.xs, q[j1] / 2.0);
                const Vector h3 = phase_vector(ctx.xs, q[j3] / 2.0);
                const Matrix b = ctx.u * (h1.asDiagonal() * mi * h3.asDiagonal()) * ctx.u;
                const Matrix c =
                    ctx.u * (h1.conjugate().asDiagonal() * mf * h3.conjugate().asDiagonal()) *
                    ctx.u;
                const Matrix rho = b.cwiseProduct(c.conjugate());
                for (int j2 = 0; j2 < grid.n; ++j2) {
                    const Vector col = rho.transpose() * mom_phases.row(j2).transpose();
                    for (int j4 = 0; j4 < grid.n; ++j4) {
                        const cd acc = mom_phases.row(j4) * col;
                        const std::size_t out =
                            ((static_cast<std::size_t>(j1) * grid.n + j2) * grid.n + j3) *
                                grid.n +
                            j4;
                        sample.values[out] = acc / ovl;
                    }
                }
            },
            threads);
        return sample;
    }

    parallel_for(
        grid.total_points(),
        [&](std::size_t flat) {
            const auto idx = grid.decode(flat);
            double gx_s = 0.0, gp_s = 0.0, gx_a = 0.0, gp_a = 0.0;
            for (int a = 0; a < grid.axes; ++a) {
                const double qa = q[idx[a]];
                const bool sys = couplings[a].side == CanonicalCoupling::Side::System;
                if (couplings[a].quad == CanonicalCoupling::Quad::Position)
                    (sys ? gx_s : gx_a) += qa;
                else
                    (sys ? gp_s : gp_a) += qa;
            }
            Matrix psi = mi;
            for (int s = 0; s < substeps; ++s) {
                if (gx_s != 0.0 || gp_s != 0.0)
                    split_step_rows(psi, ctx, gx_s / substeps, gp_s / substeps);
                if (gx_a != 0.0 || gp_a != 0.0)
                    split_step_cols(psi, ctx, gx_a / substeps, gp_a / substeps);
            }
            sample.values[flat] = (mf_conj.array() * psi.array()).sum() / ovl;
        },
        threads);
    return sample;
}

PhaseFit phase_fit(const KrausSample& sample) {
    const auto& grid = sample.grid;
    const int axes = grid.axes;
    const int npairs = axes * (axes - 1) / 2;
    const int ncols = axes + npairs;
    const auto q = grid.q_values();

    PhaseFit fit;
    fit.min_abs_f = std::numeric_limits<double>::infinity();
    for (const cd& v : sample.values) {
        const double m = std::abs(v);
        fit.min_abs_f = std::min(fit.min_abs_f, m);
        fit.amplitude_flatness = std::max(fit.amplitude_flatness, std::abs(m - 1.0));
    }
    if (fit.min_abs_f < 0.1)
        throw AmplitudeCollapse("min |F| = " + std::to_string(fit.min_abs_f) +
                                " below 0.1; shrink the fit window");

    auto pair_col = [&](int k, int l) {
        // Column of the (k, l) cross coefficient, k < l.
        int col = axes, idx = 0;
        for (int a = 0; a < axes; ++a)
            for (int b = a + 1; b < axes; ++b, ++idx)
                if (a == k && b == l) col = axes + idx;
        return col;
    };

    // Streaming normal equations for the local-increment regression:
    // arg[F(q + dq e_k) conj(F(q))]/dq = alpha_k + sum_{l != k} beta_kl q_l.
    Eigen::MatrixXd ata = Eigen::MatrixXd::Zero(ncols, ncols);
    Eigen::VectorXd atb = Eigen::VectorXd::Zero(ncols);
    std::vector<std::size_t> strides(axes, 1);
    for (int a = axes - 2; a >= 0; --a) strides[a] = strides[a + 1] * grid.n;

    Eigen::VectorXd row(ncols);
    const std::size_t total = grid.total_points();
    for (std::size_t flat = 0; flat < total; ++flat) {
        const auto idx = grid.decode(flat);
        for (int k = 0; k < axes; ++k) {
            if (idx[k] + 1 >= grid.n) continue;
            const cd ratio = sample.values[flat + strides[k]] * std::conj(sample.values[flat]);
            const double y = std::arg(ratio) / grid.dq();
            row.setZero();
            row(k) = 1.0;
            for (int l = 0; l < axes; ++l) {
                if (l == k) continue;
                row(pair_col(std::min(k, l), std::max(k, l))) = q[idx[l]];
            }
            ata.selfadjointView<Eigen::Lower>().rankUpdate(row);
            atb += y * row;
        }
    }
    Eigen::VectorXd sol = Eigen::MatrixXd(ata.selfadjointView<Eigen::Lower>()).ldlt().solve(atb);

    fit.alpha.assign(axes, 0.0);
    for (int k = 0; k < axes; ++k) fit.alpha[k] = sol(k);
    fit.beta = Eigen::MatrixXd::Zero(axes, axes);
    {
        int idx = 0;
        for (int a = 0; a < axes; ++a)
            for (int b = a + 1; b < axes; ++b, ++idx)
                fit.beta(a, b) = fit.beta(b, a) = sol(axes + idx);
    }
    fit.c0 = std::arg(sample.values[grid.zero_index()]);

    double sumsq = 0.0;
    for (std::size_t flat = 0; flat < total; ++flat) {
        const auto idx = grid.decode(flat);
        double model = fit.c0;
        for (int k = 0; k < axes; ++k) {
            model += fit.alpha[k] * q[idx[k]];
            for (int l = k + 1; l < axes; ++l) model += fit.beta(k, l) * q[idx[k]] * q[idx[l]];
        }
        const double dev = std::arg(sample.values[flat] * std::polar(1.0, -model));
        sumsq += dev * dev;
    }
    fit.residual_rms = std::sqrt(sumsq / static_cast<double>(total));
    return fit;
}

std::vector<Vector> gaussian_instruments(const InstrumentGrid& grid) {
    const auto q = grid.q_values();
    std::vector<Vector> out;
    out.reserve(grid.axes);
    for (int a = 0; a < grid.axes; ++a) {
        const double sigma_q = 1.0 / (2.0 * grid.spreads[a]);
        Vector g(grid.n);
        for (int j = 0; j < grid.n; ++j)
            g(j) = std::exp(-q[j] * q[j] / (4.0 * sigma_q * sigma_q));
        out.push_back(g / g.norm());
    }
    return out;
}

Vector two_peak_instrument(const InstrumentGrid& grid, int axis, double offset) {
    const auto q = grid.q_values();
    const double sigma_q = 1.0 / (2.0 * grid.spreads[axis]);
    Vector g(grid.n);
    for (int j = 0; j < grid.n; ++j) {
        const double a = q[j] - offset, b = q[j] + offset;
        g(j) = std::exp(-a * a / (4.0 * sigma_q * sigma_q)) +
               std::exp(-b * b / (4.0 * sigma_q * sigma_q));
    }
    return g / g.norm();
}

namespace {

// In-place transform of one tensor axis by an n x n matrix.
void apply_along_axis(std::vector<cd>& data, int n, int axes, int axis, const Matrix& m) {
    std::size_t stride = 1;
    for (int a = axes - 1; a > axis; --a) stride *= static_cast<std::size_t>(n);
    const std::size_t block = stride * static_cast<std::size_t>(n);
    const std::size_t outer = data.size() / block;
    Vector in(n), out(n);
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t s = 0; s < stride; ++s) {
            const std::size_t base = o * block + s;
            for (int j = 0; j < n; ++j) in(j) = data[base + j * stride];
            out.noalias() = m * in;
            for (int j = 0; j < n; ++j) data[base + j * stride] = out(j);
        }
    }
}

Matrix pointer_transform_matrix(const InstrumentGrid& grid) {
    const auto q = grid.q_values();
    const auto pi = grid.pi_values();
    Matrix d(grid.n, grid.n);
    const double norm = 1.0 / std::sqrt(static_cast<double>(grid.n));
    for (int m = 0; m < grid.n; ++m)
        for (int j = 0; j < grid.n; ++j) d(m, j) = std::polar(norm, -pi[m] * q[j]);
    return d;
}

}  // namespace

PointerDistribution conditional_pointer_distribution(const KrausSample& sample,
                                                     const InstrumentGrid& grid) {
    return conditional_pointer_distribution(sample, grid, gaussian_instruments(grid));
}

PointerDistribution conditional_pointer_distribution(const KrausSample& sample,
                                                     const InstrumentGrid& grid,
                                                     const std::vector<Vector>& instruments) {
    if (grid.n != sample.grid.n || grid.axes != sample.grid.axes ||
        grid.q_max != sample.grid.q_max)
        throw std::invalid_argument("pointer grid geometry must match the Kraus sample");
    if (static_cast<int>(instruments.size()) != grid.axes)
        throw std::invalid_argument("one instrument state per axis required");

    std::vector<cd> psi(sample.values.size());
    for (std::size_t flat = 0; flat < psi.size(); ++flat) {
        const auto idx = grid.decode(flat);
        cd amp = sample.values[flat];
        for (int a = 0; a < grid.axes; ++a) amp *= instruments[a](idx[a]);
        psi[flat] = amp;
    }
    double norm = 0.0;
    for (const cd& v : psi) norm += std::norm(v);
    if (norm <= 0.0) throw Error("conditional state has zero norm");
    const double scale = 1.0 / std::sqrt(norm);
    for (cd& v : psi) v *= scale;

    const Matrix dmat = pointer_transform_matrix(grid);
    for (int a = 0; a < grid.axes; ++a) apply_along_axis(psi, grid.n, grid.axes, a, dmat);

    PointerDistribution dist;
    dist.grid = grid;
    dist.p.resize(psi.size());
    for (std::size_t i = 0; i < psi.size(); ++i) dist.p[i] = std::norm(psi[i]);
    return dist;
}

std::vector<double> PointerDistribution::marginal(int axis) const {
    std::vector<double> m(grid.n, 0.0);
    std::size_t stride = 1;
    for (int a = grid.axes - 1; a > axis; --a) stride *= static_cast<std::size_t>(grid.n);
    for (std::size_t flat = 0; flat < p.size(); ++flat)
        m[(flat / stride) % grid.n] += p[flat];
    return m;
}

double PointerDistribution::mean(int axis) const {
    const auto m = marginal(axis);
    const auto pi = grid.pi_values();
    double acc = 0.0;
    for (int i = 0; i < grid.n; ++i) acc += pi[i] * m[i];
    return acc;
}

double PointerDistribution::sigma(int axis) const {
    const auto m = marginal(axis);
    const auto pi = grid.pi_values();
    const double mu = mean(axis);
    double acc = 0.0;
    for (int i = 0; i < grid.n; ++i) acc += (pi[i] - mu) * (pi[i] - mu) * m[i];
    return std::sqrt(acc);
}

UncertaintyReport uncertainty_products(const PointerDistribution& dist) {
    UncertaintyReport rep;
    for (int a = 0; a < dist.grid.axes; ++a) rep.sigma.push_back(dist.sigma(a));
    rep.product_12 = rep.sigma[0] * rep.sigma[1];
    const double d12 = dist.grid.spreads[0] * dist.grid.spreads[1];
    rep.bound_sum = d12 + 1.0 / (16.0 * d12);
    if (dist.grid.axes == 4)
        rep.four_product = rep.sigma[0] * rep.sigma[1] * rep.sigma[2] * rep.sigma[3];
    return rep;
}

double total_variation(const PointerDistribution& a, const PointerDistribution& b) {
    if (a.p.size() != b.p.size())
        throw std::invalid_argument("pointer distributions live on different lattices");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.p.size(); ++i) acc += std::abs(a.p[i] - b.p[i]);
    return 0.5 * acc;
}

NaiveEnsemble naive_xp_ensemble(const CanonicalGrid& grid, double x, double p, double q_reach) {
    const int d = grid.d;
    const int j = grid.index_of(x);
    const auto xs = grid.positions();
    const double x_s = xs[j];
    const double dp = 2.0 * std::numbers::pi / grid.L;
    const double p_s = dp * std::lround(p / dp);

    if (std::abs(x_s) + q_reach > grid.L / 2.0 - 2.0 * grid.dx())
        throw EdgeClipping("position selection too close to the grid edge");
    if (std::abs(p_s) + q_reach > grid.p_max() - 2.0 * dp)
        throw EdgeClipping("momentum selection too close to the band edge");

    Vector plane(d);
    for (int k = 0; k < d; ++k) plane(k) = std::polar(1.0, p_s * xs[k]);
    NaiveEnsemble out{
        PrePostEnsemble(StateVector(std::move(plane)), StateVector::basis_state(d, j), d, 0),
        x_s, p_s};
    return out;
}

EprGridEnsemble epr_grid_ensemble(const CanonicalGrid& grid, const EPRSelection& sel) {
    const int d = grid.d;
    const double dx = grid.dx();
    if (sel.sigma_env <= 0.0) throw std::invalid_argument("envelope width must be positive");
    if (sel.sigma_env > grid.L / 6.0)
        throw EdgeClipping("envelope width exceeds L/6");

    EPRSelection s = sel;
    const long long m_minus = std::lround(sel.x_minus / dx);
    const long long m_plus = std::lround(sel.x_plus / dx);
    s.x_minus = m_minus * dx;
    s.x_plus = m_plus * dx;

    const double clearance = 2.5 * s.sigma_env;
    if (clearance + std::abs(s.x_minus) > grid.L / 2.0 - dx ||
        clearance + std::abs(s.x_plus) > grid.L / 2.0 - dx)
        throw EdgeClipping("envelope plus offsets exceed the grid clearance");
    const double p_reach = std::max(std::abs(s.p_plus), 2.0 * std::abs(s.p_minus)) +
                           1.5 / s.sigma_env;
    if (p_reach > 0.9 * grid.p_max())
        throw EdgeClipping("momentum labels too close to the band edge");

    const auto xs = grid.positions();
    auto envelope = [&](double v) { return std::exp(-v * v / (4.0 * s.sigma_env * s.sigma_env)); };
    auto wrap = [&](long long v) { return static_cast<int>(((v % d) + d) % d); };

    // A single stripe reaches only every other site of the quadrature it
    // pins (the relative coordinate for the final state, the centered one
    // for the initial), which zeroes the Kraus function exactly at odd
    // lattice translations. Each state is therefore spread symmetrically
    // over three adjacent stripes with weights (1/2, 1, 1/2), covering both
    // parities while keeping the pinned quadrature mean on its label.
    Vector psi_i = Vector::Zero(d * d), psi_f = Vector::Zero(d * d);
    for (int o = -1; o <= 1; ++o) {
        const double weight = (o == 0) ? 1.0 : 0.5;
        for (int a = 0; a < d; ++a) {
            const int sidx = wrap(a + m_minus + o);
            psi_i(sidx * d + a) += weight * envelope(xs[a]) * std::polar(1.0, s.p_plus * xs[a]);
        }
        const long long c = 2 * m_plus + o;
        for (int a = 0; a < d; ++a) {
            const int sidx = wrap(c - a);
            // Principal-value relative coordinate; the envelope suppresses
            // wrapped contributions.
            long long k = sidx - a;
            k = ((k % d) + d) % d;
            if (k >= d / 2) k -= d;
            const double u = k * dx;
            psi_f(sidx * d + a) += weight * envelope(u / 2.0) * std::polar(1.0, s.p_minus * u);
        }
    }
    EprGridEnsemble out{PrePostEnsemble(StateVector(std::move(psi_i), {d, d}),
                                        StateVector(std::move(psi_f), {d, d}), d, d),
                        s};
    return out;
}

namespace {

KrausSample run_kraus(const PrePostEnsemble& ens, const CanonicalGrid& grid,
                      const InstrumentGrid& igrid, KrausMethod method, int threads) {
    if (method == KrausMethod::Split) {
        std::vector<CanonicalCoupling> couplings = {
            {CanonicalCoupling::Side::System, CanonicalCoupling::Quad::Position},
            {CanonicalCoupling::Side::System, CanonicalCoupling::Quad::Momentum}};
        if (igrid.axes == 4) {
            couplings.push_back(
                {CanonicalCoupling::Side::Ancilla, CanonicalCoupling::Quad::Position});
            couplings.push_back(
                {CanonicalCoupling::Side::Ancilla, CanonicalCoupling::Quad::Momentum});
        }
        return kraus_sample_split(ens, grid, couplings, igrid, 1, threads);
    }
    auto [x, p] = qlinalg::grid_canonical_pair(grid);
    std::vector<FactoredObservable> obs = {{x, std::nullopt}, {p, std::nullopt}};
    if (igrid.axes == 4) {
        obs.push_back({std::nullopt, x});
        obs.push_back({std::nullopt, p});
    }
    return kraus_sample(ens, obs, igrid, threads);
}

}  // namespace

InferenceReport canonical_inference_experiment(const EPRSelection& sel,
                                               const InferenceOptions& opts) {
    InferenceReport report;
    report.fit_grid = opts.fit_grid;
    report.pointer_grid = opts.pointer_grid;

    for (int d : opts.d_values) {
        const CanonicalGrid grid(d, opts.L);
        auto epr = epr_grid_ensemble(grid, sel);

        InferenceRow row;
        row.d = d;
        row.sel = epr.sel;
        row.expected_x = epr.sel.x();
        row.expected_p = epr.sel.p();
        row.requested_x = sel.x();
        row.requested_p = sel.p();
        row.dual_spacing_x = grid.dx();
        row.dual_spacing_p = 2.0 * std::numbers::pi / opts.L;

        const auto fit = phase_fit(
            run_kraus(epr.ensemble, grid, opts.fit_grid, opts.method, opts.threads));
        row.alpha1 = fit.alpha[0];
        row.alpha2 = fit.alpha[1];
        row.beta12_epr = fit.beta(0, 1);
        row.flatness_epr = fit.amplitude_flatness;
        row.residual_epr = fit.residual_rms;

        auto naive = naive_xp_ensemble(grid, sel.x(), sel.p(), opts.fit_grid.q_max);
        const auto nfit = phase_fit(
            run_kraus(naive.ensemble, grid, opts.fit_grid, opts.method, opts.threads));
        row.beta12_naive = nfit.beta(0, 1);

        const auto pointer = conditional_pointer_distribution(
            run_kraus(epr.ensemble, grid, opts.pointer_grid, opts.method, opts.threads),
            opts.pointer_grid);
        row.pointer_mean1 = pointer.mean(0);
        row.pointer_mean2 = pointer.mean(1);
        row.pointer_sigma1 = pointer.sigma(0);
        row.pointer_sigma2 = pointer.sigma(1);

        if (d == opts.d_values.back()) report.final_pointer = pointer;
        report.rows.push_back(std::move(row));
    }
    return report;
}

FourVarReport four_variable_experiment(const EPRSelection& sel, const FourVarOptions& opts) {
    const CanonicalGrid grid(opts.d, opts.L);
    auto epr = epr_grid_ensemble(grid, sel);

    FourVarReport report;
    report.d = opts.d;
    report.sel = epr.sel;
    report.alpha_expected = {epr.sel.x(), epr.sel.p(), epr.sel.x_a(), epr.sel.p_a()};

    const auto fit = phase_fit(
        run_kraus(epr.ensemble, grid, opts.fit_grid, KrausMethod::Spectral, opts.threads));
    report.alpha_fit = fit.alpha;
    report.beta = fit.beta;
    report.flatness = fit.amplitude_flatness;
    report.residual = fit.residual_rms;

    for (const auto& spreads : opts.spread_sweep) {
        InstrumentGrid pgrid(opts.pointer_n, opts.pointer_q_max, 4, spreads);
        const auto sample =
            run_kraus(epr.ensemble, grid, pgrid, KrausMethod::Split, opts.threads);
        const auto dist = conditional_pointer_distribution(sample, pgrid);
        FourVarSweepRow row;
        row.spreads = spreads;
        for (int a = 0; a < 4; ++a) row.sigma.push_back(dist.sigma(a));
        row.four_product = row.sigma[0] * row.sigma[1] * row.sigma[2] * row.sigma[3];
        report.sweep.push_back(std::move(row));
    }
    return report;
}

std::vector<SpreadSweepRow> spread_sweep(const KrausSample& sample,
                                         const std::vector<double>& spreads) {
    std::vector<SpreadSweepRow> rows;
    for (double d1 : spreads) {
        for (double d2 : spreads) {
            InstrumentGrid g(sample.grid.n, sample.grid.q_max, sample.grid.axes, {d1, d2});
            const auto dist = conditional_pointer_distribution(sample, g);
            SpreadSweepRow row;
            row.dpi1 = d1;
            row.dpi2 = d2;
            row.sigma1 = dist.sigma(0);
            row.sigma2 = dist.sigma(1);
            row.product = row.sigma1 * row.sigma2;
            row.bound_sum = d1 * d2 + 1.0 / (16.0 * d1 * d2);
            rows.push_back(row);
        }
    }
    return rows;
}

FactorizationResidual factorization_residual(
    const CanonicalGrid& grid, const EPRSelection& sel,
    const std::vector<std::pair<double, double>>& q_samples) {
    const int d = grid.d;
    auto epr = epr_grid_ensemble(grid, sel);
    const Matrix psi0 = RowMajorMap(epr.ensemble.psi_i.amps.data(), d, d);

    auto [xop, pop] = qlinalg::grid_canonical_pair(grid);
    const Matrix& x = xop.mat;
    const Matrix& p = pop.mat;
    const Matrix pt = p.transpose();

    FactorizationResidual out;
    out.q_samples = q_samples;
    for (const auto& [q1, q2] : q_samples) {
        const Matrix lhs = qlinalg::expi_hermitian(q1 * x + q2 * p) * psi0;

        auto as_mat = [&](const Vector& v) { return Matrix(RowMajorMap(v.data(), d, d)); };
        // exp(i(x_plus q1 + p_minus q2)) with x_plus = (x + x_a)/2,
        // p_minus = (p - p_a)/2 acting on the reshaped state.
        auto mv_plus = [&](const Vector& v) {
            const Matrix m = as_mat(v);
            const Matrix r = 0.5 * q1 * (x * m + m * x) + 0.5 * q2 * (p * m - m * pt);
            return flatten_rowmajor(r);
        };
        // exp(i(x_minus q1 + p_plus q2)/2).
        auto mv_minus = [&](const Vector& v) {
            const Matrix m = as_mat(v);
            const Matrix r = 0.5 * (q1 * (x * m - m * x) + q2 * (p * m + m * pt));
            return flatten_rowmajor(r);
        };

        Vector vec = flatten_rowmajor(psi0);
        vec = qlinalg::expi_krylov(mv_plus, vec);
        vec = qlinalg::expi_krylov(mv_minus, vec);

        const double r = (flatten_rowmajor(lhs) - vec).norm();
        out.residuals.push_back(r);
        out.max_residual = std::max(out.max_residual, r);
    }
    return out;
}

PointerDistribution full_tensor_pointer_distribution(const PrePostEnsemble& ens,
                                                     const std::vector<FactoredObservable>& obs,
                                                     const InstrumentGrid& grid) {
    const int total = ens.total_dim();
    const int ds = ens.system_dim;
    const int da = ens.ancilla_dim > 0 ? ens.ancilla_dim : 1;

    // Dense couplings on the full selection space.
    std::vector<Matrix> a_full;
    for (const auto& fo : obs) {
        Matrix a = Matrix::Zero(total, total);
        if (fo.system)
            a += tensor_product(*fo.system, Operator::identity(da)).mat;
        if (fo.ancilla)
            a += tensor_product(Operator::identity(ds), *fo.ancilla).mat;
        a_full.push_back(std::move(a));
    }

    const auto instruments = gaussian_instruments(grid);
    const auto q = grid.q_values();
    const std::size_t npoints = grid.total_points();

    // Joint state over (selection space) x (instrument lattice). The
    // couplings are diagonal on the lattice, so the joint evolution acts
    // blockwise; the joint tensor is materialized in full.
    Matrix joint(total, static_cast<Eigen::Index>(npoints));
    for (std::size_t flat = 0; flat < npoints; ++flat) {
        const auto idx = grid.decode(flat);
        cd weight = 1.0;
        for (int a = 0; a < grid.axes; ++a) weight *= instruments[a](idx[a]);
        joint.col(static_cast<Eigen::Index>(flat)) = weight * ens.psi_i.amps;
    }
    for (std::size_t flat = 0; flat < npoints; ++flat) {
        const auto idx = grid.decode(flat);
        Matrix h = Matrix::Zero(total, total);
        for (int a = 0; a < grid.axes; ++a) h += q[idx[a]] * a_full[a];
        joint.col(static_cast<Eigen::Index>(flat)) =
            qlinalg::expi_hermitian(h) * joint.col(static_cast<Eigen::Index>(flat));
    }

    std::vector<cd> amp(npoints);
    double norm = 0.0;
    for (std::size_t flat = 0; flat < npoints; ++flat) {
        amp[flat] = ens.psi_f.amps.dot(joint.col(static_cast<Eigen::Index>(flat)));
        norm += std::norm(amp[flat]);
    }
    if (norm <= 0.0) throw Error("postselected joint state has zero norm");
    const double scale = 1.0 / std::sqrt(norm);
    for (cd& v : amp) v *= scale;

    const Matrix dmat = pointer_transform_matrix(grid);
    for (int a = 0; a < grid.axes; ++a) apply_along_axis(amp, grid.n, grid.axes, a, dmat);

    PointerDistribution dist;
    dist.grid = grid;
    dist.p.resize(npoints);
    for (std::size_t i = 0; i < npoints; ++i) dist.p[i] = std::norm(amp[i]);
    return dist;
}

}  // namespace weakjoint::jointmeas
