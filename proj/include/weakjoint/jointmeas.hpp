#pragma once

#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "weakjoint/qlinalg.hpp"
#include "weakjoint/weakcore.hpp"

namespace weakjoint::jointmeas {

using qlinalg::CanonicalGrid;
using qlinalg::cd;
using qlinalg::Matrix;
using qlinalg::Operator;
using qlinalg::StateVector;
using qlinalg::Vector;
using weakcore::PrePostEnsemble;

/// Product grid of instrument coupling variables. Each axis spans
/// [-q_max, q_max) with n points; the pointer lattice is the DFT dual.
/// Minimal Gaussian instruments carry Delta q_k = 1 / (2 Delta pi_k).
struct InstrumentGrid {
    int n = 0;
    double q_max = 0.0;
    int axes = 0;
    std::vector<double> spreads;  // pointer spreads Delta pi_k, one per axis

    InstrumentGrid() = default;
    InstrumentGrid(int n_, double q_max_, int axes_, std::vector<double> spreads_);

    double dq() const { return 2.0 * q_max / n; }
    double dpi() const;
    std::vector<double> q_values() const;
    std::vector<double> pi_values() const;
    std::size_t total_points() const;
    /// Multi-index (axis-0 slowest) of a flat grid index.
    std::vector<int> decode(std::size_t flat) const;
    std::size_t zero_index() const;
};

/// Conditional Kraus function F(q) sampled on the grid, normalized so that
/// F(0) = 1 (division by the selection overlap is built in).
struct KrausSample {
    InstrumentGrid grid;
    std::vector<cd> values;  // flat, axis-0 slowest

    cd at(const std::vector<int>& idx) const;
};

/// Per-axis observable written as A = S (x) I + I (x) B on the ensemble's
/// system (x) ancilla split. Either side may be absent.
struct FactoredObservable {
    std::optional<Operator> system;
    std::optional<Operator> ancilla;
};

/// F(q) = <psi_f| exp(i sum_k A_k q_k) |psi_i> / <psi_f|psi_i> per grid
/// point, with the exponential evaluated by spectral decomposition.
/// Observables act on the full ensemble space.
KrausSample kraus_sample(const PrePostEnsemble& ens, const std::vector<Operator>& observables,
                         const InstrumentGrid& grid, int threads = 0);

/// Same contract, but the exponential splits exactly across the system /
/// ancilla factors: exp(i(Hs x I + I x Ha)) = exp(i Hs) (x) exp(i Ha).
/// This is the scalable form for grid ensembles.
KrausSample kraus_sample(const PrePostEnsemble& ens,
                         const std::vector<FactoredObservable>& observables,
                         const InstrumentGrid& grid, int threads = 0);

/// Which canonical quadrature a grid axis couples to.
struct CanonicalCoupling {
    enum class Side { System, Ancilla };
    enum class Quad { Position, Momentum };
    Side side;
    Quad quad;
};

/// Strang split-operator evaluation of the Kraus function for couplings to
/// the grid canonical pair: per side, exp(i(X gx + P gp)) is approximated
/// by substeps of exp(iX gx/2m) exp(iP gp/m) exp(iX gx/2m). Exact in the
/// continuum (central commutator); on the grid the deviation from the
/// spectral route is a documented smooth-state error.
KrausSample kraus_sample_split(const PrePostEnsemble& ens, const CanonicalGrid& sys_grid,
                               const std::vector<CanonicalCoupling>& couplings,
                               const InstrumentGrid& grid, int substeps = 1, int threads = 0);

/// Phase model arg F = c0 + sum_k alpha_k q_k + sum_{k<l} beta_kl q_k q_l,
/// fitted from local phase increments arg[F(q + dq e_k) conj(F(q))] (no
/// global unwrapping). Throws AmplitudeCollapse when min |F| < 0.1.
struct PhaseFit {
    double c0 = 0.0;
    std::vector<double> alpha;
    Eigen::MatrixXd beta;  // symmetric, zero diagonal
    double residual_rms = 0.0;
    double amplitude_flatness = 0.0;  // max | |F| - 1 |
    double min_abs_f = 0.0;
};

PhaseFit phase_fit(const KrausSample& sample);

/// Minimal-uncertainty Gaussian instrument wavefunctions on the q lattice,
/// one per axis, normalized in l2.
std::vector<Vector> gaussian_instruments(const InstrumentGrid& grid);

/// Symmetric two-peak superposition of Gaussians (non-Gaussian instrument
/// state for robustness checks). Peak separation 2*offset.
Vector two_peak_instrument(const InstrumentGrid& grid, int axis, double offset);

/// Joint pointer distribution: psi'(q) = F(q) prod_k psi_k(q_k), normalized,
/// then P(pi) = |DFT psi'|^2 on the dual lattice (probability mass per
/// lattice point).
struct PointerDistribution {
    InstrumentGrid grid;
    std::vector<double> p;  // flat, axis-0 slowest

    std::vector<double> marginal(int axis) const;
    double mean(int axis) const;
    double sigma(int axis) const;
};

PointerDistribution conditional_pointer_distribution(const KrausSample& sample,
                                                     const InstrumentGrid& grid);
PointerDistribution conditional_pointer_distribution(const KrausSample& sample,
                                                     const InstrumentGrid& grid,
                                                     const std::vector<Vector>& instruments);

/// Pointer spreads and the uncertainty products / bounds they are checked
/// against: the two-instrument product against
/// Delta pi_1 Delta pi_2 + 1/(16 Delta pi_1 Delta pi_2) and 1/2, the
/// four-instrument product against 1/4.
struct UncertaintyReport {
    std::vector<double> sigma;
    double product_12 = 0.0;
    double bound_sum = 0.0;   // Delta1 Delta2 + 1/(16 Delta1 Delta2)
    double bound_half = 0.5;
    double four_product = 0.0;    // 0 unless 4 axes
    double bound_quarter = 0.25;
};

UncertaintyReport uncertainty_products(const PointerDistribution& dist);

/// Total variation distance between two pointer distributions on the same
/// lattice.
double total_variation(const PointerDistribution& a, const PointerDistribution& b);

/// Entangled selection labels: initial joint eigenstate of the commuting
/// pair (x - x_a, p + p_a), final of ((x + x_a)/2, (p - p_a)/2), with a
/// Gaussian envelope of width sigma_env regularizing the ideal eigenstates.
struct EPRSelection {
    double x_minus = 0.0;
    double p_plus = 0.0;
    double x_plus = 0.0;
    double p_minus = 0.0;
    double sigma_env = 0.0;

    double x() const { return x_plus + x_minus / 2.0; }
    double p() const { return p_minus + p_plus / 2.0; }
    double x_a() const { return x_plus - x_minus / 2.0; }
    double p_a() const { return -(p_minus - p_plus / 2.0); }
};

/// Plane-wave preselection at momentum p, position postselection at x, on
/// the system grid (labels snapped to their lattices). Solves nothing: the
/// Kraus phase carries the mutual back-action of the two couplings.
struct NaiveEnsemble {
    PrePostEnsemble ensemble;
    double x = 0.0;  // snapped
    double p = 0.0;  // snapped
};

NaiveEnsemble naive_xp_ensemble(const CanonicalGrid& grid, double x, double p,
                                double q_reach = 0.0);

/// Entangled grid selection realizing the EPR labels; x_minus and x_plus
/// snap to the position lattice. Each state spreads over three adjacent
/// stripes so its free coordinate covers both lattice parities (a single
/// stripe zeroes the Kraus function exactly at odd lattice translations).
/// Throws EdgeClipping on insufficient clearance.
struct EprGridEnsemble {
    PrePostEnsemble ensemble;
    EPRSelection sel;  // snapped copy
};

EprGridEnsemble epr_grid_ensemble(const CanonicalGrid& grid, const EPRSelection& sel);

enum class KrausMethod { Spectral, Split };

/// One inference run at a fixed system-grid size.
struct InferenceRow {
    int d = 0;
    EPRSelection sel;  // snapped
    double expected_x = 0.0, expected_p = 0.0;    // from snapped labels
    double requested_x = 0.0, requested_p = 0.0;  // from requested labels
    double alpha1 = 0.0, alpha2 = 0.0;            // fitted (EPR)
    double beta12_epr = 0.0;
    double beta12_naive = 0.0;
    double flatness_epr = 0.0;
    double residual_epr = 0.0;
    double pointer_mean1 = 0.0, pointer_mean2 = 0.0;
    double pointer_sigma1 = 0.0, pointer_sigma2 = 0.0;
    double dual_spacing_x = 0.0, dual_spacing_p = 0.0;  // system lattice spacings
};

struct InferenceReport {
    std::vector<InferenceRow> rows;
    InstrumentGrid fit_grid;
    InstrumentGrid pointer_grid;
    PointerDistribution final_pointer;  // at the largest d
};

struct InferenceOptions {
    std::vector<int> d_values = {32, 64, 128};
    double L = 20.0;
    InstrumentGrid fit_grid{16, 0.5, 2, {0.5, 0.5}};
    InstrumentGrid pointer_grid{48, 2.5, 2, {1.5, 1.5}};
    KrausMethod method = KrausMethod::Split;
    int threads = 0;
};

/// Runs the two-instrument inference experiment: EPR Kraus fit against the
/// predicted linear phase, a same-grid naive run for the back-action
/// comparison, and the conditional pointer distribution at each grid size.
InferenceReport canonical_inference_experiment(const EPRSelection& sel,
                                               const InferenceOptions& opts = {});

struct FourVarSweepRow {
    std::vector<double> spreads;
    std::vector<double> sigma;
    double four_product = 0.0;
};

struct FourVarReport {
    int d = 0;
    EPRSelection sel;  // snapped
    std::vector<double> alpha_fit;       // size 4
    std::vector<double> alpha_expected;  // (x, p, x_a, p_a)
    Eigen::MatrixXd beta;                // 4x4 symmetric
    double flatness = 0.0;
    double residual = 0.0;
    std::vector<FourVarSweepRow> sweep;
};

struct FourVarOptions {
    int d = 16;
    double L = 12.0;
    InstrumentGrid fit_grid{9, 0.4, 4, {0.5, 0.5, 0.5, 0.5}};
    int pointer_n = 21;
    double pointer_q_max = 6.0;
    std::vector<std::vector<double>> spread_sweep = {
        {0.5, 0.5, 0.5, 0.5}, {0.4, 0.5, 0.6, 0.5}, {0.7, 0.7, 0.4, 0.4},
        {1.0, 0.5, 0.5, 1.0}, {0.35, 0.7, 0.5, 0.6}};
    int threads = 0;
};

/// Joint measurement of all four canonical variables of system plus
/// ancilla; fits the crossed back-action pairs and sweeps instrument
/// spreads for the four-way pointer product.
FourVarReport four_variable_experiment(const EPRSelection& sel, const FourVarOptions& opts = {});

/// Spread sweep for a fixed Kraus sample: the sample is computed once and
/// the pointer pipeline re-run per spread combination.
struct SpreadSweepRow {
    double dpi1 = 0.0, dpi2 = 0.0;
    double sigma1 = 0.0, sigma2 = 0.0;
    double product = 0.0;
    double bound_sum = 0.0;
};

std::vector<SpreadSweepRow> spread_sweep(const KrausSample& sample,
                                         const std::vector<double>& spreads);

/// Max l2 deviation, over sampled couplings, between the joint-coupling
/// unitary and its factorization through the commuting quadrature pairs
/// (x - x_a, p + p_a)/2 and ((x + x_a)/2, (p - p_a)/2), applied to the
/// regularized entangled state.
struct FactorizationResidual {
    std::vector<std::pair<double, double>> q_samples;
    std::vector<double> residuals;
    double max_residual = 0.0;
};

FactorizationResidual factorization_residual(const CanonicalGrid& grid, const EPRSelection& sel,
                                             const std::vector<std::pair<double, double>>& q_samples);

/// Reference pipeline for validating the scalar-Kraus reduction: evolves
/// the explicit joint (system x ancilla x instruments) state, postselects,
/// and transforms to the pointer lattice.
PointerDistribution full_tensor_pointer_distribution(const PrePostEnsemble& ens,
                                                     const std::vector<FactoredObservable>& obs,
                                                     const InstrumentGrid& grid);

}  // namespace weakjoint::jointmeas
