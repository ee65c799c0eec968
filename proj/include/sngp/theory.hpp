#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sngp/linalg.hpp"
#include "sngp/residual_net.hpp"

namespace sngp {

// ---------------------------------------------------------------------------
// Bregman scores

enum class ScoreKind { log, brier };
std::string to_string(ScoreKind kind);

/// ψ(p) = p ln p (log) or p² − 1/K (Brier), applied per class.
struct BregmanScore {
    ScoreKind kind = ScoreKind::brier;
    std::size_t num_classes = 2;

    double psi(double p) const;
    double dpsi(double p) const;
};

/// Tolerance on Σp − 1 accepted by bregman_score().
inline constexpr double kSimplexTolerance = 1e-9;

/// s(p, p*) = Σ_k [p_k − p*_k] ψ'(p_k) − ψ(p_k): the expected score of the
/// forecast p when outcomes follow p*. Log gives −Σ p* ln p, Brier gives
/// ‖p − p*‖² + 1 − ‖p*‖². Entries may be zero; a zero forecast probability
/// on an outcome with positive mass scores +inf under the log score.
/// Throws NotOnSimplex.
double bregman_score(const BregmanScore& score, std::span<const double> p, std::span<const double> p_star);

/// Largest second difference of the generalized entropy −ψ over an interior
/// grid of `points` values on (0, 1). Negative means strictly concave there.
double entropy_concavity_margin(const BregmanScore& score, std::size_t points = 1000);

// ---------------------------------------------------------------------------
// Brute-force minimax on the simplex

/// Offset keeping grid points strictly inside the simplex.
inline constexpr double kSimplexInteriorOffset = 1e-6;

/// All points ε + (1 − Kε)·(i₁, …, i_K)·step with Σ i = 1/step.
/// Requires 1/step to be an integer within 1e-9.
std::vector<Vector> simplex_grid(std::size_t num_classes, double step, double offset = kSimplexInteriorOffset);

struct MinimaxResult {
    /// Centroid of the grid points attaining the minimax risk. Label
    /// permutations of a minimizer are minimizers too, so the centroid is the
    /// symmetric representative of the argmin set.
    Vector argmin;
    std::vector<Vector> minimizers;
    double risk = 0.0;
    std::size_t grid_size = 0;
};

/// max over the p* grid of s(p, p*).
double worst_case_risk(const BregmanScore& score, std::span<const double> p, std::span<const Vector> truth_grid);

/// argmin_p max_{p*} s(p, p*) with p and p* both ranging over the same grid.
/// Requires grid_step ∈ (0, 0.1].
MinimaxResult minimax_verify(const BregmanScore& score, double grid_step);

/// Two-region discrete problem: an in-distribution region with mass
/// `ind_mass` where p* = `ind_truth` is known, and an out-of-distribution
/// region where p* is unconstrained.
struct MixtureCheck {
    double mixture_risk = 0.0;       // (in-domain predictor, uniform) pair
    double best_alternative = 0.0;   // best grid pair
    Vector best_alternative_ood;     // its OOD forecast
    std::size_t alternatives = 0;
    bool pass = false;
};

MixtureCheck mixture_optimality(const BregmanScore& score, std::span<const double> ind_truth, double ind_mass,
                                double grid_step);

// ---------------------------------------------------------------------------
// Exact GP regression

/// RBF regression GP: k(x, x') = σ² exp(−‖x − x'‖² / (2l²)), noise τ.
struct ExactGp {
    double amplitude = 1.0;
    double length_scale = 1.0;
    double noise = 0.1;
    Matrix inputs;  // n × d
    Vector targets;
    /// Cholesky factor of K + τI and (K + τI)⁻¹y, filled by fit_exact_gp().
    Matrix chol;
    Vector alpha;

    double kernel(std::span<const double> a, std::span<const double> b) const;
};

/// Throws EmptySet or NotPositiveDefinite.
ExactGp fit_exact_gp(Matrix inputs, Vector targets, double amplitude, double length_scale, double noise);

struct GpPosterior {
    Vector mean;
    Vector variance;
};

/// mean = k*ᵀ(K + τI)⁻¹y, variance = k(x, x) − k*ᵀ(K + τI)⁻¹k*.
GpPosterior exact_gp_posterior(const ExactGp& gp, const Matrix& x_test);

// ---------------------------------------------------------------------------
// Network probes

struct BilipschitzProbe {
    double min_ratio = 0.0;
    double max_ratio = 0.0;
    double alpha = 0.0;  // largest residual-branch spectral norm
    std::size_t blocks = 0;
    double lower_bound = 0.0;  // (1 − α)^blocks
    double upper_bound = 0.0;  // (1 + α)^blocks
    std::size_t pairs = 0;
};

/// Largest singular value by power iteration run to convergence.
double spectral_norm_estimate(const Matrix& w, Rng& rng, std::size_t max_iters = 1000, double rtol = 1e-13);

/// Ratios ‖h(x₁) − h(x₂)‖ / ‖x₁ − x₂‖ over `pairs` pairs drawn uniformly
/// from the box [lo, hi] inflated 2× about its center. The network must
/// have no input projection. Empty bounds mean [−1, 1]^d.
BilipschitzProbe bilipschitz_probe(const ResidualNetwork& net, std::size_t pairs, Rng& rng,
                                   std::span<const double> box_lo = {}, std::span<const double> box_hi = {});

/// Mean-field class probabilities at increasing distances from a K-class
/// training cluster, with one exact GP per class on centered one-hot
/// targets. Records max_k |p_k − 1/K| per distance.
struct FarFieldProbe {
    Vector distances;
    Vector max_deviation;
    Vector mean_variance;
};

FarFieldProbe far_field_probe(std::size_t num_classes, std::span<const double> distances, Rng& rng);

// ---------------------------------------------------------------------------
// Suite

struct Verdict {
    std::string claim;
    nlohmann::json parameters;
    nlohmann::json observed;
    nlohmann::json bound;
    bool pass = false;
};

nlohmann::json to_json(const Verdict& v);

/// Claim groups: "bregman", "minimax", "mixture", "exact_gp", "bilipschitz",
/// "far_field". An empty selector runs all of them.
std::vector<std::string> theory_claim_groups();
std::vector<Verdict> run_theory_suite(const std::vector<std::string>& selector, std::uint64_t seed = 0);

}  // namespace sngp
