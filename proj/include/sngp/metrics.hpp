#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sngp/linalg.hpp"

namespace sngp {

struct BinStat {
    double confidence_mean = 0.0;
    double accuracy = 0.0;
    std::size_t count = 0;
};

struct OodScores {
    double auroc = 0.0;
    double aupr = 0.0;
};

/// Calibration and OOD-detection summary.
struct EvalReport {
    std::size_t n = 0;
    double accuracy = 0.0;
    double ece = 0.0;
    double nll = 0.0;
    double brier = 0.0;
    std::vector<BinStat> bin_stats;
    /// ood set name → score name → metrics. Empty when no OOD set was given.
    std::map<std::string, std::map<std::string, OodScores>> ood;
};

nlohmann::json to_json(const EvalReport& report);

inline constexpr std::size_t kDefaultEceBins = 15;

/// Row-wise argmax (first index on ties).
std::vector<std::size_t> argmax_rows(const Matrix& probs);
Vector max_prob(const Matrix& probs);
double accuracy(const Matrix& probs, std::span<const double> labels);

/// Σ_m |B_m|/n · |acc(B_m) − conf(B_m)| over equal-width bins of the max
/// probability on (1/K, 1]. Confidences at exactly 1/K fall in the first bin.
double ece(const Matrix& probs, std::span<const double> labels, std::size_t bins = kDefaultEceBins,
           std::vector<BinStat>* bin_stats = nullptr);

/// Mean −ln p(y_true).
double nll(const Matrix& probs, std::span<const double> labels);

/// Mean squared distance to the one-hot label, Σ_k (p_k − 1[y=k])²,
/// averaged over examples (not divided by K). Equals the Bregman score with
/// ψ(p) = p² − 1/K evaluated against a one-hot truth.
double brier(const Matrix& probs, std::span<const double> labels);

/// P(score_ind > score_ood) + ½ P(tie): confidence scores, higher means
/// in-distribution.
double auroc(std::span<const double> scores_ind, std::span<const double> scores_ood);

/// Average precision of detecting OOD (positive class) by ranking on
/// −confidence. Tied scores share the precision of their threshold.
double aupr(std::span<const double> scores_ind, std::span<const double> scores_ood);

/// Maximum softmax probability of each logit row.
Vector msp(const Matrix& logits);

/// Dempster–Shafer confidence 1 − K / (K + Σ_k exp g_k).
Vector dempster_shafer(const Matrix& logits);

/// Class-conditional Gaussians with a shared covariance, plus a
/// label-agnostic background Gaussian. Precisions are stored inverted.
struct GaussianFit {
    Matrix class_means;          // K × D
    Matrix shared_covariance;    // D × D
    Vector background_mean;      // D
    Matrix background_covariance;
    Matrix shared_precision;
    Matrix background_precision;

    /// Uses the given parameters verbatim (no ridge).
    static GaussianFit from_parameters(Matrix class_means, Matrix shared_covariance, Vector background_mean,
                                       Matrix background_covariance);
};

inline constexpr double kCovarianceRidge = 1e-6;

/// Fits on embeddings h (n × D) with integer labels in [0, K). Adds
/// kCovarianceRidge · trace/D to each covariance diagonal. Throws
/// SingularCovariance if a covariance has zero trace.
GaussianFit fit_gaussian(const Matrix& h, std::span<const double> labels, std::size_t num_classes);

/// Squared Mahalanobis distance of each row of h to each class mean (n × K).
Matrix class_distances(const GaussianFit& fit, const Matrix& h);

/// −min_k MD_k(x).
Vector mahalanobis_score(const GaussianFit& fit, const Matrix& h);
/// −min_k (MD_k(x) − MD_0(x)).
Vector relative_mahalanobis_score(const GaussianFit& fit, const Matrix& h);

}  // namespace sngp
