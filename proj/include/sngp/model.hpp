#pragma once

#include <cstddef>
#include <optional>
#include <variant>

#include "sngp/datasets.hpp"
#include "sngp/linalg.hpp"
#include "sngp/residual_net.hpp"
#include "sngp/rff_gp_head.hpp"

namespace sngp {

/// Ordinary dense output layer h·W + b (the deterministic baseline).
struct DenseHead {
    Matrix weight;  // D × K
    Vector bias;    // K

    static DenseHead init(std::size_t input_dim, std::size_t num_outputs, Rng& rng);
    Matrix logits(const Matrix& h) const;
};

using OutputHead = std::variant<RffGpHead, DenseHead>;

/// Residual feature extractor plus output head.
struct Model {
    Likelihood likelihood = Likelihood::binary;
    /// Number of classes (2 for binary), or 1 for regression.
    std::size_t num_classes = 2;
    ResidualNetwork net;
    OutputHead head;
    /// Statistics of the training inputs; applied to raw inputs on predict.
    std::optional<NormStats> input_norm;

    bool has_gp_head() const { return std::holds_alternative<RffGpHead>(head); }
    RffGpHead& gp_head() { return std::get<RffGpHead>(head); }
    const RffGpHead& gp_head() const { return std::get<RffGpHead>(head); }

    /// Number of output columns: 1 for binary/regression, K for multiclass.
    std::size_t num_outputs() const { return likelihood == Likelihood::multiclass ? num_classes : 1; }
};

/// Normalizes raw inputs with the model's stored statistics (if any).
Matrix prepare_inputs(const Model& model, const Matrix& raw);

}  // namespace sngp
