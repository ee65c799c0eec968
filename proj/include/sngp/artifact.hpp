#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sngp/config.hpp"
#include "sngp/model.hpp"

namespace sngp {

inline constexpr int kArtifactVersion = 1;

/// Trained model(s) plus the config that produced them. Frozen random
/// projections are stored as (seed, shape) and regenerated on load; every
/// trainable matrix, the finalized covariance and the calibrated σ² are
/// stored as base64 little-endian float64 payloads.
struct ModelArtifact {
    int format_version = kArtifactVersion;
    ExperimentConfig config;
    std::vector<Model> members;
};

std::string encode_f64(std::span<const double> values);
Vector decode_f64(const std::string& text);

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

nlohmann::json model_to_json(const Model& model);
Model model_from_json(const nlohmann::json& j);

nlohmann::json artifact_to_json(const ModelArtifact& artifact);
/// Throws ArtifactVersionMismatch for other format versions.
ModelArtifact artifact_from_json(const nlohmann::json& j);

std::string serialize_artifact(const ModelArtifact& artifact);
void save_artifact(const std::string& path, const ModelArtifact& artifact);
ModelArtifact load_artifact(const std::string& path);

}  // namespace sngp
