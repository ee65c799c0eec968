#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sngp/artifact.hpp"
#include "sngp/config.hpp"
#include "sngp/metrics.hpp"
#include "sngp/predict.hpp"
#include "sngp/trainer.hpp"

namespace sngp {

struct DataBundle {
    LabeledSet train;
    LabeledSet validation;  // empty when validation_fraction = 0
    LabeledSet test;
};

/// Generates (or loads) the datasets named by the config. Pure function of
/// the config and its seed.
DataBundle make_data(const ExperimentConfig& config);

/// Untrained ensemble member `member`, normalized with the statistics of
/// `train` when the config asks for it.
Model build_model(const ExperimentConfig& config, std::size_t member, const LabeledSet& train);

struct TrainOutcome {
    ModelArtifact artifact;
    std::vector<TrainingLog> logs;
    /// One per member when σ² calibration ran.
    std::vector<AmplitudeFit> calibration;
};

/// Trains every ensemble member on the training split, then calibrates σ²
/// on the validation split when enabled.
TrainOutcome run_train(const ExperimentConfig& config);
TrainOutcome run_train(const ExperimentConfig& config, const DataBundle& data);

nlohmann::json training_log_json(const TrainOutcome& outcome);

/// Averages member predictions (each member with the configured predict
/// mode and dropout passes).
PredictivePosterior predict_artifact(const ModelArtifact& artifact, const Matrix& raw_inputs);

/// Classification report on `ind`, plus AUROC/AUPR per OOD set for the
/// scores msp, dempster_shafer, mahalanobis and relative_mahalanobis. The
/// Gaussian fits for the Mahalanobis scores use `train` embeddings.
EvalReport evaluate(const ModelArtifact& artifact, const LabeledSet& train, const LabeledSet& ind,
                    const std::map<std::string, LabeledSet>& ood);

/// Regular 2-D grid; axis a has n[a] points from lo[a] to hi[a].
struct GridSpec {
    std::array<double, 2> lo{};
    std::array<double, 2> hi{};
    std::array<std::size_t, 2> n{};
};

/// Parses "x0:lo:hi:n,x1:lo:hi:n". Throws ConfigError.
GridSpec parse_grid(const std::string& text);

/// Bounding box of the inputs inflated by `margin` × its extent per side.
GridSpec default_grid(const LabeledSet& data, std::size_t points = 100, double margin = 0.5);

/// CSV with header x0,x1,max_prob,u_normalized,variance, one row per grid
/// point (x0 varies fastest). u_normalized = p̂(1 − p̂)/0.25 with p̂ the
/// maximum class probability. Throws DimensionUnsupported unless the model
/// takes 2-D inputs.
void write_surface(std::ostream& out, const ModelArtifact& artifact, const GridSpec& grid);

struct SweepRow {
    double spec_norm_bound = 0.0;  // 0 when the network is unconstrained
    double kernel_amplitude = 0.0;
    double validation_nll = 0.0;
    double validation_accuracy = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::size_t best = 0;
    ExperimentConfig best_config;
};

/// Trains one model per (spec_norm_bound, kernel_amplitude) pair with σ²
/// calibration disabled and picks the minimum validation NLL. An empty list
/// keeps the config's own value. Throws ConfigError when there is no
/// validation split.
SweepResult run_sweep(const ExperimentConfig& config);
nlohmann::json sweep_json(const SweepResult& result);

}  // namespace sngp
