#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include "sngp/datasets.hpp"
#include "sngp/predict.hpp"
#include "sngp/residual_net.hpp"
#include "sngp/rff_gp_head.hpp"
#include "sngp/trainer.hpp"

namespace sngp {

enum class DatasetKind { two_moons, two_ovals, bimodal_1d, csv };
std::string to_string(DatasetKind k);

struct DataConfig {
    DatasetKind dataset = DatasetKind::two_moons;
    /// Points per class; bimodal_1d draws 2 × n_train_per_class points.
    std::size_t n_train_per_class = 500;
    std::size_t n_test_per_class = 250;
    double noise = 0.1;
    /// Share of the generated training data held out for σ² calibration and
    /// sweeps.
    double validation_fraction = 0.2;
    bool normalize = false;
    ToyGeometry geometry;
    BimodalSpec bimodal;
    std::string train_csv;
    std::string test_csv;
};

enum class HeadKind { gp, dense };

struct ModelConfig {
    NetworkShape shape;
    HeadKind head = HeadKind::gp;
    Likelihood likelihood = Likelihood::binary;
    std::size_t num_classes = 2;
};

struct GpConfig {
    std::size_t gp_hidden_dim = 1024;
    double length_scale = 2.0;
    double kernel_amplitude = 1.0;
    double prior_variance_tau = 1.0;
    PrecisionUpdateMode precision_mode;
    /// Fit σ² on the validation split after finalization (classification).
    bool calibrate_amplitude = true;
    std::size_t input_projection_dim = 0;
    bool input_layer_norm = false;
};

struct SweepConfig {
    /// 0 stands for an unconstrained network ("none" in the config file).
    std::vector<double> spec_norm_bound;
    std::vector<double> kernel_amplitude;
};

/// Everything that determines a run: (config, seed) → identical outputs.
struct ExperimentConfig {
    std::uint64_t seed = 0;
    std::string out_dir = "runs/default";
    DataConfig data;
    ModelConfig model;
    GpConfig gp;
    TrainerConfig trainer;
    PredictConfig predict;
    std::size_t ensemble_size = 1;
    SweepConfig sweep;
};

/// Parses INI text. Unknown sections or keys and malformed values throw
/// ConfigError; missing keys keep their defaults.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);
ExperimentConfig config_from_ptree(const boost::property_tree::ptree& tree);

/// Complete key/value form of a config; parsing it back is exact.
boost::property_tree::ptree config_to_ptree(const ExperimentConfig& config);
void write_config(std::ostream& out, const ExperimentConfig& config);

/// {section: {key: "value"}} snapshot used inside artifacts; omits the
/// output directory.
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double x);

}  // namespace sngp
