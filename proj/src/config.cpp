#include "sngp/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string_view>

#include <boost/property_tree/ini_parser.hpp>

#include "sngp/errors.hpp"

namespace sngp {

namespace pt = boost::property_tree;

std::string to_string(DatasetKind k) {
    switch (k) {
        case DatasetKind::two_moons: return "two_moons";
        case DatasetKind::two_ovals: return "two_ovals";
        case DatasetKind::bimodal_1d: return "bimodal_1d";
        case DatasetKind::csv: return "csv";
    }
    return "?";
}

std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& key, const std::string& s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || s.empty())
        throw ConfigError(key + ": expected a number, got '" + s + "'");
    return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& s) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || s.empty())
        throw ConfigError(key + ": expected a non-negative integer, got '" + s + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& s) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw ConfigError(key + ": expected true or false, got '" + s + "'");
}

// `none_value` stands in for the word "none" when allowed.
std::vector<double> parse_list(const std::string& key, const std::string& s,
                               std::optional<double> none_value = std::nullopt) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(' '), e = item.find_last_not_of(' ');
        if (b == std::string::npos) throw ConfigError(key + ": empty list entry");
        const std::string token = item.substr(b, e - b + 1);
        out.push_back(none_value && token == "none" ? *none_value : parse_double(key, token));
    }
    return out;
}

std::string format_list(const std::vector<double>& v, std::optional<double> none_value = std::nullopt) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i)
        s += (i ? "," : "") + (none_value && v[i] == *none_value ? std::string("none") : format_double(v[i]));
    return s;
}

template <class E>
E parse_enum(const std::string& key, const std::string& s, std::initializer_list<std::pair<const char*, E>> names) {
    for (const auto& [n, e] : names)
        if (s == n) return e;
    std::string allowed;
    for (const auto& [n, e] : names) allowed += std::string(allowed.empty() ? "" : ", ") + n;
    throw ConfigError(key + ": '" + s + "' is not one of " + allowed);
}

template <class E>
std::string enum_name(E value, std::initializer_list<std::pair<const char*, E>> names) {
    for (const auto& [n, e] : names)
        if (e == value) return n;
    return "?";
}

using DatasetNames = std::initializer_list<std::pair<const char*, DatasetKind>>;
using ActivationNames = std::initializer_list<std::pair<const char*, Activation>>;
using HeadNames = std::initializer_list<std::pair<const char*, HeadKind>>;
using LikelihoodNames = std::initializer_list<std::pair<const char*, Likelihood>>;
using PrecisionNames = std::initializer_list<std::pair<const char*, PrecisionUpdateMode::Kind>>;
using ModeNames = std::initializer_list<std::pair<const char*, PredictConfig::Mode>>;

const DatasetNames kDatasets{{"two_moons", DatasetKind::two_moons},
                             {"two_ovals", DatasetKind::two_ovals},
                             {"bimodal_1d", DatasetKind::bimodal_1d},
                             {"csv", DatasetKind::csv}};
const ActivationNames kActivations{{"relu", Activation::relu}, {"identity", Activation::identity}};
const HeadNames kHeads{{"gp", HeadKind::gp}, {"dense", HeadKind::dense}};
const LikelihoodNames kLikelihoods{{"regression", Likelihood::regression},
                                   {"binary", Likelihood::binary},
                                   {"multiclass", Likelihood::multiclass}};
const PrecisionNames kPrecisionModes{{"exact", PrecisionUpdateMode::Kind::exact},
                                     {"moving_average", PrecisionUpdateMode::Kind::moving_average}};
const ModeNames kPredictModes{{"mean_field", PredictConfig::Mode::mean_field}, {"mc", PredictConfig::Mode::mc}};

/// One config key: how to print it and how to set it.
struct Field {
    const char* section;
    const char* key;
    std::function<std::string(const ExperimentConfig&)> get;
    std::function<void(ExperimentConfig&, const std::string&)> set;
};

#define SNGP_REAL(sec, name, member)                                                       \
    Field{sec, name, [](const ExperimentConfig& c) { return format_double(c.member); },   \
          [](ExperimentConfig& c, const std::string& s) { c.member = parse_double(name, s); }}
#define SNGP_COUNT(sec, name, member)                                                       \
    Field{sec, name, [](const ExperimentConfig& c) { return std::to_string(c.member); },   \
          [](ExperimentConfig& c, const std::string& s) {                                   \
              c.member = static_cast<decltype(c.member)>(parse_u64(name, s));               \
          }}
#define SNGP_BOOL(sec, name, member)                                                          \
    Field{sec, name, [](const ExperimentConfig& c) { return std::string(c.member ? "true" : "false"); }, \
          [](ExperimentConfig& c, const std::string& s) { c.member = parse_bool(name, s); }}
#define SNGP_ENUM(sec, name, member, table)                                                 \
    Field{sec, name, [](const ExperimentConfig& c) { return enum_name(c.member, table); },  \
          [](ExperimentConfig& c, const std::string& s) { c.member = parse_enum(name, s, table); }}
#define SNGP_STRING(sec, name, member)                                 \
    Field{sec, name, [](const ExperimentConfig& c) { return c.member; }, \
          [](ExperimentConfig& c, const std::string& s) { c.member = s; }}
#define SNGP_LIST(sec, name, member)                                                      \
    Field{sec, name, [](const ExperimentConfig& c) { return format_list(c.member); },    \
          [](ExperimentConfig& c, const std::string& s) { c.member = parse_list(name, s); }}

const std::vector<Field>& fields() {
    static const std::vector<Field> table{
        SNGP_COUNT("experiment", "seed", seed),
        SNGP_STRING("experiment", "out", out_dir),

        SNGP_ENUM("data", "dataset", data.dataset, kDatasets),
        SNGP_COUNT("data", "n_train_per_class", data.n_train_per_class),
        SNGP_COUNT("data", "n_test_per_class", data.n_test_per_class),
        SNGP_REAL("data", "noise", data.noise),
        SNGP_REAL("data", "validation_fraction", data.validation_fraction),
        SNGP_BOOL("data", "normalize", data.normalize),
        SNGP_REAL("data", "moon_radius", data.geometry.moon_radius),
        SNGP_REAL("data", "moon_offset_x", data.geometry.moon_offset_x),
        SNGP_REAL("data", "moon_offset_y", data.geometry.moon_offset_y),
        SNGP_REAL("data", "oval_major_std", data.geometry.oval_major_std),
        SNGP_REAL("data", "oval_minor_std", data.geometry.oval_minor_std),
        SNGP_REAL("data", "oval_separation", data.geometry.oval_separation),
        SNGP_REAL("data", "bimodal_center", data.bimodal.mode_center),
        SNGP_REAL("data", "bimodal_std", data.bimodal.mode_std),
        SNGP_REAL("data", "bimodal_truncation", data.bimodal.truncation),
        SNGP_REAL("data", "bimodal_noise", data.bimodal.noise_std),
        SNGP_STRING("data", "train_csv", data.train_csv),
        SNGP_STRING("data", "test_csv", data.test_csv),

        SNGP_COUNT("model", "input_dim", model.shape.input_dim),
        SNGP_COUNT("model", "width", model.shape.hidden_dim),
        SNGP_COUNT("model", "blocks", model.shape.num_blocks),
        SNGP_BOOL("model", "input_projection", model.shape.input_projection),
        SNGP_ENUM("model", "activation", model.shape.activation, kActivations),
        SNGP_REAL("model", "dropout", model.shape.dropout_rate),
        Field{"model", "spec_norm_bound",
              [](const ExperimentConfig& c) {
                  return c.model.shape.spec_norm_bound ? format_double(*c.model.shape.spec_norm_bound)
                                                       : std::string("none");
              },
              [](ExperimentConfig& c, const std::string& s) {
                  if (s == "none")
                      c.model.shape.spec_norm_bound.reset();
                  else
                      c.model.shape.spec_norm_bound = parse_double("spec_norm_bound", s);
              }},
        SNGP_COUNT("model", "power_iterations", model.shape.power_iterations),
        SNGP_REAL("model", "block_init_scale", model.shape.block_init_scale),
        SNGP_ENUM("model", "head", model.head, kHeads),
        SNGP_ENUM("model", "likelihood", model.likelihood, kLikelihoods),
        SNGP_COUNT("model", "num_classes", model.num_classes),

        SNGP_COUNT("gp", "gp_hidden_dim", gp.gp_hidden_dim),
        SNGP_REAL("gp", "length_scale", gp.length_scale),
        SNGP_REAL("gp", "kernel_amplitude", gp.kernel_amplitude),
        SNGP_REAL("gp", "prior_variance_tau", gp.prior_variance_tau),
        SNGP_ENUM("gp", "precision_mode", gp.precision_mode.kind, kPrecisionModes),
        SNGP_REAL("gp", "ridge_s", gp.precision_mode.ridge),
        SNGP_REAL("gp", "discount_m", gp.precision_mode.discount),
        SNGP_BOOL("gp", "calibrate_amplitude", gp.calibrate_amplitude),
        SNGP_COUNT("gp", "input_projection_dim", gp.input_projection_dim),
        SNGP_BOOL("gp", "input_layer_norm", gp.input_layer_norm),

        SNGP_REAL("trainer", "learning_rate", trainer.learning_rate),
        SNGP_REAL("trainer", "momentum", trainer.momentum),
        SNGP_COUNT("trainer", "epochs", trainer.epochs),
        SNGP_COUNT("trainer", "batch_size", trainer.batch_size),
        SNGP_BOOL("trainer", "freeze_final_epoch", trainer.freeze_final_epoch),

        SNGP_ENUM("predict", "predict_mode", predict.mode, kPredictModes),
        SNGP_REAL("predict", "lambda", predict.lambda),
        SNGP_COUNT("predict", "mc_samples", predict.mc_samples),
        SNGP_COUNT("predict", "dropout_passes", predict.dropout_passes),
        SNGP_COUNT("predict", "ensemble_size", ensemble_size),

        Field{"sweep", "spec_norm_bound",
              [](const ExperimentConfig& c) { return format_list(c.sweep.spec_norm_bound, 0.0); },
              [](ExperimentConfig& c, const std::string& s) {
                  c.sweep.spec_norm_bound = parse_list("spec_norm_bound", s, 0.0);
              }},
        SNGP_LIST("sweep", "kernel_amplitude", sweep.kernel_amplitude),
    };
    return table;
}

#undef SNGP_REAL
#undef SNGP_COUNT
#undef SNGP_BOOL
#undef SNGP_ENUM
#undef SNGP_STRING
#undef SNGP_LIST

void validate(const ExperimentConfig& c) {
    const auto& s = c.model.shape;
    if (s.input_dim == 0 || s.hidden_dim == 0) throw ConfigError("model: input_dim and width must be positive");
    if (!s.input_projection && s.input_dim != s.hidden_dim)
        throw ConfigError("model: without input_projection, width must equal input_dim");
    if (!(s.dropout_rate >= 0.0 && s.dropout_rate < 1.0)) throw ConfigError("model: dropout must be in [0, 1)");
    if (s.spec_norm_bound && !(*s.spec_norm_bound > 0.0)) throw ConfigError("model: spec_norm_bound must be > 0");
    if (s.power_iterations == 0) throw ConfigError("model: power_iterations must be >= 1");
    if (c.model.likelihood == Likelihood::binary && c.model.num_classes != 2)
        throw ConfigError("model: binary likelihood needs num_classes = 2");
    if (c.model.likelihood == Likelihood::multiclass && c.model.num_classes < 2)
        throw ConfigError("model: multiclass likelihood needs num_classes >= 2");
    if (c.gp.gp_hidden_dim == 0 || !(c.gp.length_scale > 0.0) || !(c.gp.kernel_amplitude > 0.0) ||
        !(c.gp.prior_variance_tau > 0.0))
        throw ConfigError("gp: gp_hidden_dim, length_scale, kernel_amplitude, prior_variance_tau must be positive");
    if (!(c.gp.precision_mode.ridge > 0.0) ||
        !(c.gp.precision_mode.discount > 0.0 && c.gp.precision_mode.discount < 1.0))
        throw ConfigError("gp: ridge_s must be > 0 and discount_m in (0, 1)");
    if (!(c.data.validation_fraction >= 0.0 && c.data.validation_fraction < 1.0))
        throw ConfigError("data: validation_fraction must be in [0, 1)");
    if (!(c.data.noise >= 0.0)) throw ConfigError("data: noise must be >= 0");
    if (c.data.dataset == DatasetKind::csv && c.data.train_csv.empty())
        throw ConfigError("data: dataset = csv requires train_csv");
    if (!(c.trainer.learning_rate > 0.0) || !(c.trainer.momentum >= 0.0 && c.trainer.momentum < 1.0) ||
        c.trainer.batch_size == 0)
        throw ConfigError("trainer: learning_rate > 0, momentum in [0, 1), batch_size >= 1 required");
    if (c.predict.mc_samples == 0) throw ConfigError("predict: mc_samples must be >= 1");
    if (c.ensemble_size == 0) throw ConfigError("predict: ensemble_size must be >= 1");
}

}  // namespace

ExperimentConfig config_from_ptree(const pt::ptree& tree) {
    ExperimentConfig c;
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty())
            throw ConfigError("key '" + section + "' outside of a section");
        for (const auto& [key, value] : body) {
            const Field* f = nullptr;
            for (const auto& cand : fields())
                if (section == cand.section && key == cand.key) f = &cand;
            if (!f) throw ConfigError("unknown config key [" + section + "] " + key);
            f->set(c, value.data());
        }
    }
    c.trainer.prior_variance = c.gp.prior_variance_tau;
    c.trainer.seed = c.seed;
    c.predict.seed = c.seed;
    validate(c);
    return c;
}

ExperimentConfig parse_config(std::istream& in) {
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return config_from_ptree(tree);
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse_config(in);
}

pt::ptree config_to_ptree(const ExperimentConfig& config) {
    pt::ptree tree;
    for (const auto& f : fields()) tree.put(pt::ptree::path_type(std::string(f.section) + "." + f.key), f.get(config));
    return tree;
}

void write_config(std::ostream& out, const ExperimentConfig& config) { pt::write_ini(out, config_to_ptree(config)); }

nlohmann::json config_to_json(const ExperimentConfig& config) {
    // The output location does not influence results, so it is left out and
    // artifacts from different run directories compare equal.
    nlohmann::json j = nlohmann::json::object();
    for (const auto& f : fields())
        if (std::string_view(f.key) != "out") j[f.section][f.key] = f.get(config);
    return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
    pt::ptree tree;
    for (const auto& [section, body] : j.items())
        for (const auto& [key, value] : body.items())
            tree.put(pt::ptree::path_type(section + "." + key), value.get<std::string>());
    return config_from_ptree(tree);
}

}  // namespace sngp
