#include "sngp/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "sngp/errors.hpp"

namespace sngp {

using nlohmann::json;

namespace {

constexpr std::uint64_t kDataStream = 1;
constexpr std::uint64_t kModelStream = 2;
constexpr std::uint64_t kTrainerStream = 3;

bool is_classification(Likelihood l) { return l != Likelihood::regression; }

}  // namespace

DataBundle make_data(const ExperimentConfig& config) {
    const auto& d = config.data;
    const Rng root = Rng(config.seed).split(kDataStream);
    Rng train_rng = root.split(0), test_rng = root.split(1), split_rng = root.split(2);
    LabeledSet full, test;
    switch (d.dataset) {
        case DatasetKind::two_moons:
            full = two_moons(train_rng, d.n_train_per_class, d.noise, d.geometry);
            test = two_moons(test_rng, d.n_test_per_class, d.noise, d.geometry);
            break;
        case DatasetKind::two_ovals:
            full = two_ovals(train_rng, d.n_train_per_class, d.geometry);
            test = two_ovals(test_rng, d.n_test_per_class, d.geometry);
            break;
        case DatasetKind::bimodal_1d:
            full = bimodal_regression_1d(train_rng, 2 * d.n_train_per_class, d.bimodal);
            test = bimodal_regression_1d(test_rng, 2 * d.n_test_per_class, d.bimodal);
            break;
        case DatasetKind::csv:
            full = load_csv(d.train_csv);
            if (!d.test_csv.empty()) test = load_csv(d.test_csv);
            break;
    }
    DataBundle out;
    if (d.validation_fraction > 0.0) {
        auto s = split(full, d.validation_fraction, split_rng);
        out.train = std::move(s.train);
        out.validation = std::move(s.held_out);
    } else {
        out.train = std::move(full);
    }
    out.test = std::move(test);
    return out;
}

Model build_model(const ExperimentConfig& config, std::size_t member, const LabeledSet& train) {
    const auto& mc = config.model;
    if (train.dim() != mc.shape.input_dim)
        throw ConfigError("model.input_dim = " + std::to_string(mc.shape.input_dim) + " but the data has " +
                          std::to_string(train.dim()) + " features");
    if (config.data.dataset == DatasetKind::bimodal_1d && mc.likelihood != Likelihood::regression)
        throw ConfigError("bimodal_1d data needs likelihood = regression");

    Rng rng = Rng(config.seed).split(kModelStream).split(member);
    Model model;
    model.likelihood = mc.likelihood;
    model.num_classes = mc.likelihood == Likelihood::regression ? 1 : mc.num_classes;
    model.net = ResidualNetwork(mc.shape, rng.next_u64());
    if (config.data.normalize) model.input_norm = fit_norm(train);
    if (mc.head == HeadKind::gp) {
        RffGpOptions o;
        o.input_dim = mc.shape.hidden_dim;
        o.num_features = config.gp.gp_hidden_dim;
        o.num_outputs = model.num_outputs();
        o.amplitude = config.gp.kernel_amplitude;
        o.length_scale = config.gp.length_scale;
        o.prior_variance = config.gp.prior_variance_tau;
        o.seed = rng.next_u64();
        o.precision_mode = config.gp.precision_mode;
        o.input_projection_dim = config.gp.input_projection_dim;
        o.input_layer_norm = config.gp.input_layer_norm;
        model.head = RffGpHead(o);
    } else {
        Rng head_rng(rng.next_u64());
        model.head = DenseHead::init(mc.shape.hidden_dim, model.num_outputs(), head_rng);
    }
    return model;
}

TrainOutcome run_train(const ExperimentConfig& config) { return run_train(config, make_data(config)); }

TrainOutcome run_train(const ExperimentConfig& config, const DataBundle& data) {
    TrainOutcome out;
    out.artifact.config = config;
    for (std::size_t m = 0; m < config.ensemble_size; ++m) {
        Model model = build_model(config, m, data.train);
        TrainerConfig tc = config.trainer;
        tc.prior_variance = config.gp.prior_variance_tau;
        tc.seed = Rng(config.seed).split(kTrainerStream).split(m).next_u64();
        out.logs.push_back(train_map(model, data.train, tc));
        if (model.has_gp_head() && config.gp.calibrate_amplitude && is_classification(model.likelihood) &&
            data.validation.size() > 0)
            out.calibration.push_back(calibrate_amplitude(model, data.validation, config.predict));
        out.artifact.members.push_back(std::move(model));
    }
    return out;
}

json training_log_json(const TrainOutcome& outcome) {
    json j{{"members", json::array()}};
    for (std::size_t m = 0; m < outcome.logs.size(); ++m) {
        json jm{{"epoch_loss", outcome.logs[m].epoch_loss}, {"steps", outcome.logs[m].steps}};
        if (m < outcome.calibration.size()) {
            const auto& c = outcome.calibration[m];
            jm["calibration"] = {{"amplitude", c.amplitude}, {"nll", c.nll}, {"grid", c.grid}, {"grid_nll", c.grid_nll}};
        }
        j["members"].push_back(std::move(jm));
    }
    return j;
}

PredictivePosterior predict_artifact(const ModelArtifact& artifact, const Matrix& raw_inputs) {
    std::vector<PredictivePosterior> outs;
    outs.reserve(artifact.members.size());
    for (const auto& m : artifact.members) outs.push_back(predict(m, raw_inputs, artifact.config.predict));
    return ensemble_average(outs);
}

namespace {

/// Two-column logits [0, g] for a binary model, the logits otherwise, each
/// row scaled by 1/√(1 + λv).
Matrix adjusted_logits(const PredictivePosterior& post, double lambda) {
    const Matrix& g = post.mean_logits;
    const bool binary = g.cols() == 1;
    Matrix out(g.rows(), binary ? 2 : g.cols());
    for (std::size_t i = 0; i < g.rows(); ++i) {
        const double s = 1.0 / std::sqrt(1.0 + lambda * post.variance[i]);
        if (binary) {
            out(i, 1) = g(i, 0) * s;
        } else {
            for (std::size_t k = 0; k < g.cols(); ++k) out(i, k) = g(i, k) * s;
        }
    }
    return out;
}

/// Member-averaged Mahalanobis and relative Mahalanobis scores.
std::pair<Vector, Vector> mahalanobis_scores(const ModelArtifact& artifact, const std::vector<GaussianFit>& fits,
                                             const Matrix& raw) {
    Vector md(raw.rows(), 0.0), rmd(raw.rows(), 0.0);
    for (std::size_t m = 0; m < artifact.members.size(); ++m) {
        const auto& model = artifact.members[m];
        const Matrix h = forward(model.net, prepare_inputs(model, raw));
        const Vector a = mahalanobis_score(fits[m], h), b = relative_mahalanobis_score(fits[m], h);
        for (std::size_t i = 0; i < raw.rows(); ++i) {
            md[i] += a[i];
            rmd[i] += b[i];
        }
    }
    const double inv = 1.0 / static_cast<double>(artifact.members.size());
    for (std::size_t i = 0; i < raw.rows(); ++i) {
        md[i] *= inv;
        rmd[i] *= inv;
    }
    return {md, rmd};
}

}  // namespace

EvalReport evaluate(const ModelArtifact& artifact, const LabeledSet& train, const LabeledSet& ind,
                    const std::map<std::string, LabeledSet>& ood) {
    const auto& first = artifact.members.front();
    if (!is_classification(first.likelihood)) throw ConfigError("eval: classification likelihood required");
    if (ind.size() == 0) throw EmptySet("eval: in-distribution test set is empty");
    const double lambda = artifact.config.predict.lambda;

    EvalReport report;
    const PredictivePosterior post = predict_artifact(artifact, ind.inputs);
    report.n = ind.size();
    report.accuracy = accuracy(post.probs, ind.labels);
    report.ece = ece(post.probs, ind.labels, kDefaultEceBins, &report.bin_stats);
    report.nll = nll(post.probs, ind.labels);
    report.brier = brier(post.probs, ind.labels);
    if (ood.empty()) return report;

    std::vector<GaussianFit> fits;
    for (const auto& m : artifact.members) {
        const Matrix h = forward(m.net, prepare_inputs(m, train.inputs));
        fits.push_back(fit_gaussian(h, train.labels, m.num_classes));
    }
    auto scores_for = [&](const LabeledSet& set, const PredictivePosterior& p) {
        std::map<std::string, Vector> s;
        s["msp"] = max_prob(p.probs);
        s["dempster_shafer"] = dempster_shafer(adjusted_logits(p, lambda));
        auto [md, rmd] = mahalanobis_scores(artifact, fits, set.inputs);
        s["mahalanobis"] = std::move(md);
        s["relative_mahalanobis"] = std::move(rmd);
        return s;
    };
    const auto ind_scores = scores_for(ind, post);
    for (const auto& [name, set] : ood) {
        if (set.dim() != ind.dim()) throw ShapeMismatch("eval: OOD set '" + name + "' has the wrong dimension");
        const auto ood_scores = scores_for(set, predict_artifact(artifact, set.inputs));
        for (const auto& [score, values] : ood_scores) {
            const auto& ind_values = ind_scores.at(score);
            report.ood[name][score] = OodScores{auroc(ind_values, values), aupr(ind_values, values)};
        }
    }
    return report;
}

GridSpec parse_grid(const std::string& text) {
    GridSpec g;
    std::stringstream ss(text);
    std::string axis;
    std::size_t count = 0;
    while (std::getline(ss, axis, ',')) {
        if (count >= 2) throw ConfigError("grid: expected exactly two axes");
        std::vector<std::string> parts;
        std::stringstream as(axis);
        std::string p;
        while (std::getline(as, p, ':')) parts.push_back(p);
        const std::string expected = "x" + std::to_string(count);
        if (parts.size() != 4 || parts[0] != expected)
            throw ConfigError("grid: axis " + std::to_string(count) + " must look like " + expected + ":lo:hi:n");
        try {
            std::size_t used = 0;
            g.lo[count] = std::stod(parts[1], &used);
            if (used != parts[1].size()) throw std::invalid_argument("lo");
            g.hi[count] = std::stod(parts[2], &used);
            if (used != parts[2].size()) throw std::invalid_argument("hi");
            const long long n = std::stoll(parts[3], &used);
            if (used != parts[3].size() || n < 1) throw std::invalid_argument("n");
            g.n[count] = static_cast<std::size_t>(n);
        } catch (const std::exception&) {
            throw ConfigError("grid: malformed axis '" + axis + "'");
        }
        if (!(g.lo[count] <= g.hi[count])) throw ConfigError("grid: lo must not exceed hi");
        ++count;
    }
    if (count != 2) throw ConfigError("grid: expected exactly two axes");
    return g;
}

GridSpec default_grid(const LabeledSet& data, std::size_t points, double margin) {
    if (data.dim() != 2) throw DimensionUnsupported("surface: needs 2-D inputs");
    GridSpec g;
    for (std::size_t a = 0; a < 2; ++a) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (std::size_t i = 0; i < data.size(); ++i) {
            lo = std::min(lo, data.inputs(i, a));
            hi = std::max(hi, data.inputs(i, a));
        }
        const double pad = margin * (hi - lo);
        g.lo[a] = lo - pad;
        g.hi[a] = hi + pad;
        g.n[a] = points;
    }
    return g;
}

void write_surface(std::ostream& out, const ModelArtifact& artifact, const GridSpec& grid) {
    const auto& first = artifact.members.front();
    if (first.net.input_dim() != 2) throw DimensionUnsupported("surface: model input dimension must be 2");
    if (!is_classification(first.likelihood)) throw ConfigError("surface: classification likelihood required");
    auto coord = [&](std::size_t a, std::size_t i) {
        if (grid.n[a] == 1) return grid.lo[a];
        return grid.lo[a] + (grid.hi[a] - grid.lo[a]) * static_cast<double>(i) / static_cast<double>(grid.n[a] - 1);
    };
    Matrix x(grid.n[0] * grid.n[1], 2);
    for (std::size_t j = 0; j < grid.n[1]; ++j)
        for (std::size_t i = 0; i < grid.n[0]; ++i) {
            x(j * grid.n[0] + i, 0) = coord(0, i);
            x(j * grid.n[0] + i, 1) = coord(1, j);
        }
    const PredictivePosterior post = predict_artifact(artifact, x);
    const Vector p = max_prob(post.probs);
    out << "x0,x1,max_prob,u_normalized,variance\n";
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const double u = std::clamp(p[r] * (1.0 - p[r]) / 0.25, 0.0, 1.0);
        out << format_double(x(r, 0)) << ',' << format_double(x(r, 1)) << ',' << format_double(p[r]) << ','
            << format_double(u) << ',' << format_double(post.variance[r]) << '\n';
    }
}

SweepResult run_sweep(const ExperimentConfig& config) {
    if (!is_classification(config.model.likelihood)) throw ConfigError("sweep: classification likelihood required");
    const DataBundle data = make_data(config);
    if (data.validation.size() == 0) throw ConfigError("sweep: needs validation_fraction > 0");
    std::vector<std::optional<double>> bounds;
    if (config.sweep.spec_norm_bound.empty())
        bounds.push_back(config.model.shape.spec_norm_bound);
    else
        for (double b : config.sweep.spec_norm_bound)
            bounds.push_back(b == 0.0 ? std::nullopt : std::optional<double>(b));
    std::vector<double> amplitudes = config.sweep.kernel_amplitude;
    if (amplitudes.empty()) amplitudes.push_back(config.gp.kernel_amplitude);
    for (const auto& b : bounds)
        if (b && !(*b > 0.0)) throw ConfigError("sweep: spec_norm_bound values must be > 0");
    for (double a : amplitudes)
        if (!(a > 0.0)) throw ConfigError("sweep: kernel_amplitude values must be > 0");

    SweepResult result;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& b : bounds) {
        for (double a : amplitudes) {
            ExperimentConfig c = config;
            c.model.shape.spec_norm_bound = b;
            c.gp.kernel_amplitude = a;
            c.gp.calibrate_amplitude = false;
            c.sweep = {};
            const TrainOutcome t = run_train(c, data);
            const PredictivePosterior post = predict_artifact(t.artifact, data.validation.inputs);
            SweepRow row{b.value_or(0.0), a, nll(post.probs, data.validation.labels),
                         accuracy(post.probs, data.validation.labels)};
            if (row.validation_nll < best) {
                best = row.validation_nll;
                result.best = result.rows.size();
                result.best_config = c;
            }
            result.rows.push_back(row);
        }
    }
    return result;
}

json sweep_json(const SweepResult& result) {
    json rows = json::array();
    for (const auto& r : result.rows)
        rows.push_back({{"spec_norm_bound", r.spec_norm_bound == 0.0 ? json(nullptr) : json(r.spec_norm_bound)},
                        {"kernel_amplitude", r.kernel_amplitude},
                        {"validation_nll", r.validation_nll},
                        {"validation_accuracy", r.validation_accuracy}});
    return json{{"rows", rows}, {"best_index", result.best}, {"best", rows.at(result.best)},
                {"best_config", config_to_json(result.best_config)}};
}

}  // namespace sngp
