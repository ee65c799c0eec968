#include "sngp/predict.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sngp/metrics.hpp"

namespace sngp {

DenseHead DenseHead::init(std::size_t input_dim, std::size_t num_outputs, Rng& rng) {
    DenseHead head{sample_gaussian(rng, input_dim, num_outputs), Vector(num_outputs, 0.0)};
    head.weight *= 1.0 / std::sqrt(static_cast<double>(input_dim));
    return head;
}

Matrix DenseHead::logits(const Matrix& h) const {
    Matrix g = matmul(h, weight);
    for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t k = 0; k < g.cols(); ++k) g(i, k) += bias[k];
    return g;
}

Matrix prepare_inputs(const Model& model, const Matrix& raw) {
    return model.input_norm ? apply_norm(raw, *model.input_norm) : raw;
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Matrix softmax(const Matrix& logits) {
    Matrix p(logits.rows(), logits.cols());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const auto r = logits.row(i);
        const double mx = *std::max_element(r.begin(), r.end());
        double z = 0.0;
        auto out = p.row(i);
        for (std::size_t k = 0; k < r.size(); ++k) {
            out[k] = std::exp(r[k] - mx);
            z += out[k];
        }
        for (double& v : out) v /= z;
    }
    return p;
}

namespace {

/// Probability rows for scaled logits; one column means a sigmoid output.
void write_probs(std::span<const double> logits, double scale, std::span<double> out) {
    if (logits.size() == 1) {
        const double p1 = sigmoid(logits[0] * scale);
        out[0] = 1.0 - p1;
        out[1] = p1;
        return;
    }
    double mx = -std::numeric_limits<double>::infinity();
    for (double g : logits) mx = std::max(mx, g * scale);
    double z = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        out[k] = std::exp(logits[k] * scale - mx);
        z += out[k];
    }
    for (double& v : out) v /= z;
}

std::size_t prob_columns(const Matrix& logits) { return logits.cols() == 1 ? 2 : logits.cols(); }

void check_variance(const Matrix& mean_logits, std::span<const double> variance) {
    if (variance.size() != mean_logits.rows()) throw ShapeMismatch("variance length must equal logit rows");
    for (double v : variance)
        if (!(v >= 0.0)) throw InvalidRange("variance must be non-negative");
}

}  // namespace

Matrix mean_field(const Matrix& mean_logits, std::span<const double> variance, double lambda) {
    check_variance(mean_logits, variance);
    Matrix probs(mean_logits.rows(), prob_columns(mean_logits));
    for (std::size_t i = 0; i < mean_logits.rows(); ++i)
        write_probs(mean_logits.row(i), 1.0 / std::sqrt(1.0 + lambda * variance[i]), probs.row(i));
    return probs;
}

Matrix mc_softmax(const Matrix& mean_logits, std::span<const double> variance, std::size_t samples, Rng& rng) {
    check_variance(mean_logits, variance);
    if (samples == 0) throw InvalidRange("mc_softmax: samples must be >= 1");
    const std::size_t k = mean_logits.cols();
    Matrix probs(mean_logits.rows(), prob_columns(mean_logits));
    Vector draw(k), p(probs.cols());
    for (std::size_t i = 0; i < mean_logits.rows(); ++i) {
        const double sd = std::sqrt(variance[i]);
        auto out = probs.row(i);
        for (std::size_t s = 0; s < samples; ++s) {
            for (std::size_t c = 0; c < k; ++c) draw[c] = mean_logits(i, c) + sd * rng.normal();
            write_probs(draw, 1.0, p);
            for (std::size_t c = 0; c < p.size(); ++c) out[c] += p[c];
        }
        for (double& v : out) v /= static_cast<double>(samples);
    }
    return probs;
}

PredictivePosterior ensemble_average(std::span<const PredictivePosterior> members) {
    if (members.empty()) throw EmptyEnsemble("ensemble_average: no members");
    PredictivePosterior out = members.front();
    std::size_t total = members.front().members;
    for (std::size_t m = 1; m < members.size(); ++m) {
        const auto& p = members[m];
        if (p.mean_logits.rows() != out.mean_logits.rows() || p.mean_logits.cols() != out.mean_logits.cols() ||
            p.probs.rows() != out.probs.rows() || p.probs.cols() != out.probs.cols() ||
            p.variance.size() != out.variance.size())
            throw ShapeMismatch("ensemble_average: member shapes differ");
        out.mean_logits += p.mean_logits;
        out.probs += p.probs;
        for (std::size_t i = 0; i < out.variance.size(); ++i) out.variance[i] += p.variance[i];
        total += p.members;
    }
    if (members.size() > 1) {
        const double inv = 1.0 / static_cast<double>(members.size());
        out.mean_logits *= inv;
        out.probs *= inv;
        for (double& v : out.variance) v *= inv;
    }
    out.members = total;
    return out;
}

namespace {

PredictivePosterior predict_from_features(const Model& model, const Matrix& h, const PredictConfig& config,
                                          Rng* mc_rng) {
    PredictivePosterior post;
    if (model.has_gp_head()) {
        const auto& head = model.gp_head();
        const Matrix phi = head.features(h);
        post.mean_logits = head.logits(phi);
        post.variance = head.finalized() ? head.predictive_variance(phi) : Vector(h.rows(), 0.0);
    } else {
        post.mean_logits = std::get<DenseHead>(model.head).logits(h);
        post.variance = Vector(h.rows(), 0.0);
    }
    if (model.likelihood == Likelihood::regression) return post;
    if (config.mode == PredictConfig::Mode::mc) {
        Rng local(config.seed);
        post.probs = mc_softmax(post.mean_logits, post.variance, config.mc_samples, mc_rng ? *mc_rng : local);
    } else {
        post.probs = mean_field(post.mean_logits, post.variance, config.lambda);
    }
    return post;
}

}  // namespace

PredictivePosterior predict(const Model& model, const Matrix& raw_inputs, const PredictConfig& config) {
    const Matrix x = prepare_inputs(model, raw_inputs);
    if (config.dropout_passes > 0) {
        Rng rng(config.seed);
        return mc_dropout_predict(model, raw_inputs, config.dropout_passes, rng, config.lambda);
    }
    return predict_from_features(model, forward(model.net, x), config, nullptr);
}

PredictivePosterior mc_dropout_predict(const Model& model, const Matrix& raw_inputs, std::size_t passes, Rng& rng,
                                       double lambda) {
    if (passes == 0) throw InvalidRange("mc_dropout_predict: passes must be >= 1");
    const Matrix x = prepare_inputs(model, raw_inputs);
    PredictConfig config;
    config.lambda = lambda;
    if (model.net.dropout_rate() == 0.0) return predict_from_features(model, forward(model.net, x), config, nullptr);
    std::vector<PredictivePosterior> outs;
    outs.reserve(passes);
    for (std::size_t p = 0; p < passes; ++p) {
        outs.push_back(predict_from_features(model, forward(model.net, x, &rng), config, nullptr));
    }
    auto out = ensemble_average(outs);
    out.members = 1;
    return out;
}

Vector amplitude_grid(double lo, double hi, std::size_t points) {
    if (!(lo > 0.0 && lo < hi) || points < 2) throw InvalidRange("amplitude_grid: need 0 < lo < hi, points >= 2");
    Vector g(points);
    const double a = std::log(lo), b = std::log(hi);
    for (std::size_t i = 0; i < points; ++i)
        g[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
    return g;
}

AmplitudeFit calibrate_amplitude(Model& model, const LabeledSet& validation, const PredictConfig& config,
                                 std::span<const double> grid) {
    if (!model.has_gp_head()) throw InvalidRange("calibrate_amplitude: model has no GP head");
    if (model.likelihood == Likelihood::regression)
        throw InvalidRange("calibrate_amplitude: classification likelihood required");
    auto& head = model.gp_head();
    if (!head.finalized()) throw NotFinalized("calibrate_amplitude: head not finalized");
    AmplitudeFit fit;
    fit.grid = grid.empty() ? amplitude_grid() : Vector(grid.begin(), grid.end());

    // The logit means are unaffected by the calibration; only the variance
    // rescales, so features are computed once.
    const Matrix h = forward(model.net, prepare_inputs(model, validation.inputs));
    const Matrix phi = head.features(h);
    const Matrix logits = head.logits(phi);
    const double original = head.calibrated_amplitude();
    head.set_calibrated_amplitude(head.options().amplitude);
    const Vector base_var = head.predictive_variance(phi);
    head.set_calibrated_amplitude(original);

    double best = std::numeric_limits<double>::infinity();
    for (double a : fit.grid) {
        Vector var = base_var;
        const double s = a / head.options().amplitude;
        for (double& v : var) v *= s;
        const double value = nll(mean_field(logits, var, config.lambda), validation.labels);
        fit.grid_nll.push_back(value);
        if (value < best) {
            best = value;
            fit.amplitude = a;
        }
    }
    fit.nll = best;
    head.set_calibrated_amplitude(fit.amplitude);
    return fit;
}

}  // namespace sngp
