#include "sngp/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "sngp/predict.hpp"

namespace sngp {

namespace {

constexpr std::uint64_t kShuffleStream = 0;
constexpr std::uint64_t kDropoutStream = 1;

/// Momentum buffers and parameter references updated together.
class MomentumSgd {
public:
    MomentumSgd(double lr, double momentum) : lr_(lr), momentum_(momentum) {}

    void step(std::size_t slot, std::span<double> param, std::span<const double> grad) {
        if (velocity_.size() <= slot) velocity_.resize(slot + 1);
        auto& v = velocity_[slot];
        if (v.empty()) v.assign(param.size(), 0.0);
        for (std::size_t i = 0; i < param.size(); ++i) {
            v[i] = momentum_ * v[i] - lr_ * grad[i];
            param[i] += v[i];
        }
    }

private:
    double lr_;
    double momentum_;
    std::vector<Vector> velocity_;
};

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> idx) {
    Matrix out(idx.size(), m.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const auto src = m.row(idx[k]);
        std::copy(src.begin(), src.end(), out.row(k).begin());
    }
    return out;
}

}  // namespace

LossEval evaluate_loss(const Matrix& logits, std::span<const double> labels, Likelihood likelihood) {
    const std::size_t n = logits.rows();
    if (labels.size() != n) throw ShapeMismatch("evaluate_loss: labels");
    if (n == 0) throw EmptySet("evaluate_loss: empty batch");
    LossEval out;
    out.grad = Matrix(n, logits.cols());
    const double inv_n = 1.0 / static_cast<double>(n);
    switch (likelihood) {
        case Likelihood::regression:
            for (std::size_t i = 0; i < n; ++i) {
                const double r = logits(i, 0) - labels[i];
                out.loss += 0.5 * r * r;
                out.grad(i, 0) = r * inv_n;
            }
            break;
        case Likelihood::binary:
            out.probs = Matrix(n, 1);
            for (std::size_t i = 0; i < n; ++i) {
                const double g = logits(i, 0), y = labels[i];
                // log(1 + e^g) − y·g, computed stably.
                out.loss += std::max(g, 0.0) + std::log1p(std::exp(-std::abs(g))) - y * g;
                const double p = sigmoid(g);
                out.probs(i, 0) = p;
                out.grad(i, 0) = (p - y) * inv_n;
            }
            break;
        case Likelihood::multiclass: {
            out.probs = softmax(logits);
            for (std::size_t i = 0; i < n; ++i) {
                const auto y = static_cast<std::size_t>(labels[i]);
                if (y >= logits.cols()) throw InvalidRange("evaluate_loss: label out of range");
                out.loss -= std::log(std::max(out.probs(i, y), 1e-300));
                for (std::size_t k = 0; k < logits.cols(); ++k)
                    out.grad(i, k) = (out.probs(i, k) - (k == y ? 1.0 : 0.0)) * inv_n;
            }
            break;
        }
    }
    out.loss *= inv_n;
    return out;
}

TrainingLog train_map(Model& model, const LabeledSet& data, const TrainerConfig& config) {
    if (data.domain != Domain::IND) throw InvalidRange("train_map: training data must be in-distribution");
    if (data.size() == 0) throw EmptySet("train_map: empty training set");
    if (!(config.learning_rate > 0.0) || !(config.momentum >= 0.0 && config.momentum < 1.0) ||
        config.batch_size == 0 || !(config.prior_variance > 0.0))
        throw InvalidRange("train_map: invalid trainer configuration");
    if (model.has_gp_head() && model.gp_head().options().prior_variance != config.prior_variance)
        throw InvalidRange("train_map: trainer and GP head disagree on the prior variance");

    const Matrix inputs = prepare_inputs(model, data.inputs);
    const std::size_t n = data.size();
    const double l2 = 1.0 / (config.prior_variance * static_cast<double>(n));
    const Rng root(config.seed);
    MomentumSgd opt(config.learning_rate, config.momentum);
    TrainingLog log;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const bool final_epoch = epoch + 1 == config.epochs;
        if (final_epoch && model.has_gp_head()) model.gp_head().reset_precision();
        Rng shuffle = root.split(kShuffleStream).split(epoch);
        Rng dropout = root.split(kDropoutStream).split(epoch);
        const auto order = permutation(shuffle, n);
        double epoch_loss = 0.0;
        std::size_t batches = 0;

        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t end = std::min(n, start + config.batch_size);
            const std::span<const std::size_t> idx(order.data() + start, end - start);
            const Matrix xb = gather_rows(inputs, idx);
            Vector yb(idx.size());
            for (std::size_t k = 0; k < idx.size(); ++k) yb[k] = data.labels[idx[k]];

            ForwardCache cache;
            const Matrix h = forward(model.net, xb, &dropout, &cache);
            Matrix grad_h;
            double penalty = 0.0;

            if (model.has_gp_head()) {
                auto& head = model.gp_head();
                RffGpHead::FeatureCache fcache;
                const Matrix phi = head.features(h, fcache);
                const LossEval le = evaluate_loss(head.logits(phi), yb, model.likelihood);
                Matrix grad_beta = matmul_tn(phi, le.grad);
                for (std::size_t i = 0; i < grad_beta.size(); ++i) {
                    const double b = head.beta().data()[i];
                    grad_beta.data()[i] += l2 * b;
                    penalty += 0.5 * l2 * b * b;
                }
                if (!(final_epoch && config.freeze_final_epoch))
                    grad_h = head.features_backward(fcache, matmul_nt(le.grad, head.beta()));
                if (final_epoch) head.accumulate_precision(phi, le.probs, model.likelihood);
                opt.step(0, head.beta().data(), grad_beta.data());
                epoch_loss += le.loss + penalty;
            } else {
                auto& head = std::get<DenseHead>(model.head);
                const LossEval le = evaluate_loss(head.logits(h), yb, model.likelihood);
                Matrix grad_w = matmul_tn(h, le.grad);
                for (std::size_t i = 0; i < grad_w.size(); ++i) {
                    const double w = head.weight.data()[i];
                    grad_w.data()[i] += l2 * w;
                    penalty += 0.5 * l2 * w * w;
                }
                Vector grad_b(head.bias.size(), 0.0);
                for (std::size_t i = 0; i < le.grad.rows(); ++i)
                    for (std::size_t k = 0; k < le.grad.cols(); ++k) grad_b[k] += le.grad(i, k);
                if (!(final_epoch && config.freeze_final_epoch)) grad_h = matmul_nt(le.grad, head.weight);
                opt.step(0, head.weight.data(), grad_w.data());
                opt.step(1, head.bias, grad_b);
                epoch_loss += le.loss + penalty;
            }

            if (!grad_h.empty()) {
                const NetworkGradients g = backward(model.net, cache, grad_h);
                std::size_t slot = 2;
                if (model.net.input_proj()) {
                    opt.step(slot++, model.net.input_proj()->weight.data(), g.input_proj->weight.data());
                    opt.step(slot++, model.net.input_proj()->bias, g.input_proj->bias);
                }
                for (std::size_t l = 0; l < model.net.blocks().size(); ++l) {
                    auto& block = model.net.blocks()[l];
                    opt.step(slot++, block.weight.data(), g.block_weights[l].data());
                    opt.step(slot++, block.bias, g.block_biases[l]);
                }
                model.net.apply_spectral_constraints();
            }
            ++batches;
            ++log.steps;
        }
        const double mean_loss = epoch_loss / static_cast<double>(batches);
        if (!std::isfinite(mean_loss))
            throw DivergenceDetected("train_map: non-finite loss in epoch " + std::to_string(epoch));
        log.epoch_loss.push_back(mean_loss);
    }
    if (model.has_gp_head()) model.gp_head().finalize();
    return log;
}

}  // namespace sngp
