#include "sngp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sngp {

namespace {

void check_labels(const Matrix& probs, std::span<const double> labels) {
    if (probs.rows() == 0) throw EmptySet("metric on an empty set");
    if (probs.rows() != labels.size()) throw ShapeMismatch("probability rows and labels differ");
}

std::size_t label_index(double label, std::size_t k) {
    const auto idx = static_cast<std::size_t>(label);
    if (label < 0.0 || idx >= k || static_cast<double>(idx) != label)
        throw InvalidRange("label " + std::to_string(label) + " is not a class index");
    return idx;
}

double quadratic_form(const Matrix& precision, std::span<const double> diff) {
    double s = 0.0;
    for (std::size_t i = 0; i < diff.size(); ++i) s += diff[i] * dot(precision.row(i), diff);
    return s;
}

}  // namespace

nlohmann::json to_json(const EvalReport& report) {
    nlohmann::json j;
    j["n"] = report.n;
    j["accuracy"] = report.accuracy;
    j["ece"] = report.ece;
    j["nll"] = report.nll;
    j["brier"] = report.brier;
    j["bin_stats"] = nlohmann::json::array();
    for (const auto& b : report.bin_stats)
        j["bin_stats"].push_back({{"confidence_mean", b.confidence_mean}, {"accuracy", b.accuracy}, {"count", b.count}});
    if (!report.ood.empty()) {
        nlohmann::json ood = nlohmann::json::object();
        for (const auto& [set, scores] : report.ood)
            for (const auto& [name, s] : scores) ood[set][name] = {{"auroc", s.auroc}, {"aupr", s.aupr}};
        j["ood"] = ood;
    }
    return j;
}

std::vector<std::size_t> argmax_rows(const Matrix& probs) {
    std::vector<std::size_t> out(probs.rows());
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        const auto r = probs.row(i);
        out[i] = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
    }
    return out;
}

Vector max_prob(const Matrix& probs) {
    Vector out(probs.rows());
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        const auto r = probs.row(i);
        out[i] = *std::max_element(r.begin(), r.end());
    }
    return out;
}

double accuracy(const Matrix& probs, std::span<const double> labels) {
    check_labels(probs, labels);
    const auto pred = argmax_rows(probs);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == label_index(labels[i], probs.cols());
    return static_cast<double>(correct) / static_cast<double>(pred.size());
}

double ece(const Matrix& probs, std::span<const double> labels, std::size_t bins, std::vector<BinStat>* bin_stats) {
    check_labels(probs, labels);
    if (bins == 0) throw InvalidRange("ece: bins must be >= 1");
    const double lo = 1.0 / static_cast<double>(probs.cols());
    const double width = (1.0 - lo) / static_cast<double>(bins);
    std::vector<double> conf_sum(bins, 0.0), correct(bins, 0.0);
    std::vector<std::size_t> count(bins, 0);
    const auto pred = argmax_rows(probs);
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        const double c = probs(i, pred[i]);
        // Bin m covers (lo + m·w, lo + (m+1)·w]; the arithmetic guess is
        // corrected against the actual edges.
        auto m = static_cast<std::ptrdiff_t>(std::ceil((c - lo) / width)) - 1;
        m = std::clamp<std::ptrdiff_t>(m, 0, static_cast<std::ptrdiff_t>(bins) - 1);
        while (m > 0 && !(c > lo + static_cast<double>(m) * width)) --m;
        while (m + 1 < static_cast<std::ptrdiff_t>(bins) && c > lo + static_cast<double>(m + 1) * width) ++m;
        conf_sum[m] += c;
        correct[m] += pred[i] == label_index(labels[i], probs.cols()) ? 1.0 : 0.0;
        ++count[m];
    }
    const double n = static_cast<double>(probs.rows());
    double total = 0.0;
    if (bin_stats) bin_stats->assign(bins, {});
    for (std::size_t m = 0; m < bins; ++m) {
        if (count[m] == 0) continue;
        const double cnt = static_cast<double>(count[m]);
        const double acc = correct[m] / cnt;
        const double conf = conf_sum[m] / cnt;
        total += cnt / n * std::abs(acc - conf);
        if (bin_stats) (*bin_stats)[m] = {conf, acc, count[m]};
    }
    return total;
}

double nll(const Matrix& probs, std::span<const double> labels) {
    check_labels(probs, labels);
    double s = 0.0;
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        const double p = probs(i, label_index(labels[i], probs.cols()));
        s -= std::log(std::max(p, 1e-300));
    }
    return s / static_cast<double>(probs.rows());
}

double brier(const Matrix& probs, std::span<const double> labels) {
    check_labels(probs, labels);
    double s = 0.0;
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        const std::size_t y = label_index(labels[i], probs.cols());
        for (std::size_t k = 0; k < probs.cols(); ++k) {
            const double d = probs(i, k) - (k == y ? 1.0 : 0.0);
            s += d * d;
        }
    }
    return s / static_cast<double>(probs.rows());
}

double auroc(std::span<const double> scores_ind, std::span<const double> scores_ood) {
    if (scores_ind.empty() || scores_ood.empty()) throw EmptySet("auroc: empty score set");
    struct Item {
        double score;
        bool ind;
    };
    std::vector<Item> items;
    items.reserve(scores_ind.size() + scores_ood.size());
    for (double s : scores_ind) items.push_back({s, true});
    for (double s : scores_ood) items.push_back({s, false});
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.score < b.score; });
    // Mann–Whitney U with tie-averaged ranks, kept in doubled units so the
    // sums stay exact.
    double doubled_rank_sum = 0.0;
    for (std::size_t i = 0; i < items.size();) {
        std::size_t j = i;
        while (j < items.size() && items[j].score == items[i].score) ++j;
        const double doubled_rank = static_cast<double>(i + 1 + j);  // 2 × mean rank of i+1..j
        for (std::size_t k = i; k < j; ++k)
            if (items[k].ind) doubled_rank_sum += doubled_rank;
        i = j;
    }
    const double ni = static_cast<double>(scores_ind.size());
    const double no = static_cast<double>(scores_ood.size());
    const double doubled_u = doubled_rank_sum - ni * (ni + 1.0);
    return doubled_u / (2.0 * ni * no);
}

double aupr(std::span<const double> scores_ind, std::span<const double> scores_ood) {
    if (scores_ind.empty() || scores_ood.empty()) throw EmptySet("aupr: empty score set");
    struct Item {
        double uncertainty;
        bool ood;
    };
    std::vector<Item> items;
    for (double s : scores_ind) items.push_back({-s, false});
    for (double s : scores_ood) items.push_back({-s, true});
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.uncertainty > b.uncertainty; });
    double ap = 0.0;
    std::size_t tp = 0;
    for (std::size_t i = 0; i < items.size();) {
        std::size_t j = i, pos_in_group = 0;
        while (j < items.size() && items[j].uncertainty == items[i].uncertainty) {
            pos_in_group += items[j].ood;
            ++j;
        }
        tp += pos_in_group;
        if (pos_in_group > 0)
            ap += static_cast<double>(pos_in_group) * (static_cast<double>(tp) / static_cast<double>(j));
        i = j;
    }
    return ap / static_cast<double>(scores_ood.size());
}

Vector msp(const Matrix& logits) {
    Vector out(logits.rows());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const auto r = logits.row(i);
        const double mx = *std::max_element(r.begin(), r.end());
        double z = 0.0;
        for (double g : r) z += std::exp(g - mx);
        out[i] = 1.0 / z;
    }
    return out;
}

Vector dempster_shafer(const Matrix& logits) {
    const double k = static_cast<double>(logits.cols());
    Vector out(logits.rows());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        double s = 0.0;
        for (double g : logits.row(i)) s += std::exp(g);
        out[i] = 1.0 - k / (k + s);
    }
    return out;
}

GaussianFit GaussianFit::from_parameters(Matrix class_means, Matrix shared_covariance, Vector background_mean,
                                         Matrix background_covariance) {
    GaussianFit fit;
    try {
        fit.shared_precision = spd_inverse(shared_covariance);
        fit.background_precision = spd_inverse(background_covariance);
    } catch (const NotPositiveDefinite& e) {
        throw SingularCovariance(std::string("GaussianFit: ") + e.what());
    }
    fit.class_means = std::move(class_means);
    fit.shared_covariance = std::move(shared_covariance);
    fit.background_mean = std::move(background_mean);
    fit.background_covariance = std::move(background_covariance);
    return fit;
}

GaussianFit fit_gaussian(const Matrix& h, std::span<const double> labels, std::size_t num_classes) {
    const std::size_t n = h.rows(), d = h.cols();
    if (n == 0) throw EmptySet("fit_gaussian: no embeddings");
    if (labels.size() != n) throw ShapeMismatch("fit_gaussian: labels");
    Matrix means(num_classes, d);
    std::vector<double> counts(num_classes, 0.0);
    Vector bg_mean(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t y = label_index(labels[i], num_classes);
        counts[y] += 1.0;
        for (std::size_t j = 0; j < d; ++j) {
            means(y, j) += h(i, j);
            bg_mean[j] += h(i, j);
        }
    }
    for (std::size_t k = 0; k < num_classes; ++k) {
        if (counts[k] == 0.0) throw EmptySet("fit_gaussian: class " + std::to_string(k) + " has no examples");
        for (std::size_t j = 0; j < d; ++j) means(k, j) /= counts[k];
    }
    for (double& m : bg_mean) m /= static_cast<double>(n);

    Matrix centered(n, d), bg_centered(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t y = label_index(labels[i], num_classes);
        for (std::size_t j = 0; j < d; ++j) {
            centered(i, j) = h(i, j) - means(y, j);
            bg_centered(i, j) = h(i, j) - bg_mean[j];
        }
    }
    const Vector ones(n, 1.0 / static_cast<double>(n));
    Matrix cov(d, d), bg_cov(d, d);
    add_weighted_gram(cov, centered, ones);
    add_weighted_gram(bg_cov, bg_centered, ones);
    for (Matrix* c : {&cov, &bg_cov}) {
        double trace = 0.0;
        for (std::size_t j = 0; j < d; ++j) trace += (*c)(j, j);
        if (!(trace > 0.0)) throw SingularCovariance("fit_gaussian: covariance has zero trace");
        const double ridge = kCovarianceRidge * trace / static_cast<double>(d);
        for (std::size_t j = 0; j < d; ++j) (*c)(j, j) += ridge;
    }
    return GaussianFit::from_parameters(std::move(means), std::move(cov), std::move(bg_mean), std::move(bg_cov));
}

Matrix class_distances(const GaussianFit& fit, const Matrix& h) {
    const std::size_t k = fit.class_means.rows(), d = fit.class_means.cols();
    if (h.cols() != d) throw ShapeMismatch("class_distances: embedding width");
    Matrix out(h.rows(), k);
    Vector diff(d);
    for (std::size_t i = 0; i < h.rows(); ++i)
        for (std::size_t c = 0; c < k; ++c) {
            for (std::size_t j = 0; j < d; ++j) diff[j] = h(i, j) - fit.class_means(c, j);
            out(i, c) = quadratic_form(fit.shared_precision, diff);
        }
    return out;
}

Vector mahalanobis_score(const GaussianFit& fit, const Matrix& h) {
    const Matrix md = class_distances(fit, h);
    Vector out(h.rows());
    for (std::size_t i = 0; i < h.rows(); ++i) {
        const auto r = md.row(i);
        out[i] = -*std::min_element(r.begin(), r.end());
    }
    return out;
}

Vector relative_mahalanobis_score(const GaussianFit& fit, const Matrix& h) {
    const Matrix md = class_distances(fit, h);
    const std::size_t d = fit.background_mean.size();
    Vector out(h.rows()), diff(d);
    for (std::size_t i = 0; i < h.rows(); ++i) {
        for (std::size_t j = 0; j < d; ++j) diff[j] = h(i, j) - fit.background_mean[j];
        const double md0 = quadratic_form(fit.background_precision, diff);
        const auto r = md.row(i);
        out[i] = -(*std::min_element(r.begin(), r.end()) - md0);
    }
    return out;
}

}  // namespace sngp
