// Acceptance checks 1-11. Prints one PASS/FAIL line per criterion and exits
// 0 only when the set of failing criteria equals --expect-fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "sngp/artifact.hpp"
#include "sngp/config.hpp"
#include "sngp/experiment.hpp"
#include "sngp/metrics.hpp"
#include "sngp/predict.hpp"
#include "sngp/rff_gp_head.hpp"
#include "sngp/theory.hpp"

using namespace sngp;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double x, int digits = 4) {
    std::ostringstream s;
    s << std::setprecision(digits) << x;
    return s.str();
}

// ---------------------------------------------------------------------------
// 1. Kernel approximation

constexpr double kKernelTolerance = 0.05;

double kernel_error(std::size_t features, std::uint64_t seed, const Matrix& a, const Matrix& b) {
    RffGpOptions o;
    o.input_dim = a.cols();
    o.num_features = features;
    o.amplitude = 1.0;
    o.length_scale = 2.0;
    o.seed = seed;
    RffGpHead head(o);
    const Matrix pa = head.features(a), pb = head.features(b);
    double worst = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        worst = std::max(worst, std::abs(dot(pa.row(i), pb.row(i)) - test::rbf(a.row(i), b.row(i), 1.0, 2.0)));
    return worst;
}

Outcome kernel_approximation() {
    Rng rng(101);
    const Matrix a = sample_gaussian(rng, 100, 4), b = sample_gaussian(rng, 100, 4);
    std::vector<double> mean_error;
    for (std::size_t d : {256u, 1024u, 4096u}) {
        double total = 0.0;
        for (std::uint64_t seed = 0; seed < 10; ++seed) total += kernel_error(d, seed, a, b);
        mean_error.push_back(total / 10.0);
    }
    const bool monotone = mean_error[0] > mean_error[1] && mean_error[1] > mean_error[2];
    return {monotone && mean_error[2] < kKernelTolerance,
            "mean max-abs error D_L=256/1024/4096: " + fmt(mean_error[0]) + " / " + fmt(mean_error[1]) + " / " +
                fmt(mean_error[2]) + " (limit " + fmt(kKernelTolerance) + " at 4096)"};
}

// ---------------------------------------------------------------------------
// 2. Laplace precision vs finite-difference Hessian

constexpr double kHessianTolerance = 1e-4;

Outcome laplace_correctness() {
    const std::size_t n = 32, d = 8;
    const double tau = 0.5;
    RffGpOptions o;
    o.input_dim = 3;
    o.num_features = d;
    o.length_scale = 1.0;
    o.prior_variance = tau;
    o.seed = 12;
    Rng rng(102);
    const Matrix phi = RffGpHead(o).features(sample_gaussian(rng, n, 3) * 1.5);
    const Eigen::MatrixXd phi_e = test::to_eigen(phi);

    auto fd_of = [](const test::LaplaceProblem& p, const Eigen::VectorXd& beta) {
        return test::fd_hessian([&](const Eigen::VectorXd& b) { return p.value(b); }, beta);
    };
    std::ostringstream detail;
    double worst = 0.0;

    {
        test::LaplaceProblem p{phi_e, Eigen::VectorXd(n), 1, tau, test::Objective::binary};
        for (std::size_t i = 0; i < n; ++i) p.y(i) = rng.uniform() < 0.5 ? 0.0 : 1.0;
        const Eigen::VectorXd beta = test::newton_map(p);
        const Eigen::VectorXd g = phi_e * beta;
        Matrix probs(n, 1);
        for (std::size_t i = 0; i < n; ++i) probs(i, 0) = 1.0 / (1.0 + std::exp(-g(i)));
        RffGpHead head(o);
        head.accumulate_precision(phi, probs, Likelihood::binary);
        const double e = test::relative_max_error(test::to_eigen(head.precision()), fd_of(p, beta));
        worst = std::max(worst, e);
        detail << "binary " << fmt(e, 3);
    }
    {
        test::LaplaceProblem p{phi_e, Eigen::VectorXd(n), 1, tau, test::Objective::regression};
        for (std::size_t i = 0; i < n; ++i) p.y(i) = rng.normal();
        const Eigen::VectorXd beta = test::newton_map(p);
        RffGpHead head(o);
        head.accumulate_precision(phi, Matrix(), Likelihood::regression);
        const double e = test::relative_max_error(test::to_eigen(head.precision()), fd_of(p, beta));
        worst = std::max(worst, e);
        detail << ", regression " << fmt(e, 3);
    }
    {
        // Per-class precision: class k uses weights p_k(1 − p_k), which is
        // the k-th diagonal block of the softmax Hessian.
        const std::size_t k = 3;
        test::LaplaceProblem p{phi_e, Eigen::VectorXd(n), k, tau, test::Objective::multiclass};
        for (std::size_t i = 0; i < n; ++i) p.y(i) = static_cast<double>(rng.below(k));
        const Eigen::VectorXd beta = test::newton_map(p);
        const Eigen::MatrixXd fd = fd_of(p, beta);
        const Eigen::MatrixXd g = phi_e * Eigen::Map<const Eigen::MatrixXd>(beta.data(), d, k);
        detail << ", multiclass";
        for (std::size_t c = 0; c < k; ++c) {
            Matrix probs(n, 1);
            for (std::size_t i = 0; i < n; ++i) probs(i, 0) = test::LaplaceProblem::softmax_row(g.row(i).transpose())(c);
            RffGpHead head(o);
            head.accumulate_precision(phi, probs, Likelihood::binary);
            const Eigen::MatrixXd block = fd.block(c * d, c * d, d, d);
            const double e = test::relative_max_error(test::to_eigen(head.precision()), block);
            worst = std::max(worst, e);
            detail << " " << fmt(e, 3);
        }
    }
    detail << " (limit " << fmt(kHessianTolerance) << ")";
    return {worst < kHessianTolerance, detail.str()};
}

// ---------------------------------------------------------------------------
// 3. Primal and dual predictive moments

constexpr double kPrimalDualTolerance = 1e-6;

Outcome primal_dual() {
    double worst = 0.0;
    for (std::uint64_t instance = 0; instance < 5; ++instance) {
        Rng rng(103 + instance);
        RffGpOptions o;
        o.input_dim = 2;
        o.num_features = 128;
        o.length_scale = 1.0;
        o.prior_variance = instance % 2 == 0 ? 1.0 : 0.5;
        o.seed = instance;
        RffGpHead head(o);
        const Matrix phi = head.features(sample_gaussian(rng, 64, 2));
        const Matrix phi_test = head.features(sample_gaussian(rng, 32, 2) * 2.0);
        Matrix y(64, 1);
        for (double& v : y.data()) v = rng.normal();
        head.accumulate_precision(phi, Matrix(), Likelihood::regression);
        head.beta() = matmul(head.finalize(), matmul_tn(phi, y));
        const Matrix mean = head.logits(phi_test);
        const Vector var = head.predictive_variance(phi_test);
        const auto dual = test::dual_regression(test::to_eigen(phi), test::to_eigen(y).col(0),
                                                test::to_eigen(phi_test), o.prior_variance);
        for (std::size_t j = 0; j < phi_test.rows(); ++j) {
            worst = std::max(worst, std::abs(mean(j, 0) - dual.mean(j)));
            worst = std::max(worst, std::abs(var[j] - dual.variance(j)));
        }
    }
    return {worst <= kPrimalDualTolerance,
            "max-abs gap over 5 instances " + fmt(worst, 3) + " (limit " + fmt(kPrimalDualTolerance) + ")"};
}

// ---------------------------------------------------------------------------
// 4 and 8. Two moons

constexpr double kMoonsAccuracy = 0.99;
constexpr double kSpectralSlack = 1.01;
const std::vector<std::array<double, 2>> kOodCenters = {{4, 4},  {-3, -2}, {0.5, 3}, {-3, 1.5}, {5, -1},
                                                        {2, -3}, {-4, -4}, {8, 0},   {0, -6}};

double normalized_u(double p) { return p * (1.0 - p) / 0.25; }

struct MoonsRun {
    TrainOutcome outcome;
    double accuracy = 0.0;
    double ind_q95 = 0.0;
    std::vector<double> ood_mean_u;
};

MoonsRun evaluate_moons(TrainOutcome outcome, const DataBundle& data) {
    MoonsRun run;
    const auto post = predict_artifact(outcome.artifact, data.test.inputs);
    run.accuracy = accuracy(post.probs, data.test.labels);
    Vector u;
    for (double p : max_prob(post.probs)) u.push_back(normalized_u(p));
    std::sort(u.begin(), u.end());
    run.ind_q95 = u[static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(u.size()))) - 1];
    for (std::size_t c = 0; c < kOodCenters.size(); ++c) {
        Rng rng(400 + c);
        const auto cluster = ood_cluster(rng, 100, kOodCenters[c], 0.2);
        const auto p = max_prob(predict_artifact(outcome.artifact, cluster.inputs).probs);
        double total = 0.0;
        for (double v : p) total += normalized_u(v);
        run.ood_mean_u.push_back(total / static_cast<double>(p.size()));
    }
    run.outcome = std::move(outcome);
    return run;
}

ExperimentConfig moons_config() {
    ExperimentConfig c;
    c.seed = 0;
    c.model.shape.hidden_dim = 64;
    c.model.shape.num_blocks = 6;
    c.trainer.epochs = 100;
    return c;
}

struct MoonsResults {
    SweepResult sweep;
    MoonsRun sngp;
    MoonsRun dense;
};

const MoonsResults& moons() {
    static const MoonsResults results = [] {
        MoonsResults r;
        ExperimentConfig c = moons_config();
        c.sweep.spec_norm_bound = {0.5, 0.95, 2.0};
        r.sweep = run_sweep(c);
        ExperimentConfig best = r.sweep.best_config;
        best.gp.calibrate_amplitude = true;
        const DataBundle data = make_data(best);
        r.sngp = evaluate_moons(run_train(best, data), data);

        ExperimentConfig dense = best;
        dense.model.head = HeadKind::dense;
        dense.model.shape.spec_norm_bound.reset();
        r.dense = evaluate_moons(run_train(dense, data), data);
        return r;
    }();
    return results;
}

Outcome two_moons() {
    const auto& r = moons();
    const double bound = r.sweep.rows[r.sweep.best].spec_norm_bound;
    std::size_t sngp_above = 0, dense_failures = 0;
    double sngp_min = 1.0, dense_min = 1.0;
    for (std::size_t c = 0; c < kOodCenters.size(); ++c) {
        sngp_above += r.sngp.ood_mean_u[c] > r.sngp.ind_q95;
        dense_failures += r.dense.ood_mean_u[c] <= r.dense.ind_q95;
        sngp_min = std::min(sngp_min, r.sngp.ood_mean_u[c]);
        dense_min = std::min(dense_min, r.dense.ood_mean_u[c]);
    }
    const bool pass = r.sngp.accuracy >= kMoonsAccuracy && sngp_above == kOodCenters.size() && dense_failures >= 1;
    std::ostringstream s;
    s << "swept c=" << fmt(bound) << "; SNGP acc " << fmt(r.sngp.accuracy) << ", OOD u > IND q95 ("
      << fmt(r.sngp.ind_q95, 3) << ") at " << sngp_above << "/" << kOodCenters.size() << " clusters (min u "
      << fmt(sngp_min, 3) << "); dense acc " << fmt(r.dense.accuracy) << ", fails at " << dense_failures << "/"
      << kOodCenters.size() << " (min u " << fmt(dense_min, 3) << ")";
    return {pass, s.str()};
}

double worst_norm_ratio(const ModelArtifact& artifact) {
    double worst = 0.0;
    for (const auto& m : artifact.members)
        for (const auto& b : m.net.blocks())
            if (b.constraint) worst = std::max(worst, test::svd_norm(b.weight) / b.constraint->bound);
    return worst;
}

Outcome spectral_constraint() {
    const double swept = worst_norm_ratio(moons().sngp.outcome.artifact);
    double worst = swept;
    std::ostringstream s;
    s << "max ‖W‖₂/c: swept model " << fmt(swept, 6);
    for (double c : {0.3, 0.7}) {
        ExperimentConfig cfg = moons_config();
        cfg.model.shape.hidden_dim = 32;
        cfg.model.shape.spec_norm_bound = c;
        cfg.trainer.epochs = 20;
        cfg.seed = 8;
        const double r = worst_norm_ratio(run_train(cfg).artifact);
        worst = std::max(worst, r);
        s << ", c=" << c << " " << fmt(r, 6);
    }
    s << " (limit " << kSpectralSlack << ")";
    return {worst <= kSpectralSlack, s.str()};
}

// ---------------------------------------------------------------------------
// 5. 1-D regression

constexpr double kFarMeanFraction = 0.1;
constexpr double kFarVarianceFraction = 0.9;

struct Curve {
    std::function<Vector(const Matrix&)> mean;
    std::function<Vector(const Matrix&)> variance;
    double prior_variance;
};

Matrix window(double lo, double hi, std::size_t points) {
    Matrix x(points, 1);
    for (std::size_t i = 0; i < points; ++i)
        x(i, 0) = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    return x;
}

double average(const Vector& v, bool absolute = false) {
    double s = 0.0;
    for (double x : v) s += absolute ? std::abs(x) : x;
    return s / static_cast<double>(v.size());
}

// Returns whether all three checks hold and appends a summary to `s`.
bool check_curve(const Curve& f, const LabeledSet& data, std::ostringstream& s) {
    double max_y = 0.0;
    for (double y : data.labels) max_y = std::max(max_y, std::abs(y));
    double worst_mean = 0.0, worst_var = std::numeric_limits<double>::infinity();
    for (auto [lo, hi] : {std::pair{10.0, 15.0}, {15.0, 25.0}, {-15.0, -10.0}, {-25.0, -15.0}}) {
        const Matrix x = window(lo, hi, 200);
        worst_mean = std::max(worst_mean, average(f.mean(x), true));
        worst_var = std::min(worst_var, average(f.variance(x)));
    }
    const double train_var = average(f.variance(data.inputs));
    const double gap_var = average(f.variance(window(-0.5, 0.5, 50)));
    const bool pass = worst_mean <= kFarMeanFraction * max_y &&
                      worst_var >= kFarVarianceFraction * f.prior_variance && train_var < gap_var;
    s << "far |m| " << fmt(worst_mean, 3) << " (≤ " << fmt(kFarMeanFraction * max_y, 3) << "), far var "
      << fmt(worst_var, 3) << " (≥ " << fmt(kFarVarianceFraction * f.prior_variance, 3) << "), var train/gap "
      << fmt(train_var, 3) << "/" << fmt(gap_var, 3);
    return pass;
}

Outcome regression_1d() {
    Rng rng(105);
    const LabeledSet data = bimodal_regression_1d(rng, 200);
    const double amplitude = 1.0, length_scale = 1.0;

    const auto gp = fit_exact_gp(data.inputs, data.labels, amplitude, length_scale, 0.01);
    const Curve exact{[&](const Matrix& x) { return exact_gp_posterior(gp, x).mean; },
                      [&](const Matrix& x) { return exact_gp_posterior(gp, x).variance; }, amplitude};

    RffGpOptions o;
    o.input_dim = 1;
    o.num_features = 1024;
    o.amplitude = amplitude;
    o.length_scale = length_scale;
    o.seed = 5;
    RffGpHead head(o);
    const Matrix phi = head.features(data.inputs);
    head.accumulate_precision(phi, Matrix(), Likelihood::regression);
    Matrix y(data.size(), 1);
    for (std::size_t i = 0; i < data.size(); ++i) y(i, 0) = data.labels[i];
    head.beta() = matmul(head.finalize(), matmul_tn(phi, y));
    const Curve rff{[&](const Matrix& x) { return head.logits(head.features(x)).column(0); },
                    [&](const Matrix& x) { return head.predictive_variance(head.features(x)); },
                    o.prior_variance * amplitude};

    std::ostringstream s;
    s << "exact GP: ";
    const bool a = check_curve(exact, data, s);
    s << "; RFF head: ";
    const bool b = check_curve(rff, data, s);
    return {a && b, s.str()};
}

// ---------------------------------------------------------------------------
// 6. Minimax

Outcome minimax() {
    std::ostringstream s;
    bool pass = true;
    for (auto kind : {ScoreKind::log, ScoreKind::brier}) {
        for (auto [k, step] : {std::pair{std::size_t{2}, 0.01}, {std::size_t{3}, 0.02}}) {
            const auto r = minimax_verify(BregmanScore{kind, k}, step);
            double dist = 0.0;
            for (double p : r.argmin) dist = std::max(dist, std::abs(p - 1.0 / static_cast<double>(k)));
            pass = pass && dist <= step;
            s << to_string(kind) << " K=" << k << " " << fmt(dist, 3) << ", ";
        }
    }
    std::size_t mixtures = 0;
    for (auto kind : {ScoreKind::log, ScoreKind::brier}) {
        const Vector t2{0.8, 0.2}, t3{0.6, 0.3, 0.1};
        const bool m2 = mixture_optimality(BregmanScore{kind, 2}, t2, 0.7, 0.02).pass;
        const bool m3 = mixture_optimality(BregmanScore{kind, 3}, t3, 0.5, 0.05).pass;
        mixtures += m2 + m3;
        pass = pass && m2 && m3;
    }
    s << "mixture optimal " << mixtures << "/4";
    return {pass, "distance of argmin to uniform: " + s.str()};
}

// ---------------------------------------------------------------------------
// 7. Bi-Lipschitz

constexpr double kRoundoff = 1e-12;

ResidualNetwork scaled_network(std::size_t blocks, double alpha, Activation act, std::uint64_t seed) {
    NetworkShape s;
    s.input_dim = s.hidden_dim = 8;
    s.num_blocks = blocks;
    s.input_projection = false;
    s.activation = act;
    ResidualNetwork net(s, seed);
    for (auto& b : net.blocks()) b.weight *= alpha / test::svd_norm(b.weight);
    return net;
}

Outcome bilipschitz() {
    std::size_t cases = 0, ok = 0;
    double tightest = std::numeric_limits<double>::infinity();
    for (double alpha : {0.3, 0.5, 0.9})
        for (std::size_t blocks : {2u, 4u, 6u}) {
            const double lo = std::pow(1.0 - alpha, static_cast<double>(blocks));
            const double hi = std::pow(1.0 + alpha, static_cast<double>(blocks));
            Rng rng(107 + blocks);
            const auto lin = bilipschitz_probe(scaled_network(blocks, alpha, Activation::identity, blocks), 1000, rng);
            const auto relu = bilipschitz_probe(scaled_network(blocks, alpha, Activation::relu, blocks), 1000, rng);
            cases += 2;
            ok += lin.min_ratio >= lo * (1 - kRoundoff) && lin.max_ratio <= hi * (1 + kRoundoff);
            ok += relu.max_ratio <= hi * (1 + kRoundoff);
            tightest = std::min({tightest, lin.min_ratio / lo, hi / lin.max_ratio, hi / relu.max_ratio});
        }
    return {ok == cases, std::to_string(ok) + "/" + std::to_string(cases) +
                             " networks within bounds (1000 pairs each); smallest slack ratio " + fmt(tightest, 6)};
}

// ---------------------------------------------------------------------------
// 9. Prediction equivalences

constexpr double kMeanFieldTolerance = 0.02;

Outcome prediction_equivalences() {
    std::ostringstream s;
    double worst = 0.0;
    Rng rng(109), mc(110);
    for (std::size_t k : {1u, 3u, 5u, 10u}) {
        const Matrix logits = sample_gaussian(rng, 50, k) * 2.0;
        Vector var(50);
        for (double& v : var) v = rng.uniform(0.0, 1.0);
        const double gap = max_abs_diff(mc_softmax(logits, var, 10000, mc), mean_field(logits, var, std::numbers::pi / 8));
        worst = std::max(worst, gap);
        s << (k == 1 ? "binary " : "K=" + std::to_string(k) + " ") << fmt(gap, 3) << ", ";
    }
    std::size_t flips = 0;
    const std::size_t rows = 100000;
    const Matrix logits = sample_gaussian(rng, rows, 10) * 3.0;
    Vector var(rows), scaled(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        var[i] = rng.uniform(0.0, 5.0);
        scaled[i] = var[i] * rng.uniform(0.0, 100.0);
    }
    const auto a = argmax_rows(mean_field(logits, var, std::numbers::pi / 8));
    const auto b = argmax_rows(mean_field(logits, scaled, std::numbers::pi / 8));
    const auto c = argmax_rows(softmax(logits));
    for (std::size_t i = 0; i < rows; ++i) flips += a[i] != b[i] || a[i] != c[i];
    s << "max gap " << fmt(worst, 3) << " (limit " << kMeanFieldTolerance << "); argmax changes " << flips << "/"
      << rows;
    return {worst <= kMeanFieldTolerance && flips == 0, "mean-field vs MC (10^4 samples): " + s.str()};
}

// ---------------------------------------------------------------------------
// 10. Metric oracles

constexpr double kMetricTolerance = 1e-12;

Outcome metric_oracles() {
    Rng rng(110);
    double worst = 0.0;
    for (int instance = 0; instance < 100; ++instance) {
        const std::size_t n = 20 + rng.below(181), k = 2 + rng.below(4);
        Matrix logits = sample_gaussian(rng, n, k) * 2.0;
        // Rounded logits produce tied confidences and bin edges.
        if (instance % 2 == 0)
            for (double& v : logits.data()) v = std::round(v * 4.0) / 4.0;
        const Matrix probs = softmax(logits);
        Vector labels(n);
        for (double& y : labels) y = static_cast<double>(rng.below(k));
        for (std::size_t bins : {5u, 15u})
            worst = std::max(worst, std::abs(ece(probs, labels, bins) - test::brute_ece(probs, labels, bins)));

        const std::size_t n_ood = 10 + rng.below(n);
        Vector ind(n), ood(n_ood);
        for (double& v : ind) v = std::round(rng.normal() * 8.0) / 8.0 + 0.5;
        for (double& v : ood) v = std::round(rng.normal() * 8.0) / 8.0;
        worst = std::max(worst, std::abs(auroc(ind, ood) - test::brute_auroc(ind, ood)));
        worst = std::max(worst, std::abs(aupr(ind, ood) - test::brute_aupr(ind, ood)));
    }
    return {worst <= kMetricTolerance,
            "max deviation from brute force over 100 instances " + fmt(worst, 3) + " (limit " + fmt(kMetricTolerance) + ")"};
}

// ---------------------------------------------------------------------------
// 11. Determinism

const char* kDeterminismConfig = R"([experiment]
seed = 11
[data]
n_train_per_class = 100
n_test_per_class = 50
[model]
width = 16
blocks = 3
spec_norm_bound = 0.9
[gp]
gp_hidden_dim = 128
[trainer]
epochs = 10
)";

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(SNGP_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

bool bitwise_equal(const PredictivePosterior& a, const PredictivePosterior& b) {
    return a.probs == b.probs && a.mean_logits == b.mean_logits && a.variance == b.variance;
}

Outcome determinism() {
    const fs::path dir = fs::temp_directory_path() / ("sngp_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path cfg_path = dir / "config.ini";
    std::ofstream(cfg_path) << kDeterminismConfig;

    const int rc_a = run_cli("train --config " + cfg_path.string() + " --out " + (dir / "a").string());
    const int rc_b = run_cli("train --config " + cfg_path.string() + " --out " + (dir / "b").string());
    const std::string bytes_a = slurp(dir / "a" / "model.json"), bytes_b = slurp(dir / "b" / "model.json");
    const bool cli_same = rc_a == 0 && rc_b == 0 && !bytes_a.empty() && bytes_a == bytes_b;

    std::istringstream cfg_text(kDeterminismConfig);
    const ExperimentConfig config = parse_config(cfg_text);
    const TrainOutcome trained = run_train(config);
    const bool library_same = serialize_artifact(trained.artifact) == bytes_a;

    const ModelArtifact loaded = load_artifact((dir / "a" / "model.json").string());
    const DataBundle data = make_data(config);
    Matrix probe = data.test.inputs;
    Rng rng(111);
    const Matrix far = sample_gaussian(rng, 50, 2) * 6.0;
    probe.data().insert(probe.data().end(), far.data().begin(), far.data().end());
    probe = Matrix(data.test.size() + 50, 2, probe.data());
    const bool predictions_same =
        bitwise_equal(predict_artifact(trained.artifact, probe), predict_artifact(loaded, probe));
    const bool reserialized = serialize_artifact(loaded) == bytes_a;
    fs::remove_all(dir);

    std::ostringstream s;
    s << "CLI train twice byte-identical: " << (cli_same ? "yes" : "no")
      << "; in-process artifact matches CLI bytes: " << (library_same ? "yes" : "no")
      << "; loaded predictions bitwise equal: " << (predictions_same ? "yes" : "no")
      << "; re-serialized bytes equal: " << (reserialized ? "yes" : "no");
    return {cli_same && library_same && predictions_same && reserialized, s.str()};
}

struct Criterion {
    int id;
    const char* name;
    double time_limit_s;
    Outcome (*run)();
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SNGP acceptance checks"};
    std::vector<int> expect_fail, only;
    app.add_option("--expect-fail", expect_fail, "Criteria known to fail")->delimiter(',');
    app.add_option("--only", only, "Run only these criteria")->delimiter(',');
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> criteria = {
        {1, "kernel approximation", 30, kernel_approximation},
        {2, "Laplace precision", 10, laplace_correctness},
        {3, "primal/dual equivalence", 5, primal_dual},
        {4, "two moons", 300, two_moons},
        {5, "1-D regression", 60, regression_1d},
        {6, "minimax", 120, minimax},
        {7, "bi-Lipschitz bounds", 30, bilipschitz},
        {8, "spectral constraint", 60, spectral_constraint},
        {9, "prediction equivalences", 30, prediction_equivalences},
        {10, "metric oracles", 10, metric_oracles},
        {11, "determinism", 120, determinism},
    };

    std::set<int> failed;
    const std::set<int> selected(only.begin(), only.end());
    for (const auto& c : criteria) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs < c.time_limit_s;
        const bool pass = o.pass && in_time;
        if (!pass) failed.insert(c.id);
        std::cout << (pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << ", " << fmt(secs, 3)
                  << " s, limit " << c.time_limit_s << " s): " << o.detail << (in_time ? "" : " [too slow]")
                  << std::endl;
    }

    std::set<int> expected(expect_fail.begin(), expect_fail.end());
    if (!selected.empty()) {
        std::set<int> kept;
        for (int id : expected)
            if (selected.count(id)) kept.insert(id);
        expected = kept;
    }
    if (failed == expected) {
        if (!expected.empty()) std::cout << "failures match the expected set" << std::endl;
        return 0;
    }
    std::cout << "failures do not match the expected set" << std::endl;
    return 1;
}
