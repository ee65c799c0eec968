#include "sngp/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "sngp/datasets.hpp"
#include "sngp/errors.hpp"
#include "sngp/predict.hpp"

namespace sngp {

using nlohmann::json;

std::string to_string(ScoreKind kind) { return kind == ScoreKind::log ? "log" : "brier"; }

double BregmanScore::psi(double p) const {
    if (kind == ScoreKind::log) return p > 0.0 ? p * std::log(p) : 0.0;
    return p * p - 1.0 / static_cast<double>(num_classes);
}

double BregmanScore::dpsi(double p) const {
    if (kind == ScoreKind::log) return p > 0.0 ? std::log(p) + 1.0 : -std::numeric_limits<double>::infinity();
    return 2.0 * p;
}

namespace {

void check_simplex(std::span<const double> p, std::size_t k, const char* what) {
    if (p.size() != k) throw NotOnSimplex(std::string(what) + ": wrong number of classes");
    double sum = 0.0;
    for (double v : p) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw NotOnSimplex(std::string(what) + ": negative or non-finite entry");
        sum += v;
    }
    if (std::abs(sum - 1.0) > kSimplexTolerance) throw NotOnSimplex(std::string(what) + ": does not sum to 1");
}

/// Per-class term of the score given precomputed ψ(p_k), ψ'(p_k).
double score_term(double p, double p_star, double psi, double dpsi) {
    // The (p − p*)ψ'(p) product is 0 · (−inf) for the log score when both are
    // zero; that outcome carries no mass and contributes nothing.
    if (p == p_star) return -psi;
    return (p - p_star) * dpsi - psi;
}

}  // namespace

double bregman_score(const BregmanScore& score, std::span<const double> p, std::span<const double> p_star) {
    check_simplex(p, score.num_classes, "forecast");
    check_simplex(p_star, score.num_classes, "truth");
    double s = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) s += score_term(p[k], p_star[k], score.psi(p[k]), score.dpsi(p[k]));
    return s;
}

double entropy_concavity_margin(const BregmanScore& score, std::size_t points) {
    if (points < 3) throw InvalidRange("entropy_concavity_margin: need at least 3 points");
    const double h = 1.0 / static_cast<double>(points + 1);
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 2; i < points; ++i) {
        const double x = h * static_cast<double>(i);
        const double d2 = -score.psi(x + h) + 2.0 * score.psi(x) - score.psi(x - h);
        worst = std::max(worst, d2);
    }
    return worst;
}

std::vector<Vector> simplex_grid(std::size_t num_classes, double step, double offset) {
    if (num_classes < 2) throw InvalidRange("simplex_grid: need at least 2 classes");
    const double inv = 1.0 / step;
    const auto n = static_cast<std::size_t>(std::llround(inv));
    if (!(step > 0.0) || std::abs(inv - static_cast<double>(n)) > 1e-9 * inv)
        throw InvalidRange("simplex_grid: 1/step must be an integer");
    const double k = static_cast<double>(num_classes);
    if (!(offset >= 0.0 && offset * k < 1.0)) throw InvalidRange("simplex_grid: offset too large");
    const double scale = 1.0 - k * offset;

    std::vector<Vector> grid;
    std::vector<std::size_t> idx(num_classes, 0);
    // Enumerate compositions of n into num_classes parts in lexicographic order.
    auto emit = [&] {
        Vector p(num_classes);
        for (std::size_t c = 0; c < num_classes; ++c)
            p[c] = offset + scale * static_cast<double>(idx[c]) / static_cast<double>(n);
        grid.push_back(std::move(p));
    };
    auto recurse = [&](auto&& self, std::size_t c, std::size_t remaining) -> void {
        if (c + 1 == num_classes) {
            idx[c] = remaining;
            emit();
            return;
        }
        for (std::size_t i = 0; i <= remaining; ++i) {
            idx[c] = i;
            self(self, c + 1, remaining - i);
        }
    };
    recurse(recurse, 0, n);
    return grid;
}

double worst_case_risk(const BregmanScore& score, std::span<const double> p, std::span<const Vector> truth_grid) {
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& q : truth_grid) worst = std::max(worst, bregman_score(score, p, q));
    return worst;
}

namespace {

/// Worst-case risk of every grid forecast against every grid truth.
Vector worst_case_table(const BregmanScore& score, const std::vector<Vector>& grid) {
    const std::size_t k = score.num_classes;
    std::vector<double> psi(grid.size() * k), dpsi(grid.size() * k);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        check_simplex(grid[i], k, "grid point");
        for (std::size_t c = 0; c < k; ++c) {
            psi[i * k + c] = score.psi(grid[i][c]);
            dpsi[i * k + c] = score.dpsi(grid[i][c]);
        }
    }
    Vector worst(grid.size(), -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto& p = grid[i];
        for (const auto& q : grid) {
            double s = 0.0;
            for (std::size_t c = 0; c < k; ++c) s += score_term(p[c], q[c], psi[i * k + c], dpsi[i * k + c]);
            worst[i] = std::max(worst[i], s);
        }
    }
    return worst;
}

bool ties(double a, double best) { return a <= best + 1e-12 * std::max(1.0, std::abs(best)); }

}  // namespace

MinimaxResult minimax_verify(const BregmanScore& score, double grid_step) {
    if (!(grid_step > 0.0 && grid_step <= 0.1)) throw InvalidRange("minimax_verify: grid_step must be in (0, 0.1]");
    const auto grid = simplex_grid(score.num_classes, grid_step);
    const Vector worst = worst_case_table(score, grid);
    MinimaxResult out;
    out.grid_size = grid.size();
    out.risk = *std::min_element(worst.begin(), worst.end());
    out.argmin.assign(score.num_classes, 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!ties(worst[i], out.risk)) continue;
        out.minimizers.push_back(grid[i]);
        for (std::size_t c = 0; c < score.num_classes; ++c) out.argmin[c] += grid[i][c];
    }
    for (double& v : out.argmin) v /= static_cast<double>(out.minimizers.size());
    return out;
}

MixtureCheck mixture_optimality(const BregmanScore& score, std::span<const double> ind_truth, double ind_mass,
                                double grid_step) {
    if (!(ind_mass > 0.0 && ind_mass < 1.0)) throw InvalidRange("mixture_optimality: ind_mass must be in (0, 1)");
    check_simplex(ind_truth, score.num_classes, "ind_truth");
    const auto grid = simplex_grid(score.num_classes, grid_step);
    const Vector worst_ood = worst_case_table(score, grid);
    const Vector uniform(score.num_classes, 1.0 / static_cast<double>(score.num_classes));

    MixtureCheck out;
    out.mixture_risk = ind_mass * bregman_score(score, ind_truth, ind_truth) +
                       (1.0 - ind_mass) * worst_case_risk(score, uniform, grid);
    out.best_alternative = std::numeric_limits<double>::infinity();
    // Every (in-domain forecast, OOD forecast) pair on the grid. The in-domain
    // truth is fixed, so only the OOD truth is adversarial.
    for (const auto& p_ind : grid) {
        const double ind = ind_mass * bregman_score(score, p_ind, ind_truth);
        for (std::size_t j = 0; j < grid.size(); ++j) {
            const double r = ind + (1.0 - ind_mass) * worst_ood[j];
            ++out.alternatives;
            if (r < out.best_alternative) {
                out.best_alternative = r;
                out.best_alternative_ood = grid[j];
            }
        }
    }
    out.pass = ties(out.mixture_risk, out.best_alternative);
    return out;
}

double ExactGp::kernel(std::span<const double> a, std::span<const double> b) const {
    double d2 = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) d2 += (a[j] - b[j]) * (a[j] - b[j]);
    return amplitude * std::exp(-d2 / (2.0 * length_scale * length_scale));
}

ExactGp fit_exact_gp(Matrix inputs, Vector targets, double amplitude, double length_scale, double noise) {
    if (inputs.rows() == 0) throw EmptySet("fit_exact_gp: no training inputs");
    if (targets.size() != inputs.rows()) throw ShapeMismatch("fit_exact_gp: targets");
    if (!(amplitude > 0.0 && length_scale > 0.0 && noise >= 0.0))
        throw InvalidRange("fit_exact_gp: amplitude and length scale must be positive, noise non-negative");
    ExactGp gp{amplitude, length_scale, noise, std::move(inputs), std::move(targets), {}, {}};
    const std::size_t n = gp.inputs.rows();
    Matrix k(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) k(i, j) = k(j, i) = gp.kernel(gp.inputs.row(i), gp.inputs.row(j));
        k(i, i) += noise;
    }
    gp.chol = cholesky(k);
    Matrix y(n, 1, gp.targets);
    gp.alpha = cholesky_solve(gp.chol, y).column(0);
    return gp;
}

GpPosterior exact_gp_posterior(const ExactGp& gp, const Matrix& x_test) {
    if (x_test.cols() != gp.inputs.cols()) throw ShapeMismatch("exact_gp_posterior: input dimension");
    const std::size_t n = gp.inputs.rows();
    GpPosterior out;
    out.mean.resize(x_test.rows());
    out.variance.resize(x_test.rows());
    Vector ks(n), z(n);
    for (std::size_t t = 0; t < x_test.rows(); ++t) {
        const auto x = x_test.row(t);
        for (std::size_t i = 0; i < n; ++i) ks[i] = gp.kernel(x, gp.inputs.row(i));
        out.mean[t] = dot(ks, gp.alpha);
        // k*ᵀ(LLᵀ)⁻¹k* = ‖L⁻¹k*‖², which stays non-negative in floating point.
        for (std::size_t i = 0; i < n; ++i) {
            double s = ks[i];
            for (std::size_t j = 0; j < i; ++j) s -= gp.chol(i, j) * z[j];
            z[i] = s / gp.chol(i, i);
        }
        out.variance[t] = gp.kernel(x, x) - dot(z, z);
    }
    return out;
}

double spectral_norm_estimate(const Matrix& w, Rng& rng, std::size_t max_iters, double rtol) {
    if (max_abs(w) == 0.0) return 0.0;
    Vector v(w.cols());
    for (double& x : v) x = rng.normal();
    double estimate = 0.0;
    const Matrix wt = w.transpose();
    for (std::size_t it = 0; it < max_iters; ++it) {
        double nv = norm2(v);
        for (double& x : v) x /= nv;
        Vector u = matvec(w, v);
        const double sigma = norm2(u);
        v = matvec(wt, u);
        if (it > 0 && std::abs(sigma - estimate) <= rtol * sigma) return sigma;
        estimate = sigma;
    }
    return estimate;
}

BilipschitzProbe bilipschitz_probe(const ResidualNetwork& net, std::size_t pairs, Rng& rng,
                                   std::span<const double> box_lo, std::span<const double> box_hi) {
    if (net.input_proj()) throw InvalidRange("bilipschitz_probe: network must be built of square blocks only");
    if (pairs == 0) throw InvalidRange("bilipschitz_probe: pairs must be >= 1");
    const std::size_t d = net.input_dim();
    Vector lo(d, -1.0), hi(d, 1.0);
    if (!box_lo.empty() || !box_hi.empty()) {
        if (box_lo.size() != d || box_hi.size() != d) throw ShapeMismatch("bilipschitz_probe: box bounds");
        lo.assign(box_lo.begin(), box_lo.end());
        hi.assign(box_hi.begin(), box_hi.end());
    }
    for (std::size_t j = 0; j < d; ++j) {
        const double c = 0.5 * (lo[j] + hi[j]), r = hi[j] - lo[j];
        lo[j] = c - r;
        hi[j] = c + r;
    }

    BilipschitzProbe out;
    out.blocks = net.blocks().size();
    out.pairs = pairs;
    Rng norm_rng = rng.split(0);
    for (const auto& b : net.blocks()) out.alpha = std::max(out.alpha, spectral_norm_estimate(b.weight, norm_rng));
    out.lower_bound = std::pow(std::max(0.0, 1.0 - out.alpha), static_cast<double>(out.blocks));
    out.upper_bound = std::pow(1.0 + out.alpha, static_cast<double>(out.blocks));

    Matrix x(2 * pairs, d);
    for (std::size_t i = 0; i < 2 * pairs; ++i)
        for (std::size_t j = 0; j < d; ++j) x(i, j) = rng.uniform(lo[j], hi[j]);
    const Matrix h = forward(net, x);
    out.min_ratio = std::numeric_limits<double>::infinity();
    out.max_ratio = 0.0;
    Vector dx(d), dh(h.cols());
    for (std::size_t p = 0; p < pairs; ++p) {
        for (std::size_t j = 0; j < d; ++j) dx[j] = x(2 * p, j) - x(2 * p + 1, j);
        for (std::size_t j = 0; j < h.cols(); ++j) dh[j] = h(2 * p, j) - h(2 * p + 1, j);
        const double ratio = norm2(dh) / norm2(dx);
        out.min_ratio = std::min(out.min_ratio, ratio);
        out.max_ratio = std::max(out.max_ratio, ratio);
    }
    return out;
}

FarFieldProbe far_field_probe(std::size_t num_classes, std::span<const double> distances, Rng& rng) {
    if (num_classes < 2) throw InvalidRange("far_field_probe: need at least 2 classes");
    constexpr std::size_t kPerClass = 20;
    constexpr std::size_t kDirections = 16;
    const double k = static_cast<double>(num_classes);

    // Class clusters on the unit circle.
    Matrix x(kPerClass * num_classes, 2);
    std::vector<Vector> targets(num_classes, Vector(x.rows()));
    for (std::size_t c = 0; c < num_classes; ++c) {
        const double angle = 2.0 * std::numbers::pi * static_cast<double>(c) / k;
        for (std::size_t i = 0; i < kPerClass; ++i) {
            const std::size_t r = c * kPerClass + i;
            x(r, 0) = std::cos(angle) + 0.3 * rng.normal();
            x(r, 1) = std::sin(angle) + 0.3 * rng.normal();
            for (std::size_t t = 0; t < num_classes; ++t) targets[t][r] = (t == c ? 3.0 : 0.0) - 3.0 / k;
        }
    }
    std::vector<ExactGp> gps;
    for (std::size_t t = 0; t < num_classes; ++t) gps.push_back(fit_exact_gp(x, targets[t], 1.0, 1.0, 0.1));

    Matrix probes(kDirections, 2);
    FarFieldProbe out;
    for (double dist : distances) {
        for (std::size_t i = 0; i < kDirections; ++i) {
            const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
            probes(i, 0) = dist * std::cos(a);
            probes(i, 1) = dist * std::sin(a);
        }
        Matrix mean(kDirections, num_classes);
        Vector variance;
        for (std::size_t t = 0; t < num_classes; ++t) {
            const auto post = exact_gp_posterior(gps[t], probes);
            for (std::size_t i = 0; i < kDirections; ++i) mean(i, t) = post.mean[i];
            variance = post.variance;  // identical kernel, identical variance
        }
        const Matrix p = mean_field(mean, variance, std::numbers::pi / 8.0);
        double dev = 0.0, var_sum = 0.0;
        for (std::size_t i = 0; i < kDirections; ++i) {
            for (std::size_t t = 0; t < num_classes; ++t) dev = std::max(dev, std::abs(p(i, t) - 1.0 / k));
            var_sum += variance[i];
        }
        out.distances.push_back(dist);
        out.max_deviation.push_back(dev);
        out.mean_variance.push_back(var_sum / static_cast<double>(kDirections));
    }
    return out;
}

json to_json(const Verdict& v) {
    return json{{"claim", v.claim}, {"parameters", v.parameters}, {"observed", v.observed}, {"bound", v.bound},
                {"pass", v.pass}};
}

std::vector<std::string> theory_claim_groups() {
    return {"bregman", "minimax", "mixture", "exact_gp", "bilipschitz", "far_field"};
}

namespace {

double max_abs_to_uniform(const Vector& p) {
    double d = 0.0;
    for (double v : p) d = std::max(d, std::abs(v - 1.0 / static_cast<double>(p.size())));
    return d;
}

void bregman_claims(std::vector<Verdict>& out) {
    for (auto kind : {ScoreKind::log, ScoreKind::brier}) {
        const BregmanScore score{kind, 3};
        const double margin = entropy_concavity_margin(score);
        out.push_back({"bregman.entropy_concavity", {{"score", to_string(kind)}, {"points", 1000}},
                       {{"max_second_difference", margin}}, {{"max_second_difference_below", 0.0}}, margin < 0.0});

        // For a few truths, the best forecast on a 0.02 grid is the grid
        // point closest to the truth.
        const auto grid = simplex_grid(3, 0.02);
        double worst_gap = 0.0;
        for (const Vector& truth : {Vector{0.6, 0.3, 0.1}, Vector{0.2, 0.2, 0.6}, Vector{0.34, 0.32, 0.34}}) {
            const Vector* best = nullptr;
            double best_s = std::numeric_limits<double>::infinity();
            for (const auto& p : grid) {
                const double s = bregman_score(score, p, truth);
                if (s < best_s) {
                    best_s = s;
                    best = &p;
                }
            }
            for (std::size_t c = 0; c < 3; ++c) worst_gap = std::max(worst_gap, std::abs((*best)[c] - truth[c]));
        }
        out.push_back({"bregman.strict_propriety", {{"score", to_string(kind)}, {"classes", 3}, {"grid_step", 0.02}},
                       {{"max_abs_argmin_minus_truth", worst_gap}}, {{"max_abs_argmin_minus_truth", 0.02}},
                       worst_gap <= 0.02});
    }
}

void minimax_claims(std::vector<Verdict>& out) {
    for (auto kind : {ScoreKind::log, ScoreKind::brier}) {
        for (std::size_t k : {2u, 3u}) {
            for (double step : {0.05, 0.02, 0.01}) {
                const auto r = minimax_verify(BregmanScore{kind, k}, step);
                const double d = max_abs_to_uniform(r.argmin);
                out.push_back({"minimax.uniform",
                               {{"score", to_string(kind)}, {"classes", k}, {"grid_step", step}},
                               {{"argmin", r.argmin}, {"minimax_risk", r.risk}, {"tied_minimizers", r.minimizers.size()},
                                {"max_abs_to_uniform", d}},
                               {{"max_abs_to_uniform", step}}, d <= step});
            }
        }
        // Label symmetry for K = 2.
        const BregmanScore score{kind, 2};
        const auto grid = simplex_grid(2, 0.01);
        double asym = 0.0;
        for (double a : {0.1, 0.25, 0.4, 0.45}) {
            const Vector p{a, 1.0 - a}, q{1.0 - a, a};
            asym = std::max(asym, std::abs(worst_case_risk(score, p, grid) - worst_case_risk(score, q, grid)));
        }
        out.push_back({"minimax.label_symmetry", {{"score", to_string(kind)}, {"classes", 2}},
                       {{"max_abs_risk_difference", asym}}, {{"max_abs_risk_difference", 1e-12}}, asym <= 1e-12});
    }
}

void mixture_claims(std::vector<Verdict>& out) {
    for (auto kind : {ScoreKind::log, ScoreKind::brier}) {
        struct Case {
            Vector truth;
            double step;
        };
        for (const Case& c : {Case{{0.8, 0.2}, 0.01}, Case{{0.7, 0.2, 0.1}, 0.05}}) {
            const BregmanScore score{kind, c.truth.size()};
            const auto r = mixture_optimality(score, c.truth, 0.6, c.step);
            out.push_back({"mixture.optimal",
                           {{"score", to_string(kind)}, {"classes", c.truth.size()}, {"ind_truth", c.truth},
                            {"ind_mass", 0.6}, {"grid_step", c.step}},
                           {{"mixture_risk", r.mixture_risk}, {"alternatives", r.alternatives},
                            {"best_alternative_ood", r.best_alternative_ood}},
                           {{"best_alternative_risk", r.best_alternative}}, r.pass});
        }
    }
}

void exact_gp_claims(std::vector<Verdict>& out, Rng rng) {
    const LabeledSet data = bimodal_regression_1d(rng, 100);
    const double amplitude = 1.0, length_scale = 1.0;
    const auto gp = fit_exact_gp(data.inputs, data.labels, amplitude, length_scale, 0.01);
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    for (std::size_t i = 0; i < data.size(); ++i) {
        xmin = std::min(xmin, data.inputs(i, 0));
        xmax = std::max(xmax, data.inputs(i, 0));
    }
    Matrix far(40, 1);
    for (std::size_t i = 0; i < 20; ++i) {
        far(i, 0) = xmax + length_scale * (10.0 + static_cast<double>(i));
        far(20 + i, 0) = xmin - length_scale * (10.0 + static_cast<double>(i));
    }
    const auto post = exact_gp_posterior(gp, far);
    double max_mean = 0.0, min_var = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < far.rows(); ++i) {
        max_mean = std::max(max_mean, std::abs(post.mean[i]));
        min_var = std::min(min_var, post.variance[i]);
    }
    out.push_back({"exact_gp.far_field", {{"amplitude", amplitude}, {"length_scale", length_scale}, {"n", data.size()}},
                   {{"max_abs_mean", max_mean}, {"min_variance", min_var}},
                   {{"max_abs_mean", 1e-3}, {"min_variance", 0.95 * amplitude}},
                   max_mean <= 1e-3 && min_var >= 0.95 * amplitude});

    // Variance along rays leaving the hull in both directions.
    Matrix ray(200, 1);
    for (std::size_t i = 0; i < 100; ++i) {
        ray(i, 0) = xmax + 0.05 * static_cast<double>(i);
        ray(100 + i, 0) = xmin - 0.05 * static_cast<double>(i);
    }
    const auto rp = exact_gp_posterior(gp, ray);
    double worst_drop = 0.0, max_var = 0.0;
    for (std::size_t side = 0; side < 2; ++side)
        for (std::size_t i = 1; i < 100; ++i)
            worst_drop = std::max(worst_drop, rp.variance[side * 100 + i - 1] - rp.variance[side * 100 + i]);
    for (double v : rp.variance) max_var = std::max(max_var, v);
    const bool pass = worst_drop <= 1e-12 && max_var <= amplitude * (1.0 + 1e-9);
    out.push_back({"exact_gp.monotone_variance", {{"ray_step", 0.05}, {"points_per_ray", 100}},
                   {{"largest_decrease", worst_drop}, {"max_variance", max_var}},
                   {{"largest_decrease", 1e-12}, {"max_variance", amplitude * (1.0 + 1e-9)}}, pass});
}

/// Square-block network whose residual branches all have spectral norm alpha.
ResidualNetwork scaled_network(std::size_t width, std::size_t blocks, double alpha, Activation act,
                               std::uint64_t seed) {
    NetworkShape shape;
    shape.input_dim = width;
    shape.hidden_dim = width;
    shape.num_blocks = blocks;
    shape.input_projection = false;
    shape.activation = act;
    ResidualNetwork net(shape, seed);
    Rng rng(seed ^ 0x5eedULL);
    for (auto& b : net.blocks()) {
        b.weight *= alpha / spectral_norm_estimate(b.weight, rng);
        for (double& v : b.bias) v = 0.1 * rng.normal();
    }
    return net;
}

void bilipschitz_claims(std::vector<Verdict>& out, Rng rng) {
    for (double alpha : {0.3, 0.5, 0.9}) {
        for (std::size_t blocks : {2u, 4u, 6u}) {
            const auto net = scaled_network(8, blocks, alpha, Activation::identity, rng.next_u64());
            Rng probe_rng = rng.split(blocks * 10 + static_cast<std::uint64_t>(alpha * 10));
            const auto r = bilipschitz_probe(net, 1000, probe_rng);
            out.push_back({"bilipschitz.linear",
                           {{"alpha", alpha}, {"blocks", blocks}, {"pairs", r.pairs}},
                           {{"min_ratio", r.min_ratio}, {"max_ratio", r.max_ratio}, {"measured_alpha", r.alpha}},
                           {{"lower", r.lower_bound}, {"upper", r.upper_bound}},
                           r.min_ratio >= r.lower_bound && r.max_ratio <= r.upper_bound});
        }
    }
    for (std::size_t blocks : {2u, 4u, 6u}) {
        const auto net = scaled_network(8, blocks, 0.9, Activation::relu, rng.next_u64());
        Rng probe_rng = rng.split(1000 + blocks);
        const auto r = bilipschitz_probe(net, 1000, probe_rng);
        out.push_back({"bilipschitz.relu_upper", {{"alpha", 0.9}, {"blocks", blocks}, {"pairs", r.pairs}},
                       {{"min_ratio", r.min_ratio}, {"max_ratio", r.max_ratio}, {"measured_alpha", r.alpha}},
                       {{"upper", r.upper_bound}}, r.max_ratio <= r.upper_bound});
    }
}

void far_field_claims(std::vector<Verdict>& out, Rng rng) {
    const Vector distances{4.0, 8.0, 16.0, 32.0};
    for (std::size_t k : {2u, 3u}) {
        const auto r = far_field_probe(k, distances, rng);
        bool monotone = true;
        for (std::size_t i = 1; i < r.max_deviation.size(); ++i)
            monotone = monotone && r.max_deviation[i] <= r.max_deviation[i - 1] + 1e-12;
        const double last = r.max_deviation.back();
        out.push_back({"far_field.uniform_limit", {{"classes", k}, {"distances", distances}},
                       {{"max_abs_to_uniform", r.max_deviation}, {"mean_variance", r.mean_variance}},
                       {{"final_max_abs_to_uniform", 1e-3}, {"non_increasing", true}}, monotone && last <= 1e-3});
    }
}

}  // namespace

std::vector<Verdict> run_theory_suite(const std::vector<std::string>& selector, std::uint64_t seed) {
    const auto groups = theory_claim_groups();
    for (const auto& s : selector)
        if (std::find(groups.begin(), groups.end(), s) == groups.end())
            throw ConfigError("unknown theory claim group: " + s);
    auto wanted = [&](const std::string& g) {
        return selector.empty() || std::find(selector.begin(), selector.end(), g) != selector.end();
    };
    const Rng root(seed);
    std::vector<Verdict> out;
    if (wanted("bregman")) bregman_claims(out);
    if (wanted("minimax")) minimax_claims(out);
    if (wanted("mixture")) mixture_claims(out);
    if (wanted("exact_gp")) exact_gp_claims(out, root.split(1));
    if (wanted("bilipschitz")) bilipschitz_claims(out, root.split(2));
    if (wanted("far_field")) far_field_claims(out, root.split(3));
    return out;
}

}  // namespace sngp
