#include "sngp/datasets.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace sngp {

std::string to_string(Domain d) { return d == Domain::IND ? "IND" : "OOD"; }

Domain domain_from_string(const std::string& s) {
    if (s == "IND") return Domain::IND;
    if (s == "OOD") return Domain::OOD;
    throw InvalidRange("unknown domain tag '" + s + "'");
}

LabeledSet two_moons(Rng& rng, std::size_t n_per_class, double noise_std, const ToyGeometry& geom) {
    if (n_per_class == 0) throw InvalidRange("two_moons: n_per_class must be >= 1");
    if (noise_std < 0.0) throw InvalidRange("two_moons: noise_std must be >= 0");
    const double r = geom.moon_radius;
    LabeledSet set{Matrix(2 * n_per_class, 2), Vector(2 * n_per_class), Domain::IND};
    for (std::size_t i = 0; i < n_per_class; ++i) {
        const double t = rng.uniform(0.0, std::numbers::pi);
        set.inputs(i, 0) = r * std::cos(t);
        set.inputs(i, 1) = r * std::sin(t);
        set.labels[i] = 0.0;
    }
    // Lower arc: the upper arc reflected through its center, then shifted so
    // the two moons interleave.
    const double cx = geom.moon_offset_x;
    const double cy = r + geom.moon_offset_y;
    for (std::size_t i = 0; i < n_per_class; ++i) {
        const double t = rng.uniform(0.0, std::numbers::pi);
        const std::size_t k = n_per_class + i;
        set.inputs(k, 0) = cx - r * std::cos(t);
        set.inputs(k, 1) = cy - r * std::sin(t);
        set.labels[k] = 1.0;
    }
    if (noise_std > 0.0)
        for (double& x : set.inputs.data()) x += noise_std * rng.normal();
    return set;
}

LabeledSet two_ovals(Rng& rng, std::size_t n_per_class, const ToyGeometry& geom) {
    if (n_per_class == 0) throw InvalidRange("two_ovals: n_per_class must be >= 1");
    LabeledSet set{Matrix(2 * n_per_class, 2), Vector(2 * n_per_class), Domain::IND};
    const double half = 0.5 * geom.oval_separation;
    for (std::size_t c = 0; c < 2; ++c) {
        const double cy = c == 0 ? half : -half;
        for (std::size_t i = 0; i < n_per_class; ++i) {
            const std::size_t k = c * n_per_class + i;
            set.inputs(k, 0) = geom.oval_major_std * rng.normal();
            set.inputs(k, 1) = cy + geom.oval_minor_std * rng.normal();
            set.labels[k] = static_cast<double>(c);
        }
    }
    return set;
}

LabeledSet ood_cluster(Rng& rng, std::size_t n, std::span<const double> center, double std) {
    if (n == 0) throw InvalidRange("ood_cluster: n must be >= 1");
    if (std < 0.0) throw InvalidRange("ood_cluster: std must be >= 0");
    LabeledSet set{Matrix(n, center.size()), Vector(n, kNoLabel), Domain::OOD};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < center.size(); ++j)
            set.inputs(i, j) = center[j] + (std > 0.0 ? std * rng.normal() : 0.0);
    return set;
}

double bimodal_target(double x) { return std::sin(x) * x / 4.0; }

LabeledSet bimodal_regression_1d(Rng& rng, std::size_t n, const BimodalSpec& spec) {
    if (n < 2) throw InvalidRange("bimodal_regression_1d: n must be >= 2");
    LabeledSet set{Matrix(n, 1), Vector(n), Domain::IND};
    for (std::size_t i = 0; i < n; ++i) {
        const double center = (i % 2 == 0) ? -spec.mode_center : spec.mode_center;
        double z;
        do {
            z = rng.normal();
        } while (std::abs(z) > spec.truncation);
        const double x = center + spec.mode_std * z;
        set.inputs(i, 0) = x;
        set.labels[i] = bimodal_target(x) + spec.noise_std * rng.normal();
    }
    return set;
}

namespace {

LabeledSet select_rows(const LabeledSet& set, const std::vector<std::size_t>& idx, std::size_t begin,
                       std::size_t end) {
    LabeledSet out{Matrix(end - begin, set.dim()), Vector(end - begin), set.domain};
    for (std::size_t k = begin; k < end; ++k) {
        const auto src = set.inputs.row(idx[k]);
        std::copy(src.begin(), src.end(), out.inputs.row(k - begin).begin());
        out.labels[k - begin] = set.labels[idx[k]];
    }
    return out;
}

}  // namespace

Split split(const LabeledSet& set, double held_out_fraction, Rng& rng) {
    if (!(held_out_fraction > 0.0 && held_out_fraction < 1.0))
        throw InvalidRange("split: fraction must be in (0, 1)");
    const auto perm = permutation(rng, set.size());
    const auto n_held = static_cast<std::size_t>(std::round(held_out_fraction * set.size()));
    const std::size_t n_train = set.size() - n_held;
    return {select_rows(set, perm, 0, n_train), select_rows(set, perm, n_train, set.size())};
}

LabeledSet concat(const LabeledSet& a, const LabeledSet& b) {
    if (a.dim() != b.dim()) throw ShapeMismatch("concat: input dimensions differ");
    std::vector<double> data = a.inputs.data();
    data.insert(data.end(), b.inputs.data().begin(), b.inputs.data().end());
    Vector labels = a.labels;
    labels.insert(labels.end(), b.labels.begin(), b.labels.end());
    return {Matrix(a.size() + b.size(), a.dim(), std::move(data)), std::move(labels), a.domain};
}

NormStats fit_norm(const LabeledSet& set) {
    const std::size_t n = set.size(), d = set.dim();
    if (n == 0) throw EmptySet("fit_norm: empty set");
    NormStats s{Vector(d, 0.0), Vector(d, 0.0)};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) s.mean[j] += set.inputs(i, j);
    for (double& m : s.mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const double c = set.inputs(i, j) - s.mean[j];
            s.std[j] += c * c;
        }
    for (std::size_t j = 0; j < d; ++j) {
        s.std[j] = std::sqrt(s.std[j] / static_cast<double>(n));
        if (s.std[j] < kStdFloor)
            throw DegenerateFeature("fit_norm: feature " + std::to_string(j) + " is constant");
    }
    return s;
}

Matrix apply_norm(const Matrix& inputs, const NormStats& stats) {
    if (inputs.cols() != stats.mean.size()) throw ShapeMismatch("apply_norm: dimension mismatch");
    Matrix out = inputs;
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j)
            out(i, j) = (out(i, j) - stats.mean[j]) / stats.std[j];
    return out;
}

LabeledSet apply_norm(const LabeledSet& set, const NormStats& stats) {
    return {apply_norm(set.inputs, stats), set.labels, set.domain};
}

Matrix invert_norm(const Matrix& inputs, const NormStats& stats) {
    if (inputs.cols() != stats.mean.size()) throw ShapeMismatch("invert_norm: dimension mismatch");
    Matrix out = inputs;
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) = out(i, j) * stats.std[j] + stats.mean[j];
    return out;
}

void write_csv(std::ostream& out, const LabeledSet& set) {
    for (std::size_t j = 0; j < set.dim(); ++j) out << 'x' << j << ',';
    out << "label,domain\n";
    out << std::setprecision(17);
    const std::string tag = to_string(set.domain);
    for (std::size_t i = 0; i < set.size(); ++i) {
        for (std::size_t j = 0; j < set.dim(); ++j) out << set.inputs(i, j) << ',';
        out << set.labels[i] << ',' << tag << '\n';
    }
}

LabeledSet read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw EmptySet("read_csv: missing header");
    std::size_t d = 0;
    {
        std::istringstream header(line);
        std::string field;
        while (std::getline(header, field, ',')) {
            if (!field.empty() && field.back() == '\r') field.pop_back();
            if (field == "label") break;
            if (field != "x" + std::to_string(d)) throw InvalidRange("read_csv: unexpected column '" + field + "'");
            ++d;
        }
    }
    std::vector<double> data;
    Vector labels;
    Domain domain = Domain::IND;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string field;
        for (std::size_t j = 0; j < d; ++j) {
            if (!std::getline(row, field, ',')) throw ShapeMismatch("read_csv: short row");
            data.push_back(std::stod(field));
        }
        if (!std::getline(row, field, ',')) throw ShapeMismatch("read_csv: missing label");
        labels.push_back(std::stod(field));
        if (!std::getline(row, field, ',')) throw ShapeMismatch("read_csv: missing domain");
        if (!field.empty() && field.back() == '\r') field.pop_back();
        const Domain tag = domain_from_string(field);
        if (first) domain = tag;
        else if (tag != domain) throw InvalidRange("read_csv: mixed domain tags");
        first = false;
    }
    return {Matrix(labels.size(), d, std::move(data)), std::move(labels), domain};
}

void save_csv(const std::string& path, const LabeledSet& set) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    write_csv(out, set);
}

LabeledSet load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    return read_csv(in);
}

}  // namespace sngp
