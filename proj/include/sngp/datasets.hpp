#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>

#include "sngp/linalg.hpp"

namespace sngp {

enum class Domain { IND, OOD };

std::string to_string(Domain d);
Domain domain_from_string(const std::string& s);

/// Label stored for points that carry no class supervision (OOD sets).
inline constexpr double kNoLabel = -1.0;

struct LabeledSet {
    Matrix inputs;  // n × d
    Vector labels;  // class index, regression target, or kNoLabel
    Domain domain = Domain::IND;

    std::size_t size() const { return inputs.rows(); }
    std::size_t dim() const { return inputs.cols(); }
};

/// Fixed geometry of the synthetic 2-D benchmarks.
struct ToyGeometry {
    double moon_radius = 1.0;
    double moon_offset_x = 1.0;
    double moon_offset_y = -0.5;
    double oval_major_std = 1.5;
    double oval_minor_std = 0.15;
    double oval_separation = 3.0;
};

/// Two interleaved half-circles; class 0 is the upper arc, class 1 the lower
/// arc reflected and shifted by the moon offset. Gaussian noise is isotropic.
LabeledSet two_moons(Rng& rng, std::size_t n_per_class, double noise_std,
                     const ToyGeometry& geom = {});

/// Two flat Gaussians elongated along x and separated along y.
LabeledSet two_ovals(Rng& rng, std::size_t n_per_class, const ToyGeometry& geom = {});

/// Isotropic Gaussian cluster tagged OOD with no class labels.
LabeledSet ood_cluster(Rng& rng, std::size_t n, std::span<const double> center, double std);

/// Parameters of the bimodal 1-D regression set.
struct BimodalSpec {
    double mode_center = 3.5;   // modes at ±mode_center
    double mode_std = 0.7;
    double truncation = 2.5;    // in units of mode_std
    double noise_std = 0.05;
};

/// Inputs from a truncated two-component Gaussian mixture, targets
/// sin(x)·x/4 plus Gaussian noise. The interval between the truncated modes
/// holds no inputs.
LabeledSet bimodal_regression_1d(Rng& rng, std::size_t n, const BimodalSpec& spec = {});

/// Noise-free regression target used by bimodal_regression_1d.
double bimodal_target(double x);

/// Fraction of the data used for the held-out split is taken from the end of
/// a seeded permutation.
struct Split {
    LabeledSet train;
    LabeledSet held_out;
};
Split split(const LabeledSet& set, double held_out_fraction, Rng& rng);

LabeledSet concat(const LabeledSet& a, const LabeledSet& b);

struct NormStats {
    Vector mean;
    Vector std;
};

inline constexpr double kStdFloor = 1e-8;

/// Per-feature mean and (population) standard deviation. Throws
/// DegenerateFeature if any standard deviation is below kStdFloor.
NormStats fit_norm(const LabeledSet& set);
LabeledSet apply_norm(const LabeledSet& set, const NormStats& stats);
Matrix apply_norm(const Matrix& inputs, const NormStats& stats);
Matrix invert_norm(const Matrix& inputs, const NormStats& stats);

/// CSV with header `x0,...,x{d-1},label,domain`.
void write_csv(std::ostream& out, const LabeledSet& set);
LabeledSet read_csv(std::istream& in);
void save_csv(const std::string& path, const LabeledSet& set);
LabeledSet load_csv(const std::string& path);

}  // namespace sngp
