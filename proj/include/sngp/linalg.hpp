#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

#include "sngp/errors.hpp"

namespace sngp {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);
    static Matrix diagonal(std::span<const double> diag);
    /// Single-row matrix holding a copy of `v`.
    static Matrix row_vector(std::span<const double> v);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    Matrix transpose() const;
    Vector column(std::size_t j) const;

    Matrix& operator+=(const Matrix& other);
    Matrix& operator-=(const Matrix& other);
    Matrix& operator*=(double s);

    bool operator==(const Matrix& other) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);

/// a · b
Matrix matmul(const Matrix& a, const Matrix& b);
/// aᵀ · b
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a · bᵀ
Matrix matmul_nt(const Matrix& a, const Matrix& b);
/// a · x
Vector matvec(const Matrix& a, std::span<const double> x);

/// Adds Σ_i w_i · a_iᵀ a_i (rows a_i of `a`) to the square matrix `acc`.
/// Only the lower triangle is accumulated and then mirrored, so the result is
/// exactly symmetric.
void add_weighted_gram(Matrix& acc, const Matrix& a, std::span<const double> weights);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double max_abs(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);
bool all_finite(const Matrix& a);
bool all_finite(std::span<const double> v);

/// Lower-triangular Cholesky factor L with m = L Lᵀ.
/// Throws NotPositiveDefinite on a non-positive pivot.
Matrix cholesky(const Matrix& m);

/// Solves (L Lᵀ) X = B given the Cholesky factor L.
Matrix cholesky_solve(const Matrix& chol, const Matrix& b);

/// Inverse of a symmetric positive definite matrix via Cholesky. The result
/// is symmetrized.
Matrix spd_inverse(const Matrix& m);

/// Counter-based, splittable pseudo random generator (SplitMix64 mixing of a
/// keyed counter). Streams depend only on the seed; normal and uniform draws
/// are derived here rather than through <random> distributions so sequences
/// do not vary between standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : key_(seed) {}

    std::uint64_t seed() const { return key_; }
    std::uint64_t counter() const { return counter_; }

    std::uint64_t next_u64();
    /// Uniform on [0, 1).
    double uniform();
    double uniform(double lo, double hi);
    /// Standard normal via Box–Muller.
    double normal();
    /// Uniform integer on [0, n).
    std::uint64_t below(std::uint64_t n);

    /// Independent child stream, a pure function of (seed, stream_id).
    Rng split(std::uint64_t stream_id) const;

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

std::uint64_t mix64(std::uint64_t z);

/// rows × cols matrix of i.i.d. N(0, 1) entries.
Matrix sample_gaussian(Rng& rng, std::size_t rows, std::size_t cols);

/// `len` i.i.d. Uniform[lo, hi) entries. Throws InvalidRange if lo >= hi.
Vector sample_uniform(Rng& rng, std::size_t len, double lo, double hi);

/// Fisher–Yates permutation of 0..n-1.
std::vector<std::size_t> permutation(Rng& rng, std::size_t n);

}  // namespace sngp
