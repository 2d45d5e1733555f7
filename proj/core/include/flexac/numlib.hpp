#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace flexac {

/// A dense hidden-state or direction vector. Always non-empty and finite.
class FeatureVector {
public:
    /// Throws EmptyInput for an empty vector, NonFinite for NaN/Inf entries.
    explicit FeatureVector(std::vector<float> values);
    FeatureVector(std::initializer_list<float> values);

    std::size_t dim() const noexcept { return values_.size(); }
    std::span<const float> values() const noexcept { return values_; }
    const float* data() const noexcept { return values_.data(); }
    float operator[](std::size_t i) const noexcept { return values_[i]; }

    operator std::span<const float>() const noexcept { return values_; }

    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;

private:
    std::vector<float> values_;
};

/// Row-major dense matrix of 32-bit floats.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols);
    /// Throws DimMismatch when rows*cols != values.size().
    Matrix(std::size_t rows, std::size_t cols, std::vector<float> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    float& at(std::size_t r, std::size_t c) noexcept { return values_[r * cols_ + c]; }
    float at(std::size_t r, std::size_t c) const noexcept { return values_[r * cols_ + c]; }

    std::span<float> row(std::size_t r) noexcept { return {values_.data() + r * cols_, cols_}; }
    std::span<const float> row(std::size_t r) const noexcept {
        return {values_.data() + r * cols_, cols_};
    }

    std::span<float> values() noexcept { return values_; }
    std::span<const float> values() const noexcept { return values_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<float> values_;
};

/// Byte-level equality; distinguishes +0/-0 and is what "bitwise" means throughout.
bool bitwise_equal(std::span<const float> a, std::span<const float> b) noexcept;

bool all_finite(std::span<const float> v) noexcept;

double dot(std::span<const float> a, std::span<const float> b);
double l2_norm(std::span<const float> v) noexcept;

/// 1 - cos(a, b), in [0, 2]. Exactly 0 for bitwise-identical inputs.
/// Throws DimMismatch, or DegenerateVector when either input has zero norm.
double cosine_distance(std::span<const float> a, std::span<const float> b);

/// Cosine similarity with the same error contract as cosine_distance.
double cosine_similarity(std::span<const float> a, std::span<const float> b);

double euclidean_distance(std::span<const float> a, std::span<const float> b);

double sigmoid(double x) noexcept;

/// Elementwise mean, summed in list order in double, rounded once to float.
FeatureVector mean_vector(std::span<const FeatureVector> vs);
FeatureVector mean_vector(std::span<const std::span<const float>> vs);

struct PcaResult {
    Matrix components;                      // k x d, unit rows
    Matrix coords;                          // n x k
    std::vector<double> explained_variance; // k eigenvalues, non-increasing
};

/// Principal components of the rows of `data` (n samples x d features).
///
/// Power iteration with deflation on the sample covariance (divided by n-1).
/// Each component starts from [1,...,1]/sqrt(d); if that start has no energy
/// left in the deflated covariance, the standard basis vectors are tried in
/// order. Iteration stops after 1000 steps or when successive estimates are
/// within 1e-9 cosine distance. Each component is sign-fixed so its first
/// non-negligible entry is positive.
///
/// Throws InvalidArgument unless n >= 2 and 1 <= k <= min(n, d), and
/// RankDeficient when a requested eigenvalue is below 1e-12 of the first.
PcaResult pca_project(const Matrix& data, std::size_t k);

}  // namespace flexac
