#include "flexac/numlib.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "flexac/errors.hpp"

namespace flexac {

namespace {

void require_same_dim(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) {
        fail(ErrorCode::DimMismatch,
             "dimensions " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
    }
}

}  // namespace

FeatureVector::FeatureVector(std::vector<float> values) : values_(std::move(values)) {
    if (values_.empty()) {
        fail(ErrorCode::EmptyInput, "feature vector must have dim >= 1");
    }
    if (!all_finite(values_)) {
        fail(ErrorCode::NonFinite, "feature vector contains NaN or Inf");
    }
}

FeatureVector::FeatureVector(std::initializer_list<float> values)
    : FeatureVector(std::vector<float>(values)) {}

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), values_(rows * cols, 0.0f) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<float> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (rows_ * cols_ != values_.size()) {
        fail(ErrorCode::DimMismatch, "matrix " + std::to_string(rows_) + "x" +
                                         std::to_string(cols_) + " given " +
                                         std::to_string(values_.size()) + " values");
    }
}

bool bitwise_equal(std::span<const float> a, std::span<const float> b) noexcept {
    return a.size() == b.size() &&
           (a.empty() || std::memcmp(a.data(), b.data(), a.size_bytes()) == 0);
}

bool all_finite(std::span<const float> v) noexcept {
    return std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); });
}

double dot(std::span<const float> a, std::span<const float> b) {
    require_same_dim(a, b);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return acc;
}

double l2_norm(std::span<const float> v) noexcept {
    double acc = 0.0;
    for (float x : v) {
        acc += static_cast<double>(x) * static_cast<double>(x);
    }
    return std::sqrt(acc);
}

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
    require_same_dim(a, b);
    double ab = 0.0;
    double aa = 0.0;
    double bb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = a[i];
        const double y = b[i];
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if (aa == 0.0 || bb == 0.0) {
        fail(ErrorCode::DegenerateVector, "cosine of a zero-norm vector");
    }
    // sqrt(aa * bb) rather than sqrt(aa) * sqrt(bb): for a == b this is exactly aa.
    return std::clamp(ab / std::sqrt(aa * bb), -1.0, 1.0);
}

double cosine_distance(std::span<const float> a, std::span<const float> b) {
    require_same_dim(a, b);
    if (bitwise_equal(a, b)) {
        if (l2_norm(a) == 0.0) {
            fail(ErrorCode::DegenerateVector, "cosine of a zero-norm vector");
        }
        return 0.0;
    }
    return std::clamp(1.0 - cosine_similarity(a, b), 0.0, 2.0);
}

double euclidean_distance(std::span<const float> a, std::span<const float> b) {
    require_same_dim(a, b);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += diff * diff;
    }
    return std::sqrt(acc);
}

double sigmoid(double x) noexcept {
    return 1.0 / (1.0 + std::exp(-x));
}

FeatureVector mean_vector(std::span<const std::span<const float>> vs) {
    if (vs.empty()) {
        fail(ErrorCode::EmptyInput, "mean of an empty list");
    }
    const std::size_t dim = vs.front().size();
    std::vector<double> acc(dim, 0.0);
    for (const auto& v : vs) {
        require_same_dim(vs.front(), v);
        for (std::size_t i = 0; i < dim; ++i) {
            acc[i] += v[i];
        }
    }
    std::vector<float> out(dim);
    const double n = static_cast<double>(vs.size());
    for (std::size_t i = 0; i < dim; ++i) {
        out[i] = static_cast<float>(acc[i] / n);
    }
    return FeatureVector(std::move(out));
}

FeatureVector mean_vector(std::span<const FeatureVector> vs) {
    std::vector<std::span<const float>> views(vs.begin(), vs.end());
    return mean_vector(std::span<const std::span<const float>>(views));
}

namespace {

using DMatrix = std::vector<double>;  // square, row-major

void mat_vec(const DMatrix& m, std::size_t d, const std::vector<double>& x, std::vector<double>& y) {
    for (std::size_t r = 0; r < d; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            acc += m[r * d + c] * x[c];
        }
        y[r] = acc;
    }
}

double norm_d(const std::vector<double>& x) {
    double acc = 0.0;
    for (double v : x) {
        acc += v * v;
    }
    return std::sqrt(acc);
}

void orthogonalize(std::vector<double>& x, const std::vector<std::vector<double>>& basis) {
    for (const auto& b : basis) {
        double proj = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            proj += x[i] * b[i];
        }
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] -= proj * b[i];
        }
    }
}

}  // namespace

PcaResult pca_project(const Matrix& data, std::size_t k) {
    const std::size_t n = data.rows();
    const std::size_t d = data.cols();
    if (n < 2) {
        fail(ErrorCode::InvalidArgument, "PCA needs at least 2 samples");
    }
    if (k == 0 || k > std::min(n, d)) {
        fail(ErrorCode::InvalidArgument, "PCA k=" + std::to_string(k) + " outside [1, min(n, d)=" +
                                             std::to_string(std::min(n, d)) + "]");
    }

    std::vector<double> mean(d, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c) {
            mean[c] += data.at(r, c);
        }
    }
    for (double& m : mean) {
        m /= static_cast<double>(n);
    }

    std::vector<double> centered(n * d);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c) {
            centered[r * d + c] = data.at(r, c) - mean[c];
        }
    }

    DMatrix cov(d * d, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        const double* row = &centered[r * d];
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = i; j < d; ++j) {
                cov[i * d + j] += row[i] * row[j];
            }
        }
    }
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) {
            cov[i * d + j] /= static_cast<double>(n - 1);
            cov[j * d + i] = cov[i * d + j];
        }
    }

    double trace = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        trace += cov[i * d + i];
    }

    std::vector<std::vector<double>> found;
    std::vector<double> eigenvalues;
    std::vector<double> x(d);
    std::vector<double> y(d);

    for (std::size_t comp = 0; comp < k; ++comp) {
        // Start vectors: all-ones, then e_0, e_1, ... until one survives deflation.
        bool started = false;
        for (std::size_t attempt = 0; attempt <= d && !started; ++attempt) {
            if (attempt == 0) {
                std::fill(x.begin(), x.end(), 1.0 / std::sqrt(static_cast<double>(d)));
            } else {
                std::fill(x.begin(), x.end(), 0.0);
                x[attempt - 1] = 1.0;
            }
            orthogonalize(x, found);
            if (norm_d(x) < 1e-6) {
                continue;
            }
            mat_vec(cov, d, x, y);
            orthogonalize(y, found);
            started = norm_d(y) > 1e-14 * std::max(trace, 1e-300);
        }
        const double first = eigenvalues.empty() ? 0.0 : eigenvalues.front();
        if (!started) {
            fail(ErrorCode::RankDeficient,
                 "no variance left for component " + std::to_string(comp + 1));
        }

        double xn = norm_d(x);
        for (double& v : x) v /= xn;
        for (int iter = 0; iter < 1000; ++iter) {
            mat_vec(cov, d, x, y);
            orthogonalize(y, found);
            const double yn = norm_d(y);
            if (yn == 0.0) {
                break;
            }
            double agreement = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                y[i] /= yn;
                agreement += x[i] * y[i];
            }
            x.swap(y);
            if (1.0 - agreement < 1e-9) {
                break;
            }
        }

        mat_vec(cov, d, x, y);
        double lambda = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            lambda += x[i] * y[i];
        }
        const double reference = found.empty() ? lambda : first;
        if (!(lambda > 0.0) || lambda < 1e-12 * reference) {
            fail(ErrorCode::RankDeficient, "component " + std::to_string(comp + 1) +
                                               " eigenvalue " + std::to_string(lambda) +
                                               " below 1e-12 of the first");
        }

        double peak = 0.0;
        for (double v : x) peak = std::max(peak, std::abs(v));
        for (double v : x) {
            if (std::abs(v) > 1e-6 * peak) {
                if (v < 0.0) {
                    for (double& w : x) w = -w;
                }
                break;
            }
        }

        found.push_back(x);
        eigenvalues.push_back(lambda);
    }

    PcaResult result{Matrix(k, d), Matrix(n, k), eigenvalues};
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t i = 0; i < d; ++i) {
            result.components.at(c, i) = static_cast<float>(found[c][i]);
        }
    }
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < k; ++c) {
            double acc = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                acc += centered[r * d + i] * found[c][i];
            }
            result.coords.at(r, c) = static_cast<float>(acc);
        }
    }
    return result;
}

}  // namespace flexac
