#pragma once

// Gaussian memberships of points to cluster centers, the bandwidth
// estimators for both spaces, the Frobenius mismatch between two
// membership matrices and its gradient with respect to the embedding.

#include "cbmap/linalg.hpp"

#include <vector>

namespace cbmap {

enum class Space { high, low };

struct SigmaEstimate {
    double value = 0.0;
    Space space = Space::high;
};

struct MembershipMatrix {
    Matrix values;  // n x k, entries in (0, 1]
    double sigma = 0.0;
};

/// Below this the loss is treated as exactly zero and the gradient vanishes.
inline constexpr double kLossFloor = 1e-12;

/// Median with the even-length convention (mean of the two central values).
/// Takes its argument by value because it reorders it.
inline double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median: empty input");
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
    std::nth_element(values.begin(), mid, values.end());
    const double upper = *mid;
    if (values.size() % 2 == 1) return upper;
    const double lower = *std::max_element(values.begin(), mid);
    return 0.5 * (lower + upper);
}

/// Mean over centers of the per-center median distance to all n points.
inline SigmaEstimate sigma_high(const Matrix& distances) {
    if (distances.rows() < 1 || distances.cols() < 1) {
        throw std::invalid_argument("sigma_high: empty distance matrix");
    }
    std::vector<double> column(static_cast<std::size_t>(distances.rows()));
    double total = 0.0;
    for (Index j = 0; j < distances.cols(); ++j) {
        for (Index i = 0; i < distances.rows(); ++i) column[static_cast<std::size_t>(i)] = distances(i, j);
        total += median(column);
    }
    const double value = total / static_cast<double>(distances.cols());
    if (!(value > 0.0)) {
        throw std::invalid_argument("sigma_high: median point-to-center distance is zero; data collapses onto the centers");
    }
    return {value, Space::high};
}

/// Mean over centers of the per-center median distance to the other k-1 centers.
inline SigmaEstimate sigma_low(const Matrix& centers) {
    const Index k = centers.rows();
    if (k < 2) throw std::invalid_argument("sigma_low: need at least two centers");
    const Matrix dist = euclidean_distance_matrix(centers, centers);
    std::vector<double> others;
    others.reserve(static_cast<std::size_t>(k - 1));
    double total = 0.0;
    for (Index j = 0; j < k; ++j) {
        others.clear();
        for (Index o = 0; o < k; ++o) {
            if (o != j) others.push_back(dist(j, o));
        }
        total += median(others);
    }
    const double value = total / static_cast<double>(k);
    if (!(value > 0.0)) {
        throw std::invalid_argument("sigma_low: centers coincide, bandwidth would be zero");
    }
    return {value, Space::low};
}

/// exp(-d^2 / (2 sigma^2)) entrywise.
inline MembershipMatrix membership_matrix(const Matrix& distances, double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw std::invalid_argument("membership_matrix: sigma must be a positive finite number");
    }
    const double scale = -1.0 / (2.0 * sigma * sigma);
    MembershipMatrix out;
    out.sigma = sigma;
    out.values = (distances.array().square() * scale).exp().matrix();
    return out;
}

inline double frobenius_loss(const MembershipMatrix& low, const MembershipMatrix& high) {
    if (low.values.rows() != high.values.rows() || low.values.cols() != high.values.cols()) {
        throw std::invalid_argument("frobenius_loss: shape mismatch " + shape_string(low.values) + " vs " +
                                    shape_string(high.values));
    }
    double acc = 0.0;
    for (Index i = 0; i < low.values.rows(); ++i) {
        for (Index j = 0; j < low.values.cols(); ++j) {
            const double diff = low.values(i, j) - high.values(i, j);
            acc += diff * diff;
        }
    }
    return std::sqrt(acc);
}

/// dF/dY for F = ||U_L - U_H||_F, where U_L depends on Y through the
/// low-dimensional Gaussian memberships:
///
///   grad(i,l) = sum_j -((uL_ij - uH_ij) / F) * uL_ij * (y_il - c_jl) / sigma_L^2
///
/// Returns zeros when F <= kLossFloor.
inline Matrix loss_gradient(const Matrix& y, const Matrix& centers_low, double sigma_low_value,
                            const MembershipMatrix& low, const MembershipMatrix& high, double loss) {
    const Index n = y.rows();
    const Index m = y.cols();
    const Index k = centers_low.rows();
    if (centers_low.cols() != m || low.values.rows() != n || low.values.cols() != k ||
        high.values.rows() != n || high.values.cols() != k) {
        throw std::invalid_argument("loss_gradient: inconsistent shapes (Y " + shape_string(y) + ", C_L " +
                                    shape_string(centers_low) + ", U_L " + shape_string(low.values) + ", U_H " +
                                    shape_string(high.values) + ")");
    }
    if (!(sigma_low_value > 0.0)) throw std::invalid_argument("loss_gradient: sigma must be positive");

    Matrix grad = Matrix::Zero(n, m);
    if (!(loss > kLossFloor)) return grad;

    const double inv = 1.0 / (loss * sigma_low_value * sigma_low_value);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < k; ++j) {
            const double ul = low.values(i, j);
            const double w = -(ul - high.values(i, j)) * ul * inv;
            for (Index l = 0; l < m; ++l) {
                grad(i, l) += w * (y(i, l) - centers_low(j, l));
            }
        }
    }
    return grad;
}

}  // namespace cbmap
