#pragma once

// Dense matrix primitives shared by the rest of the library: pairwise
// distances, column z-scoring and a small SVD-backed PCA.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>

namespace cbmap {

/// Row-major so that one row is one observation.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

inline std::string shape_string(const Matrix& m) {
    std::ostringstream os;
    os << m.rows() << "x" << m.cols();
    return os.str();
}

/// Throws if the matrix is empty or holds a non-finite entry.
inline void require_data_matrix(const Matrix& m, const char* what) {
    if (m.rows() < 1 || m.cols() < 1) {
        throw std::invalid_argument(std::string(what) + ": matrix is empty (" + shape_string(m) + ")");
    }
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (!std::isfinite(m(i, j))) {
                std::ostringstream os;
                os << what << ": non-finite value at row " << i << ", column " << j;
                throw std::invalid_argument(os.str());
            }
        }
    }
}

/// Entry (i,j) is the Euclidean distance between row i of `a` and row j of `b`.
/// Accumulation runs over columns in order, so results do not depend on
/// how rows are scheduled.
inline Matrix euclidean_distance_matrix(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        throw std::invalid_argument("euclidean_distance_matrix: column mismatch between " + shape_string(a) +
                                    " and " + shape_string(b));
    }
    Matrix out(a.rows(), b.rows());
    const Index d = a.cols();
    for (Index i = 0; i < a.rows(); ++i) {
        const double* ai = a.row(i).data();
        for (Index j = 0; j < b.rows(); ++j) {
            const double* bj = b.row(j).data();
            double acc = 0.0;
            for (Index l = 0; l < d; ++l) {
                const double diff = ai[l] - bj[l];
                acc += diff * diff;
            }
            out(i, j) = std::sqrt(acc);
        }
    }
    return out;
}

/// Column-wise standardization with the population standard deviation.
/// Constant columns become all-zero.
inline Matrix zscore_normalize(const Matrix& m) {
    if (m.rows() < 1) {
        throw std::invalid_argument("zscore_normalize: need at least one row");
    }
    Matrix out(m.rows(), m.cols());
    const double n = static_cast<double>(m.rows());
    for (Index j = 0; j < m.cols(); ++j) {
        const double mean = m.col(j).sum() / n;
        double ss = 0.0;
        for (Index i = 0; i < m.rows(); ++i) {
            const double c = m(i, j) - mean;
            ss += c * c;
        }
        const double sd = std::sqrt(ss / n);
        // Rounding noise on a constant column is treated as zero variance.
        if (!(sd > 1e-14 * std::max(1.0, std::abs(mean)))) {
            out.col(j).setZero();
            continue;
        }
        for (Index i = 0; i < m.rows(); ++i) {
            out(i, j) = (m(i, j) - mean) / sd;
        }
    }
    return out;
}

struct PcaModel {
    RowVector mean;             // length d
    Matrix components;          // m x d, orthonormal rows
    Vector explained_variance;  // length m, non-increasing

    Index input_dim() const { return components.cols(); }
    Index output_dim() const { return components.rows(); }
};

/// Fits the top `m` principal directions of the column-centred data via a
/// thin SVD. Each component is signed so that its largest-magnitude entry
/// is positive.
inline PcaModel pca_fit(const Matrix& x, Index m) {
    require_data_matrix(x, "pca_fit");
    const Index n = x.rows();
    const Index d = x.cols();
    if (m < 1 || m > std::min(n, d)) {
        std::ostringstream os;
        os << "pca_fit: target dimension " << m << " out of range [1, " << std::min(n, d) << "] for data "
           << shape_string(x);
        throw std::invalid_argument(os.str());
    }

    PcaModel model;
    model.mean = x.colwise().mean();
    const Matrix centered = x.rowwise() - model.mean;

    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
    const Eigen::MatrixXd& v = svd.matrixV();
    const Vector& s = svd.singularValues();

    model.components.resize(m, d);
    model.explained_variance.resize(m);
    const double denom = static_cast<double>(std::max<Index>(n - 1, 1));
    for (Index c = 0; c < m; ++c) {
        RowVector comp = v.col(c).transpose();
        Index arg = 0;
        for (Index l = 1; l < d; ++l) {
            if (std::abs(comp(l)) > std::abs(comp(arg))) arg = l;
        }
        if (comp(arg) < 0) comp = -comp;
        model.components.row(c) = comp;
        model.explained_variance(c) = s(c) * s(c) / denom;
    }
    return model;
}

/// (x - mean) * components^T
inline Matrix pca_transform(const PcaModel& model, const Matrix& x) {
    if (x.cols() != model.input_dim()) {
        std::ostringstream os;
        os << "pca_transform: data has " << x.cols() << " columns, model expects " << model.input_dim();
        throw std::invalid_argument(os.str());
    }
    return (x.rowwise() - model.mean) * model.components.transpose();
}

}  // namespace cbmap
