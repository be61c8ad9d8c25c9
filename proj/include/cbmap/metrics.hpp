#pragma once

// Embedding quality: a PCA-anchored global score and holdout kNN accuracy.

#include "cbmap/kmeans.hpp"
#include "cbmap/linalg.hpp"

#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

namespace cbmap {

struct MetricReport {
    double global_score = 0.0;
    std::optional<double> knn_accuracy;
    double runtime_seconds = 0.0;
};

/// Minimum Frobenius error of reconstructing the centred X from an affine
/// map of Y (least squares).
inline double reconstruction_error(const Matrix& x, const Matrix& y) {
    if (x.rows() != y.rows()) {
        throw std::invalid_argument("reconstruction_error: row mismatch " + shape_string(x) + " vs " +
                                    shape_string(y));
    }
    const Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
    const Eigen::MatrixXd yc = y.rowwise() - y.colwise().mean();
    const Eigen::MatrixXd coeffs = yc.colPivHouseholderQr().solve(xc);
    return (xc - yc * coeffs).norm();
}

/// exp(-(MRE(Y) - MRE_pca) / MRE_pca). Equals 1 for the PCA embedding of
/// the same dimension and is at most 1 otherwise.
inline double global_score(const Matrix& x, const Matrix& y) {
    require_data_matrix(x, "global_score");
    require_data_matrix(y, "global_score");
    if (x.rows() != y.rows()) {
        throw std::invalid_argument("global_score: X and Y row counts differ (" + shape_string(x) + " vs " +
                                    shape_string(y) + ")");
    }
    if (y.cols() >= x.cols()) {
        throw std::invalid_argument("global_score: embedding width must be below the data width");
    }
    const Index m = y.cols();
    if (m > x.rows()) throw std::invalid_argument("global_score: more embedding columns than rows");
    const Matrix pca_embedding = pca_transform(pca_fit(x, m), x);
    const double ref = reconstruction_error(x, pca_embedding);
    const double scale = (x.rowwise() - x.colwise().mean()).norm();
    if (!(ref > 1e-12 * scale)) {
        std::ostringstream os;
        os << "global_score: data has rank <= " << m << ", PCA reconstructs it exactly; reduce the embedding "
              "dimension";
        throw std::invalid_argument(os.str());
    }
    return std::exp(-(reconstruction_error(x, y) - ref) / ref);
}

struct HoldoutSpec {
    double test_fraction = 0.2;
    std::uint64_t seed = 0;
};

struct HoldoutSplit {
    std::vector<Index> train;
    std::vector<Index> test;
};

/// Stratified split: every class contributes round(fraction * size) test
/// rows, clamped to [1, size - 1].
inline HoldoutSplit stratified_split(const Labels& labels, const HoldoutSpec& spec) {
    std::map<int, std::vector<Index>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(static_cast<Index>(i));

    std::mt19937_64 rng(spec.seed);
    HoldoutSplit split;
    for (auto& [label, members] : by_class) {
        if (members.size() < 2) {
            throw std::invalid_argument("stratified_split: class " + std::to_string(label) +
                                        " has fewer than 2 members");
        }
        std::shuffle(members.begin(), members.end(), rng);
        const auto size = static_cast<double>(members.size());
        auto n_test = static_cast<std::size_t>(std::llround(spec.test_fraction * size));
        n_test = std::clamp<std::size_t>(n_test, 1, members.size() - 1);
        split.test.insert(split.test.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_test));
        split.train.insert(split.train.end(), members.begin() + static_cast<std::ptrdiff_t>(n_test), members.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

/// Majority vote among the k nearest training rows. Equal distances are
/// ordered by row index; tied votes go to the class of the nearest voter
/// among the tied classes.
inline std::vector<int> knn_predict(const Matrix& train, const Labels& train_labels, const Matrix& query,
                                    Index k) {
    if (train.cols() != query.cols()) throw std::invalid_argument("knn_predict: width mismatch");
    if (train.rows() < 1 || k < 1) throw std::invalid_argument("knn_predict: need training rows and k >= 1");
    const Index kk = std::min(k, train.rows());
    std::vector<int> out(static_cast<std::size_t>(query.rows()));
    std::vector<std::pair<double, Index>> dist(static_cast<std::size_t>(train.rows()));
    std::map<int, int> votes;
    for (Index q = 0; q < query.rows(); ++q) {
        for (Index t = 0; t < train.rows(); ++t) {
            dist[static_cast<std::size_t>(t)] = {detail::squared_distance(query, q, train, t), t};
        }
        std::partial_sort(dist.begin(), dist.begin() + kk, dist.end());
        votes.clear();
        int top = 0;
        for (Index r = 0; r < kk; ++r) {
            top = std::max(top, ++votes[train_labels[static_cast<std::size_t>(dist[static_cast<std::size_t>(r)].second)]]);
        }
        for (Index r = 0; r < kk; ++r) {
            const int label = train_labels[static_cast<std::size_t>(dist[static_cast<std::size_t>(r)].second)];
            if (votes[label] == top) {
                out[static_cast<std::size_t>(q)] = label;
                break;
            }
        }
    }
    return out;
}

inline double knn_accuracy(const Matrix& y, const Labels& labels, Index k = 3, const HoldoutSpec& spec = {}) {
    require_data_matrix(y, "knn_accuracy");
    if (static_cast<Index>(labels.size()) != y.rows()) {
        throw std::invalid_argument("knn_accuracy: label count does not match embedding rows");
    }
    if (y.rows() < k + 1) throw std::invalid_argument("knn_accuracy: need at least k + 1 rows");

    const HoldoutSplit split = stratified_split(labels, spec);
    Matrix train(static_cast<Index>(split.train.size()), y.cols());
    Labels train_labels;
    for (std::size_t r = 0; r < split.train.size(); ++r) {
        train.row(static_cast<Index>(r)) = y.row(split.train[r]);
        train_labels.push_back(labels[static_cast<std::size_t>(split.train[r])]);
    }
    Matrix test(static_cast<Index>(split.test.size()), y.cols());
    for (std::size_t r = 0; r < split.test.size(); ++r) test.row(static_cast<Index>(r)) = y.row(split.test[r]);

    const std::vector<int> predicted = knn_predict(train, train_labels, test, k);
    std::size_t hits = 0;
    for (std::size_t r = 0; r < split.test.size(); ++r) {
        hits += predicted[r] == labels[static_cast<std::size_t>(split.test[r])] ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(split.test.size());
}

}  // namespace cbmap
