#pragma once

// k-means clustering (Lloyd and mini-batch) with k-means++ seeding.

#include "cbmap/linalg.hpp"

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace cbmap {

using Labels = std::vector<int>;

enum class KmeansMode {
    automatic,   // full batch below `mini_batch_threshold` rows, mini-batch above
    full_batch,
    mini_batch,
};

struct KmeansConfig {
    Index k = 8;
    KmeansMode mode = KmeansMode::automatic;
    Index batch_size = 1024;
    int max_iters = 100;
    std::uint64_t seed = 0;
    int n_init = 3;  // restarts, full batch only
    Index mini_batch_threshold = 5000;
};

struct ClusterAssignment {
    Matrix centers;  // k x d
    Labels labels;   // length n, values in [0, k)
    double inertia = 0.0;
    Index k = 0;
    int iterations = 0;
    bool mini_batch = false;
    /// Inertia after each update step of the winning run.
    std::vector<double> inertia_history;
};

/// Index of the nearest center per row; ties go to the smallest index.
inline Labels assign_labels(const Matrix& x, const Matrix& centers) {
    if (x.cols() != centers.cols()) {
        throw std::invalid_argument("assign_labels: data " + shape_string(x) + " and centers " +
                                    shape_string(centers) + " differ in width");
    }
    Labels labels(static_cast<std::size_t>(x.rows()), 0);
    const Index d = x.cols();
    for (Index i = 0; i < x.rows(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        int arg = 0;
        for (Index j = 0; j < centers.rows(); ++j) {
            double acc = 0.0;
            for (Index l = 0; l < d; ++l) {
                const double diff = x(i, l) - centers(j, l);
                acc += diff * diff;
            }
            if (acc < best) {
                best = acc;
                arg = static_cast<int>(j);
            }
        }
        labels[static_cast<std::size_t>(i)] = arg;
    }
    return labels;
}

namespace detail {

inline double squared_distance(const Matrix& a, Index i, const Matrix& b, Index j) {
    double acc = 0.0;
    for (Index l = 0; l < a.cols(); ++l) {
        const double diff = a(i, l) - b(j, l);
        acc += diff * diff;
    }
    return acc;
}

inline double compute_inertia(const Matrix& x, const Matrix& centers, const Labels& labels) {
    double total = 0.0;
    for (Index i = 0; i < x.rows(); ++i) {
        total += squared_distance(x, i, centers, labels[static_cast<std::size_t>(i)]);
    }
    return total;
}

inline Matrix kmeans_plus_plus(const Matrix& x, Index k, std::mt19937_64& rng) {
    const Index n = x.rows();
    Matrix centers(k, x.cols());
    std::uniform_int_distribution<Index> pick(0, n - 1);
    centers.row(0) = x.row(pick(rng));

    std::vector<double> closest(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) closest[static_cast<std::size_t>(i)] = squared_distance(x, i, centers, 0);

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (Index c = 1; c < k; ++c) {
        double total = 0.0;
        for (double v : closest) total += v;
        Index chosen = 0;
        if (total > 0.0) {
            const double target = unit(rng) * total;
            double running = 0.0;
            chosen = n - 1;
            for (Index i = 0; i < n; ++i) {
                running += closest[static_cast<std::size_t>(i)];
                if (running > target) {
                    chosen = i;
                    break;
                }
            }
        } else {
            chosen = pick(rng);  // every point already sits on a center
        }
        centers.row(c) = x.row(chosen);
        for (Index i = 0; i < n; ++i) {
            auto& slot = closest[static_cast<std::size_t>(i)];
            slot = std::min(slot, squared_distance(x, i, centers, c));
        }
    }
    return centers;
}

/// Moves every center that owns no point onto the point farthest from its
/// own center, then relabels. Returns true if anything moved.
inline bool reseed_empty_clusters(const Matrix& x, Matrix& centers, Labels& labels) {
    const Index k = centers.rows();
    bool moved = false;
    for (Index pass = 0; pass < k; ++pass) {
        std::vector<Index> counts(static_cast<std::size_t>(k), 0);
        for (int l : labels) ++counts[static_cast<std::size_t>(l)];
        Index empty = -1;
        for (Index j = 0; j < k; ++j) {
            if (counts[static_cast<std::size_t>(j)] == 0) {
                empty = j;
                break;
            }
        }
        if (empty < 0) break;

        Index far = -1;
        double far_dist = -1.0;
        for (Index i = 0; i < x.rows(); ++i) {
            const int own = labels[static_cast<std::size_t>(i)];
            if (counts[static_cast<std::size_t>(own)] < 2) continue;  // don't empty another cluster
            const double dist = squared_distance(x, i, centers, own);
            if (dist > far_dist) {
                far_dist = dist;
                far = i;
            }
        }
        if (far < 0 || far_dist <= 0.0) break;  // fewer distinct points than clusters
        centers.row(empty) = x.row(far);
        labels = assign_labels(x, centers);
        moved = true;
    }
    return moved;
}

inline void recompute_means(const Matrix& x, const Labels& labels, Matrix& centers) {
    const Index k = centers.rows();
    Matrix sums = Matrix::Zero(k, x.cols());
    std::vector<Index> counts(static_cast<std::size_t>(k), 0);
    for (Index i = 0; i < x.rows(); ++i) {
        const int l = labels[static_cast<std::size_t>(i)];
        sums.row(l) += x.row(i);
        ++counts[static_cast<std::size_t>(l)];
    }
    for (Index j = 0; j < k; ++j) {
        const auto c = counts[static_cast<std::size_t>(j)];
        if (c > 0) centers.row(j) = sums.row(j) / static_cast<double>(c);
    }
}

inline ClusterAssignment lloyd(const Matrix& x, const KmeansConfig& cfg, std::mt19937_64& rng) {
    ClusterAssignment out;
    out.k = cfg.k;
    out.centers = kmeans_plus_plus(x, cfg.k, rng);
    out.labels = assign_labels(x, out.centers);
    reseed_empty_clusters(x, out.centers, out.labels);

    for (int it = 0; it < cfg.max_iters; ++it) {
        recompute_means(x, out.labels, out.centers);
        Labels next = assign_labels(x, out.centers);
        reseed_empty_clusters(x, out.centers, next);
        out.iterations = it + 1;
        out.inertia_history.push_back(compute_inertia(x, out.centers, next));
        const bool stable = next == out.labels;
        out.labels = std::move(next);
        if (stable) break;
    }
    out.inertia = compute_inertia(x, out.centers, out.labels);
    return out;
}

inline ClusterAssignment mini_batch(const Matrix& x, const KmeansConfig& cfg, std::mt19937_64& rng) {
    ClusterAssignment out;
    out.k = cfg.k;
    out.mini_batch = true;
    out.centers = kmeans_plus_plus(x, cfg.k, rng);

    const Index n = x.rows();
    const Index b = std::min(cfg.batch_size, n);
    std::vector<double> counts(static_cast<std::size_t>(cfg.k), 0.0);
    std::uniform_int_distribution<Index> pick(0, n - 1);
    std::vector<Index> batch(static_cast<std::size_t>(b));
    std::vector<int> nearest(static_cast<std::size_t>(b));

    for (int it = 0; it < cfg.max_iters; ++it) {
        for (auto& idx : batch) idx = pick(rng);
        for (std::size_t s = 0; s < batch.size(); ++s) {
            double best = std::numeric_limits<double>::infinity();
            int arg = 0;
            for (Index j = 0; j < cfg.k; ++j) {
                const double dist = squared_distance(x, batch[s], out.centers, j);
                if (dist < best) {
                    best = dist;
                    arg = static_cast<int>(j);
                }
            }
            nearest[s] = arg;
        }
        for (std::size_t s = 0; s < batch.size(); ++s) {
            const int j = nearest[s];
            counts[static_cast<std::size_t>(j)] += 1.0;
            const double eta = 1.0 / counts[static_cast<std::size_t>(j)];
            out.centers.row(j) += eta * (x.row(batch[s]) - out.centers.row(j));
        }
        out.iterations = it + 1;
    }
    out.labels = assign_labels(x, out.centers);
    reseed_empty_clusters(x, out.centers, out.labels);
    out.inertia = compute_inertia(x, out.centers, out.labels);
    out.inertia_history.push_back(out.inertia);
    return out;
}

}  // namespace detail

inline bool uses_mini_batch(const KmeansConfig& cfg, Index n_rows) {
    switch (cfg.mode) {
        case KmeansMode::full_batch: return false;
        case KmeansMode::mini_batch: return true;
        case KmeansMode::automatic: break;
    }
    return n_rows >= cfg.mini_batch_threshold;
}

/// Clusters the rows of `x`. Deterministic for a fixed seed; no state is
/// shared between calls.
inline ClusterAssignment kmeans_fit(const Matrix& x, const KmeansConfig& cfg) {
    require_data_matrix(x, "kmeans_fit");
    if (cfg.k < 1 || cfg.k > x.rows()) {
        std::ostringstream os;
        os << "kmeans_fit: k = " << cfg.k << " must lie in [1, " << x.rows() << "]";
        throw std::invalid_argument(os.str());
    }
    if (cfg.max_iters < 1 || cfg.batch_size < 1 || cfg.n_init < 1) {
        throw std::invalid_argument("kmeans_fit: max_iters, batch_size and n_init must be positive");
    }

    std::mt19937_64 rng(cfg.seed);
    if (uses_mini_batch(cfg, x.rows())) {
        return detail::mini_batch(x, cfg, rng);
    }
    ClusterAssignment best = detail::lloyd(x, cfg, rng);
    for (int run = 1; run < cfg.n_init; ++run) {
        ClusterAssignment candidate = detail::lloyd(x, cfg, rng);
        if (candidate.inertia < best.inertia) best = std::move(candidate);
    }
    return best;
}

}  // namespace cbmap
