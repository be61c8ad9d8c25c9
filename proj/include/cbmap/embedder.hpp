#pragma once

// Fitting and out-of-sample transformation.
//
// fit() clusters the data, derives the high-dimensional memberships U_H,
// places low-dimensional centers (PCA of the high-dimensional centers, or
// random), scatters each point around its own center and then runs Adam on
// ||U_L - U_H||_F. After each step the low-dimensional centers move to the
// mean of their (fixed) members, are z-scored, and sigma_L is re-estimated.
//
// transform() keeps C_H, C_L, sigma_H and sigma_L frozen and only optimizes
// the positions of the new points.

#include "cbmap/kmeans.hpp"
#include "cbmap/linalg.hpp"
#include "cbmap/membership.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace cbmap {

enum class CenterInit { pca, random };

inline const char* to_string(CenterInit init) { return init == CenterInit::pca ? "pca" : "random"; }

struct CbmapConfig {
    Index n_clusters = 0;  // required
    Index out_dim = 2;
    int max_iter = 500;
    double learning_rate = 0.1;
    CenterInit center_init = CenterInit::pca;
    KmeansConfig clustering{};  // its k is overwritten by n_clusters
    double init_noise_std = 0.1;
    std::uint64_t seed = 0;
    /// z-score the input columns before clustering; the scaling is stored in the model.
    bool standardize = false;
};

/// Column scaling applied to inputs before anything else (identity unless
/// the model was fit with `standardize`).
struct InputScaling {
    RowVector mean;
    RowVector scale;
};

struct CbmapModel {
    Matrix centers_high;  // k x d
    Matrix centers_low;   // k x m
    double sigma_high = 0.0;
    double sigma_low = 0.0;
    CbmapConfig config;
    std::optional<PcaModel> center_pca;
    std::optional<InputScaling> input_scaling;

    Index n_clusters() const { return centers_high.rows(); }
    Index input_dim() const { return centers_high.cols(); }
    Index output_dim() const { return centers_low.cols(); }
};

struct FitResult {
    Matrix embedding;                 // n x m
    std::vector<double> loss_history; // F at the start of every iteration
    CbmapModel model;
    Labels labels;
    std::vector<std::string> warnings;
};

struct AdamState {
    Matrix first;   // first-moment estimate
    Matrix second;  // second-moment estimate

    static AdamState zeros(Index rows, Index cols) {
        return {Matrix::Zero(rows, cols), Matrix::Zero(rows, cols)};
    }
};

struct AdamParams {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// One bias-corrected Adam step, in place. `step` counts from 1.
inline void adam_update(Matrix& y, const Matrix& grad, AdamState& state, double learning_rate, int step,
                        const AdamParams& p = {}) {
    if (step < 1) throw std::invalid_argument("adam_update: step index starts at 1");
    if (grad.rows() != y.rows() || grad.cols() != y.cols() || state.first.rows() != y.rows() ||
        state.first.cols() != y.cols() || state.second.rows() != y.rows() || state.second.cols() != y.cols()) {
        throw std::invalid_argument("adam_update: shape mismatch");
    }
    const double c1 = 1.0 - std::pow(p.beta1, step);
    const double c2 = 1.0 - std::pow(p.beta2, step);
    for (Index i = 0; i < y.rows(); ++i) {
        for (Index l = 0; l < y.cols(); ++l) {
            const double g = grad(i, l);
            double& m1 = state.first(i, l);
            double& m2 = state.second(i, l);
            m1 = p.beta1 * m1 + (1.0 - p.beta1) * g;
            m2 = p.beta2 * m2 + (1.0 - p.beta2) * g * g;
            y(i, l) -= learning_rate * (m1 / c1) / (std::sqrt(m2 / c2) + p.epsilon);
        }
    }
}

namespace detail {

inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline void check_labels(const Labels& labels, Index k) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= k) {
            std::ostringstream os;
            os << "label " << labels[i] << " at row " << i << " is outside [0, " << k << ")";
            throw std::invalid_argument(os.str());
        }
    }
}

inline InputScaling fit_scaling(const Matrix& x) {
    InputScaling s;
    s.mean = x.colwise().mean();
    s.scale.resize(x.cols());
    for (Index j = 0; j < x.cols(); ++j) {
        const double sd = std::sqrt((x.col(j).array() - s.mean(j)).square().mean());
        s.scale(j) = sd > 0.0 ? sd : 1.0;
    }
    return s;
}

inline Matrix apply_scaling(const std::optional<InputScaling>& s, const Matrix& x) {
    if (!s) return x;
    return (x.rowwise() - s->mean).array().rowwise() / s->scale.array();
}

}  // namespace detail

/// y_i = C_L[labels[i]] + N(0, noise_std^2) per coordinate.
inline Matrix init_embedding(const Labels& labels, const Matrix& centers_low, double noise_std,
                             std::uint64_t seed) {
    if (!(noise_std > 0.0)) throw std::invalid_argument("init_embedding: noise_std must be positive");
    detail::check_labels(labels, centers_low.rows());
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_std);
    Matrix y(static_cast<Index>(labels.size()), centers_low.cols());
    for (Index i = 0; i < y.rows(); ++i) {
        for (Index l = 0; l < y.cols(); ++l) {
            y(i, l) = centers_low(labels[static_cast<std::size_t>(i)], l) + noise(rng);
        }
    }
    return y;
}

/// Mean of the rows of `y` carrying each label. Centers without members
/// keep their value from `previous`.
inline Matrix update_centers(const Matrix& y, const Labels& labels, const Matrix& previous) {
    if (static_cast<Index>(labels.size()) != y.rows() || previous.cols() != y.cols()) {
        throw std::invalid_argument("update_centers: inconsistent shapes");
    }
    const Index k = previous.rows();
    detail::check_labels(labels, k);
    Matrix sums = Matrix::Zero(k, y.cols());
    std::vector<Index> counts(static_cast<std::size_t>(k), 0);
    for (Index i = 0; i < y.rows(); ++i) {
        const int l = labels[static_cast<std::size_t>(i)];
        sums.row(l) += y.row(i);
        ++counts[static_cast<std::size_t>(l)];
    }
    Matrix out = previous;
    for (Index j = 0; j < k; ++j) {
        if (counts[static_cast<std::size_t>(j)] > 0) {
            out.row(j) = sums.row(j) / static_cast<double>(counts[static_cast<std::size_t>(j)]);
        }
    }
    return out;
}

inline void validate(const CbmapConfig& cfg, const Matrix& x) {
    std::ostringstream os;
    if (cfg.n_clusters < 2) {
        os << "n_clusters must be at least 2 (got " << cfg.n_clusters << ")";
    } else if (cfg.n_clusters > x.rows()) {
        os << "n_clusters = " << cfg.n_clusters << " exceeds the number of rows (" << x.rows() << ")";
    } else if (cfg.out_dim < 1 || cfg.out_dim >= x.cols()) {
        os << "output dimension " << cfg.out_dim << " must lie in [1, " << x.cols() << ") for " << x.cols()
           << "-column data";
    } else if (cfg.max_iter < 1) {
        os << "max_iter must be positive";
    } else if (!(cfg.learning_rate > 0.0)) {
        os << "learning_rate must be positive";
    } else if (!(cfg.init_noise_std > 0.0)) {
        os << "init_noise_std must be positive";
    }
    if (!os.str().empty()) throw std::invalid_argument("fit: " + os.str());
}

inline FitResult fit(const Matrix& x_raw, const CbmapConfig& cfg) {
    require_data_matrix(x_raw, "fit");
    validate(cfg, x_raw);

    FitResult result;
    CbmapModel& model = result.model;
    model.config = cfg;
    model.config.clustering.k = cfg.n_clusters;
    if (cfg.standardize) model.input_scaling = detail::fit_scaling(x_raw);
    const Matrix x = detail::apply_scaling(model.input_scaling, x_raw);

    const ClusterAssignment clusters = kmeans_fit(x, model.config.clustering);
    model.centers_high = clusters.centers;
    result.labels = clusters.labels;

    const Matrix dist_high = euclidean_distance_matrix(x, model.centers_high);
    model.sigma_high = sigma_high(dist_high).value;
    const MembershipMatrix u_high = membership_matrix(dist_high, model.sigma_high);

    const Index k = cfg.n_clusters;
    const Index m = cfg.out_dim;
    Matrix centers_low;
    if (cfg.center_init == CenterInit::pca && k > m) {
        model.center_pca = pca_fit(model.centers_high, m);
        centers_low = pca_transform(*model.center_pca, model.centers_high);
    } else {
        if (cfg.center_init == CenterInit::pca) {
            result.warnings.push_back("PCA center initialization needs more clusters than output dimensions; "
                                      "using random initialization");
            model.config.center_init = CenterInit::random;
        }
        std::mt19937_64 rng(detail::split_seed(cfg.seed, 1));
        std::normal_distribution<double> normal(0.0, 1.0);
        centers_low.resize(k, m);
        for (Index j = 0; j < k; ++j) {
            for (Index l = 0; l < m; ++l) centers_low(j, l) = normal(rng);
        }
    }
    centers_low = zscore_normalize(centers_low);
    double sig_low = sigma_low(centers_low).value;

    Matrix y = init_embedding(result.labels, centers_low, cfg.init_noise_std, detail::split_seed(cfg.seed, 2));
    AdamState adam = AdamState::zeros(y.rows(), y.cols());
    result.loss_history.reserve(static_cast<std::size_t>(cfg.max_iter));

    for (int iter = 1; iter <= cfg.max_iter; ++iter) {
        const MembershipMatrix u_low = membership_matrix(euclidean_distance_matrix(y, centers_low), sig_low);
        const double loss = frobenius_loss(u_low, u_high);
        result.loss_history.push_back(loss);
        const Matrix grad = loss_gradient(y, centers_low, sig_low, u_low, u_high, loss);
        adam_update(y, grad, adam, cfg.learning_rate, iter);

        centers_low = zscore_normalize(update_centers(y, result.labels, centers_low));
        sig_low = sigma_low(centers_low).value;
    }

    model.centers_low = centers_low;
    model.sigma_low = sig_low;
    result.embedding = std::move(y);
    return result;
}

struct TransformOptions {
    int iters = 300;
    std::optional<std::uint64_t> seed;  // defaults to the model's seed
};

/// Embeds unseen rows against a fitted model. Nothing in the model moves.
inline Matrix transform(const CbmapModel& model, const Matrix& x_new_raw, const TransformOptions& opts = {}) {
    require_data_matrix(x_new_raw, "transform");
    if (x_new_raw.cols() != model.input_dim()) {
        std::ostringstream os;
        os << "transform: input has " << x_new_raw.cols() << " columns but the model was fit on "
           << model.input_dim();
        throw std::invalid_argument(os.str());
    }
    if (opts.iters < 0) throw std::invalid_argument("transform: iteration count must be non-negative");

    const Matrix x_new = detail::apply_scaling(model.input_scaling, x_new_raw);
    const Matrix dist_high = euclidean_distance_matrix(x_new, model.centers_high);
    const MembershipMatrix u_high = membership_matrix(dist_high, model.sigma_high);

    // Start each point at the center it belongs to most.
    Labels anchor(static_cast<std::size_t>(x_new.rows()));
    for (Index i = 0; i < x_new.rows(); ++i) {
        Index arg = 0;
        u_high.values.row(i).maxCoeff(&arg);
        anchor[static_cast<std::size_t>(i)] = static_cast<int>(arg);
    }
    const std::uint64_t seed = opts.seed.value_or(model.config.seed);
    Matrix y = init_embedding(anchor, model.centers_low, model.config.init_noise_std, detail::split_seed(seed, 3));

    AdamState adam = AdamState::zeros(y.rows(), y.cols());
    for (int iter = 1; iter <= opts.iters; ++iter) {
        const MembershipMatrix u_low =
            membership_matrix(euclidean_distance_matrix(y, model.centers_low), model.sigma_low);
        const double loss = frobenius_loss(u_low, u_high);
        const Matrix grad = loss_gradient(y, model.centers_low, model.sigma_low, u_low, u_high, loss);
        adam_update(y, grad, adam, model.config.learning_rate, iter);
    }
    return y;
}

}  // namespace cbmap
