#include "cbmap/datasets.hpp"
#include "cbmap/metrics.hpp"
#include "test_helpers.hpp"

#include <catch_amalgamated.hpp>

#include <map>

using namespace cbmap;

namespace {

/// Least-squares reconstruction error of X from [Y, 1] via 2x2 normal
/// equations solved by Cramer's rule (Y must have two columns).
double brute_reconstruction_error(const Matrix& x, const Matrix& y) {
    const Index n = x.rows();
    double my0 = 0, my1 = 0;
    for (Index i = 0; i < n; ++i) {
        my0 += y(i, 0);
        my1 += y(i, 1);
    }
    my0 /= n;
    my1 /= n;
    double a = 0, b = 0, c = 0;
    for (Index i = 0; i < n; ++i) {
        const double u = y(i, 0) - my0, v = y(i, 1) - my1;
        a += u * u;
        b += u * v;
        c += v * v;
    }
    const double det = a * c - b * b;
    double err = 0.0;
    for (Index l = 0; l < x.cols(); ++l) {
        double mx = 0;
        for (Index i = 0; i < n; ++i) mx += x(i, l);
        mx /= n;
        double p = 0, q = 0;
        for (Index i = 0; i < n; ++i) {
            p += (y(i, 0) - my0) * (x(i, l) - mx);
            q += (y(i, 1) - my1) * (x(i, l) - mx);
        }
        const double w0 = (c * p - b * q) / det;
        const double w1 = (a * q - b * p) / det;
        for (Index i = 0; i < n; ++i) {
            const double r = (x(i, l) - mx) - w0 * (y(i, 0) - my0) - w1 * (y(i, 1) - my1);
            err += r * r;
        }
    }
    return std::sqrt(err);
}

/// kNN by sorting all distances, ties by index.
int brute_knn(const Matrix& train, const Labels& tl, const RowVector& q, std::size_t k) {
    std::vector<std::pair<double, std::size_t>> all;
    for (Index t = 0; t < train.rows(); ++t) all.push_back({(train.row(t) - q).squaredNorm(), static_cast<std::size_t>(t)});
    std::sort(all.begin(), all.end());
    std::map<int, int> votes;
    int top = 0;
    for (std::size_t r = 0; r < k; ++r) top = std::max(top, ++votes[tl[all[r].second]]);
    for (std::size_t r = 0; r < k; ++r) {
        if (votes[tl[all[r].second]] == top) return tl[all[r].second];
    }
    return -1;
}

}  // namespace

TEST_CASE("global score of the PCA embedding is one", "[metrics]") {
    const auto ds = make_s_curve(500, 0.0, 3);
    const Matrix y = pca_transform(pca_fit(ds.data, 2), ds.data);
    CHECK(std::abs(global_score(ds.data, y) - 1.0) < 1e-9);
}

TEST_CASE("global score is invariant under invertible affine maps of Y", "[metrics]") {
    const auto ds = make_swiss_roll(400, 0.0, 4);
    const Matrix y = pca_transform(pca_fit(ds.data, 2), ds.data);
    Matrix r(2, 2);
    r << 2.0, 0.7,
         -0.3, 0.5;
    RowVector t(2);
    t << 10.0, -4.0;
    const Matrix moved = (y * r).rowwise() + t;
    CHECK(std::abs(global_score(ds.data, moved) - 1.0) < 1e-8);

    std::mt19937_64 rng(5);
    const Matrix z = testing::random_matrix(400, 2, rng);
    const Matrix z_moved = (z * r).rowwise() + t;
    CHECK(std::abs(global_score(ds.data, z_moved) - global_score(ds.data, z)) < 1e-8);
}

TEST_CASE("random embeddings of a structured manifold score low", "[metrics]") {
    const auto ds = make_s_curve(600, 0.0, 6);
    std::mt19937_64 rng(7);
    const Matrix y = testing::random_matrix(600, 2, rng);
    const Matrix pca_y = pca_transform(pca_fit(ds.data, 2), ds.data);
    const double ref = brute_reconstruction_error(ds.data, pca_y);
    const double oracle = std::exp(-(brute_reconstruction_error(ds.data, y) - ref) / ref);
    const double gs = global_score(ds.data, y);
    CHECK(std::abs(gs - oracle) < 1e-9);
    CHECK(gs < 0.9);
}

TEST_CASE("global score never exceeds one", "[metrics]") {
    std::mt19937_64 rng(8);
    const Matrix x = testing::random_matrix(80, 5, rng) * testing::random_matrix(5, 5, rng);
    for (int trial = 0; trial < 30; ++trial) {
        const Matrix y = testing::random_matrix(80, 2, rng);
        CHECK(global_score(x, y) <= 1.0 + 1e-9);
    }
}

TEST_CASE("global score refuses rank-deficient data and bad shapes", "[metrics]") {
    Matrix flat(20, 3);
    std::mt19937_64 rng(9);
    flat.leftCols(2) = testing::random_matrix(20, 2, rng);
    flat.col(2).setZero();
    CHECK_THROWS_WITH(global_score(flat, flat.leftCols(2)), Catch::Matchers::ContainsSubstring("reduce"));
    CHECK_THROWS_AS(global_score(flat, Matrix::Zero(19, 2)), std::invalid_argument);
    CHECK_THROWS_AS(global_score(flat, Matrix::Zero(20, 3)), std::invalid_argument);
}

TEST_CASE("knn accuracy is perfect for well separated classes", "[metrics]") {
    std::mt19937_64 rng(10);
    const Matrix y = testing::two_blobs(50, 2, 100.0, 1.0, rng);
    Labels labels;
    for (int i = 0; i < 100; ++i) labels.push_back(i < 50 ? 0 : 1);
    for (std::uint64_t seed = 0; seed < 5; ++seed) CHECK(knn_accuracy(y, labels, 3, {0.2, seed}) == 1.0);

    CHECK(knn_accuracy(y, Labels(100, 4)) == 1.0);
}

TEST_CASE("knn accuracy on a handcrafted set matches a full-sort oracle", "[metrics]") {
    Matrix y(12, 2);
    y << 0, 0,   0.5, 0.2,  0.1, 0.6,  0.4, 0.4,
         3, 3,   3.2, 2.8,  2.9, 3.3,  3.1, 3.1,
         1.6, 1.5,  // ambiguous, between the groups
         0.3, 0.1,  3.3, 3.0,  1.4, 1.6;
    const Labels labels = {0, 0, 0, 0, 1, 1, 1, 1, 1, 0, 1, 0};

    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const HoldoutSpec spec{0.25, seed};
        const HoldoutSplit split = stratified_split(labels, spec);
        Matrix train(static_cast<Index>(split.train.size()), 2);
        Labels tl;
        for (std::size_t r = 0; r < split.train.size(); ++r) {
            train.row(static_cast<Index>(r)) = y.row(split.train[r]);
            tl.push_back(labels[static_cast<std::size_t>(split.train[r])]);
        }
        int hits = 0;
        for (Index t : split.test) hits += brute_knn(train, tl, y.row(t), 3) == labels[static_cast<std::size_t>(t)];
        const double expected = static_cast<double>(hits) / static_cast<double>(split.test.size());
        CHECK(knn_accuracy(y, labels, 3, spec) == expected);
    }
}

TEST_CASE("knn vote ties go to the nearest voter", "[metrics]") {
    Matrix train(3, 1);
    train << 1.0, 2.0, -2.5;
    const Labels tl = {7, 8, 9};
    Matrix q(1, 1);
    q << 0.0;
    CHECK(knn_predict(train, tl, q, 3) == std::vector<int>{7});
}

TEST_CASE("knn accuracy is invariant under rigid motions and deterministic", "[metrics]") {
    std::mt19937_64 rng(11);
    const Matrix y = testing::random_matrix(120, 2, rng);
    Labels labels;
    for (Index i = 0; i < 120; ++i) labels.push_back(y(i, 0) + 0.3 * y(i, 1) > 0 ? 1 : (y(i, 1) > 0.5 ? 2 : 0));
    const double a = knn_accuracy(y, labels);
    CHECK(knn_accuracy(y, labels) == a);

    const double th = 0.83;
    Matrix rot(2, 2);
    rot << std::cos(th), std::sin(th), -std::sin(th), std::cos(th);
    RowVector shift(2);
    shift << 3.0, -1.0;
    CHECK(knn_accuracy((y * rot).rowwise() + shift, labels) == a);
}

TEST_CASE("knn accuracy names classes too small to stratify", "[metrics]") {
    Matrix y = Matrix::Random(10, 2);
    Labels labels = {0, 0, 0, 0, 0, 1, 1, 1, 1, 5};
    CHECK_THROWS_WITH(knn_accuracy(y, labels), Catch::Matchers::ContainsSubstring("class 5"));
}
