// Fits a 2-D embedding of an S-curve, reports its quality and embeds a
// few held-out points with the fitted model.

#include "cbmap/cbmap.hpp"

#include <iostream>

int main() {
    const auto train = cbmap::make_s_curve(1000, 0.0, 1);
    const auto test = cbmap::make_s_curve(200, 0.0, 2);

    cbmap::CbmapConfig cfg;
    cfg.n_clusters = 20;
    const auto result = cbmap::fit(train.data, cfg);

    std::cout << "loss " << result.loss_history.front() << " -> " << result.loss_history.back() << '\n';
    std::cout << "global score " << cbmap::global_score(train.data, result.embedding) << '\n';
    std::cout << "kNN accuracy " << cbmap::knn_accuracy(result.embedding, *train.labels) << '\n';

    const auto embedded = cbmap::transform(result.model, test.data);
    std::cout << "held-out global score " << cbmap::global_score(test.data, embedded) << '\n';
}
