#pragma once

// JSON persistence for fitted models.
//
//   {version, k, d, m, centers_high, centers_low, sigma_high, sigma_low,
//    config, center_pca: {mean, components} | null,
//    input_scaling: {mean, scale} | null}
//
// Matrices are arrays of rows. Doubles are written in shortest
// round-trip form, so a load reproduces every bit.

#include "cbmap/embedder.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <string>

namespace cbmap {

inline constexpr int kModelFormatVersion = 1;

namespace detail {

inline nlohmann::json matrix_to_json(const Matrix& m) {
    auto rows = nlohmann::json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        auto row = nlohmann::json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline nlohmann::json vector_to_json(const RowVector& v) {
    auto out = nlohmann::json::array();
    for (Index j = 0; j < v.size(); ++j) out.push_back(v(j));
    return out;
}

inline Matrix matrix_from_json(const nlohmann::json& j, Index rows, Index cols, const char* field) {
    if (!j.is_array() || static_cast<Index>(j.size()) != rows) {
        throw std::runtime_error(std::string("model: field '") + field + "' must have " + std::to_string(rows) +
                                 " rows");
    }
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const auto& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
            throw std::runtime_error(std::string("model: row ") + std::to_string(i) + " of '" + field + "' must have " +
                                     std::to_string(cols) + " entries");
        }
        for (Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

inline RowVector vector_from_json(const nlohmann::json& j, Index size, const char* field) {
    if (!j.is_array() || static_cast<Index>(j.size()) != size) {
        throw std::runtime_error(std::string("model: field '") + field + "' must have " + std::to_string(size) +
                                 " entries");
    }
    RowVector v(size);
    for (Index i = 0; i < size; ++i) v(i) = j[static_cast<std::size_t>(i)].get<double>();
    return v;
}

inline const char* to_string(KmeansMode mode) {
    switch (mode) {
        case KmeansMode::full_batch: return "full_batch";
        case KmeansMode::mini_batch: return "mini_batch";
        case KmeansMode::automatic: break;
    }
    return "auto";
}

inline KmeansMode kmeans_mode_from(const std::string& s) {
    if (s == "full_batch") return KmeansMode::full_batch;
    if (s == "mini_batch") return KmeansMode::mini_batch;
    if (s == "auto") return KmeansMode::automatic;
    throw std::runtime_error("model: unknown clustering mode '" + s + "'");
}

}  // namespace detail

inline nlohmann::json config_to_json(const CbmapConfig& cfg) {
    return {
        {"n_clusters", cfg.n_clusters},
        {"out_dim", cfg.out_dim},
        {"max_iter", cfg.max_iter},
        {"learning_rate", cfg.learning_rate},
        {"center_init", to_string(cfg.center_init)},
        {"init_noise_std", cfg.init_noise_std},
        {"seed", cfg.seed},
        {"standardize", cfg.standardize},
        {"clustering",
         {{"mode", detail::to_string(cfg.clustering.mode)},
          {"batch_size", cfg.clustering.batch_size},
          {"max_iters", cfg.clustering.max_iters},
          {"n_init", cfg.clustering.n_init},
          {"seed", cfg.clustering.seed},
          {"mini_batch_threshold", cfg.clustering.mini_batch_threshold}}},
    };
}

inline CbmapConfig config_from_json(const nlohmann::json& j) {
    CbmapConfig cfg;
    cfg.n_clusters = j.at("n_clusters").get<Index>();
    cfg.out_dim = j.at("out_dim").get<Index>();
    cfg.max_iter = j.at("max_iter").get<int>();
    cfg.learning_rate = j.at("learning_rate").get<double>();
    const auto init = j.at("center_init").get<std::string>();
    if (init != "pca" && init != "random") throw std::runtime_error("model: unknown center_init '" + init + "'");
    cfg.center_init = init == "pca" ? CenterInit::pca : CenterInit::random;
    cfg.init_noise_std = j.at("init_noise_std").get<double>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.standardize = j.value("standardize", false);
    if (j.contains("clustering")) {
        const auto& c = j.at("clustering");
        cfg.clustering.k = cfg.n_clusters;
        cfg.clustering.mode = detail::kmeans_mode_from(c.value("mode", std::string("auto")));
        cfg.clustering.batch_size = c.value("batch_size", cfg.clustering.batch_size);
        cfg.clustering.max_iters = c.value("max_iters", cfg.clustering.max_iters);
        cfg.clustering.n_init = c.value("n_init", cfg.clustering.n_init);
        cfg.clustering.seed = c.value("seed", cfg.clustering.seed);
        cfg.clustering.mini_batch_threshold = c.value("mini_batch_threshold", cfg.clustering.mini_batch_threshold);
    }
    return cfg;
}

inline nlohmann::json model_to_json(const CbmapModel& model) {
    nlohmann::json j;
    j["version"] = kModelFormatVersion;
    j["k"] = model.n_clusters();
    j["d"] = model.input_dim();
    j["m"] = model.output_dim();
    j["centers_high"] = detail::matrix_to_json(model.centers_high);
    j["centers_low"] = detail::matrix_to_json(model.centers_low);
    j["sigma_high"] = model.sigma_high;
    j["sigma_low"] = model.sigma_low;
    j["config"] = config_to_json(model.config);
    if (model.center_pca) {
        j["center_pca"] = {{"mean", detail::vector_to_json(model.center_pca->mean)},
                           {"components", detail::matrix_to_json(model.center_pca->components)},
                           {"explained_variance", detail::vector_to_json(model.center_pca->explained_variance.transpose())}};
    } else {
        j["center_pca"] = nullptr;
    }
    if (model.input_scaling) {
        j["input_scaling"] = {{"mean", detail::vector_to_json(model.input_scaling->mean)},
                              {"scale", detail::vector_to_json(model.input_scaling->scale)}};
    } else {
        j["input_scaling"] = nullptr;
    }
    return j;
}

inline CbmapModel model_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("version")) {
        throw std::runtime_error("model: missing 'version'; expected version " + std::to_string(kModelFormatVersion));
    }
    const int version = j.at("version").get<int>();
    if (version != kModelFormatVersion) {
        throw std::runtime_error("model: unsupported version " + std::to_string(version) + ", expected version " +
                                 std::to_string(kModelFormatVersion));
    }
    try {
        const auto k = j.at("k").get<Index>();
        const auto d = j.at("d").get<Index>();
        const auto m = j.at("m").get<Index>();
        if (k < 2 || d < 1 || m < 1) throw std::runtime_error("model: invalid dimensions");

        CbmapModel model;
        model.centers_high = detail::matrix_from_json(j.at("centers_high"), k, d, "centers_high");
        model.centers_low = detail::matrix_from_json(j.at("centers_low"), k, m, "centers_low");
        model.sigma_high = j.at("sigma_high").get<double>();
        model.sigma_low = j.at("sigma_low").get<double>();
        if (!(model.sigma_high > 0.0) || !(model.sigma_low > 0.0)) {
            throw std::runtime_error("model: sigma values must be positive");
        }
        model.config = config_from_json(j.at("config"));
        if (j.contains("center_pca") && !j.at("center_pca").is_null()) {
            const auto& p = j.at("center_pca");
            PcaModel pca;
            pca.mean = detail::vector_from_json(p.at("mean"), d, "center_pca.mean");
            pca.components = detail::matrix_from_json(p.at("components"), m, d, "center_pca.components");
            if (p.contains("explained_variance")) {
                pca.explained_variance =
                    detail::vector_from_json(p.at("explained_variance"), m, "center_pca.explained_variance").transpose();
            }
            model.center_pca = std::move(pca);
        }
        if (j.contains("input_scaling") && !j.at("input_scaling").is_null()) {
            const auto& s = j.at("input_scaling");
            model.input_scaling = InputScaling{detail::vector_from_json(s.at("mean"), d, "input_scaling.mean"),
                                               detail::vector_from_json(s.at("scale"), d, "input_scaling.scale")};
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("model: malformed document: ") + e.what());
    }
}

inline void save_model(const CbmapModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_model: cannot open '" + path + "'");
    out << model_to_json(model).dump(2) << '\n';
    if (!out) throw std::runtime_error("save_model: failed writing '" + path + "'");
}

inline CbmapModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_model: cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("load_model: '" + path + "' is not valid JSON: " + e.what());
    }
    return model_from_json(j);
}

}  // namespace cbmap
