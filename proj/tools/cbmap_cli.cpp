// cbmap command-line front end: generate | fit | transform | benchmark | plot.
//
// Exit codes: 0 success, 1 runtime or data error, 2 usage error.

#include "cbmap/cbmap.hpp"
#include "cbmap/plot.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

bool g_verbose = false;

void log(const std::string& msg) {
    if (g_verbose) std::cerr << "[cbmap] " << msg << '\n';
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string manifest_path(const std::string& output) { return output + ".manifest.json"; }

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

void write_manifest(const std::string& command, const std::vector<std::string>& argv, const json& config,
                    std::uint64_t seed, const std::vector<std::string>& outputs, double elapsed,
                    const json& metrics = nullptr) {
    json m;
    m["command"] = command;
    m["argv"] = argv;
    m["config"] = config;
    m["seed"] = seed;
    m["outputs"] = outputs;
    m["elapsed_s"] = elapsed;
    if (!metrics.is_null()) m["metrics"] = metrics;
    write_text(manifest_path(outputs.front()), m.dump(2) + "\n");
}

/// First line of a CSV split into trimmed field names.
std::vector<std::string> header_fields(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::string line;
    std::getline(in, line);
    std::vector<std::string> out;
    for (auto& f : cbmap::csv::split_record(line)) out.emplace_back(cbmap::csv::trim(f));
    return out;
}

/// Loads a CSV; with no explicit label column, a column named "label" is used if present.
cbmap::LabeledDataset load_input(const std::string& path, bool no_header, const std::string& label_col) {
    cbmap::CsvOptions opts;
    opts.has_header = !no_header;
    if (!label_col.empty()) {
        opts.label_column = label_col;
    } else if (opts.has_header) {
        const auto header = header_fields(path);
        if (std::find(header.begin(), header.end(), "label") != header.end()) opts.label_column = "label";
    }
    auto ds = cbmap::load_csv(path, opts);
    log("loaded " + path + " (" + cbmap::shape_string(ds.data) + (ds.labels ? ", labeled" : "") + ")");
    return ds;
}

cbmap::LabeledDataset as_embedding(const cbmap::Matrix& y, const cbmap::LabeledDataset& source) {
    cbmap::LabeledDataset out;
    out.data = y;
    for (cbmap::Index j = 0; j < y.cols(); ++j) out.column_names.push_back("dim" + std::to_string(j));
    out.labels = source.labels;
    out.label_names = source.label_names;
    out.label_column = source.label_column;
    return out;
}

std::string replace_extension(const std::string& path, const std::string& suffix) {
    fs::path p(path);
    p.replace_extension();
    return p.string() + suffix;
}

json metrics_json(const cbmap::MetricReport& r) {
    json j;
    j["gs"] = r.global_score;
    j["acc"] = r.knn_accuracy ? json(*r.knn_accuracy) : json(nullptr);
    j["runtime_seconds"] = r.runtime_seconds;
    return j;
}

cbmap::MetricReport evaluate(const cbmap::Matrix& x, const cbmap::Matrix& y, const std::optional<cbmap::Labels>& labels,
                             std::uint64_t seed, double runtime) {
    cbmap::MetricReport r;
    r.runtime_seconds = runtime;
    r.global_score = cbmap::global_score(x, y);
    if (labels) r.knn_accuracy = cbmap::knn_accuracy(y, *labels, 3, {0.2, seed});
    return r;
}

// ------------------------------------------------------------ options

struct FitOptions {
    std::string k = "";
    cbmap::Index dim = 2;
    int max_iter = 500;
    double lr = 0.1;
    std::string init = "pca";
    std::string mode = "auto";
    bool standardize = false;
    std::string label_col;
    bool no_header = false;
};

void add_fit_options(CLI::App* cmd, FitOptions& o, bool with_k) {
    if (with_k) cmd->add_option("--k", o.k, "Number of clusters (integer or 'auto')")->required();
    cmd->add_option("--dim", o.dim, "Embedding dimension")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--max-iter", o.max_iter, "Optimization iterations")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--lr", o.lr, "Adam learning rate")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--init", o.init, "Low-dimensional center initialization")
        ->capture_default_str()
        ->check(CLI::IsMember({"pca", "random"}));
    cmd->add_option("--kmeans-mode", o.mode, "k-means variant")
        ->capture_default_str()
        ->check(CLI::IsMember({"auto", "full", "mini"}));
    cmd->add_flag("--standardize", o.standardize, "z-score input columns before clustering");
    cmd->add_option("--label-col", o.label_col, "Label column (name or zero-based index)");
    cmd->add_flag("--no-header", o.no_header, "Input CSV has no header row");
}

cbmap::Index resolve_k(const std::string& k, cbmap::Index n_rows) {
    if (k == "auto") return n_rows < 5000 ? 20 : 40;
    try {
        std::size_t used = 0;
        const long long v = std::stoll(k, &used);
        if (used != k.size()) throw std::invalid_argument(k);
        return static_cast<cbmap::Index>(v);
    } catch (const std::exception&) {
        throw UsageError("--k expects an integer or 'auto', got '" + k + "'");
    }
}

cbmap::CbmapConfig make_config(const FitOptions& o, cbmap::Index k, std::uint64_t seed) {
    cbmap::CbmapConfig cfg;
    cfg.n_clusters = k;
    cfg.out_dim = o.dim;
    cfg.max_iter = o.max_iter;
    cfg.learning_rate = o.lr;
    cfg.center_init = o.init == "random" ? cbmap::CenterInit::random : cbmap::CenterInit::pca;
    cfg.standardize = o.standardize;
    cfg.seed = seed;
    cfg.clustering.seed = seed;
    cfg.clustering.mode = o.mode == "full"   ? cbmap::KmeansMode::full_batch
                          : o.mode == "mini" ? cbmap::KmeansMode::mini_batch
                                             : cbmap::KmeansMode::automatic;
    return cfg;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

// ------------------------------------------------------------ commands

struct GenerateOptions {
    std::string dataset;
    cbmap::Index n = 1000;
    cbmap::Index n_per = 1000;
    double gap = 2.0;
    double noise = 0.0;
};

int cmd_generate(const GenerateOptions& o, std::uint64_t seed, const std::string& out,
                 const std::vector<std::string>& argv) {
    const auto start = Clock::now();
    cbmap::LabeledDataset ds;
    json config = {{"dataset", o.dataset}};
    if (o.dataset == "s_curve") {
        ds = cbmap::make_s_curve(o.n, o.noise, seed);
        config["n"] = o.n;
        config["noise"] = o.noise;
    } else if (o.dataset == "swiss_roll") {
        ds = cbmap::make_swiss_roll(o.n, o.noise, seed);
        config["n"] = o.n;
        config["noise"] = o.noise;
    } else if (o.dataset == "sphere") {
        ds = cbmap::make_severed_sphere(o.n, seed);
        config["n"] = o.n;
    } else if (o.dataset == "cuboids") {
        ds = cbmap::make_cuboids(o.n_per, o.gap, seed);
        config["n_per"] = o.n_per;
        config["gap"] = o.gap;
    } else {
        throw UsageError("unknown dataset '" + o.dataset + "'; valid names: s_curve, swiss_roll, sphere, cuboids");
    }
    cbmap::write_csv(ds, out);
    log("wrote " + out + " (" + cbmap::shape_string(ds.data) + ")");
    write_manifest("generate", argv, config, seed, {out}, seconds_since(start));
    return 0;
}

int cmd_fit(const std::string& input, const FitOptions& o, std::uint64_t seed, const std::string& out,
            std::string model_path, std::string loss_path, const std::vector<std::string>& argv) {
    const auto start = Clock::now();
    const auto ds = load_input(input, o.no_header, o.label_col);
    const auto cfg = make_config(o, resolve_k(o.k, ds.data.rows()), seed);
    log("fitting with k = " + std::to_string(cfg.n_clusters));

    const auto fit_start = Clock::now();
    const auto result = cbmap::fit(ds.data, cfg);
    const double fit_seconds = seconds_since(fit_start);
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';

    if (model_path.empty()) model_path = replace_extension(out, ".model.json");
    if (loss_path.empty()) loss_path = replace_extension(out, ".loss.csv");

    cbmap::write_csv(as_embedding(result.embedding, ds), out);
    cbmap::save_model(result.model, model_path);
    std::ostringstream loss;
    loss << "iteration,loss\n";
    for (std::size_t i = 0; i < result.loss_history.size(); ++i) {
        loss << (i + 1) << ',' << cbmap::csv::format_number(result.loss_history[i]) << '\n';
    }
    write_text(loss_path, loss.str());

    json metrics = nullptr;
    try {
        metrics = metrics_json(evaluate(ds.data, result.embedding, ds.labels, seed, fit_seconds));
    } catch (const std::invalid_argument& e) {
        log(std::string("metrics skipped: ") + e.what());
    }
    if (g_verbose && !metrics.is_null()) log("metrics " + metrics.dump());
    write_manifest("fit", argv, cbmap::config_to_json(result.model.config), seed, {out, model_path, loss_path},
                   seconds_since(start), metrics);
    return 0;
}

int cmd_transform(const std::string& model_path, const std::string& input, int iters,
                  std::optional<std::uint64_t> seed, const std::string& label_col, bool no_header,
                  const std::string& out, const std::vector<std::string>& argv) {
    const auto start = Clock::now();
    const auto model = cbmap::load_model(model_path);
    const auto ds = load_input(input, no_header, label_col);
    cbmap::TransformOptions opts;
    opts.iters = iters;
    opts.seed = seed;
    const auto y = cbmap::transform(model, ds.data, opts);
    cbmap::write_csv(as_embedding(y, ds), out);
    const std::uint64_t used_seed = seed.value_or(model.config.seed);
    write_manifest("transform", argv, {{"model", model_path}, {"iters", iters}}, used_seed, {out},
                   seconds_since(start));
    return 0;
}

int cmd_benchmark(const std::string& input, const FitOptions& o, const std::string& k_list,
                  const std::string& seed_list, const std::string& out, const std::vector<std::string>& argv) {
    const auto start = Clock::now();
    const auto ds = load_input(input, o.no_header, o.label_col);
    json reports = json::array();
    const auto ks = split_list(k_list);
    const auto seeds = split_list(seed_list);
    if (ks.empty() || seeds.empty()) throw UsageError("--k and --seeds need at least one value each");
    for (const auto& k_text : ks) {
        for (const auto& seed_text : seeds) {
            std::uint64_t seed = 0;
            try {
                seed = std::stoull(seed_text);
            } catch (const std::exception&) {
                throw UsageError("--seeds expects integers, got '" + seed_text + "'");
            }
            const auto cfg = make_config(o, resolve_k(k_text, ds.data.rows()), seed);
            const auto t0 = Clock::now();
            const auto result = cbmap::fit(ds.data, cfg);
            const double elapsed = seconds_since(t0);
            json entry = metrics_json(evaluate(ds.data, result.embedding, ds.labels, seed, elapsed));
            entry["k"] = cfg.n_clusters;
            entry["seed"] = seed;
            entry["n"] = ds.data.rows();
            entry["final_loss"] = result.loss_history.back();
            log("k=" + k_text + " seed=" + seed_text + " -> " + entry.dump());
            reports.push_back(std::move(entry));
        }
    }
    write_text(out, reports.dump(2) + "\n");
    write_manifest("benchmark", argv, {{"k", k_list}, {"seeds", seed_list}, {"fit", config_to_json(make_config(o, 0, 0))}},
                   0, {out}, seconds_since(start));
    return 0;
}

int cmd_plot(const std::string& input, const std::string& label_col, bool no_header, const std::string& out,
             const std::vector<std::string>& argv) {
    const auto start = Clock::now();
    const auto ds = load_input(input, no_header, label_col);
    const std::string svg = cbmap::scatter_svg(ds.data, ds.labels, fs::path(input).filename().string());
    write_text(out, svg);
    write_manifest("plot", argv, {{"input", input}}, 0, {out}, seconds_since(start));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::string> args(argv, argv + argc);

    CLI::App app{"cbmap: clustering-based manifold approximation and projection"};
    app.require_subcommand(1);
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string out;
    app.add_flag("-v,--verbose", g_verbose, "Progress messages on stderr");

    auto common = [&](CLI::App* cmd, bool out_required = true) {
        cmd->add_option_function<std::uint64_t>(
            "--seed",
            [&](const std::uint64_t& s) {
                seed = s;
                seed_given = true;
            },
            "Random seed (default 0)");
        auto* o = cmd->add_option("-o,--out", out, "Output path");
        if (out_required) o->required();
        cmd->add_flag("-v,--verbose", g_verbose, "Progress messages on stderr");
    };

    GenerateOptions gen;
    auto* generate = app.add_subcommand("generate", "Write a toy dataset as CSV");
    generate->add_option("dataset", gen.dataset, "s_curve | swiss_roll | sphere | cuboids")->required();
    generate->add_option("--n", gen.n, "Number of samples (draws for sphere)")->capture_default_str();
    generate->add_option("--n-per", gen.n_per, "Points per cuboid")->capture_default_str();
    generate->add_option("--gap", gen.gap, "Distance between neighbouring cuboids")->capture_default_str();
    generate->add_option("--noise", gen.noise, "Gaussian noise std (s_curve, swiss_roll)")->capture_default_str();
    common(generate);

    FitOptions fit_opts;
    std::string fit_input, model_path, loss_path;
    auto* fit = app.add_subcommand("fit", "Fit an embedding");
    fit->add_option("input", fit_input, "Input CSV")->required();
    add_fit_options(fit, fit_opts, true);
    fit->add_option("--model", model_path, "Model JSON path (default <out>.model.json)");
    fit->add_option("--loss", loss_path, "Loss history CSV path (default <out>.loss.csv)");
    common(fit);

    std::string tr_model, tr_input, tr_label;
    int tr_iters = 300;
    bool tr_no_header = false;
    auto* transform = app.add_subcommand("transform", "Embed new rows with a fitted model");
    transform->add_option("model", tr_model, "Model JSON")->required();
    transform->add_option("input", tr_input, "Input CSV")->required();
    transform->add_option("--iters", tr_iters, "Optimization iterations")->capture_default_str();
    transform->add_option("--label-col", tr_label, "Label column (name or zero-based index)");
    transform->add_flag("--no-header", tr_no_header, "Input CSV has no header row");
    common(transform);

    FitOptions bench_opts;
    std::string bench_input, bench_k = "5,10,20", bench_seeds = "0";
    auto* benchmark = app.add_subcommand("benchmark", "Fit over several k and seeds and report metrics");
    benchmark->add_option("input", bench_input, "Input CSV")->required();
    add_fit_options(benchmark, bench_opts, false);
    benchmark->add_option("--k", bench_k, "Comma-separated cluster counts")->capture_default_str();
    benchmark->add_option("--seeds", bench_seeds, "Comma-separated seeds")->capture_default_str();
    common(benchmark);

    std::string plot_input, plot_label;
    bool plot_no_header = false;
    auto* plot = app.add_subcommand("plot", "Render a 2-D embedding CSV as SVG");
    plot->add_option("input", plot_input, "Embedding CSV")->required();
    plot->add_option("--label-col", plot_label, "Label column (name or zero-based index)");
    plot->add_flag("--no-header", plot_no_header, "Input CSV has no header row");
    common(plot);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*generate) return cmd_generate(gen, seed, out, args);
        if (*fit) return cmd_fit(fit_input, fit_opts, seed, out, model_path, loss_path, args);
        if (*transform) {
            return cmd_transform(tr_model, tr_input, tr_iters, seed_given ? std::optional(seed) : std::nullopt,
                                 tr_label, tr_no_header, out, args);
        }
        if (*benchmark) return cmd_benchmark(bench_input, bench_opts, bench_k, bench_seeds, out, args);
        if (*plot) return cmd_plot(plot_input, plot_label, plot_no_header, out, args);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}
