// Drives the cbmap executable end to end.

#include "cbmap/cbmap.hpp"
#include "test_helpers.hpp"

#include <catch_amalgamated.hpp>
#include <nlohmann/json.hpp>

#include <sys/wait.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <regex>
#include <set>
#include <sstream>

using namespace cbmap;
namespace fs = std::filesystem;

namespace {

const std::string kCli = CBMAP_CLI_PATH;
const fs::path kData = fs::path(__FILE__).parent_path() / "data";

struct Run {
    int code;
    std::string output;
};

std::string quote(const std::string& s) { return "'" + s + "'"; }

Run run(const std::string& args) {
    const fs::path log = fs::temp_directory_path() / "cbmap_cli_test_output.txt";
    const std::string cmd = quote(kCli) + " " + args + " > " + quote(log.string()) + " 2>&1";
    const int status = std::system(cmd.c_str());
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "cbmap_cli_test" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

LabeledDataset load_labeled(const fs::path& p) {
    CsvOptions opts;
    opts.label_column = "label";
    return load_csv(p.string(), opts);
}

Index nearest_row(const Matrix& centers, const RowVector& p) {
    Index best = 0;
    (centers.rowwise() - p).rowwise().squaredNorm().minCoeff(&best);
    return best;
}

std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) r[idx[i]] = static_cast<double>(i);
    return r;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    const auto ra = ranks(a), rb = ranks(b);
    const double n = static_cast<double>(a.size());
    double d2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d2 += (ra[i] - rb[i]) * (ra[i] - rb[i]);
    return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

}  // namespace

TEST_CASE("generate writes labeled cuboids and a manifest", "[cli]") {
    const auto dir = scratch("generate");
    const auto out = dir / "cuboids.csv";
    const Run r = run("generate cuboids --n-per 1000 --gap 2.0 --seed 7 -o " + quote(out.string()));
    REQUIRE(r.code == 0);
    const auto ds = load_labeled(out);
    CHECK(ds.data.rows() == 4000);
    CHECK(ds.data.cols() == 3);
    CHECK(ds.labels.has_value());
    const auto manifest = nlohmann::json::parse(slurp(out.string() + ".manifest.json"));
    CHECK(manifest["command"] == "generate");
    CHECK(manifest["seed"] == 7);
    CHECK(manifest["outputs"][0] == out.string());
}

TEST_CASE("generate is reproducible and validates names", "[cli]") {
    const auto dir = scratch("generate_det");
    REQUIRE(run("generate s_curve --n 1000 --seed 1 -o " + quote((dir / "a.csv").string())).code == 0);
    REQUIRE(run("generate s_curve --n 1000 --seed 1 -o " + quote((dir / "b.csv").string())).code == 0);
    CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));

    const Run bad = run("generate torus -o " + quote((dir / "c.csv").string()));
    CHECK(bad.code == 2);
    CHECK(bad.output.find("s_curve, swiss_roll, sphere, cuboids") != std::string::npos);
}

TEST_CASE("generated swiss roll survives a reload on-manifold", "[cli]") {
    const auto dir = scratch("generate_swiss");
    const auto out = dir / "swiss.csv";
    REQUIRE(run("generate swiss_roll --n 500 --seed 3 -o " + quote(out.string())).code == 0);
    const auto ds = load_labeled(out);
    for (Index i = 0; i < ds.data.rows(); ++i) {
        const double r = std::hypot(ds.data(i, 0), ds.data(i, 2));
        REQUIRE(r >= 1.5 * std::numbers::pi - 1e-9);
        REQUIRE(r <= 4.5 * std::numbers::pi + 1e-9);
        const double ang = std::atan2(ds.data(i, 2), ds.data(i, 0));
        REQUIRE(std::abs(std::remainder(ang - r, 2.0 * std::numbers::pi)) < 1e-9);
    }
}

TEST_CASE("fit on iris writes all outputs and classifies well", "[cli]") {
    const auto dir = scratch("fit_iris");
    const auto out = dir / "iris_emb.csv";
    const std::string args = "fit " + quote((kData / "iris.csv").string()) + " --label-col species --k 20 --seed 5 -o ";
    const Run r = run(args + quote(out.string()));
    REQUIRE(r.code == 0);
    CHECK(fs::exists(dir / "iris_emb.model.json"));
    CHECK(fs::exists(dir / "iris_emb.loss.csv"));
    CHECK(fs::exists(dir / "iris_emb.csv.manifest.json"));

    CsvOptions opts;
    opts.label_column = "species";
    const auto emb = load_csv(out.string(), opts);
    REQUIRE(emb.data.rows() == 150);
    REQUIRE(emb.data.cols() == 2);
    CHECK(emb.label_names == std::vector<std::string>{"setosa", "versicolor", "virginica"});
    CHECK(knn_accuracy(emb.data, *emb.labels, 3, {0.2, 5}) >= 0.90);

    const auto manifest = nlohmann::json::parse(slurp(out.string() + ".manifest.json"));
    CHECK(manifest["metrics"]["acc"].get<double>() >= 0.90);
    CHECK(manifest["config"]["n_clusters"] == 20);

    const auto second = dir / "iris_emb2.csv";
    REQUIRE(run(args + quote(second.string())).code == 0);
    CHECK(slurp(out) == slurp(second));
}

TEST_CASE("fit without --k is a usage error", "[cli]") {
    const auto dir = scratch("fit_nok");
    const Run r = run("fit " + quote((kData / "iris.csv").string()) + " -o " + quote((dir / "e.csv").string()));
    CHECK(r.code == 2);
    CHECK(r.output.find("--k") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "e.csv"));
}

TEST_CASE("fit accepts --k auto and reports data errors with exit code 1", "[cli]") {
    const auto dir = scratch("fit_auto");
    const auto out = dir / "e.csv";
    REQUIRE(run("fit " + quote((kData / "iris.csv").string()) + " --label-col species --k auto --max-iter 20 -o " + quote(out.string()))
                .code == 0);
    const auto manifest = nlohmann::json::parse(slurp(out.string() + ".manifest.json"));
    CHECK(manifest["config"]["n_clusters"] == 20);

    CHECK(run("fit " + quote((kData / "iris.csv").string()) + " --label-col species --k 500 -o " + quote(out.string())).code == 1);
    CHECK(run("fit /nonexistent.csv --k 5 -o " + quote(out.string())).code == 1);
}

TEST_CASE("transform reproduces the training layout and checks widths and versions", "[cli]") {
    const auto dir = scratch("transform");
    std::mt19937_64 rng(81);
    LabeledDataset blobs;
    blobs.data = testing::two_blobs(150, 3, 8.0, 1.0, rng);
    blobs.column_names = {"a", "b", "c"};
    write_csv(blobs, (dir / "blobs.csv").string());

    REQUIRE(run("fit " + quote((dir / "blobs.csv").string()) + " --k 4 --seed 2 -o " + quote((dir / "fit.csv").string()))
                .code == 0);
    REQUIRE(run("transform " + quote((dir / "fit.model.json").string()) + " " + quote((dir / "blobs.csv").string()) +
                " -o " + quote((dir / "tr.csv").string()))
                .code == 0);

    const auto model = load_model((dir / "fit.model.json").string());
    const auto fitted = load_csv((dir / "fit.csv").string());
    const auto moved = load_csv((dir / "tr.csv").string());
    REQUIRE(moved.data.rows() == 300);
    std::size_t agree = 0;
    for (Index i = 0; i < 300; ++i) {
        agree += nearest_row(model.centers_low, fitted.data.row(i)) == nearest_row(model.centers_low, moved.data.row(i));
    }
    CHECK(agree >= 270);

    LabeledDataset narrow;
    narrow.data = blobs.data.leftCols(2);
    write_csv(narrow, (dir / "narrow.csv").string());
    const Run wide = run("transform " + quote((dir / "fit.model.json").string()) + " " +
                         quote((dir / "narrow.csv").string()) + " -o " + quote((dir / "bad.csv").string()));
    CHECK(wide.code == 1);
    CHECK(wide.output.find("2 columns") != std::string::npos);
    CHECK(wide.output.find("3") != std::string::npos);

    auto j = nlohmann::json::parse(slurp(dir / "fit.model.json"));
    j["version"] = 7;
    std::ofstream(dir / "v7.json") << j.dump();
    const Run old = run("transform " + quote((dir / "v7.json").string()) + " " + quote((dir / "blobs.csv").string()) +
                        " -o " + quote((dir / "bad.csv").string()));
    CHECK(old.code == 1);
    CHECK(old.output.find("expected version 1") != std::string::npos);
}

// The layout stays close to a linear projection and does not unroll the roll.
TEST_CASE("swiss roll train/test pipeline keeps the roll order", "[cli][!mayfail]") {
    const auto dir = scratch("swiss_split");
    const auto full = make_swiss_roll(1250, 0.0, 11);
    LabeledDataset train, test;
    train.data = full.data.topRows(1000);
    test.data = full.data.bottomRows(250);
    write_csv(train, (dir / "train.csv").string());
    write_csv(test, (dir / "test.csv").string());
    REQUIRE(run("fit " + quote((dir / "train.csv").string()) + " --k 20 --seed 1 -o " +
                quote((dir / "train_emb.csv").string()))
                .code == 0);
    REQUIRE(run("transform " + quote((dir / "train_emb.model.json").string()) + " " +
                quote((dir / "test.csv").string()) + " -o " + quote((dir / "test_emb.csv").string()))
                .code == 0);
    const auto emb = load_csv((dir / "test_emb.csv").string());
    std::vector<double> radius, first;
    for (Index i = 0; i < test.data.rows(); ++i) {
        radius.push_back(std::hypot(test.data(i, 0), test.data(i, 2)));
        first.push_back(emb.data(i, 0));
    }
    const double rho = spearman(radius, first);
    INFO("Spearman rho = " << rho);
    CHECK(std::abs(rho) >= 0.8);
}

TEST_CASE("benchmark reports metrics per k and seed", "[cli]") {
    const auto dir = scratch("benchmark");
    REQUIRE(run("generate s_curve --n 1000 --seed 1 -o " + quote((dir / "s.csv").string())).code == 0);
    REQUIRE(run("benchmark " + quote((dir / "s.csv").string()) + " --k 5,20 --seeds 0 -o " +
                quote((dir / "s.json").string()))
                .code == 0);
    const auto rep = nlohmann::json::parse(slurp(dir / "s.json"));
    REQUIRE(rep.size() == 2);
    CHECK(rep[0]["k"] == 5);
    CHECK(rep[1]["k"] == 20);
    CHECK(rep[1]["gs"].get<double>() >= rep[0]["gs"].get<double>() - 0.02);
    CHECK(rep[0]["runtime_seconds"].get<double>() > 0.0);
    CHECK(rep[0].contains("acc"));

    REQUIRE(run("generate cuboids --n-per 1000 --gap 2 --seed 7 -o " + quote((dir / "c.csv").string())).code == 0);
    REQUIRE(run("benchmark " + quote((dir / "c.csv").string()) + " --k 20 --seeds 0 -o " +
                quote((dir / "c.json").string()))
                .code == 0);
    const auto cub = nlohmann::json::parse(slurp(dir / "c.json"));
    CHECK(cub[0]["gs"].get<double>() >= 0.95);
    CHECK(cub[0]["acc"].get<double>() >= 0.99);
}

TEST_CASE("benchmark runtime grows at most linearly-ish with n", "[cli]") {
    const auto dir = scratch("benchmark_scale");
    REQUIRE(run("generate swiss_roll --n 1000 --seed 1 -o " + quote((dir / "a.csv").string())).code == 0);
    REQUIRE(run("generate swiss_roll --n 2000 --seed 1 -o " + quote((dir / "b.csv").string())).code == 0);
    REQUIRE(run("benchmark " + quote((dir / "a.csv").string()) + " --k 20 --seeds 0 -o " +
                quote((dir / "a.json").string()))
                .code == 0);
    REQUIRE(run("benchmark " + quote((dir / "b.csv").string()) + " --k 20 --seeds 0 -o " +
                quote((dir / "b.json").string()))
                .code == 0);
    const double ta = nlohmann::json::parse(slurp(dir / "a.json"))[0]["runtime_seconds"].get<double>();
    const double tb = nlohmann::json::parse(slurp(dir / "b.json"))[0]["runtime_seconds"].get<double>();
    INFO("n=1000: " << ta << " s, n=2000: " << tb << " s");
    CHECK(tb <= 4.0 * ta);
}

TEST_CASE("plot draws one colour per label and refuses empty input", "[cli]") {
    const auto dir = scratch("plot");
    REQUIRE(run("generate cuboids --n-per 100 --gap 2 --seed 7 -o " + quote((dir / "c.csv").string())).code == 0);
    REQUIRE(run("fit " + quote((dir / "c.csv").string()) + " --k 8 --max-iter 50 -o " + quote((dir / "e.csv").string()))
                .code == 0);
    REQUIRE(run("plot " + quote((dir / "e.csv").string()) + " -o " + quote((dir / "e.svg").string())).code == 0);
    const std::string svg = slurp(dir / "e.svg");
    std::set<std::string> fills;
    const std::regex fill(R"(fill="(#[0-9A-Fa-f]{6})\")");
    for (auto it = std::sregex_iterator(svg.begin(), svg.end(), fill); it != std::sregex_iterator(); ++it) {
        fills.insert((*it)[1]);
    }
    CHECK(fills.size() == 4);

    std::ofstream(dir / "empty.csv") << "dim0,dim1\n";
    const Run r = run("plot " + quote((dir / "empty.csv").string()) + " -o " + quote((dir / "none.svg").string()));
    CHECK(r.code == 1);
    CHECK_FALSE(fs::exists(dir / "none.svg"));

    REQUIRE(run("fit " + quote((dir / "c.csv").string()) + " --k 8 --dim 1 --max-iter 5 -o " +
                quote((dir / "e1.csv").string()))
                .code == 0);
    const Run one = run("plot " + quote((dir / "e1.csv").string()) + " -o " + quote((dir / "e1.svg").string()));
    CHECK(one.code == 1);
    CHECK(one.output.find("2-D") != std::string::npos);
}

TEST_CASE("a manifest alone replays its run", "[cli]") {
    const auto dir = scratch("replay");
    REQUIRE(run("generate s_curve --n 400 --seed 9 -o " + quote((dir / "s.csv").string())).code == 0);
    const auto out = dir / "s_emb.csv";
    REQUIRE(run("fit " + quote((dir / "s.csv").string()) + " --k 10 --max-iter 100 --seed 4 -o " + quote(out.string()))
                .code == 0);
    const std::string before = slurp(out);
    const std::string model_before = slurp(dir / "s_emb.model.json");
    const auto manifest = nlohmann::json::parse(slurp(out.string() + ".manifest.json"));
    fs::remove(out);

    std::string args;
    const auto argv = manifest["argv"].get<std::vector<std::string>>();
    for (std::size_t i = 1; i < argv.size(); ++i) args += quote(argv[i]) + " ";
    REQUIRE(run(args).code == 0);
    CHECK(slurp(out) == before);
    CHECK(slurp(dir / "s_emb.model.json") == model_before);
}
