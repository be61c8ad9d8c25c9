#pragma once

// Toy manifolds (S-curve, Swiss roll, severed sphere, cuboids) and plain
// CSV input/output.

#include "cbmap/kmeans.hpp"
#include "cbmap/linalg.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace cbmap {

struct LabeledDataset {
    Matrix data;
    std::optional<Labels> labels;
    std::string name;
    std::vector<std::string> column_names;  // one per data column
    std::vector<std::string> label_names;   // code -> original text, when labels came from a file
    std::string label_column = "label";
};

namespace detail {

inline void add_noise(Matrix& data, double noise_std, std::mt19937_64& rng) {
    if (noise_std < 0.0) throw std::invalid_argument("noise_std must be non-negative");
    if (noise_std == 0.0) return;
    std::normal_distribution<double> noise(0.0, noise_std);
    for (Index i = 0; i < data.rows(); ++i) {
        for (Index j = 0; j < data.cols(); ++j) data(i, j) += noise(rng);
    }
}

inline int quantize(double value, double lo, double hi, int bins) {
    const int b = static_cast<int>(std::floor((value - lo) / (hi - lo) * bins));
    return std::clamp(b, 0, bins - 1);
}

inline void require_rows(Index n, const char* what) {
    if (n < 1) throw std::invalid_argument(std::string(what) + ": need at least one sample");
}

}  // namespace detail

/// x = sin t, y = 2u, z = sign(t)(cos t - 1) with t uniform on (-1.5pi, 1.5pi).
/// Labels are t split into four equal bins.
inline LabeledDataset make_s_curve(Index n, double noise_std, std::uint64_t seed) {
    detail::require_rows(n, "make_s_curve");
    constexpr double pi = std::numbers::pi;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    LabeledDataset ds;
    ds.name = "s_curve";
    ds.column_names = {"x", "y", "z"};
    ds.data.resize(n, 3);
    Labels labels(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        const double t = 3.0 * pi * (unit(rng) - 0.5);
        ds.data(i, 0) = std::sin(t);
        ds.data(i, 1) = 2.0 * unit(rng);
        ds.data(i, 2) = (t < 0.0 ? -1.0 : 1.0) * (std::cos(t) - 1.0);
        labels[static_cast<std::size_t>(i)] = detail::quantize(t, -1.5 * pi, 1.5 * pi, 4);
    }
    detail::add_noise(ds.data, noise_std, rng);
    ds.labels = std::move(labels);
    return ds;
}

/// x = t cos t, y = 21u, z = t sin t with t = 1.5pi(1 + 2u').
inline LabeledDataset make_swiss_roll(Index n, double noise_std, std::uint64_t seed) {
    detail::require_rows(n, "make_swiss_roll");
    constexpr double pi = std::numbers::pi;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    LabeledDataset ds;
    ds.name = "swiss_roll";
    ds.column_names = {"x", "y", "z"};
    ds.data.resize(n, 3);
    Labels labels(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        const double t = 1.5 * pi * (1.0 + 2.0 * unit(rng));
        ds.data(i, 0) = t * std::cos(t);
        ds.data(i, 1) = 21.0 * unit(rng);
        ds.data(i, 2) = t * std::sin(t);
        labels[static_cast<std::size_t>(i)] = detail::quantize(t, 1.5 * pi, 4.5 * pi, 4);
    }
    detail::add_noise(ds.data, noise_std, rng);
    ds.labels = std::move(labels);
    return ds;
}

struct SeveredSphereCut {
    double cap_colatitude = std::numbers::pi / 8.0;         // drop theta below this
    double wedge_longitude = 2.0 * std::numbers::pi * 0.94;  // drop phi above this
};

/// Probability that a (phi, theta) draw survives the cut.
inline double severed_sphere_acceptance(const SeveredSphereCut& cut = {}) {
    constexpr double pi = std::numbers::pi;
    return (1.0 - cut.cap_colatitude / pi) * (cut.wedge_longitude / (2.0 * pi));
}

/// Draws `n` (phi, theta) pairs uniformly and keeps those outside the
/// polar cap and the longitudinal wedge, so the result has fewer than `n`
/// rows on average. Unlabeled.
inline LabeledDataset make_severed_sphere(Index n, std::uint64_t seed, const SeveredSphereCut& cut = {}) {
    detail::require_rows(n, "make_severed_sphere");
    constexpr double pi = std::numbers::pi;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> longitude(0.0, 2.0 * pi);
    std::uniform_real_distribution<double> colatitude(0.0, pi);
    std::vector<RowVector> kept;
    kept.reserve(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        const double phi = longitude(rng);
        const double theta = colatitude(rng);
        if (theta < cut.cap_colatitude || phi > cut.wedge_longitude) continue;
        RowVector p(3);
        p << std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta);
        kept.push_back(p);
    }
    LabeledDataset ds;
    ds.name = "sphere";
    ds.column_names = {"x", "y", "z"};
    ds.data.resize(static_cast<Index>(kept.size()), 3);
    for (std::size_t i = 0; i < kept.size(); ++i) ds.data.row(static_cast<Index>(i)) = kept[i];
    return ds;
}

/// Lower corner and edge lengths of one cuboid.
struct Box {
    RowVector lower;
    RowVector extent;
};

/// Four 2x1x1 boxes on a 2x2 grid in the x-y plane; facing sides are `gap` apart.
/// Label = 2 * row + column.
inline std::vector<Box> cuboid_boxes(double gap) {
    std::vector<Box> boxes;
    for (int row = 0; row < 2; ++row) {
        for (int col = 0; col < 2; ++col) {
            Box b{RowVector(3), RowVector(3)};
            b.extent << 2.0, 1.0, 1.0;
            b.lower << col * (2.0 + gap), row * (1.0 + gap), 0.0;
            boxes.push_back(b);
        }
    }
    return boxes;
}

inline LabeledDataset make_cuboids(Index n_per_cluster, double gap, std::uint64_t seed) {
    if (n_per_cluster < 1) throw std::invalid_argument("make_cuboids: n_per_cluster must be positive");
    if (!(gap > 0.0)) throw std::invalid_argument("make_cuboids: gap must be positive");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto boxes = cuboid_boxes(gap);
    LabeledDataset ds;
    ds.name = "cuboids";
    ds.column_names = {"x", "y", "z"};
    ds.data.resize(4 * n_per_cluster, 3);
    Labels labels(static_cast<std::size_t>(4 * n_per_cluster));
    Index row = 0;
    for (int c = 0; c < 4; ++c) {
        for (Index i = 0; i < n_per_cluster; ++i, ++row) {
            for (Index l = 0; l < 3; ++l) {
                ds.data(row, l) = boxes[static_cast<std::size_t>(c)].lower(l) +
                                  unit(rng) * boxes[static_cast<std::size_t>(c)].extent(l);
            }
            labels[static_cast<std::size_t>(row)] = c;
        }
    }
    ds.labels = std::move(labels);
    return ds;
}

// ---------------------------------------------------------------- CSV

namespace csv {

/// Splits one record into fields, honouring double quotes.
inline std::vector<std::string> split_record(std::string_view line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(ch);
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::optional<double> parse_number(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

inline std::string quote_if_needed(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out.push_back('"');
        out.push_back(ch);
    }
    out.push_back('"');
    return out;
}

inline std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace csv

struct CsvOptions {
    bool has_header = true;
    /// Column name, or zero-based index written as digits.
    std::optional<std::string> label_column;
};

/// Reads a rectangular numeric table. Label values are coded 0, 1, ... in
/// order of first appearance.
inline LabeledDataset load_csv(const std::string& path, const CsvOptions& opts = {}) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_csv: cannot open '" + path + "'");

    LabeledDataset ds;
    ds.name = path;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
        if (csv::trim(line).empty()) continue;
        auto fields = csv::split_record(line);
        if (opts.has_header && header.empty() && rows.empty()) {
            header = std::move(fields);
            continue;
        }
        rows.push_back(std::move(fields));
        line_numbers.push_back(line_no);
    }
    if (rows.empty()) throw std::runtime_error("load_csv: '" + path + "' contains no data rows");

    const std::size_t width = header.empty() ? rows.front().size() : header.size();
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != width) {
            throw std::runtime_error("load_csv: line " + std::to_string(line_numbers[r]) + " has " +
                                     std::to_string(rows[r].size()) + " fields, expected " + std::to_string(width));
        }
    }

    std::optional<std::size_t> label_idx;
    if (opts.label_column) {
        const std::string& want = *opts.label_column;
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (csv::trim(header[c]) == want) label_idx = c;
        }
        if (!label_idx) {
            const bool digits = !want.empty() && std::all_of(want.begin(), want.end(), [](char ch) {
                return ch >= '0' && ch <= '9';
            });
            if (!digits) throw std::runtime_error("load_csv: no column named '" + want + "' in '" + path + "'");
            label_idx = std::stoul(want);
            if (*label_idx >= width) {
                throw std::runtime_error("load_csv: label column index " + want + " out of range for " +
                                         std::to_string(width) + " columns");
            }
        }
    }

    const std::size_t n_features = width - (label_idx ? 1 : 0);
    if (n_features == 0) throw std::runtime_error("load_csv: no feature columns in '" + path + "'");
    ds.data.resize(static_cast<Index>(rows.size()), static_cast<Index>(n_features));
    for (std::size_t c = 0; c < width; ++c) {
        if (label_idx && c == *label_idx) {
            ds.label_column = header.empty() ? std::string("label") : std::string(csv::trim(header[c]));
            continue;
        }
        ds.column_names.push_back(header.empty() ? "x" + std::to_string(ds.column_names.size())
                                                 : std::string(csv::trim(header[c])));
    }

    Labels labels;
    std::map<std::string, int> codes;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        Index col = 0;
        for (std::size_t c = 0; c < width; ++c) {
            if (label_idx && c == *label_idx) {
                const std::string key(csv::trim(rows[r][c]));
                auto [it, inserted] = codes.emplace(key, static_cast<int>(codes.size()));
                if (inserted) ds.label_names.push_back(key);
                labels.push_back(it->second);
                continue;
            }
            const auto v = csv::parse_number(rows[r][c]);
            if (!v) {
                throw std::runtime_error("load_csv: non-numeric value '" + rows[r][c] + "' at line " +
                                         std::to_string(line_numbers[r]) + ", column " + std::to_string(c + 1));
            }
            ds.data(static_cast<Index>(r), col++) = *v;
        }
    }
    if (label_idx) ds.labels = std::move(labels);
    return ds;
}

/// Writes data columns then, if present, the label column. Numbers use 17
/// significant digits.
inline void write_csv(const LabeledDataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_csv: cannot open '" + path + "' for writing");
    for (Index j = 0; j < ds.data.cols(); ++j) {
        if (j > 0) out << ',';
        const auto idx = static_cast<std::size_t>(j);
        out << csv::quote_if_needed(idx < ds.column_names.size() ? ds.column_names[idx] : "x" + std::to_string(j));
    }
    if (ds.labels) out << ',' << csv::quote_if_needed(ds.label_column);
    out << '\n';
    for (Index i = 0; i < ds.data.rows(); ++i) {
        for (Index j = 0; j < ds.data.cols(); ++j) {
            if (j > 0) out << ',';
            out << csv::format_number(ds.data(i, j));
        }
        if (ds.labels) {
            const int code = (*ds.labels)[static_cast<std::size_t>(i)];
            out << ',';
            if (code >= 0 && static_cast<std::size_t>(code) < ds.label_names.size()) {
                out << csv::quote_if_needed(ds.label_names[static_cast<std::size_t>(code)]);
            } else {
                out << code;
            }
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("write_csv: failed writing '" + path + "'");
}

}  // namespace cbmap
