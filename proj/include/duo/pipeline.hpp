#pragma once

/// @file pipeline.hpp
/// @brief Dataset and front CSV I/O, cluster-then-tune composition, and
/// experiment orchestration with deterministic CSV/JSON reports.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "duo/core.hpp"
#include "duo/indicators.hpp"
#include "duo/miners.hpp"
#include "duo/optimizers.hpp"
#include "duo/problems.hpp"
#include "duo/star.hpp"
#include "duo/tuning.hpp"

namespace duo {

/// Bad configuration or input files (CLI exit status 1).
class ConfigError : public ContractError {
  public:
    using ContractError::ContractError;
};

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// Shortest decimal text that parses back to the same double.
inline std::string format_number(double v) {
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::optional<double> parse_number(std::string_view s) {
    if (s.empty())
        return std::nullopt;
    if (s == "inf")
        return std::numeric_limits<double>::infinity();
    if (s == "-inf")
        return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const char* first = s.data();
    if (*first == '+')
        ++first;
    const auto res = std::from_chars(first, s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        return std::nullopt;
    return v;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur.push_back('"');
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cur.push_back(ch);
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    if (quoted)
        throw ContractError("csv line " + std::to_string(line_no) + ": unterminated quote");
    out.push_back(std::move(cur));
    return out;
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"')
            out.push_back('"');
        out.push_back(ch);
    }
    out.push_back('"');
    return out;
}

inline std::string cell_text(const Cell& c) {
    if (const double* d = std::get_if<double>(&c))
        return format_number(*d);
    return std::get<std::string>(c);
}

inline std::vector<std::vector<std::string>> read_csv(std::istream& in) {
    std::vector<std::vector<std::string>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        rows.push_back(split_csv_line(line, line_no));
        if (rows.size() > 1 && rows.back().size() != rows.front().size())
            throw ContractError("csv line " + std::to_string(line_no) + ": expected " +
                                std::to_string(rows.front().size()) + " fields, got " +
                                std::to_string(rows.back().size()));
    }
    if (rows.empty())
        throw ContractError("csv: missing header row");
    return rows;
}

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open '" + path + "' for reading");
    return in;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out)
        throw std::runtime_error("write failed for '" + path.string() + "'");
}

} // namespace detail

/// Header prefixes: `<` minimized goal, `>` maximized goal, `!` class column;
/// anything else is a feature. Columns whose every cell parses as a number
/// are numeric; the class column is always categorical. Goal columns must be
/// numeric.
inline Dataset parse_dataset(std::istream& in) {
    const auto rows = detail::read_csv(in);
    const auto& header = rows.front();
    Dataset data;
    std::size_t class_columns = 0;
    for (std::size_t c = 0; c < header.size(); ++c) {
        std::string name = header[c];
        ColumnRole role = ColumnRole::feature;
        if (!name.empty() && (name[0] == '<' || name[0] == '>' || name[0] == '!')) {
            role = name[0] == '<' ? ColumnRole::minimize
                   : name[0] == '>' ? ColumnRole::maximize
                                    : ColumnRole::label;
            name.erase(0, 1);
        }
        require(!name.empty(), "csv: column " + std::to_string(c + 1) + " has an empty name");
        if (role == ColumnRole::label)
            require(++class_columns == 1, "csv: more than one class column");

        std::vector<std::string> text;
        Vec numbers;
        bool numeric = role != ColumnRole::label;
        for (std::size_t r = 1; r < rows.size(); ++r) {
            text.push_back(rows[r][c]);
            if (numeric) {
                if (auto v = parse_number(rows[r][c]))
                    numbers.push_back(*v);
                else
                    numeric = false;
            }
        }
        if ((role == ColumnRole::minimize || role == ColumnRole::maximize) && !numeric)
            throw ContractError("csv: goal column '" + name + "' has non-numeric cells (unknown column type)");
        if (numeric)
            data.add_numeric(name, std::move(numbers), role);
        else
            data.add_categorical(name, std::move(text), role);
    }
    return data;
}

inline Dataset load_dataset(const std::string& path) {
    auto in = detail::open_input(path);
    try {
        return parse_dataset(in);
    } catch (const ContractError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

inline std::string format_dataset(const Dataset& data) {
    std::ostringstream out;
    for (std::size_t c = 0; c < data.cols(); ++c) {
        const Column& col = data.column(c);
        std::string prefix;
        if (col.role == ColumnRole::minimize)
            prefix = "<";
        else if (col.role == ColumnRole::maximize)
            prefix = ">";
        else if (col.role == ColumnRole::label)
            prefix = "!";
        out << (c ? "," : "") << detail::csv_field(prefix + col.name);
    }
    out << '\n';
    for (std::size_t r = 0; r < data.rows(); ++r) {
        for (std::size_t c = 0; c < data.cols(); ++c)
            out << (c ? "," : "") << detail::csv_field(detail::cell_text(data.column(c).cell(r)));
        out << '\n';
    }
    return out.str();
}

inline void save_dataset(const std::string& path, const Dataset& data) {
    detail::write_file(path, format_dataset(data));
}

/// One objective vector per row; headers carry `<`/`>` directions (unprefixed
/// columns are minimized).
inline std::string format_front(const Front& front, const std::vector<std::string>& names = {}) {
    std::ostringstream out;
    for (std::size_t g = 0; g < front.goals(); ++g) {
        const std::string name = g < names.size() ? names[g] : "f" + std::to_string(g + 1);
        out << (g ? "," : "") << (front.spec.weight(g) > 0 ? ">" : "<") << detail::csv_field(name);
    }
    out << '\n';
    for (const auto& p : front.points) {
        for (std::size_t g = 0; g < p.size(); ++g)
            out << (g ? "," : "") << format_number(p[g]);
        out << '\n';
    }
    return out.str();
}

inline void save_front(const std::string& path, const Front& front,
                       const std::vector<std::string>& names = {}) {
    detail::write_file(path, format_front(front, names));
}

inline Front parse_front(std::istream& in) {
    const auto rows = detail::read_csv(in);
    std::vector<int> weights;
    for (const auto& h : rows.front())
        weights.push_back(!h.empty() && h[0] == '>' ? 1 : -1);
    std::vector<Vec> points;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        Vec p;
        for (const auto& cell : rows[r]) {
            auto v = parse_number(cell);
            require(v.has_value(), "front csv: non-numeric cell '" + cell + "'");
            p.push_back(*v);
        }
        points.push_back(std::move(p));
    }
    return Front(std::move(points), ObjectiveSpec(std::move(weights)));
}

inline Front load_front(const std::string& path) {
    auto in = detail::open_input(path);
    try {
        return parse_front(in);
    } catch (const ContractError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Cluster-then-tune
// ---------------------------------------------------------------------------

struct ClusterOutcome {
    std::size_t cluster = 0;            // k-means cluster id (after merging)
    std::vector<std::size_t> rows;      // dataset rows in this cluster
    TuningResult tuning;
};

struct ClusterMerge {
    std::size_t from = 0;
    std::size_t into = 0;
    std::size_t rows = 0;
};

struct ClusterReport {
    std::vector<ClusterOutcome> clusters;
    std::vector<ClusterMerge> merges;
    std::size_t pooled_best = 0;        // index into clusters
    double pooled_mean = 0.0;           // row-weighted mean of tuned fitness
    std::size_t total_evals = 0;
};

/// True when stratified cross-validation with `folds` folds can run on `rows`.
inline bool cv_viable(const Dataset& data, std::span<const std::size_t> rows, std::size_t folds) {
    if (rows.size() < folds)
        return false;
    if (auto cls = data.class_column()) {
        std::map<std::string, std::size_t> counts;
        for (std::size_t r : rows)
            ++counts[data.column(*cls).labels[r]];
        for (const auto& [label, n] : counts)
            if (n < folds)
                return false;
    }
    return true;
}

/// Partitions rows with k-means (seeded by `seed`) over the feature columns,
/// merges every cluster too small for cross-validation into the cluster with
/// the nearest centroid, then tunes each remaining cluster independently;
/// cluster i (in id order) is tuned with derive_seed(seed, i).
inline ClusterReport cluster_then_optimize(const Dataset& data, std::size_t k, const TuningSpec& spec,
                                           const DeParams& de, std::uint64_t seed) {
    require(k >= 1, "cluster_then_optimize: k must be >= 1");
    require(k <= data.rows(), "cluster_then_optimize: k exceeds the row count");
    const KMeansResult km = kmeans(data, k, seed);

    std::vector<std::vector<std::size_t>> members(k);
    for (std::size_t r = 0; r < km.assignments.size(); ++r)
        members[km.assignments[r]].push_back(r);
    std::vector<Vec> centroids = km.centroids;
    std::vector<bool> alive(k, true);
    for (std::size_t c = 0; c < k; ++c)
        alive[c] = !members[c].empty();

    ClusterReport report;
    while (true) {
        std::optional<std::size_t> weakest;
        std::size_t live = 0;
        for (std::size_t c = 0; c < k; ++c) {
            if (!alive[c])
                continue;
            ++live;
            if (!cv_viable(data, members[c], spec.folds) &&
                (!weakest || members[c].size() < members[*weakest].size()))
                weakest = c;
        }
        if (!weakest || live <= 1)
            break;
        const std::size_t from = *weakest;
        std::optional<std::size_t> into;
        double best_d = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            if (!alive[c] || c == from)
                continue;
            const double d = squared_distance(centroids[from], centroids[c]);
            if (!into || d < best_d) {
                into = c;
                best_d = d;
            }
        }
        const double nf = static_cast<double>(members[from].size());
        const double ni = static_cast<double>(members[*into].size());
        for (std::size_t j = 0; j < centroids[*into].size(); ++j)
            centroids[*into][j] = (centroids[*into][j] * ni + centroids[from][j] * nf) / (ni + nf);
        report.merges.push_back({from, *into, members[from].size()});
        members[*into].insert(members[*into].end(), members[from].begin(), members[from].end());
        std::sort(members[*into].begin(), members[*into].end());
        members[from].clear();
        alive[from] = false;
    }

    double weighted = 0.0;
    std::size_t i = 0;
    for (std::size_t c = 0; c < k; ++c) {
        if (!alive[c])
            continue;
        ClusterOutcome out;
        out.cluster = c;
        out.rows = members[c];
        out.tuning = de_tune(spec, data.subset(out.rows), de, derive_seed(seed, i++));
        report.total_evals += out.tuning.evaluations;
        weighted += out.tuning.best_fitness * static_cast<double>(out.rows.size());
        report.clusters.push_back(std::move(out));
    }
    for (std::size_t j = 1; j < report.clusters.size(); ++j)
        if (better_fitness(spec.metric, report.clusters[j].tuning.best_fitness,
                           report.clusters[report.pooled_best].tuning.best_fitness))
            report.pooled_best = j;
    report.pooled_mean = weighted / static_cast<double>(data.rows());
    return report;
}

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

/// Flat key=value settings. Every key has a default; unknown keys are errors.
class ExperimentConfig {
  public:
    static const std::map<std::string, std::string>& defaults() {
        static const std::map<std::string, std::string> d{
            {"command", "optimize"},
            {"problem", "sphere(d=5)"},
            {"dataset", ""},
            {"optimizer", "de"},
            {"seed", "1"},
            {"repeats", "1"},
            {"out", "."},
            {"format", "both"},
            {"de.np", "20"},
            {"de.f", "0.75"},
            {"de.cr", "0.3"},
            {"de.generations", ""},
            {"ga.np", "100"},
            {"ga.generations", "100"},
            {"ga.mutation", ""},
            {"sway.n0", "10000"},
            {"sway.stop", "20"},
            {"flash.init", "10"},
            {"flash.budget", "40"},
            {"flash.pool", "1000"},
            {"tune.learner", "cart"},
            {"tune.metric", "recall"},
            {"tune.method", "de"},
            {"tune.folds", "5"},
            {"tune.cv_repeats", "1"},
            {"tune.np", "10"},
            {"tune.generations", "5"},
            {"tune.grid_steps", "3"},
            {"star.samples", "1000"},
            {"star.ratio", "0.1"},
            {"star.n", "2"},
            {"star.bins", "7"},
            {"star.rungs", "3"},
            {"pipeline.k", "3"},
        };
        return d;
    }

    /// Lines of `key = value`; blank lines and `#` comments are ignored.
    static ExperimentConfig parse(std::istream& in) {
        ExperimentConfig cfg;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (const auto hash = line.find('#'); hash != std::string::npos)
                line.erase(hash);
            line = trim(line);
            if (line.empty())
                continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
            cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        }
        return cfg;
    }

    static ExperimentConfig from_file(const std::string& path) {
        auto in = detail::open_input(path);
        return parse(in);
    }

    void set(const std::string& key, const std::string& value) {
        if (!defaults().count(key))
            throw ConfigError("unknown config key '" + key + "'");
        values_[key] = value;
    }

    std::string get(const std::string& key) const {
        if (auto it = values_.find(key); it != values_.end())
            return it->second;
        if (auto it = defaults().find(key); it != defaults().end())
            return it->second;
        throw ConfigError("unknown config key '" + key + "'");
    }

    bool has_value(const std::string& key) const { return !get(key).empty(); }

    double number(const std::string& key) const {
        auto v = parse_number(get(key));
        if (!v || !std::isfinite(*v))
            throw ConfigError("config key '" + key + "' needs a number, got '" + get(key) + "'");
        return *v;
    }

    std::uint64_t integer(const std::string& key) const {
        const std::string s = get(key);
        std::uint64_t v = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size())
            throw ConfigError("config key '" + key + "' needs a non-negative integer, got '" + s + "'");
        return v;
    }

    std::size_t count(const std::string& key) const { return static_cast<std::size_t>(integer(key)); }

    /// Every key with its effective value.
    std::map<std::string, std::string> resolved() const {
        std::map<std::string, std::string> r = defaults();
        for (const auto& [k, v] : values_)
            r[k] = v;
        return r;
    }

    /// FNV-1a over the resolved settings, excluding output location and format.
    std::string hash() const {
        std::uint64_t h = 14695981039346656037ull;
        for (const auto& [k, v] : resolved()) {
            if (k == "out" || k == "format")
                continue;
            for (char ch : k + "=" + v + "\n") {
                h ^= static_cast<unsigned char>(ch);
                h *= 1099511628211ull;
            }
        }
        std::ostringstream s;
        s << std::hex << std::setw(16) << std::setfill('0') << h;
        return s.str();
    }

  private:
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    }

    std::map<std::string, std::string> values_;
};

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<Cell>> rows;

    std::string csv() const {
        std::ostringstream out;
        for (std::size_t c = 0; c < header.size(); ++c)
            out << (c ? "," : "") << detail::csv_field(header[c]);
        out << '\n';
        for (const auto& row : rows) {
            for (std::size_t c = 0; c < row.size(); ++c)
                out << (c ? "," : "") << detail::csv_field(detail::cell_text(row[c]));
            out << '\n';
        }
        return out.str();
    }

    nlohmann::ordered_json json() const {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& row : rows) {
            nlohmann::ordered_json o;
            for (std::size_t c = 0; c < row.size(); ++c) {
                if (const double* d = std::get_if<double>(&row[c]))
                    o[header[c]] = std::isfinite(*d) ? nlohmann::ordered_json(*d)
                                                     : nlohmann::ordered_json(format_number(*d));
                else
                    o[header[c]] = std::get<std::string>(row[c]);
            }
            arr.push_back(std::move(o));
        }
        return arr;
    }
};

struct RepeatRecord {
    std::size_t repeat = 0;
    std::uint64_t seed = 0;
    Vec champion;
    std::size_t evals = 0;          // as reported by the algorithm
    std::size_t counter_evals = 0;  // problem-counter delta
    double wall_seconds = 0.0;
    std::vector<std::pair<std::string, Cell>> extra;
};

struct RunReport {
    std::string command;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> config;
    std::vector<std::string> goal_names;
    std::vector<RepeatRecord> repeats;
    Vec median_champion;
    double median_evals = 0.0;
    std::size_t total_evals = 0;
    std::size_t total_counter_evals = 0;
    std::map<std::string, Table> tables;

    /// One row per repeat (wall time excluded).
    Table repeat_table() const {
        Table t;
        t.header = {"repeat", "seed"};
        for (const auto& g : goal_names)
            t.header.push_back(g);
        t.header.insert(t.header.end(), {"evals", "counter_evals"});
        if (!repeats.empty())
            for (const auto& [k, v] : repeats.front().extra)
                t.header.push_back(k);
        for (const auto& r : repeats) {
            std::vector<Cell> row{static_cast<double>(r.repeat), std::to_string(r.seed)};
            for (double v : r.champion)
                row.emplace_back(v);
            row.emplace_back(static_cast<double>(r.evals));
            row.emplace_back(static_cast<double>(r.counter_evals));
            for (const auto& [k, v] : r.extra)
                row.push_back(v);
            t.rows.push_back(std::move(row));
        }
        return t;
    }

    std::string csv() const { return repeat_table().csv(); }

    std::string json() const {
        nlohmann::ordered_json j;
        j["command"] = command;
        j["config_hash"] = config_hash;
        j["seed"] = seed;
        j["config"] = config;
        j["goals"] = goal_names;
        j["repeats"] = repeat_table().json();
        nlohmann::ordered_json med;
        for (std::size_t g = 0; g < goal_names.size() && g < median_champion.size(); ++g)
            med[goal_names[g]] = median_champion[g];
        j["median_champion"] = med;
        j["median_evals"] = median_evals;
        j["total_evals"] = total_evals;
        j["total_counter_evals"] = total_counter_evals;
        nlohmann::ordered_json tabs = nlohmann::ordered_json::object();
        for (const auto& [name, t] : tables)
            tabs[name] = t.json();
        j["tables"] = tabs;
        return j.dump(2) + "\n";
    }

    std::string timing_csv() const {
        std::ostringstream out;
        out << "repeat,wall_seconds\n";
        for (const auto& r : repeats)
            out << r.repeat << ',' << format_number(r.wall_seconds) << '\n';
        return out.str();
    }
};

inline double median(Vec v) {
    require(!v.empty(), "median: empty input");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

namespace detail {

inline OptimizerConfig optimizer_config(const ExperimentConfig& cfg) {
    OptimizerConfig oc;
    oc.kind = parse_optimizer_kind(cfg.get("optimizer"));
    oc.de.np = cfg.count("de.np");
    oc.de.f = cfg.number("de.f");
    oc.de.cr = cfg.number("de.cr");
    if (cfg.has_value("de.generations"))
        oc.de.generations = cfg.count("de.generations");
    oc.ga.np = cfg.count("ga.np");
    oc.ga.generations = cfg.count("ga.generations");
    if (cfg.has_value("ga.mutation"))
        oc.ga.mutation_rate = cfg.number("ga.mutation");
    oc.sway.n0 = cfg.count("sway.n0");
    oc.sway.stop = cfg.count("sway.stop");
    return oc;
}

inline TuningSpec tuning_spec(const ExperimentConfig& cfg) {
    return make_tuning_spec(cfg.get("tune.learner"), parse_metric(cfg.get("tune.metric")),
                            cfg.count("tune.folds"), cfg.count("tune.cv_repeats"));
}

inline DeParams tuning_de(const ExperimentConfig& cfg) {
    DeParams de;
    de.np = cfg.count("tune.np");
    de.generations = cfg.count("tune.generations");
    return de;
}

inline Table ranges_table(std::span<const RangeScore> ranked, std::size_t repeat) {
    Table t{{"repeat", "rank", "range", "b", "r", "s"}, {}};
    for (std::size_t i = 0; i < ranked.size(); ++i)
        t.rows.push_back({static_cast<double>(repeat), static_cast<double>(i + 1),
                          ranked[i].range.to_string(), ranked[i].b, ranked[i].r, ranked[i].s});
    return t;
}

inline void append(Table& into, const Table& from) {
    if (into.header.empty())
        into.header = from.header;
    into.rows.insert(into.rows.end(), from.rows.begin(), from.rows.end());
}

} // namespace detail

/// Validates the configuration and runs every repeat; repeat i uses seed + i.
/// Configuration problems raise ConfigError; failures while running raise
/// other exceptions.
inline RunReport run_experiment(const ExperimentConfig& cfg) {
    RunReport report;
    std::size_t repeats = 0;
    std::optional<Problem> problem;
    std::optional<Dataset> data;
    OptimizerConfig oc;
    TuningSpec tspec;
    try {
        report.command = cfg.get("command");
        report.seed = cfg.integer("seed");
        repeats = cfg.count("repeats");
        require(repeats >= 1, "repeats must be >= 1");
        const std::string fmt = cfg.get("format");
        require(fmt == "csv" || fmt == "json" || fmt == "both", "format must be csv, json or both");
        const std::string& cmd = report.command;
        if (cmd == "optimize" || cmd == "sample" || cmd == "flash" || cmd == "star") {
            problem = make_problem(cfg.get("problem"));
            oc = detail::optimizer_config(cfg);
            if (cmd == "sample")
                oc.kind = OptimizerKind::sway;
            report.goal_names = problem->goal_names();
            if (cmd == "flash")
                require(problem->goal_count() == 1, "flash needs a single-goal problem");
            if (cmd == "star")
                require(cfg.count("star.rungs") >= 1 && cfg.count("star.samples") >= 2,
                        "star needs rungs >= 1 and samples >= 2");
        } else if (cmd == "tune" || cmd == "pipeline") {
            require(cfg.has_value("dataset"), cmd + " needs a dataset");
            data = load_dataset(cfg.get("dataset"));
            tspec = detail::tuning_spec(cfg);
            detail::tuning_de(cfg);
            report.goal_names = {to_string(tspec.metric)};
            if (cmd == "pipeline")
                require(cfg.count("pipeline.k") >= 1, "pipeline.k must be >= 1");
        } else {
            throw ContractError("unknown command '" + cmd + "'");
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const ContractError& e) {
        throw ConfigError(e.what());
    }

    report.config = cfg.resolved();
    report.config.erase("out");
    report.config.erase("format");
    report.config_hash = cfg.hash();

    for (std::size_t i = 0; i < repeats; ++i) {
        RepeatRecord rec;
        rec.repeat = i;
        rec.seed = report.seed + i;
        const auto t0 = std::chrono::steady_clock::now();
        const std::string& cmd = report.command;
        if (cmd == "optimize" || cmd == "sample") {
            Problem p = problem->fresh();
            const OptimizerResult res = run_optimizer(p, oc, rec.seed);
            rec.champion = *res.best.objectives;
            rec.evals = res.evals;
            rec.counter_evals = p.evals();
            rec.extra.emplace_back("front_size", static_cast<double>(res.front.size()));
            Table front{report.goal_names, {}};
            front.header.insert(front.header.begin(), "repeat");
            for (const auto& c : res.front) {
                std::vector<Cell> row{static_cast<double>(i)};
                for (double v : *c.objectives)
                    row.emplace_back(v);
                front.rows.push_back(std::move(row));
            }
            detail::append(report.tables["front"], front);
        } else if (cmd == "flash") {
            Problem p = problem->fresh();
            const auto pool = make_pool(p, cfg.count("flash.pool"), derive_seed(report.seed, 0));
            FlashParams fp;
            fp.init = cfg.count("flash.init");
            fp.budget = cfg.count("flash.budget");
            const FlashResult res = flash_optimize(p, pool, fp, rec.seed);
            rec.champion = *res.best.objectives;
            rec.evals = res.evals;
            rec.counter_evals = p.evals();
            rec.extra.emplace_back("best_index", static_cast<double>(res.best_index));
        } else if (cmd == "star") {
            Problem p = problem->fresh();
            Rng rng(rec.seed);
            std::vector<Candidate> pop;
            for (std::size_t s = 0; s < cfg.count("star.samples"); ++s)
                pop.push_back(p.evaluate(p.sample(rng)));
            const BestRest br = split_best_rest(pop, cfg.number("star.ratio"), p.objective_spec());
            std::vector<std::string> names;
            for (std::size_t j = 0; j < p.arity(); ++j)
                names.push_back("x" + std::to_string(j));
            const auto ranked = rank_ranges(br.best, br.rest, cfg.number("star.n"), cfg.count("star.bins"), names);
            const DecisionLadder ladder = decision_ladder(*problem, oc, ranked, cfg.count("star.rungs"), rec.seed);
            rec.champion = ladder.rungs.back().champion;
            rec.evals = pop.size() + ladder.total_evals();
            rec.counter_evals = p.evals();
            for (const auto& r : ladder.rungs)
                rec.counter_evals += r.counter;
            rec.extra.emplace_back("rungs", static_cast<double>(ladder.rungs.size()));
            rec.extra.emplace_back("conflict_at", ladder.conflict_at
                                                      ? Cell{static_cast<double>(*ladder.conflict_at)}
                                                      : Cell{std::string{}});
            detail::append(report.tables["ranges"], detail::ranges_table(ranked, i));
            Table lt{{"repeat", "rung", "asserted"}, {}};
            for (const auto& g : report.goal_names)
                lt.header.push_back(g);
            lt.header.push_back("evals");
            for (const auto& r : ladder.rungs) {
                std::string asserted;
                for (const auto& a : r.asserted)
                    asserted += (asserted.empty() ? "" : " & ") + a.to_string();
                std::vector<Cell> row{static_cast<double>(i), static_cast<double>(r.index), asserted};
                for (double v : r.champion)
                    row.emplace_back(v);
                row.emplace_back(static_cast<double>(r.evals));
                lt.rows.push_back(std::move(row));
            }
            detail::append(report.tables["ladder"], lt);
        } else if (cmd == "tune") {
            TuningResult res;
            if (cfg.get("tune.method") == "grid") {
                TuningSpec grid = tspec;
                for (auto& r : grid.space)
                    r.linspace(cfg.count("tune.grid_steps"));
                res = grid_search(grid, *data, rec.seed);
            } else if (cfg.get("tune.method") == "de") {
                res = de_tune(tspec, *data, detail::tuning_de(cfg), rec.seed);
            } else {
                throw ConfigError("tune.method must be de or grid");
            }
            rec.champion = {res.best_fitness};
            rec.evals = res.evaluations;
            rec.counter_evals = res.evaluations;
            rec.extra.emplace_back("default", res.default_fitness);
            rec.extra.emplace_back("tuned", res.best_fitness);
            for (const auto& [k, v] : res.best)
                rec.extra.emplace_back(k, v);
        } else if (cmd == "pipeline") {
            const ClusterReport cr =
                cluster_then_optimize(*data, cfg.count("pipeline.k"), tspec, detail::tuning_de(cfg), rec.seed);
            rec.champion = {cr.clusters[cr.pooled_best].tuning.best_fitness};
            rec.evals = cr.total_evals;
            for (const auto& c : cr.clusters)
                rec.counter_evals += c.tuning.evaluations;
            rec.extra.emplace_back("pooled_mean", cr.pooled_mean);
            rec.extra.emplace_back("clusters", static_cast<double>(cr.clusters.size()));
            rec.extra.emplace_back("merges", static_cast<double>(cr.merges.size()));
            Table ct{{"repeat", "cluster", "rows", "default", "tuned", "evals"}, {}};
            for (const auto& c : cr.clusters)
                ct.rows.push_back({static_cast<double>(i), static_cast<double>(c.cluster),
                                   static_cast<double>(c.rows.size()), c.tuning.default_fitness,
                                   c.tuning.best_fitness, static_cast<double>(c.tuning.evaluations)});
            detail::append(report.tables["clusters"], ct);
        }
        rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report.total_evals += rec.evals;
        report.total_counter_evals += rec.counter_evals;
        report.repeats.push_back(std::move(rec));
    }

    const std::size_t goals = report.repeats.front().champion.size();
    for (std::size_t g = 0; g < goals; ++g) {
        Vec col;
        for (const auto& r : report.repeats)
            col.push_back(r.champion[g]);
        report.median_champion.push_back(median(col));
    }
    Vec evals;
    for (const auto& r : report.repeats)
        evals.push_back(static_cast<double>(r.evals));
    report.median_evals = median(evals);
    return report;
}

/// Writes <command>.csv / <command>.json (per `format`), one CSV per extra
/// table, and timing.csv. Returns the paths written.
inline std::vector<std::string> write_report(const RunReport& report, const std::string& out_dir,
                                             const std::string& format) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec)
        throw std::runtime_error("cannot create output directory '" + out_dir + "': " + ec.message());
    std::vector<std::string> written;
    auto emit = [&](const std::string& name, const std::string& text) {
        const fs::path p = fs::path(out_dir) / name;
        detail::write_file(p, text);
        written.push_back(p.string());
    };
    if (format == "csv" || format == "both") {
        emit(report.command + ".csv", report.csv());
        for (const auto& [name, t] : report.tables)
            emit(report.command + "_" + name + ".csv", t.csv());
    }
    if (format == "json" || format == "both")
        emit(report.command + ".json", report.json());
    emit("timing.csv", report.timing_csv());
    return written;
}

// ---------------------------------------------------------------------------
// Front comparison
// ---------------------------------------------------------------------------

struct MetricsOptions {
    std::optional<Vec> reference;   // hypervolume reference point
    std::size_t samples = 100000;
    std::uint64_t seed = 1;
};

/// Indicator table comparing `predicted` against `actual`.
inline Table metrics_table(const Front& predicted, const Front& actual, const MetricsOptions& opts) {
    Table t{{"indicator", "value", "std_error"}, {}};
    t.rows.push_back({std::string("gd"), gd(predicted, actual), 0.0});
    t.rows.push_back({std::string("igd"), igd(predicted, actual), 0.0});
    t.rows.push_back({std::string("additive_epsilon"), additive_approx(predicted, actual), 0.0});
    if (predicted.size() >= 2)
        t.rows.push_back({std::string("spread"), spread(predicted), 0.0});
    if (opts.reference) {
        HypervolumeOptions ho;
        ho.samples = opts.samples;
        ho.seed = opts.seed;
        const auto hp = hypervolume(predicted, *opts.reference, ho);
        const auto ha = hypervolume(actual, *opts.reference, ho);
        t.rows.push_back({std::string("hypervolume_predicted"), hp.value, hp.std_error});
        t.rows.push_back({std::string("hypervolume_actual"), ha.value, ha.std_error});
    }
    return t;
}

} // namespace duo
