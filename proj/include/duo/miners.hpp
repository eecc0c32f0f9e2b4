#pragma once

/// @file miners.hpp
/// @brief Tabular datasets and from-scratch data miners: CART trees, k-means,
/// equal-frequency discretization and SMOTE-style rebalancing.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "duo/core.hpp"

namespace duo {

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

enum class ColumnType { numeric, categorical };

/// feature: independent variable; minimize/maximize: goal columns; label: the
/// class column.
enum class ColumnRole { feature, minimize, maximize, label };

using Cell = std::variant<double, std::string>;

struct Column {
    std::string name;
    ColumnType type = ColumnType::numeric;
    ColumnRole role = ColumnRole::feature;
    std::vector<double> numbers;
    std::vector<std::string> labels;

    std::size_t size() const noexcept {
        return type == ColumnType::numeric ? numbers.size() : labels.size();
    }

    Cell cell(std::size_t r) const {
        if (type == ColumnType::numeric)
            return numbers.at(r);
        return labels.at(r);
    }

    bool is_goal() const noexcept {
        return role == ColumnRole::minimize || role == ColumnRole::maximize;
    }

    friend bool operator==(const Column&, const Column&) = default;
};

/// Column-major table. Every column has the same number of rows.
class Dataset {
  public:
    Dataset() = default;

    void add_column(Column c) {
        require(columns_.empty() || c.size() == rows(),
                "Dataset: column '" + c.name + "' has a different row count");
        columns_.push_back(std::move(c));
    }

    void add_numeric(std::string name, std::vector<double> values,
                     ColumnRole role = ColumnRole::feature) {
        add_column({std::move(name), ColumnType::numeric, role, std::move(values), {}});
    }

    void add_categorical(std::string name, std::vector<std::string> values,
                         ColumnRole role = ColumnRole::feature) {
        add_column({std::move(name), ColumnType::categorical, role, {}, std::move(values)});
    }

    std::size_t rows() const noexcept { return columns_.empty() ? 0 : columns_.front().size(); }
    std::size_t cols() const noexcept { return columns_.size(); }
    bool empty() const noexcept { return rows() == 0; }

    const Column& column(std::size_t c) const { return columns_.at(c); }
    Column& column(std::size_t c) { return columns_.at(c); }
    const std::vector<Column>& columns() const noexcept { return columns_; }

    std::optional<std::size_t> column_index(const std::string& name) const {
        for (std::size_t c = 0; c < columns_.size(); ++c)
            if (columns_[c].name == name)
                return c;
        return std::nullopt;
    }

    std::optional<std::size_t> class_column() const {
        for (std::size_t c = 0; c < columns_.size(); ++c)
            if (columns_[c].role == ColumnRole::label)
                return c;
        return std::nullopt;
    }

    std::vector<std::size_t> feature_columns() const {
        std::vector<std::size_t> out;
        for (std::size_t c = 0; c < columns_.size(); ++c)
            if (columns_[c].role == ColumnRole::feature)
                out.push_back(c);
        return out;
    }

    std::vector<std::size_t> goal_columns() const {
        std::vector<std::size_t> out;
        for (std::size_t c = 0; c < columns_.size(); ++c)
            if (columns_[c].is_goal())
                out.push_back(c);
        return out;
    }

    std::vector<Cell> row(std::size_t r) const {
        std::vector<Cell> out;
        out.reserve(cols());
        for (const auto& c : columns_)
            out.push_back(c.cell(r));
        return out;
    }

    void append_row(std::span<const Cell> cells) {
        require(cells.size() == cols(), "Dataset::append_row: width mismatch");
        for (std::size_t c = 0; c < cols(); ++c) {
            auto& col = columns_[c];
            if (col.type == ColumnType::numeric) {
                require(std::holds_alternative<double>(cells[c]),
                        "Dataset::append_row: '" + col.name + "' expects a number");
                col.numbers.push_back(std::get<double>(cells[c]));
            } else {
                require(std::holds_alternative<std::string>(cells[c]),
                        "Dataset::append_row: '" + col.name + "' expects a category");
                col.labels.push_back(std::get<std::string>(cells[c]));
            }
        }
    }

    /// Rows `which`, in that order (repeats allowed).
    Dataset subset(std::span<const std::size_t> which) const {
        Dataset out;
        for (const auto& c : columns_) {
            Column copy{c.name, c.type, c.role, {}, {}};
            for (std::size_t r : which) {
                require(r < rows(), "Dataset::subset: row out of range");
                if (c.type == ColumnType::numeric)
                    copy.numbers.push_back(c.numbers[r]);
                else
                    copy.labels.push_back(c.labels[r]);
            }
            out.columns_.push_back(std::move(copy));
        }
        return out;
    }

    friend bool operator==(const Dataset&, const Dataset&) = default;

  private:
    std::vector<Column> columns_;
};

/// Numeric design matrix over `cols`; categorical columns are one-hot expanded
/// (categories in sorted order).
inline std::vector<Vec> numeric_matrix(const Dataset& data, std::span<const std::size_t> cols) {
    std::vector<Vec> out(data.rows());
    for (std::size_t c : cols) {
        const Column& col = data.column(c);
        if (col.type == ColumnType::numeric) {
            for (std::size_t r = 0; r < data.rows(); ++r)
                out[r].push_back(col.numbers[r]);
        } else {
            const std::set<std::string> cats(col.labels.begin(), col.labels.end());
            for (std::size_t r = 0; r < data.rows(); ++r)
                for (const auto& cat : cats)
                    out[r].push_back(col.labels[r] == cat ? 1.0 : 0.0);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// CART
// ---------------------------------------------------------------------------

struct CartParams {
    static constexpr std::size_t unlimited = std::numeric_limits<std::size_t>::max();
    std::size_t max_depth = unlimited;
    std::size_t min_leaf = 1;
};

/// Internal nodes carry a split; every node carries the payload of the rows
/// that reached it (mean for regression, class distribution for classification).
struct TreeNode {
    std::optional<std::size_t> column;
    double threshold = 0.0;                 // numeric: x <= threshold goes left
    std::set<std::string> left_categories;  // categorical: members go left
    int left = -1;
    int right = -1;
    double gain = 0.0;

    double mean = 0.0;
    std::vector<double> distribution;
    std::size_t size = 0;
    std::size_t depth = 0;

    bool leaf() const noexcept { return !column.has_value(); }
};

class Tree {
  public:
    std::vector<TreeNode> nodes;
    bool classification = false;
    std::vector<std::string> classes;  // classification only, sorted
    std::size_t target = 0;
    std::vector<std::size_t> features;

    const TreeNode& root() const { return nodes.at(0); }

    std::size_t leaf_count() const {
        return static_cast<std::size_t>(
            std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.leaf(); }));
    }

    std::size_t depth() const {
        std::size_t d = 0;
        for (const auto& n : nodes)
            d = std::max(d, n.depth);
        return d;
    }
};

namespace detail {

struct SplitChoice {
    std::size_t column = 0;
    double threshold = 0.0;
    std::set<std::string> left_categories;
    double gain = 0.0;
};

/// Impurity accumulator: sum of squared error (regression) or n * gini.
class Impurity {
  public:
    Impurity(bool classification, std::size_t classes)
        : classification_(classification), counts_(classes, 0.0) {}

    void add(double y, std::size_t cls) {
        ++n_;
        if (classification_) {
            counts_[cls] += 1.0;
        } else {
            sum_ += y;
            sq_ += y * y;
        }
    }

    void remove(double y, std::size_t cls) {
        --n_;
        if (classification_) {
            counts_[cls] -= 1.0;
        } else {
            sum_ -= y;
            sq_ -= y * y;
        }
    }

    std::size_t n() const noexcept { return n_; }

    double total() const {
        if (n_ == 0)
            return 0.0;
        const double n = static_cast<double>(n_);
        if (classification_) {
            double g = 1.0;
            for (double c : counts_)
                g -= (c / n) * (c / n);
            return n * g;
        }
        return std::max(0.0, sq_ - sum_ * sum_ / n);
    }

  private:
    bool classification_;
    std::vector<double> counts_;
    std::size_t n_ = 0;
    double sum_ = 0.0;
    double sq_ = 0.0;
};

} // namespace detail

/// Fits a CART tree predicting column `target` from `features` (all feature
/// columns when empty). Numeric targets give regression (variance reduction),
/// categorical targets give classification (Gini reduction). Growth stops at
/// max_depth, when a child would fall below min_leaf, or when no split has
/// positive gain.
inline Tree cart_fit(const Dataset& data, std::size_t target, CartParams params = {},
                     std::vector<std::size_t> features = {}) {
    require(data.rows() >= 1, "cart_fit: empty dataset");
    require(target < data.cols(), "cart_fit: target column out of range");
    require(params.min_leaf >= 1, "cart_fit: min_leaf must be >= 1");
    if (features.empty())
        for (std::size_t c : data.feature_columns())
            if (c != target)
                features.push_back(c);

    Tree tree;
    tree.target = target;
    tree.features = features;
    const Column& tcol = data.column(target);
    tree.classification = tcol.type == ColumnType::categorical;

    const std::size_t n = data.rows();
    std::vector<double> y(n, 0.0);
    std::vector<std::size_t> cls(n, 0);
    if (tree.classification) {
        const std::set<std::string> uniq(tcol.labels.begin(), tcol.labels.end());
        tree.classes.assign(uniq.begin(), uniq.end());
        for (std::size_t r = 0; r < n; ++r)
            cls[r] = static_cast<std::size_t>(
                std::lower_bound(tree.classes.begin(), tree.classes.end(), tcol.labels[r]) -
                tree.classes.begin());
    } else {
        y = tcol.numbers;
    }
    const std::size_t k = tree.classes.size();
    constexpr double min_gain = 1e-12;

    auto payload = [&](TreeNode& node, const std::vector<std::size_t>& rows) {
        node.size = rows.size();
        if (tree.classification) {
            node.distribution.assign(k, 0.0);
            for (std::size_t r : rows)
                node.distribution[cls[r]] += 1.0;
            for (double& p : node.distribution)
                p /= static_cast<double>(rows.size());
        } else {
            double s = 0.0;
            for (std::size_t r : rows)
                s += y[r];
            node.mean = s / static_cast<double>(rows.size());
        }
    };

    auto best_split = [&](const std::vector<std::size_t>& rows) -> std::optional<detail::SplitChoice> {
        detail::Impurity parent(tree.classification, k);
        for (std::size_t r : rows)
            parent.add(y[r], cls[r]);
        const double parent_total = parent.total();
        const double rows_n = static_cast<double>(rows.size());
        std::optional<detail::SplitChoice> best;

        for (std::size_t c : features) {
            const Column& col = data.column(c);
            // Order rows by the numeric value, or by category key for categoricals.
            std::vector<std::size_t> order = rows;
            std::map<std::string, double> cat_key;
            if (col.type == ColumnType::numeric) {
                std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                    return col.numbers[a] < col.numbers[b];
                });
            } else {
                std::map<std::string, std::pair<double, double>> acc;
                for (std::size_t r : rows) {
                    auto& [s, cnt] = acc[col.labels[r]];
                    s += tree.classification ? (cls[r] == 0 ? 1.0 : 0.0) : y[r];
                    cnt += 1.0;
                }
                for (const auto& [cat, sc] : acc)
                    cat_key[cat] = sc.first / sc.second;
                std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                    const double ka = cat_key[col.labels[a]];
                    const double kb = cat_key[col.labels[b]];
                    return ka < kb || (ka == kb && col.labels[a] < col.labels[b]);
                });
            }
            auto same = [&](std::size_t a, std::size_t b) {
                return col.type == ColumnType::numeric ? col.numbers[a] == col.numbers[b]
                                                       : col.labels[a] == col.labels[b];
            };
            detail::Impurity left(tree.classification, k);
            detail::Impurity right = parent;
            for (std::size_t i = 0; i + 1 < order.size(); ++i) {
                left.add(y[order[i]], cls[order[i]]);
                right.remove(y[order[i]], cls[order[i]]);
                if (same(order[i], order[i + 1]))
                    continue;
                if (left.n() < params.min_leaf || right.n() < params.min_leaf)
                    continue;
                const double gain = (parent_total - left.total() - right.total()) / rows_n;
                if (gain > min_gain && (!best || gain > best->gain + min_gain)) {
                    detail::SplitChoice s;
                    s.column = c;
                    s.gain = gain;
                    if (col.type == ColumnType::numeric) {
                        s.threshold = col.numbers[order[i]] +
                                      (col.numbers[order[i + 1]] - col.numbers[order[i]]) / 2.0;
                    } else {
                        for (std::size_t j = 0; j <= i; ++j)
                            s.left_categories.insert(col.labels[order[j]]);
                    }
                    best = std::move(s);
                }
            }
        }
        return best;
    };

    struct Pending {
        std::size_t node;
        std::vector<std::size_t> rows;
    };
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    tree.nodes.emplace_back();
    payload(tree.nodes[0], all);
    std::vector<Pending> stack{{0, std::move(all)}};
    while (!stack.empty()) {
        Pending job = std::move(stack.back());
        stack.pop_back();
        const std::size_t depth = tree.nodes[job.node].depth;
        if (depth >= params.max_depth || job.rows.size() < 2 * params.min_leaf)
            continue;
        auto split = best_split(job.rows);
        if (!split)
            continue;
        const Column& col = data.column(split->column);
        std::vector<std::size_t> lrows, rrows;
        for (std::size_t r : job.rows) {
            const bool goes_left = col.type == ColumnType::numeric
                                       ? col.numbers[r] <= split->threshold
                                       : split->left_categories.contains(col.labels[r]);
            (goes_left ? lrows : rrows).push_back(r);
        }
        const auto li = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        TreeNode& node = tree.nodes[job.node];
        node.column = split->column;
        node.threshold = split->threshold;
        node.left_categories = split->left_categories;
        node.gain = split->gain;
        node.left = li;
        node.right = li + 1;
        tree.nodes[li].depth = tree.nodes[li + 1].depth = depth + 1;
        payload(tree.nodes[li], lrows);
        payload(tree.nodes[li + 1], rrows);
        stack.push_back({static_cast<std::size_t>(li + 1), std::move(rrows)});
        stack.push_back({static_cast<std::size_t>(li), std::move(lrows)});
    }
    return tree;
}

/// Leaf reached by `row` (cells indexed like the training dataset's columns).
inline const TreeNode& cart_predict(const Tree& tree, std::span<const Cell> row) {
    const TreeNode* node = &tree.root();
    while (!node->leaf()) {
        const std::size_t c = *node->column;
        require(c < row.size(), "cart_predict: row is missing split column " + std::to_string(c));
        bool goes_left = false;
        if (node->left_categories.empty()) {
            const auto* v = std::get_if<double>(&row[c]);
            require(v != nullptr, "cart_predict: column " + std::to_string(c) + " must be numeric");
            goes_left = *v <= node->threshold;
        } else {
            const auto* v = std::get_if<std::string>(&row[c]);
            require(v != nullptr, "cart_predict: column " + std::to_string(c) + " must be categorical");
            goes_left = node->left_categories.contains(*v);
        }
        node = &tree.nodes[static_cast<std::size_t>(goes_left ? node->left : node->right)];
    }
    return *node;
}

inline double cart_predict_value(const Tree& tree, std::span<const Cell> row) {
    return cart_predict(tree, row).mean;
}

/// Most probable class; ties go to the first class in sorted order.
inline std::string cart_predict_label(const Tree& tree, std::span<const Cell> row) {
    require(tree.classification, "cart_predict_label: regression tree");
    const auto& d = cart_predict(tree, row).distribution;
    return tree.classes[static_cast<std::size_t>(std::max_element(d.begin(), d.end()) - d.begin())];
}

// ---------------------------------------------------------------------------
// k-means
// ---------------------------------------------------------------------------

struct KMeansParams {
    std::size_t max_iter = 100;
    double tol = 1e-6;
};

struct KMeansResult {
    std::vector<std::size_t> assignments;
    std::vector<Vec> centroids;
    std::vector<double> inertia_history;  // after each assignment step
    std::size_t iterations = 0;

    double inertia() const { return inertia_history.empty() ? 0.0 : inertia_history.back(); }
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

/// Lloyd iterations from k distinct points picked by seeded sampling.
inline KMeansResult kmeans(std::span<const Vec> points, std::size_t k, std::uint64_t seed,
                           KMeansParams params = {}) {
    require(k >= 1, "kmeans: k must be >= 1");
    require(!points.empty(), "kmeans: no points");
    Rng rng(seed);
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);

    KMeansResult res;
    std::set<Vec> chosen;
    for (std::size_t i : order) {
        if (res.centroids.size() == k)
            break;
        if (chosen.insert(points[i]).second)
            res.centroids.push_back(points[i]);
    }
    require(res.centroids.size() == k, "kmeans: k exceeds the number of distinct rows");

    const std::size_t dim = points.front().size();
    res.assignments.assign(points.size(), 0);
    for (std::size_t it = 0; it < params.max_iter; ++it) {
        double inertia = 0.0;
        for (std::size_t p = 0; p < points.size(); ++p) {
            std::size_t best = 0;
            double best_d = squared_distance(points[p], res.centroids[0]);
            for (std::size_t c = 1; c < k; ++c) {
                const double d = squared_distance(points[p], res.centroids[c]);
                if (d < best_d) {
                    best = c;
                    best_d = d;
                }
            }
            res.assignments[p] = best;
            inertia += best_d;
        }
        res.inertia_history.push_back(inertia);
        res.iterations = it + 1;

        std::vector<Vec> sums(k, Vec(dim, 0.0));
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t p = 0; p < points.size(); ++p) {
            ++counts[res.assignments[p]];
            for (std::size_t j = 0; j < dim; ++j)
                sums[res.assignments[p]][j] += points[p][j];
        }
        double shift = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0)
                continue;  // empty cluster keeps its centroid
            for (double& s : sums[c])
                s /= static_cast<double>(counts[c]);
            shift = std::max(shift, std::sqrt(squared_distance(sums[c], res.centroids[c])));
            res.centroids[c] = std::move(sums[c]);
        }
        if (shift < params.tol)
            break;
    }
    // Final assignment against the settled centroids.
    double inertia = 0.0;
    for (std::size_t p = 0; p < points.size(); ++p) {
        std::size_t best = 0;
        double best_d = squared_distance(points[p], res.centroids[0]);
        for (std::size_t c = 1; c < k; ++c) {
            const double d = squared_distance(points[p], res.centroids[c]);
            if (d < best_d) {
                best = c;
                best_d = d;
            }
        }
        res.assignments[p] = best;
        inertia += best_d;
    }
    res.inertia_history.push_back(inertia);
    return res;
}

/// k-means over the dataset's feature columns (categoricals one-hot).
inline KMeansResult kmeans(const Dataset& data, std::size_t k, std::uint64_t seed,
                           KMeansParams params = {}) {
    const auto cols = data.feature_columns();
    const auto m = numeric_matrix(data, cols);
    return kmeans(std::span<const Vec>(m), k, seed, params);
}

// ---------------------------------------------------------------------------
// Discretization
// ---------------------------------------------------------------------------

/// A numeric interval [lo, hi] or a single category of one column.
struct Range {
    std::size_t column = 0;
    std::string name;
    bool categorical = false;
    double lo = 0.0;
    double hi = 0.0;
    std::string label;

    bool contains(double v) const { return !categorical && v >= lo && v <= hi; }
    bool contains(const std::string& v) const { return categorical && v == label; }
    bool contains(const Cell& c) const {
        if (const auto* v = std::get_if<double>(&c))
            return contains(*v);
        return contains(std::get<std::string>(c));
    }

    std::string to_string() const {
        if (categorical)
            return name + "=" + label;
        auto fmt = [](double v) {
            std::ostringstream os;
            os.precision(6);
            os << v;
            return os.str();
        };
        if (lo == hi)
            return name + "=" + fmt(lo);
        return name + "=[" + fmt(lo) + ".." + fmt(hi) + "]";
    }

    friend bool operator==(const Range&, const Range&) = default;
};

/// Equal-frequency ranges over `values`. A bin never splits a run of equal
/// values; when there are no more distinct values than bins, each distinct
/// value gets its own range.
inline std::vector<Range> discretize_values(std::span<const double> values, std::size_t bins,
                                            std::size_t column = 0, const std::string& name = {}) {
    require(bins >= 1, "discretize: bins must be >= 1");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<Range> out;
    if (sorted.empty())
        return out;
    auto make = [&](double lo, double hi) {
        Range r;
        r.column = column;
        r.name = name;
        r.lo = lo;
        r.hi = hi;
        return r;
    };
    std::vector<double> distinct = sorted;
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() <= bins) {
        for (double v : distinct)
            out.push_back(make(v, v));
        return out;
    }
    const std::size_t n = sorted.size();
    for (std::size_t b = 0; b < bins; ++b) {
        const std::size_t start = b * n / bins;
        const std::size_t end = (b + 1) * n / bins;
        if (start == end)
            continue;
        const double lo = sorted[start];
        const double hi = sorted[end - 1];
        if (!out.empty() && out.back().hi >= lo)
            out.back().hi = std::max(out.back().hi, hi);
        else
            out.push_back(make(lo, hi));
    }
    return out;
}

/// Ranges for one column: equal-frequency bins for numeric columns, one range
/// per category (sorted) for categorical columns.
inline std::vector<Range> discretize(const Dataset& data, std::size_t column, std::size_t bins = 7) {
    const Column& col = data.column(column);
    if (col.type == ColumnType::numeric)
        return discretize_values(col.numbers, bins, column, col.name);
    std::vector<Range> out;
    for (const auto& cat : std::set<std::string>(col.labels.begin(), col.labels.end())) {
        Range r;
        r.column = column;
        r.name = col.name;
        r.categorical = true;
        r.label = cat;
        out.push_back(std::move(r));
    }
    return out;
}

// ---------------------------------------------------------------------------
// SMOTE
// ---------------------------------------------------------------------------

struct SmoteParams {
    std::size_t k = 5;       // neighbours considered per minority row
    double m = 1.0;          // target minority size as a multiple of its current size
    double r = 2.0;          // Minkowski power of the neighbour distance
    bool subsample_majority = true;
};

inline double minkowski(std::span<const double> a, std::span<const double> b, double r) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += std::pow(std::abs(a[i] - b[i]), r);
    return std::pow(s, 1.0 / r);
}

/// Oversamples the minority class of a binary class column to round(m * n_min)
/// rows by interpolating each synthetic row between a random minority row and
/// one of its k nearest minority neighbours. With subsample_majority the
/// majority class is then cut down (random rows, original order kept) to the
/// new minority size. Original rows come first; synthetic rows are appended.
inline Dataset smote_rebalance(const Dataset& data, std::size_t class_column, SmoteParams params,
                               std::uint64_t seed) {
    require(class_column < data.cols(), "smote_rebalance: class column out of range");
    const Column& cc = data.column(class_column);
    require(cc.type == ColumnType::categorical, "smote_rebalance: class column must be categorical");
    std::map<std::string, std::vector<std::size_t>> by_class;
    for (std::size_t r = 0; r < cc.labels.size(); ++r)
        by_class[cc.labels[r]].push_back(r);
    require(by_class.size() == 2, "smote_rebalance: class column must be binary");
    require(params.r > 0.0, "smote_rebalance: Minkowski power must be positive");
    require(params.m > 0.0, "smote_rebalance: m must be positive");

    auto it = by_class.begin();
    const auto& first = *it++;
    const auto& second = *it;
    const bool first_is_min = first.second.size() <= second.second.size();
    const auto& [min_label, min_rows] = first_is_min ? first : second;
    const auto& maj_rows = first_is_min ? second.second : first.second;

    Rng rng(seed);
    const auto target = std::max<std::size_t>(
        min_rows.size(),
        static_cast<std::size_t>(std::llround(params.m * static_cast<double>(min_rows.size()))));
    const std::size_t synth = target - min_rows.size();

    std::vector<std::size_t> keep;
    if (params.subsample_majority && maj_rows.size() > target) {
        auto picked = rng.sample_distinct(maj_rows.size(), target);
        std::vector<bool> kept_maj(maj_rows.size(), false);
        for (std::size_t p : picked)
            kept_maj[p] = true;
        std::vector<bool> keep_row(data.rows(), true);
        for (std::size_t i = 0; i < maj_rows.size(); ++i)
            keep_row[maj_rows[i]] = kept_maj[i];
        for (std::size_t r = 0; r < data.rows(); ++r)
            if (keep_row[r])
                keep.push_back(r);
    } else {
        keep.resize(data.rows());
        std::iota(keep.begin(), keep.end(), std::size_t{0});
    }
    Dataset out = data.subset(keep);
    if (synth == 0)
        return out;

    std::vector<std::size_t> dist_cols;
    for (std::size_t c : data.feature_columns())
        if (data.column(c).type == ColumnType::numeric)
            dist_cols.push_back(c);
    std::vector<Vec> coords(min_rows.size());
    for (std::size_t i = 0; i < min_rows.size(); ++i)
        for (std::size_t c : dist_cols)
            coords[i].push_back(data.column(c).numbers[min_rows[i]]);

    const std::size_t k = std::min(params.k, min_rows.size() - 1);
    std::vector<std::vector<std::size_t>> neighbours(min_rows.size());
    for (std::size_t i = 0; i < min_rows.size() && k > 0; ++i) {
        std::vector<std::pair<double, std::size_t>> d;
        for (std::size_t j = 0; j < min_rows.size(); ++j)
            if (j != i)
                d.emplace_back(minkowski(coords[i], coords[j], params.r), j);
        std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
        for (std::size_t q = 0; q < k; ++q)
            neighbours[i].push_back(d[q].second);
    }

    for (std::size_t s = 0; s < synth; ++s) {
        const std::size_t i = rng.index(min_rows.size());
        const std::size_t j = k > 0 ? neighbours[i][rng.index(k)] : i;
        const double t = rng.uniform();
        const std::size_t a = min_rows[i];
        const std::size_t b = min_rows[j];
        std::vector<Cell> row;
        for (std::size_t c = 0; c < data.cols(); ++c) {
            const Column& col = data.column(c);
            if (c == class_column)
                row.emplace_back(min_label);
            else if (col.type == ColumnType::numeric)
                row.emplace_back(col.numbers[a] + t * (col.numbers[b] - col.numbers[a]));
            else
                row.emplace_back(t < 0.5 ? col.labels[a] : col.labels[b]);
        }
        out.append_row(row);
    }
    return out;
}

} // namespace duo
