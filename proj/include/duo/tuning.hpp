#pragma once

/// @file tuning.hpp
/// @brief Learner performance metrics, stratified cross-validation, and
/// hyperparameter tuning by grid search or differential evolution.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "duo/core.hpp"
#include "duo/miners.hpp"
#include "duo/optimizers.hpp"
#include "duo/problems.hpp"

namespace duo {

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

enum class Metric { recall, precision, false_alarm, auc, mse };

inline Metric parse_metric(const std::string& name) {
    if (name == "recall")
        return Metric::recall;
    if (name == "precision")
        return Metric::precision;
    if (name == "false-alarm" || name == "false_alarm" || name == "pf")
        return Metric::false_alarm;
    if (name == "auc")
        return Metric::auc;
    if (name == "mse")
        return Metric::mse;
    throw ContractError("unknown metric '" + name + "'");
}

inline std::string to_string(Metric m) {
    switch (m) {
    case Metric::recall:
        return "recall";
    case Metric::precision:
        return "precision";
    case Metric::false_alarm:
        return "false_alarm";
    case Metric::auc:
        return "auc";
    case Metric::mse:
        return "mse";
    }
    return "?";
}

inline bool maximized(Metric m) { return m == Metric::recall || m == Metric::precision || m == Metric::auc; }

/// Ratios whose denominator is zero are left absent.
struct MetricsReport {
    std::optional<double> recall;
    std::optional<double> precision;
    std::optional<double> false_alarm;
    std::optional<double> auc;
    std::optional<double> mse;

    std::optional<double> get(Metric m) const {
        switch (m) {
        case Metric::recall:
            return recall;
        case Metric::precision:
            return precision;
        case Metric::false_alarm:
            return false_alarm;
        case Metric::auc:
            return auc;
        case Metric::mse:
            return mse;
        }
        return std::nullopt;
    }

    /// Metric value with absent entries replaced by the worst possible value.
    double value_or_worst(Metric m) const {
        if (auto v = get(m))
            return *v;
        if (m == Metric::mse)
            return std::numeric_limits<double>::infinity();
        return m == Metric::false_alarm ? 1.0 : 0.0;
    }
};

/// Mann-Whitney estimate of P(score of a positive > score of a negative),
/// ties counted as one half. Absent when either class is missing.
inline std::optional<double> auc(std::span<const double> scores, std::span<const int> actual) {
    require(scores.size() == actual.size(), "auc: length mismatch");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double pos_rank_sum = 0.0;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]])
            ++j;
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k)
            if (actual[order[k]] == 1) {
                pos_rank_sum += avg_rank;
                ++pos;
            }
        i = j;
    }
    const std::size_t neg = scores.size() - pos;
    if (pos == 0 || neg == 0)
        return std::nullopt;
    const double p = static_cast<double>(pos);
    return (pos_rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

/// Labels are 0/1 with 1 the positive class. `scores` rank rows for AUC; when
/// empty the predicted labels serve as scores.
inline MetricsReport classification_metrics(std::span<const int> predicted,
                                            std::span<const int> actual,
                                            std::span<const double> scores = {}) {
    require(predicted.size() == actual.size(), "classification_metrics: length mismatch");
    require(scores.empty() || scores.size() == actual.size(),
            "classification_metrics: score length mismatch");
    double tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        require((predicted[i] == 0 || predicted[i] == 1) && (actual[i] == 0 || actual[i] == 1),
                "classification_metrics: labels must be binary (0/1)");
        if (predicted[i] == 1)
            (actual[i] == 1 ? tp : fp) += 1;
        else
            (actual[i] == 1 ? fn : tn) += 1;
    }
    MetricsReport r;
    if (tp + fn > 0)
        r.recall = tp / (tp + fn);
    if (tp + fp > 0)
        r.precision = tp / (tp + fp);
    if (fp + tn > 0)
        r.false_alarm = fp / (fp + tn);
    if (scores.empty()) {
        const Vec s(predicted.begin(), predicted.end());
        r.auc = auc(s, actual);
    } else {
        r.auc = auc(scores, actual);
    }
    return r;
}

inline double mse(std::span<const double> predicted, std::span<const double> actual) {
    require(predicted.size() == actual.size(), "mse: length mismatch");
    require(!actual.empty(), "mse: empty input");
    double s = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i)
        s += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
    return s / static_cast<double>(actual.size());
}

// ---------------------------------------------------------------------------
// Learners
// ---------------------------------------------------------------------------

using ParamSet = std::map<std::string, double>;

/// Fits on `train`, scores on `test`.
using LearnerFn = std::function<MetricsReport(const Dataset& train, const Dataset& test,
                                              const ParamSet& params, std::uint64_t seed)>;

struct ParamRange {
    std::string name;
    double lo = 0.0;
    double hi = 0.0;
    bool integer = false;
    double default_value = 0.0;
    Vec grid;  // grid-search values; tuners by DE use [lo, hi]

    /// `steps` evenly spaced grid values over [lo, hi] (rounded for integers).
    ParamRange& linspace(std::size_t steps) {
        require(steps >= 1, "ParamRange::linspace: steps must be >= 1");
        grid.clear();
        for (std::size_t i = 0; i < steps; ++i) {
            double v = steps == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
            if (integer)
                v = std::round(v);
            if (grid.empty() || grid.back() != v)
                grid.push_back(v);
        }
        return *this;
    }
};

/// Minority label of the class column (ties: the lexicographically larger label).
inline std::string positive_label(std::span<const Dataset* const> parts, std::size_t class_column) {
    std::map<std::string, std::size_t> counts;
    for (const Dataset* d : parts)
        for (const auto& l : d->column(class_column).labels)
            ++counts[l];
    require(!counts.empty(), "positive_label: no rows");
    std::string best = counts.begin()->first;
    for (const auto& [label, n] : counts)
        if (n <= counts[best])
            best = label;
    return best;
}

namespace detail {

inline CartParams cart_params_from(const ParamSet& p) {
    CartParams c;
    if (auto it = p.find("max_depth"); it != p.end())
        c.max_depth = static_cast<std::size_t>(std::max(1.0, std::round(it->second)));
    if (auto it = p.find("min_leaf"); it != p.end())
        c.min_leaf = static_cast<std::size_t>(std::max(1.0, std::round(it->second)));
    return c;
}

inline MetricsReport score_cart(const Dataset& train, const Dataset& test, const CartParams& cp,
                                const std::string& positive) {
    if (auto cls = train.class_column()) {
        const Tree tree = cart_fit(train, *cls, cp);
        const auto pos_it = std::find(tree.classes.begin(), tree.classes.end(), positive);
        std::vector<int> predicted, actual;
        Vec scores;
        for (std::size_t r = 0; r < test.rows(); ++r) {
            const auto row = test.row(r);
            const auto& dist = cart_predict(tree, row).distribution;
            const double p = pos_it == tree.classes.end()
                                 ? 0.0
                                 : dist[static_cast<std::size_t>(pos_it - tree.classes.begin())];
            scores.push_back(p);
            predicted.push_back(p >= 0.5 ? 1 : 0);
            actual.push_back(test.column(*cls).labels[r] == positive ? 1 : 0);
        }
        return classification_metrics(predicted, actual, scores);
    }
    const auto goals = train.goal_columns();
    require(!goals.empty(), "learner: dataset has neither a class column nor a goal column");
    const std::size_t target = goals.front();
    require(train.column(target).type == ColumnType::numeric, "learner: goal column must be numeric");
    const Tree tree = cart_fit(train, target, cp);
    Vec predicted;
    for (std::size_t r = 0; r < test.rows(); ++r)
        predicted.push_back(cart_predict_value(tree, test.row(r)));
    MetricsReport rep;
    rep.mse = mse(predicted, test.column(target).numbers);
    return rep;
}

inline std::string positive_for(const Dataset& train, const Dataset& test) {
    const auto cls = train.class_column();
    if (!cls)
        return {};
    const Dataset* parts[] = {&train, &test};
    return positive_label(parts, *cls);
}

} // namespace detail

/// CART with parameters max_depth and min_leaf.
inline LearnerFn cart_learner() {
    return [](const Dataset& train, const Dataset& test, const ParamSet& p, std::uint64_t) {
        return detail::score_cart(train, test, detail::cart_params_from(p),
                                  detail::positive_for(train, test));
    };
}

/// SMOTE pre-processing of the training split (smote_k, smote_m, smote_r)
/// followed by CART.
inline LearnerFn smote_cart_learner(bool subsample_majority = true) {
    return [subsample_majority](const Dataset& train, const Dataset& test, const ParamSet& p,
                                std::uint64_t seed) {
        const auto cls = train.class_column();
        require(cls.has_value(), "smote-cart: dataset needs a class column");
        const std::string positive = detail::positive_for(train, test);
        SmoteParams sp;
        sp.subsample_majority = subsample_majority;
        if (auto it = p.find("smote_k"); it != p.end())
            sp.k = static_cast<std::size_t>(std::max(1.0, std::round(it->second)));
        if (auto it = p.find("smote_m"); it != p.end())
            sp.m = it->second;
        if (auto it = p.find("smote_r"); it != p.end())
            sp.r = it->second;
        Dataset balanced = train;
        std::set<std::string> labels(train.column(*cls).labels.begin(), train.column(*cls).labels.end());
        if (labels.size() == 2)
            balanced = smote_rebalance(train, *cls, sp, seed);
        return detail::score_cart(balanced, test, detail::cart_params_from(p), positive);
    };
}

struct TuningSpec {
    std::string learner_name;
    LearnerFn learner;
    std::vector<ParamRange> space;
    Metric metric = Metric::recall;
    std::size_t folds = 5;
    std::size_t repeats = 1;

    ParamSet defaults() const {
        ParamSet p;
        for (const auto& r : space)
            p[r.name] = r.default_value;
        return p;
    }
};

/// CART tunables: max_depth and min_leaf in [1, 20]; defaults 20 and 1.
inline std::vector<ParamRange> cart_space() {
    return {{"max_depth", 1, 20, true, 20, {}}, {"min_leaf", 1, 20, true, 1, {}}};
}

/// SMOTE tunables: k in [1, 20], m in [0.5, 4], r in [0.1, 5]; defaults 5, 1, 2.
inline std::vector<ParamRange> smote_space() {
    return {{"smote_k", 1, 20, true, 5, {}}, {"smote_m", 0.5, 4.0, false, 1.0, {}},
            {"smote_r", 0.1, 5.0, false, 2.0, {}}};
}

/// "cart" or "smote-cart".
inline TuningSpec make_tuning_spec(const std::string& learner, Metric metric, std::size_t folds = 5,
                                   std::size_t repeats = 1) {
    TuningSpec s;
    s.learner_name = learner;
    s.metric = metric;
    s.folds = folds;
    s.repeats = repeats;
    if (learner == "cart") {
        s.learner = cart_learner();
        s.space = cart_space();
    } else if (learner == "smote-cart") {
        s.learner = smote_cart_learner();
        s.space = smote_space();
        for (auto& r : cart_space())
            s.space.push_back(r);
    } else {
        throw ContractError("unknown learner '" + learner + "' (expected cart or smote-cart)");
    }
    return s;
}

// ---------------------------------------------------------------------------
// Cross-validation
// ---------------------------------------------------------------------------

struct CvResult {
    std::vector<MetricsReport> folds;                   // repeat-major
    std::vector<std::vector<std::size_t>> assignment;   // per repeat: fold of each row

    /// Mean of `m` over folds, absent values counted as worst.
    double mean(Metric m) const {
        double s = 0.0;
        for (const auto& f : folds)
            s += f.value_or_worst(m);
        return folds.empty() ? 0.0 : s / static_cast<double>(folds.size());
    }

    std::vector<double> values(Metric m) const {
        std::vector<double> out;
        for (const auto& f : folds)
            out.push_back(f.value_or_worst(m));
        return out;
    }
};

/// Fold id per row. With a class column, each class is shuffled and dealt
/// round-robin (continuing where the previous class stopped), so every fold
/// gets its share of every class.
inline std::vector<std::size_t> stratified_folds(const Dataset& data, std::size_t folds, Rng& rng) {
    std::map<std::string, std::vector<std::size_t>> strata;
    if (auto cls = data.class_column()) {
        for (std::size_t r = 0; r < data.rows(); ++r)
            strata[data.column(*cls).labels[r]].push_back(r);
    } else {
        auto& all = strata[""];
        all.resize(data.rows());
        std::iota(all.begin(), all.end(), std::size_t{0});
    }
    std::vector<std::size_t> fold(data.rows(), 0);
    std::size_t next = 0;
    for (auto& [label, rows] : strata) {
        rng.shuffle(rows);
        for (std::size_t r : rows)
            fold[r] = next++ % folds;
    }
    return fold;
}

inline CvResult cross_validate(const LearnerFn& learner, const ParamSet& params, const Dataset& data,
                               std::size_t folds, std::size_t repeats, std::uint64_t seed) {
    require(folds >= 2, "cross_validate: folds must be >= 2");
    require(repeats >= 1, "cross_validate: repeats must be >= 1");
    if (auto cls = data.class_column()) {
        std::map<std::string, std::size_t> counts;
        for (const auto& l : data.column(*cls).labels)
            ++counts[l];
        for (const auto& [label, n] : counts)
            require(n >= folds, "cross_validate: class '" + label + "' has fewer rows than folds");
    } else {
        require(data.rows() >= folds, "cross_validate: fewer rows than folds");
    }
    CvResult out;
    for (std::size_t rep = 0; rep < repeats; ++rep) {
        const std::uint64_t rep_seed = derive_seed(seed, rep);
        Rng rng(rep_seed);
        auto assign = stratified_folds(data, folds, rng);
        for (std::size_t f = 0; f < folds; ++f) {
            std::vector<std::size_t> train, test;
            for (std::size_t r = 0; r < data.rows(); ++r)
                (assign[r] == f ? test : train).push_back(r);
            out.folds.push_back(
                learner(data.subset(train), data.subset(test), params, derive_seed(rep_seed, f + 1)));
        }
        out.assignment.push_back(std::move(assign));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Tuners
// ---------------------------------------------------------------------------

struct TuningRow {
    ParamSet params;
    double fitness = 0.0;
};

struct TuningResult {
    ParamSet best;
    double best_fitness = 0.0;
    ParamSet defaults;
    double default_fitness = 0.0;
    std::vector<TuningRow> report;   // every configuration evaluated, in order
    std::size_t evaluations = 0;
};

/// True when fitness `a` is strictly better than `b` under the metric's direction.
inline bool better_fitness(Metric m, double a, double b) { return maximized(m) ? a > b : a < b; }

namespace detail {

inline double cv_fitness(const TuningSpec& spec, const ParamSet& p, const Dataset& data,
                         std::uint64_t seed) {
    return cross_validate(spec.learner, p, data, spec.folds, spec.repeats, seed).mean(spec.metric);
}

inline void check_spec(const TuningSpec& spec) {
    require(static_cast<bool>(spec.learner), "tuning: no learner");
    require(!spec.space.empty(), "tuning: empty parameter space");
}

} // namespace detail

/// Cross-validates every cell of the Cartesian grid (first parameter
/// outermost) on identical folds and returns the best cell; ties go to the
/// earliest cell.
inline TuningResult grid_search(const TuningSpec& spec, const Dataset& data, std::uint64_t seed) {
    detail::check_spec(spec);
    for (const auto& r : spec.space)
        require(!r.grid.empty(), "grid_search: parameter '" + r.name + "' has an empty grid");
    TuningResult res;
    res.defaults = spec.defaults();
    res.default_fitness = detail::cv_fitness(spec, res.defaults, data, seed);

    std::vector<std::size_t> idx(spec.space.size(), 0);
    while (true) {
        ParamSet p;
        for (std::size_t k = 0; k < spec.space.size(); ++k)
            p[spec.space[k].name] = spec.space[k].grid[idx[k]];
        const double fit = detail::cv_fitness(spec, p, data, seed);
        if (res.report.empty() || better_fitness(spec.metric, fit, res.best_fitness)) {
            res.best = p;
            res.best_fitness = fit;
        }
        res.report.push_back({std::move(p), fit});
        std::size_t k = spec.space.size();
        while (k > 0) {
            --k;
            if (++idx[k] < spec.space[k].grid.size())
                break;
            idx[k] = 0;
            if (k == 0) {
                res.evaluations = res.report.size();
                return res;
            }
        }
    }
}

/// Differential evolution over the parameter box with cross-validated fitness
/// (identical folds for every configuration). The default configuration is
/// member zero of the initial population, and the returned configuration is
/// the best ever evaluated, so its fitness is never worse than the default's.
inline TuningResult de_tune(const TuningSpec& spec, const Dataset& data, const DeParams& params,
                            std::uint64_t seed) {
    detail::check_spec(spec);
    std::vector<Domain> domains;
    for (const auto& r : spec.space) {
        require(std::isfinite(r.lo) && std::isfinite(r.hi) && r.lo <= r.hi,
                "de_tune: parameter '" + r.name + "' needs a bounded range");
        domains.push_back(r.integer ? Domain::integer(r.lo, r.hi) : Domain::continuous(r.lo, r.hi));
    }
    const std::uint64_t cv_seed = derive_seed(seed, 0);
    auto to_params = [&](std::span<const double> x) {
        ParamSet p;
        for (std::size_t k = 0; k < spec.space.size(); ++k)
            p[spec.space[k].name] = x[k];
        return p;
    };

    TuningResult res;
    Problem problem("tune", domains,
                    {{to_string(spec.metric),
                      maximized(spec.metric) ? Direction::maximize : Direction::minimize,
                      [&](std::span<const double> x) {
                          ParamSet p = to_params(x);
                          const double fit = detail::cv_fitness(spec, p, data, cv_seed);
                          res.report.push_back({std::move(p), fit});
                          return fit;
                      }}});
    Vec defaults;
    for (const auto& r : spec.space)
        defaults.push_back(r.default_value);
    defaults = problem.repair(defaults);
    res.defaults = to_params(defaults);

    if (params.generations.value_or(1) == 0) {
        // No evolution: score the initial population only.
        require(params.np >= 1, "de_tune: np must be >= 1");
        Rng rng(derive_seed(seed, 1));
        std::optional<Candidate> best;
        for (std::size_t i = 0; i < params.np; ++i) {
            Candidate c = problem.evaluate(i == 0 ? defaults : problem.sample(rng));
            if (!best || better_fitness(spec.metric, (*c.objectives)[0], (*best->objectives)[0]))
                best = std::move(c);
        }
        res.best = to_params(best->decisions);
        res.best_fitness = (*best->objectives)[0];
    } else {
        DeParams dp = params;
        dp.initial.insert(dp.initial.begin(), defaults);
        if (dp.initial.size() > dp.np)
            dp.initial.resize(dp.np);
        const OptimizerResult out = de_optimize(problem, dp, derive_seed(seed, 1));
        res.best = to_params(out.best.decisions);
        res.best_fitness = (*out.best.objectives)[0];
    }
    res.default_fitness = res.report.front().fitness;
    res.evaluations = problem.evals();
    return res;
}

} // namespace duo
