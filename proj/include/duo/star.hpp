#pragma once

/// @file star.hpp
/// @brief Bayesian contrast-set ranking of decision ranges (best vs rest) and
/// the decision ladder: optimizer re-runs with the top-i ranges asserted.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "duo/core.hpp"
#include "duo/miners.hpp"
#include "duo/optimizers.hpp"
#include "duo/problems.hpp"

namespace duo {

struct RangeScore {
    Range range;
    double b = 0.0;  // share of best containing the range
    double r = 0.0;  // share of rest containing the range
    double s = 0.0;  // b^n / (b + r)
    double n = 2.0;
    std::size_t best_count = 0;
    std::size_t rest_count = 0;
};

/// b^n / (b + r); zero when b + r == 0.
inline double star_score(double b, double r, double n = 2.0) {
    return b + r > 0.0 ? std::pow(b, n) / (b + r) : 0.0;
}

struct BestRest {
    std::vector<Candidate> best;
    std::vector<Candidate> rest;
};

/// Orders candidates by their indicator loss against the population's ideal
/// point (per-goal best observed value), lowest first, and puts the first
/// floor(ratio * N) in `best`.
inline BestRest split_best_rest(std::span<const Candidate> evaluated, double ratio,
                                ObjectiveSpec spec) {
    require(ratio > 0.0 && ratio < 1.0, "split_best_rest: ratio must lie in (0, 1)");
    for (const auto& c : evaluated)
        require(c.evaluated(), "split_best_rest: unevaluated candidate");
    BestRest out;
    if (evaluated.empty())
        return out;
    spec.fit(evaluated);
    const std::size_t goals = spec.goal_count();
    Vec ideal(goals);
    for (std::size_t g = 0; g < goals; ++g)
        ideal[g] = spec.weight(g) > 0 ? spec.hi()[g] : spec.lo()[g];

    std::vector<std::pair<double, std::size_t>> loss;
    loss.reserve(evaluated.size());
    for (std::size_t i = 0; i < evaluated.size(); ++i)
        loss.emplace_back(zitzler_losses(*evaluated[i].objectives, ideal, spec).first, i);
    std::stable_sort(loss.begin(), loss.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    const auto cut = static_cast<std::size_t>(
        std::floor(ratio * static_cast<double>(evaluated.size()) + 1e-9));
    for (std::size_t k = 0; k < loss.size(); ++k)
        (k < cut ? out.best : out.rest).push_back(evaluated[loss[k].second]);
    return out;
}

/// Scores every (decision, range) pair. Ranges come from equal-frequency
/// discretization of each decision over best and rest together. Output is
/// sorted by s, then b, descending; then by decision index and range order.
/// Ranges that occur nowhere are dropped.
inline std::vector<RangeScore> rank_ranges(std::span<const Candidate> best,
                                           std::span<const Candidate> rest, double n = 2.0,
                                           std::size_t bins = 7,
                                           const std::vector<std::string>& names = {}) {
    require(!best.empty(), "rank_ranges: empty best set");
    const std::size_t m = best.front().decisions.size();
    for (const auto& c : best)
        require(c.decisions.size() == m, "rank_ranges: decision arity differs");
    for (const auto& c : rest)
        require(c.decisions.size() == m, "rank_ranges: decision arity differs");

    struct Keyed {
        RangeScore score;
        std::size_t order;
    };
    std::vector<Keyed> all;
    for (std::size_t j = 0; j < m; ++j) {
        Vec column;
        column.reserve(best.size() + rest.size());
        for (const auto& c : best)
            column.push_back(c.decisions[j]);
        for (const auto& c : rest)
            column.push_back(c.decisions[j]);
        const std::string name = j < names.size() ? names[j] : "x" + std::to_string(j);
        for (auto& range : discretize_values(column, bins, j, name)) {
            RangeScore rs;
            for (const auto& c : best)
                rs.best_count += range.contains(c.decisions[j]) ? 1 : 0;
            for (const auto& c : rest)
                rs.rest_count += range.contains(c.decisions[j]) ? 1 : 0;
            rs.b = static_cast<double>(rs.best_count) / static_cast<double>(best.size());
            rs.r = rest.empty() ? 0.0
                                : static_cast<double>(rs.rest_count) / static_cast<double>(rest.size());
            if (rs.b + rs.r <= 0.0)
                continue;
            rs.n = n;
            rs.s = star_score(rs.b, rs.r, n);
            rs.range = std::move(range);
            all.push_back({std::move(rs), all.size()});
        }
    }
    std::stable_sort(all.begin(), all.end(), [](const Keyed& x, const Keyed& y) {
        if (x.score.s != y.score.s)
            return x.score.s > y.score.s;
        if (x.score.b != y.score.b)
            return x.score.b > y.score.b;
        return x.order < y.order;
    });
    std::vector<RangeScore> out;
    out.reserve(all.size());
    for (auto& k : all)
        out.push_back(std::move(k.score));
    return out;
}

struct LadderRung {
    std::size_t index = 0;          // number of asserted ranges
    std::vector<Range> asserted;
    Vec champion;
    std::size_t evals = 0;          // reported by the optimizer
    std::size_t counter = 0;        // the rung problem's own evaluation counter
    std::size_t front_size = 0;
};

struct DecisionLadder {
    std::vector<LadderRung> rungs;  // rung 0 asserts nothing
    std::optional<std::size_t> conflict_at;  // rank of the first range that could not be asserted

    /// Number of rungs that assert at least one range.
    std::size_t asserted_rungs() const { return rungs.empty() ? 0 : rungs.size() - 1; }

    std::size_t total_evals() const {
        std::size_t t = 0;
        for (const auto& r : rungs)
            t += r.evals;
        return t;
    }
};

/// Raised when an optimizer run inside the ladder fails.
class RungFailure : public std::runtime_error {
  public:
    RungFailure(std::size_t rung, const std::string& what)
        : std::runtime_error("decision ladder rung " + std::to_string(rung) + ": " + what),
          rung_(rung) {}
    std::size_t rung() const noexcept { return rung_; }

  private:
    std::size_t rung_;
};

/// Rung i re-runs the optimizer on a fresh copy of `problem` with the i
/// highest-ranked ranges asserted, for i = 0..L where
/// L = min(|ranked|, max_rungs, rank of the first conflicting range). A range
/// conflicts when an earlier asserted range already constrains its decision or
/// it falls outside the decision's domain. Every rung uses `seed`, so rung 0
/// is exactly a plain run.
inline DecisionLadder decision_ladder(const Problem& problem, const OptimizerConfig& config,
                                      std::span<const RangeScore> ranked, std::size_t max_rungs,
                                      std::uint64_t seed) {
    require(!ranked.empty(), "decision_ladder: no ranked ranges");
    DecisionLadder ladder;
    std::vector<Assertion> asserted;
    std::vector<Range> ranges;
    std::vector<bool> used(problem.arity(), false);
    const std::size_t limit = std::min(ranked.size(), max_rungs);
    for (std::size_t i = 0; i <= limit; ++i) {
        if (i > 0) {
            const Range& r = ranked[i - 1].range;
            require(!r.categorical, "decision_ladder: categorical ranges cannot be asserted on decisions");
            if (r.column >= problem.arity() || used[r.column]) {
                ladder.conflict_at = i - 1;
                break;
            }
            asserted.push_back({r.column, r.lo, r.hi});
            if (!problem.with_assertions(asserted)) {
                ladder.conflict_at = i - 1;
                break;
            }
            used[r.column] = true;
            ranges.push_back(r);
        }
        Problem rung_problem = *problem.with_assertions(asserted);
        OptimizerResult res;
        try {
            res = run_optimizer(rung_problem, config, seed);
        } catch (const std::exception& e) {
            throw RungFailure(i, e.what());
        }
        LadderRung rung;
        rung.index = i;
        rung.asserted = ranges;
        rung.champion = *res.best.objectives;
        rung.evals = res.evals;
        rung.counter = rung_problem.evals();
        rung.front_size = res.front.size();
        ladder.rungs.push_back(std::move(rung));
    }
    return ladder;
}

} // namespace duo
