#pragma once

/// @file optimizers.hpp
/// @brief Differential evolution, an elitist non-dominated-sorting GA, the SWAY
/// sampler and FLASH surrogate-guided search.
///
/// Every optimizer reports `evals` as the exact change of the problem's
/// evaluation counter over the run, and returns as its front the
/// non-dominated set of everything it evaluated.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "duo/core.hpp"
#include "duo/miners.hpp"
#include "duo/problems.hpp"

namespace duo {

struct ObjectiveBounds {
    Vec lo;
    Vec hi;
};

struct GenerationSummary {
    std::size_t generation = 0;
    std::size_t evals = 0;       // cumulative
    std::size_t front_size = 0;
    Vec champion;
};

struct OptimizerResult {
    std::vector<Candidate> front;
    Candidate best;
    std::size_t evals = 0;
    std::vector<GenerationSummary> history;
};

namespace detail {

/// Evaluates through the problem, archives every result, and closes the run
/// with counter-exact accounting.
class RunLog {
  public:
    explicit RunLog(Problem& problem)
        : problem_(problem), start_(problem.evals()), archive_(problem.objective_spec()) {}

    Candidate evaluate(Vec decisions) {
        Candidate c = problem_.evaluate(std::move(decisions));
        archive_.offer(c);
        return c;
    }

    void snapshot(std::size_t generation) {
        const auto& front = archive_.members();
        GenerationSummary s;
        s.generation = generation;
        s.evals = problem_.evals() - start_;
        s.front_size = front.size();
        s.champion = *front[champion_index(front, archive_.spec())].objectives;
        history_.push_back(std::move(s));
    }

    OptimizerResult finish() {
        OptimizerResult r;
        r.front = archive_.members();
        r.best = r.front[champion_index(r.front, archive_.spec())];
        r.evals = problem_.evals() - start_;
        r.history = std::move(history_);
        return r;
    }

  private:
    Problem& problem_;
    std::size_t start_;
    ParetoArchive archive_;
    std::vector<GenerationSummary> history_;
};

inline ObjectiveSpec selection_spec(const Problem& problem,
                                    const std::optional<ObjectiveBounds>& fixed) {
    ObjectiveSpec spec = problem.objective_spec();
    if (fixed)
        spec.set_static_bounds(fixed->lo, fixed->hi);
    return spec;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Differential evolution (rand/1/bin)
// ---------------------------------------------------------------------------

struct DeParams {
    std::size_t np = 20;
    double f = 0.75;
    double cr = 0.3;
    std::optional<std::size_t> generations;  // default 10 * arity
    std::vector<Vec> initial;                 // injected into generation zero
    std::optional<ObjectiveBounds> static_bounds;
};

/// Each generation builds one trial per member from three distinct other
/// members (donor a + f*(b - c), binomial crossover with cr), evaluates all
/// trials, refreshes the running bounds over members and trials, then lets a
/// trial replace its target when it is indicator-better.
inline OptimizerResult de_optimize(Problem& problem, const DeParams& params, std::uint64_t seed) {
    require(params.np >= 4, "de_optimize: np must be >= 4");
    require(params.f > 0.0 && params.f <= 2.0, "de_optimize: f must lie in (0, 2]");
    require(params.cr >= 0.0 && params.cr <= 1.0, "de_optimize: cr must lie in [0, 1]");
    require(params.initial.size() <= params.np, "de_optimize: more injected members than np");
    const std::size_t m = problem.arity();
    const std::size_t generations = params.generations.value_or(10 * m);

    Rng rng(seed);
    detail::RunLog log(problem);
    std::vector<Candidate> pop;
    pop.reserve(params.np);
    for (std::size_t i = 0; i < params.np; ++i)
        pop.push_back(log.evaluate(i < params.initial.size() ? problem.repair(params.initial[i])
                                                             : problem.sample(rng)));
    log.snapshot(0);

    ObjectiveSpec spec = detail::selection_spec(problem, params.static_bounds);
    std::vector<Candidate> trials(params.np);
    for (std::size_t gen = 1; gen <= generations; ++gen) {
        for (std::size_t i = 0; i < params.np; ++i) {
            std::size_t a = rng.index(params.np);
            while (a == i)
                a = rng.index(params.np);
            std::size_t b = rng.index(params.np);
            while (b == i || b == a)
                b = rng.index(params.np);
            std::size_t c = rng.index(params.np);
            while (c == i || c == a || c == b)
                c = rng.index(params.np);
            const Vec& target = pop[i].decisions;
            const std::size_t forced = rng.index(m);
            Vec trial(m);
            for (std::size_t j = 0; j < m; ++j) {
                const bool cross = j == forced || rng.uniform() < params.cr;
                trial[j] = cross ? pop[a].decisions[j] +
                                       params.f * (pop[b].decisions[j] - pop[c].decisions[j])
                                 : target[j];
            }
            trials[i] = log.evaluate(problem.repair(trial));
        }
        if (!spec.static_bounds()) {
            spec.fit(pop);
            for (const auto& t : trials)
                spec.update(*t.objectives);
        }
        for (std::size_t i = 0; i < params.np; ++i)
            if (zitzler_better(*trials[i].objectives, *pop[i].objectives, spec))
                pop[i] = std::move(trials[i]);
        log.snapshot(gen);
    }
    return log.finish();
}

// ---------------------------------------------------------------------------
// Elitist non-dominated-sorting GA
// ---------------------------------------------------------------------------

struct GaParams {
    std::size_t np = 100;
    std::size_t generations = 100;
    std::optional<double> mutation_rate;  // default 1 / arity
    std::optional<ObjectiveBounds> static_bounds;
};

/// Fronts of `pop` by boolean dominance, best first.
inline std::vector<std::vector<std::size_t>> nondominated_sort(std::span<const Candidate> pop,
                                                               const ObjectiveSpec& spec) {
    const std::size_t n = pop.size();
    std::vector<std::vector<std::size_t>> dominates(n);
    std::vector<std::size_t> dominated_by(n, 0);
    std::vector<std::vector<std::size_t>> fronts(1);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (boolean_dominates(*pop[i].objectives, *pop[j].objectives, spec)) {
                dominates[i].push_back(j);
                ++dominated_by[j];
            } else if (boolean_dominates(*pop[j].objectives, *pop[i].objectives, spec)) {
                dominates[j].push_back(i);
                ++dominated_by[i];
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        if (dominated_by[i] == 0)
            fronts[0].push_back(i);
    while (!fronts.back().empty()) {
        std::vector<std::size_t> next;
        for (std::size_t i : fronts.back())
            for (std::size_t j : dominates[i])
                if (--dominated_by[j] == 0)
                    next.push_back(j);
        std::sort(next.begin(), next.end());
        fronts.push_back(std::move(next));
    }
    fronts.pop_back();
    return fronts;
}

/// Crowding distance of each member of `front` (boundary members get +inf).
inline std::vector<double> crowding_distance(std::span<const Candidate> pop,
                                             std::span<const std::size_t> front) {
    const std::size_t n = front.size();
    std::vector<double> dist(n, 0.0);
    if (n == 0)
        return dist;
    const std::size_t goals = pop[front[0]].objectives->size();
    std::vector<std::size_t> order(n);
    for (std::size_t g = 0; g < goals; ++g) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        auto val = [&](std::size_t k) { return (*pop[front[k]].objectives)[g]; };
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return val(a) < val(b); });
        const double span = val(order.back()) - val(order.front());
        dist[order.front()] = dist[order.back()] = std::numeric_limits<double>::infinity();
        if (span <= 0.0)
            continue;
        for (std::size_t k = 1; k + 1 < n; ++k)
            dist[order[k]] += (val(order[k + 1]) - val(order[k - 1])) / span;
    }
    return dist;
}

/// Binary tournaments decided by boolean dominance, falling back to the
/// indicator comparison for incomparable pairs; uniform crossover; per-gene
/// mutation; survival by non-dominated sorting with crowding distance.
inline OptimizerResult ga_optimize(Problem& problem, const GaParams& params, std::uint64_t seed) {
    require(params.np >= 2 && params.np % 2 == 0, "ga_optimize: np must be even and >= 2");
    const std::size_t m = problem.arity();
    const double rate = params.mutation_rate.value_or(1.0 / static_cast<double>(m));
    require(rate >= 0.0 && rate <= 1.0, "ga_optimize: mutation rate must lie in [0, 1]");

    Rng rng(seed);
    detail::RunLog log(problem);
    std::vector<Candidate> pop;
    pop.reserve(params.np);
    for (std::size_t i = 0; i < params.np; ++i)
        pop.push_back(log.evaluate(problem.sample(rng)));
    log.snapshot(0);

    ObjectiveSpec spec = detail::selection_spec(problem, params.static_bounds);
    auto tournament = [&]() -> const Candidate& {
        const Candidate& a = pop[rng.index(pop.size())];
        const Candidate& b = pop[rng.index(pop.size())];
        if (boolean_dominates(*a.objectives, *b.objectives, spec))
            return a;
        if (boolean_dominates(*b.objectives, *a.objectives, spec))
            return b;
        if (zitzler_better(*b.objectives, *a.objectives, spec))
            return b;
        return a;
    };
    auto mutate = [&](Vec& x) {
        for (std::size_t j = 0; j < m; ++j) {
            if (!rng.bernoulli(rate))
                continue;
            const Domain& d = problem.domains()[j];
            switch (d.kind) {
            case DomainKind::boolean:
                x[j] = 1.0 - x[j];
                break;
            case DomainKind::integer:
                x[j] = d.sample(rng);
                break;
            case DomainKind::continuous:
                x[j] += 0.1 * (d.hi - d.lo) * rng.normal();
                break;
            }
        }
    };

    for (std::size_t gen = 1; gen <= params.generations; ++gen) {
        spec.fit(pop);
        std::vector<Candidate> merged = pop;
        while (merged.size() < 2 * params.np) {
            Vec x = tournament().decisions;
            Vec y = tournament().decisions;
            for (std::size_t j = 0; j < m; ++j)
                if (rng.bernoulli(0.5))
                    std::swap(x[j], y[j]);
            mutate(x);
            mutate(y);
            merged.push_back(log.evaluate(problem.repair(x)));
            merged.push_back(log.evaluate(problem.repair(y)));
        }
        std::vector<Candidate> next;
        next.reserve(params.np);
        for (const auto& front : nondominated_sort(merged, spec)) {
            if (next.size() + front.size() <= params.np) {
                for (std::size_t i : front)
                    next.push_back(merged[i]);
                continue;
            }
            const auto crowd = crowding_distance(merged, front);
            std::vector<std::size_t> order(front.size());
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t a, std::size_t b) { return crowd[a] > crowd[b]; });
            for (std::size_t k = 0; next.size() < params.np; ++k)
                next.push_back(merged[front[order[k]]]);
            break;
        }
        pop = std::move(next);
        log.snapshot(gen);
    }
    return log.finish();
}

// ---------------------------------------------------------------------------
// SWAY
// ---------------------------------------------------------------------------

struct SwayParams {
    std::size_t n0 = 10000;
    std::size_t stop = 20;
    bool evaluate_survivors = true;
    std::optional<ObjectiveBounds> static_bounds;
};

/// Upper bound on SWAY's evaluations: two poles per halving level plus the
/// final group.
inline std::size_t sway_eval_bound(std::size_t n0, std::size_t stop) {
    std::size_t levels = 0;
    for (std::size_t n = n0; n > stop; n = (n + 1) / 2)
        ++levels;
    return 2 * levels + stop;
}

/// Draws n0 unevaluated candidates, then repeatedly: picks two distant poles
/// (random member -> farthest A -> farthest-from-A B), evaluates them, orders
/// the group by projection onto the A-B axis, and keeps the half on the side
/// of the indicator-better pole. Stops once the group has at most `stop`
/// members and evaluates those survivors.
inline OptimizerResult sway_sample(Problem& problem, const SwayParams& params, std::uint64_t seed) {
    require(params.stop >= 2, "sway_sample: stop must be >= 2");
    require(params.n0 >= params.stop, "sway_sample: n0 must be >= stop");
    Rng rng(seed);
    detail::RunLog log(problem);

    const auto& domains = problem.domains();
    std::vector<Vec> pop(params.n0);
    std::vector<Vec> scaled(params.n0);
    for (std::size_t i = 0; i < params.n0; ++i) {
        pop[i] = problem.sample(rng);
        scaled[i].resize(pop[i].size());
        for (std::size_t j = 0; j < pop[i].size(); ++j) {
            const double width = domains[j].hi - domains[j].lo;
            scaled[i][j] = width > 0.0 ? (pop[i][j] - domains[j].lo) / width : 0.0;
        }
    }
    auto dist = [&](std::size_t a, std::size_t b) {
        return std::sqrt(squared_distance(scaled[a], scaled[b]));
    };

    std::vector<std::optional<Candidate>> done(params.n0);
    std::vector<Candidate> evaluated;
    auto eval = [&](std::size_t i) -> const Candidate& {
        if (!done[i]) {
            done[i] = log.evaluate(pop[i]);
            evaluated.push_back(*done[i]);
        }
        return *done[i];
    };
    auto farthest = [&](const std::vector<std::size_t>& group, std::size_t from) {
        std::size_t best = group.front();
        double best_d = -1.0;
        for (std::size_t i : group) {
            const double d = dist(from, i);
            if (d > best_d) {
                best = i;
                best_d = d;
            }
        }
        return best;
    };

    ObjectiveSpec spec = detail::selection_spec(problem, params.static_bounds);
    std::vector<std::size_t> group(params.n0);
    std::iota(group.begin(), group.end(), std::size_t{0});
    std::size_t level = 0;
    while (group.size() > params.stop) {
        const std::size_t pivot = group[rng.index(group.size())];
        const std::size_t a = farthest(group, pivot);
        std::size_t b = farthest(group, a);
        if (b == a)
            b = group.front() == a ? group[1] : group.front();
        const Candidate& ca = eval(a);
        const Candidate& cb = eval(b);
        const double c = dist(a, b);

        std::vector<std::pair<double, std::size_t>> proj;
        proj.reserve(group.size());
        for (std::size_t i : group) {
            const double da = dist(a, i);
            const double db = dist(b, i);
            proj.emplace_back(c > 0.0 ? (da * da + c * c - db * db) / (2.0 * c) : 0.0, i);
        }
        std::stable_sort(proj.begin(), proj.end(),
                         [](const auto& x, const auto& y) { return x.first < y.first; });

        spec.fit(evaluated);
        const bool keep_b = zitzler_better(*cb.objectives, *ca.objectives, spec);
        const std::size_t half = (group.size() + 1) / 2;
        std::vector<std::size_t> next;
        if (keep_b) {
            for (std::size_t k = half; k < proj.size(); ++k)
                next.push_back(proj[k].second);
        } else {
            for (std::size_t k = 0; k < half; ++k)
                next.push_back(proj[k].second);
        }
        group = std::move(next);
        log.snapshot(++level);
    }
    if (params.evaluate_survivors || evaluated.empty())
        for (std::size_t i : group)
            eval(i);
    log.snapshot(level + 1);
    return log.finish();
}

// ---------------------------------------------------------------------------
// FLASH
// ---------------------------------------------------------------------------

struct FlashParams {
    std::size_t init = 10;
    std::size_t budget = 40;
    CartParams surrogate{};
};

struct FlashResult {
    Candidate best;
    std::size_t best_index = 0;         // position in the pool
    std::size_t evals = 0;
    std::vector<std::size_t> order;     // pool indices in evaluation order
    std::vector<Candidate> evaluated;
};

/// Sequential model-based search over a finite pool of configurations:
/// evaluate `init` random members, then repeatedly fit a CART surrogate on
/// everything evaluated so far and evaluate the unevaluated member with the
/// best predicted value (lowest pool index on ties) until `budget` is spent.
inline FlashResult flash_optimize(Problem& problem, std::span<const Vec> pool,
                                  const FlashParams& params, std::uint64_t seed) {
    require(problem.goal_count() == 1, "flash_optimize: only single-objective problems are supported");
    require(params.init >= 1, "flash_optimize: init must be >= 1");
    require(params.init <= pool.size(), "flash_optimize: init exceeds the pool size");
    require(params.init <= params.budget && params.budget <= pool.size(),
            "flash_optimize: need init <= budget <= |pool|");
    const int w = problem.objective_spec().weight(0);
    const std::size_t start = problem.evals();
    const std::size_t m = problem.arity();

    Rng rng(seed);
    FlashResult res;
    std::vector<bool> seen(pool.size(), false);
    auto run = [&](std::size_t idx) {
        seen[idx] = true;
        res.order.push_back(idx);
        res.evaluated.push_back(problem.evaluate(pool[idx]));
    };
    for (std::size_t idx : rng.sample_distinct(pool.size(), params.init))
        run(idx);

    std::vector<std::vector<Cell>> rows(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i)
        rows[i].assign(pool[i].begin(), pool[i].end());

    while (res.order.size() < params.budget) {
        Dataset train;
        for (std::size_t j = 0; j < m; ++j) {
            Vec col;
            for (std::size_t idx : res.order)
                col.push_back(pool[idx][j]);
            train.add_numeric("x" + std::to_string(j), std::move(col));
        }
        Vec target;
        for (const auto& c : res.evaluated)
            target.push_back((*c.objectives)[0]);
        train.add_numeric("y", std::move(target),
                          w < 0 ? ColumnRole::minimize : ColumnRole::maximize);
        const Tree surrogate = cart_fit(train, m, params.surrogate);

        std::optional<std::size_t> pick;
        double pick_score = 0.0;
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (seen[i])
                continue;
            const double score = w * cart_predict_value(surrogate, rows[i]);
            if (!pick || score > pick_score) {
                pick = i;
                pick_score = score;
            }
        }
        run(*pick);
    }

    std::size_t best = 0;
    for (std::size_t k = 1; k < res.evaluated.size(); ++k)
        if (w * (*res.evaluated[k].objectives)[0] > w * (*res.evaluated[best].objectives)[0])
            best = k;
    res.best = res.evaluated[best];
    res.best_index = res.order[best];
    res.evals = problem.evals() - start;
    return res;
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

enum class OptimizerKind { de, ga, sway };

inline OptimizerKind parse_optimizer_kind(const std::string& name) {
    if (name == "de")
        return OptimizerKind::de;
    if (name == "ga")
        return OptimizerKind::ga;
    if (name == "sway")
        return OptimizerKind::sway;
    throw ContractError("unknown optimizer '" + name + "' (expected de, ga or sway)");
}

inline std::string to_string(OptimizerKind k) {
    switch (k) {
    case OptimizerKind::de:
        return "de";
    case OptimizerKind::ga:
        return "ga";
    case OptimizerKind::sway:
        return "sway";
    }
    return "?";
}

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::de;
    DeParams de;
    GaParams ga;
    SwayParams sway;
};

inline OptimizerResult run_optimizer(Problem& problem, const OptimizerConfig& config,
                                     std::uint64_t seed) {
    switch (config.kind) {
    case OptimizerKind::de:
        return de_optimize(problem, config.de, seed);
    case OptimizerKind::ga:
        return ga_optimize(problem, config.ga, seed);
    case OptimizerKind::sway:
        return sway_sample(problem, config.sway, seed);
    }
    throw ContractError("run_optimizer: bad optimizer kind");
}

} // namespace duo
