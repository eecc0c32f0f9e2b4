#pragma once

/// @file problems.hpp
/// @brief Benchmark optimization problems with constraint handling and
/// evaluation-budget accounting.
///
/// A Problem owns its goal functions, inequality constraints (satisfied when
/// <= 0) and equality constraints (satisfied when |g| <= 1e-6). When any
/// constraint exists, the summed violation is appended to the goal vector as
/// one extra minimized goal named "violation".

#include <cctype>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "duo/core.hpp"

namespace duo {

enum class DomainKind { continuous, integer, boolean };

/// Admissible values for one decision. Booleans are 0/1 with lo/hi in {0,1}.
struct Domain {
    DomainKind kind = DomainKind::continuous;
    double lo = 0.0;
    double hi = 1.0;

    static Domain continuous(double lo, double hi) { return {DomainKind::continuous, lo, hi}; }
    static Domain integer(double lo, double hi) { return {DomainKind::integer, lo, hi}; }
    static Domain boolean() { return {DomainKind::boolean, 0.0, 1.0}; }

    bool contains(double v) const {
        if (!(v >= lo && v <= hi))
            return false;
        if (kind == DomainKind::continuous)
            return true;
        return v == std::round(v);
    }

    /// Nearest admissible value. Booleans threshold at 0.5.
    double repair(double v) const {
        if (std::isnan(v))
            v = lo;
        switch (kind) {
        case DomainKind::boolean:
            return std::clamp(v >= 0.5 ? 1.0 : 0.0, lo, hi);
        case DomainKind::integer:
            return std::clamp(std::round(v), std::ceil(lo), std::floor(hi));
        case DomainKind::continuous:
            break;
        }
        return std::clamp(v, lo, hi);
    }

    double sample(Rng& rng) const {
        switch (kind) {
        case DomainKind::boolean:
        case DomainKind::integer: {
            const auto first = static_cast<long long>(std::ceil(lo));
            const auto last = static_cast<long long>(std::floor(hi));
            return static_cast<double>(first + static_cast<long long>(rng.index(
                                                   static_cast<std::size_t>(last - first + 1))));
        }
        case DomainKind::continuous:
            break;
        }
        return rng.uniform(lo, hi);
    }
};

using DecisionFn = std::function<double(std::span<const double>)>;

struct Goal {
    std::string name;
    Direction direction = Direction::minimize;
    DecisionFn fn;
};

/// Narrows decision `decision` to [lo, hi] (used when re-running an optimizer
/// with some decisions pre-asserted).
struct Assertion {
    std::size_t decision = 0;
    double lo = 0.0;
    double hi = 0.0;
};

class Problem {
  public:
    using Sampler = std::function<Vec(Rng&)>;

    static constexpr double equality_tolerance = 1e-6;

    Problem(std::string name, std::vector<Domain> domains, std::vector<Goal> goals)
        : name_(std::move(name)), domains_(std::move(domains)), goals_(std::move(goals)) {
        require(!domains_.empty(), "Problem: no decisions");
        require(!goals_.empty(), "Problem: no goals");
        for (const auto& d : domains_)
            require(d.lo <= d.hi, "Problem: empty decision domain");
    }

    const std::string& name() const noexcept { return name_; }
    std::size_t arity() const noexcept { return domains_.size(); }
    const std::vector<Domain>& domains() const noexcept { return domains_; }
    bool has_constraints() const noexcept { return !inequalities_.empty() || !equalities_.empty(); }

    /// Goals including the appended violation goal when constraints exist.
    std::size_t goal_count() const noexcept { return goals_.size() + (has_constraints() ? 1 : 0); }

    std::vector<std::string> goal_names() const {
        std::vector<std::string> out;
        for (const auto& g : goals_)
            out.push_back(g.name);
        if (has_constraints())
            out.emplace_back("violation");
        return out;
    }

    ObjectiveSpec objective_spec() const {
        std::vector<int> w;
        for (const auto& g : goals_)
            w.push_back(static_cast<int>(g.direction));
        if (has_constraints())
            w.push_back(-1);
        return ObjectiveSpec(std::move(w));
    }

    void add_inequality(DecisionFn g) { inequalities_.push_back(std::move(g)); }
    void add_equality(DecisionFn g) { equalities_.push_back(std::move(g)); }
    void set_sampler(Sampler s) { sampler_ = std::move(s); }
    void set_eval_cap(std::optional<std::size_t> cap) { cap_ = cap; }

    std::size_t evals() const noexcept { return counter_; }

    /// Same problem with a zeroed evaluation counter.
    Problem fresh() const {
        Problem p = *this;
        p.counter_ = 0;
        return p;
    }

    bool in_domain(std::span<const double> x) const {
        if (x.size() != arity())
            return false;
        for (std::size_t i = 0; i < x.size(); ++i)
            if (!domains_[i].contains(x[i]))
                return false;
        return true;
    }

    Vec repair(std::span<const double> x) const {
        require(x.size() == arity(), "Problem::repair: arity mismatch");
        Vec out(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            out[i] = domains_[i].repair(x[i]);
        return out;
    }

    /// A random admissible decision vector (problem-specific sampler if set).
    Vec sample(Rng& rng) const {
        if (sampler_)
            return repair(sampler_(rng));
        Vec x(arity());
        for (std::size_t i = 0; i < x.size(); ++i)
            x[i] = domains_[i].sample(rng);
        return x;
    }

    /// Summed constraint violation; zero iff every constraint holds.
    double violation(std::span<const double> x) const {
        double v = 0.0;
        for (const auto& g : inequalities_)
            v += std::max(0.0, g(x));
        for (const auto& h : equalities_) {
            const double e = std::abs(h(x));
            if (e > equality_tolerance)
                v += e;
        }
        return v;
    }

    Candidate evaluate(Candidate c) {
        require(in_domain(c.decisions), "Problem::evaluate: decisions outside domain");
        if (cap_ && counter_ >= *cap_)
            throw BudgetExhausted("evaluation cap of " + std::to_string(*cap_) + " reached");
        ++counter_;
        Vec f;
        f.reserve(goal_count());
        for (const auto& g : goals_)
            f.push_back(g.fn(c.decisions));
        if (has_constraints())
            f.push_back(violation(c.decisions));
        c.objectives = std::move(f);
        return c;
    }

    Candidate evaluate(Vec decisions) { return evaluate(Candidate{std::move(decisions), {}}); }

    /// Copy with the asserted decisions narrowed and a zeroed counter. Returns
    /// nullopt when an assertion does not intersect the decision's domain.
    std::optional<Problem> with_assertions(std::span<const Assertion> asserted) const {
        Problem p = fresh();
        for (const auto& a : asserted) {
            require(a.decision < arity(), "with_assertions: decision index out of range");
            Domain& d = p.domains_[a.decision];
            const double lo = std::max(d.lo, a.lo);
            const double hi = std::min(d.hi, a.hi);
            if (lo > hi)
                return std::nullopt;
            if (d.kind != DomainKind::continuous && std::ceil(lo) > std::floor(hi))
                return std::nullopt;
            d.lo = lo;
            d.hi = hi;
        }
        if (sampler_) {
            auto base = sampler_;
            auto domains = p.domains_;
            std::vector<Assertion> fixed(asserted.begin(), asserted.end());
            p.sampler_ = [base, domains, fixed](Rng& rng) {
                Vec x = base(rng);
                for (const auto& a : fixed)
                    if (!domains[a.decision].contains(x[a.decision]))
                        x[a.decision] = domains[a.decision].sample(rng);
                return x;
            };
        }
        return p;
    }

  private:
    std::string name_;
    std::vector<Domain> domains_;
    std::vector<Goal> goals_;
    std::vector<DecisionFn> inequalities_;
    std::vector<DecisionFn> equalities_;
    Sampler sampler_;
    std::optional<std::size_t> cap_;
    std::size_t counter_ = 0;
};

// ---------------------------------------------------------------------------
// Requirements selection (next-release problem)
// ---------------------------------------------------------------------------

struct RequirementsInstance {
    Vec values;
    Vec costs;
    double budget = 0.0;

    void validate() const {
        require(values.size() == costs.size(), "requirements: values/costs length mismatch");
        require(!values.empty(), "requirements: no items");
        require(budget >= 0.0, "requirements: negative budget");
    }

    /// Integer values in [1,20], costs in [1,15], budget half the total cost.
    static RequirementsInstance random(std::size_t n, std::uint64_t seed) {
        Rng rng(seed);
        RequirementsInstance inst;
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            inst.values.push_back(1.0 + static_cast<double>(rng.index(20)));
            inst.costs.push_back(1.0 + static_cast<double>(rng.index(15)));
            total += inst.costs.back();
        }
        inst.budget = std::floor(total / 2.0);
        return inst;
    }
};

/// Goals (value max, cost min) plus violation max(0, cost - budget).
inline Problem make_requirements(RequirementsInstance inst) {
    inst.validate();
    auto shared = std::make_shared<const RequirementsInstance>(std::move(inst));
    auto total = [shared](const Vec& weights, std::span<const double> x) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
            s += x[i] * weights[i];
        return s;
    };
    std::vector<Goal> goals{
        {"value", Direction::maximize, [shared, total](auto x) { return total(shared->values, x); }},
        {"cost", Direction::minimize, [shared, total](auto x) { return total(shared->costs, x); }},
    };
    Problem p("requirements", std::vector<Domain>(shared->values.size(), Domain::boolean()),
              std::move(goals));
    p.add_inequality([shared, total](auto x) { return total(shared->costs, x) - shared->budget; });
    return p;
}

// ---------------------------------------------------------------------------
// Software product lines (feature trees + cross-tree constraints)
// ---------------------------------------------------------------------------

enum class FeatureEdge { root, mandatory, optional, alternative };

struct Feature {
    std::string name;
    int parent = -1;
    FeatureEdge edge = FeatureEdge::root;
    double cost = 0.0;
};

/// Feature tree in parent-first order plus CNF clauses. A literal +(i+1)
/// means "feature i selected", -(i+1) means "feature i not selected".
/// Siblings attached by alternative edges form one exactly-one group.
struct ProductLineInstance {
    std::vector<Feature> features;
    std::vector<std::vector<int>> cross_tree;

    void validate() const {
        require(!features.empty(), "product line: no features");
        require(features[0].parent == -1 && features[0].edge == FeatureEdge::root,
                "product line: feature 0 must be the root");
        for (std::size_t i = 1; i < features.size(); ++i) {
            const int p = features[i].parent;
            require(p >= 0 && static_cast<std::size_t>(p) < i,
                    "product line: parents must precede children");
            require(features[i].edge != FeatureEdge::root, "product line: multiple roots");
        }
        for (const auto& clause : cross_tree) {
            require(!clause.empty(), "product line: empty clause");
            for (int lit : clause) {
                const auto v = static_cast<std::size_t>(std::abs(lit));
                require(lit != 0 && v <= features.size(),
                        "product line: clause references unknown feature");
            }
        }
    }

    /// Alternative groups keyed by parent index.
    std::map<int, std::vector<std::size_t>> alternative_groups() const {
        std::map<int, std::vector<std::size_t>> groups;
        for (std::size_t i = 1; i < features.size(); ++i)
            if (features[i].edge == FeatureEdge::alternative)
                groups[features[i].parent].push_back(i);
        return groups;
    }

    /// Number of violated tree and cross-tree constraints.
    std::size_t violations(std::span<const double> x) const {
        auto on = [&](std::size_t i) { return x[i] >= 0.5; };
        std::size_t v = on(0) ? 0 : 1;
        for (std::size_t i = 1; i < features.size(); ++i) {
            const auto p = static_cast<std::size_t>(features[i].parent);
            if (on(i) && !on(p))
                ++v;
            if (features[i].edge == FeatureEdge::mandatory && on(p) && !on(i))
                ++v;
        }
        for (const auto& [parent, group] : alternative_groups()) {
            if (!on(static_cast<std::size_t>(parent)))
                continue;
            std::size_t chosen = 0;
            for (std::size_t c : group)
                chosen += on(c) ? 1 : 0;
            if (chosen != 1)
                ++v;
        }
        for (const auto& clause : cross_tree) {
            bool sat = false;
            for (int lit : clause) {
                const auto idx = static_cast<std::size_t>(std::abs(lit) - 1);
                sat = sat || (lit > 0 ? on(idx) : !on(idx));
            }
            if (!sat)
                ++v;
        }
        return v;
    }

    /// Top-down sample that satisfies every tree constraint; cross-tree
    /// clauses may still be violated.
    Vec sample_tree_valid(Rng& rng) const {
        Vec x(features.size(), 0.0);
        x[0] = 1.0;
        const auto groups = alternative_groups();
        std::vector<bool> decided(features.size(), false);
        decided[0] = true;
        for (std::size_t i = 1; i < features.size(); ++i) {
            if (decided[i])
                continue;
            const auto p = static_cast<std::size_t>(features[i].parent);
            decided[i] = true;
            if (x[p] < 0.5)
                continue;
            switch (features[i].edge) {
            case FeatureEdge::mandatory:
                x[i] = 1.0;
                break;
            case FeatureEdge::optional:
                x[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
                break;
            case FeatureEdge::alternative: {
                const auto& group = groups.at(features[i].parent);
                const std::size_t pick = group[rng.index(group.size())];
                for (std::size_t c : group) {
                    decided[c] = true;
                    x[c] = c == pick ? 1.0 : 0.0;
                }
                break;
            }
            case FeatureEdge::root:
                break;
            }
        }
        return x;
    }

    /// Random tree: each feature hangs off a random earlier feature with edge
    /// mix 15% mandatory / 55% optional / 30% alternative, costs in [1,10],
    /// and features/10 two-literal cross-tree clauses.
    static ProductLineInstance random(std::size_t n, std::uint64_t seed) {
        require(n >= 2, "product line: need at least two features");
        Rng rng(seed);
        ProductLineInstance inst;
        inst.features.push_back({"f0", -1, FeatureEdge::root, rng.uniform(1.0, 10.0)});
        for (std::size_t i = 1; i < n; ++i) {
            const double u = rng.uniform();
            const FeatureEdge e = u < 0.15   ? FeatureEdge::mandatory
                                  : u < 0.70 ? FeatureEdge::optional
                                             : FeatureEdge::alternative;
            inst.features.push_back({"f" + std::to_string(i), static_cast<int>(rng.index(i)), e,
                                     rng.uniform(1.0, 10.0)});
        }
        for (std::size_t k = 0; k < n / 10; ++k) {
            const auto a = static_cast<int>(1 + rng.index(n - 1));
            auto b = static_cast<int>(1 + rng.index(n - 1));
            while (b == a)
                b = static_cast<int>(1 + rng.index(n - 1));
            // requires (a -> b) or excludes (not both)
            if (rng.bernoulli(0.5))
                inst.cross_tree.push_back({-(a + 1), b + 1});
            else
                inst.cross_tree.push_back({-(a + 1), -(b + 1)});
        }
        return inst;
    }
};

/// Goals (cost min, selected features max) plus the violation count.
inline Problem make_product_line(ProductLineInstance inst) {
    inst.validate();
    auto shared = std::make_shared<const ProductLineInstance>(std::move(inst));
    std::vector<Goal> goals{
        {"cost", Direction::minimize,
         [shared](std::span<const double> x) {
             double c = 0.0;
             for (std::size_t i = 0; i < x.size(); ++i)
                 c += x[i] * shared->features[i].cost;
             return c;
         }},
        {"features", Direction::maximize,
         [](std::span<const double> x) { return std::accumulate(x.begin(), x.end(), 0.0); }},
    };
    Problem p("product-line", std::vector<Domain>(shared->features.size(), Domain::boolean()),
              std::move(goals));
    p.add_inequality(
        [shared](std::span<const double> x) { return static_cast<double>(shared->violations(x)); });
    p.set_sampler([shared](Rng& rng) { return shared->sample_tree_valid(rng); });
    return p;
}

// ---------------------------------------------------------------------------
// Synthetic continuous and configuration problems
// ---------------------------------------------------------------------------

inline Problem make_sphere(std::size_t d) {
    require(d >= 1, "sphere: d must be >= 1");
    return Problem("sphere", std::vector<Domain>(d, Domain::continuous(-5.0, 5.0)),
                   {{"sum_sq", Direction::minimize, [](std::span<const double> x) {
                         double s = 0.0;
                         for (double v : x)
                             s += v * v;
                         return s;
                     }}});
}

/// Two minimized goals on [0,1]^d whose optimal front is f2 = 1 - sqrt(f1),
/// reached when every decision after the first is zero.
inline Problem make_biobjective_curve(std::size_t d) {
    require(d >= 2, "biobjective-curve: d must be >= 2");
    auto g = [](std::span<const double> x) {
        double s = 0.0;
        for (std::size_t i = 1; i < x.size(); ++i)
            s += x[i];
        return 1.0 + 9.0 * s / static_cast<double>(x.size() - 1);
    };
    return Problem("biobjective-curve", std::vector<Domain>(d, Domain::continuous(0.0, 1.0)),
                   {{"f1", Direction::minimize, [](std::span<const double> x) { return x[0]; }},
                    {"f2", Direction::minimize, [g](std::span<const double> x) {
                         const double gx = g(x);
                         return gx * (1.0 - std::sqrt(x[0] / gx));
                     }}});
}

/// Synthetic software-configuration runtime: `d` integer options with
/// `levels` settings each. Each option contributes a seeded piecewise cost per
/// level, and a few seeded option pairs add an interaction penalty when both
/// sit at their top level. Minimized.
inline Problem make_synthetic_config(std::size_t d, std::size_t levels, std::uint64_t seed) {
    require(d >= 1 && levels >= 2, "synthetic-config: need d >= 1 and levels >= 2");
    Rng rng(seed);
    struct Model {
        std::vector<Vec> level_cost;
        std::vector<std::pair<std::size_t, std::size_t>> pairs;
        Vec pair_cost;
        std::size_t top = 0;
    };
    auto m = std::make_shared<Model>();
    m->top = levels - 1;
    for (std::size_t i = 0; i < d; ++i) {
        // Option importance decays geometrically so a few options dominate.
        const double scale = 10.0 * std::pow(0.6, static_cast<double>(i));
        Vec costs(levels);
        for (auto& c : costs)
            c = scale * rng.uniform();
        m->level_cost.push_back(std::move(costs));
    }
    for (std::size_t k = 0; k < std::max<std::size_t>(1, d / 3) && d >= 2; ++k) {
        const std::size_t a = rng.index(d);
        std::size_t b = rng.index(d);
        while (b == a)
            b = rng.index(d);
        m->pairs.emplace_back(a, b);
        m->pair_cost.push_back(rng.uniform(2.0, 6.0));
    }
    return Problem("synthetic-config",
                   std::vector<Domain>(d, Domain::integer(0.0, static_cast<double>(levels - 1))),
                   {{"runtime", Direction::minimize, [m](std::span<const double> x) {
                         double t = 1.0;
                         for (std::size_t i = 0; i < x.size(); ++i)
                             t += m->level_cost[i][static_cast<std::size_t>(x[i])];
                         for (std::size_t k = 0; k < m->pairs.size(); ++k) {
                             const auto [a, b] = m->pairs[k];
                             if (x[a] == static_cast<double>(m->top) &&
                                 x[b] == static_cast<double>(m->top))
                                 t += m->pair_cost[k];
                         }
                         return t;
                     }}});
}

/// `size` distinct admissible decision vectors drawn from the problem's sampler.
inline std::vector<Vec> make_pool(const Problem& problem, std::size_t size, std::uint64_t seed,
                                  std::size_t max_attempts_factor = 100) {
    Rng rng(seed);
    std::vector<Vec> pool;
    std::map<Vec, bool> seen;
    for (std::size_t tries = 0; pool.size() < size && tries < size * max_attempts_factor;
         ++tries) {
        Vec x = problem.sample(rng);
        if (seen.emplace(x, true).second)
            pool.push_back(std::move(x));
    }
    require(pool.size() == size, "make_pool: decision space too small for requested pool");
    return pool;
}

// ---------------------------------------------------------------------------
// Descriptors: "name(key=value, key=v1 v2 v3)"
// ---------------------------------------------------------------------------

struct Descriptor {
    std::string name;
    std::map<std::string, std::string> params;

    static Descriptor parse(const std::string& text) {
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        Descriptor d;
        const auto open = text.find('(');
        if (open == std::string::npos) {
            d.name = trim(text);
        } else {
            require(text.back() == ')' || trim(text).back() == ')',
                    "descriptor: missing ')' in '" + text + "'");
            d.name = trim(text.substr(0, open));
            const auto close = text.rfind(')');
            std::stringstream body(text.substr(open + 1, close - open - 1));
            std::string item;
            while (std::getline(body, item, ',')) {
                item = trim(item);
                if (item.empty())
                    continue;
                const auto eq = item.find('=');
                require(eq != std::string::npos, "descriptor: expected key=value, got '" + item + "'");
                d.params[trim(item.substr(0, eq))] = trim(item.substr(eq + 1));
            }
        }
        require(!d.name.empty(), "descriptor: empty name");
        return d;
    }

    bool has(const std::string& key) const { return params.contains(key); }

    double number(const std::string& key, double fallback) const {
        const auto it = params.find(key);
        if (it == params.end())
            return fallback;
        try {
            std::size_t used = 0;
            const double v = std::stod(it->second, &used);
            require(used == it->second.size(), "");
            return v;
        } catch (const std::exception&) {
            throw ContractError("descriptor: '" + key + "' is not a number: " + it->second);
        }
    }

    std::size_t count(const std::string& key, std::size_t fallback) const {
        const double v = number(key, static_cast<double>(fallback));
        require(v >= 0 && v == std::floor(v), "descriptor: '" + key + "' must be a whole number");
        return static_cast<std::size_t>(v);
    }

    Vec list(const std::string& key) const {
        Vec out;
        const auto it = params.find(key);
        if (it == params.end())
            return out;
        std::stringstream ss(it->second);
        std::string tok;
        while (ss >> tok) {
            try {
                out.push_back(std::stod(tok));
            } catch (const std::exception&) {
                throw ContractError("descriptor: bad number '" + tok + "' in " + key);
            }
        }
        return out;
    }
};

/// Builds a benchmark from a descriptor. Known names:
///   sphere(d=5)
///   biobjective-curve(d=5)
///   requirements(n=10, seed=1)  or  requirements(values=10 6 5, costs=5 3 2, budget=5)
///   product-line(features=60, seed=1)
///   synthetic-config(d=10, levels=5, seed=1)
inline Problem make_problem(const std::string& descriptor) {
    const Descriptor d = Descriptor::parse(descriptor);
    if (d.name == "sphere")
        return make_sphere(d.count("d", 5));
    if (d.name == "biobjective-curve")
        return make_biobjective_curve(d.count("d", 5));
    if (d.name == "requirements") {
        if (d.has("values")) {
            RequirementsInstance inst{d.list("values"), d.list("costs"), d.number("budget", 0.0)};
            require(!d.has("n") || d.count("n", 0) == inst.values.size(),
                    "requirements: n disagrees with values");
            return make_requirements(std::move(inst));
        }
        return make_requirements(
            RequirementsInstance::random(d.count("n", 10), static_cast<std::uint64_t>(d.count("seed", 1))));
    }
    if (d.name == "product-line")
        return make_product_line(ProductLineInstance::random(
            d.count("features", 60), static_cast<std::uint64_t>(d.count("seed", 1))));
    if (d.name == "synthetic-config")
        return make_synthetic_config(d.count("d", 10), d.count("levels", 5),
                                     static_cast<std::uint64_t>(d.count("seed", 1)));
    throw ContractError("unknown problem '" + d.name + "'");
}

} // namespace duo
