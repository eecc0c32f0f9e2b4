#pragma once

/// @file core.hpp
/// @brief Candidate/objective model, seeded randomness, boolean dominance and
/// the indicator-based (Zitzler) comparison predicate.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace duo {

using Vec = std::vector<double>;

/// Raised when a caller breaks an operation's precondition.
class ContractError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a run asks for more evaluations than its cap allows.
class BudgetExhausted : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
    if (!ok)
        throw ContractError(what);
}

// ---------------------------------------------------------------------------
// Randomness
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Child seed for stream `index` of `master`. Streams are independent of one
/// another and reproducible individually.
inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
    return splitmix64(master ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

/// Seeded random source. The engine is mt19937_64 (its output sequence is fixed
/// by the standard); every distribution is implemented here so results are
/// bit-identical across standard library implementations.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n) {
        require(n > 0, "Rng::index: empty range");
        const std::uint64_t bound = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t x = next();
        while (x >= limit)
            x = next();
        return static_cast<std::size_t>(x % bound);
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal (Box-Muller, one draw per call).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0)
            u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i)
            std::swap(v[i - 1], v[index(i)]);
    }

    /// `k` distinct indices from [0, n), in draw order.
    std::vector<std::size_t> sample_distinct(std::size_t n, std::size_t k) {
        require(k <= n, "Rng::sample_distinct: k > n");
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        for (std::size_t i = 0; i < k; ++i)
            std::swap(idx[i], idx[i + index(n - i)]);
        idx.resize(k);
        return idx;
    }

  private:
    std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------
// Candidates and objective bookkeeping
// ---------------------------------------------------------------------------

/// A decision vector and, once evaluated, its goal scores.
struct Candidate {
    Vec decisions;
    std::optional<Vec> objectives;

    bool evaluated() const noexcept { return objectives.has_value(); }

    const Vec& scores() const {
        require(evaluated(), "candidate has not been evaluated");
        return *objectives;
    }

    friend bool operator==(const Candidate&, const Candidate&) = default;
};

enum class Direction : int { minimize = -1, maximize = 1 };

/// Goal directions plus the lo/hi bounds used for normalization. Bounds start
/// empty (lo = +inf, hi = -inf) and grow through update(); fixed bounds can be
/// installed with set_static_bounds(), after which update() is a no-op.
class ObjectiveSpec {
  public:
    ObjectiveSpec() = default;

    explicit ObjectiveSpec(std::vector<int> weights) : weights_(std::move(weights)) {
        for (int w : weights_)
            require(w == -1 || w == 1, "ObjectiveSpec: weights must be -1 or +1");
        reset_bounds();
    }

    static ObjectiveSpec minimize(std::size_t goals) {
        return ObjectiveSpec(std::vector<int>(goals, -1));
    }

    std::size_t goal_count() const noexcept { return weights_.size(); }
    const std::vector<int>& weights() const noexcept { return weights_; }
    int weight(std::size_t g) const { return weights_.at(g); }
    const Vec& lo() const noexcept { return lo_; }
    const Vec& hi() const noexcept { return hi_; }
    bool static_bounds() const noexcept { return static_; }

    bool has_bounds() const noexcept {
        for (std::size_t g = 0; g < lo_.size(); ++g)
            if (!(lo_[g] <= hi_[g]))
                return false;
        return !lo_.empty();
    }

    void reset_bounds() {
        if (static_)
            return;
        lo_.assign(weights_.size(), std::numeric_limits<double>::infinity());
        hi_.assign(weights_.size(), -std::numeric_limits<double>::infinity());
    }

    void set_static_bounds(Vec lo, Vec hi) {
        require(lo.size() == goal_count() && hi.size() == goal_count(),
                "ObjectiveSpec: bound length mismatch");
        for (std::size_t g = 0; g < lo.size(); ++g)
            require(lo[g] <= hi[g], "ObjectiveSpec: lo > hi");
        lo_ = std::move(lo);
        hi_ = std::move(hi);
        static_ = true;
    }

    /// Widens the running bounds to include `objectives`.
    void update(std::span<const double> objectives) {
        require(objectives.size() == goal_count(), "ObjectiveSpec: goal count mismatch");
        if (static_)
            return;
        for (std::size_t g = 0; g < objectives.size(); ++g) {
            lo_[g] = std::min(lo_[g], objectives[g]);
            hi_[g] = std::max(hi_[g], objectives[g]);
        }
    }

    /// Resets running bounds to exactly cover the evaluated members of `pop`.
    void fit(std::span<const Candidate> pop) {
        if (static_)
            return;
        reset_bounds();
        for (const auto& c : pop)
            if (c.evaluated())
                update(*c.objectives);
    }

  private:
    std::vector<int> weights_;
    Vec lo_;
    Vec hi_;
    bool static_ = false;
};

// ---------------------------------------------------------------------------
// Comparison predicates
// ---------------------------------------------------------------------------

inline double normalize(double z, double lo, double hi) noexcept {
    return (z - lo) / (hi - lo + 0.00001);
}

/// x no worse than y on every goal (direction-adjusted) and strictly better on one.
inline bool boolean_dominates(std::span<const double> x, std::span<const double> y,
                              const ObjectiveSpec& spec) {
    require(x.size() == spec.goal_count() && y.size() == spec.goal_count(),
            "boolean_dominates: length mismatch");
    bool strictly = false;
    for (std::size_t g = 0; g < x.size(); ++g) {
        const double xv = spec.weight(g) * x[g];
        const double yv = spec.weight(g) * y[g];
        if (xv < yv)
            return false;
        if (xv > yv)
            strictly = true;
    }
    return strictly;
}

/// Both losses of the indicator comparison between x and y. Values outside
/// [lo, hi] are clamped first; when the spec has no bounds yet, the bounds of
/// {x, y} are used.
inline std::pair<double, double> zitzler_losses(std::span<const double> x,
                                                std::span<const double> y,
                                                const ObjectiveSpec& spec) {
    const std::size_t n = spec.goal_count();
    require(x.size() == n && y.size() == n, "zitzler_better: length mismatch");
    const bool bounded = spec.has_bounds();
    double xloss = 0.0;
    double yloss = 0.0;
    for (std::size_t g = 0; g < n; ++g) {
        const double lo = bounded ? spec.lo()[g] : std::min(x[g], y[g]);
        const double hi = bounded ? spec.hi()[g] : std::max(x[g], y[g]);
        const double a = normalize(std::clamp(x[g], lo, hi), lo, hi);
        const double b = normalize(std::clamp(y[g], lo, hi), lo, hi);
        const double w = spec.weight(g);
        xloss -= std::pow(10.0, w * (a - b) / static_cast<double>(n));
        yloss -= std::pow(10.0, w * (b - a) / static_cast<double>(n));
    }
    return {xloss, yloss};
}

inline bool zitzler_better(std::span<const double> x, std::span<const double> y,
                           const ObjectiveSpec& spec) {
    const auto [xloss, yloss] = zitzler_losses(x, y, spec);
    return xloss < yloss;
}

// ---------------------------------------------------------------------------
// Pareto filtering
// ---------------------------------------------------------------------------

/// Indices (ascending) of members not dominated by any other member.
inline std::vector<std::size_t> nondominated_indices(std::span<const Candidate> pop,
                                                     const ObjectiveSpec& spec) {
    for (const auto& c : pop)
        require(c.evaluated(), "nondominated_filter: unevaluated candidate");
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < pop.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < pop.size() && !dominated; ++j)
            dominated = j != i && boolean_dominates(*pop[j].objectives, *pop[i].objectives, spec);
        if (!dominated)
            keep.push_back(i);
    }
    return keep;
}

inline std::vector<Candidate> nondominated_filter(std::span<const Candidate> pop,
                                                  const ObjectiveSpec& spec) {
    std::vector<Candidate> out;
    for (std::size_t i : nondominated_indices(pop, spec))
        out.push_back(pop[i]);
    return out;
}

/// Non-dominated archive of every candidate offered to it. Exact duplicates
/// (same decisions and objectives) are stored once.
class ParetoArchive {
  public:
    explicit ParetoArchive(ObjectiveSpec spec) : spec_(std::move(spec)) {}

    /// Returns true when `c` entered the archive.
    bool offer(const Candidate& c) {
        const Vec& f = c.scores();
        for (const auto& m : members_) {
            if (boolean_dominates(*m.objectives, f, spec_) || m == c)
                return false;
        }
        std::erase_if(members_, [&](const Candidate& m) {
            return boolean_dominates(f, *m.objectives, spec_);
        });
        members_.push_back(c);
        return true;
    }

    const std::vector<Candidate>& members() const noexcept { return members_; }
    const ObjectiveSpec& spec() const noexcept { return spec_; }

  private:
    ObjectiveSpec spec_;
    std::vector<Candidate> members_;
};

/// Member of `front` that wins the most pairwise indicator comparisons against
/// the rest of the front, bounds taken from the front itself. Ties go to the
/// lowest index.
inline std::size_t champion_index(std::span<const Candidate> front, ObjectiveSpec spec) {
    require(!front.empty(), "champion_index: empty front");
    spec.fit(front);
    std::size_t best = 0;
    std::size_t best_wins = 0;
    for (std::size_t i = 0; i < front.size(); ++i) {
        std::size_t wins = 0;
        for (std::size_t j = 0; j < front.size(); ++j)
            if (i != j && zitzler_better(*front[i].objectives, *front[j].objectives, spec))
                ++wins;
        if (i == 0 || wins > best_wins) {
            best = i;
            best_wins = wins;
        }
    }
    return best;
}

} // namespace duo
