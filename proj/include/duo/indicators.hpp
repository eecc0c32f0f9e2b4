#pragma once

/// @file indicators.hpp
/// @brief Pareto-front quality indicators: generational distance, inverted
/// generational distance, spread, hypervolume and additive epsilon.
///
/// Distance-based indicators first orient every goal to minimization and
/// rescale it to [0,1] using caller-supplied bounds, or the bounds observed
/// over both fronts when none are supplied. Hypervolume only orients goals
/// (the reference point is in goal units) unless bounds are supplied.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "duo/core.hpp"

namespace duo {

struct Front {
    std::vector<Vec> points;
    ObjectiveSpec spec;

    Front() = default;
    Front(std::vector<Vec> pts, ObjectiveSpec s) : points(std::move(pts)), spec(std::move(s)) {
        for (const auto& p : points)
            require(p.size() == spec.goal_count(), "Front: point has the wrong goal count");
    }

    static Front minimizing(std::vector<Vec> pts) {
        const std::size_t goals = pts.empty() ? 0 : pts.front().size();
        return Front(std::move(pts), ObjectiveSpec::minimize(goals));
    }

    static Front of(std::span<const Candidate> cs, ObjectiveSpec s) {
        std::vector<Vec> pts;
        for (const auto& c : cs)
            pts.push_back(c.scores());
        return Front(std::move(pts), std::move(s));
    }

    std::size_t goals() const noexcept { return spec.goal_count(); }
    std::size_t size() const noexcept { return points.size(); }
    bool empty() const noexcept { return points.empty(); }
};

/// Optional fixed per-goal bounds (goal units) for normalization.
struct NormalizationBounds {
    Vec lo;
    Vec hi;
};

namespace detail {

inline void check_same_goals(const Front& a, const Front& b, const char* op) {
    require(a.goals() == b.goals(), std::string(op) + ": goal-count mismatch");
    require(a.spec.weights() == b.spec.weights(), std::string(op) + ": goal directions differ");
}

/// Points of `fronts` oriented to minimization and scaled to [0,1].
inline std::vector<std::vector<Vec>> normalized(std::initializer_list<const Front*> fronts,
                                                const std::optional<NormalizationBounds>& bounds) {
    const Front& first = **fronts.begin();
    const std::size_t d = first.goals();
    Vec lo(d, std::numeric_limits<double>::infinity());
    Vec hi(d, -std::numeric_limits<double>::infinity());
    if (bounds) {
        require(bounds->lo.size() == d && bounds->hi.size() == d, "indicator: bounds length mismatch");
        lo = bounds->lo;
        hi = bounds->hi;
    } else {
        for (const Front* f : fronts)
            for (const auto& p : f->points)
                for (std::size_t g = 0; g < d; ++g) {
                    lo[g] = std::min(lo[g], p[g]);
                    hi[g] = std::max(hi[g], p[g]);
                }
    }
    std::vector<std::vector<Vec>> out;
    for (const Front* f : fronts) {
        std::vector<Vec> pts;
        for (const auto& p : f->points) {
            Vec q(d);
            for (std::size_t g = 0; g < d; ++g) {
                const double width = hi[g] - lo[g];
                const double oriented = first.spec.weight(g) > 0 ? hi[g] - p[g] : p[g] - lo[g];
                q[g] = width > 0.0 ? oriented / width : 0.0;
            }
            pts.push_back(std::move(q));
        }
        out.push_back(std::move(pts));
    }
    return out;
}

inline double euclid(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

/// Mean over `from` of the distance to the nearest point of `to`.
inline double mean_nearest(const std::vector<Vec>& from, const std::vector<Vec>& to) {
    double total = 0.0;
    for (const auto& p : from) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& q : to)
            best = std::min(best, euclid(p, q));
        total += best;
    }
    return total / static_cast<double>(from.size());
}

} // namespace detail

/// Mean distance from each predicted point to its nearest actual point.
inline double gd(const Front& predicted, const Front& actual,
                 const std::optional<NormalizationBounds>& bounds = std::nullopt) {
    detail::check_same_goals(predicted, actual, "gd");
    require(!predicted.empty() && !actual.empty(), "gd: fronts must be non-empty");
    const auto n = detail::normalized({&predicted, &actual}, bounds);
    return detail::mean_nearest(n[0], n[1]);
}

/// Mean distance from each actual point to its nearest predicted point.
inline double igd(const Front& predicted, const Front& actual,
                  const std::optional<NormalizationBounds>& bounds = std::nullopt) {
    detail::check_same_goals(predicted, actual, "igd");
    require(!predicted.empty() && !actual.empty(), "igd: fronts must be non-empty");
    const auto n = detail::normalized({&predicted, &actual}, bounds);
    return detail::mean_nearest(n[1], n[0]);
}

/// Extreme points of the true front, used by spread's d_f and d_l terms.
struct SpreadExtremes {
    Vec first;
    Vec last;
};

/// Two goals: Deb's delta over consecutive gaps of the front sorted by goal 1.
/// More goals: standard deviation of nearest-neighbour distances divided by
/// their mean. Zero for a front whose points all coincide.
inline double spread(const Front& front, const std::optional<SpreadExtremes>& extremes = std::nullopt,
                     const std::optional<NormalizationBounds>& bounds = std::nullopt) {
    require(front.size() >= 2, "spread: need at least two points");
    Front with_extremes = front;
    if (extremes) {
        require(extremes->first.size() == front.goals() && extremes->last.size() == front.goals(),
                "spread: extreme point has the wrong goal count");
        with_extremes.points.push_back(extremes->first);
        with_extremes.points.push_back(extremes->last);
    }
    auto pts = detail::normalized({&with_extremes}, bounds)[0];
    std::optional<Vec> first_extreme;
    std::optional<Vec> last_extreme;
    if (extremes) {
        last_extreme = pts.back();
        pts.pop_back();
        first_extreme = pts.back();
        pts.pop_back();
    }
    const std::size_t n = pts.size();

    if (front.goals() != 2) {
        Vec nn(n, std::numeric_limits<double>::infinity());
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j)
                    nn[i] = std::min(nn[i], detail::euclid(pts[i], pts[j]));
        const double mean = std::accumulate(nn.begin(), nn.end(), 0.0) / static_cast<double>(n);
        if (mean <= 0.0)
            return 0.0;
        double var = 0.0;
        for (double v : nn)
            var += (v - mean) * (v - mean);
        return std::sqrt(var / static_cast<double>(n)) / mean;
    }

    std::stable_sort(pts.begin(), pts.end(), [](const Vec& a, const Vec& b) {
        return a[0] < b[0] || (a[0] == b[0] && a[1] < b[1]);
    });
    Vec gaps;
    for (std::size_t i = 0; i + 1 < n; ++i)
        gaps.push_back(detail::euclid(pts[i], pts[i + 1]));
    const double mean = std::accumulate(gaps.begin(), gaps.end(), 0.0) / static_cast<double>(gaps.size());
    const double df = first_extreme ? detail::euclid(*first_extreme, pts.front()) : 0.0;
    const double dl = last_extreme ? detail::euclid(*last_extreme, pts.back()) : 0.0;
    double dev = 0.0;
    for (double g : gaps)
        dev += std::abs(g - mean);
    const double denom = df + dl + static_cast<double>(n - 1) * mean;
    return denom > 0.0 ? (df + dl + dev) / denom : 0.0;
}

struct HypervolumeOptions {
    std::size_t samples = 100000;          // Monte Carlo draws for >= 3 goals
    std::uint64_t seed = 1;
    bool force_monte_carlo = false;
    std::optional<NormalizationBounds> bounds;
};

struct HypervolumeResult {
    double value = 0.0;
    double std_error = 0.0;  // zero for exact computations
    bool exact = true;
};

/// Volume of the union of boxes spanned by each front point and the reference
/// point (after orienting goals to minimization). Points that do not strictly
/// dominate the reference contribute nothing. Exact for up to two goals,
/// Monte Carlo beyond that (or when forced).
inline HypervolumeResult hypervolume(const Front& front, const Vec& reference,
                                     const HypervolumeOptions& opts = {}) {
    const std::size_t d = front.goals();
    require(reference.size() == d || (front.empty() && !reference.empty()),
            "hypervolume: reference dimension mismatch");
    if (front.empty())
        return {};

    // Orient: maximized goals are negated. Optionally rescale by supplied bounds.
    auto orient = [&](const Vec& p) {
        Vec q(d);
        for (std::size_t g = 0; g < d; ++g) {
            double v = front.spec.weight(g) > 0 ? -p[g] : p[g];
            if (opts.bounds) {
                const double lo = front.spec.weight(g) > 0 ? -opts.bounds->hi[g] : opts.bounds->lo[g];
                const double width = opts.bounds->hi[g] - opts.bounds->lo[g];
                v = width > 0.0 ? (v - lo) / width : 0.0;
            }
            q[g] = v;
        }
        return q;
    };
    const Vec ref = orient(reference);
    std::vector<Vec> pts;
    for (const auto& p : front.points) {
        Vec q = orient(p);
        bool inside = true;
        for (std::size_t g = 0; g < d; ++g)
            inside = inside && q[g] < ref[g];
        if (inside)
            pts.push_back(std::move(q));
    }
    if (pts.empty())
        return {};

    if (d == 1) {
        double best = pts.front()[0];
        for (const auto& p : pts)
            best = std::min(best, p[0]);
        return {ref[0] - best, 0.0, true};
    }
    if (d == 2 && !opts.force_monte_carlo) {
        std::sort(pts.begin(), pts.end());
        double area = 0.0;
        double ceiling = ref[1];
        for (const auto& p : pts) {
            if (p[1] < ceiling) {
                area += (ref[0] - p[0]) * (ceiling - p[1]);
                ceiling = p[1];
            }
        }
        return {area, 0.0, true};
    }

    Vec ideal = pts.front();
    for (const auto& p : pts)
        for (std::size_t g = 0; g < d; ++g)
            ideal[g] = std::min(ideal[g], p[g]);
    double box = 1.0;
    for (std::size_t g = 0; g < d; ++g)
        box *= ref[g] - ideal[g];
    Rng rng(opts.seed);
    require(opts.samples > 0, "hypervolume: need at least one Monte Carlo sample");
    std::size_t hits = 0;
    Vec s(d);
    for (std::size_t k = 0; k < opts.samples; ++k) {
        for (std::size_t g = 0; g < d; ++g)
            s[g] = rng.uniform(ideal[g], ref[g]);
        for (const auto& p : pts) {
            bool dom = true;
            for (std::size_t g = 0; g < d && dom; ++g)
                dom = p[g] <= s[g];
            if (dom) {
                ++hits;
                break;
            }
        }
    }
    const double frac = static_cast<double>(hits) / static_cast<double>(opts.samples);
    return {box * frac, box * std::sqrt(frac * (1.0 - frac) / static_cast<double>(opts.samples)),
            false};
}

/// Additive epsilon: the smallest shift that lets the predicted front cover
/// every actual point, max_a min_p max_g (p_g - a_g). Negative when the
/// predicted front is strictly better everywhere.
inline double additive_approx(const Front& predicted, const Front& actual,
                              const std::optional<NormalizationBounds>& bounds = std::nullopt) {
    detail::check_same_goals(predicted, actual, "additive_approx");
    require(!predicted.empty() && !actual.empty(), "additive_approx: fronts must be non-empty");
    const auto n = detail::normalized({&predicted, &actual}, bounds);
    double eps = -std::numeric_limits<double>::infinity();
    for (const auto& a : n[1]) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& p : n[0]) {
            double worst = -std::numeric_limits<double>::infinity();
            for (std::size_t g = 0; g < a.size(); ++g)
                worst = std::max(worst, p[g] - a[g]);
            best = std::min(best, worst);
        }
        eps = std::max(eps, best);
    }
    return eps;
}

} // namespace duo
