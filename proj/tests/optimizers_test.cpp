#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <memory>

#include "duo/optimizers.hpp"

using namespace duo;

namespace {

// Wraps a problem so every evaluated decision vector is recorded in order.
struct Logged {
    Problem problem;
    std::shared_ptr<std::vector<Candidate>> seen = std::make_shared<std::vector<Candidate>>();
};

Logged logged(const Problem& base) {
    Logged out{base};
    auto inner = std::make_shared<Problem>(base);
    auto seen = out.seen;
    const std::size_t goals = base.goal_count();
    std::vector<Goal> wrapped;
    const auto spec = base.objective_spec();
    for (std::size_t g = 0; g < goals; ++g) {
        wrapped.push_back({"g" + std::to_string(g), static_cast<Direction>(spec.weight(g)),
                           [inner, seen, g](std::span<const double> x) {
                               if (g == 0)
                                   seen->push_back(inner->evaluate(Vec(x.begin(), x.end())));
                               return (*seen->back().objectives)[g];
                           }});
    }
    out.problem = Problem("logged", base.domains(), std::move(wrapped));
    return out;
}

void expect_front_invariants(const OptimizerResult& r, const Problem& p) {
    const auto spec = p.objective_spec();
    EXPECT_EQ(nondominated_filter(r.front, spec), r.front);
    EXPECT_TRUE(std::find(r.front.begin(), r.front.end(), r.best) != r.front.end());
}

} // namespace

TEST(DeOptimize, EvalCountingContract) {
    Problem p = make_sphere(4);
    DeParams params;
    params.np = 20;
    params.generations = 10;
    const auto r = de_optimize(p, params, 1);
    EXPECT_EQ(r.evals, 220u);
    EXPECT_EQ(p.evals(), 220u);
    EXPECT_EQ(r.history.size(), 11u);
    expect_front_invariants(r, p);
}

TEST(DeOptimize, DefaultGenerationsAreTenPerDecision) {
    Problem p = make_sphere(3);
    const auto r = de_optimize(p, DeParams{}, 2);
    EXPECT_EQ(r.evals, 20u * (30u + 1u));
}

TEST(DeOptimize, ZeroGenerationsReturnsBestInitialMember) {
    auto lg = logged(make_sphere(3));
    DeParams params;
    params.generations = 0;
    const auto r = de_optimize(lg.problem, params, 3);
    ASSERT_EQ(lg.seen->size(), 20u);
    double best = 1e300;
    for (const auto& c : *lg.seen)
        best = std::min(best, (*c.objectives)[0]);
    EXPECT_EQ((*r.best.objectives)[0], best);
}

TEST(DeOptimize, InjectedMembersStartThePopulation) {
    auto lg = logged(make_sphere(2));
    DeParams params;
    params.generations = 0;
    params.initial = {{1, 2}, {3, -4}};
    de_optimize(lg.problem, params, 4);
    EXPECT_EQ(lg.seen->at(0).decisions, (Vec{1, 2}));
    EXPECT_EQ(lg.seen->at(1).decisions, (Vec{3, -4}));
}

TEST(DeOptimize, ParameterErrors) {
    Problem p = make_sphere(2);
    DeParams small;
    small.np = 3;
    EXPECT_THROW(de_optimize(p, small, 1), ContractError);
    DeParams bad_f;
    bad_f.f = 0;
    EXPECT_THROW(de_optimize(p, bad_f, 1), ContractError);
    DeParams bad_cr;
    bad_cr.cr = 1.5;
    EXPECT_THROW(de_optimize(p, bad_cr, 1), ContractError);
}

TEST(DeOptimize, SphereConvergesAcrossSeeds) {
    int hits = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Problem p = make_sphere(5);
        DeParams params;
        params.np = 20;
        params.generations = 250;
        const auto r = de_optimize(p, params, seed);
        hits += (*r.best.objectives)[0] <= 1e-3 ? 1 : 0;
    }
    EXPECT_GE(hits, 18);
}

TEST(DeOptimize, DeterministicPerSeed) {
    Problem a = make_problem("requirements(n=10, seed=2)");
    Problem b = make_problem("requirements(n=10, seed=2)");
    const auto ra = de_optimize(a, DeParams{}, 9);
    const auto rb = de_optimize(b, DeParams{}, 9);
    EXPECT_EQ(ra.front, rb.front);
    EXPECT_EQ(ra.best, rb.best);
}

TEST(GaOptimize, EvalCountingContract) {
    Problem p = make_problem("biobjective-curve(d=5)");
    GaParams params;
    params.np = 40;
    params.generations = 50;
    const auto r = ga_optimize(p, params, 1);
    EXPECT_EQ(r.evals, 2040u);
    EXPECT_EQ(p.evals(), 2040u);
    expect_front_invariants(r, p);
}

TEST(GaOptimize, OddPopulationRejected) {
    Problem p = make_sphere(2);
    GaParams params;
    params.np = 41;
    EXPECT_THROW(ga_optimize(p, params, 1), ContractError);
}

TEST(GaOptimize, ZeroGenerationsGivesFilteredInitialPopulation) {
    auto lg = logged(make_problem("biobjective-curve(d=3)"));
    GaParams params;
    params.np = 30;
    params.generations = 0;
    const auto r = ga_optimize(lg.problem, params, 5);
    ASSERT_EQ(lg.seen->size(), 30u);
    auto expected = nondominated_filter(*lg.seen, lg.problem.objective_spec());
    auto key = [](std::vector<Candidate> v) {
        std::vector<Vec> out;
        for (const auto& c : v)
            out.push_back(*c.objectives);
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    };
    EXPECT_EQ(key(r.front), key(expected));
}

TEST(GaOptimize, ChampionNeverDominatedByEarlierEvaluations) {
    auto lg = logged(make_problem("requirements(n=15, seed=6)"));
    GaParams params;
    params.np = 20;
    params.generations = 15;
    const auto r = ga_optimize(lg.problem, params, 8);
    const auto spec = lg.problem.objective_spec();
    for (const auto& h : r.history) {
        for (std::size_t i = 0; i < h.evals; ++i)
            ASSERT_FALSE(boolean_dominates(*lg.seen->at(i).objectives, h.champion, spec))
                << "generation " << h.generation;
    }
}

TEST(NondominatedSort, LayersAreConsistent) {
    Rng rng(2);
    std::vector<Candidate> pop;
    for (int i = 0; i < 60; ++i)
        pop.push_back(Candidate{{}, Vec{rng.uniform(), rng.uniform()}});
    const auto spec = ObjectiveSpec::minimize(2);
    const auto layers = nondominated_sort(pop, spec);
    std::size_t total = 0;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        total += layers[l].size();
        for (std::size_t i : layers[l])
            for (std::size_t j : layers[l])
                EXPECT_FALSE(boolean_dominates(*pop[i].objectives, *pop[j].objectives, spec));
        if (l > 0)
            for (std::size_t i : layers[l]) {
                bool dominated = false;
                for (std::size_t j : layers[l - 1])
                    dominated = dominated || boolean_dominates(*pop[j].objectives, *pop[i].objectives, spec);
                EXPECT_TRUE(dominated);
            }
    }
    EXPECT_EQ(total, pop.size());
}

TEST(CrowdingDistance, BoundaryPointsAreInfinite) {
    std::vector<Candidate> pop{Candidate{{}, Vec{0, 4}}, Candidate{{}, Vec{1, 2}},
                               Candidate{{}, Vec{2, 1}}, Candidate{{}, Vec{4, 0}}};
    const std::vector<std::size_t> front{0, 1, 2, 3};
    const auto d = crowding_distance(pop, front);
    EXPECT_TRUE(std::isinf(d[0]));
    EXPECT_TRUE(std::isinf(d[3]));
    // (2-0)/4 + (4-1)/4 and (4-1)/4 + (2-0)/4.
    EXPECT_DOUBLE_EQ(d[1], 1.25);
    EXPECT_DOUBLE_EQ(d[2], 1.25);
}

TEST(SwaySample, BoundHoldsOverSweep) {
    for (std::size_t e = 4; e <= 14; ++e) {
        const std::size_t n0 = std::size_t{1} << e;
        for (std::size_t stop : {2u, 3u, 4u, 7u, 16u}) {
            if (stop > n0)
                continue;
            Problem p = make_problem("biobjective-curve(d=4)");
            SwayParams params;
            params.n0 = n0;
            params.stop = stop;
            const auto r = sway_sample(p, params, e * 31 + stop);
            const double levels = std::ceil(std::log2(static_cast<double>(n0) / static_cast<double>(stop)));
            EXPECT_LE(static_cast<double>(r.evals), 2 * levels + static_cast<double>(stop))
                << "n0=" << n0 << " stop=" << stop;
            EXPECT_LE(r.evals, sway_eval_bound(n0, stop));
            EXPECT_EQ(r.evals, p.evals());
            expect_front_invariants(r, p);
        }
    }
}

TEST(SwaySample, SmallCases) {
    Problem p = make_sphere(3);
    SwayParams params;
    params.n0 = 16;
    params.stop = 4;
    EXPECT_LE(sway_sample(p, params, 1).evals, 8u);

    Problem q = make_sphere(3);
    params.n0 = params.stop = 9;
    EXPECT_EQ(sway_sample(q, params, 1).evals, 9u);

    params.n0 = 3;
    params.stop = 4;
    EXPECT_THROW(sway_sample(q, params, 1), ContractError);
}

TEST(SwaySample, PaperScaleEconomy) {
    Problem p = make_problem("product-line(features=60, seed=1)");
    const auto r = sway_sample(p, SwayParams{}, 7);
    EXPECT_LE(r.evals, 48u);
    EXPECT_LT(static_cast<double>(r.evals) / 10000.0, 0.01);
}

TEST(FlashOptimize, FullBudgetFindsPoolOptimum) {
    Problem p = make_problem("synthetic-config(d=5, levels=3, seed=4)");
    const auto pool = make_pool(p, 120, 3);
    Problem oracle = p.fresh();
    double best = 1e300;
    for (const auto& x : pool)
        best = std::min(best, (*oracle.evaluate(x).objectives)[0]);
    FlashParams fp;
    fp.init = 10;
    fp.budget = pool.size();
    const auto r = flash_optimize(p, pool, fp, 1);
    EXPECT_EQ((*r.best.objectives)[0], best);
    EXPECT_EQ(r.evals, pool.size());
}

TEST(FlashOptimize, InitEqualsBudgetIsRandomSearch) {
    Problem p = make_problem("synthetic-config(d=5, levels=3, seed=4)");
    const auto pool = make_pool(p, 100, 3);
    FlashParams fp;
    fp.init = fp.budget = 15;
    const auto r = flash_optimize(p, pool, fp, 12);
    Rng rng(12);
    auto expected = rng.sample_distinct(pool.size(), 15);
    EXPECT_EQ(r.order, expected);
    EXPECT_EQ(r.evals, 15u);
}

TEST(FlashOptimize, TopFivePercentAtFortyEvaluations) {
    Problem base = make_problem("synthetic-config(d=10, levels=5, seed=3)");
    const auto pool = make_pool(base, 1000, 11);
    Problem oracle = base.fresh();
    Vec all;
    for (const auto& x : pool)
        all.push_back((*oracle.evaluate(x).objectives)[0]);
    Vec sorted = all;
    std::sort(sorted.begin(), sorted.end());
    const double cutoff = sorted[49];
    int hits = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Problem p = base.fresh();
        const auto r = flash_optimize(p, pool, FlashParams{}, seed);
        EXPECT_EQ(r.evals, 40u);
        EXPECT_EQ(p.evals(), 40u);
        hits += all[r.best_index] <= cutoff ? 1 : 0;
    }
    EXPECT_GE(hits, 18);
}

TEST(FlashOptimize, Errors) {
    Problem multi = make_problem("biobjective-curve(d=2)");
    const auto pool = make_pool(multi, 20, 1);
    EXPECT_THROW(flash_optimize(multi, pool, FlashParams{}, 1), ContractError);
    Problem p = make_sphere(2);
    const auto small = make_pool(p, 5, 1);
    EXPECT_THROW(flash_optimize(p, small, FlashParams{}, 1), ContractError);
}

TEST(RunOptimizer, DispatchesByKind) {
    OptimizerConfig cfg;
    cfg.kind = parse_optimizer_kind("sway");
    cfg.sway.n0 = 64;
    cfg.sway.stop = 4;
    Problem p = make_sphere(2);
    EXPECT_LE(run_optimizer(p, cfg, 1).evals, sway_eval_bound(64, 4));
    EXPECT_THROW(parse_optimizer_kind("pso"), ContractError);
}
