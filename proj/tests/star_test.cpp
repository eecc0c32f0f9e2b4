#include <gtest/gtest.h>

#include <algorithm>
#include <memory>

#include "duo/star.hpp"

using namespace duo;

namespace {

// Decision 0 is analyst capability, decision 1 is tool use; 1 means "high".
std::pair<std::vector<Candidate>, std::vector<Candidate>> worked_example() {
    std::vector<Candidate> best, rest;
    for (int i = 0; i < 1000; ++i)
        best.push_back(Candidate{{i < 50 ? 1.0 : 0.0, i >= 900 ? 1.0 : 0.0}, Vec{0.0}});
    for (int i = 0; i < 9000; ++i)
        rest.push_back(Candidate{{i < 90 ? 1.0 : 0.0, i >= 8820 ? 1.0 : 0.0}, Vec{1.0}});
    return {best, rest};
}

const RangeScore& find(const std::vector<RangeScore>& ranked, std::size_t column, double value) {
    for (const auto& r : ranked)
        if (r.range.column == column && r.range.lo == value && r.range.hi == value)
            return r;
    throw std::runtime_error("range not found");
}

std::size_t position(const std::vector<RangeScore>& ranked, const RangeScore& which) {
    return static_cast<std::size_t>(&which - ranked.data());
}

OptimizerConfig small_de() {
    OptimizerConfig cfg;
    cfg.kind = OptimizerKind::de;
    cfg.de.np = 10;
    cfg.de.generations = 5;
    return cfg;
}

Range boolean_range(std::size_t column, double v) {
    Range r;
    r.column = column;
    r.name = "x" + std::to_string(column);
    r.lo = r.hi = v;
    return r;
}

} // namespace

TEST(StarScore, Formula) {
    EXPECT_DOUBLE_EQ(star_score(0.1, 0.0), 0.1);
    EXPECT_EQ(star_score(0.0, 0.4), 0.0);
    EXPECT_EQ(star_score(0.0, 0.0), 0.0);
    EXPECT_DOUBLE_EQ(star_score(0.5, 0.5, 3), 0.125);
}

TEST(StarScore, StrictlyIncreasingInBest) {
    for (double r : {0.001, 0.01, 0.1, 0.5, 1.0})
        for (int i = 1; i < 1000; ++i) {
            const double b0 = (i - 1) / 1000.0, b1 = i / 1000.0;
            EXPECT_LT(star_score(b0, r), star_score(b1, r));
        }
}

TEST(RankRanges, WorkedExample) {
    const auto [best, rest] = worked_example();
    const auto ranked = rank_ranges(best, rest, 2.0, 7, {"analyst", "tools"});
    const RangeScore& a_high = find(ranked, 0, 1.0);
    const RangeScore& u_high = find(ranked, 1, 1.0);
    EXPECT_EQ(a_high.best_count, 50u);
    EXPECT_EQ(a_high.rest_count, 90u);
    EXPECT_DOUBLE_EQ(a_high.b, 0.05);
    EXPECT_DOUBLE_EQ(a_high.r, 0.01);
    EXPECT_NEAR(a_high.s, 0.042, 5e-4);
    EXPECT_NEAR(u_high.s, 0.083, 5e-4);
    EXPECT_LT(position(ranked, u_high), position(ranked, a_high));
    EXPECT_EQ(u_high.range.to_string(), "tools=1");
}

TEST(RankRanges, OrderedAndPermutationInvariant) {
    Problem p = make_problem("requirements(n=8, seed=5)");
    Rng rng(2);
    std::vector<Candidate> pop;
    for (int i = 0; i < 300; ++i)
        pop.push_back(p.evaluate(p.sample(rng)));
    const auto br = split_best_rest(pop, 0.1, p.objective_spec());
    const auto ranked = rank_ranges(br.best, br.rest);
    for (std::size_t i = 1; i < ranked.size(); ++i) {
        const auto& x = ranked[i - 1];
        const auto& y = ranked[i];
        EXPECT_TRUE(x.s > y.s || (x.s == y.s && x.b >= y.b));
    }
    for (const auto& r : ranked) {
        EXPECT_GE(r.b, 0.0);
        EXPECT_LE(r.b, 1.0);
        EXPECT_GE(r.r, 0.0);
        EXPECT_LE(r.r, 1.0);
        if (r.b == 0) {
            EXPECT_EQ(r.s, 0.0);
        }
    }
    auto best = br.best;
    auto rest = br.rest;
    rng.shuffle(best);
    rng.shuffle(rest);
    const auto again = rank_ranges(best, rest);
    ASSERT_EQ(again.size(), ranked.size());
    for (std::size_t i = 0; i < ranked.size(); ++i)
        EXPECT_EQ(again[i].range, ranked[i].range);
}

TEST(RankRanges, EmptyBestRejected) {
    EXPECT_THROW(rank_ranges({}, {}), ContractError);
}

TEST(SplitBestRest, SizesAndPartition) {
    Rng rng(3);
    std::vector<Candidate> pop;
    for (int i = 0; i < 10000; ++i)
        pop.push_back(Candidate{{static_cast<double>(i)}, Vec{rng.uniform(), rng.uniform()}});
    const auto spec = ObjectiveSpec::minimize(2);
    const auto br = split_best_rest(pop, 0.1, spec);
    EXPECT_EQ(br.best.size(), 1000u);
    EXPECT_EQ(br.rest.size(), 9000u);

    const std::vector<Candidate> hundred(pop.begin(), pop.begin() + 100);
    const auto small = split_best_rest(hundred, 0.1, spec);
    EXPECT_EQ(small.best.size(), 10u);
    EXPECT_EQ(small.rest.size(), 90u);
    std::vector<double> ids;
    for (const auto& c : small.best)
        ids.push_back(c.decisions[0]);
    for (const auto& c : small.rest)
        ids.push_back(c.decisions[0]);
    std::sort(ids.begin(), ids.end());
    for (std::size_t i = 0; i < ids.size(); ++i)
        EXPECT_EQ(ids[i], static_cast<double>(i));

    const auto again = split_best_rest(hundred, 0.1, spec);
    EXPECT_EQ(again.best, small.best);
}

TEST(SplitBestRest, BestAreNearTheIdeal) {
    std::vector<Candidate> pop;
    for (int i = 0; i < 10; ++i)
        pop.push_back(Candidate{{}, Vec{static_cast<double>(i), static_cast<double>(i)}});
    const auto br = split_best_rest(pop, 0.2, ObjectiveSpec::minimize(2));
    ASSERT_EQ(br.best.size(), 2u);
    EXPECT_EQ(*br.best[0].objectives, (Vec{0, 0}));
    EXPECT_EQ(*br.best[1].objectives, (Vec{1, 1}));
}

TEST(SplitBestRest, RatioErrors) {
    std::vector<Candidate> pop{Candidate{{}, Vec{1.0}}};
    EXPECT_THROW(split_best_rest(pop, 0.0, ObjectiveSpec::minimize(1)), ContractError);
    EXPECT_THROW(split_best_rest(pop, 1.0, ObjectiveSpec::minimize(1)), ContractError);
    std::vector<Candidate> raw{Candidate{{1.0}, std::nullopt}};
    EXPECT_THROW(split_best_rest(raw, 0.5, ObjectiveSpec::minimize(1)), ContractError);
}

TEST(DecisionLadder, RungZeroIsPlainRunAndCountsClose) {
    const Problem p = make_problem("requirements(n=10, seed=7)");
    Problem sampler = p.fresh();
    Rng rng(4);
    std::vector<Candidate> pop;
    for (int i = 0; i < 200; ++i)
        pop.push_back(sampler.evaluate(sampler.sample(rng)));
    const auto br = split_best_rest(pop, 0.1, p.objective_spec());
    const auto ranked = rank_ranges(br.best, br.rest);
    const auto cfg = small_de();
    const auto ladder = decision_ladder(p, cfg, ranked, 3, 21);

    Problem plain = p.fresh();
    const auto res = run_optimizer(plain, cfg, 21);
    ASSERT_FALSE(ladder.rungs.empty());
    EXPECT_EQ(ladder.rungs[0].champion, *res.best.objectives);
    EXPECT_EQ(ladder.rungs[0].evals, res.evals);

    const std::size_t expected_len = ladder.conflict_at ? *ladder.conflict_at + 1 : std::min<std::size_t>(ranked.size(), 3) + 1;
    EXPECT_EQ(ladder.rungs.size(), expected_len);
    std::size_t counters = 0;
    for (std::size_t i = 0; i < ladder.rungs.size(); ++i) {
        EXPECT_EQ(ladder.rungs[i].index, i);
        EXPECT_EQ(ladder.rungs[i].asserted.size(), i);
        EXPECT_EQ(ladder.rungs[i].counter, ladder.rungs[i].evals);
        for (std::size_t k = 0; k < i; ++k)
            EXPECT_EQ(ladder.rungs[i].asserted[k], ranked[k].range);
        counters += ladder.rungs[i].counter;
    }
    EXPECT_EQ(ladder.total_evals(), counters);
    EXPECT_EQ(p.evals(), 0u);
}

TEST(DecisionLadder, DisjointRangesAreAllAsserted) {
    const Problem p = make_problem("requirements(n=6, seed=2)");
    std::vector<RangeScore> ranked(2);
    ranked[0].range = boolean_range(2, 1);
    ranked[1].range = boolean_range(4, 0);
    const auto ladder = decision_ladder(p, small_de(), ranked, 5, 3);
    ASSERT_EQ(ladder.rungs.size(), 3u);
    EXPECT_FALSE(ladder.conflict_at.has_value());
    EXPECT_EQ(ladder.asserted_rungs(), 2u);
}

TEST(DecisionLadder, ConflictsTruncate) {
    const Problem p = make_problem("requirements(n=6, seed=2)");
    std::vector<RangeScore> same_column(3);
    same_column[0].range = boolean_range(0, 1);
    same_column[1].range = boolean_range(0, 0);
    same_column[2].range = boolean_range(1, 1);
    const auto a = decision_ladder(p, small_de(), same_column, 5, 3);
    EXPECT_EQ(a.rungs.size(), 2u);
    EXPECT_EQ(a.conflict_at, std::optional<std::size_t>(1));

    std::vector<RangeScore> outside(1);
    outside[0].range = boolean_range(0, 5);
    const auto b = decision_ladder(p, small_de(), outside, 5, 3);
    EXPECT_EQ(b.rungs.size(), 1u);
    EXPECT_EQ(b.conflict_at, std::optional<std::size_t>(0));

    std::vector<RangeScore> many(3);
    for (std::size_t i = 0; i < 3; ++i)
        many[i].range = boolean_range(i, 1);
    EXPECT_EQ(decision_ladder(p, small_de(), many, 2, 3).rungs.size(), 3u);
    EXPECT_THROW(decision_ladder(p, small_de(), {}, 2, 3), ContractError);
}

TEST(DecisionLadder, OptimizerFailureCarriesRungIndex) {
    auto calls = std::make_shared<std::size_t>(0);
    // Fails once the first rung's 60 evaluations are used up.
    Problem p("flaky", std::vector<Domain>(3, Domain::continuous(0, 1)),
              {{"f", Direction::minimize, [calls](std::span<const double> x) {
                    if (++*calls > 60)
                        throw std::runtime_error("simulator crashed");
                    return x[0] + x[1] + x[2];
                }}});
    std::vector<RangeScore> ranked(1);
    ranked[0].range.column = 1;
    ranked[0].range.lo = 0.0;
    ranked[0].range.hi = 0.5;
    try {
        decision_ladder(p, small_de(), ranked, 1, 1);
        FAIL() << "expected RungFailure";
    } catch (const RungFailure& e) {
        EXPECT_EQ(e.rung(), 1u);
        EXPECT_NE(std::string(e.what()).find("simulator crashed"), std::string::npos);
    }
}
