#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pmcmono/builder.hpp"
#include "pmcmono/discharge.hpp"
#include "support.hpp"

using namespace pmcmono;
using testing_support::load_model;

namespace {

BuilderConfig off() {
    BuilderConfig c;
    c.discharge_mode = DischargeMode::Off;
    return c;
}

} // namespace

TEST(InsertAcyclic, BetweenBounds) {
    Pmc m = load_model("m1.pmc");
    auto o = ReachOrder::for_model(m);
    insert_acyclic(o, m, 2);
    EXPECT_EQ(o.compare(*m.bottom, 2), Relation::Less);
    EXPECT_EQ(o.compare(2, *m.top), Relation::Less);
    insert_acyclic(o, m, 1);
    insert_acyclic(o, m, 0);
    EXPECT_EQ(o.compare(0, 1), Relation::Equal);
}

TEST(InsertAcyclic, MergedIntoTop) {
    Pmc m = parse_model("params: p\nstates: 2\ninitial: 0\ntarget: top\n"
                        "trans: 0 -> 1 : p ; 0 -> bottom : 1-p\ntrans: 1 -> top : 1\n");
    auto o = ReachOrder::for_model(m);
    insert_acyclic(o, m, 1);
    EXPECT_EQ(o.compare(1, *m.top), Relation::Equal);
}

TEST(InsertAcyclic, RejectsUnorderedSuccessors) {
    Pmc m = load_model("m3.pmc");
    auto o = ReachOrder::for_model(m);
    insert_acyclic(o, m, 1);
    insert_acyclic(o, m, 2);
    EXPECT_THROW(insert_acyclic(o, m, 0), Error);
}

TEST(CyclePropagate, RandomWalk) {
    Pmc m = load_model("m4.pmc");
    auto o = ReachOrder::for_model(m);
    // s0 is the cycle breaker: bottom < s0 < top
    o.insert(0);
    o.add_less(*m.bottom, 0);
    o.add_less(0, *m.top);
    o.insert(1);
    // at s1 (successors s2 and s0) with s0 known: s0 < s1
    o.add_less(*m.bottom, 1);
    EXPECT_FALSE(cycle_propagate(o, m, 2));
    ReachOrder fresh = ReachOrder::for_model(m);
    fresh.insert(0);
    fresh.add_less(*m.bottom, 0);
    fresh.add_less(0, *m.top);
    // s0 itself: successors bottom and s1; bottom < s0 so s0 < s1
    EXPECT_TRUE(cycle_propagate(fresh, m, 0));
    EXPECT_EQ(fresh.compare(0, 1), Relation::Less);
    // s1: successors s2 and s0; s0 < s1 so s1 < s2
    EXPECT_TRUE(cycle_propagate(fresh, m, 1));
    EXPECT_EQ(fresh.compare(1, 2), Relation::Less);
}

TEST(CyclePropagate, EqualSpreads) {
    Pmc m = load_model("m4.pmc");
    auto o = ReachOrder::for_model(m);
    o.insert(1);
    o.add_less(*m.bottom, 1);
    o.add_less(1, *m.top);
    o.add_equal(2, 1);
    // s1 ≡ its successor s2 forces s0 ≡ s1
    EXPECT_TRUE(cycle_propagate(o, m, 1));
    EXPECT_EQ(o.compare(0, 1), Relation::Equal);
}

TEST(CycleBreaker, PrefersExitsThenSmallestId) {
    Pmc m = load_model("m4.pmc");
    auto d = sccs(m);
    auto o = ReachOrder::for_model(m);
    EXPECT_EQ(pick_cycle_breaker(o, m, d, 2), std::optional<StateId>(0));

    Pmc one = parse_model("params: p\nstates: 3\ninitial: 0\ntarget: top\n"
                          "trans: 0 -> 1 : 1\ntrans: 1 -> 2 : 1\ntrans: 2 -> 0 : p ; 2 -> top : 1/2 - 1/2*p ; 2 -> bottom : 1/2 - 1/2*p\n");
    Pmc c = prob01_collapse(one);
    auto dc = sccs(c);
    std::size_t comp = dc.component[0];
    EXPECT_EQ(pick_cycle_breaker(ReachOrder::for_model(c), c, dc, comp), std::optional<StateId>(2));
}

TEST(Build, InconclusiveChainSingleOrder) {
    Pmc m = load_model("m1.pmc");
    auto r = build(m, off());
    ASSERT_EQ(r.orders.size(), 1u);
    EXPECT_TRUE(r.orders[0].assumptions.empty());
    const auto& o = r.orders[0].order;
    EXPECT_EQ(o.compare(*m.bottom, 2), Relation::Less);
    EXPECT_EQ(o.compare(2, 0), Relation::Less);
    EXPECT_EQ(o.compare(0, 1), Relation::Equal);
    EXPECT_EQ(o.compare(1, *m.top), Relation::Less);
}

TEST(Build, ThreeBranchesWithoutDischarge) {
    Pmc m = load_model("m3.pmc");
    auto r = build(m, off());
    ASSERT_EQ(r.orders.size(), 3u);
    EXPECT_EQ(r.branch_points, 1u);
    std::set<Assumptions> seen;
    for (const auto& o : r.orders) {
        EXPECT_EQ(o.assumptions.size(), 1u);
        EXPECT_TRUE(is_sufficient(o.order, m));
        seen.insert(o.assumptions);
    }
    EXPECT_EQ(seen.size(), 3u);
}

TEST(Build, TwoParameterAssumptionRows) {
    Pmc m = load_model("two_param.pmc");
    auto r = build(m, off());
    ASSERT_EQ(r.orders.size(), 3u);
    for (const auto& item : r.orders) {
        const auto& o = item.order;
        EXPECT_EQ(o.compare(4, 5), Relation::Less);
        ASSERT_EQ(item.assumptions.size(), 1u);
        if (!item.assumptions.equal.empty()) {
            EXPECT_EQ(o.compare(2, 3), Relation::Equal);
            EXPECT_EQ(o.compare(1, 2), Relation::Equal);
        } else {
            auto [a, b] = *item.assumptions.less.begin();
            EXPECT_EQ(o.compare(a, 1), Relation::Less);
            EXPECT_EQ(o.compare(1, b), Relation::Less);
        }
    }
}

TEST(Build, CycleBreakingOnRandomWalk) {
    Pmc m = load_model("m4.pmc");
    auto r = build(m, off());
    ASSERT_EQ(r.orders.size(), 1u);
    const auto& o = r.orders[0].order;
    EXPECT_EQ(o.compare(0, 1), Relation::Less);
    EXPECT_EQ(o.compare(1, 2), Relation::Less);
    EXPECT_TRUE(is_sufficient(o, m));
}

TEST(Build, BudgetExceeded) {
    Pmc m = load_model("m3.pmc");
    BuilderConfig c = off();
    c.max_orders = 2;
    EXPECT_TRUE(build(m, c).budget_exceeded);
    c.max_orders = 0;
    EXPECT_THROW(build(m, c), Error);
}

TEST(Build, DischargerPrunes) {
    Pmc m = load_model("m3.pmc");
    Region R = Region::uniform(1, make_rational(1, 10), make_rational(9, 10));
    DischargeContext ctx(m, R, DischargeConfig{});
    auto r = build(m, BuilderConfig{}, ctx.as_discharger());
    EXPECT_TRUE(r.orders.empty());
    EXPECT_EQ(r.refuted, 3u);
}

TEST(Properties, SufficientDeterministicAndPowerOfThree) {
    std::mt19937 rng(41);
    for (int i = 0; i < 60; ++i) {
        Pmc m;
        try {
            m = prob01_collapse(parse_model(testing_support::random_cyclic_text(rng, 10)));
        } catch (const ModelError&) {
            continue;
        }
        BuilderConfig c = off();
        c.max_orders = 100000;
        auto a = build(m, c);
        auto b = build(m, c);
        ASSERT_EQ(a.orders.size(), b.orders.size());
        for (std::size_t k = 0; k < a.orders.size(); ++k) {
            EXPECT_EQ(a.orders[k].assumptions, b.orders[k].assumptions);
            EXPECT_EQ(a.orders[k].order, b.orders[k].order);
        }
        for (const auto& o : a.orders) EXPECT_TRUE(is_sufficient(o.order, m));
        if (a.contradictions == 0 && !a.budget_exceeded)
            EXPECT_EQ(a.orders.size(), static_cast<std::size_t>(std::llround(std::pow(3.0, double(a.branch_points)))));
    }
}
