#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "pmcmono/discharge.hpp"
#include "pmcmono/elim.hpp"
#include "support.hpp"

using namespace pmcmono;
using testing_support::load_model;
using testing_support::q;

namespace {

const std::vector<std::string> P{"p"};

RationalFunction edge(const Pmc& m, StateId from, StateId to) {
    for (const auto& t : m.rows[from])
        if (t.to == to) return t.f;
    return RationalFunction::constant(m.arity(), 0);
}

} // namespace

TEST(EliminateState, Chain) {
    Pmc m = parse_model("params: p\nstates: 2\ninitial: 0\ntarget: top\n"
                        "trans: 0 -> 1 : p ; 0 -> bottom : 1-p\ntrans: 1 -> top : 1\n");
    Pmc e = eliminate_state(m, 1);
    EXPECT_EQ(e.num_states(), 3u);
    EXPECT_EQ(edge(e, e.initial, *e.top), RationalFunction(parse_expr("p", P)));
}

TEST(EliminateState, SelfLoopGeometricSeries) {
    Pmc m = parse_model("params: q\nstates: 2\ninitial: 0\ntarget: top\n"
                        "trans: 0 -> 1 : q ; 0 -> bottom : 1-q\ntrans: 1 -> 1 : 1/2 ; 1 -> top : 1/2\n");
    Pmc e = eliminate_state(m, 1);
    EXPECT_EQ(edge(e, 0, *e.top), RationalFunction(parse_expr("q", std::vector<std::string>{"q"})));
}

TEST(EliminateState, RandomWalkClosedForm) {
    Pmc m = load_model("m4.pmc");
    Pmc e = eliminate_states(m, {1, 2});
    ASSERT_EQ(e.num_states(), 3u);
    // s0 keeps a self-loop; folding it gives the closed form
    auto loop = edge(e, e.initial, e.initial);
    auto folded = edge(e, e.initial, *e.top) / (RationalFunction::constant(1, 1) - loop);
    EXPECT_EQ(folded, parse_rational_function("p^3 / (2*p^2 - 2*p + 1)", P));
}

TEST(EliminateState, Errors) {
    Pmc m = load_model("m4.pmc");
    EXPECT_THROW(eliminate_state(m, 0), Error);
    EXPECT_THROW(eliminate_state(m, *m.top), Error);
    Pmc trap = parse_model("params: p\nstates: 2\ninitial: 0\ntarget: top\n"
                           "trans: 0 -> 1 : p ; 0 -> top : 1-p\ntrans: 1 -> 1 : 1\n");
    try {
        eliminate_state(trap, 1);
        FAIL();
    } catch (const ModelError& e) {
        EXPECT_EQ(e.kind(), ModelError::Kind::EliminatingAbsorbingLoop);
    }
}

TEST(SccEliminate, RandomWalk) {
    Pmc m = load_model("m4.pmc");
    Pmc e = scc_eliminate(m);
    EXPECT_EQ(serialize_model(e), "params: p\nstates: 1\ninitial: 0\ntarget: top\n"
                                  "trans: 0 -> top : p^3 / (2*p^2 - 2*p + 1) ; 0 -> bottom : (-p^3 + 2*p^2 - 2*p + 1) / (2*p^2 - 2*p + 1)\n");
    EXPECT_TRUE(sccs(e).acyclic());
}

TEST(SccEliminate, AcyclicUnchanged) {
    Pmc m = load_model("m2.pmc");
    EXPECT_EQ(scc_eliminate(m), m);
}

TEST(SccEliminate, TwoSelfLoops) {
    // s0 loops with p then moves to s1, which loops with p and exits to top or bottom
    Pmc m = parse_model("params: p\nstates: 2\ninitial: 0\ntarget: top\n"
                        "trans: 0 -> 0 : p ; 0 -> 1 : 1-p\n"
                        "trans: 1 -> 1 : p ; 1 -> top : 1/2 - 1/2*p ; 1 -> bottom : 1/2 - 1/2*p\n");
    Pmc e = scc_eliminate(m);
    EXPECT_TRUE(sccs(e).acyclic());
    // (1-p)/(1-p) folds to 1, and the exits of s1 to 1/2 each
    EXPECT_EQ(edge(e, 0, 1), RationalFunction::constant(1, 1));
    EXPECT_EQ(edge(e, 1, *e.top), RationalFunction::constant(1, q(1, 2)));
    EXPECT_EQ(edge(e, 1, *e.bottom), RationalFunction::constant(1, q(1, 2)));
}

TEST(SccEliminate, SingletonComponentsAndSemantics) {
    std::mt19937 rng(61);
    int checked = 0;
    for (int i = 0; i < 200 && checked < 50; ++i) {
        Pmc m;
        try {
            m = prob01_collapse(parse_model(testing_support::random_cyclic_text(rng, 12)));
        } catch (const ModelError&) {
            continue;
        }
        ++checked;
        Pmc e = scc_eliminate(m);
        auto d = sccs(e);
        for (std::size_t c = 0; c < d.size(); ++c)
            if (d.members[c].size() == 1 && !e.is_sink(d.members[c][0])) EXPECT_FALSE(d.is_cyclic(c));
        EXPECT_TRUE(d.acyclic());
        for (int k = 0; k < 5; ++k) {
            Instantiation u{testing_support::random_fraction(rng, 1, 99, 100), testing_support::random_fraction(rng, 1, 99, 100)};
            EXPECT_EQ(testing_support::oracle_reachability(m, u)[m.initial], testing_support::oracle_reachability(e, u)[e.initial]);
        }
    }
    EXPECT_EQ(checked, 50);
}

TEST(SolutionFunction, SmallChains) {
    EXPECT_EQ(solution_function(load_model("m1.pmc"), 0), RationalFunction(parse_expr("p + (1-p)^2", P)));
    EXPECT_EQ(solution_function(load_model("m2.pmc"), 0), RationalFunction(parse_expr("-p^3 + p^2 + p", P)));
    EXPECT_EQ(solution_function(load_model("m3.pmc"), 0), RationalFunction(parse_expr("p^2 + (1-p)^2", P)));
}

TEST(SolutionFunction, TermCap) {
    Pmc m = prob01_collapse(load_model("zeroconf16.pmc"));
    EXPECT_THROW(solution_function(m, m.initial, 3), SizeError);
}

TEST(SolutionFunction, MatchesSamplingOnRandomModels) {
    std::mt19937 rng(67);
    int checked = 0;
    for (int i = 0; i < 200 && checked < 50; ++i) {
        Pmc m;
        try {
            m = prob01_collapse(parse_model(testing_support::random_cyclic_text(rng, 10)));
        } catch (const ModelError&) {
            continue;
        }
        ++checked;
        auto sol = solution_function(m, m.initial);
        for (int k = 0; k < 20; ++k) {
            Instantiation u{testing_support::random_fraction(rng, 1, 99, 100), testing_support::random_fraction(rng, 1, 99, 100)};
            Rational v = sol.evaluate(u);
            EXPECT_EQ(v, sample_points(m, {u}).value(m.initial, 0));
            EXPECT_GE(v, 0);
            EXPECT_LE(v, 1);
        }
    }
    EXPECT_EQ(checked, 50);
}

TEST(SolutionFunction, EliminationOrderIndependent) {
    std::mt19937 rng(71);
    int checked = 0;
    for (int i = 0; i < 200 && checked < 30; ++i) {
        Pmc m;
        try {
            m = prob01_collapse(parse_model(testing_support::random_cyclic_text(rng, 8)));
        } catch (const ModelError&) {
            continue;
        }
        std::vector<StateId> rest;
        for (StateId s = 0; s < m.num_states(); ++s)
            if (s != m.initial && !m.is_sink(s)) rest.push_back(s);
        ++checked;
        auto first = rest;
        auto second = rest;
        std::shuffle(first.begin(), first.end(), rng);
        std::shuffle(second.begin(), second.end(), rng);
        Pmc ea = eliminate_states(m, first);
        Pmc eb = eliminate_states(m, second);
        auto fa = edge(ea, ea.initial, *ea.top);
        auto fb = edge(eb, eb.initial, *eb.top);
        // self-loops on the initial state may remain; fold them the same way on both sides
        auto fold = [&](const Pmc& e, RationalFunction f) {
            auto loop = edge(e, e.initial, e.initial);
            return f / (RationalFunction::constant(e.arity(), 1) - loop);
        };
        fa = fold(ea, fa);
        fb = fold(eb, fb);
        EXPECT_TRUE((fa.num() * fb.den() - fb.num() * fa.den()).is_zero());
    }
    EXPECT_EQ(checked, 30);
}
