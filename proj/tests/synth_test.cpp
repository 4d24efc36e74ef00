#include <gtest/gtest.h>

#include <random>

#include "pmcmono/builder.hpp"
#include "pmcmono/discharge.hpp"
#include "pmcmono/localmon.hpp"
#include "pmcmono/synth.hpp"
#include "support.hpp"

using namespace pmcmono;
using testing_support::load_model;
using testing_support::q;

namespace {

Region interval(Rational lo, Rational hi) { return Region::uniform(1, lo, hi); }

VerdictTable verdicts(const Pmc& m, const Region& R) {
    DischargeContext ctx(m, R, DischargeConfig{});
    return global_verdicts(m, R, build(m, BuilderConfig{}, ctx.as_discharger()));
}

// closed form of m2, written out by hand
Rational m2_sol(const Rational& p) { return -p * p * p + p * p + p; }

} // namespace

TEST(Spec, ThresholdRange) {
    EXPECT_THROW(Spec(q(3, 2), Direction::AtLeast), Error);
    EXPECT_THROW(Spec(q(-1, 2), Direction::AtMost), Error);
    EXPECT_TRUE(Spec(q(1, 2), Direction::AtMost).satisfied(q(1, 2)));
}

TEST(Disprove, FirstModelWitness) {
    Pmc m = load_model("m1.pmc");
    auto w = disprove_monotonicity(m, interval(q(3, 10), q(9, 10)), 0, {q("0.3"), q("0.5"), q("0.9")});
    ASSERT_TRUE(w);
    EXPECT_EQ(w->values, (std::vector<Rational>{q(79, 100), q(3, 4), q(91, 100)}));
}

TEST(Disprove, MonotoneModelHasNone) {
    EXPECT_FALSE(disprove_monotonicity(load_model("m2.pmc"), interval(q(1, 100), q(99, 100)), 0, 25));
    Pmc c = parse_model("params: p\nstates: 1\ninitial: 0\ntarget: top\ntrans: 0 -> top : 1/3 ; 0 -> bottom : 2/3\n");
    EXPECT_FALSE(disprove_monotonicity(c, interval(q(1, 100), q(99, 100)), 0, 9));
}

TEST(Feasibility, MonotoneNeedsOneCheck) {
    Pmc m = load_model("m2.pmc");
    Region R = interval(q(1, 10), q(9, 10));
    auto v = verdicts(m, R);
    ASSERT_EQ(v[0].verdict, Verdict::Increasing);
    auto r = check_feasibility(m, R, Spec(q(9, 10), Direction::AtLeast), v);
    EXPECT_EQ(r.status, Feasibility::Feasible);
    EXPECT_EQ(r.calls, 1u);
    ASSERT_TRUE(r.witness);
    EXPECT_EQ((*r.witness)[0], q(9, 10));
    EXPECT_EQ(m2_sol(q(9, 10)), q(981, 1000));
    EXPECT_EQ(check_feasibility(m, R, Spec(q(99, 100), Direction::AtLeast), v).status, Feasibility::Infeasible);
    EXPECT_EQ(check_feasibility(m, R, Spec(q(0), Direction::AtLeast), v).status, Feasibility::Feasible);
}

TEST(Feasibility, NonMonotoneFallsBackToGrid) {
    Pmc m = load_model("m1.pmc");
    Region R = interval(q(2, 5), q(3, 5));
    auto v = verdicts(m, R);
    ASSERT_EQ(v[0].verdict, Verdict::Unknown);
    auto r = check_feasibility(m, R, Spec(q(9, 10), Direction::AtLeast), v);
    EXPECT_EQ(r.status, Feasibility::Unknown);
    EXPECT_EQ(r.calls, 5u);
}

TEST(VerifyRegion, VertexDecisions) {
    Pmc m = load_model("m2.pmc");
    Region R = interval(q("0.6"), q("0.9"));
    auto v = verdicts(m, R);
    EXPECT_EQ(m2_sol(q("0.6")), q(744, 1000));
    EXPECT_EQ(verify_region(m, R, Spec(q(1, 2), Direction::AtLeast), v), RegionVerdict::AllSat);
    EXPECT_EQ(verify_region(m, R, Spec(q(99, 100), Direction::AtLeast), v), RegionVerdict::AllViol);
    EXPECT_EQ(verify_region(m, R, Spec(q(8, 10), Direction::AtLeast), v), RegionVerdict::Unknown);
    EXPECT_EQ(verify_region(m, R, Spec(q(99, 100), Direction::AtMost), v), RegionVerdict::AllSat);
}

TEST(VerifyRegionBounds, ParameterFreeExact) {
    Pmc m = parse_model("params: p\nstates: 1\ninitial: 0\ntarget: top\ntrans: 0 -> top : 1/3 ; 0 -> bottom : 2/3\n");
    Region R = interval(q(1, 10), q(9, 10));
    EXPECT_EQ(verify_region_bounds(m, R, Spec(q(1, 3), Direction::AtLeast)), RegionVerdict::AllSat);
    EXPECT_EQ(verify_region_bounds(m, R, Spec(q(1, 3), Direction::AtMost)), RegionVerdict::AllSat);
    EXPECT_EQ(verify_region_bounds(m, R, Spec(q(1, 2), Direction::AtLeast)), RegionVerdict::AllViol);
}

TEST(VerifyRegionBounds, RelaxationMinimum) {
    // Decoupled choices: s2 takes p = 3/5 (value 2/5), s1 takes p = 2/5, so
    // the relaxed minimum at s0 is 2/5 + 3/5 * 2/5 = 16/25 < true minimum 3/4.
    Pmc m = load_model("m1.pmc");
    Region R = interval(q(2, 5), q(3, 5));
    Rational relaxed = q(2, 5) + q(3, 5) * q(2, 5);
    EXPECT_EQ(relaxed, q(16, 25));
    auto b = region_bounds(m, R);
    EXPECT_NEAR(b.lo[0], relaxed.get_d(), 1e-6);
    EXPECT_EQ(verify_region_bounds(m, R, Spec(q(7, 10), Direction::AtLeast)), RegionVerdict::Unknown);
    EXPECT_EQ(verify_region_bounds(m, R, Spec(q(6, 10), Direction::AtLeast)), RegionVerdict::AllSat);
    EXPECT_EQ(verify_region_bounds(m, R, Spec(q(1), Direction::AtLeast)), RegionVerdict::AllViol);
}

TEST(Partition, MonotoneModel) {
    Pmc m = load_model("m2.pmc");
    Region root = interval(q(1, 10), q(9, 10));
    auto v = verdicts(m, root);
    Spec spec(q(1, 2), Direction::AtLeast);
    auto mono = partition(m, root, spec, q(95, 100), PartitionMethod::Mono, &v);
    EXPECT_TRUE(mono.target_reached);
    EXPECT_GE(mono.coverage, q(95, 100));
    std::size_t leaves = mono.classified.size() + mono.unknown.size();
    EXPECT_LE(mono.calls(), 2 * (2 * leaves - 1));
    auto bounds = partition(m, root, spec, q(95, 100), PartitionMethod::Bounds);
    EXPECT_GE(bounds.calls(), mono.calls());
    EXPECT_EQ(mono.csv().substr(0, 37), "region;verdict;calls_so_far;coverage_");
}

TEST(Partition, ZeroTarget) {
    Pmc m = load_model("m2.pmc");
    Region root = interval(q(1, 10), q(9, 10));
    auto v = verdicts(m, root);
    auto r = partition(m, root, Spec(q(1, 2), Direction::AtLeast), q(0), PartitionMethod::Mono, &v);
    EXPECT_EQ(r.coverage, 0);
    EXPECT_EQ(r.calls(), 0u);
    EXPECT_TRUE(r.classified.empty());
}

TEST(Partition, MonoNeedsVerdicts) {
    Pmc m = load_model("m2.pmc");
    EXPECT_THROW(partition(m, interval(q(1, 10), q(9, 10)), Spec(q(1, 2), Direction::AtLeast), q(1, 2), PartitionMethod::Mono),
                 Error);
}

TEST(Partition, TilingAndCorrectness) {
    std::mt19937 rng(73);
    Pmc m = prob01_collapse(load_model("zeroconf16.pmc"));
    Region root = Region::uniform(2, q(1, 10), q(9, 10));
    auto v = verdicts(m, root);
    ASSERT_TRUE(all_monotone(v));
    for (auto method : {PartitionMethod::Mono, PartitionMethod::Bounds}) {
        auto r = partition(m, root, Spec(q(1, 10), Direction::AtMost), q(9, 10), method, &v);
        EXPECT_FALSE(r.classified.empty());
        Rational total = 0;
        for (const auto& [R, verdict] : r.classified) {
            total += R.volume();
            for (int k = 0; k < 10; ++k) {
                Instantiation u;
                for (std::size_t i = 0; i < R.arity(); ++i) {
                    std::uniform_int_distribution<long> d(1, 99);
                    u.push_back(R[i].lo + R[i].width() * make_rational(d(rng), 100));
                }
                bool sat = testing_support::oracle_reachability(m, u)[m.initial] <= q(1, 10);
                EXPECT_EQ(sat, verdict == RegionVerdict::AllSat);
            }
        }
        EXPECT_EQ(total / root.volume(), r.coverage);
        for (const auto& R : r.unknown) total += R.volume();
        EXPECT_EQ(total, root.volume());
    }
}

TEST(Properties, VertexPrinciple) {
    std::mt19937 rng(79);
    int checked = 0;
    for (int i = 0; i < 300 && checked < 50; ++i) {
        Pmc m;
        try {
            m = prob01_collapse(parse_model(testing_support::random_simple_acyclic_text(rng, 12, 2)));
        } catch (const ModelError&) {
            continue;
        }
        Region R = testing_support::random_interior_box(rng, m.arity());
        auto v = verdicts(m, R);
        for (std::size_t p = 0; p < m.arity(); ++p) {
            if (v[p].verdict != Verdict::Increasing) continue;
            ++checked;
            Instantiation lo = R.midpoint();
            Instantiation hi = lo;
            lo[p] = R[p].lo;
            hi[p] = R[p].hi;
            EXPECT_LE(testing_support::oracle_reachability(m, lo)[m.initial], testing_support::oracle_reachability(m, hi)[m.initial]);
        }
    }
    EXPECT_EQ(checked, 50);
}
