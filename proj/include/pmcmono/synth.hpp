#pragma once

// Using monotonicity: disproving it by sampling along a line, feasibility,
// region verification and parameter-space partitioning.

#include <cstddef>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pmcmono/discharge.hpp"
#include "pmcmono/error.hpp"
#include "pmcmono/localmon.hpp"
#include "pmcmono/model.hpp"
#include "pmcmono/region.hpp"

namespace pmcmono {

enum class Direction { AtLeast, AtMost };

/// Pr(reach target) ≥ λ or ≤ λ.
struct Spec {
    Rational threshold;
    Direction direction = Direction::AtLeast;

    Spec() = default;
    Spec(Rational lambda, Direction dir) : threshold(std::move(lambda)), direction(dir) {
        if (threshold < 0 || threshold > 1) throw Error("threshold must lie in [0,1]");
    }

    bool satisfied(const Rational& v) const { return direction == Direction::AtLeast ? v >= threshold : v <= threshold; }
};

/// Exact reachability probability of the initial state at u.
inline Rational initial_probability(const Pmc& pmc, const Instantiation& u) { return reachability(pmc, u).at(pmc.initial); }

/// Looks for u1 < u2 < u3 along parameter p (others at their midpoints) such
/// that Pr(u2) lies strictly below or strictly above both neighbours.
inline std::optional<NonMonotoneWitness> disprove_monotonicity(const Pmc& pmc, const Region& R, std::size_t p,
                                                               const std::vector<Rational>& values) {
    std::vector<Instantiation> points;
    std::vector<Rational> probs;
    for (const auto& v : values) {
        Instantiation u = R.midpoint();
        u.at(p) = v;
        points.push_back(u);
        probs.push_back(initial_probability(pmc, u));
    }
    for (std::size_t i = 0; i < probs.size(); ++i)
        for (std::size_t j = i + 1; j < probs.size(); ++j)
            for (std::size_t k = j + 1; k < probs.size(); ++k) {
                bool valley = probs[j] < probs[i] && probs[j] < probs[k];
                bool peak = probs[j] > probs[i] && probs[j] > probs[k];
                if (valley || peak) return NonMonotoneWitness{{points[i], points[j], points[k]}, {probs[i], probs[j], probs[k]}};
            }
    return std::nullopt;
}

/// n equally spaced samples of p including both endpoints.
inline std::optional<NonMonotoneWitness> disprove_monotonicity(const Pmc& pmc, const Region& R, std::size_t p, std::size_t n) {
    std::vector<Rational> values;
    const auto& iv = R[p];
    for (std::size_t i = 0; i < n; ++i)
        values.push_back(n == 1 ? iv.midpoint() : iv.lo + iv.width() * make_rational(static_cast<long>(i), static_cast<long>(n - 1)));
    return disprove_monotonicity(pmc, R, p, values);
}

/// Caches model-checking calls by instantiation.
class ModelChecker {
public:
    explicit ModelChecker(const Pmc& pmc) : pmc_(pmc) {}

    Rational operator()(const Instantiation& u) {
        auto it = cache_.find(u);
        if (it != cache_.end()) return it->second;
        ++calls_;
        Rational v = initial_probability(pmc_, u);
        cache_.emplace(u, v);
        return v;
    }

    std::size_t calls() const noexcept { return calls_; }

private:
    const Pmc& pmc_;
    std::map<Instantiation, Rational> cache_;
    std::size_t calls_ = 0;
};

inline bool all_monotone(const VerdictTable& v) {
    for (const auto& p : v.params)
        if (p.verdict != Verdict::Increasing && p.verdict != Verdict::Decreasing && p.verdict != Verdict::Constant) return false;
    return true;
}

/// The vertex of R maximising (best = true) or minimising the probability,
/// given monotone verdicts for every parameter.
inline Instantiation extreme_vertex(const Region& R, const VerdictTable& v, bool maximise) {
    Instantiation u = R.lower_corner();
    for (std::size_t i = 0; i < R.arity(); ++i) {
        bool up = v[i].verdict == Verdict::Increasing;
        if (v[i].verdict == Verdict::Constant) continue;
        u[i] = (up == maximise) ? R[i].hi : R[i].lo;
    }
    return u;
}

enum class Feasibility { Feasible, Infeasible, Unknown };

inline const char* to_string(Feasibility f) {
    switch (f) {
    case Feasibility::Feasible: return "feasible";
    case Feasibility::Infeasible: return "infeasible";
    case Feasibility::Unknown: return "unknown";
    }
    return "?";
}

struct FeasibilityResult {
    Feasibility status = Feasibility::Unknown;
    std::optional<Instantiation> witness;
    std::size_t calls = 0;
};

/// With every parameter monotone, one model check at the best vertex decides;
/// otherwise a grid is sampled and only a hit is conclusive.
inline FeasibilityResult check_feasibility(const Pmc& pmc, const Region& R, const Spec& spec, const VerdictTable& v,
                                           std::size_t grid = 5) {
    ModelChecker mc(pmc);
    FeasibilityResult r;
    if (all_monotone(v)) {
        Instantiation u = extreme_vertex(R, v, spec.direction == Direction::AtLeast);
        bool ok = spec.satisfied(mc(u));
        r.status = ok ? Feasibility::Feasible : Feasibility::Infeasible;
        if (ok) r.witness = u;
    } else {
        for (const auto& u : R.inclusive_grid(grid)) {
            if (spec.satisfied(mc(u))) {
                r.status = Feasibility::Feasible;
                r.witness = u;
                break;
            }
        }
    }
    r.calls = mc.calls();
    return r;
}

enum class RegionVerdict { AllSat, AllViol, Unknown };

inline const char* to_string(RegionVerdict v) {
    switch (v) {
    case RegionVerdict::AllSat: return "allsat";
    case RegionVerdict::AllViol: return "allviol";
    case RegionVerdict::Unknown: return "unknown";
    }
    return "?";
}

/// Monotone case: the worst vertex decides AllSat, the best vertex AllViol.
inline RegionVerdict verify_region(ModelChecker& mc, const Region& R, const Spec& spec, const VerdictTable& v) {
    if (!all_monotone(v)) return RegionVerdict::Unknown;
    bool at_least = spec.direction == Direction::AtLeast;
    if (spec.satisfied(mc(extreme_vertex(R, v, !at_least)))) return RegionVerdict::AllSat;
    if (!spec.satisfied(mc(extreme_vertex(R, v, at_least)))) return RegionVerdict::AllViol;
    return RegionVerdict::Unknown;
}

inline RegionVerdict verify_region(const Pmc& pmc, const Region& R, const Spec& spec, const VerdictTable& v) {
    ModelChecker mc(pmc);
    return verify_region(mc, R, spec, v);
}

/// Decides the region from interval bounds of the initial state.
inline RegionVerdict verify_region_bounds(const Pmc& pmc, const Region& R, const Spec& spec) {
    auto b = region_bounds(pmc, R);
    StateId s = pmc.initial;
    Rational lo = b.exact[s] ? *b.exact[s] : Rational(b.lo[s]);
    Rational hi = b.exact[s] ? *b.exact[s] : Rational(b.hi[s]);
    if (spec.direction == Direction::AtLeast) {
        if (lo >= spec.threshold) return RegionVerdict::AllSat;
        if (hi < spec.threshold) return RegionVerdict::AllViol;
    } else {
        if (hi <= spec.threshold) return RegionVerdict::AllSat;
        if (lo > spec.threshold) return RegionVerdict::AllViol;
    }
    return RegionVerdict::Unknown;
}

enum class PartitionMethod { Mono, Bounds };

struct PartitionRow {
    std::string region;
    RegionVerdict verdict;
    std::size_t calls_so_far;
    double coverage_so_far;
};

struct PartitionResult {
    std::vector<std::pair<Region, RegionVerdict>> classified;
    std::vector<Region> unknown;
    Rational coverage = 0;
    std::size_t model_checks = 0;
    std::size_t bound_computations = 0;
    bool target_reached = false;
    std::vector<PartitionRow> rows;

    std::size_t calls() const noexcept { return model_checks + bound_computations; }

    std::string csv() const {
        std::string out = "region;verdict;calls_so_far;coverage_so_far\n";
        for (const auto& r : rows) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.6f", r.coverage_so_far);
            out += r.region + ";" + to_string(r.verdict) + ";" + std::to_string(r.calls_so_far) + ";" + buf + "\n";
        }
        return out;
    }
};

/// Splits undecided regions at the midpoint of their longest edge until the
/// classified volume reaches `target_coverage` of the root.
inline PartitionResult partition(const Pmc& pmc, const Region& root, const Spec& spec, const Rational& target_coverage,
                                 PartitionMethod method, const VerdictTable* verdicts = nullptr,
                                 const Rational& volume_floor = Rational(1, 1000000)) {
    if (method == PartitionMethod::Mono && !verdicts) throw Error("the mono method needs monotonicity verdicts");
    PartitionResult res;
    Rational root_volume = root.volume();
    if (root_volume == 0) throw Error("partitioning needs a full-dimensional region");
    ModelChecker mc(pmc);
    std::deque<Region> work{root};
    while (!work.empty() && res.coverage < target_coverage) {
        Region r = std::move(work.front());
        work.pop_front();
        RegionVerdict v;
        if (method == PartitionMethod::Mono) {
            v = verify_region(mc, r, spec, *verdicts);
            res.model_checks = mc.calls();
        } else {
            ++res.bound_computations;
            v = verify_region_bounds(pmc, r, spec);
        }
        if (v == RegionVerdict::Unknown) {
            if (r.volume() < volume_floor * root_volume) {
                res.unknown.push_back(std::move(r));
                continue;
            }
            auto [a, b] = r.split_longest();
            work.push_back(std::move(a));
            work.push_back(std::move(b));
            continue;
        }
        res.coverage += r.volume() / root_volume;
        res.rows.push_back({r.to_string(pmc.params), v, res.calls(), res.coverage.get_d()});
        res.classified.push_back({std::move(r), v});
    }
    for (auto& r : work) res.unknown.push_back(std::move(r));
    for (const auto& r : res.unknown) res.rows.push_back({r.to_string(pmc.params), RegionVerdict::Unknown, res.calls(), res.coverage.get_d()});
    res.target_reached = res.coverage >= target_coverage;
    return res;
}

} // namespace pmcmono
