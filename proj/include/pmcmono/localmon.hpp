#pragma once

// Local monotonicity of states under a sufficient order, and the fold of
// per-order results into per-parameter verdicts.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "pmcmono/builder.hpp"
#include "pmcmono/model.hpp"
#include "pmcmono/order.hpp"
#include "pmcmono/region.hpp"
#include "pmcmono/sign.hpp"

namespace pmcmono {

enum class LocalVerdict { Incr, Decr, Both, Neither, Unknown };

inline const char* to_string(LocalVerdict v) {
    switch (v) {
    case LocalVerdict::Incr: return "incr";
    case LocalVerdict::Decr: return "decr";
    case LocalVerdict::Both: return "both";
    case LocalVerdict::Neither: return "neither";
    case LocalVerdict::Unknown: return "unknown";
    }
    return "?";
}

/// Successor groups of s, highest class first; classmates are merged and
/// their transition functions summed.
struct SuccessorGroup {
    std::vector<StateId> states;
    RationalFunction f;
};

inline std::optional<std::vector<SuccessorGroup>> sorted_successor_groups(const ReachOrder& o, const Pmc& pmc, StateId s) {
    std::vector<SuccessorGroup> groups;
    for (const auto& t : pmc.rows[s]) {
        if (!o.is_inserted(t.to)) return std::nullopt;
        auto it = std::find_if(groups.begin(), groups.end(), [&](const SuccessorGroup& g) { return o.equal(g.states[0], t.to); });
        if (it == groups.end()) {
            groups.push_back({{t.to}, t.f});
        } else {
            it->states.push_back(t.to);
            it->f += t.f;
        }
    }
    for (std::size_t i = 0; i < groups.size(); ++i)
        for (std::size_t j = i + 1; j < groups.size(); ++j)
            if (!o.comparable(groups[i].states[0], groups[j].states[0])) return std::nullopt;
    std::sort(groups.begin(), groups.end(),
              [&](const SuccessorGroup& a, const SuccessorGroup& b) { return o.less(b.states[0], a.states[0]); });
    return groups;
}

/// Split rule: s is locally increasing in p if, with successors sorted from
/// highest to lowest, some non-empty prefix has non-decreasing transition
/// functions and the rest non-increasing ones.
inline LocalVerdict local_verdict(const Pmc& pmc, const Region& R, const ReachOrder& o, StateId s, std::size_t p,
                                  const SignOptions& opts = {}) {
    if (!pmc.is_parametric(s, p)) return LocalVerdict::Both;
    auto groups = sorted_successor_groups(o, pmc, s);
    if (!groups) return LocalVerdict::Unknown;
    std::vector<SignVerdict> signs;
    bool all_zero = true;
    for (const auto& g : *groups) {
        SignVerdict v = sign_on_box(g.f.derivative_numerator(p), R, opts).verdict;
        // The denominator of the derivative is den^2 > 0, so the numerator decides.
        signs.push_back(v);
        all_zero = all_zero && v == SignVerdict::IdenticallyZero;
    }
    if (all_zero) return LocalVerdict::Both;
    auto up = [](SignVerdict v) { return v == SignVerdict::NonNegative || v == SignVerdict::IdenticallyZero; };
    auto down = [](SignVerdict v) { return v == SignVerdict::NonPositive || v == SignVerdict::IdenticallyZero; };
    auto split = [&](auto head, auto tail) {
        for (std::size_t i = 1; i <= signs.size(); ++i) {
            bool ok = true;
            for (std::size_t j = 0; j < signs.size() && ok; ++j) ok = j < i ? head(signs[j]) : tail(signs[j]);
            if (ok) return true;
        }
        return false;
    };
    bool incr = split(up, down);
    bool decr = split(down, up);
    if (incr && decr) return LocalVerdict::Both;
    if (incr) return LocalVerdict::Incr;
    if (decr) return LocalVerdict::Decr;
    for (auto v : signs)
        if (v == SignVerdict::Unknown) return LocalVerdict::Unknown;
    return LocalVerdict::Neither;
}

struct MonotonicityFlags {
    bool incr_possible = true;
    bool decr_possible = true;
};

inline std::vector<MonotonicityFlags> order_verdicts(const Pmc& pmc, const Region& R, const ReachOrder& o,
                                                     const SignOptions& opts = {}) {
    std::vector<MonotonicityFlags> flags(pmc.arity());
    for (StateId s = 0; s < pmc.num_states(); ++s) {
        if (!pmc.is_parametric(s)) continue;
        for (std::size_t p = 0; p < pmc.arity(); ++p) {
            auto& f = flags[p];
            if (!f.incr_possible && !f.decr_possible) continue;
            if (!pmc.is_parametric(s, p)) continue;
            switch (local_verdict(pmc, R, o, s, p, opts)) {
            case LocalVerdict::Both: break;
            case LocalVerdict::Incr: f.decr_possible = false; break;
            case LocalVerdict::Decr: f.incr_possible = false; break;
            case LocalVerdict::Neither:
            case LocalVerdict::Unknown: f.incr_possible = f.decr_possible = false; break;
            }
        }
    }
    return flags;
}

enum class Verdict { Increasing, Decreasing, Constant, Unknown, NotMonotone };

inline const char* to_string(Verdict v) {
    switch (v) {
    case Verdict::Increasing: return "increasing";
    case Verdict::Decreasing: return "decreasing";
    case Verdict::Constant: return "constant";
    case Verdict::Unknown: return "unknown";
    case Verdict::NotMonotone: return "not-monotone";
    }
    return "?";
}

/// Three instantiations along a line in one parameter, with their values.
struct NonMonotoneWitness {
    std::vector<Instantiation> points;
    std::vector<Rational> values;
};

struct ParamVerdict {
    std::string param;
    bool incr_possible = false;
    bool decr_possible = false;
    Verdict verdict = Verdict::Unknown;
    std::optional<NonMonotoneWitness> witness;
};

struct VerdictTable {
    std::vector<ParamVerdict> params;
    std::size_t orders = 0;
    std::size_t assumptions = 0; ///< assumptions across all returned orders
    std::string note;            ///< why verdicts were weakened, if they were

    const ParamVerdict& operator[](std::size_t i) const { return params.at(i); }
};

/// Folds per-order flags. A parameter is increasing if every order allows it
/// and not every order is also decreasing. When branches were pruned by
/// refutation or contradiction the fold is no longer exhaustive; then only
/// assumption-free orders count as witnesses.
inline VerdictTable global_verdicts(const Pmc& pmc, const Region& R, const BuildResult& built, const SignOptions& opts = {}) {
    VerdictTable table;
    table.orders = built.orders.size();
    for (const auto& o : built.orders) table.assumptions += o.assumptions.size();
    std::vector<std::vector<MonotonicityFlags>> flags;
    for (const auto& o : built.orders) flags.push_back(order_verdicts(pmc, R, o.order, opts));
    bool pruned = built.refuted > 0 || built.contradictions > 0;
    if (built.budget_exceeded) table.note = "branch budget exceeded";
    else if (built.orders.empty()) table.note = "no order survived discharging";
    else if (pruned) table.note = "branches were pruned; only assumption-free orders are used as witnesses";

    for (std::size_t p = 0; p < pmc.arity(); ++p) {
        ParamVerdict pv;
        pv.param = pmc.params[p];
        pv.incr_possible = !built.orders.empty();
        pv.decr_possible = !built.orders.empty();
        bool any_decr = false;
        bool any_incr = false;
        for (const auto& f : flags) {
            pv.incr_possible = pv.incr_possible && f[p].incr_possible;
            pv.decr_possible = pv.decr_possible && f[p].decr_possible;
        }
        if (built.budget_exceeded || built.orders.empty()) {
            pv.verdict = Verdict::Unknown;
        } else if (!pruned) {
            if (pv.incr_possible && pv.decr_possible) pv.verdict = Verdict::Constant;
            else if (pv.incr_possible) pv.verdict = Verdict::Increasing;
            else if (pv.decr_possible) pv.verdict = Verdict::Decreasing;
            else pv.verdict = Verdict::Unknown;
        } else {
            for (std::size_t i = 0; i < flags.size(); ++i) {
                if (!built.orders[i].assumptions.empty()) continue;
                bool in = flags[i][p].incr_possible;
                bool de = flags[i][p].decr_possible;
                if (in && de) any_incr = any_decr = true;
                else if (in) any_incr = true;
                else if (de) any_decr = true;
            }
            if (any_incr && any_decr) pv.verdict = Verdict::Constant;
            else if (any_incr) pv.verdict = Verdict::Increasing;
            else if (any_decr) pv.verdict = Verdict::Decreasing;
            else pv.verdict = Verdict::Unknown;
        }
        table.params.push_back(std::move(pv));
    }
    return table;
}

} // namespace pmcmono
