#pragma once

// State elimination, SCC elimination and closed-form solution functions.

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "pmcmono/error.hpp"
#include "pmcmono/graph.hpp"
#include "pmcmono/model.hpp"

namespace pmcmono {

/// Per-state closed forms sol_s.
using SolutionFunction = std::map<StateId, RationalFunction>;

namespace detail {

/// Mutable adjacency used while eliminating several states in a row.
class Eliminator {
public:
    Eliminator(const Pmc& pmc, std::size_t term_cap)
        : arity_(pmc.arity()), out_(pmc.num_states()), in_(pmc.num_states()), removed_(pmc.num_states(), false), cap_(term_cap) {
        for (StateId s = 0; s < pmc.num_states(); ++s)
            for (const auto& t : pmc.rows[s]) {
                out_[s].emplace(t.to, t.f);
                in_[t.to].insert(s);
            }
    }

    bool removed(StateId s) const { return removed_[s]; }
    const std::map<StateId, RationalFunction>& row(StateId s) const { return out_[s]; }
    std::size_t fan_product(StateId s) const {
        std::size_t fi = in_[s].size() - in_[s].count(s);
        std::size_t fo = out_[s].size() - out_[s].count(s);
        return fi * fo;
    }

    /// P'(u,v) = P(u,v) + P(u,s) P(s,v) / (1 - P(s,s)) for every predecessor u.
    void eliminate(StateId s) {
        RationalFunction scale = RationalFunction::constant(arity_, 1);
        if (auto it = out_[s].find(s); it != out_[s].end()) {
            RationalFunction stay = RationalFunction::constant(arity_, 1) - it->second;
            if (stay.is_zero()) throw ModelError(ModelError::Kind::EliminatingAbsorbingLoop, "state " + std::to_string(s) + " is absorbing");
            scale = RationalFunction::constant(arity_, 1) / stay;
            out_[s].erase(it);
            in_[s].erase(s);
        }
        std::vector<StateId> preds(in_[s].begin(), in_[s].end());
        for (StateId u : preds) {
            RationalFunction w = out_[u].at(s) * scale;
            out_[u].erase(s);
            for (const auto& [v, g] : out_[s]) {
                auto [it, inserted] = out_[u].try_emplace(v, w * g);
                if (!inserted) it->second += w * g;
                check(it->second);
                if (it->second.is_zero()) {
                    out_[u].erase(it);
                    in_[v].erase(u);
                } else {
                    in_[v].insert(u);
                }
            }
        }
        for (const auto& [v, _] : out_[s]) in_[v].erase(s);
        out_[s].clear();
        in_[s].clear();
        removed_[s] = true;
    }

    /// Rescales s's row by 1/(1 - P(s,s)) and drops the self-loop.
    void drop_self_loop(StateId s) {
        auto it = out_[s].find(s);
        if (it == out_[s].end()) return;
        RationalFunction stay = RationalFunction::constant(arity_, 1) - it->second;
        if (stay.is_zero()) throw ModelError(ModelError::Kind::EliminatingAbsorbingLoop, "state " + std::to_string(s) + " is absorbing");
        out_[s].erase(it);
        in_[s].erase(s);
        for (auto& [v, g] : out_[s]) {
            g = g / stay;
            check(g);
        }
    }

    void set_row(StateId s, std::map<StateId, RationalFunction> row) {
        for (const auto& [v, _] : out_[s]) in_[v].erase(s);
        out_[s] = std::move(row);
        for (const auto& [v, _] : out_[s]) in_[v].insert(s);
    }

    /// Eliminates `states` one by one, cheapest fan-in*fan-out first.
    void eliminate_all(std::vector<StateId> states) {
        while (!states.empty()) {
            auto best = std::min_element(states.begin(), states.end(), [&](StateId a, StateId b) {
                auto fa = fan_product(a);
                auto fb = fan_product(b);
                return fa != fb ? fa < fb : a < b;
            });
            StateId s = *best;
            states.erase(best);
            eliminate(s);
        }
    }

    /// The surviving states as a Pmc, renumbered densely in original order.
    Pmc to_pmc(const Pmc& original) const {
        Pmc out;
        out.params = original.params;
        std::vector<std::optional<StateId>> map(out_.size());
        for (StateId s = 0; s < out_.size(); ++s)
            if (!removed_[s]) {
                map[s] = out.labels.size();
                out.labels.push_back(original.label(s));
            }
        out.rows.resize(out.labels.size());
        for (StateId s = 0; s < out_.size(); ++s) {
            if (removed_[s]) continue;
            for (const auto& [v, g] : out_[s]) out.rows[*map[s]].push_back({*map[v], g});
        }
        if (!map[original.initial]) throw Error("the initial state was eliminated");
        out.initial = *map[original.initial];
        for (StateId t : original.target)
            if (map[t]) out.target.push_back(*map[t]);
        if (original.top && map[*original.top]) out.top = *map[*original.top];
        if (original.bottom && map[*original.bottom]) out.bottom = *map[*original.bottom];
        return out;
    }

private:
    void check(const RationalFunction& f) const {
        if (f.term_count() > cap_) throw SizeError("intermediate rational function exceeds " + std::to_string(cap_) + " terms");
    }

    std::size_t arity_;
    std::vector<std::map<StateId, RationalFunction>> out_;
    std::vector<std::set<StateId>> in_;
    std::vector<bool> removed_;
    std::size_t cap_;
};

inline void require_eliminable(const Pmc& pmc, StateId s) {
    if (s >= pmc.num_states()) throw Error("no such state " + std::to_string(s));
    if (s == pmc.initial) throw Error("cannot eliminate the initial state");
    if (pmc.is_sink(s) || pmc.is_target(s)) throw Error("cannot eliminate a target or sink state");
}

} // namespace detail

/// Removes s, rerouting every path through it. The result is renumbered.
inline Pmc eliminate_state(const Pmc& pmc, StateId s, std::size_t term_cap = kDefaultTermCap) {
    detail::require_eliminable(pmc, s);
    detail::Eliminator e(pmc, term_cap);
    e.eliminate(s);
    return e.to_pmc(pmc);
}

/// Eliminates the given states in the given order (ids refer to `pmc`).
inline Pmc eliminate_states(const Pmc& pmc, const std::vector<StateId>& order, std::size_t term_cap = kDefaultTermCap) {
    for (StateId s : order) detail::require_eliminable(pmc, s);
    detail::Eliminator e(pmc, term_cap);
    for (StateId s : order) e.eliminate(s);
    return e.to_pmc(pmc);
}

/// Replaces every cyclic SCC by direct edges from its entry states to the
/// states outside it. The result is acyclic.
inline Pmc scc_eliminate(const Pmc& pmc, std::size_t term_cap = kDefaultTermCap) {
    if (!pmc.is_collapsed()) throw ModelError(ModelError::Kind::NotCollapsed, "SCC elimination needs a collapsed model");
    auto d = sccs(pmc);
    detail::Eliminator e(pmc, term_cap);
    for (std::size_t c = 0; c < d.size(); ++c) {
        if (!d.is_cyclic(c)) continue;
        const auto& members = d.members[c];
        if (members.size() == 1 && pmc.is_absorbing(members[0])) continue;
        const auto& entries = d.entries[c];
        std::vector<StateId> inner;
        for (StateId s : members)
            if (!std::binary_search(entries.begin(), entries.end(), s)) inner.push_back(s);
        e.eliminate_all(inner);
        if (entries.size() == 1) {
            e.drop_self_loop(entries[0]);
            continue;
        }
        std::vector<std::pair<StateId, std::map<StateId, RationalFunction>>> rows;
        for (StateId entry : entries) {
            detail::Eliminator copy = e;
            std::vector<StateId> others;
            for (StateId s : entries)
                if (s != entry) others.push_back(s);
            copy.eliminate_all(others);
            copy.drop_self_loop(entry);
            rows.push_back({entry, copy.row(entry)});
        }
        for (auto& [entry, row] : rows) e.set_row(entry, std::move(row));
    }
    return e.to_pmc(pmc);
}

/// sol_s for each requested state of a collapsed model, read off the direct
/// edge to ⊤ after eliminating everything else.
inline SolutionFunction solution_function(const Pmc& pmc, const std::vector<StateId>& states, std::size_t term_cap = kDefaultTermCap) {
    if (!pmc.is_collapsed()) throw ModelError(ModelError::Kind::NotCollapsed, "solution functions need a collapsed model");
    SolutionFunction out;
    detail::Eliminator base(pmc, term_cap);
    for (StateId r : states) {
        if (r == *pmc.top) {
            out[r] = RationalFunction::constant(pmc.arity(), 1);
            continue;
        }
        if (r == *pmc.bottom) {
            out[r] = RationalFunction::constant(pmc.arity(), 0);
            continue;
        }
        detail::Eliminator e = base;
        std::vector<StateId> rest;
        for (StateId s = 0; s < pmc.num_states(); ++s)
            if (s != r && !pmc.is_sink(s)) rest.push_back(s);
        e.eliminate_all(rest);
        e.drop_self_loop(r);
        auto it = e.row(r).find(*pmc.top);
        out[r] = it == e.row(r).end() ? RationalFunction::constant(pmc.arity(), 0) : it->second;
    }
    return out;
}

inline RationalFunction solution_function(const Pmc& pmc, StateId s, std::size_t term_cap = kDefaultTermCap) {
    return solution_function(pmc, std::vector<StateId>{s}, term_cap).at(s);
}

} // namespace pmcmono
