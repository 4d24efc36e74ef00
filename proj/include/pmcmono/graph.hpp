#pragma once

// Graph preprocessing: SCC condensation and the qualitative ⊤/⊥ collapse.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <optional>
#include <queue>
#include <vector>

#include "pmcmono/error.hpp"
#include "pmcmono/model.hpp"

namespace pmcmono {

struct SccDecomposition {
    std::vector<std::size_t> component;            ///< component index per state
    std::vector<std::vector<StateId>> members;     ///< sorted ids, components in reverse topological order
    std::vector<std::vector<StateId>> entries;     ///< members with an edge from outside (or the initial state)
    std::vector<std::vector<std::pair<StateId, StateId>>> exits; ///< edges leaving the component
    std::vector<bool> self_loop;                   ///< per component: some member has a self-loop

    std::size_t size() const noexcept { return members.size(); }

    /// Non-singleton or carrying a self-loop.
    bool is_cyclic(std::size_t c) const { return members[c].size() > 1 || self_loop[c]; }

    bool acyclic() const {
        for (std::size_t c = 0; c < size(); ++c)
            if (is_cyclic(c)) return false;
        return true;
    }
};

namespace detail {

/// Iterative Tarjan; returns the component index of every vertex.
inline std::vector<std::size_t> tarjan(const std::vector<std::vector<StateId>>& adj, std::size_t& count) {
    constexpr std::size_t unvisited = std::numeric_limits<std::size_t>::max();
    std::size_t n = adj.size();
    std::vector<std::size_t> index(n, unvisited), low(n, 0), comp(n, unvisited);
    std::vector<bool> on_stack(n, false);
    std::vector<StateId> stack;
    std::vector<std::pair<StateId, std::size_t>> call;
    std::size_t next = 0;
    count = 0;
    for (StateId root = 0; root < n; ++root) {
        if (index[root] != unvisited) continue;
        call.push_back({root, 0});
        while (!call.empty()) {
            auto& [v, i] = call.back();
            if (i == 0 && index[v] == unvisited) {
                index[v] = low[v] = next++;
                stack.push_back(v);
                on_stack[v] = true;
            }
            if (i < adj[v].size()) {
                StateId w = adj[v][i++];
                if (index[w] == unvisited) {
                    call.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
                continue;
            }
            if (low[v] == index[v]) {
                StateId w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    comp[w] = count;
                } while (w != v);
                ++count;
            }
            StateId done = v;
            call.pop_back();
            if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[done]);
        }
    }
    return comp;
}

} // namespace detail

/// Strongly connected components, sinks first. Among components whose
/// successors are all listed, the one with the smallest member id goes next.
inline SccDecomposition sccs(const Pmc& pmc) {
    std::size_t n = pmc.num_states();
    std::vector<std::vector<StateId>> adj(n);
    for (StateId s = 0; s < n; ++s) adj[s] = pmc.successors(s);
    std::size_t count = 0;
    auto raw = detail::tarjan(adj, count);

    std::vector<std::vector<StateId>> raw_members(count);
    for (StateId s = 0; s < n; ++s) raw_members[raw[s]].push_back(s);

    // Kahn on the condensation, processing sinks first.
    std::vector<std::vector<std::size_t>> preds(count);
    std::vector<std::size_t> out_degree(count, 0);
    for (StateId s = 0; s < n; ++s) {
        for (StateId t : adj[s]) {
            if (raw[s] == raw[t]) continue;
            preds[raw[t]].push_back(raw[s]);
            ++out_degree[raw[s]];
        }
    }
    using Item = std::pair<StateId, std::size_t>; // (smallest member, raw component)
    std::priority_queue<Item, std::vector<Item>, std::greater<>> ready;
    for (std::size_t c = 0; c < count; ++c)
        if (out_degree[c] == 0) ready.push({raw_members[c].front(), c});
    std::vector<std::size_t> renumber(count);
    SccDecomposition d;
    while (!ready.empty()) {
        auto [_, c] = ready.top();
        ready.pop();
        renumber[c] = d.members.size();
        d.members.push_back(raw_members[c]);
        for (std::size_t p : preds[c])
            if (--out_degree[p] == 0) ready.push({raw_members[p].front(), p});
    }
    d.component.resize(n);
    for (StateId s = 0; s < n; ++s) d.component[s] = renumber[raw[s]];
    d.entries.assign(d.size(), {});
    d.exits.assign(d.size(), {});
    d.self_loop.assign(d.size(), false);
    std::vector<bool> is_entry(n, false);
    if (n > 0) is_entry[pmc.initial] = true;
    for (StateId s = 0; s < n; ++s) {
        for (StateId t : adj[s]) {
            if (s == t) d.self_loop[d.component[s]] = true;
            if (d.component[s] != d.component[t]) {
                is_entry[t] = true;
                d.exits[d.component[s]].push_back({s, t});
            }
        }
    }
    for (StateId s = 0; s < n; ++s)
        if (is_entry[s]) d.entries[d.component[s]].push_back(s);
    return d;
}

namespace detail {

inline std::vector<bool> backward_reach(const Pmc& pmc, const std::vector<bool>& seed, const std::vector<bool>& blocked) {
    std::size_t n = pmc.num_states();
    std::vector<std::vector<StateId>> rev(n);
    for (StateId s = 0; s < n; ++s)
        for (const auto& t : pmc.rows[s]) rev[t.to].push_back(s);
    std::vector<bool> seen = seed;
    std::vector<StateId> work;
    for (StateId s = 0; s < n; ++s)
        if (seed[s]) work.push_back(s);
    while (!work.empty()) {
        StateId t = work.back();
        work.pop_back();
        for (StateId s : rev[t]) {
            if (seen[s] || blocked[s]) continue;
            seen[s] = true;
            work.push_back(s);
        }
    }
    return seen;
}

} // namespace detail

struct CollapseResult {
    Pmc pmc;
    std::vector<std::optional<StateId>> old_to_new; ///< nullopt for dropped states
    std::size_t prob0 = 0;                         ///< states merged into ⊥
    std::size_t prob1 = 0;                         ///< states merged into ⊤
    std::size_t dropped = 0;                       ///< unreachable states removed
};

/// Merges states that cannot reach the target into ⊥ and states that reach it
/// almost surely into ⊤, and removes states unreachable from the initial one.
/// Layout of the result: surviving states in original order, then ⊤, then ⊥.
inline CollapseResult prob01_collapse_mapped(const Pmc& pmc) {
    std::size_t n = pmc.num_states();
    std::vector<bool> is_target(n, false);
    for (StateId t : pmc.target) is_target[t] = true;
    std::vector<bool> none(n, false);
    auto reach_target = detail::backward_reach(pmc, is_target, none);
    std::vector<bool> prob0(n);
    for (StateId s = 0; s < n; ++s) prob0[s] = !reach_target[s];
    auto may_fail = detail::backward_reach(pmc, prob0, is_target);
    std::vector<bool> prob1(n);
    for (StateId s = 0; s < n; ++s) prob1[s] = !may_fail[s];

    if (prob0[pmc.initial]) throw ModelError(ModelError::Kind::InitialStateIsBottom, "the initial state cannot reach the target");
    if (prob1[pmc.initial]) throw ModelError(ModelError::Kind::InitialStateIsTop, "the initial state reaches the target almost surely");

    // Forward reachability through transient states only.
    std::vector<bool> reachable(n, false);
    std::vector<StateId> work{pmc.initial};
    reachable[pmc.initial] = true;
    while (!work.empty()) {
        StateId s = work.back();
        work.pop_back();
        for (const auto& t : pmc.rows[s]) {
            if (reachable[t.to] || prob0[t.to] || prob1[t.to]) continue;
            reachable[t.to] = true;
            work.push_back(t.to);
        }
    }

    CollapseResult res;
    res.old_to_new.assign(n, std::nullopt);
    Pmc& out = res.pmc;
    out.params = pmc.params;
    StateId next = 0;
    for (StateId s = 0; s < n; ++s) {
        if (prob0[s]) {
            ++res.prob0;
        } else if (prob1[s]) {
            ++res.prob1;
        } else if (reachable[s]) {
            res.old_to_new[s] = next++;
            out.labels.push_back(pmc.label(s));
        } else {
            ++res.dropped;
        }
    }
    StateId top = next++;
    StateId bottom = next++;
    out.labels.push_back("top");
    out.labels.push_back("bottom");
    for (StateId s = 0; s < n; ++s) {
        if (prob1[s]) res.old_to_new[s] = top;
        if (prob0[s]) res.old_to_new[s] = bottom;
    }
    out.top = top;
    out.bottom = bottom;
    out.target = {top};
    out.initial = *res.old_to_new[pmc.initial];
    out.rows.resize(next);
    for (StateId s = 0; s < n; ++s) {
        if (!reachable[s] || prob0[s] || prob1[s]) continue;
        auto& row = out.rows[*res.old_to_new[s]];
        for (const auto& t : pmc.rows[s]) {
            StateId to = *res.old_to_new[t.to];
            auto it = std::find_if(row.begin(), row.end(), [&](const Transition& x) { return x.to == to; });
            if (it == row.end()) {
                row.push_back({to, t.f});
            } else {
                it->f += t.f;
            }
        }
        std::erase_if(row, [](const Transition& x) { return x.f.is_zero(); });
    }
    return res;
}

inline Pmc prob01_collapse(const Pmc& pmc) { return prob01_collapse_mapped(pmc).pmc; }

} // namespace pmcmono
