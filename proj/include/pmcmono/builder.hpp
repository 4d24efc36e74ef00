#pragma once

// Construction of reachability orders: acyclic insertion, forward reasoning
// on cycles, cycle breakers, and branching on assumptions.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pmcmono/error.hpp"
#include "pmcmono/graph.hpp"
#include "pmcmono/model.hpp"
#include "pmcmono/order.hpp"

namespace pmcmono {

enum class DischargeMode { Off, Sampling, SamplingBounds, SamplingBoundsSmt };
enum class CycleStrategy { SccEliminationFirst, CycleBreakingOnly };

inline const char* to_string(DischargeMode m) {
    switch (m) {
    case DischargeMode::Off: return "off";
    case DischargeMode::Sampling: return "sampling";
    case DischargeMode::SamplingBounds: return "sampling+bounds";
    case DischargeMode::SamplingBoundsSmt: return "sampling+bounds+smt-export";
    }
    return "?";
}

inline const char* to_string(CycleStrategy c) {
    return c == CycleStrategy::SccEliminationFirst ? "scc-elimination-first" : "cycle-breaking-only";
}

struct BuilderConfig {
    std::size_t max_orders = 729;
    DischargeMode discharge_mode = DischargeMode::SamplingBounds;
    CycleStrategy cycle_strategy = CycleStrategy::SccEliminationFirst;
    std::size_t sample_grid = 5;

    void check() const {
        if (max_orders < 1) throw Error("max_orders must be at least 1");
        if (sample_grid < 2) throw Error("sample grid needs at least 2 points per dimension");
    }
};

enum class AssumptionKind { Less, Equal };
enum class DischargeResult { Proven, Refuted, Unknown };

inline const char* to_string(DischargeResult r) {
    switch (r) {
    case DischargeResult::Proven: return "proven";
    case DischargeResult::Refuted: return "refuted";
    case DischargeResult::Unknown: return "unknown";
    }
    return "?";
}

/// Decides a candidate relation s ≺ t or s ≡ t in the context of an order.
using Discharger = std::function<DischargeResult(StateId, StateId, AssumptionKind, const ReachOrder&)>;

struct AssumptionEvent {
    StateId first;
    StateId second;
    AssumptionKind kind;
    DischargeResult result;
};

struct BuildResult {
    std::vector<OrderWithAssumptions> orders;
    bool budget_exceeded = false;
    std::size_t branch_points = 0;
    std::size_t made = 0;    ///< relations handed to the discharger (or assumed)
    std::size_t proven = 0;
    std::size_t refuted = 0;
    std::size_t kept = 0;    ///< kept as assumptions
    std::size_t contradictions = 0; ///< branches dropped because the order became cyclic
    std::vector<AssumptionEvent> log;
};

/// Inserts s given that its successors (self-loop aside) are inserted and
/// totally ordered: merges s into the successors' class if they share one,
/// else places it strictly between the lowest and highest successor.
inline void insert_acyclic(ReachOrder& o, const Pmc& pmc, StateId s) {
    std::vector<StateId> succ;
    for (StateId t : pmc.successors(s))
        if (t != s) succ.push_back(t);
    if (succ.empty()) throw Error("insert_acyclic: state " + display_name(pmc, s) + " has no successors");
    for (StateId t : succ)
        if (!o.is_inserted(t)) throw Error("insert_acyclic: successor " + display_name(pmc, t) + " is not inserted");
    if (!o.totally_ordered(succ)) throw Error("insert_acyclic: successors of " + display_name(pmc, s) + " are not totally ordered");
    bool one_class = std::all_of(succ.begin(), succ.end(), [&](StateId t) { return o.equal(t, succ[0]); });
    if (one_class) {
        o.add_equal(s, succ[0]);
        return;
    }
    auto b = o.bounds(succ);
    if (!o.is_inserted(s)) o.insert(s);
    o.add_less(b.max_lb.front(), s);
    o.add_less(s, b.min_ub.front());
}

/// Forward reasoning at a state with exactly two successors s1, s2:
/// s1 ≡ s ⇒ s2 ≡ s; s1 ≺ s ⇒ s ≺ s2; s ≺ s1 ⇒ s2 ≺ s (and symmetrically).
/// Returns whether the order changed.
inline bool cycle_propagate(ReachOrder& o, const Pmc& pmc, StateId s) {
    if (!o.is_inserted(s)) return false;
    std::vector<StateId> succ;
    for (StateId t : pmc.successors(s))
        if (t != s) succ.push_back(t);
    if (succ.size() != 2) return false;
    for (int k = 0; k < 2; ++k) {
        StateId known = succ[k];
        StateId other = succ[1 - k];
        if (!o.is_inserted(known)) continue;
        Relation r = o.compare(known, s);
        if (r == Relation::Incomparable) continue;
        bool fresh = !o.is_inserted(other);
        switch (r) {
        case Relation::Equal:
            if (!fresh && o.equal(other, s)) continue;
            o.add_equal(other, s);
            return true;
        case Relation::Less:
            if (!fresh && o.less(s, other)) continue;
            if (fresh) o.insert(other);
            o.add_less(s, other);
            return true;
        case Relation::Greater:
            if (!fresh && o.less(other, s)) continue;
            if (fresh) o.insert(other);
            o.add_less(other, s);
            return true;
        default: break;
        }
    }
    return false;
}

/// Among the uninserted states of the component, prefers those with a
/// successor outside it; ties by smallest id.
inline std::optional<StateId> pick_cycle_breaker(const ReachOrder& o, const Pmc& pmc, const SccDecomposition& d,
                                                 std::size_t component) {
    std::optional<StateId> fallback;
    for (StateId s : d.members[component]) {
        if (o.is_inserted(s)) continue;
        for (StateId t : pmc.successors(s))
            if (d.component[t] != component) return s;
        if (!fallback) fallback = s;
    }
    return fallback;
}

namespace detail {

struct BuildContext {
    const Pmc& pmc;
    const SccDecomposition& scc;
    const Discharger& discharger;
    BuildResult& result;
};

inline std::vector<StateId> proper_successors(const Pmc& pmc, StateId s) {
    std::vector<StateId> succ;
    for (StateId t : pmc.successors(s))
        if (t != s) succ.push_back(t);
    std::sort(succ.begin(), succ.end());
    return succ;
}

/// Runs one work item until it completes (returns true) or branches into
/// `children` (returns false).
inline bool advance(OrderWithAssumptions& item, BuildContext& ctx, std::vector<OrderWithAssumptions>& children) {
    const Pmc& pmc = ctx.pmc;
    const auto& d = ctx.scc;
    while (true) {
        std::optional<std::size_t> comp;
        for (std::size_t c = 0; c < d.size() && !comp; ++c)
            for (StateId s : d.members[c])
                if (item.remaining[s]) {
                    comp = c;
                    break;
                }
        if (!comp) return true;
        const auto& members = d.members[*comp];

        // Acyclic insertion of any state whose successors are ordered.
        std::optional<StateId> candidate;
        bool progressed = false;
        for (StateId s : members) {
            if (!item.remaining[s]) continue;
            auto succ = proper_successors(pmc, s);
            if (!std::all_of(succ.begin(), succ.end(), [&](StateId t) { return item.order.is_inserted(t); })) continue;
            if (item.order.totally_ordered(succ)) {
                insert_acyclic(item.order, pmc, s);
                item.remaining[s] = false;
                progressed = true;
                break;
            }
            if (!candidate) candidate = s;
        }
        if (progressed) continue;

        if (d.is_cyclic(*comp)) {
            for (StateId s : members) {
                if (item.remaining[s] && cycle_propagate(item.order, pmc, s)) {
                    progressed = true;
                    break;
                }
            }
            if (progressed) continue;
            bool uninserted = std::any_of(members.begin(), members.end(),
                                          [&](StateId s) { return item.remaining[s] && !item.order.is_inserted(s); });
            if (uninserted) {
                auto breaker = pick_cycle_breaker(item.order, pmc, d, *comp);
                item.order.insert(*breaker);
                continue;
            }
        }

        if (!candidate) throw Error("order construction is stuck; the model is not collapsed");

        // Branch on the first incomparable pair of successors.
        auto succ = proper_successors(pmc, *candidate);
        StateId t1 = 0, t2 = 0;
        bool found = false;
        for (std::size_t i = 0; i < succ.size() && !found; ++i)
            for (std::size_t j = i + 1; j < succ.size() && !found; ++j)
                if (!item.order.comparable(succ[i], succ[j])) {
                    t1 = succ[i];
                    t2 = succ[j];
                    found = true;
                }
        ++ctx.result.branch_points;
        struct Option {
            StateId a, b;
            AssumptionKind kind;
        };
        const Option options[] = {{t1, t2, AssumptionKind::Less}, {t2, t1, AssumptionKind::Less}, {t1, t2, AssumptionKind::Equal}};
        std::vector<OrderWithAssumptions> made;
        for (const auto& opt : options) {
            DischargeResult r = ctx.discharger ? ctx.discharger(opt.a, opt.b, opt.kind, item.order) : DischargeResult::Unknown;
            ++ctx.result.made;
            ctx.result.log.push_back({opt.a, opt.b, opt.kind, r});
            if (r == DischargeResult::Refuted) {
                ++ctx.result.refuted;
                continue;
            }
            OrderWithAssumptions child = item;
            try {
                if (opt.kind == AssumptionKind::Less) {
                    child.order.add_less(opt.a, opt.b);
                } else {
                    child.order.add_equal(opt.a, opt.b);
                }
            } catch (const CycleWouldForm&) {
                ++ctx.result.contradictions;
                continue;
            }
            if (r == DischargeResult::Proven) {
                ++ctx.result.proven;
                made.clear();
                made.push_back(std::move(child));
                break;
            }
            ++ctx.result.kept;
            if (opt.kind == AssumptionKind::Less) {
                child.assumptions.less.insert({opt.a, opt.b});
            } else {
                child.assumptions.add_equal(opt.a, opt.b);
            }
            made.push_back(std::move(child));
        }
        // LIFO: push so that the first option is explored first.
        for (auto it = made.rbegin(); it != made.rend(); ++it) children.push_back(std::move(*it));
        return false;
    }
}

} // namespace detail

/// The order known before the first branch point, i.e. everything derivable
/// without assumptions. Used as context for SMT export.
inline ReachOrder assumption_free_order(const Pmc& pmc) {
    auto scc = sccs(pmc);
    OrderWithAssumptions item{ReachOrder::for_model(pmc), {}, std::vector<bool>(pmc.num_states(), true)};
    item.remaining[*pmc.top] = false;
    item.remaining[*pmc.bottom] = false;
    BuildResult scratch;
    Discharger none;
    detail::BuildContext ctx{pmc, scc, none, scratch};
    std::vector<OrderWithAssumptions> children;
    detail::advance(item, ctx, children);
    return item.order;
}

/// All completed orders reachable by the worklist algorithm. The model must be
/// collapsed; cycles are handled by forward reasoning and cycle breakers.
inline BuildResult build(const Pmc& pmc, const BuilderConfig& cfg, const Discharger& discharger = {}) {
    cfg.check();
    BuildResult result;
    auto scc = sccs(pmc);
    OrderWithAssumptions root{ReachOrder::for_model(pmc), {}, std::vector<bool>(pmc.num_states(), true)};
    root.remaining[*pmc.top] = false;
    root.remaining[*pmc.bottom] = false;
    detail::BuildContext ctx{pmc, scc, discharger, result};
    std::vector<OrderWithAssumptions> stack;
    stack.push_back(std::move(root));
    while (!stack.empty()) {
        OrderWithAssumptions item = std::move(stack.back());
        stack.pop_back();
        std::vector<OrderWithAssumptions> children;
        bool done = false;
        try {
            done = detail::advance(item, ctx, children);
        } catch (const CycleWouldForm&) {
            // Contradictory information under the current assumptions.
            ++result.contradictions;
            continue;
        }
        if (done) {
            result.orders.push_back(std::move(item));
        } else {
            for (auto& c : children) stack.push_back(std::move(c));
        }
        if (result.orders.size() + stack.size() > cfg.max_orders) {
            result.budget_exceeded = true;
            break;
        }
    }
    std::stable_sort(result.orders.begin(), result.orders.end(),
                     [](const auto& a, const auto& b) { return a.assumptions < b.assumptions; });
    return result;
}

} // namespace pmcmono
