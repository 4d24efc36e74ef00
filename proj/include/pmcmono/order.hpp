#pragma once

// Reachability orders: a pre-order on states kept as equivalence classes with
// the transitive closure of the strict part stored as one bitset per class.

#include <algorithm>
#include <cstddef>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <boost/dynamic_bitset.hpp>

#include "pmcmono/error.hpp"
#include "pmcmono/model.hpp"

namespace pmcmono {

/// Raised when a requested relation contradicts the order.
class CycleWouldForm : public Error {
public:
    CycleWouldForm(StateId s, StateId t)
        : Error("ordering " + std::to_string(s) + " and " + std::to_string(t) + " would form a cycle"), s_(s), t_(t) {}
    StateId first() const noexcept { return s_; }
    StateId second() const noexcept { return t_; }

private:
    StateId s_;
    StateId t_;
};

enum class Relation { Less, Equal, Greater, Incomparable };

inline const char* to_string(Relation r) {
    switch (r) {
    case Relation::Less: return "less";
    case Relation::Equal: return "equal";
    case Relation::Greater: return "greater";
    case Relation::Incomparable: return "incomparable";
    }
    return "?";
}

/// Display name of a state: "s<id>" for numbered states, "top"/"bottom" otherwise.
inline std::string display_name(const Pmc& pmc, StateId s) {
    std::string l = pmc.label(s);
    if (!l.empty() && std::all_of(l.begin(), l.end(), [](unsigned char c) { return std::isdigit(c); })) return "s" + l;
    return l;
}

class ReachOrder {
public:
    using Bits = boost::dynamic_bitset<>;

    ReachOrder() = default;

    /// The order {⊥ ≺ ⊤} over n states.
    ReachOrder(std::size_t n, StateId top, StateId bottom)
        : parent_(n), inserted_(n, false), below_(n), members_(n), top_(top), bottom_(bottom) {
        for (StateId s = 0; s < n; ++s) parent_[s] = s;
        make_class(bottom);
        make_class(top);
        below_[top].set(bottom);
    }

    /// new_order: requires a collapsed model.
    static ReachOrder for_model(const Pmc& pmc) {
        if (!pmc.is_collapsed()) throw ModelError(ModelError::Kind::NotCollapsed, "order construction needs a collapsed model");
        return ReachOrder(pmc.num_states(), *pmc.top, *pmc.bottom);
    }

    std::size_t num_states() const noexcept { return parent_.size(); }
    StateId top() const noexcept { return top_; }
    StateId bottom() const noexcept { return bottom_; }
    bool is_inserted(StateId s) const { return inserted_.at(s); }

    /// Class representative (smallest member id).
    StateId rep(StateId s) const {
        require(s);
        while (parent_[s] != s) s = parent_[s];
        return s;
    }

    const std::vector<StateId>& members(StateId s) const { return members_[rep(s)]; }

    /// Representatives of all classes, ascending.
    const std::vector<StateId>& classes() const noexcept { return reps_; }

    std::size_t num_inserted() const {
        return static_cast<std::size_t>(std::count(inserted_.begin(), inserted_.end(), true));
    }

    /// Strictly below (s ≺ t).
    bool less(StateId s, StateId t) const { return below_[rep(t)].test(rep(s)); }
    bool equal(StateId s, StateId t) const { return rep(s) == rep(t); }
    bool less_equal(StateId s, StateId t) const { return equal(s, t) || less(s, t); }

    Relation compare(StateId s, StateId t) const {
        StateId a = rep(s);
        StateId b = rep(t);
        if (a == b) return Relation::Equal;
        if (below_[b].test(a)) return Relation::Less;
        if (below_[a].test(b)) return Relation::Greater;
        return Relation::Incomparable;
    }

    bool comparable(StateId s, StateId t) const { return compare(s, t) != Relation::Incomparable; }

    /// Inserts s as a fresh class with ⊥ ≺ s ≺ ⊤.
    void insert(StateId s) {
        if (inserted_.at(s)) return;
        make_class(s);
        add_less(bottom_, s);
        add_less(s, top_);
    }

    void add_less(StateId s, StateId t) {
        StateId a = rep(s);
        StateId b = rep(t);
        if (a == b || below_[a].test(b)) throw CycleWouldForm(s, t);
        if (below_[b].test(a)) return;
        Bits lower = below_[a];
        lower.set(a);
        for (StateId c : reps_)
            if (c == b || below_[c].test(b)) below_[c] |= lower;
    }

    /// Merges the classes of s and t. An uninserted s joins t's class directly.
    void add_equal(StateId s, StateId t) {
        if (!inserted_.at(s)) {
            if (!inserted_.at(t)) throw Error("add_equal: neither state is inserted");
            std::swap(s, t);
            make_class(t);
        } else if (!inserted_.at(t)) {
            make_class(t);
        }
        StateId a = rep(s);
        StateId b = rep(t);
        if (a == b) return;
        if (below_[a].test(b) || below_[b].test(a)) throw CycleWouldForm(s, t);
        StateId r = std::min(a, b);
        StateId o = std::max(a, b);
        below_[r] |= below_[o];
        below_[o].clear();
        parent_[o] = r;
        members_[r].insert(members_[r].end(), members_[o].begin(), members_[o].end());
        std::sort(members_[r].begin(), members_[r].end());
        members_[o].clear();
        reps_.erase(std::find(reps_.begin(), reps_.end(), o));
        Bits lower = below_[r];
        lower.set(r);
        for (StateId c : reps_) {
            if (c == r) continue;
            if (below_[c].test(o)) {
                below_[c].reset(o);
                below_[c].set(r);
            }
            if (below_[c].test(r)) below_[c] |= lower;
        }
        for (StateId c : reps_) parent_compress(c);
    }

    struct Bounds {
        std::vector<StateId> lb;     ///< states s with s ⪯ X
        std::vector<StateId> ub;     ///< states s with X ⪯ s
        std::vector<StateId> max_lb; ///< states of the maximal classes of lb
        std::vector<StateId> min_ub; ///< states of the minimal classes of ub
    };

    Bounds bounds(const std::vector<StateId>& xs) const {
        std::vector<StateId> lb_reps;
        std::vector<StateId> ub_reps;
        for (StateId c : reps_) {
            bool below_all = true;
            bool above_all = true;
            for (StateId x : xs) {
                below_all = below_all && less_equal(c, x);
                above_all = above_all && less_equal(x, c);
            }
            if (below_all) lb_reps.push_back(c);
            if (above_all) ub_reps.push_back(c);
        }
        Bounds b;
        for (StateId c : lb_reps) {
            append(b.lb, c);
            bool maximal = std::none_of(lb_reps.begin(), lb_reps.end(), [&](StateId d) { return below_[d].test(c); });
            if (maximal) append(b.max_lb, c);
        }
        for (StateId c : ub_reps) {
            append(b.ub, c);
            bool minimal = std::none_of(ub_reps.begin(), ub_reps.end(), [&](StateId d) { return below_[c].test(d); });
            if (minimal) append(b.min_ub, c);
        }
        for (auto* v : {&b.lb, &b.ub, &b.max_lb, &b.min_ub}) std::sort(v->begin(), v->end());
        return b;
    }

    /// Whether the given (inserted) states are pairwise comparable.
    bool totally_ordered(const std::vector<StateId>& xs) const {
        for (std::size_t i = 0; i < xs.size(); ++i)
            for (std::size_t j = i + 1; j < xs.size(); ++j)
                if (!comparable(xs[i], xs[j])) return false;
        return true;
    }

    /// Covering pairs (a, b) of class representatives with a ≺ b.
    std::vector<std::pair<StateId, StateId>> hasse_edges() const {
        std::vector<std::pair<StateId, StateId>> out;
        for (StateId b : reps_) {
            for (StateId a : reps_) {
                if (!below_[b].test(a)) continue;
                bool covered = true;
                for (StateId c : reps_) {
                    if (c != a && c != b && below_[b].test(c) && below_[c].test(a)) {
                        covered = false;
                        break;
                    }
                }
                if (covered) out.push_back({a, b});
            }
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    friend bool operator==(const ReachOrder& x, const ReachOrder& y) {
        if (x.num_states() != y.num_states() || x.inserted_ != y.inserted_ || x.reps_ != y.reps_) return false;
        for (StateId s = 0; s < x.num_states(); ++s) {
            if (!x.inserted_[s]) continue;
            if (x.rep(s) != y.rep(s)) return false;
        }
        for (StateId c : x.reps_)
            if (x.below_[c] != y.below_[c]) return false;
        return true;
    }

private:
    void require(StateId s) const {
        if (s >= parent_.size() || !inserted_[s]) throw Error("state " + std::to_string(s) + " is not in the order");
    }

    void make_class(StateId s) {
        inserted_.at(s) = true;
        parent_[s] = s;
        below_[s] = Bits(parent_.size());
        members_[s] = {s};
        reps_.insert(std::upper_bound(reps_.begin(), reps_.end(), s), s);
    }

    void parent_compress(StateId c) {
        for (StateId m : members_[c]) parent_[m] = c;
    }

    void append(std::vector<StateId>& v, StateId c) const { v.insert(v.end(), members_[c].begin(), members_[c].end()); }

    std::vector<StateId> parent_;
    std::vector<bool> inserted_;
    std::vector<Bits> below_;
    std::vector<std::vector<StateId>> members_;
    std::vector<StateId> reps_;
    StateId top_ = 0;
    StateId bottom_ = 0;
};

/// A_≺ as ordered pairs and A_≡ as pairs with first < second.
struct Assumptions {
    std::set<std::pair<StateId, StateId>> less;
    std::set<std::pair<StateId, StateId>> equal;

    bool empty() const noexcept { return less.empty() && equal.empty(); }
    std::size_t size() const noexcept { return less.size() + equal.size(); }

    void add_equal(StateId s, StateId t) { equal.insert({std::min(s, t), std::max(s, t)}); }

    friend auto operator<=>(const Assumptions&, const Assumptions&) = default;
    friend bool operator==(const Assumptions&, const Assumptions&) = default;

    std::string to_string(const Pmc& pmc) const {
        std::string out;
        for (const auto& [a, b] : less) out += (out.empty() ? "" : ", ") + display_name(pmc, a) + " < " + display_name(pmc, b);
        for (const auto& [a, b] : equal) out += (out.empty() ? "" : ", ") + display_name(pmc, a) + " = " + display_name(pmc, b);
        return out;
    }
};

struct OrderWithAssumptions {
    ReachOrder order;
    Assumptions assumptions;
    std::vector<bool> remaining; ///< states not yet processed
};

inline bool is_sufficient_for(const ReachOrder& o, const Pmc& pmc, StateId s) {
    auto succ = pmc.successors(s);
    for (StateId t : succ)
        if (!o.is_inserted(t)) return false;
    return o.totally_ordered(succ);
}

/// Sufficient for every parametric state.
inline bool is_sufficient(const ReachOrder& o, const Pmc& pmc) {
    for (StateId s = 0; s < pmc.num_states(); ++s)
        if (pmc.is_parametric(s) && !is_sufficient_for(o, pmc, s)) return false;
    return true;
}

/// Hasse diagram in DOT; edges point upwards (from lower to higher class).
inline std::string export_dot(const ReachOrder& o, const Pmc& pmc) {
    std::ostringstream out;
    out << "digraph order {\n  rankdir=LR;\n";
    for (StateId c : o.classes()) {
        out << "  c" << c << " [label=\"{";
        bool first = true;
        for (StateId m : o.members(c)) {
            out << (first ? "" : ", ") << display_name(pmc, m);
            first = false;
        }
        out << "}\"];\n";
    }
    for (auto [a, b] : o.hasse_edges()) out << "  c" << a << " -> c" << b << ";\n";
    out << "}\n";
    return out.str();
}

} // namespace pmcmono
