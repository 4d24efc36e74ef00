#pragma once

// Parametric Markov chains: data model, text format, validation and
// instantiation.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "pmcmono/error.hpp"
#include "pmcmono/expr.hpp"
#include "pmcmono/region.hpp"
#include "pmcmono/sign.hpp"

namespace pmcmono {

using StateId = std::size_t;

struct Transition {
    StateId to;
    RationalFunction f;

    friend bool operator==(const Transition& a, const Transition& b) { return a.to == b.to && a.f == b.f; }
};

/// A parametric Markov chain. States are dense ids; rows without transitions
/// are absorbing. `labels` carries a display name per state (the id in the
/// source file, or "top"/"bottom") and survives renumbering.
struct Pmc {
    std::vector<std::string> params;
    std::vector<std::string> labels;
    std::vector<std::vector<Transition>> rows;
    StateId initial = 0;
    std::vector<StateId> target; ///< sorted, distinct
    std::optional<StateId> top;
    std::optional<StateId> bottom;

    std::size_t num_states() const noexcept { return rows.size(); }
    std::size_t arity() const noexcept { return params.size(); }

    std::size_t num_transitions() const {
        std::size_t n = 0;
        for (const auto& r : rows) n += r.size();
        return n;
    }

    bool is_target(StateId s) const { return std::binary_search(target.begin(), target.end(), s); }

    bool is_absorbing(StateId s) const {
        const auto& r = rows.at(s);
        if (r.empty()) return true;
        return r.size() == 1 && r[0].to == s && r[0].f.constant_value() == Rational(1);
    }

    bool is_sink(StateId s) const { return (top && *top == s) || (bottom && *bottom == s); }

    /// Successors in row order, self-loops included.
    std::vector<StateId> successors(StateId s) const {
        std::vector<StateId> out;
        for (const auto& t : rows.at(s)) out.push_back(t.to);
        return out;
    }

    /// P(s, t), the zero function if there is no edge.
    RationalFunction probability(StateId s, StateId t) const {
        for (const auto& tr : rows.at(s))
            if (tr.to == t) return tr.f;
        return RationalFunction(Polynomial(arity()));
    }

    /// True iff any transition leaving s depends on a parameter.
    bool is_parametric(StateId s) const {
        for (const auto& t : rows.at(s))
            if (!t.f.is_constant()) return true;
        return false;
    }

    bool is_parametric(StateId s, std::size_t param) const {
        for (const auto& t : rows.at(s))
            if (t.f.depends_on(param)) return true;
        return false;
    }

    std::string label(StateId s) const { return s < labels.size() ? labels[s] : std::to_string(s); }

    /// Whether ⊤/⊥ exist, are absorbing, and ⊤ is the unique target.
    bool is_collapsed() const {
        return top && bottom && is_absorbing(*top) && is_absorbing(*bottom) && target.size() == 1 && target[0] == *top;
    }

    friend bool operator==(const Pmc& a, const Pmc& b) {
        return a.params == b.params && a.rows == b.rows && a.initial == b.initial && a.target == b.target &&
               a.top == b.top && a.bottom == b.bottom;
    }
};

/// Every transition is p, 1-p (for a single parameter p) or a constant.
inline bool is_simple_function(const RationalFunction& f) {
    if (f.is_constant()) return true;
    auto poly = f.as_polynomial();
    if (!poly) return false;
    auto vars = poly->variables();
    if (vars.size() != 1) return false;
    Polynomial x = Polynomial::variable(poly->arity(), vars[0]);
    return *poly == x || *poly == Polynomial::constant(poly->arity(), 1) - x;
}

inline bool is_simple(const Pmc& pmc) {
    for (const auto& r : pmc.rows)
        for (const auto& t : r)
            if (!is_simple_function(t.f)) return false;
    return true;
}

namespace detail {

inline std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    std::istringstream in{std::string(s)};
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

/// State reference in a model file: a numeric id, "top" or "bottom".
struct StateNames {
    std::size_t numbered = 0;
    bool use_top = false;
    bool use_bottom = false;

    std::optional<StateId> lookup(const std::string& tok) {
        if (tok == "top") {
            use_top = true;
            return numbered;
        }
        if (tok == "bottom") {
            use_bottom = true;
            return numbered + 1;
        }
        if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](unsigned char c) { return std::isdigit(c); }))
            return std::nullopt;
        std::size_t id = 0;
        try {
            id = std::stoul(tok);
        } catch (const std::exception&) {
            return std::nullopt;
        }
        if (id >= numbered) return std::nullopt;
        return id;
    }
};

} // namespace detail

/// Parses the line-oriented model format:
///
///     params: p q
///     states: 6
///     initial: 0
///     target: 4
///     trans: 0 -> 1 : p ; 0 -> 2 : 1-p
///
/// The names `top` and `bottom` may be used in place of ids; they denote two
/// extra absorbing states appended after the numbered ones. Transition
/// functions may be written as `expr / expr`.
inline Pmc parse_model(std::string_view text) {
    struct RawEdge {
        std::string from, to, expr;
        std::size_t line, column;
    };
    std::optional<std::vector<std::string>> params;
    std::optional<std::size_t> states;
    std::optional<std::pair<std::string, std::size_t>> initial;
    std::optional<std::pair<std::vector<std::string>, std::size_t>> target;
    std::vector<RawEdge> edges;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view raw = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
        std::string line = detail::trim(raw);
        if (line.empty()) {
            if (eol == text.size()) break;
            continue;
        }
        auto colon = line.find(':');
        if (colon == std::string::npos) throw ParseError("expected '<directive>: ...'", line_no, 1);
        std::string key = detail::trim(std::string_view(line).substr(0, colon));
        std::string rest = line.substr(colon + 1);
        auto once = [&](bool seen) {
            if (seen) throw ParseError("duplicate '" + key + ":' declaration", line_no, 1);
        };
        if (key == "params") {
            once(params.has_value());
            params = detail::split_ws(rest);
            std::set<std::string> uniq(params->begin(), params->end());
            if (uniq.size() != params->size()) throw ParseError("duplicate parameter name", line_no, colon + 2);
        } else if (key == "states") {
            once(states.has_value());
            auto toks = detail::split_ws(rest);
            auto n = toks.size() == 1 ? parse_rational(toks[0]) : std::nullopt;
            if (!n || n->get_den() != 1 || *n < 0) throw ParseError("'states:' expects a non-negative count", line_no, colon + 2);
            states = n->get_num().get_ui();
        } else if (key == "initial") {
            once(initial.has_value());
            auto toks = detail::split_ws(rest);
            if (toks.size() != 1) throw ParseError("'initial:' expects one state", line_no, colon + 2);
            initial = {toks[0], line_no};
        } else if (key == "target") {
            once(target.has_value());
            auto toks = detail::split_ws(rest);
            if (toks.empty()) throw ParseError("'target:' expects at least one state", line_no, colon + 2);
            target = {toks, line_no};
        } else if (key == "trans") {
            std::size_t seg_start = colon + 1;
            while (seg_start <= line.size()) {
                std::size_t seg_end = line.find(';', seg_start);
                if (seg_end == std::string::npos) seg_end = line.size();
                std::string seg = line.substr(seg_start, seg_end - seg_start);
                std::size_t column = seg_start + 1;
                seg_start = seg_end + 1;
                if (detail::trim(seg).empty()) {
                    if (seg_end == line.size()) break;
                    throw ParseError("empty transition", line_no, column);
                }
                auto arrow = seg.find("->");
                auto sep = seg.find(':', arrow == std::string::npos ? 0 : arrow);
                if (arrow == std::string::npos || sep == std::string::npos)
                    throw ParseError("transition must read '<from> -> <to> : <expr>'", line_no, column);
                edges.push_back({detail::trim(seg.substr(0, arrow)), detail::trim(seg.substr(arrow + 2, sep - arrow - 2)),
                                 detail::trim(seg.substr(sep + 1)), line_no, column + sep + 1});
                if (seg_end == line.size()) break;
            }
        } else {
            throw ParseError("unknown directive '" + key + "'", line_no, 1);
        }
        if (eol == text.size()) break;
    }
    if (!states) throw ParseError("missing 'states:' declaration", 0, 0);
    if (!initial) throw ParseError("missing 'initial:' declaration", 0, 0);
    if (!target) throw ParseError("missing 'target:' declaration", 0, 0);

    Pmc pmc;
    pmc.params = params.value_or(std::vector<std::string>{});
    detail::StateNames names{*states};
    auto resolve = [&](const std::string& tok, std::size_t line, std::size_t column) {
        auto id = names.lookup(tok);
        if (!id) throw ParseError("unknown state '" + tok + "'", line, column);
        return *id;
    };
    pmc.initial = resolve(initial->first, initial->second, 1);
    std::vector<StateId> tgt;
    for (const auto& t : target->first) tgt.push_back(resolve(t, target->second, 1));
    std::vector<std::tuple<StateId, StateId, RationalFunction>> resolved;
    for (const auto& e : edges) {
        StateId from = resolve(e.from, e.line, e.column);
        StateId to = resolve(e.to, e.line, e.column);
        resolved.emplace_back(from, to, parse_rational_function(e.expr, pmc.params, e.line));
    }
    // top is always added when bottom is, so ids stay N, N+1.
    std::size_t total = *states + (names.use_bottom ? 2 : names.use_top ? 1 : 0);
    pmc.rows.resize(total);
    for (std::size_t i = 0; i < *states; ++i) pmc.labels.push_back(std::to_string(i));
    if (total > *states) {
        pmc.labels.push_back("top");
        pmc.top = *states;
    }
    if (total > *states + 1) {
        pmc.labels.push_back("bottom");
        pmc.bottom = *states + 1;
    }
    for (std::size_t i = 0; i < resolved.size(); ++i) {
        auto& [from, to, f] = resolved[i];
        if (pmc.is_sink(from)) throw ParseError("top/bottom are absorbing and cannot have transitions", edges[i].line, edges[i].column);
        for (const auto& t : pmc.rows[from])
            if (t.to == to) throw ParseError("duplicate transition " + edges[i].from + " -> " + edges[i].to, edges[i].line, edges[i].column);
        if (f.is_zero()) continue;
        pmc.rows[from].push_back({to, std::move(f)});
    }
    std::sort(tgt.begin(), tgt.end());
    if (std::adjacent_find(tgt.begin(), tgt.end()) != tgt.end()) throw ParseError("duplicate target state", target->second, 1);
    if (pmc.bottom && std::binary_search(tgt.begin(), tgt.end(), *pmc.bottom))
        throw ParseError("bottom cannot be a target", target->second, 1);
    pmc.target = std::move(tgt);
    return pmc;
}

/// Writes a model in the format read by parse_model. When ⊤/⊥ are the last
/// states they are written by name.
inline std::string serialize_model(const Pmc& pmc) {
    std::size_t n = pmc.num_states();
    std::size_t numbered = n;
    bool named_top = false;
    bool named_bottom = false;
    if (pmc.bottom && pmc.top && *pmc.top + 1 == *pmc.bottom && *pmc.bottom + 1 == n) {
        numbered = n - 2;
        named_top = named_bottom = true;
    } else if (pmc.top && !pmc.bottom && *pmc.top + 1 == n) {
        numbered = n - 1;
        named_top = true;
    }
    auto name = [&](StateId s) {
        if (named_top && s == *pmc.top) return std::string("top");
        if (named_bottom && s == *pmc.bottom) return std::string("bottom");
        return std::to_string(s);
    };
    std::ostringstream out;
    out << "params:";
    for (const auto& p : pmc.params) out << ' ' << p;
    out << "\nstates: " << numbered << "\ninitial: " << name(pmc.initial) << "\ntarget:";
    for (auto t : pmc.target) out << ' ' << name(t);
    out << '\n';
    for (StateId s = 0; s < n; ++s) {
        if (pmc.rows[s].empty()) continue;
        out << "trans:";
        bool first = true;
        for (const auto& t : pmc.rows[s]) {
            out << (first ? " " : " ; ") << name(s) << " -> " << name(t.to) << " : " << t.f.to_string(pmc.params);
            first = false;
        }
        out << '\n';
    }
    return out.str();
}

struct RowResidual {
    StateId state;
    RationalFunction residual; ///< 1 - row sum
};

/// Rows whose symbolic sum is not the constant 1. Absorbing (empty) rows are fine.
inline std::vector<RowResidual> row_sum_residuals(const Pmc& pmc) {
    std::vector<RowResidual> out;
    for (StateId s = 0; s < pmc.num_states(); ++s) {
        if (pmc.rows[s].empty()) continue;
        RationalFunction sum(Polynomial(pmc.arity()));
        for (const auto& t : pmc.rows[s]) sum += t.f;
        RationalFunction residual = RationalFunction::constant(pmc.arity(), 1) - sum;
        if (!residual.is_zero()) out.push_back({s, residual});
    }
    return out;
}

inline void validate(const Pmc& pmc) {
    if (pmc.rows.size() != pmc.labels.size() && !pmc.labels.empty())
        throw ModelError(ModelError::Kind::Other, "label count does not match state count");
    for (StateId s = 0; s < pmc.num_states(); ++s)
        for (const auto& t : pmc.rows[s])
            if (t.to >= pmc.num_states()) throw ModelError(ModelError::Kind::Other, "dangling successor of state " + pmc.label(s));
    auto bad = row_sum_residuals(pmc);
    if (bad.empty()) return;
    std::string msg = "row sums differ from 1:";
    for (const auto& r : bad) msg += " state " + pmc.label(r.state) + " (residual " + r.residual.to_string(pmc.params) + ");";
    msg.pop_back();
    throw ModelError(ModelError::Kind::RowSumMismatch, msg);
}

enum class GraphPreservation { Ok, Violated, Unknown };

struct GraphPreservationReport {
    GraphPreservation status = GraphPreservation::Ok;
    StateId state = 0;
    StateId successor = 0;
    std::optional<Instantiation> witness;

    std::string describe(const Pmc& pmc) const {
        if (status == GraphPreservation::Ok) return "graph-preserving";
        std::string edge = pmc.label(state) + " -> " + pmc.label(successor);
        if (status == GraphPreservation::Unknown) return "cannot decide positivity of transition " + edge;
        std::string msg = "transition " + edge + " is not positive";
        if (witness) {
            msg += " at";
            for (std::size_t i = 0; i < witness->size(); ++i)
                msg += " " + pmc.params[i] + "=" + (*witness)[i].get_str();
        }
        return msg;
    }
};

/// Positivity of a single transition function on R.
inline PositivityResult transition_positivity(const RationalFunction& f, const Region& R) {
    if (f.is_polynomial()) return strict_positivity_on_box(*f.as_polynomial(), R);
    auto num = strict_positivity_on_box(f.num(), R);
    auto den = strict_positivity_on_box(f.den(), R);
    if (num.status == Positivity::Positive && den.status == Positivity::Positive) return num;
    auto nneg = strict_positivity_on_box(-f.num(), R);
    auto dneg = strict_positivity_on_box(-f.den(), R);
    if (nneg.status == Positivity::Positive && dneg.status == Positivity::Positive) return nneg;
    // Evaluate at corners and a grid for a concrete violation.
    for (const auto& u : R.inclusive_grid(5)) {
        Rational d = f.den().evaluate(u);
        if (d == 0 || f.num().evaluate(u) / d <= 0) return {Positivity::Violated, SignWitness{u, d == 0 ? Rational(0) : f.num().evaluate(u) / d}};
    }
    return {};
}

/// Checks that every transition stays strictly positive on the closed box R.
inline GraphPreservationReport check_graph_preserving(const Pmc& pmc, const Region& R) {
    if (R.arity() != pmc.arity()) throw Error("region arity does not match the model");
    GraphPreservationReport unknown;
    bool have_unknown = false;
    for (StateId s = 0; s < pmc.num_states(); ++s) {
        for (const auto& t : pmc.rows[s]) {
            auto res = transition_positivity(t.f, R);
            if (res.status == Positivity::Violated) {
                GraphPreservationReport r{GraphPreservation::Violated, s, t.to, std::nullopt};
                if (res.witness) r.witness = res.witness->point;
                return r;
            }
            if (res.status == Positivity::Unknown && !have_unknown) {
                have_unknown = true;
                unknown = {GraphPreservation::Unknown, s, t.to, std::nullopt};
            }
        }
    }
    return have_unknown ? unknown : GraphPreservationReport{};
}

/// A Markov chain with exact rational probabilities.
struct ConcreteMc {
    struct Edge {
        StateId to;
        Rational p;
    };
    std::vector<std::vector<Edge>> rows;
    StateId initial = 0;
    std::vector<StateId> target;
    std::optional<StateId> top;
    std::optional<StateId> bottom;

    std::size_t num_states() const noexcept { return rows.size(); }
};

/// M[u]: substitutes u into every transition.
inline ConcreteMc instantiate(const Pmc& pmc, const Instantiation& u) {
    if (u.size() != pmc.arity()) throw Error("instantiation does not assign every parameter");
    ConcreteMc mc;
    mc.rows.resize(pmc.num_states());
    mc.initial = pmc.initial;
    mc.target = pmc.target;
    mc.top = pmc.top;
    mc.bottom = pmc.bottom;
    for (StateId s = 0; s < pmc.num_states(); ++s) {
        Rational sum(0);
        for (const auto& t : pmc.rows[s]) {
            Rational p;
            try {
                p = t.f.evaluate(u);
            } catch (const MathError&) {
                throw ModelError(ModelError::Kind::NotWellDefined, "transition " + pmc.label(s) + " -> " + pmc.label(t.to) +
                                                                       " is undefined at the instantiation");
            }
            if (p < 0 || p > 1)
                throw ModelError(ModelError::Kind::NotWellDefined,
                                 "state " + pmc.label(s) + ": probability " + p.get_str() + " outside [0,1]");
            if (p == 0)
                throw ModelError(ModelError::Kind::GraphPreservationViolated,
                                 "transition " + pmc.label(s) + " -> " + pmc.label(t.to) + " vanishes at the instantiation");
            sum += p;
            mc.rows[s].push_back({t.to, p});
        }
        if (!pmc.rows[s].empty() && sum != 1)
            throw ModelError(ModelError::Kind::NotWellDefined, "state " + pmc.label(s) + ": row sums to " + sum.get_str());
    }
    return mc;
}

} // namespace pmcmono
