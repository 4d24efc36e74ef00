#pragma once

// Discharging order assumptions: exact sampling, interval bounds from a
// parameter-lifting relaxation, and SMT-LIB export of the local equations.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pmcmono/builder.hpp"
#include "pmcmono/error.hpp"
#include "pmcmono/graph.hpp"
#include "pmcmono/model.hpp"
#include "pmcmono/order.hpp"
#include "pmcmono/region.hpp"

namespace pmcmono {

inline constexpr std::size_t kExactSolveLimit = 2000;
inline constexpr double kFloatRefuteMargin = 1e-9;

/// States that cannot reach the target (graph-based).
inline std::vector<bool> prob0_states(const Pmc& pmc) {
    std::vector<bool> is_target(pmc.num_states(), false);
    for (StateId t : pmc.target) is_target[t] = true;
    auto reach = detail::backward_reach(pmc, is_target, std::vector<bool>(pmc.num_states(), false));
    for (std::size_t i = 0; i < reach.size(); ++i) reach[i] = !reach[i];
    return reach;
}

namespace detail {

/// Reachability probabilities of a concrete chain. `zero` marks states known
/// to have probability 0. Returns exact values when at most kExactSolveLimit
/// states are unknown, otherwise a binary64 solve converted to rationals.
inline std::vector<Rational> solve_reachability(const ConcreteMc& mc, const std::vector<bool>& zero, bool& exact) {
    std::size_t n = mc.num_states();
    std::vector<Rational> x(n, Rational(0));
    std::vector<bool> is_target(n, false);
    for (StateId t : mc.target) {
        is_target[t] = true;
        x[t] = 1;
    }
    std::vector<std::size_t> index(n, n);
    std::vector<StateId> unknown;
    for (StateId s = 0; s < n; ++s)
        if (!is_target[s] && !zero[s]) {
            index[s] = unknown.size();
            unknown.push_back(s);
        }
    std::size_t m = unknown.size();
    exact = m <= kExactSolveLimit;
    if (m == 0) return x;
    if (exact) {
        // (I - P) x = b, dense Gaussian elimination over the rationals.
        std::vector<std::vector<Rational>> a(m, std::vector<Rational>(m + 1, Rational(0)));
        for (std::size_t i = 0; i < m; ++i) {
            a[i][i] = 1;
            for (const auto& e : mc.rows[unknown[i]]) {
                if (is_target[e.to]) a[i][m] += e.p;
                else if (index[e.to] < n) a[i][index[e.to]] -= e.p;
            }
        }
        for (std::size_t col = 0; col < m; ++col) {
            std::size_t piv = col;
            while (piv < m && a[piv][col] == 0) ++piv;
            if (piv == m) throw Error("singular reachability system");
            std::swap(a[piv], a[col]);
            Rational inv = Rational(1) / a[col][col];
            for (std::size_t k = col; k <= m; ++k)
                if (a[col][k] != 0) a[col][k] *= inv;
            for (std::size_t r = 0; r < m; ++r) {
                if (r == col || a[r][col] == 0) continue;
                Rational f = a[r][col];
                for (std::size_t k = col; k <= m; ++k)
                    if (a[col][k] != 0) a[r][k] -= f * a[col][k];
            }
        }
        for (std::size_t i = 0; i < m; ++i) x[unknown[i]] = a[i][m];
        return x;
    }
    std::vector<std::vector<double>> a(m, std::vector<double>(m + 1, 0.0));
    for (std::size_t i = 0; i < m; ++i) {
        a[i][i] = 1.0;
        for (const auto& e : mc.rows[unknown[i]]) {
            double p = e.p.get_d();
            if (is_target[e.to]) a[i][m] += p;
            else if (index[e.to] < n) a[i][index[e.to]] -= p;
        }
    }
    for (std::size_t col = 0; col < m; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < m; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (a[piv][col] == 0.0) throw Error("singular reachability system");
        std::swap(a[piv], a[col]);
        for (std::size_t r = col + 1; r < m; ++r) {
            double f = a[r][col] / a[col][col];
            if (f == 0.0) continue;
            for (std::size_t k = col; k <= m; ++k) a[r][k] -= f * a[col][k];
        }
    }
    std::vector<double> y(m);
    for (std::size_t i = m; i-- > 0;) {
        double acc = a[i][m];
        for (std::size_t k = i + 1; k < m; ++k) acc -= a[i][k] * y[k];
        y[i] = acc / a[i][i];
    }
    for (std::size_t i = 0; i < m; ++i) x[unknown[i]] = Rational(std::clamp(y[i], 0.0, 1.0));
    return x;
}

} // namespace detail

/// Reachability probability of every state at u.
inline std::vector<Rational> reachability(const Pmc& pmc, const Instantiation& u) {
    bool exact = true;
    return detail::solve_reachability(instantiate(pmc, u), prob0_states(pmc), exact);
}

struct SampleTable {
    std::vector<Instantiation> grid;
    std::vector<std::vector<Rational>> values; ///< values[i][s]: Pr_s at grid[i]
    bool exact = true;

    const Rational& value(StateId s, std::size_t i) const { return values.at(i).at(s); }
};

/// Samples the model on an explicit set of instantiations.
inline SampleTable sample_points(const Pmc& pmc, std::vector<Instantiation> grid, std::size_t jobs = 1) {
    SampleTable t;
    t.grid = std::move(grid);
    t.values.resize(t.grid.size());
    auto zero = prob0_states(pmc);
    std::vector<char> exact(t.grid.size(), 1);
    auto solve = [&](std::size_t i) {
        bool e = true;
        t.values[i] = detail::solve_reachability(instantiate(pmc, t.grid[i]), zero, e);
        exact[i] = e;
    };
    if (jobs <= 1 || t.grid.size() <= 1) {
        for (std::size_t i = 0; i < t.grid.size(); ++i) solve(i);
    } else {
        std::vector<std::future<void>> pending;
        for (std::size_t w = 0; w < jobs; ++w)
            pending.push_back(std::async(std::launch::async, [&, w] {
                for (std::size_t i = w; i < t.grid.size(); i += jobs) solve(i);
            }));
        for (auto& f : pending) f.get();
    }
    t.exact = std::all_of(exact.begin(), exact.end(), [](char c) { return c != 0; });
    return t;
}

/// Samples on the interior grid with n points per dimension.
inline SampleTable sample_table(const Pmc& pmc, const Region& R, std::size_t n = 5, std::size_t jobs = 1) {
    if (R.arity() != pmc.arity()) throw Error("region arity does not match the model");
    return sample_points(pmc, R.interior_grid(n), jobs);
}

enum class RefuteResult { Refuted, Consistent };

/// s1 ≺ s2 is refuted by a sample with Pr_s1 ≥ Pr_s2; s1 ≡ s2 by any sample
/// where the two differ.
inline RefuteResult refute_assumption(const SampleTable& t, StateId s1, StateId s2, AssumptionKind kind) {
    Rational margin = t.exact ? Rational(0) : Rational(kFloatRefuteMargin);
    for (std::size_t i = 0; i < t.grid.size(); ++i) {
        Rational d = t.value(s1, i) - t.value(s2, i);
        if (kind == AssumptionKind::Less) {
            if (t.exact ? d >= 0 : d > margin) return RefuteResult::Refuted;
        } else {
            if (t.exact ? d != 0 : abs(d) > margin) return RefuteResult::Refuted;
        }
    }
    return RefuteResult::Consistent;
}

struct StateBounds {
    std::vector<double> lo;
    std::vector<double> hi;
    double epsilon = 1e-8;
    /// Exact value of states whose probability does not depend on the parameters.
    std::vector<std::optional<Rational>> exact;
};

/// Interval bounds via the relaxation in which every state picks its own
/// parameter values among the interval endpoints. Minimising and maximising
/// value iteration, widened by epsilon.
inline StateBounds region_bounds(const Pmc& pmc, const Region& R, double epsilon = 1e-8, std::size_t max_iterations = 1'000'000) {
    if (!is_simple(pmc)) throw ModelError(ModelError::Kind::NotSupported, "interval bounds need a simple model");
    if (R.arity() != pmc.arity()) throw Error("region arity does not match the model");
    std::size_t n = pmc.num_states();
    auto zero = prob0_states(pmc);
    std::vector<bool> is_target(n, false);
    for (StateId t : pmc.target) is_target[t] = true;

    // Per state: the parameters it uses and all endpoint combinations.
    struct Choice {
        std::vector<std::pair<StateId, double>> edges;
    };
    std::vector<std::vector<Choice>> choices(n);
    std::vector<bool> parametric(n, false);
    for (StateId s = 0; s < n; ++s) {
        if (is_target[s] || zero[s]) continue;
        std::vector<std::size_t> vars;
        for (const auto& t : pmc.rows[s])
            for (std::size_t v = 0; v < pmc.arity(); ++v)
                if (t.f.depends_on(v) && std::find(vars.begin(), vars.end(), v) == vars.end()) vars.push_back(v);
        parametric[s] = !vars.empty();
        for (std::size_t mask = 0; mask < (std::size_t{1} << vars.size()); ++mask) {
            Instantiation u = R.lower_corner();
            for (std::size_t b = 0; b < vars.size(); ++b)
                u[vars[b]] = (mask >> b) & 1 ? R[vars[b]].hi : R[vars[b]].lo;
            Choice c;
            for (const auto& t : pmc.rows[s]) c.edges.push_back({t.to, t.f.evaluate(u).get_d()});
            choices[s].push_back(std::move(c));
        }
    }

    auto iterate = [&](bool maximise) {
        std::vector<double> x(n, 0.0);
        for (StateId s = 0; s < n; ++s) x[s] = is_target[s] ? 1.0 : zero[s] ? 0.0 : (maximise ? 1.0 : 0.0);
        for (std::size_t it = 0; it < max_iterations; ++it) {
            double delta = 0.0;
            for (StateId s = 0; s < n; ++s) {
                if (choices[s].empty()) continue;
                double best = maximise ? 0.0 : 1.0;
                for (const auto& c : choices[s]) {
                    double v = 0.0;
                    for (const auto& [t, p] : c.edges) v += p * x[t];
                    best = maximise ? std::max(best, v) : std::min(best, v);
                }
                delta = std::max(delta, std::abs(best - x[s]));
                x[s] = best;
            }
            if (delta < epsilon) return x;
        }
        throw Error("interval value iteration did not converge");
    };
    StateBounds b;
    b.epsilon = epsilon;
    b.lo = iterate(false);
    b.hi = iterate(true);
    for (StateId s = 0; s < n; ++s) {
        b.lo[s] = std::clamp(b.lo[s] - epsilon, 0.0, 1.0);
        b.hi[s] = std::clamp(b.hi[s] + epsilon, 0.0, 1.0);
    }

    // States that cannot reach a parametric state have parameter-free values.
    std::vector<bool> param_seed(n, false);
    for (StateId s = 0; s < n; ++s) param_seed[s] = parametric[s];
    auto reaches_param = detail::backward_reach(pmc, param_seed, std::vector<bool>(n, false));
    b.exact.assign(n, std::nullopt);
    auto values = reachability(pmc, R.lower_corner());
    for (StateId s = 0; s < n; ++s) {
        if (reaches_param[s]) continue;
        b.exact[s] = values[s];
        b.lo[s] = b.hi[s] = values[s].get_d();
    }
    return b;
}

enum class ProveResult { Proven, Inconclusive };

/// s1 ≺ s2 holds on the whole region if b_s1 ≤ a_s2; the epsilon widening keeps this strict.
inline ProveResult prove_assumption(const StateBounds& b, StateId s1, StateId s2, AssumptionKind kind = AssumptionKind::Less) {
    if (b.exact[s1] && b.exact[s2]) {
        bool ok = kind == AssumptionKind::Less ? *b.exact[s1] < *b.exact[s2] : *b.exact[s1] == *b.exact[s2];
        return ok ? ProveResult::Proven : ProveResult::Inconclusive;
    }
    if (kind == AssumptionKind::Equal) return ProveResult::Inconclusive;
    return b.hi[s1] <= b.lo[s2] ? ProveResult::Proven : ProveResult::Inconclusive;
}

namespace detail {

inline std::string smt_number(const Rational& r) {
    if (r < 0) return "(- " + smt_number(-r) + ")";
    mpz_class den = r.get_den();
    while (den % 2 == 0) den /= 2;
    while (den % 5 == 0) den /= 5;
    if (den == 1) {
        std::string s = to_decimal_string(r);
        if (s.find('.') == std::string::npos) s += ".0";
        return s;
    }
    return "(/ " + r.get_num().get_str() + ".0 " + r.get_den().get_str() + ".0)";
}

inline std::string smt_polynomial(const Polynomial& p, const std::vector<std::string>& names) {
    if (p.is_zero()) return "0.0";
    std::vector<std::string> terms;
    for (const auto& [e, c] : p.sorted_terms()) {
        std::vector<std::string> factors;
        for (std::size_t v = 0; v < e.size(); ++v)
            for (std::uint32_t k = 0; k < e[v]; ++k) factors.push_back(names[v]);
        Rational mag = abs(c);
        std::string mono;
        if (factors.empty()) {
            mono = smt_number(mag);
        } else {
            if (mag != 1) factors.insert(factors.begin(), smt_number(mag));
            if (factors.size() == 1) {
                mono = factors[0];
            } else {
                mono = "(*";
                for (const auto& f : factors) mono += " " + f;
                mono += ")";
            }
        }
        terms.push_back(c < 0 ? "(- " + mono + ")" : mono);
    }
    if (terms.size() == 1) return terms[0];
    std::string out = "(+";
    for (const auto& t : terms) out += " " + t;
    return out + ")";
}

inline std::string smt_function(const RationalFunction& f, const std::vector<std::string>& names) {
    if (f.is_polynomial()) return smt_polynomial(*f.as_polynomial(), names);
    return "(/ " + smt_polynomial(f.num(), names) + " " + smt_polynomial(f.den(), names) + ")";
}

} // namespace detail

/// SMT variable name of a state value.
inline std::string smt_state_var(const Pmc& pmc, StateId s) {
    std::string l = pmc.label(s);
    return "x" + l;
}

/// The negated assumption together with the local equation system around
/// s1 and s2: states within `depth` steps get their defining equation, the
/// states exactly `depth` steps away are only bounded and ordered.
inline std::string export_smt(const Pmc& pmc, const ReachOrder& o, StateId s1, StateId s2, AssumptionKind kind, const Region& R,
                              std::size_t depth) {
    constexpr std::size_t far = std::numeric_limits<std::size_t>::max();
    std::size_t n = pmc.num_states();
    std::vector<std::size_t> dist(n, far);
    std::vector<StateId> frontier{s1, s2};
    dist[s1] = dist[s2] = 0;
    for (std::size_t d = 0; d < depth; ++d) {
        std::vector<StateId> next;
        for (StateId s : frontier)
            for (StateId t : pmc.successors(s))
                if (dist[t] == far) {
                    dist[t] = d + 1;
                    next.push_back(t);
                }
        frontier = std::move(next);
    }
    std::vector<StateId> included;
    for (StateId s = 0; s < n; ++s)
        if (dist[s] != far) included.push_back(s);

    auto var = [&](StateId s) { return smt_state_var(pmc, s); };
    auto fixed = [&](StateId s) -> std::optional<Rational> {
        if (pmc.is_target(s)) return Rational(1);
        if (pmc.rows[s].empty() || pmc.is_absorbing(s)) return Rational(0);
        return std::nullopt;
    };

    std::ostringstream out;
    out << "; assumption " << display_name(pmc, s1) << (kind == AssumptionKind::Less ? " < " : " = ") << display_name(pmc, s2)
        << ", depth " << depth << "\n";
    out << "(set-logic QF_NRA)\n";
    for (const auto& p : pmc.params) out << "(declare-const " << p << " Real)\n";
    for (StateId s : included) out << "(declare-const " << var(s) << " Real)\n";
    for (std::size_t i = 0; i < pmc.arity(); ++i) {
        const auto& iv = R[i];
        out << "(assert (and (" << (iv.open_lo ? "<" : "<=") << " " << detail::smt_number(iv.lo) << " " << pmc.params[i] << ") ("
            << (iv.open_hi ? "<" : "<=") << " " << pmc.params[i] << " " << detail::smt_number(iv.hi) << ")))\n";
    }
    std::vector<StateId> boundary;
    for (StateId s : included) {
        if (auto v = fixed(s)) {
            out << "(assert (= " << var(s) << " " << detail::smt_number(*v) << "))\n";
            continue;
        }
        if (dist[s] < depth) {
            out << "(assert (= " << var(s);
            const auto& row = pmc.rows[s];
            if (row.size() > 1) out << " (+";
            for (const auto& t : row) out << " (* " << detail::smt_function(t.f, pmc.params) << " " << var(t.to) << ")";
            if (row.size() > 1) out << ")";
            out << "))\n";
        } else {
            boundary.push_back(s);
        }
    }
    for (StateId s : boundary) out << "(assert (and (< 0.0 " << var(s) << ") (< " << var(s) << " 1.0)))\n";
    // Order among the boundary states: covering pairs of the restricted relation.
    for (std::size_t i = 0; i < boundary.size(); ++i) {
        for (std::size_t j = 0; j < boundary.size(); ++j) {
            StateId a = boundary[i];
            StateId b = boundary[j];
            if (!o.is_inserted(a) || !o.is_inserted(b)) continue;
            if (i < j && o.equal(a, b)) out << "(assert (= " << var(a) << " " << var(b) << "))\n";
            if (!o.less(a, b)) continue;
            bool covered = true;
            for (StateId c : boundary)
                if (o.is_inserted(c) && o.less(a, c) && o.less(c, b)) covered = false;
            if (covered) out << "(assert (< " << var(a) << " " << var(b) << "))\n";
        }
    }
    if (kind == AssumptionKind::Less) {
        out << "(assert (>= " << var(s1) << " " << var(s2) << "))\n";
    } else {
        out << "(assert (distinct " << var(s1) << " " << var(s2) << "))\n";
    }
    out << "(check-sat)\n";
    return out.str();
}

/// Solver verdicts for exported obligations, read from lines
/// `assumption <s1> <s2> unsat|sat|unknown` (states named as in model files).
struct IngestedResults {
    std::map<std::pair<std::string, std::string>, std::string> status;

    std::optional<std::string> lookup(const Pmc& pmc, StateId s1, StateId s2) const {
        auto it = status.find({pmc.label(s1), pmc.label(s2)});
        if (it == status.end()) return std::nullopt;
        return it->second;
    }
};

inline IngestedResults parse_results(std::string_view text) {
    IngestedResults r;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        auto toks = detail::split_ws(line);
        if (toks.empty()) continue;
        if (toks.size() != 4 || toks[0] != "assumption")
            throw ParseError("expected 'assumption <s1> <s2> unsat|sat|unknown'", line_no, 1);
        if (toks[3] != "unsat" && toks[3] != "sat" && toks[3] != "unknown")
            throw ParseError("unknown solver verdict '" + toks[3] + "'", line_no, 1);
        r.status[{toks[1], toks[2]}] = toks[3];
    }
    return r;
}

struct DischargeConfig {
    DischargeMode mode = DischargeMode::SamplingBounds;
    std::size_t grid = 5;
    std::size_t jobs = 1;
    double epsilon = 1e-8;
    std::size_t smt_depth = 1;
    std::filesystem::path smt_dir = ".";
    std::optional<IngestedResults> ingested;
};

/// Pipeline: sampling refutation, interval proof, ingested solver results,
/// then (optionally) SMT export with an Unknown verdict.
class DischargeContext {
public:
    DischargeContext(const Pmc& pmc, const Region& R, DischargeConfig cfg) : pmc_(pmc), region_(R), cfg_(std::move(cfg)) {
        if (cfg_.mode == DischargeMode::Off) return;
        table_ = sample_table(pmc_, region_, cfg_.grid, cfg_.jobs);
        if (cfg_.mode != DischargeMode::Sampling) {
            try {
                bounds_ = region_bounds(pmc_, region_, cfg_.epsilon);
            } catch (const ModelError& e) {
                if (e.kind() != ModelError::Kind::NotSupported) throw;
                bounds_skipped_ = true;
            }
        }
    }

    DischargeResult operator()(StateId s1, StateId s2, AssumptionKind kind, const ReachOrder& o) {
        if (cfg_.mode == DischargeMode::Off) return DischargeResult::Unknown;
        if (s1 == s2) return kind == AssumptionKind::Equal ? DischargeResult::Proven : DischargeResult::Refuted;
        if (table_ && refute_assumption(*table_, s1, s2, kind) == RefuteResult::Refuted) return DischargeResult::Refuted;
        if (bounds_ && prove_assumption(*bounds_, s1, s2, kind) == ProveResult::Proven) return DischargeResult::Proven;
        if (cfg_.ingested && kind == AssumptionKind::Less) {
            auto st = cfg_.ingested->lookup(pmc_, s1, s2);
            if (st && *st == "unsat") return DischargeResult::Proven;
        }
        if (cfg_.mode == DischargeMode::SamplingBoundsSmt) {
            std::string name = "assumption_" + std::to_string(exported_.size()) + "_" + pmc_.label(s1) +
                               (kind == AssumptionKind::Less ? "_lt_" : "_eq_") + pmc_.label(s2) + ".smt2";
            auto path = cfg_.smt_dir / name;
            std::ofstream f(path);
            if (!f) throw Error("cannot write " + path.string());
            f << export_smt(pmc_, o, s1, s2, kind, region_, cfg_.smt_depth);
            exported_.push_back(path);
        }
        return DischargeResult::Unknown;
    }

    Discharger as_discharger() {
        return [this](StateId a, StateId b, AssumptionKind k, const ReachOrder& o) { return (*this)(a, b, k, o); };
    }

    const std::optional<SampleTable>& table() const noexcept { return table_; }
    const std::optional<StateBounds>& bounds() const noexcept { return bounds_; }
    bool bounds_skipped() const noexcept { return bounds_skipped_; }
    const std::vector<std::filesystem::path>& exported() const noexcept { return exported_; }

private:
    const Pmc& pmc_;
    Region region_;
    DischargeConfig cfg_;
    std::optional<SampleTable> table_;
    std::optional<StateBounds> bounds_;
    bool bounds_skipped_ = false;
    std::vector<std::filesystem::path> exported_;
};

} // namespace pmcmono
