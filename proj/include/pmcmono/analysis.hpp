#pragma once

// The monotonicity-checking pipeline: validation, graph preservation,
// collapsing, cycle handling, order construction and verdicts.

#include <chrono>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pmcmono/builder.hpp"
#include "pmcmono/discharge.hpp"
#include "pmcmono/elim.hpp"
#include "pmcmono/error.hpp"
#include "pmcmono/graph.hpp"
#include "pmcmono/localmon.hpp"
#include "pmcmono/model.hpp"
#include "pmcmono/region.hpp"
#include "pmcmono/synth.hpp"

namespace pmcmono {

struct AnalysisConfig {
    BuilderConfig builder;
    DischargeConfig discharge;
    bool assume_graph_preserving = false;
    bool disprove = false;          ///< sample Unknown parameters for a non-monotonicity witness
    std::size_t disprove_samples = 9;
    bool oracle = false;            ///< check verdicts against the solution function's derivative
    std::size_t oracle_points = 50; ///< roughly, spread over all dimensions
    std::size_t max_scc_entries = 4;
    std::size_t term_cap = kDefaultTermCap;
};

struct OracleCheck {
    std::string param;
    std::size_t points = 0;
    std::size_t violations = 0;
};

struct AnalysisReport {
    std::size_t states = 0;
    std::size_t transitions = 0;
    std::vector<std::string> params;
    CollapseResult collapse;
    std::string cycle_handling = "none"; ///< none | scc-elimination | cycle-breaking
    std::string cycle_note;
    Pmc analysed;
    BuildResult built;
    VerdictTable verdicts;
    std::vector<std::filesystem::path> smt_files;
    bool bounds_skipped = false;
    std::optional<std::vector<OracleCheck>> oracle;
    std::vector<std::pair<std::string, double>> timings; ///< seconds per phase
};

namespace detail {

class PhaseTimer {
public:
    explicit PhaseTimer(std::vector<std::pair<std::string, double>>& out) : out_(out), last_(std::chrono::steady_clock::now()) {}
    void lap(std::string name) {
        auto now = std::chrono::steady_clock::now();
        out_.emplace_back(std::move(name), std::chrono::duration<double>(now - last_).count());
        last_ = now;
    }

private:
    std::vector<std::pair<std::string, double>>& out_;
    std::chrono::steady_clock::time_point last_;
};

} // namespace detail

/// Fails unless every transition is provably positive on R (or the caller
/// vouches for it).
inline void require_graph_preserving(const Pmc& pmc, const Region& R, bool assume) {
    auto gp = check_graph_preserving(pmc, R);
    if (gp.status == GraphPreservation::Violated)
        throw ModelError(ModelError::Kind::GraphPreservationViolated, "region is not graph-preserving: " + gp.describe(pmc));
    if (gp.status == GraphPreservation::Unknown && !assume)
        throw ModelError(ModelError::Kind::GraphPreservationUnknown,
                         "region may not be graph-preserving: " + gp.describe(pmc) + " (use --assume-graph-preserving to proceed)");
}

/// Oracle: sign of d sol_init / dp on an inclusive grid, exactly.
inline std::vector<OracleCheck> oracle_check(const Pmc& pmc, const Region& R, const VerdictTable& v, std::size_t points,
                                             std::size_t term_cap = kDefaultTermCap) {
    std::vector<OracleCheck> out;
    auto sol = solution_function(pmc, pmc.initial, term_cap);
    std::size_t d = std::max<std::size_t>(pmc.arity(), 1);
    auto per_dim = static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(points), 1.0 / static_cast<double>(d)) - 1e-9));
    auto grid = R.inclusive_grid(std::max<std::size_t>(per_dim, 2));
    for (std::size_t p = 0; p < pmc.arity(); ++p) {
        OracleCheck c{pmc.params[p], 0, 0};
        Verdict verdict = v[p].verdict;
        if (verdict == Verdict::Increasing || verdict == Verdict::Decreasing || verdict == Verdict::Constant) {
            Polynomial num = sol.derivative_numerator(p);
            for (const auto& u : grid) {
                int sg = sign(num.evaluate(u));
                ++c.points;
                bool bad = (verdict == Verdict::Increasing && sg < 0) || (verdict == Verdict::Decreasing && sg > 0) ||
                           (verdict == Verdict::Constant && sg != 0);
                if (bad) ++c.violations;
            }
        }
        out.push_back(c);
    }
    return out;
}

/// A cycle other than a self-loop on an absorbing state.
inline bool has_transient_cycle(const Pmc& pmc) {
    auto d = sccs(pmc);
    for (std::size_t c = 0; c < d.size(); ++c)
        if (d.is_cyclic(c) && !(d.members[c].size() == 1 && pmc.is_absorbing(d.members[c][0]))) return true;
    return false;
}

/// True if SCC elimination is cheap enough to try on this collapsed model.
inline bool scc_elimination_applicable(const Pmc& pmc, std::size_t max_entries) {
    auto d = sccs(pmc);
    for (std::size_t c = 0; c < d.size(); ++c)
        if (d.is_cyclic(c) && d.entries[c].size() > max_entries) return false;
    return true;
}

inline AnalysisReport analyse(const Pmc& input, const Region& R, const AnalysisConfig& cfg) {
    AnalysisReport rep;
    detail::PhaseTimer timer(rep.timings);
    if (R.arity() != input.arity()) throw Error("region arity does not match the model");
    rep.states = input.num_states();
    rep.transitions = input.num_transitions();
    rep.params = input.params;

    validate(input);
    require_graph_preserving(input, R, cfg.assume_graph_preserving);
    timer.lap("validate");

    rep.collapse = prob01_collapse_mapped(input);
    Pmc pmc = rep.collapse.pmc;
    timer.lap("collapse");

    if (has_transient_cycle(pmc)) {
        rep.cycle_handling = "cycle-breaking";
        if (cfg.builder.cycle_strategy == CycleStrategy::SccEliminationFirst) {
            if (scc_elimination_applicable(pmc, cfg.max_scc_entries)) {
                try {
                    pmc = scc_eliminate(pmc, cfg.term_cap);
                    rep.cycle_handling = "scc-elimination";
                } catch (const SizeError& e) {
                    rep.cycle_note = std::string("SCC elimination abandoned: ") + e.what();
                }
            } else {
                rep.cycle_note = "an SCC has more than " + std::to_string(cfg.max_scc_entries) + " entry states";
            }
        }
    }
    timer.lap("cycles");

    DischargeContext discharge(pmc, R, cfg.discharge);
    timer.lap("discharge-setup");
    rep.built = build(pmc, cfg.builder, discharge.as_discharger());
    rep.smt_files = discharge.exported();
    rep.bounds_skipped = discharge.bounds_skipped();
    timer.lap("orders");

    rep.verdicts = global_verdicts(pmc, R, rep.built);
    timer.lap("verdicts");

    if (cfg.disprove) {
        for (std::size_t p = 0; p < pmc.arity(); ++p) {
            auto& pv = rep.verdicts.params[p];
            if (pv.verdict != Verdict::Unknown) continue;
            if (auto w = disprove_monotonicity(pmc, R, p, cfg.disprove_samples)) {
                pv.verdict = Verdict::NotMonotone;
                pv.witness = std::move(w);
            }
        }
        timer.lap("disprove");
    }
    if (cfg.oracle) {
        rep.oracle = oracle_check(pmc, R, rep.verdicts, cfg.oracle_points, cfg.term_cap);
        timer.lap("oracle");
    }
    rep.analysed = std::move(pmc);
    return rep;
}

} // namespace pmcmono
