#pragma once

// Command-line front end. `run` is the whole program minus main(), so tests
// can drive it with string arguments and capture both streams.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pmcmono/analysis.hpp"
#include "pmcmono/builder.hpp"
#include "pmcmono/discharge.hpp"
#include "pmcmono/elim.hpp"
#include "pmcmono/error.hpp"
#include "pmcmono/graph.hpp"
#include "pmcmono/model.hpp"
#include "pmcmono/order.hpp"
#include "pmcmono/region.hpp"
#include "pmcmono/synth.hpp"

namespace pmcmono::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kModelError = 2, kAborted = 3 };

class UsageError : public Error {
public:
    using Error::Error;
};

namespace detail {

using Json = nlohmann::ordered_json;

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

struct Loaded {
    std::string path;
    Pmc pmc;
};

inline Loaded load(const std::string& path) {
    std::string text = read_file(path);
    try {
        return {path, parse_model(text)};
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what(), 0, 0);
    }
}

inline DischargeMode parse_discharge(const std::string& s) {
    if (s == "off") return DischargeMode::Off;
    if (s == "sampling") return DischargeMode::Sampling;
    if (s == "sampling+bounds") return DischargeMode::SamplingBounds;
    if (s == "sampling+bounds+smt-export") return DischargeMode::SamplingBoundsSmt;
    throw UsageError("unknown discharge mode '" + s + "'");
}

inline CycleStrategy parse_cycle_strategy(const std::string& s) {
    if (s == "scc-elimination-first") return CycleStrategy::SccEliminationFirst;
    if (s == "cycle-breaking-only") return CycleStrategy::CycleBreakingOnly;
    throw UsageError("unknown cycle strategy '" + s + "'");
}

inline Rational parse_number(const std::string& s, const char* what) {
    auto r = parse_rational(s);
    if (!r) throw UsageError(std::string("malformed ") + what + " '" + s + "'");
    return *r;
}

inline std::vector<std::string> instantiation_strings(const Instantiation& u) {
    std::vector<std::string> out;
    for (const auto& x : u) out.push_back(x.get_str());
    return out;
}

/// Flags shared by `check` and `partition`.
struct AnalysisFlags {
    std::string model;
    std::string region;
    std::size_t grid = 5;
    std::size_t max_orders = 729;
    std::string discharge = "sampling+bounds";
    std::string cycle_strategy = "scc-elimination-first";
    bool oracle = false;
    std::size_t jobs = 1;
    bool assume_gp = false;
    bool disprove = false;
    std::size_t depth = 1;
    std::string smt_dir = ".";
    std::string results;

    void attach(CLI::App* app) {
        app->add_option("model", model, "model file")->required();
        app->add_option("--region", region, "parameter region, e.g. \"p in [0.1,0.9]\"")->required();
        app->add_option("--grid", grid, "sampling points per dimension")->check(CLI::Range(2, 1000));
        app->add_option("--max-orders", max_orders, "branching budget")->check(CLI::PositiveNumber);
        app->add_option("--discharge", discharge, "off | sampling | sampling+bounds | sampling+bounds+smt-export");
        app->add_option("--cycle-strategy", cycle_strategy, "scc-elimination-first | cycle-breaking-only");
        app->add_flag("--oracle", oracle, "check verdicts against solution-function derivatives");
        app->add_option("--jobs", jobs, "worker threads for sampling")->check(CLI::PositiveNumber);
        app->add_flag("--assume-graph-preserving", assume_gp, "proceed when positivity of a transition cannot be decided");
        app->add_flag("--disprove", disprove, "look for non-monotonicity witnesses for undecided parameters");
        app->add_option("--depth", depth, "SMT export depth");
        app->add_option("--smt-dir", smt_dir, "directory for exported SMT obligations");
        app->add_option("--results", results, "solver verdicts to re-ingest");
    }

    AnalysisConfig config() const {
        AnalysisConfig cfg;
        cfg.builder.max_orders = max_orders;
        cfg.builder.discharge_mode = parse_discharge(discharge);
        cfg.builder.cycle_strategy = parse_cycle_strategy(cycle_strategy);
        cfg.builder.sample_grid = grid;
        cfg.discharge.mode = cfg.builder.discharge_mode;
        cfg.discharge.grid = grid;
        cfg.discharge.jobs = jobs;
        cfg.discharge.smt_depth = depth;
        cfg.discharge.smt_dir = smt_dir;
        if (!results.empty()) cfg.discharge.ingested = parse_results(read_file(results));
        cfg.assume_graph_preserving = assume_gp;
        cfg.disprove = disprove;
        cfg.oracle = oracle;
        return cfg;
    }
};

inline Json report_json(const AnalysisReport& r, const Region& R, bool timings) {
    Json j;
    j["model"] = {{"states", r.states}, {"transitions", r.transitions}, {"parameters", r.params}};
    j["region"] = R.to_string(r.params);
    j["preprocessing"] = {{"prob0", r.collapse.prob0},
                          {"prob1", r.collapse.prob1},
                          {"unreachable", r.collapse.dropped},
                          {"cycles", r.cycle_handling},
                          {"states", r.analysed.num_states()},
                          {"transitions", r.analysed.num_transitions()}};
    if (!r.cycle_note.empty()) j["preprocessing"]["note"] = r.cycle_note;
    Json mono = Json::object();
    for (const auto& v : r.verdicts.params) mono[v.param] = to_string(v.verdict);
    j["monotonicity"] = mono;
    Json verdicts = Json::array();
    for (const auto& v : r.verdicts.params) {
        Json e{{"param", v.param}, {"verdict", to_string(v.verdict)}, {"incr_possible", v.incr_possible}, {"decr_possible", v.decr_possible}};
        if (v.witness) {
            Json pts = Json::array();
            for (std::size_t i = 0; i < v.witness->points.size(); ++i)
                pts.push_back({{"point", instantiation_strings(v.witness->points[i])}, {"probability", v.witness->values[i].get_str()}});
            e["witness"] = pts;
        }
        verdicts.push_back(e);
    }
    j["verdicts"] = verdicts;
    j["orders"] = r.built.orders.size();
    j["budget_exceeded"] = r.built.budget_exceeded;
    j["assumptions"] = {{"branch_points", r.built.branch_points},
                        {"made", r.built.made},
                        {"proven", r.built.proven},
                        {"refuted", r.built.refuted},
                        {"kept", r.built.kept},
                        {"contradictions", r.built.contradictions},
                        {"in_orders", r.verdicts.assumptions}};
    Json log = Json::array();
    for (const auto& e : r.built.log)
        log.push_back(display_name(r.analysed, e.first) + (e.kind == AssumptionKind::Less ? " < " : " = ") +
                      display_name(r.analysed, e.second) + ": " + to_string(e.result));
    j["assumption_log"] = log;
    Json orders = Json::array();
    for (const auto& o : r.built.orders) orders.push_back(o.assumptions.to_string(r.analysed));
    j["order_assumptions"] = orders;
    if (!r.verdicts.note.empty()) j["note"] = r.verdicts.note;
    if (r.bounds_skipped) j["bounds"] = "skipped: model is not simple";
    if (!r.smt_files.empty()) {
        Json files = Json::array();
        for (const auto& f : r.smt_files) files.push_back(f.string());
        j["smt_files"] = files;
    }
    if (r.oracle) {
        Json o = Json::array();
        for (const auto& c : *r.oracle) o.push_back({{"param", c.param}, {"points", c.points}, {"violations", c.violations}});
        j["oracle"] = o;
    }
    if (timings) {
        Json t = Json::object();
        for (const auto& [k, v] : r.timings) t[k] = v;
        j["timings"] = t;
    }
    return j;
}

inline int cmd_check(const AnalysisFlags& f, const std::string& dot, bool timings, std::ostream& out, std::ostream& err) {
    auto m = load(f.model);
    Region R = parse_region(f.region, m.pmc.params);
    auto rep = analyse(m.pmc, R, f.config());
    out << report_json(rep, R, timings).dump(2) << "\n";
    if (!dot.empty()) {
        std::ofstream d(dot);
        if (!d) throw UsageError("cannot write " + dot);
        for (const auto& o : rep.built.orders) {
            d << "// assumptions: " << o.assumptions.to_string(rep.analysed) << "\n";
            d << export_dot(o.order, rep.analysed);
        }
    }
    if (rep.oracle)
        for (const auto& c : *rep.oracle)
            if (c.violations > 0) err << "warning: oracle found " << c.violations << " violations for " << c.param << "\n";
    return rep.built.budget_exceeded ? kAborted : kOk;
}

inline int cmd_solution(const std::string& path, const std::vector<std::string>& states, std::ostream& out) {
    auto m = load(path);
    validate(m.pmc);
    std::vector<StateId> wanted;
    if (states.empty()) wanted.push_back(m.pmc.initial);
    for (const auto& s : states) {
        auto id = parse_rational(s);
        if (!id || id->get_den() != 1 || *id < 0 || *id >= m.pmc.num_states()) throw UsageError("no such state '" + s + "'");
        wanted.push_back(id->get_num().get_ui());
    }
    std::optional<CollapseResult> c;
    try {
        c = prob01_collapse_mapped(m.pmc);
    } catch (const ModelError& e) {
        if (e.kind() != ModelError::Kind::InitialStateIsBottom && e.kind() != ModelError::Kind::InitialStateIsTop) throw;
        bool top = e.kind() == ModelError::Kind::InitialStateIsTop;
        for (StateId s : wanted)
            out << (states.empty() ? "" : m.pmc.label(s) + ": ") << (s == m.pmc.initial ? (top ? "1" : "0") : "?") << "\n";
        if (wanted.size() > 1 || wanted[0] != m.pmc.initial) throw Error("solution functions of other states need a non-trivial initial state");
        return kOk;
    }
    for (StateId s : wanted) {
        if (!c->old_to_new[s]) throw UsageError("state " + m.pmc.label(s) + " is not reachable from the initial state");
        out << (states.empty() ? "" : m.pmc.label(s) + ": ") << solution_function(c->pmc, *c->old_to_new[s]).to_string(m.pmc.params)
            << "\n";
    }
    return kOk;
}

inline int cmd_sample(const std::string& path, const std::string& region, std::size_t grid, std::size_t jobs, bool assume_gp,
                      std::ostream& out) {
    auto m = load(path);
    validate(m.pmc);
    Region R = parse_region(region, m.pmc.params);
    require_graph_preserving(m.pmc, R, assume_gp);
    auto t = sample_table(m.pmc, R, grid, jobs);
    std::vector<std::string> header = m.pmc.params;
    for (StateId s = 0; s < m.pmc.num_states(); ++s) header.push_back(m.pmc.label(s));
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << "\n";
    for (std::size_t i = 0; i < t.grid.size(); ++i) {
        bool first = true;
        for (const auto& x : t.grid[i]) {
            out << (first ? "" : ",") << x.get_str();
            first = false;
        }
        for (StateId s = 0; s < m.pmc.num_states(); ++s) out << (first ? "" : ",") << t.values[i][s].get_str(), first = false;
        out << "\n";
    }
    return kOk;
}

inline int cmd_eliminate(const std::string& path, const std::vector<std::string>& states, std::ostream& out) {
    auto m = load(path);
    validate(m.pmc);
    if (!states.empty()) {
        std::vector<StateId> order;
        for (const auto& s : states) {
            auto id = parse_rational(s);
            if (!id || id->get_den() != 1 || *id < 0 || *id >= m.pmc.num_states()) throw UsageError("no such state '" + s + "'");
            order.push_back(id->get_num().get_ui());
        }
        out << serialize_model(eliminate_states(m.pmc, order));
        return kOk;
    }
    out << serialize_model(scc_eliminate(prob01_collapse(m.pmc)));
    return kOk;
}

inline int cmd_partition(const AnalysisFlags& f, const std::string& threshold, const std::string& direction,
                         const std::string& coverage, const std::string& method, std::ostream& out, std::ostream& err) {
    auto m = load(f.model);
    Region R = parse_region(f.region, m.pmc.params);
    if (direction != ">=" && direction != "<=") throw UsageError("direction must be '>=' or '<='");
    Rational lambda = parse_number(threshold, "threshold");
    if (lambda < 0 || lambda > 1) throw UsageError("--threshold must lie in [0,1]");
    Spec spec(lambda, direction == ">=" ? Direction::AtLeast : Direction::AtMost);
    Rational target = parse_number(coverage, "coverage");
    PartitionResult res;
    if (method == "mono") {
        auto rep = analyse(m.pmc, R, f.config());
        res = partition(m.pmc, R, spec, target, PartitionMethod::Mono, &rep.verdicts);
    } else if (method == "bounds") {
        validate(m.pmc);
        require_graph_preserving(m.pmc, R, f.assume_gp);
        res = partition(m.pmc, R, spec, target, PartitionMethod::Bounds);
    } else {
        throw UsageError("method must be 'mono' or 'bounds'");
    }
    out << res.csv();
    err << "coverage " << res.coverage.get_d() << " with " << res.calls() << " calls"
        << (res.target_reached ? "" : " (target not reached within the volume floor)") << "\n";
    return kOk;
}

inline int cmd_export_smt(const std::string& path, const std::string& region, const std::string& assumption, std::size_t depth,
                          const std::string& output, std::ostream& out) {
    auto m = load(path);
    validate(m.pmc);
    Region R = parse_region(region, m.pmc.params);
    auto toks = pmcmono::detail::split_ws(assumption);
    if (toks.size() != 3 || (toks[1] != "<" && toks[1] != "="))
        throw UsageError("assumption must read '<s1> < <s2>' or '<s1> = <s2>'");
    auto c = prob01_collapse_mapped(m.pmc);
    auto state = [&](const std::string& s) {
        auto id = parse_rational(s);
        if (!id || id->get_den() != 1 || *id < 0 || *id >= m.pmc.num_states()) throw UsageError("no such state '" + s + "'");
        auto mapped = c.old_to_new[id->get_num().get_ui()];
        if (!mapped) throw UsageError("state " + s + " is unreachable");
        return *mapped;
    };
    StateId s1 = state(toks[0]);
    StateId s2 = state(toks[2]);
    auto order = assumption_free_order(c.pmc);
    std::string smt = export_smt(c.pmc, order, s1, s2, toks[1] == "<" ? AssumptionKind::Less : AssumptionKind::Equal, R, depth);
    if (output.empty() || output == "-") {
        out << smt;
    } else {
        std::ofstream f(output);
        if (!f) throw UsageError("cannot write " + output);
        f << smt;
    }
    return kOk;
}

} // namespace detail

/// Runs the tool; `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Monotonicity checking for parametric Markov chains", "pmcmono"};
    app.require_subcommand(1);

    detail::AnalysisFlags check_flags;
    std::string dot;
    bool timings = false;
    auto* check = app.add_subcommand("check", "decide monotonicity of the reachability probability per parameter");
    check_flags.attach(check);
    check->add_option("--dot", dot, "write the reachability orders as DOT");
    check->add_flag("--timings", timings, "include per-phase timings in the report");

    std::string model;
    std::vector<std::string> states;
    auto* solution = app.add_subcommand("solution", "print the closed-form solution function");
    solution->add_option("model", model, "model file")->required();
    solution->add_option("--state", states, "state ids (default: the initial state)");

    std::string region;
    std::size_t grid = 5;
    std::size_t jobs = 1;
    bool assume_gp = false;
    auto* sample = app.add_subcommand("sample", "exact reachability probabilities on a grid (CSV)");
    sample->add_option("model", model, "model file")->required();
    sample->add_option("--region", region, "parameter region")->required();
    sample->add_option("--grid", grid, "points per dimension")->check(CLI::Range(1, 1000));
    sample->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    sample->add_flag("--assume-graph-preserving", assume_gp, "proceed when positivity cannot be decided");

    auto* eliminate = app.add_subcommand("eliminate", "eliminate cycles (or the given states) and print the model");
    eliminate->add_option("model", model, "model file")->required();
    eliminate->add_option("--states", states, "eliminate exactly these states, in order");

    detail::AnalysisFlags part_flags;
    std::string threshold;
    std::string direction = ">=";
    std::string coverage = "0.95";
    std::string method = "mono";
    auto* part = app.add_subcommand("partition", "split the region into satisfying and violating parts (CSV)");
    part_flags.attach(part);
    part->add_option("--threshold", threshold, "probability threshold")->required();
    part->add_option("--direction", direction, ">= or <=");
    part->add_option("--coverage", coverage, "target coverage fraction");
    part->add_option("--method", method, "mono | bounds");

    std::string assumption;
    std::size_t depth = 1;
    std::string output;
    auto* smt = app.add_subcommand("export-smt", "write the SMT obligation for one assumption");
    smt->add_option("model", model, "model file")->required();
    smt->add_option("--region", region, "parameter region")->required();
    smt->add_option("--assume", assumption, "e.g. \"2 < 3\"")->required();
    smt->add_option("--depth", depth, "unrolling depth");
    smt->add_option("-o,--output", output, "output file (default stdout)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    }

    try {
        if (check->parsed()) return detail::cmd_check(check_flags, dot, timings, out, err);
        if (solution->parsed()) return detail::cmd_solution(model, states, out);
        if (sample->parsed()) return detail::cmd_sample(model, region, grid, jobs, assume_gp, out);
        if (eliminate->parsed()) return detail::cmd_eliminate(model, states, out);
        if (part->parsed()) return detail::cmd_partition(part_flags, threshold, direction, coverage, method, out, err);
        if (smt->parsed()) return detail::cmd_export_smt(model, region, assumption, depth, output, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const SizeError& e) {
        err << "error: " << e.what() << "\n";
        return kAborted;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kModelError;
    } catch (const ModelError& e) {
        err << "error: " << e.what() << "\n";
        return kModelError;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kModelError;
    }
    return kUsage;
}

} // namespace pmcmono::cli
