#include "ivlog/cli.hpp"

#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "ivlog/parser.hpp"
#include "ivlog/scenario.hpp"

namespace ivlog {
namespace {

std::string read_file_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int count_resets(const std::vector<TraceEntry>& trace) {
    int n = 0;
    for (const auto& e : trace)
        if (e.cause == "inconsistency-reset") ++n;
    return n;
}

void print_summary(const ScenarioSpec& spec, const RunResult& result, std::ostream& err) {
    const Engine& engine = *result.engine;
    err << "scenario '" << spec.name << "': " << engine.trace().size() << " trace rows over "
        << engine.fpo_count() << " fixpoint operations, " << result.ticks_run << " ticks";
    if (result.stopped) err << " (stopped early)";
    err << "\n";
    int resets = count_resets(engine.trace());
    if (resets) err << "inconsistency resets: " << resets << "\n";
    for (const auto& w : engine.warnings()) err << "warning: " << w << "\n";
    for (const auto& fq : spec.final_queries) {
        int at = fq.at_tick >= 0 ? fq.at_tick : engine.current_time();
        err << "query " << fq.text << " at t=" << at << ": "
            << (engine.query(fq.query, at) ? "true" : "false") << "\n";
    }
}

// Walks cause ids backwards from an atom's latest update and prints the
// supporting chain of trace entries.
void explain_atom(const std::vector<TraceEntry>& trace,
                  const std::map<std::string, const Rule*>& rules_by_id, const GroundAtom& atom,
                  int at_time, size_t before_index, int depth, std::set<std::string>& visited,
                  std::ostream& out) {
    std::string indent(static_cast<size_t>(depth) * 2, ' ');
    long found = -1;
    for (long i = static_cast<long>(std::min(before_index, trace.size())) - 1; i >= 0; --i) {
        const auto& e = trace[static_cast<size_t>(i)];
        if (e.time <= at_time && e.atom == atom) {
            found = i;
            break;
        }
    }
    if (found < 0) {
        out << indent << atom.predicate << "(" << atom.entity()
            << "): open-world unknown (never updated)\n";
        return;
    }
    const TraceEntry& e = trace[static_cast<size_t>(found)];
    out << indent << "[fpo " << e.fpo << ", t=" << e.time << "] " << e.atom.predicate << "("
        << e.atom.entity() << ") " << e.old_bound.to_string() << " -> "
        << e.new_bound.to_string() << "  cause: " << e.cause << "  source: " << e.source << "\n";
    if (!visited.insert(e.atom.predicate + "(" + e.atom.entity() + ")").second) return;
    auto rit = rules_by_id.find(e.cause);
    if (rit == rules_by_id.end()) return;
    for (const auto& lit : rit->second->body) {
        // Body atoms are matched by predicate; groundings are not stored
        // in the trace.
        long support = -1;
        for (long i = found - 1; i >= 0; --i) {
            const auto& s = trace[static_cast<size_t>(i)];
            if (s.atom.predicate == lit.atom.predicate && s.time <= e.time) {
                support = i;
                break;
            }
        }
        if (support >= 0) {
            explain_atom(trace, rules_by_id, trace[static_cast<size_t>(support)].atom, at_time,
                         static_cast<size_t>(found), depth + 1, visited, out);
        } else {
            out << indent << "  " << lit.atom.predicate << ": no supporting update\n";
        }
    }
}

int cmd_run(const std::string& scenario_path, bool deterministic, std::optional<unsigned> seed,
            std::optional<int> horizon, const std::string& trace_out, std::ostream& out,
            std::ostream& err) {
    ScenarioSpec spec = load_scenario(scenario_path);
    if (horizon) spec.engine.horizon = *horizon;
    if (seed) spec.seed = *seed;
    RunResult result =
        deterministic ? run_scenario_deterministic(spec) : run_scenario_realtime(spec);
    print_summary(spec, result, err);
    std::string tsv = trace_to_tsv(*result.engine);
    if (trace_out.empty()) {
        out << tsv;
    } else {
        std::ofstream f(trace_out);
        if (!f) throw SchemaError("cannot write '" + trace_out + "'");
        f << tsv;
        err << "trace written to " << trace_out << "\n";
    }
    if (result.engine->halted()) {
        err << "inconsistency halt: " << result.engine->halt_report() << "\n";
        return 1;
    }
    return 0;
}

int cmd_query(const std::string& scenario_path, const std::string& query_text,
              std::optional<int> at, std::ostream& out, std::ostream& err) {
    ScenarioSpec spec = load_scenario(scenario_path);
    Query q = parse_query(query_text);
    RunResult result = run_scenario_deterministic(spec);
    const Engine& engine = *result.engine;
    if (engine.halted()) err << "note: run halted on inconsistency: " << engine.halt_report() << "\n";
    int at_time = at.value_or(engine.current_time());
    bool verdict = engine.query(q, at_time);
    out << format(q) << " at t=" << at_time << ": " << (verdict ? "true" : "false") << "\n";

    Program program = parse_program(spec.program_text);
    std::map<std::string, const Rule*> rules_by_id;
    for (const auto& r : program.rules) rules_by_id[r.id] = &r;
    GroundAtom atom;
    atom.predicate = q.atom.predicate;
    for (const auto& t : q.atom.args) atom.args.push_back(t.name);
    std::set<std::string> visited;
    explain_atom(engine.trace(), rules_by_id, atom, at_time, engine.trace().size(), 0, visited,
                 out);
    return 0;
}

int cmd_compare(const std::string& actual_path, const std::string& golden_path, double tol,
                std::ostream& out) {
    CompareReport report =
        compare_trace(read_file_or_throw(actual_path), read_file_or_throw(golden_path), tol);
    if (report.ok) {
        out << "traces match (tolerance " << tol << ")\n";
        return 0;
    }
    for (const auto& m : report.mismatches) out << m << "\n";
    return 1;
}

int cmd_validate(const std::string& scenario_path, std::ostream& out) {
    ScenarioSpec spec = load_scenario(scenario_path);
    KnowledgeGraph graph = load_graph(spec.graph_json);
    Program program = parse_program(spec.program_text);
    if (spec.schema) spec.schema->validate_against(graph);
    AnnotationRegistry registry = AnnotationRegistry::with_builtins();
    for (const auto& r : program.rules) {
        if (r.annotation.kind == AnnotationSpec::Kind::Function &&
            !registry.find(r.annotation.function_name))
            throw UnknownAnnotationFunction(r.annotation.function_name);
    }
    for (const auto& t : spec.tasks) {
        if (!t.target.empty() && !graph.has_node(t.target))
            throw SchemaError("task '" + t.name + "' targets unknown node '" + t.target + "'");
    }
    out << "scenario '" << spec.name << "' is valid: " << graph.node_count() << " nodes, "
        << graph.edge_count() << " edges, " << program.rules.size() << " rules, "
        << program.facts.size() << " facts, " << spec.tasks.size() << " tasks\n";
    return 0;
}

int cmd_emit_examples(const std::string& dir, std::ostream& out) {
    write_scenario_dir(scenario_welding(), dir + "/welding");
    write_scenario_dir(scenario_cardgame(), dir + "/cardgame");
    out << "wrote " << dir << "/welding and " << dir << "/cardgame\n";
    return 0;
}

}  // namespace

int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"interval-annotated temporal logic engine"};
    app.require_subcommand(1);

    std::string scenario_path, query_text, trace_out, actual_path, golden_path, emit_dir;
    bool deterministic = false;
    std::optional<unsigned> seed;
    std::optional<int> horizon, at_tick;
    double tol = 1e-5;

    auto* run = app.add_subcommand("run", "run a scenario and export its trace");
    run->add_option("scenario", scenario_path, "scenario JSON file")->required();
    run->add_flag("--deterministic", deterministic, "cooperative single-threaded scheduling");
    run->add_option("--seed", seed, "override the scenario seed");
    run->add_option("--horizon", horizon, "override the engine horizon");
    run->add_option("--trace-out", trace_out, "write the TSV trace to this path");

    auto* query = app.add_subcommand("query", "run a scenario, then explain one entailment");
    query->add_option("scenario", scenario_path, "scenario JSON file")->required();
    query->add_option("query", query_text, "e.g. \"defective(weld_object) : [1,1]\"")->required();
    query->add_option("--at", at_tick, "evaluate at this tick (default: final)");

    auto* compare = app.add_subcommand("compare", "compare a trace against a golden trace");
    compare->add_option("trace", actual_path, "actual TSV")->required();
    compare->add_option("golden", golden_path, "golden TSV")->required();
    compare->add_option("--tol", tol, "bound tolerance (default 1e-5)");

    auto* validate = app.add_subcommand("validate", "check a scenario file");
    validate->add_option("scenario", scenario_path, "scenario JSON file")->required();

    auto* emit = app.add_subcommand("emit-examples", "write the bundled example scenarios");
    emit->add_option("dir", emit_dir, "output directory")->required();

    std::vector<const char*> argv;
    argv.push_back("ivlog");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return 0;
        }
        err << e.what() << "\n";
        return 2;
    }

    try {
        if (run->parsed())
            return cmd_run(scenario_path, deterministic, seed, horizon, trace_out, out, err);
        if (query->parsed()) return cmd_query(scenario_path, query_text, at_tick, out, err);
        if (compare->parsed()) return cmd_compare(actual_path, golden_path, tol, out);
        if (validate->parsed()) return cmd_validate(scenario_path, out);
        if (emit->parsed()) return cmd_emit_examples(emit_dir, out);
    } catch (const SyntaxError& e) {
        err << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

}  // namespace ivlog
