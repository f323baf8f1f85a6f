#include "ivlog/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "ivlog/parser.hpp"

namespace ivlog {
namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Postprocess postprocess_from(const std::string& name) {
    if (name == "softmax") return Postprocess::Softmax;
    if (name == "sigmoid") return Postprocess::SigmoidEach;
    if (name == "identity") return Postprocess::Identity;
    throw SchemaError("unknown postprocess '" + name + "'");
}

std::string postprocess_name(Postprocess p) {
    switch (p) {
        case Postprocess::Softmax: return "softmax";
        case Postprocess::SigmoidEach: return "sigmoid";
        case Postprocess::Identity: return "identity";
    }
    return "identity";
}

json event_to_json(const PredictionEvent& e) {
    json j = {{"tick", e.tick}, {"target", e.target}};
    json scores = json::object();
    for (const auto& [k, v] : e.scores) scores[k] = v;
    j["scores"] = scores;
    return j;
}

PredictionEvent event_from_json(const json& j) {
    PredictionEvent e;
    e.tick = j.value("tick", 0);
    e.target = j.value("target", std::string{});
    if (j.contains("scores"))
        for (const auto& [k, v] : j["scores"].items()) e.scores[k] = v.get<double>();
    return e;
}

json conversion_to_json(const FactConversionOptions& c) {
    json j = {{"threshold", c.threshold},
              {"set_lower_bound", c.set_lower_bound},
              {"set_upper_bound", c.set_upper_bound}};
    if (c.snap_value) j["snap_value"] = *c.snap_value;
    return j;
}

FactConversionOptions conversion_from_json(const json& j) {
    FactConversionOptions c;
    c.threshold = j.value("threshold", 0.5);
    c.set_lower_bound = j.value("set_lower_bound", true);
    c.set_upper_bound = j.value("set_upper_bound", false);
    if (j.contains("snap_value")) c.snap_value = j["snap_value"].get<double>();
    return c;
}

json adapter_to_json(const AdapterSpec& a) {
    json j;
    j["kind"] = a.kind == AdapterSpec::Kind::External ? "external" : "scripted";
    j["class_names"] = a.class_names;
    j["postprocess"] = postprocess_name(a.postprocess);
    if (!a.events.empty()) {
        json events = json::array();
        for (const auto& e : a.events) events.push_back(event_to_json(e));
        j["events"] = events;
    }
    if (!a.command.empty()) j["command"] = a.command;
    return j;
}

AdapterSpec adapter_from_json(const json& j) {
    AdapterSpec a;
    a.kind = j.value("kind", std::string("scripted")) == "external" ? AdapterSpec::Kind::External
                                                                    : AdapterSpec::Kind::Scripted;
    if (j.contains("class_names")) a.class_names = j["class_names"].get<std::vector<std::string>>();
    a.postprocess = postprocess_from(j.value("postprocess", std::string("identity")));
    if (j.contains("events"))
        for (const auto& e : j["events"]) a.events.push_back(event_from_json(e));
    if (j.contains("command")) a.command = j["command"].get<std::vector<std::string>>();
    return a;
}

const char* task_kind_name(TaskSpec::Kind k) {
    switch (k) {
        case TaskSpec::Kind::ClassifierDriver: return "classifier_driver";
        case TaskSpec::Kind::Poller: return "poller";
        case TaskSpec::Kind::CardDriver: return "card_driver";
        case TaskSpec::Kind::Monitor: return "monitor";
    }
    return "classifier_driver";
}

TaskSpec::Kind task_kind_from(const std::string& name) {
    if (name == "classifier_driver") return TaskSpec::Kind::ClassifierDriver;
    if (name == "poller") return TaskSpec::Kind::Poller;
    if (name == "card_driver") return TaskSpec::Kind::CardDriver;
    if (name == "monitor") return TaskSpec::Kind::Monitor;
    throw SchemaError("unknown task kind '" + name + "'");
}

json task_to_json(const TaskSpec& t) {
    json j;
    j["name"] = t.name;
    j["kind"] = task_kind_name(t.kind);
    switch (t.kind) {
        case TaskSpec::Kind::ClassifierDriver:
            j["target"] = t.target;
            j["adapter"] = adapter_to_json(t.adapter);
            j["conversion"] = conversion_to_json(t.conversion);
            break;
        case TaskSpec::Kind::Poller:
            j["target"] = t.target;
            j["adapter"] = adapter_to_json(t.adapter);
            j["conversion"] = conversion_to_json(t.conversion);
            j["poll_interval_ticks"] = t.poll_interval_ticks;
            j["poll_interval_seconds"] = t.poll_interval_seconds;
            if (t.poll_condition) j["poll_condition"] = format(*t.poll_condition);
            break;
        case TaskSpec::Kind::CardDriver:
            j["conversion"] = conversion_to_json(t.conversion);
            j["draws"] = t.draws;
            j["random_draws"] = t.random_draws;
            j["deck_predicate"] = t.deck_predicate;
            j["deck_node"] = t.deck_node;
            j["observation_node"] = t.observation_node;
            if (t.stop_query) j["stop_query"] = format(*t.stop_query);
            break;
        case TaskSpec::Kind::Monitor:
            if (t.stop_query) j["stop_query"] = format(*t.stop_query);
            break;
    }
    return j;
}

TaskSpec task_from_json(const json& j) {
    TaskSpec t;
    t.name = j.value("name", std::string{});
    t.kind = task_kind_from(j.value("kind", std::string("classifier_driver")));
    t.target = j.value("target", std::string{});
    if (j.contains("adapter")) t.adapter = adapter_from_json(j["adapter"]);
    if (j.contains("conversion")) t.conversion = conversion_from_json(j["conversion"]);
    t.poll_interval_ticks = j.value("poll_interval_ticks", 1);
    t.poll_interval_seconds = j.value("poll_interval_seconds", 0.5);
    if (j.contains("poll_condition"))
        t.poll_condition = parse_query(j["poll_condition"].get<std::string>());
    if (j.contains("stop_query")) t.stop_query = parse_query(j["stop_query"].get<std::string>());
    if (j.contains("draws")) t.draws = j["draws"].get<std::vector<std::string>>();
    t.random_draws = j.value("random_draws", false);
    t.deck_predicate = j.value("deck_predicate", std::string("deck_holds"));
    t.deck_node = j.value("deck_node", std::string("full_deck"));
    t.observation_node = j.value("observation_node", std::string("card_drawn_obj"));
    return t;
}

json spec_to_json(const ScenarioSpec& spec, bool with_paths) {
    json j;
    j["name"] = spec.name;
    if (with_paths) {
        j["graph_path"] = "graph.json";
        j["program_path"] = "program.ivl";
    } else {
        j["graph"] = json::parse(spec.graph_json);
        j["program"] = spec.program_text;
    }
    if (spec.schema) {
        json schema = json::object();
        for (const auto& [pred, args] : spec.schema->entries()) schema[pred] = args;
        j["schema"] = schema;
    }
    json engine;
    engine["horizon"] = spec.engine.horizon;
    engine["canonical"] = spec.engine.canonical;
    engine["inconsistency_policy"] = spec.engine.policy == InconsistencyPolicy::FlagAndHalt
                                         ? "flag-and-halt"
                                         : "reset-to-unknown-static";
    if (!spec.engine.complement_pairs.empty()) {
        json pairs = json::array();
        for (const auto& [p, q] : spec.engine.complement_pairs) pairs.push_back({p, q});
        engine["complement_pairs"] = pairs;
    }
    j["engine"] = engine;
    j["tick_seconds"] = spec.tick_seconds;
    j["seed"] = spec.seed;
    json tasks = json::array();
    for (const auto& t : spec.tasks) tasks.push_back(task_to_json(t));
    j["tasks"] = tasks;
    if (!spec.final_queries.empty()) {
        json queries = json::array();
        for (const auto& fq : spec.final_queries)
            queries.push_back({{"query", fq.text}, {"at", fq.at_tick}});
        j["final_queries"] = queries;
    }
    return j;
}

}  // namespace

ScenarioSpec load_scenario(const std::string& path) {
    std::string text = read_file(path);
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw SchemaError(std::string("scenario is not valid JSON: ") + e.what());
    }
    std::filesystem::path base = std::filesystem::path(path).parent_path();

    ScenarioSpec spec;
    spec.name = doc.value("name", std::string{});
    if (doc.contains("graph"))
        spec.graph_json = doc["graph"].dump();
    else if (doc.contains("graph_path"))
        spec.graph_json = read_file((base / doc["graph_path"].get<std::string>()).string());
    else
        throw SchemaError("scenario requires 'graph' or 'graph_path'");
    if (doc.contains("program"))
        spec.program_text = doc["program"].get<std::string>();
    else if (doc.contains("program_path"))
        spec.program_text = read_file((base / doc["program_path"].get<std::string>()).string());
    else
        throw SchemaError("scenario requires 'program' or 'program_path'");
    if (doc.contains("schema")) {
        TypeSchema schema;
        for (const auto& [pred, args] : doc["schema"].items()) {
            schema.set(pred, args.get<std::vector<std::string>>());
        }
        spec.schema = schema;
    }
    if (doc.contains("engine")) {
        const auto& e = doc["engine"];
        spec.engine.horizon = e.value("horizon", 0);
        spec.engine.canonical = e.value("canonical", true);
        std::string policy = e.value("inconsistency_policy", std::string("reset-to-unknown-static"));
        if (policy == "flag-and-halt")
            spec.engine.policy = InconsistencyPolicy::FlagAndHalt;
        else if (policy == "reset-to-unknown-static")
            spec.engine.policy = InconsistencyPolicy::ResetToUnknownStatic;
        else
            throw SchemaError("unknown inconsistency policy '" + policy + "'");
        if (e.contains("complement_pairs"))
            for (const auto& pair : e["complement_pairs"])
                spec.engine.complement_pairs.emplace_back(pair[0].get<std::string>(),
                                                          pair[1].get<std::string>());
    }
    spec.tick_seconds = doc.value("tick_seconds", 0.5);
    spec.seed = doc.value("seed", 0u);
    if (doc.contains("tasks"))
        for (const auto& t : doc["tasks"]) spec.tasks.push_back(task_from_json(t));
    if (doc.contains("final_queries")) {
        for (const auto& q : doc["final_queries"]) {
            FinalQuery fq;
            fq.text = q["query"].get<std::string>();
            fq.query = parse_query(fq.text);
            fq.at_tick = q.value("at", -1);
            spec.final_queries.push_back(std::move(fq));
        }
    }
    return spec;
}

void write_scenario_dir(const ScenarioSpec& spec, const std::string& dir) {
    std::filesystem::create_directories(dir);
    auto write = [&](const std::string& name, const std::string& content) {
        std::ofstream out(std::filesystem::path(dir) / name);
        out << content;
    };
    write("graph.json", spec.graph_json);
    write("program.ivl", spec.program_text);
    write("scenario.json", spec_to_json(spec, true).dump(2) + "\n");
}

namespace {

const std::vector<std::string>& card_ranks() {
    static const std::vector<std::string> ranks = {"ace",  "two", "three", "four", "five",
                                                   "six",  "seven", "eight", "nine", "ten",
                                                   "jack", "queen", "king"};
    return ranks;
}

const std::vector<std::string>& card_suits() {
    static const std::vector<std::string> suits = {"clubs", "diamonds", "hearts", "spades"};
    return suits;
}

}  // namespace

std::vector<std::string> full_deck_names() {
    std::vector<std::string> cards;
    for (const auto& suit : card_suits())
        for (const auto& rank : card_ranks()) cards.push_back(rank + "_" + suit);
    return cards;
}

ScenarioSpec scenario_welding() {
    ScenarioSpec spec;
    spec.name = "welding";
    spec.graph_json = R"({"nodes":[{"id":"weld_object","type":"object"}],"edges":[]})";
    spec.program_text =
        "# weld defect handling\n"
        "repairing(W) <-1 gap(W)\n"
        "defective(W) <-1 gap(W), repairing(W)\n";
    spec.engine.horizon = 7;
    spec.engine.canonical = false;
    spec.engine.policy = InconsistencyPolicy::ResetToUnknownStatic;
    spec.tick_seconds = 0.5;

    FactConversionOptions conv;
    conv.threshold = 0.5;
    conv.set_lower_bound = true;
    conv.set_upper_bound = false;
    conv.snap_value = 1.0;

    auto event = [](int tick, const std::string& cls) {
        PredictionEvent e;
        e.tick = tick;
        e.target = "weld_object";
        e.scores = {{"good", 0.0}, {"gap", 0.0}};
        e.scores[cls] = 1.0;
        return e;
    };

    // Thread 1 welds five objects; objects 2 and 3 show a gap. The welder
    // waits out the background repair before moving on.
    TaskSpec welder;
    welder.kind = TaskSpec::Kind::ClassifierDriver;
    welder.name = "1";
    welder.target = "weld_object";
    welder.adapter.class_names = {"good", "gap"};
    welder.adapter.postprocess = Postprocess::Identity;
    welder.adapter.events = {event(0, "good"), event(1, "gap"), event(4, "gap"), event(6, "good"),
                             event(7, "good")};
    welder.conversion = conv;
    spec.tasks.push_back(welder);

    // Thread 2 repairs whenever a gap was asserted, then re-classifies:
    // still a gap on object 2, repaired on object 3.
    TaskSpec repairer;
    repairer.kind = TaskSpec::Kind::Poller;
    repairer.name = "2";
    repairer.target = "weld_object";
    repairer.adapter.class_names = {"good", "gap"};
    repairer.adapter.postprocess = Postprocess::Identity;
    repairer.adapter.events = {event(2, "gap"), event(5, "good")};
    repairer.conversion = conv;
    repairer.poll_interval_ticks = 1;
    repairer.poll_interval_seconds = 0.5;
    repairer.poll_condition = parse_query("gap(weld_object) : [1,1]");
    spec.tasks.push_back(repairer);

    FinalQuery verdict;
    verdict.text = "defective(weld_object) : [1,1]";
    verdict.query = parse_query(verdict.text);
    verdict.at_tick = 3;
    spec.final_queries.push_back(verdict);
    return spec;
}

namespace {

ScenarioSpec cardgame_base() {
    ScenarioSpec spec;
    spec.name = "cardgame";

    json graph;
    graph["nodes"] = json::array();
    for (const auto& card : full_deck_names())
        graph["nodes"].push_back({{"id", card}, {"type", "card"}});
    graph["nodes"].push_back({{"id", "full_deck"}, {"type", "deck"}});
    graph["nodes"].push_back({{"id", "player_hand"}, {"type", "hand"}});
    graph["nodes"].push_back({{"id", "card_drawn_obj"}, {"type", "observation"}});
    graph["edges"] = json::array();
    for (const auto& card : full_deck_names())
        graph["edges"].push_back({{"from", card}, {"to", "full_deck"}, {"label", "deck_holds"}});
    spec.graph_json = graph.dump();

    std::ostringstream program;
    program << "# card game: draw without exceeding 42 points\n";
    for (const auto& card : full_deck_names()) {
        double v = card_points(card) / 10.0;
        program << "player_holds(" << card << ") : [" << format_bound(v) << ",1] <-0 " << card
                << "(card_drawn_obj)\n";
    }
    program << "hand_as_point_vals(player_hand) : append_hand <-0 player_holds(Card):[0.3,1]\n";
    program << "odds_of_losing(player_hand) : odds_of_losing <-0 "
               "hand_as_point_vals(player_hand):[0,1], deck_holds(Card,full_deck):[0.3,1]\n";
    spec.program_text = program.str();

    TypeSchema schema;
    schema.set("player_holds", {"card"});
    schema.set("deck_holds", {"card", "deck"});
    schema.set("hand_as_point_vals", {"hand"});
    schema.set("odds_of_losing", {"hand"});
    spec.schema = schema;

    spec.engine.canonical = true;
    spec.engine.policy = InconsistencyPolicy::ResetToUnknownStatic;
    spec.tick_seconds = 0.5;

    TaskSpec monitor;
    monitor.kind = TaskSpec::Kind::Monitor;
    monitor.name = "1";
    monitor.stop_query = parse_query("odds_of_losing(player_hand) : [1,1]");
    spec.tasks.push_back(monitor);

    TaskSpec driver;
    driver.kind = TaskSpec::Kind::CardDriver;
    driver.name = "2";
    driver.conversion.threshold = 0.5;
    driver.conversion.set_lower_bound = true;
    driver.conversion.set_upper_bound = false;
    driver.conversion.snap_value = 1.0;
    driver.stop_query = monitor.stop_query;
    spec.tasks.push_back(driver);

    FinalQuery fq;
    fq.text = "odds_of_losing(player_hand) : [1,1]";
    fq.query = parse_query(fq.text);
    fq.at_tick = -1;
    spec.final_queries.push_back(fq);
    return spec;
}

}  // namespace

ScenarioSpec scenario_cardgame() {
    ScenarioSpec spec = cardgame_base();
    spec.engine.horizon = 7;
    spec.tasks[1].draws = {"two_clubs", "ten_hearts",  "six_clubs", "four_clubs",
                           "jack_spades", "ace_clubs", "three_hearts"};
    return spec;
}

ScenarioSpec scenario_cardgame_random(unsigned seed) {
    ScenarioSpec spec = cardgame_base();
    spec.engine.horizon = 20;
    spec.seed = seed;
    spec.tasks[1].random_draws = true;
    return spec;
}

std::string trace_to_tsv(const Engine& engine) {
    std::ostringstream out;
    engine.export_tsv(out);
    return out.str();
}

namespace {

struct TraceRow {
    int fpo;
    std::string node;
    std::string label;
    Interval old_bound;
    Interval new_bound;
    std::string source;
};

std::vector<TraceRow> parse_tsv(const std::string& text) {
    std::vector<TraceRow> rows;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first && line.rfind("fpo\t", 0) == 0) {
            first = false;
            continue;
        }
        first = false;
        std::vector<std::string> fields;
        size_t pos = 0;
        while (true) {
            size_t tab = line.find('\t', pos);
            fields.push_back(line.substr(pos, tab == std::string::npos ? tab : tab - pos));
            if (tab == std::string::npos) break;
            pos = tab + 1;
        }
        if (fields.size() != 6)
            throw SchemaError("trace row has " + std::to_string(fields.size()) +
                              " fields, expected 6: " + line);
        TraceRow row{std::stoi(fields[0]), fields[1],          fields[2],
                     parse_interval(fields[3]), parse_interval(fields[4]), fields[5]};
        rows.push_back(std::move(row));
    }
    return rows;
}

bool bound_close(const Interval& a, const Interval& b, double tol) {
    return std::fabs(a.lower() - b.lower()) <= tol && std::fabs(a.upper() - b.upper()) <= tol;
}

}  // namespace

CompareReport compare_trace(const std::string& actual_tsv, const std::string& golden_tsv,
                            double tol) {
    CompareReport report;
    std::vector<TraceRow> actual = parse_tsv(actual_tsv);
    std::vector<TraceRow> golden = parse_tsv(golden_tsv);
    size_t n = std::min(actual.size(), golden.size());
    for (size_t i = 0; i < n; ++i) {
        const TraceRow& a = actual[i];
        const TraceRow& g = golden[i];
        std::string where = "row " + std::to_string(i);
        if (a.fpo != g.fpo)
            report.mismatches.push_back(where + ": fpo " + std::to_string(a.fpo) + " != " +
                                        std::to_string(g.fpo));
        if (a.node != g.node)
            report.mismatches.push_back(where + ": node '" + a.node + "' != '" + g.node + "'");
        if (a.label != g.label)
            report.mismatches.push_back(where + ": label '" + a.label + "' != '" + g.label + "'");
        if (!bound_close(a.old_bound, g.old_bound, tol))
            report.mismatches.push_back(where + ": old bound " + a.old_bound.to_string() +
                                        " != " + g.old_bound.to_string());
        if (!bound_close(a.new_bound, g.new_bound, tol))
            report.mismatches.push_back(where + ": new bound " + a.new_bound.to_string() +
                                        " != " + g.new_bound.to_string());
        if (a.source != g.source)
            report.mismatches.push_back(where + ": source '" + a.source + "' != '" + g.source +
                                        "'");
    }
    if (actual.size() != golden.size())
        report.mismatches.push_back("row count " + std::to_string(actual.size()) +
                                    " != " + std::to_string(golden.size()) +
                                    " (first unmatched row " + std::to_string(n) + ")");
    report.ok = report.mismatches.empty();
    return report;
}

}  // namespace ivlog
