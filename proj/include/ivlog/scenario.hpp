#pragma once

#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ivlog/bridge.hpp"
#include "ivlog/engine.hpp"

namespace ivlog {

struct AdapterSpec {
    enum class Kind { Scripted, External } kind = Kind::Scripted;
    std::vector<std::string> class_names;
    Postprocess postprocess = Postprocess::Identity;
    std::vector<PredictionEvent> events;   // scripted inputs, tick-tagged
    std::vector<std::string> command;      // external adapter only
};

struct TaskSpec {
    enum class Kind { ClassifierDriver, Poller, CardDriver, Monitor };
    Kind kind = Kind::ClassifierDriver;
    std::string name;  // trace source tag
    std::string target;
    AdapterSpec adapter;
    FactConversionOptions conversion;
    int poll_interval_ticks = 1;
    double poll_interval_seconds = 0.5;
    std::optional<Query> poll_condition;
    std::optional<Query> stop_query;
    // card driver
    std::vector<std::string> draws;  // scripted order; empty + random_draws -> seeded shuffle
    bool random_draws = false;
    std::string deck_predicate = "deck_holds";
    std::string deck_node = "full_deck";
    std::string observation_node = "card_drawn_obj";
};

struct FinalQuery {
    Query query;
    int at_tick = -1;  // -1: final time
    std::string text;
};

struct ScenarioSpec {
    std::string name;
    std::string graph_json;
    std::string program_text;
    std::optional<TypeSchema> schema;
    EngineConfig engine;
    double tick_seconds = 0.5;
    unsigned seed = 0;
    std::vector<TaskSpec> tasks;
    std::vector<FinalQuery> final_queries;
};

/// Reads a scenario JSON file; graph/program may be inline or referenced
/// by path relative to the scenario file.
ScenarioSpec load_scenario(const std::string& path);

/// Writes scenario.json, program.ivl and graph.json into a directory.
void write_scenario_dir(const ScenarioSpec& spec, const std::string& dir);

/// The two reference scenarios.
ScenarioSpec scenario_welding();
ScenarioSpec scenario_cardgame();                      // scripted golden draw order
ScenarioSpec scenario_cardgame_random(unsigned seed);  // seeded random game

/// All 52 card names, suit-major ("ace_clubs", "two_clubs", ...).
std::vector<std::string> full_deck_names();

struct RunResult {
    std::unique_ptr<Engine> engine;
    bool stopped = false;  // a monitor or driver ended the run early
    int ticks_run = 0;
};

/// Single-threaded cooperative run: per tick, tasks act in declaration
/// order, then pending scheduled heads are processed.
RunResult run_scenario_deterministic(const ScenarioSpec& spec,
                                     std::optional<unsigned> seed_override = std::nullopt);

/// Wall-clock run: drivers and monitors step at tick boundaries on the
/// main thread, pollers run as independent threads; every engine access
/// goes through one mutex-guarded gate.
RunResult run_scenario_realtime(const ScenarioSpec& spec);

struct CompareReport {
    bool ok = true;
    std::vector<std::string> mismatches;
};

/// Row-by-row TSV comparison; bounds compared numerically within tol.
CompareReport compare_trace(const std::string& actual_tsv, const std::string& golden_tsv,
                            double tol = 1e-5);

std::string trace_to_tsv(const Engine& engine);

}  // namespace ivlog
