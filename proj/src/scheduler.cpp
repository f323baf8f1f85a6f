#include <algorithm>
#include <atomic>
#include <chrono>
#include <memory>
#include <thread>

#include "ivlog/parser.hpp"
#include "ivlog/scenario.hpp"

namespace ivlog {
namespace {

std::unique_ptr<ClassifierAdapter> make_adapter(const AdapterSpec& spec) {
    if (spec.kind == AdapterSpec::Kind::External)
        return std::make_unique<ExternalProcessAdapter>(spec.command, spec.class_names,
                                                        spec.postprocess);
    return std::make_unique<ScriptedAdapter>(spec.class_names, spec.postprocess);
}

class Task {
public:
    virtual ~Task() = default;
    virtual void step(int tick, Engine& engine, bool& stop) = 0;
};

class ClassifierDriverTask : public Task {
public:
    explicit ClassifierDriverTask(const TaskSpec& spec)
        : spec_(spec), adapter_(make_adapter(spec.adapter)), source_(spec.adapter.events) {}

    void step(int tick, Engine& engine, bool& stop) override {
        (void)stop;
        while (auto input = source_.next(tick)) {
            classify_and_inject(*adapter_, *input,
                                spec_.target.empty() ? input->target : spec_.target,
                                spec_.conversion, engine, spec_.name);
        }
    }

private:
    TaskSpec spec_;
    std::unique_ptr<ClassifierAdapter> adapter_;
    ScriptedInputSource source_;
};

class PollerTask : public Task {
public:
    explicit PollerTask(const TaskSpec& spec)
        : spec_(spec), adapter_(make_adapter(spec.adapter)), source_(spec.adapter.events) {}

    void step(int tick, Engine& engine, bool& stop) override {
        (void)stop;
        if (spec_.poll_interval_ticks > 1 && tick % spec_.poll_interval_ticks != 0) return;
        // The condition is evaluated against what the poller observed
        // during the previous interval.
        if (spec_.poll_condition && !engine.query_at_previous(*spec_.poll_condition)) return;
        if (auto input = source_.next(tick)) {
            classify_and_inject(*adapter_, *input,
                                spec_.target.empty() ? input->target : spec_.target,
                                spec_.conversion, engine, spec_.name);
        }
    }

private:
    TaskSpec spec_;
    std::unique_ptr<ClassifierAdapter> adapter_;
    ScriptedInputSource source_;
};

class CardDriverTask : public Task {
public:
    CardDriverTask(const TaskSpec& spec, const KnowledgeGraph& graph, unsigned seed)
        : spec_(spec), rng_(seed) {
        for (const auto& e : graph.edges())
            if (e.label == spec_.deck_predicate) remaining_.push_back(e.from);
        std::sort(remaining_.begin(), remaining_.end());
        adapter_ = std::make_unique<ScriptedAdapter>(remaining_, Postprocess::Identity);
    }

    void step(int tick, Engine& engine, bool& stop) override {
        if (!spec_.random_draws && static_cast<size_t>(tick) >= spec_.draws.size()) return;
        if (spec_.stop_query && engine.query(*spec_.stop_query, engine.current_time())) {
            stop = true;
            return;
        }
        std::string card;
        if (spec_.random_draws) {
            std::vector<std::string> safe;
            for (const auto& c : remaining_)
                if (total_ + card_points(c) <= 42) safe.push_back(c);
            if (safe.empty()) {
                stop = true;
                return;
            }
            card = safe[std::uniform_int_distribution<size_t>(0, safe.size() - 1)(rng_)];
        } else {
            card = spec_.draws[static_cast<size_t>(tick)];
        }
        engine.force_set({spec_.deck_predicate, {card, spec_.deck_node}},
                         Interval::always_false());
        remaining_.erase(std::remove(remaining_.begin(), remaining_.end(), card),
                         remaining_.end());
        total_ += card_points(card);
        PredictionEvent input;
        input.tick = tick;
        input.target = spec_.observation_node;
        input.scores[card] = 1.0;
        classify_and_inject(*adapter_, input, spec_.observation_node, spec_.conversion, engine,
                            spec_.name);
    }

    int hand_total() const { return total_; }

private:
    TaskSpec spec_;
    std::mt19937 rng_;
    std::unique_ptr<ClassifierAdapter> adapter_;
    std::vector<std::string> remaining_;
    int total_ = 0;
};

class MonitorTask : public Task {
public:
    explicit MonitorTask(const TaskSpec& spec) : spec_(spec) {}

    void step(int tick, Engine& engine, bool& stop) override {
        (void)tick;
        if (spec_.stop_query && engine.query(*spec_.stop_query, engine.current_time()))
            stop = true;
    }

private:
    TaskSpec spec_;
};

std::unique_ptr<Task> make_task(const TaskSpec& spec, const KnowledgeGraph& graph,
                                unsigned seed) {
    switch (spec.kind) {
        case TaskSpec::Kind::ClassifierDriver: return std::make_unique<ClassifierDriverTask>(spec);
        case TaskSpec::Kind::Poller: return std::make_unique<PollerTask>(spec);
        case TaskSpec::Kind::CardDriver: return std::make_unique<CardDriverTask>(spec, graph, seed);
        case TaskSpec::Kind::Monitor: return std::make_unique<MonitorTask>(spec);
    }
    throw SchemaError("unhandled task kind");
}

Engine build_engine(const ScenarioSpec& spec) {
    KnowledgeGraph graph = load_graph(spec.graph_json);
    Program program = parse_program(spec.program_text);
    if (spec.schema) spec.schema->validate_against(graph);
    return Engine(std::move(graph), std::move(program.rules), std::move(program.facts),
                  spec.engine, AnnotationRegistry::with_builtins(),
                  spec.schema ? &*spec.schema : nullptr);
}

}  // namespace

RunResult run_scenario_deterministic(const ScenarioSpec& spec,
                                     std::optional<unsigned> seed_override) {
    RunResult result;
    result.engine = std::make_unique<Engine>(build_engine(spec));
    Engine& engine = *result.engine;

    unsigned seed = seed_override.value_or(spec.seed);
    std::vector<std::unique_ptr<Task>> tasks;
    for (const auto& t : spec.tasks) tasks.push_back(make_task(t, engine.graph(), seed));

    bool stop = false;
    for (int tick = 0; tick <= spec.engine.horizon; ++tick) {
        if (tick > 0) engine.advance_time();
        for (auto& task : tasks) {
            task->step(tick, engine, stop);
            if (stop || engine.halted()) break;
        }
        if (!engine.halted()) engine.run_pending();
        result.ticks_run = tick + 1;
        if (stop || engine.halted()) break;
    }
    result.stopped = stop;
    return result;
}

RunResult run_scenario_realtime(const ScenarioSpec& spec) {
    RunResult result;
    auto gate = std::make_shared<EngineGate>(build_engine(spec));

    std::atomic<bool> stop{false};
    std::vector<std::thread> poller_threads;
    std::vector<std::unique_ptr<ClassifierAdapter>> poller_adapters;
    std::vector<std::unique_ptr<ScriptedInputSource>> poller_sources;

    // Pollers are independent wall-clock tasks; everyone else steps at
    // tick boundaries on this thread.
    for (const auto& t : spec.tasks) {
        if (t.kind != TaskSpec::Kind::Poller) continue;
        poller_adapters.push_back(make_adapter(t.adapter));
        poller_sources.push_back(std::make_unique<ScriptedInputSource>(t.adapter.events));
        PollerConfig cfg;
        cfg.poll_interval_seconds = t.poll_interval_seconds;
        cfg.phase_seconds = spec.tick_seconds * 0.5;  // poll strictly between tick boundaries
        cfg.poll_condition = t.poll_condition;
        poller_threads.emplace_back([&, cfg, target = t.target, name = t.name,
                                     conversion = t.conversion,
                                     adapter = poller_adapters.back().get(),
                                     source = poller_sources.back().get()] {
            run_poller(cfg, *adapter, *source, conversion, *gate, stop, name, target);
        });
    }

    std::vector<std::unique_ptr<Task>> tick_tasks;
    {
        KnowledgeGraph graph = load_graph(spec.graph_json);
        for (const auto& t : spec.tasks) {
            if (t.kind == TaskSpec::Kind::Poller) continue;
            tick_tasks.push_back(make_task(t, graph, spec.seed));
        }
    }

    using clock = std::chrono::steady_clock;
    auto start = clock::now();
    auto tick_len = std::chrono::duration<double>(spec.tick_seconds);
    bool stopped = false;
    int ticks = 0;
    for (int tick = 0; tick <= spec.engine.horizon && !stopped; ++tick) {
        std::this_thread::sleep_until(start + tick * tick_len);
        bool halted = gate->with_lock([&](Engine& engine) {
            if (tick > 0) engine.advance_time();
            for (auto& task : tick_tasks) {
                task->step(tick, engine, stopped);
                if (stopped || engine.halted()) break;
            }
            if (!engine.halted()) engine.run_pending();
            return engine.halted();
        });
        ticks = tick + 1;
        if (halted) break;
    }
    stop.store(true);
    for (auto& th : poller_threads) th.join();

    result.engine = std::make_unique<Engine>(gate->with_lock([](Engine& e) { return std::move(e); }));
    result.stopped = stopped;
    result.ticks_run = ticks;
    return result;
}

}  // namespace ivlog
