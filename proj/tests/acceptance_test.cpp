// Acceptance suite: every criterion runs at its stated tolerance and
// prints one pass/fail line.

#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include "ivlog/bridge.hpp"
#include "ivlog/cli.hpp"
#include "ivlog/parser.hpp"
#include "ivlog/scenario.hpp"
#include "support/brute_grounding.hpp"
#include "support/fakeview.hpp"
#include "support/oracle.hpp"
#include "support/randprog.hpp"

using namespace ivlog;
using ivlog::testing::brute_force_groundings;
using ivlog::testing::FakeView;
using ivlog::testing::make_random_program;
using ivlog::testing::run_oracle;

namespace {

std::string data_path(const std::string& rel) { return std::string(IVLOG_DATA_DIR) + "/" + rel; }

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    EXPECT_TRUE(in.good()) << path;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void report(int criterion, const std::string& what) {
    std::cout << "[criterion " << criterion << "] PASS: " << what << std::endl;
}

double run_seconds(const ScenarioSpec& spec, RunResult& out) {
    auto start = std::chrono::steady_clock::now();
    out = run_scenario_deterministic(spec);
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

TEST(Acceptance, Criterion01_WeldingGoldenTrace) {
    RunResult result;
    double seconds = run_seconds(scenario_welding(), result);
    const auto& trace = result.engine->trace();
    ASSERT_EQ(trace.size(), 10u);
    std::map<int, int> per_fpo;
    for (const auto& e : trace) per_fpo[e.fpo]++;
    std::map<int, int> expected{{0, 1}, {1, 1}, {2, 2}, {3, 1}, {4, 1}, {5, 2}, {6, 1}, {7, 1}};
    EXPECT_EQ(per_fpo, expected);
    for (const auto& e : trace) {
        EXPECT_EQ(e.old_bound, Interval::unknown());
        EXPECT_EQ(e.new_bound, Interval::always_true());
    }
    CompareReport cmp =
        compare_trace(trace_to_tsv(*result.engine), read_file(data_path("welding/golden.tsv")), 0.0);
    EXPECT_TRUE(cmp.ok);
    for (const auto& m : cmp.mismatches) ADD_FAILURE() << m;
    EXPECT_LT(seconds, 1.0);
    report(1, "welding trace matches the published rows exactly, runtime " +
                  std::to_string(seconds) + "s");
}

TEST(Acceptance, Criterion02_CardGameGoldenTrace) {
    RunResult result;
    double seconds = run_seconds(scenario_cardgame(), result);
    const auto& trace = result.engine->trace();
    ASSERT_EQ(trace.size(), 28u);
    for (int i = 0; i < 28; ++i) EXPECT_EQ(trace[static_cast<size_t>(i)].fpo, i);

    const double hand_lowers[] = {0.6, 0.66, 0.666, 0.6666, 0.66669, 0.666693, 0.6666936};
    int hand_row = 0;
    for (const auto& e : trace) {
        if (e.atom.predicate != "hand_as_point_vals") continue;
        EXPECT_EQ(e.new_bound.lower(), hand_lowers[hand_row]) << "hand row " << hand_row;
        ++hand_row;
    }
    EXPECT_EQ(hand_row, 7);

    const double odds_lowers[] = {0.0, 0.0, 0.0, 0.0, 0.0, 0.23913, 1.0};
    int odds_row = 0;
    for (const auto& e : trace) {
        if (e.atom.predicate != "odds_of_losing") continue;
        EXPECT_NEAR(e.new_bound.lower(), odds_lowers[odds_row], 1e-5) << "odds row " << odds_row;
        ++odds_row;
    }
    EXPECT_EQ(odds_row, 7);

    // the corrected self-consistent old bound at FPO 10
    EXPECT_EQ(trace[10].old_bound, Interval::make(0.66, 1.0));
    EXPECT_EQ(trace[10].old_bound, trace[6].new_bound);

    CompareReport cmp = compare_trace(trace_to_tsv(*result.engine),
                                      read_file(data_path("cardgame/golden.tsv")), 1e-5);
    EXPECT_TRUE(cmp.ok);
    for (const auto& m : cmp.mismatches) ADD_FAILURE() << m;
    EXPECT_LT(seconds, 1.0);
    report(2, "card-game trace reproduces all 28 rows within 1e-5, runtime " +
                  std::to_string(seconds) + "s");
}

TEST(Acceptance, Criterion03_OddsOracle) {
    std::vector<std::string> deck = full_deck_names();
    std::mt19937 rng(424242);

    // independent counter over the remaining-deck multiset
    auto oracle_odds = [](const std::vector<std::string>& drawn,
                          const std::vector<std::string>& remaining) {
        int total = 0;
        for (const auto& c : drawn) total += card_points(c);
        long risky = 0;
        for (const auto& c : remaining)
            if (total + card_points(c) > 42) ++risky;
        if (remaining.empty()) return std::pair<long, long>{1, 1};
        return std::pair<long, long>{risky, static_cast<long>(remaining.size())};
    };

    for (int iter = 0; iter < 1000; ++iter) {
        std::shuffle(deck.begin(), deck.end(), rng);
        size_t prefix_len = rng() % 14;
        std::vector<std::string> drawn(deck.begin(), deck.begin() + prefix_len);
        std::vector<std::string> remaining(deck.begin() + prefix_len, deck.end());

        FakeView view;
        for (const auto& c : drawn) {
            view.establish("player_holds", c, Interval::make(card_points(c) / 10.0, 1.0));
            view.set({"deck_holds", {c, "full_deck"}}, Interval::always_false());
        }
        for (const auto& c : remaining)
            view.set({"deck_holds", {c, "full_deck"}}, Interval::always_true());

        AnnotationContext ctx{{Interval::unknown()}, view, {"odds_of_losing", {"player_hand"}}};
        Interval got = odds_of_losing(ctx);
        auto [risky, total] = oracle_odds(drawn, remaining);
        ASSERT_EQ(got.lower(), static_cast<double>(risky) / static_cast<double>(total))
            << "prefix " << prefix_len;
        ASSERT_EQ(got.upper(), 1.0);
    }

    // the published prefix: 11 risky face cards over 46 remaining
    std::vector<std::string> paper_prefix = {"two_clubs",  "ten_hearts",  "six_clubs",
                                             "four_clubs", "jack_spades", "ace_clubs"};
    FakeView view;
    for (const auto& c : full_deck_names()) {
        bool drawn = std::find(paper_prefix.begin(), paper_prefix.end(), c) != paper_prefix.end();
        view.set({"deck_holds", {c, "full_deck"}},
                 drawn ? Interval::always_false() : Interval::always_true());
        if (drawn) view.establish("player_holds", c, Interval::make(card_points(c) / 10.0, 1.0));
    }
    AnnotationContext ctx{{Interval::unknown()}, view, {"odds_of_losing", {"player_hand"}}};
    EXPECT_EQ(odds_of_losing(ctx).lower(), 11.0 / 46.0);
    report(3, "odds function agrees with the brute-force counter on 1000 prefixes (11/46 on the "
              "published one)");
}

TEST(Acceptance, Criterion04_MinimalModelEquivalence) {
    std::mt19937 rng(20240817);
    int checked_atoms = 0;
    for (int iter = 0; iter < 500; ++iter) {
        auto prog = make_random_program(rng);
        Engine engine(prog.graph, prog.rules, prog.facts, prog.config,
                      AnnotationRegistry::with_builtins());
        engine.run_pending();
        for (int t = 1; t <= prog.config.horizon; ++t) {
            engine.advance_time();
            engine.run_pending();
        }
        auto oracle = run_oracle(prog);
        for (int t = 0; t <= prog.config.horizon; ++t) {
            std::set<GroundAtom> atoms;
            for (const auto& [a, v] : engine.materialized_at(t)) atoms.insert(a);
            for (const auto& [a, v] : oracle.per_time.at(t)) atoms.insert(a);
            for (const auto& [a, v] : oracle.statics) atoms.insert(a);
            for (const auto& a : atoms) {
                ASSERT_EQ(engine.effective(a, t), oracle.effective(a, t))
                    << "iter " << iter << " t=" << t << " " << a.predicate << "(" << a.entity()
                    << ")";
                ++checked_atoms;
            }
        }
    }
    report(4, "500 random programs equal the saturation oracle (" +
                  std::to_string(checked_atoms) + " atom/time bounds compared)");
}

TEST(Acceptance, Criterion05_PropertySuites) {
    // negation involution over 10^4 random intervals
    std::mt19937 rng(5150);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int i = 0; i < 10000; ++i) {
        double lo = uni(rng);
        Interval x = Interval::make(lo, lo + (1.0 - lo) * uni(rng));
        ASSERT_TRUE(approx_equal(x.negate().negate(), x));
    }

    // tightening, idempotence, static immutability and replayability over
    // fresh random programs
    for (int iter = 0; iter < 150; ++iter) {
        auto prog = make_random_program(rng);
        Engine engine(prog.graph, prog.rules, prog.facts, prog.config,
                      AnnotationRegistry::with_builtins());
        engine.run_pending();
        ASSERT_TRUE(engine.run_pending().empty());  // idempotence at the fixpoint
        for (int t = 1; t <= prog.config.horizon; ++t) {
            engine.advance_time();
            engine.run_pending();
            ASSERT_TRUE(engine.run_pending().empty());
        }
        for (const auto& e : engine.trace())
            if (e.cause != "inconsistency-reset")
                ASSERT_TRUE(is_subset(e.new_bound, e.old_bound));  // monotone tightening

        // statics: nothing in the trace may touch an atom that was static
        // at the time of the entry
        Engine replay(prog.graph, {}, prog.facts, prog.config,
                      AnnotationRegistry::with_builtins());
        size_t cursor = 0;
        const auto& trace = engine.trace();
        for (int t = 0; t <= prog.config.horizon; ++t) {
            if (t > 0) replay.advance_time();
            while (cursor < trace.size() && trace[cursor].time == t) {
                const TraceEntry& entry = trace[cursor];
                ASSERT_EQ(replay.effective(entry.atom, t), entry.old_bound);
                replay.force_set(entry.atom, entry.new_bound);
                ++cursor;
            }
            std::set<GroundAtom> atoms;
            for (const auto& [a, v] : engine.materialized_at(t)) atoms.insert(a);
            for (const auto& [a, v] : replay.materialized_at(t)) atoms.insert(a);
            for (const auto& a : atoms)
                ASSERT_EQ(replay.effective(a, t), engine.effective(a, t))
                    << "replay diverged at t=" << t;
        }
        ASSERT_EQ(cursor, trace.size());
    }

    // static immutability, directly: once reset-static, never updated
    EngineConfig cfg;
    cfg.horizon = 2;
    cfg.policy = InconsistencyPolicy::ResetToUnknownStatic;
    Engine e(load_graph(R"({"nodes":[{"id":"a"}]})"), {}, {}, cfg,
             AnnotationRegistry::with_builtins());
    e.update({"p", {"a"}}, Interval::always_true(), "t1", "1");
    e.update({"p", {"a"}}, Interval::always_false(), "t2", "1");
    ASSERT_TRUE(e.is_static({"p", {"a"}}));
    size_t rows = e.trace().size();
    EXPECT_EQ(e.update({"p", {"a"}}, Interval::always_true(), "t3", "1"), UpdateOutcome::NoChange);
    EXPECT_EQ(e.trace().size(), rows);

    report(5, "involution, tightening, idempotence, static immutability and replayability hold");
}

TEST(Acceptance, Criterion06_InconsistencyHandling) {
    // reset policy
    EngineConfig cfg;
    cfg.horizon = 2;
    cfg.policy = InconsistencyPolicy::ResetToUnknownStatic;
    Engine e(load_graph(R"({"nodes":[{"id":"a"}]})"), {}, {}, cfg,
             AnnotationRegistry::with_builtins());
    e.inject_and_recompute({parse_fact("p(a) : [1,1]")}, "1");
    e.inject_and_recompute({parse_fact("p(a) : [0,0]")}, "1");
    EXPECT_EQ(e.effective({"p", {"a"}}, 0), Interval::unknown());
    EXPECT_TRUE(e.is_static({"p", {"a"}}));
    const TraceEntry& last = e.trace().back();
    EXPECT_EQ(last.cause, "inconsistency-reset");

    // halt policy through the CLI: exit code 1 plus a report naming the
    // atom and both bounds
    std::string dir = (std::filesystem::temp_directory_path() / "ivlog_acceptance6").string();
    std::filesystem::create_directories(dir);
    {
        std::ofstream scenario(dir + "/scenario.json");
        scenario << R"({
  "name": "halt",
  "graph": {"nodes": [{"id": "a"}]},
  "program": "flip(X) : [0,0] <-0 p(X)\n",
  "engine": {"horizon": 2, "canonical": true, "inconsistency_policy": "flag-and-halt"},
  "tasks": [{"name": "1", "kind": "classifier_driver", "target": "a",
             "adapter": {"class_names": ["p", "flip"], "postprocess": "identity",
                          "events": [{"tick": 0, "target": "a",
                                      "scores": {"p": 1.0, "flip": 1.0}}]},
             "conversion": {"threshold": 0.5, "set_lower_bound": true,
                             "set_upper_bound": true, "snap_value": 1.0}}]
})";
    }
    std::ostringstream out, err;
    int code = run_cli({"run", dir + "/scenario.json", "--deterministic"}, out, err);
    EXPECT_EQ(code, 1);
    EXPECT_NE(err.str().find("flip(a)"), std::string::npos);
    EXPECT_NE(err.str().find("[1,1]"), std::string::npos);
    EXPECT_NE(err.str().find("[0,0]"), std::string::npos);
    report(6, "reset policy freezes [0,1] static with an inconsistency-reset row; halt policy "
              "exits 1 naming the atom and bounds");
}

TEST(Acceptance, Criterion07_ParserRoundTripAndFuzz) {
    std::vector<std::string> corpus;
    for (const char* rel : {"welding/program.ivl", "cardgame/program.ivl"}) {
        Program prog = parse_program(read_file(data_path(rel)));
        for (const auto& r : prog.rules) corpus.push_back(format(r));
        for (const auto& f : prog.facts) corpus.push_back(format(f));
    }
    for (int i = 0; i < 60; ++i) {
        corpus.push_back(format(parse_rule(
            "derived_" + std::to_string(i) + "(X) : [0." + std::to_string(i % 10) + ",1] <-" +
            std::to_string(i % 3) + " base(X):[0.1,0.9], ~other(X):[0,0." +
            std::to_string(5 + i % 5) + "]")));
        corpus.push_back(format(parse_fact("seed_" + std::to_string(i) + "(n" +
                                           std::to_string(i % 4) + ") : [0.5,1] @ [" +
                                           std::to_string(i % 3) + "," + std::to_string(i % 3 + 2) +
                                           "]")));
    }
    ASSERT_GE(corpus.size(), 100u);
    for (const auto& line : corpus) {
        if (line.find("<-") != std::string::npos) {
            EXPECT_EQ(format(parse_rule(line)), line);
        } else {
            EXPECT_EQ(format(parse_fact(line)), line);
        }
    }

    std::mt19937 rng(777);
    const char junk[] = "()[]:,<-~@ #\".0123456789abXY_";
    int rejected = 0;
    for (int i = 0; i < 5000; ++i) {
        std::string s = corpus[rng() % corpus.size()];
        for (int e = 0; e < 1 + static_cast<int>(rng() % 5); ++e) {
            size_t pos = rng() % (s.size() + 1);
            switch (rng() % 3) {
                case 0: s.insert(pos, 1, junk[rng() % (sizeof(junk) - 1)]); break;
                case 1:
                    if (!s.empty()) s.erase(std::min(pos, s.size() - 1), 1);
                    break;
                default:
                    if (!s.empty()) s[std::min(pos, s.size() - 1)] = junk[rng() % (sizeof(junk) - 1)];
            }
        }
        try {
            if (s.find("<-") != std::string::npos)
                parse_rule(s);
            else
                parse_fact(s);
        } catch (const SyntaxError& ex) {
            ASSERT_GE(ex.line, 1);
            ++rejected;
        }
    }
    EXPECT_GT(rejected, 1000);
    report(7, "format/parse is a fixed point on " + std::to_string(corpus.size()) +
                  " corpus lines; " + std::to_string(rejected) +
                  " fuzzed inputs all failed with located errors");
}

TEST(Acceptance, Criterion08_ConversionSemantics) {
    FactConversionOptions snap_lower;
    snap_lower.snap_value = 1.0;
    EXPECT_EQ(pred_to_facts({0.9}, {"c"}, "x", snap_lower, 0)[0].annotation,
              Interval::always_true());
    FactConversionOptions plain;
    EXPECT_EQ(pred_to_facts({0.7}, {"c"}, "x", plain, 0)[0].annotation, Interval::make(0.7, 1.0));
    EXPECT_EQ(pred_to_facts({0.3}, {"c"}, "x", plain, 0)[0].annotation, Interval::unknown());
    EXPECT_EQ(pred_to_facts({0.5}, {"c"}, "x", plain, 0)[0].annotation, Interval::make(0.5, 1.0));
    report(8, "pred_to_facts unit table holds, including the closed threshold boundary");
}

TEST(Acceptance, Criterion09_TypeCheckedGrounding) {
    KnowledgeGraph g;
    for (int i = 0; i < 10; ++i)
        g.add_node("n" + std::to_string(i), (i % 2) ? "sensor" : "machine");
    for (int i = 0; i < 10; ++i)
        g.add_edge("n" + std::to_string(i), "n" + std::to_string((i + 3) % 10));
    Rule rule = parse_rule("alert(X) <-0 reading(X), feeds(X, Y), status(Y)");
    TypeSchema schema;
    schema.set("reading", {"sensor"});
    schema.set("status", {"machine"});

    auto unfiltered = groundings(rule, g);
    auto filtered = groundings(rule, g, &schema);
    auto brute = brute_force_groundings(rule, g, &schema);
    std::set<Substitution> filtered_set(filtered.begin(), filtered.end());
    std::set<Substitution> brute_set(brute.begin(), brute.end());
    EXPECT_EQ(filtered_set, brute_set);
    EXPECT_LT(filtered.size(), unfiltered.size());
    EXPECT_FALSE(unfiltered.empty());
    report(9, "schema-filtered groundings equal the brute-force set (" +
                  std::to_string(filtered.size()) + " of " + std::to_string(unfiltered.size()) +
                  " substitutions)");
}

TEST(Acceptance, Criterion10_RealtimePollerTiming) {
    EngineConfig cfg;
    cfg.horizon = 30;
    cfg.canonical = false;
    Engine engine(load_graph(R"({"nodes":[{"id":"weld_object","type":"object"}]})"),
                  parse_program("repairing(W) <-1 gap(W)\n").rules, {}, cfg,
                  AnnotationRegistry::with_builtins());
    EngineGate gate(std::move(engine));
    ScriptedAdapter adapter({"good", "gap"}, Postprocess::Identity);
    std::vector<PredictionEvent> events(64);
    for (auto& e : events) {
        e.target = "weld_object";
        e.scores = {{"gap", 1.0}};
    }
    ScriptedInputSource source(events);
    PollerConfig poller;
    poller.poll_interval_seconds = 0.5;
    FactConversionOptions opts;
    opts.snap_value = 1.0;
    std::atomic<bool> stop{false};
    std::vector<double> fires;
    std::thread stopper([&] {
        std::this_thread::sleep_for(std::chrono::milliseconds(5100));
        stop.store(true);
    });
    run_poller(poller, adapter, source, opts, gate, stop, "2", "weld_object", &fires);
    stopper.join();
    ASSERT_GE(fires.size(), 8u);
    for (size_t k = 0; k < fires.size(); ++k) {
        double boundary = 0.5 * static_cast<double>(k + 1);
        EXPECT_GE(fires[k], boundary - 0.25) << "fire " << k;
        EXPECT_LE(fires[k], boundary + 0.25) << "fire " << k;
    }
    report(10, "poller fired " + std::to_string(fires.size()) +
                   " times over 5s, each within 0.25s of its interval boundary");
}
