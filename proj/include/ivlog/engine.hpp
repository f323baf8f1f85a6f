#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ivlog/annotation.hpp"
#include "ivlog/ast.hpp"
#include "ivlog/graph.hpp"
#include "ivlog/interval.hpp"

namespace ivlog {

class HorizonExceeded : public std::runtime_error {
public:
    explicit HorizonExceeded(int t) : std::runtime_error("timestep " + std::to_string(t) + " exceeds the horizon") {}
};

class InconsistentFacts : public std::runtime_error {
public:
    explicit InconsistentFacts(const std::string& what) : std::runtime_error(what) {}
};

enum class InconsistencyPolicy { FlagAndHalt, ResetToUnknownStatic };

struct EngineConfig {
    int horizon = 0;
    bool canonical = true;
    InconsistencyPolicy policy = InconsistencyPolicy::ResetToUnknownStatic;
    std::vector<std::pair<std::string, std::string>> complement_pairs;
};

/// One recorded bound change. `old_bound == new_bound` appears only on
/// the first head evaluation of an atom within a timestep, which is how
/// an uninformative derivation still shows up in the trace.
struct TraceEntry {
    int fpo = 0;
    int time = 0;  // kept for replay; the TSV export omits it
    GroundAtom atom;
    Interval old_bound;
    Interval new_bound;
    std::string cause;  // rule id, fact id, or "inconsistency-reset"
    std::string source;
};

enum class UpdateOutcome { NoChange, Changed, Inconsistent };

/// Time-indexed interpretation store with the fixpoint operator and the
/// explainable trace.
///
/// Rule evaluation is delta-driven: a grounded rule is re-evaluated only
/// when one of its body atoms changed value since the previous round (or
/// since the previous computation for the first round). A body literal is
/// satisfied only when its atom has been explicitly materialized and its
/// effective interval lies within the literal threshold. Each evaluation
/// round that records at least one trace entry consumes one FPO index.
///
/// The engine is exclusively owned: callers serialize all mutation through
/// one access point (the deterministic scheduler, or a mutex-guarded gate
/// in real-time mode).
class Engine {
public:
    Engine(KnowledgeGraph graph, std::vector<Rule> rules, std::vector<Fact> facts,
           EngineConfig config, AnnotationRegistry registry, const TypeSchema* schema = nullptr);

    int current_time() const { return time_; }
    const EngineConfig& config() const { return config_; }
    const KnowledgeGraph& graph() const { return graph_; }

    /// Moves the logical clock one step. Canonical mode persists bounds,
    /// non-canonical resets non-static entries; facts windowed at the new
    /// time are applied silently.
    void advance_time();

    /// Applies facts at the current time, then runs the fixpoint
    /// computation. Returns the trace entries it produced.
    std::vector<TraceEntry> inject_and_recompute(const std::vector<Fact>& facts,
                                                 const std::string& source);

    /// Runs the fixpoint computation when scheduled rule heads are due or
    /// silent fact applications left unprocessed deltas; otherwise a no-op.
    std::vector<TraceEntry> run_pending();

    /// Driver-level override that bypasses the update discipline and the
    /// trace; used for out-of-band state bookkeeping (e.g. deck removal).
    void force_set(const GroundAtom& atom, const Interval& value);

    UpdateOutcome update(const GroundAtom& atom, const Interval& value, const std::string& cause,
                         const std::string& source);

    bool query(const Query& q, int t) const;
    /// Evaluates against the state at the end of the previous timestep
    /// (what a poller saw during the last interval).
    bool query_at_previous(const Query& q) const;

    Interval effective(const GroundAtom& atom, int t) const;
    bool materialized(const GroundAtom& atom, int t) const;
    bool is_static(const GroundAtom& atom) const { return statics_.count(atom) != 0; }

    /// Materialized (non-static) entries at time t, plus the static layer.
    std::map<GroundAtom, Interval> materialized_at(int t) const;
    const std::map<GroundAtom, Interval>& statics() const { return statics_; }

    const std::vector<TraceEntry>& trace() const { return trace_; }
    int fpo_count() const { return fpo_counter_; }
    void export_tsv(std::ostream& out) const;

    bool halted() const { return halted_; }
    const std::string& halt_report() const { return halt_report_; }
    const std::vector<std::string>& warnings() const { return warnings_; }

private:
    struct GroundLiteral {
        GroundAtom atom;
        bool negated = false;
        Interval threshold;
        bool is_rel = false;
    };
    struct GroundRule {
        size_t rule_index = 0;
        GroundAtom head;
        std::vector<GroundLiteral> body;
        std::vector<GroundAtom> delta_atoms;  // non-rel body atoms, sorted
    };
    struct Scheduled {
        GroundAtom atom;
        Interval value;
        std::string cause;
        std::string source;
    };

    class SnapshotView;

    void seed_graph_annotations();
    void apply_window_facts(int t, bool initializing);
    void apply_fact(const Fact& fact, bool initializing);

    std::optional<Interval> literal_value(const GroundLiteral& lit, int t) const;
    bool satisfied(const GroundLiteral& lit, int t) const;

    std::vector<TraceEntry> computation(const std::vector<Fact>& facts, const std::string& source);
    bool apply_rule_value(const GroundAtom& atom, const Interval& value, const std::string& cause,
                          const std::string& source, std::vector<TraceEntry>& rows,
                          std::set<GroundAtom>& changed);
    bool apply_fact_value(const Fact& fact, const std::string& source,
                          std::vector<TraceEntry>& rows, std::set<GroundAtom>& changed);
    void record(std::vector<TraceEntry>& rows, const GroundAtom& atom, const Interval& oldv,
                const Interval& newv, const std::string& cause, const std::string& source);
    void handle_inconsistency(const GroundAtom& atom, const Interval& current,
                              const Interval& incoming, const std::string& cause,
                              const std::string& source, std::vector<TraceEntry>& rows);
    void check_complements(const GroundAtom& atom, const std::string& source,
                           std::vector<TraceEntry>& rows);
    void rebuild_baseline();
    std::set<GroundAtom> baseline_delta() const;

    KnowledgeGraph graph_;
    std::vector<Rule> rules_;
    std::vector<Fact> window_facts_;
    EngineConfig config_;
    AnnotationRegistry registry_;
    std::vector<GroundRule> ground_rules_;

    int time_ = 0;
    int fpo_counter_ = 0;
    std::map<int, std::map<GroundAtom, Interval>> states_;
    std::map<GroundAtom, Interval> statics_;
    std::map<GroundAtom, Interval> baseline_;
    std::set<GroundAtom> dirty_;
    std::set<GroundAtom> rule_touched_;  // cleared each timestep
    std::map<int, std::vector<Scheduled>> scheduled_;
    std::vector<TraceEntry> trace_;
    std::vector<std::string> warnings_;
    bool halted_ = false;
    std::string halt_report_;
};

}  // namespace ivlog
