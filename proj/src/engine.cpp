#include "ivlog/engine.hpp"

#include <algorithm>
#include <ostream>

namespace ivlog {
namespace {

GroundAtom to_ground(const Atom& atom) {
    GroundAtom g;
    g.predicate = atom.predicate;
    for (const auto& t : atom.args) g.args.push_back(t.name);
    return g;
}

Atom substitute(const Atom& atom, const Substitution& sub) {
    Atom out = atom;
    for (auto& t : out.args) {
        if (t.is_variable()) t = Term::constant(sub.at(t.name));
    }
    return out;
}

}  // namespace

class Engine::SnapshotView : public InterpretationView {
public:
    SnapshotView(const Engine& engine, int t) : engine_(engine), t_(t) {}

    std::optional<Interval> lookup(const GroundAtom& atom) const override {
        if (!engine_.materialized(atom, t_)) return std::nullopt;
        return engine_.effective(atom, t_);
    }

    std::vector<std::pair<GroundAtom, Interval>> by_predicate(
        const std::string& predicate) const override {
        std::map<GroundAtom, Interval> merged;
        auto it = engine_.states_.find(t_);
        if (it != engine_.states_.end()) {
            for (const auto& [atom, v] : it->second)
                if (atom.predicate == predicate) merged[atom] = v;
        }
        for (const auto& [atom, v] : engine_.statics_)
            if (atom.predicate == predicate) merged[atom] = v;
        return {merged.begin(), merged.end()};
    }

    std::vector<std::string> establishment_order(const std::string& label,
                                                 double min_lower) const override {
        std::vector<std::string> order;
        std::set<std::string> seen;
        for (const auto& e : engine_.trace_) {
            if (e.atom.predicate != label || e.atom.args.size() != 1) continue;
            if (e.new_bound.lower() < min_lower) continue;
            if (seen.insert(e.atom.args.front()).second) order.push_back(e.atom.args.front());
        }
        return order;
    }

private:
    const Engine& engine_;
    int t_;
};

Engine::Engine(KnowledgeGraph graph, std::vector<Rule> rules, std::vector<Fact> facts,
               EngineConfig config, AnnotationRegistry registry, const TypeSchema* schema)
    : graph_(std::move(graph)),
      rules_(std::move(rules)),
      window_facts_(std::move(facts)),
      config_(std::move(config)),
      registry_(std::move(registry)) {
    for (size_t i = 0; i < rules_.size(); ++i) {
        for (const auto& sub : groundings(rules_[i], graph_, schema)) {
            GroundRule gr;
            gr.rule_index = i;
            gr.head = to_ground(substitute(rules_[i].head, sub));
            for (const auto& lit : rules_[i].body) {
                GroundLiteral gl;
                gl.atom = to_ground(substitute(lit.atom, sub));
                gl.negated = lit.negated;
                gl.threshold = lit.threshold;
                gl.is_rel = lit.atom.predicate == "rel";
                if (!gl.is_rel) gr.delta_atoms.push_back(gl.atom);
                gr.body.push_back(std::move(gl));
            }
            std::sort(gr.delta_atoms.begin(), gr.delta_atoms.end());
            gr.delta_atoms.erase(std::unique(gr.delta_atoms.begin(), gr.delta_atoms.end()),
                                 gr.delta_atoms.end());
            ground_rules_.push_back(std::move(gr));
        }
    }
    states_[0];
    seed_graph_annotations();
    apply_window_facts(0, true);
}

void Engine::seed_graph_annotations() {
    // Labeled edges describe the pre-existing universe: they enter the
    // baseline directly and do not trigger rules on their own.
    for (const auto& e : graph_.edges()) {
        if (e.label.empty()) continue;
        GroundAtom atom{e.label, {e.from, e.to}};
        states_[0][atom] = Interval::always_true();
        baseline_[atom] = Interval::always_true();
    }
}

void Engine::apply_window_facts(int t, bool initializing) {
    for (const auto& fact : window_facts_) {
        GroundAtom atom = to_ground(fact.atom);
        if (fact.is_static) {
            if (!initializing) continue;
            auto it = statics_.find(atom);
            if (it != statics_.end()) {
                if (it->second != fact.annotation)
                    throw InconsistentFacts("conflicting static facts on " + format(fact.atom));
                continue;
            }
            statics_[atom] = fact.annotation;
            dirty_.insert(atom);
            continue;
        }
        if (fact.from_t > t || t > fact.to_t) continue;
        if (statics_.count(atom)) continue;
        Interval cur = effective(atom, t);
        if (fact.annotation == cur || fact.annotation.is_unknown()) continue;
        if (fact.annotation.subset_of(cur)) {
            states_[t][atom] = fact.annotation;
            dirty_.insert(atom);
            continue;
        }
        if (initializing)
            throw InconsistentFacts("facts at t=0 disagree on " + format(fact.atom) + ": " +
                                    cur.to_string() + " vs " + fact.annotation.to_string());
        std::vector<TraceEntry> rows;
        handle_inconsistency(atom, cur, fact.annotation, fact.id, fact.id, rows);
        if (!rows.empty()) {
            for (auto& r : rows) {
                r.fpo = fpo_counter_;
                trace_.push_back(r);
            }
            ++fpo_counter_;
        }
    }
}

void Engine::advance_time() {
    if (time_ + 1 > config_.horizon) throw HorizonExceeded(time_ + 1);
    const auto prev = states_[time_];
    ++time_;
    auto& cur = states_[time_];
    if (config_.canonical) {
        cur = prev;
    } else {
        for (const auto& [atom, v] : prev) dirty_.insert(atom);
    }
    rule_touched_.clear();
    apply_window_facts(time_, false);
}

Interval Engine::effective(const GroundAtom& atom, int t) const {
    if (t < 0) return Interval::unknown();
    auto sit = statics_.find(atom);
    if (sit != statics_.end()) return sit->second;
    auto mit = states_.find(t);
    if (mit == states_.end()) return Interval::unknown();
    auto it = mit->second.find(atom);
    return it == mit->second.end() ? Interval::unknown() : it->second;
}

bool Engine::materialized(const GroundAtom& atom, int t) const {
    if (statics_.count(atom)) return true;
    auto mit = states_.find(t);
    return mit != states_.end() && mit->second.count(atom) != 0;
}

std::map<GroundAtom, Interval> Engine::materialized_at(int t) const {
    std::map<GroundAtom, Interval> out;
    auto mit = states_.find(t);
    if (mit != states_.end()) out = mit->second;
    for (const auto& [atom, v] : statics_) out[atom] = v;
    return out;
}

std::optional<Interval> Engine::literal_value(const GroundLiteral& lit, int t) const {
    Interval v;
    if (lit.is_rel) {
        v = graph_.rel_annotation(lit.atom.args[0], lit.atom.args[1]);
    } else {
        if (!materialized(lit.atom, t)) return std::nullopt;
        v = effective(lit.atom, t);
    }
    return lit.negated ? v.negate() : v;
}

bool Engine::satisfied(const GroundLiteral& lit, int t) const {
    auto v = literal_value(lit, t);
    return v && v->lower() >= lit.threshold.lower() && v->upper() <= lit.threshold.upper();
}

void Engine::record(std::vector<TraceEntry>& rows, const GroundAtom& atom, const Interval& oldv,
                    const Interval& newv, const std::string& cause, const std::string& source) {
    TraceEntry e;
    e.fpo = 0;  // assigned when the round commits
    e.time = time_;
    e.atom = atom;
    e.old_bound = oldv;
    e.new_bound = newv;
    e.cause = cause;
    e.source = source;
    rows.push_back(std::move(e));
}

void Engine::handle_inconsistency(const GroundAtom& atom, const Interval& current,
                                  const Interval& incoming, const std::string& cause,
                                  const std::string& source, std::vector<TraceEntry>& rows) {
    if (config_.policy == InconsistencyPolicy::FlagAndHalt) {
        halted_ = true;
        halt_report_ = "inconsistency on " + atom.predicate + "(" + atom.entity() +
                       "): current bound " + current.to_string() + ", incoming bound " +
                       incoming.to_string() + " (cause " + cause + ")";
        return;
    }
    record(rows, atom, current, Interval::unknown(), "inconsistency-reset", source);
    statics_[atom] = Interval::unknown();
    states_[time_].erase(atom);
    dirty_.insert(atom);
}

void Engine::check_complements(const GroundAtom& atom, const std::string& source,
                               std::vector<TraceEntry>& rows) {
    for (const auto& [p, q] : config_.complement_pairs) {
        std::string other_pred;
        if (atom.predicate == p)
            other_pred = q;
        else if (atom.predicate == q)
            other_pred = p;
        else
            continue;
        GroundAtom other{other_pred, atom.args};
        if (!materialized(other, time_)) continue;
        Interval self_val = effective(atom, time_);
        Interval other_val = effective(other, time_);
        if (intersect(self_val, other_val.negate())) continue;
        if (config_.policy == InconsistencyPolicy::FlagAndHalt) {
            halted_ = true;
            halt_report_ = "complementary predicates " + p + "/" + q + " conflict on (" +
                           atom.entity() + "): " + self_val.to_string() + " vs " +
                           other_val.to_string();
            return;
        }
        handle_inconsistency(atom, self_val, other_val.negate(), "complement", source, rows);
        handle_inconsistency(other, other_val, self_val.negate(), "complement", source, rows);
    }
}

bool Engine::apply_rule_value(const GroundAtom& atom, const Interval& value,
                              const std::string& cause, const std::string& source,
                              std::vector<TraceEntry>& rows, std::set<GroundAtom>& changed) {
    if (halted_ || statics_.count(atom)) return false;
    Interval cur = effective(atom, time_);
    auto& cell = states_[time_];
    if (value == cur) {
        if (!rule_touched_.count(atom)) {
            record(rows, atom, cur, value, cause, source);
            rule_touched_.insert(atom);
            if (!cell.count(atom)) {
                cell[atom] = value;  // explicit unknown is materialized
                dirty_.insert(atom);
            }
        }
        return false;
    }
    if (value.is_unknown()) return false;  // carries no information
    if (value.subset_of(cur)) {
        record(rows, atom, cur, value, cause, source);
        cell[atom] = value;
        dirty_.insert(atom);
        rule_touched_.insert(atom);
        changed.insert(atom);
        check_complements(atom, source, rows);
        return true;
    }
    handle_inconsistency(atom, cur, value, cause, source, rows);
    return false;
}

bool Engine::apply_fact_value(const Fact& fact, const std::string& source,
                              std::vector<TraceEntry>& rows, std::set<GroundAtom>& changed) {
    if (halted_) return false;
    GroundAtom atom = to_ground(fact.atom);
    if (statics_.count(atom)) return false;
    Interval cur = effective(atom, time_);
    if (fact.is_static) {
        if (fact.annotation != cur) {
            if (!fact.annotation.subset_of(cur)) {
                handle_inconsistency(atom, cur, fact.annotation, fact.id, source, rows);
                return false;
            }
            record(rows, atom, cur, fact.annotation, fact.id, source);
            changed.insert(atom);
        }
        statics_[atom] = fact.annotation;
        states_[time_].erase(atom);
        dirty_.insert(atom);
        return true;
    }
    if (fact.annotation == cur || fact.annotation.is_unknown()) return false;
    if (fact.annotation.subset_of(cur)) {
        record(rows, atom, cur, fact.annotation, fact.id, source);
        states_[time_][atom] = fact.annotation;
        dirty_.insert(atom);
        changed.insert(atom);
        check_complements(atom, source, rows);
        return true;
    }
    handle_inconsistency(atom, cur, fact.annotation, fact.id, source, rows);
    return false;
}

UpdateOutcome Engine::update(const GroundAtom& atom, const Interval& value,
                             const std::string& cause, const std::string& source) {
    if (statics_.count(atom)) return UpdateOutcome::NoChange;
    Interval cur = effective(atom, time_);
    if (value == cur || value.is_unknown()) return UpdateOutcome::NoChange;
    std::vector<TraceEntry> rows;
    std::set<GroundAtom> changed;
    Fact f;
    f.atom.predicate = atom.predicate;
    for (const auto& a : atom.args) f.atom.args.push_back(Term::constant(a));
    f.annotation = value;
    f.id = cause;
    bool applied = apply_fact_value(f, source, rows, changed);
    if (!rows.empty()) {
        for (auto& r : rows) {
            r.fpo = fpo_counter_;
            trace_.push_back(r);
        }
        ++fpo_counter_;
    }
    if (applied) return UpdateOutcome::Changed;
    return UpdateOutcome::Inconsistent;
}

void Engine::force_set(const GroundAtom& atom, const Interval& value) {
    if (statics_.count(atom)) return;
    states_[time_][atom] = value;
    dirty_.insert(atom);
}

std::set<GroundAtom> Engine::baseline_delta() const {
    std::set<GroundAtom> delta;
    for (const auto& atom : dirty_) {
        Interval now = effective(atom, time_);
        auto it = baseline_.find(atom);
        Interval base = it == baseline_.end() ? Interval::unknown() : it->second;
        if (now != base) delta.insert(atom);
    }
    return delta;
}

void Engine::rebuild_baseline() {
    baseline_ = statics_;
    auto mit = states_.find(time_);
    if (mit != states_.end()) {
        for (const auto& [atom, v] : mit->second) {
            if (!statics_.count(atom)) baseline_[atom] = v;
        }
    }
    dirty_.clear();
}

std::vector<TraceEntry> Engine::computation(const std::vector<Fact>& facts,
                                            const std::string& source) {
    std::vector<TraceEntry> out;
    if (halted_) return out;

    std::vector<Scheduled> due;
    auto due_it = scheduled_.find(time_);
    if (due_it != scheduled_.end()) {
        due = std::move(due_it->second);
        scheduled_.erase(due_it);
    }
    std::string comp_source = source;
    if (comp_source.empty() && !due.empty()) comp_source = due.front().source;

    auto commit = [&](std::vector<TraceEntry>& rows) {
        if (rows.empty()) return;
        for (auto& r : rows) {
            r.fpo = fpo_counter_;
            trace_.push_back(r);
            out.push_back(r);
        }
        ++fpo_counter_;
        rows.clear();
    };

    std::vector<TraceEntry> rows;
    std::set<GroundAtom> ignored;
    for (const auto& s : due) {
        if (halted_) break;
        apply_rule_value(s.atom, s.value, s.cause, comp_source, rows, ignored);
    }
    for (const auto& f : facts) {
        if (halted_) break;
        apply_fact_value(f, comp_source, rows, ignored);
    }
    commit(rows);

    std::set<GroundAtom> delta = baseline_delta();
    while (!delta.empty() && !halted_) {
        std::set<GroundAtom> changed;
        for (const auto& gr : ground_rules_) {
            if (halted_) break;
            bool hit = false;
            for (const auto& a : gr.delta_atoms) {
                if (delta.count(a)) {
                    hit = true;
                    break;
                }
            }
            if (!hit) continue;

            std::vector<Interval> body_vals;
            bool ok = true;
            for (const auto& lit : gr.body) {
                auto v = literal_value(lit, time_);
                if (!v || v->lower() < lit.threshold.lower() ||
                    v->upper() > lit.threshold.upper()) {
                    ok = false;
                    break;
                }
                body_vals.push_back(*v);
            }
            if (!ok) continue;

            const Rule& rule = rules_[gr.rule_index];
            Interval head_val;
            if (rule.annotation.kind == AnnotationSpec::Kind::Function) {
                const AnnotationFn* fn = registry_.find(rule.annotation.function_name);
                if (!fn) throw UnknownAnnotationFunction(rule.annotation.function_name);
                SnapshotView view(*this, time_);
                AnnotationContext ctx{std::move(body_vals), view, gr.head};
                head_val = (*fn)(ctx);
            } else {
                head_val = rule.annotation.value;
            }

            if (rule.delta_t == 0) {
                apply_rule_value(gr.head, head_val, rule.id, comp_source, rows, changed);
                continue;
            }
            int target = time_ + rule.delta_t;
            if (target > config_.horizon) {
                warnings_.push_back("rule " + rule.id + " head for " + gr.head.predicate + "(" +
                                    gr.head.entity() + ") lands at t=" + std::to_string(target) +
                                    ", beyond the horizon; discarded");
                continue;
            }
            auto& queue = scheduled_[target];
            bool dup = false;
            for (const auto& s : queue) {
                if (s.atom == gr.head && s.value == head_val && s.cause == rule.id) {
                    dup = true;
                    break;
                }
            }
            if (!dup) queue.push_back({gr.head, head_val, rule.id, comp_source});
        }
        commit(rows);
        delta = std::move(changed);
    }

    rebuild_baseline();
    return out;
}

std::vector<TraceEntry> Engine::inject_and_recompute(const std::vector<Fact>& facts,
                                                     const std::string& source) {
    for (const auto& f : facts) {
        if (!f.atom.ground())
            throw std::invalid_argument("injected fact is not ground: " + format(f.atom));
    }
    return computation(facts, source);
}

std::vector<TraceEntry> Engine::run_pending() {
    auto due_it = scheduled_.find(time_);
    bool due = due_it != scheduled_.end() && !due_it->second.empty();
    if (!due && baseline_delta().empty()) return {};
    return computation({}, "");
}

bool Engine::query(const Query& q, int t) const {
    GroundAtom atom = to_ground(q.atom);
    return effective(atom, t).subset_of(q.bound);
}

bool Engine::query_at_previous(const Query& q) const { return query(q, time_ - 1); }

void Engine::export_tsv(std::ostream& out) const {
    out << "fpo\tnode\tlabel\told_bound\tnew_bound\tsource\n";
    for (const auto& e : trace_) {
        out << e.fpo << '\t' << e.atom.entity() << '\t' << e.atom.predicate << '\t'
            << e.old_bound.to_string() << '\t' << e.new_bound.to_string() << '\t' << e.source
            << '\n';
    }
}

}  // namespace ivlog
