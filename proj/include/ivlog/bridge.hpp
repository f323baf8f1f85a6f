#pragma once

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ivlog/engine.hpp"

namespace ivlog {

class InvalidBounds : public std::runtime_error {
public:
    explicit InvalidBounds(const std::string& what) : std::runtime_error(what) {}
};

class AdapterError : public std::runtime_error {
public:
    explicit AdapterError(const std::string& what) : std::runtime_error(what) {}
};

/// How a classifier probability becomes a fact annotation.
struct FactConversionOptions {
    double threshold = 0.5;
    bool set_lower_bound = true;
    bool set_upper_bound = false;
    std::optional<double> snap_value;
};

/// Numerically stable softmax (max-subtraction).
std::vector<double> softmax(const std::vector<double>& raw);
std::vector<double> sigmoid_each(const std::vector<double>& raw);

enum class Postprocess { Softmax, SigmoidEach, Identity };

/// One scripted (or externally produced) model observation.
struct PredictionEvent {
    int tick = 0;
    std::string target;
    std::map<std::string, double> scores;  // raw score per class name
};

/// Converts probabilities into annotated facts, one per class: at or
/// above the threshold the bound is the snap value (or the probability
/// itself when no snap is configured) on whichever bounds are enabled;
/// below the threshold the fact is an explicit unknown [0,1].
std::vector<Fact> pred_to_facts(const std::vector<double>& probs,
                                const std::vector<std::string>& class_names,
                                const std::string& target, const FactConversionOptions& opts,
                                int t);

/// The three-stage classifier contract: infer -> postprocess -> facts.
class ClassifierAdapter {
public:
    virtual ~ClassifierAdapter() = default;

    /// Raw score vector aligned with class_names().
    virtual std::vector<double> infer(const PredictionEvent& input) = 0;
    virtual const std::vector<std::string>& class_names() const = 0;
    virtual Postprocess postprocess_kind() const { return Postprocess::Softmax; }

    std::vector<double> postprocess(const std::vector<double>& raw) const;
};

/// Uses the event's scripted scores as the raw model output.
class ScriptedAdapter : public ClassifierAdapter {
public:
    ScriptedAdapter(std::vector<std::string> class_names, Postprocess kind)
        : class_names_(std::move(class_names)), kind_(kind) {}

    std::vector<double> infer(const PredictionEvent& input) override;
    const std::vector<std::string>& class_names() const override { return class_names_; }
    Postprocess postprocess_kind() const override { return kind_; }

private:
    std::vector<std::string> class_names_;
    Postprocess kind_;
};

/// Line-delimited JSON protocol with a child process: one request
/// {"input_id": ..., "target": ...} per inference, one response
/// {"scores": {...}} per line.
class ExternalProcessAdapter : public ClassifierAdapter {
public:
    ExternalProcessAdapter(std::vector<std::string> command, std::vector<std::string> class_names,
                           Postprocess kind = Postprocess::Identity);
    ~ExternalProcessAdapter() override;

    std::vector<double> infer(const PredictionEvent& input) override;
    const std::vector<std::string>& class_names() const override { return class_names_; }
    Postprocess postprocess_kind() const override { return kind_; }

private:
    std::vector<std::string> class_names_;
    Postprocess kind_;
    int child_pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
};

/// Pull interface over scripted events. next(tick) hands out the next
/// event once its tick has been reached; nullopt while none is due.
class InputSource {
public:
    virtual ~InputSource() = default;
    virtual std::optional<PredictionEvent> next(int tick) = 0;
    virtual bool exhausted() const = 0;
};

class ScriptedInputSource : public InputSource {
public:
    explicit ScriptedInputSource(std::vector<PredictionEvent> events, bool loop = false)
        : events_(std::move(events)), loop_(loop) {}

    std::optional<PredictionEvent> next(int tick) override;
    bool exhausted() const override { return !loop_ && pos_ >= events_.size(); }

    /// Parses JSON lines {"tick":int,"target":str,"scores":{...}}.
    static std::vector<PredictionEvent> parse_jsonl(const std::string& text);

private:
    std::vector<PredictionEvent> events_;
    size_t pos_ = 0;
    bool loop_ = false;
};

/// Full pipeline: infer, postprocess, convert, inject, recompute.
std::vector<TraceEntry> classify_and_inject(ClassifierAdapter& adapter,
                                            const PredictionEvent& input,
                                            const std::string& target,
                                            const FactConversionOptions& opts, Engine& engine,
                                            const std::string& source);

struct PollerConfig {
    double poll_interval_seconds = 0.5;  // real-time mode
    int poll_interval_ticks = 1;         // deterministic mode
    double phase_seconds = 0.0;          // shifts every real-time poll off the tick boundary
    std::optional<Query> poll_condition;
};

/// Serializes all engine access between concurrent tasks.
class EngineGate {
public:
    explicit EngineGate(Engine engine) : engine_(std::move(engine)) {}

    template <typename Fn>
    auto with_lock(Fn&& fn) {
        std::lock_guard<std::mutex> lock(mutex_);
        return fn(engine_);
    }

private:
    std::mutex mutex_;
    Engine engine_;
};

/// Wall-clock polling loop: every poll_interval_seconds, evaluate the
/// poll condition (fires when satisfied or absent), pull the next input
/// and run the classification pipeline. Ends on stop_signal or when the
/// input source is exhausted. fire_offsets, when given, collects each
/// firing's offset from the loop start in seconds.
void run_poller(const PollerConfig& cfg, ClassifierAdapter& adapter, InputSource& input_source,
                const FactConversionOptions& opts, EngineGate& gate,
                const std::atomic<bool>& stop_signal, const std::string& source,
                const std::string& target, std::vector<double>* fire_offsets = nullptr);

}  // namespace ivlog
