#include "ivlog/bridge.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstring>
#include <sstream>
#include <thread>

#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

namespace ivlog {

std::vector<double> softmax(const std::vector<double>& raw) {
    std::vector<double> out(raw.size());
    double mx = *std::max_element(raw.begin(), raw.end());
    double sum = 0.0;
    for (size_t i = 0; i < raw.size(); ++i) {
        out[i] = std::exp(raw[i] - mx);
        sum += out[i];
    }
    for (auto& v : out) v /= sum;
    return out;
}

std::vector<double> sigmoid_each(const std::vector<double>& raw) {
    std::vector<double> out(raw.size());
    for (size_t i = 0; i < raw.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-raw[i]));
    return out;
}

std::vector<Fact> pred_to_facts(const std::vector<double>& probs,
                                const std::vector<std::string>& class_names,
                                const std::string& target, const FactConversionOptions& opts,
                                int t) {
    if (probs.size() != class_names.size())
        throw InvalidBounds("probability vector does not match the class list");
    if (!opts.set_lower_bound && !opts.set_upper_bound)
        throw InvalidBounds("at least one of the bounds must be set");

    std::vector<Fact> facts;
    facts.reserve(class_names.size());
    for (size_t i = 0; i < class_names.size(); ++i) {
        Fact fact;
        fact.atom.predicate = class_names[i];
        fact.atom.args.push_back(Term::constant(target));
        fact.from_t = fact.to_t = t;
        fact.id = class_names[i] + "(" + target + ")@t" + std::to_string(t);
        double p = probs[i];
        if (p >= opts.threshold) {
            double v = opts.snap_value ? *opts.snap_value : p;
            double lo = opts.set_lower_bound ? v : 0.0;
            double up = opts.set_upper_bound ? v : 1.0;
            try {
                fact.annotation = Interval::make(lo, up);
            } catch (const OutOfRange& e) {
                throw InvalidBounds(e.what());
            }
        } else {
            fact.annotation = Interval::unknown();
        }
        facts.push_back(std::move(fact));
    }
    return facts;
}

std::vector<double> ClassifierAdapter::postprocess(const std::vector<double>& raw) const {
    switch (postprocess_kind()) {
        case Postprocess::Softmax: return softmax(raw);
        case Postprocess::SigmoidEach: return sigmoid_each(raw);
        case Postprocess::Identity: return raw;
    }
    return raw;
}

std::vector<double> ScriptedAdapter::infer(const PredictionEvent& input) {
    std::vector<double> raw(class_names_.size(), 0.0);
    for (size_t i = 0; i < class_names_.size(); ++i) {
        auto it = input.scores.find(class_names_[i]);
        if (it != input.scores.end()) raw[i] = it->second;
    }
    return raw;
}

ExternalProcessAdapter::ExternalProcessAdapter(std::vector<std::string> command,
                                               std::vector<std::string> class_names,
                                               Postprocess kind)
    : class_names_(std::move(class_names)), kind_(kind) {
    if (command.empty()) throw AdapterError("external adapter requires a command");
    int to_pipe[2];
    int from_pipe[2];
    if (pipe(to_pipe) != 0 || pipe(from_pipe) != 0)
        throw AdapterError("failed to create pipes for the external model");
    pid_t pid = fork();
    if (pid < 0) throw AdapterError("failed to fork the external model process");
    if (pid == 0) {
        dup2(to_pipe[0], STDIN_FILENO);
        dup2(from_pipe[1], STDOUT_FILENO);
        close(to_pipe[0]);
        close(to_pipe[1]);
        close(from_pipe[0]);
        close(from_pipe[1]);
        std::vector<char*> argv;
        for (auto& c : command) argv.push_back(c.data());
        argv.push_back(nullptr);
        execvp(argv[0], argv.data());
        _exit(127);
    }
    close(to_pipe[0]);
    close(from_pipe[1]);
    child_pid_ = pid;
    to_child_ = to_pipe[1];
    from_child_ = from_pipe[0];
}

ExternalProcessAdapter::~ExternalProcessAdapter() {
    if (to_child_ >= 0) close(to_child_);
    if (from_child_ >= 0) close(from_child_);
    if (child_pid_ > 0) {
        int status = 0;
        waitpid(child_pid_, &status, 0);
    }
}

std::vector<double> ExternalProcessAdapter::infer(const PredictionEvent& input) {
    nlohmann::json request = {{"input_id", input.tick}, {"target", input.target}};
    std::string line = request.dump() + "\n";
    const char* data = line.c_str();
    size_t left = line.size();
    while (left > 0) {
        ssize_t n = write(to_child_, data, left);
        if (n <= 0) throw AdapterError("external model closed its input");
        data += n;
        left -= static_cast<size_t>(n);
    }
    std::string response;
    char c;
    while (true) {
        ssize_t n = read(from_child_, &c, 1);
        if (n <= 0) throw AdapterError("external model produced no response");
        if (c == '\n') break;
        response += c;
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(response);
    } catch (const nlohmann::json::exception& e) {
        throw AdapterError(std::string("bad response from external model: ") + e.what());
    }
    if (!doc.contains("scores") || !doc["scores"].is_object())
        throw AdapterError("external model response lacks 'scores'");
    std::vector<double> raw(class_names_.size(), 0.0);
    for (size_t i = 0; i < class_names_.size(); ++i) {
        if (doc["scores"].contains(class_names_[i]))
            raw[i] = doc["scores"][class_names_[i]].get<double>();
    }
    return raw;
}

std::optional<PredictionEvent> ScriptedInputSource::next(int tick) {
    if (pos_ >= events_.size()) {
        if (!loop_ || events_.empty()) return std::nullopt;
        pos_ = 0;
    }
    if (events_[pos_].tick > tick) return std::nullopt;
    return events_[pos_++];
}

std::vector<PredictionEvent> ScriptedInputSource::parse_jsonl(const std::string& text) {
    std::vector<PredictionEvent> events;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json doc = nlohmann::json::parse(line);
        PredictionEvent e;
        e.tick = doc.value("tick", 0);
        e.target = doc.value("target", std::string{});
        if (doc.contains("scores"))
            for (auto& [k, v] : doc["scores"].items()) e.scores[k] = v.get<double>();
        events.push_back(std::move(e));
    }
    return events;
}

std::vector<TraceEntry> classify_and_inject(ClassifierAdapter& adapter,
                                            const PredictionEvent& input,
                                            const std::string& target,
                                            const FactConversionOptions& opts, Engine& engine,
                                            const std::string& source) {
    std::vector<double> raw;
    std::vector<double> probs;
    try {
        raw = adapter.infer(input);
        probs = adapter.postprocess(raw);
    } catch (const std::exception& e) {
        throw AdapterError("[" + source + "] " + e.what());
    }
    std::vector<Fact> facts =
        pred_to_facts(probs, adapter.class_names(), target, opts, engine.current_time());
    return engine.inject_and_recompute(facts, source);
}

void run_poller(const PollerConfig& cfg, ClassifierAdapter& adapter, InputSource& input_source,
                const FactConversionOptions& opts, EngineGate& gate,
                const std::atomic<bool>& stop_signal, const std::string& source,
                const std::string& target, std::vector<double>* fire_offsets) {
    using clock = std::chrono::steady_clock;
    auto start = clock::now();
    auto interval = std::chrono::duration<double>(cfg.poll_interval_seconds);
    auto phase = std::chrono::duration<double>(cfg.phase_seconds);
    for (int k = 1;; ++k) {
        std::this_thread::sleep_until(start + phase + k * interval);
        if (stop_signal.load()) return;
        bool keep_going = gate.with_lock([&](Engine& engine) {
            // The condition is checked against the last completed step.
            if (cfg.poll_condition && !engine.query_at_previous(*cfg.poll_condition))
                return true;
            auto input = input_source.next(k);
            if (!input) return !input_source.exhausted();
            if (fire_offsets)
                fire_offsets->push_back(
                    std::chrono::duration<double>(clock::now() - start).count());
            classify_and_inject(adapter, *input, target.empty() ? input->target : target, opts,
                                engine, source);
            return true;
        });
        if (!keep_going) return;
    }
}

}  // namespace ivlog
