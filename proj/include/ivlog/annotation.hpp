#pragma once

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ivlog/interval.hpp"

namespace ivlog {

struct GroundAtom {
    std::string predicate;
    std::vector<std::string> args;

    std::string entity() const {
        std::string out;
        for (size_t i = 0; i < args.size(); ++i) {
            if (i) out += ",";
            out += args[i];
        }
        return out;
    }

    friend bool operator==(const GroundAtom& a, const GroundAtom& b) {
        return a.predicate == b.predicate && a.args == b.args;
    }
    friend bool operator<(const GroundAtom& a, const GroundAtom& b) {
        if (a.predicate != b.predicate) return a.predicate < b.predicate;
        return a.args < b.args;
    }
};

class DuplicateName : public std::runtime_error {
public:
    explicit DuplicateName(const std::string& name)
        : std::runtime_error("annotation function '" + name + "' already registered") {}
};

class UnknownAnnotationFunction : public std::runtime_error {
public:
    explicit UnknownAnnotationFunction(const std::string& name)
        : std::runtime_error("unknown annotation function '" + name + "'") {}
};

class MalformedCardValue : public std::runtime_error {
public:
    explicit MalformedCardValue(const std::string& what) : std::runtime_error(what) {}
};

/// Read-only window onto the interpretation, handed to annotation
/// functions while a rule head is being evaluated.
class InterpretationView {
public:
    virtual ~InterpretationView() = default;

    /// Materialized value, or nullopt for open-world unknowns.
    virtual std::optional<Interval> lookup(const GroundAtom& atom) const = 0;

    /// Every materialized atom of the given predicate, sorted by arguments.
    virtual std::vector<std::pair<GroundAtom, Interval>> by_predicate(
        const std::string& predicate) const = 0;

    /// Entities of unary `label` atoms whose lower bound first reached
    /// `min_lower`, in establishment order.
    virtual std::vector<std::string> establishment_order(const std::string& label,
                                                         double min_lower) const = 0;
};

struct AnnotationContext {
    std::vector<Interval> body_annotations;  // one per body literal, in rule order
    const InterpretationView& snapshot;
    GroundAtom head;
};

using AnnotationFn = std::function<Interval(const AnnotationContext&)>;

class AnnotationRegistry {
public:
    void register_fn(const std::string& name, AnnotationFn fn);
    const AnnotationFn* find(const std::string& name) const;

    /// Registry preloaded with min_tnorm, prod_tnorm, max_tconorm,
    /// lukasiewicz, append_hand and odds_of_losing.
    static AnnotationRegistry with_builtins();

private:
    std::map<std::string, AnnotationFn> fns_;
};

Interval tnorm_min(const AnnotationContext& ctx);
Interval tnorm_product(const AnnotationContext& ctx);
Interval tconorm_max(const AnnotationContext& ctx);
Interval lukasiewicz(const AnnotationContext& ctx);

/// Hand score digits, one per drawn card, each in {3,6,9}. The lower
/// bound renders the digits as the exact decimal 0.d1d2...dn.
struct HandEncoding {
    std::vector<int> digits;

    /// Exact decimal lower bound, paired with an open upper bound of 1.
    Interval to_interval() const;
    int decode() const;  // point total: sum of digits
};

/// Rebuilds the hand from the ordered player_holds establishments
/// (lower >= 0.3) visible in the snapshot.
HandEncoding hand_from_snapshot(const InterpretationView& snapshot);

Interval append_hand(const AnnotationContext& ctx);
Interval odds_of_losing(const AnnotationContext& ctx);

/// Point value by card name: 3 for aces, 9 for face cards, 6 otherwise.
int card_points(const std::string& card_name);

}  // namespace ivlog
