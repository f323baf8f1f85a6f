#include "ivlog/annotation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace ivlog {

void AnnotationRegistry::register_fn(const std::string& name, AnnotationFn fn) {
    if (fns_.count(name)) throw DuplicateName(name);
    fns_[name] = std::move(fn);
}

const AnnotationFn* AnnotationRegistry::find(const std::string& name) const {
    auto it = fns_.find(name);
    return it == fns_.end() ? nullptr : &it->second;
}

AnnotationRegistry AnnotationRegistry::with_builtins() {
    AnnotationRegistry r;
    r.register_fn("min_tnorm", tnorm_min);
    r.register_fn("prod_tnorm", tnorm_product);
    r.register_fn("max_tconorm", tconorm_max);
    r.register_fn("lukasiewicz", lukasiewicz);
    r.register_fn("append_hand", append_hand);
    r.register_fn("odds_of_losing", odds_of_losing);
    return r;
}

Interval tnorm_min(const AnnotationContext& ctx) {
    double lo = 1.0, up = 1.0;
    for (const auto& a : ctx.body_annotations) {
        lo = std::min(lo, a.lower());
        up = std::min(up, a.upper());
    }
    return Interval::make(lo, up);
}

Interval tnorm_product(const AnnotationContext& ctx) {
    double lo = 1.0, up = 1.0;
    for (const auto& a : ctx.body_annotations) {
        lo *= a.lower();
        up *= a.upper();
    }
    return Interval::make(lo, up);
}

Interval tconorm_max(const AnnotationContext& ctx) {
    double lo = 0.0, up = 0.0;
    for (const auto& a : ctx.body_annotations) {
        lo = std::max(lo, a.lower());
        up = std::max(up, a.upper());
    }
    return Interval::make(lo, up);
}

Interval lukasiewicz(const AnnotationContext& ctx) {
    double lo = 0.0, up = 0.0;
    double n = static_cast<double>(ctx.body_annotations.size());
    for (const auto& a : ctx.body_annotations) {
        lo += a.lower();
        up += a.upper();
    }
    return Interval::make(std::max(0.0, lo - (n - 1.0)), std::max(0.0, up - (n - 1.0)));
}

Interval HandEncoding::to_interval() const {
    if (digits.empty()) return Interval::unknown();
    // The decimal string keeps the lower bound exact; binary arithmetic
    // would drift after a few appended digits.
    std::string text = "0.";
    for (int d : digits) text += static_cast<char>('0' + d);
    return Interval::make(std::strtod(text.c_str(), nullptr), 1.0);
}

int HandEncoding::decode() const {
    int total = 0;
    for (int d : digits) total += d;
    return total;
}

HandEncoding hand_from_snapshot(const InterpretationView& snapshot) {
    HandEncoding hand;
    for (const auto& entity : snapshot.establishment_order("player_holds", 0.3)) {
        auto value = snapshot.lookup({"player_holds", {entity}});
        if (!value) continue;  // reset since establishment
        long digit = std::lround(10.0 * value->lower());
        if (digit != 3 && digit != 6 && digit != 9)
            throw MalformedCardValue("player_holds(" + entity + ") lower bound " +
                                     format_bound(value->lower()) + " is not a card value");
        hand.digits.push_back(static_cast<int>(digit));
    }
    return hand;
}

Interval append_hand(const AnnotationContext& ctx) {
    return hand_from_snapshot(ctx.snapshot).to_interval();
}

Interval odds_of_losing(const AnnotationContext& ctx) {
    int total = hand_from_snapshot(ctx.snapshot).decode();
    int remaining = 0;
    int risky = 0;
    for (const auto& [atom, value] : ctx.snapshot.by_predicate("deck_holds")) {
        if (value.lower() < 0.3) continue;
        ++remaining;
        if (total + card_points(atom.args.front()) > 42) ++risky;
    }
    if (remaining == 0) return Interval::always_true();
    return Interval::make(static_cast<double>(risky) / static_cast<double>(remaining), 1.0);
}

int card_points(const std::string& card_name) {
    std::string rank = card_name.substr(0, card_name.find('_'));
    if (rank == "ace") return 3;
    if (rank == "jack" || rank == "queen" || rank == "king") return 9;
    return 6;
}

}  // namespace ivlog
