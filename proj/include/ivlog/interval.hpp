#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

namespace ivlog {

class OutOfRange : public std::runtime_error {
public:
    explicit OutOfRange(const std::string& what) : std::runtime_error(what) {}
};

/// A closed subinterval of [0,1], the truth annotation of every atom.
/// [0,0] is certainly false, [1,1] certainly true, [0,1] unknown.
class Interval {
public:
    Interval() : lo_(0.0), up_(1.0) {}

    static Interval make(double lower, double upper) {
        lower = clamp_dust(lower);
        upper = clamp_dust(upper);
        if (!std::isfinite(lower) || !std::isfinite(upper) ||
            lower < 0.0 || upper > 1.0 || lower > upper) {
            throw OutOfRange("invalid interval [" + std::to_string(lower) + "," +
                             std::to_string(upper) + "]");
        }
        Interval v;
        v.lo_ = lower;
        v.up_ = upper;
        return v;
    }

    static Interval unknown() { return make(0.0, 1.0); }
    static Interval always_true() { return make(1.0, 1.0); }
    static Interval always_false() { return make(0.0, 0.0); }

    double lower() const { return lo_; }
    double upper() const { return up_; }

    /// Strong negation: [l,u] -> [1-u, 1-l].
    Interval negate() const { return make(1.0 - up_, 1.0 - lo_); }

    /// True iff this interval is contained in `outer`.
    bool subset_of(const Interval& outer) const {
        return outer.lo_ <= lo_ && up_ <= outer.up_;
    }

    bool is_unknown() const { return lo_ == 0.0 && up_ == 1.0; }

    friend bool operator==(const Interval& a, const Interval& b) {
        return a.lo_ == b.lo_ && a.up_ == b.up_;
    }
    friend bool operator!=(const Interval& a, const Interval& b) { return !(a == b); }

    std::string to_string() const;

private:
    // Absorbs floating-point dust from probability pipelines.
    static double clamp_dust(double x) {
        if (std::fabs(x) <= 1e-12) return 0.0;
        if (std::fabs(x - 1.0) <= 1e-12) return 1.0;
        return x;
    }

    double lo_;
    double up_;
};

inline bool is_subset(const Interval& inner, const Interval& outer) {
    return inner.subset_of(outer);
}

/// [max(lowers), min(uppers)], or nullopt when the intervals are disjoint.
inline std::optional<Interval> intersect(const Interval& a, const Interval& b) {
    double lo = std::max(a.lower(), b.lower());
    double up = std::min(a.upper(), b.upper());
    if (lo > up) return std::nullopt;
    return Interval::make(lo, up);
}

inline bool approx_equal(const Interval& a, const Interval& b, double tol = 1e-9) {
    return std::fabs(a.lower() - b.lower()) <= tol && std::fabs(a.upper() - b.upper()) <= tol;
}

/// Renders one bound with up to 9 significant decimals.
std::string format_bound(double x);

/// Parses the textual form "[l,u]". Throws OutOfRange on malformed input.
Interval parse_interval(const std::string& text);

}  // namespace ivlog
