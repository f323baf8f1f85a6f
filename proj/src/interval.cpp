#include "ivlog/interval.hpp"

#include <cstdio>
#include <cstdlib>

namespace ivlog {

std::string format_bound(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", x);
    return buf;
}

std::string Interval::to_string() const {
    return "[" + format_bound(lo_) + "," + format_bound(up_) + "]";
}

Interval parse_interval(const std::string& text) {
    const char* p = text.c_str();
    while (*p == ' ' || *p == '\t') ++p;
    if (*p != '[') throw OutOfRange("expected '[' in interval: " + text);
    ++p;
    char* end = nullptr;
    double lo = std::strtod(p, &end);
    if (end == p) throw OutOfRange("expected number in interval: " + text);
    p = end;
    while (*p == ' ') ++p;
    if (*p != ',') throw OutOfRange("expected ',' in interval: " + text);
    ++p;
    double up = std::strtod(p, &end);
    if (end == p) throw OutOfRange("expected number in interval: " + text);
    p = end;
    while (*p == ' ') ++p;
    if (*p != ']') throw OutOfRange("expected ']' in interval: " + text);
    ++p;
    while (*p == ' ' || *p == '\t') ++p;
    if (*p != '\0') throw OutOfRange("trailing characters after interval: " + text);
    return Interval::make(lo, up);
}

}  // namespace ivlog
