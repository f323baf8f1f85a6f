#include "ivlog/ast.hpp"

#include <cctype>

namespace ivlog {
namespace {

bool plain_constant(const std::string& name) {
    if (name.empty()) return false;
    if (!std::islower(static_cast<unsigned char>(name[0])) && name[0] != '_') return false;
    for (char c : name)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
    return true;
}

}  // namespace

std::string format(const Term& t) {
    if (t.is_variable() || plain_constant(t.name)) return t.name;
    return "\"" + t.name + "\"";
}

std::string format(const Atom& a) {
    std::string out = a.predicate + "(";
    for (size_t i = 0; i < a.args.size(); ++i) {
        if (i) out += ",";
        out += format(a.args[i]);
    }
    return out + ")";
}

std::string format(const Literal& l) {
    std::string out = l.negated ? "~" : "";
    return out + format(l.atom) + ":" + l.threshold.to_string();
}

std::string format(const Rule& r) {
    std::string out = format(r.head);
    if (r.annotation.kind == AnnotationSpec::Kind::Function) {
        out += " : " + r.annotation.function_name;
    } else if (r.annotation.value != Interval::always_true()) {
        out += " : " + r.annotation.value.to_string();
    }
    out += " <-" + std::to_string(r.delta_t) + " ";
    for (size_t i = 0; i < r.body.size(); ++i) {
        if (i) out += ", ";
        out += format(r.body[i]);
    }
    return out;
}

std::string format(const Fact& f) {
    std::string out = format(f.atom) + " : " + f.annotation.to_string() + " @ ";
    if (f.is_static) return out + "static";
    return out + "[" + std::to_string(f.from_t) + "," + std::to_string(f.to_t) + "]";
}

std::string format(const Query& q) {
    return format(q.atom) + " : " + q.bound.to_string();
}

}  // namespace ivlog
