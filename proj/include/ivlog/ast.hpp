#pragma once

#include <string>
#include <vector>

#include "ivlog/interval.hpp"

namespace ivlog {

/// Variables begin with an uppercase letter; constants begin lowercase
/// or are written quoted.
struct Term {
    enum class Kind { Constant, Variable };
    Kind kind = Kind::Constant;
    std::string name;

    static Term constant(std::string n) { return {Kind::Constant, std::move(n)}; }
    static Term variable(std::string n) { return {Kind::Variable, std::move(n)}; }
    bool is_variable() const { return kind == Kind::Variable; }

    friend bool operator==(const Term& a, const Term& b) {
        return a.kind == b.kind && a.name == b.name;
    }
};

/// Arity 1 = node label, arity 2 = edge label.
struct Atom {
    std::string predicate;
    std::vector<Term> args;

    bool ground() const {
        for (const auto& t : args)
            if (t.is_variable()) return false;
        return true;
    }

    friend bool operator==(const Atom& a, const Atom& b) {
        return a.predicate == b.predicate && a.args == b.args;
    }
};

struct Literal {
    Atom atom;
    bool negated = false;
    Interval threshold = Interval::always_true();

    friend bool operator==(const Literal& a, const Literal& b) {
        return a.atom == b.atom && a.negated == b.negated && a.threshold == b.threshold;
    }
};

struct AnnotationSpec {
    enum class Kind { ConstantInterval, Function };
    Kind kind = Kind::ConstantInterval;
    Interval value = Interval::always_true();
    std::string function_name;

    static AnnotationSpec constant(Interval v) {
        AnnotationSpec s;
        s.kind = Kind::ConstantInterval;
        s.value = v;
        return s;
    }
    static AnnotationSpec function(std::string name) {
        AnnotationSpec s;
        s.kind = Kind::Function;
        s.function_name = std::move(name);
        return s;
    }

    friend bool operator==(const AnnotationSpec& a, const AnnotationSpec& b) {
        return a.kind == b.kind && a.value == b.value && a.function_name == b.function_name;
    }
};

struct Rule {
    Atom head;
    AnnotationSpec annotation;  // defaults to constant [1,1]
    int delta_t = 0;
    std::vector<Literal> body;
    std::string id;

    friend bool operator==(const Rule& a, const Rule& b) {
        return a.head == b.head && a.annotation == b.annotation && a.delta_t == b.delta_t &&
               a.body == b.body;
    }
};

struct Fact {
    Atom atom;  // must be ground
    Interval annotation = Interval::always_true();
    int from_t = 0;
    int to_t = 0;
    bool is_static = false;
    std::string id;

    friend bool operator==(const Fact& a, const Fact& b) {
        return a.atom == b.atom && a.annotation == b.annotation && a.from_t == b.from_t &&
               a.to_t == b.to_t && a.is_static == b.is_static;
    }
};

struct Query {
    Atom atom;  // must be ground
    Interval bound = Interval::always_true();
};

struct Program {
    std::vector<Rule> rules;
    std::vector<Fact> facts;
};

std::string format(const Term& t);
std::string format(const Atom& a);
std::string format(const Literal& l);
std::string format(const Rule& r);
std::string format(const Fact& f);
std::string format(const Query& q);

}  // namespace ivlog
