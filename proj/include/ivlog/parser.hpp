#pragma once

#include <stdexcept>
#include <string>

#include "ivlog/ast.hpp"

namespace ivlog {

class SyntaxError : public std::runtime_error {
public:
    SyntaxError(int line, int column, const std::string& what)
        : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + what),
          line(line),
          column(column) {}
    int line;
    int column;
};

class RangeRestrictionError : public SyntaxError {
public:
    using SyntaxError::SyntaxError;
};

class NonGroundFact : public SyntaxError {
public:
    using SyntaxError::SyntaxError;
};

/// Grammar (one construct per logical line, '#' starts a comment):
///   rule     := atom [":" annspec] "<-" [INT] literal ("," literal)*
///   literal  := ["~"] atom [":" interval]
///   annspec  := interval | IDENT
///   fact     := atom ":" interval ["@" (window | "static")]
///   query    := atom ":" interval
///   atom     := IDENT "(" term ("," term)? ")"
///   interval := "[" NUM "," NUM "]"
///   window   := "[" INT "," INT "]"
Rule parse_rule(const std::string& text, int line = 1);
Fact parse_fact(const std::string& text, int line = 1);
Query parse_query(const std::string& text, int line = 1);

/// Parses a whole program; ids are assigned from source position
/// ("r0", "r1", ... and "f0", "f1", ...). Syntax errors across lines are
/// aggregated into a single SyntaxError listing every location.
Program parse_program(const std::string& text);

}  // namespace ivlog
