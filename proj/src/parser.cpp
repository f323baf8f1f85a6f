#include "ivlog/parser.hpp"

#include <cctype>
#include <cstdlib>
#include <set>
#include <sstream>

namespace ivlog {
namespace {

struct Token {
    enum Type { Ident, Number, LParen, RParen, LBrack, RBrack, Comma, Colon, At, Tilde, Arrow, End };
    Type type = End;
    std::string text;
    int col = 0;
};

class Lexer {
public:
    Lexer(const std::string& text, int line) : text_(text), line_(line) { advance(); }

    const Token& peek() const { return tok_; }

    Token next() {
        Token t = tok_;
        advance();
        return t;
    }

    Token expect(Token::Type type, const char* what) {
        if (tok_.type != type) fail(std::string("expected ") + what);
        return next();
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw SyntaxError(line_, tok_.col, msg + " (got '" + (tok_.type == Token::End ? "<end>" : tok_.text) + "')");
    }

    int line() const { return line_; }

private:
    void advance() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
        tok_.col = static_cast<int>(pos_) + 1;
        if (pos_ >= text_.size() || text_[pos_] == '#') {
            tok_ = {Token::End, "", tok_.col};
            return;
        }
        char c = text_[pos_];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                ++pos_;
            tok_ = {Token::Ident, text_.substr(start, pos_ - start), tok_.col};
            return;
        }
        if (c == '"') {
            size_t start = ++pos_;
            while (pos_ < text_.size() && text_[pos_] != '"') ++pos_;
            if (pos_ >= text_.size())
                throw SyntaxError(line_, tok_.col, "unterminated quoted constant");
            // Quoted constants lex as identifiers marked by a leading NUL so the
            // parser can tell them from variables regardless of case.
            tok_ = {Token::Ident, std::string(1, '\0') + text_.substr(start, pos_ - start), tok_.col};
            ++pos_;
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            size_t start = pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            if (pos_ < text_.size() && text_[pos_] == '.') {
                ++pos_;
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            }
            tok_ = {Token::Number, text_.substr(start, pos_ - start), tok_.col};
            return;
        }
        if (c == '<' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '-') {
            pos_ += 2;
            tok_ = {Token::Arrow, "<-", tok_.col};
            return;
        }
        Token::Type type;
        switch (c) {
            case '(': type = Token::LParen; break;
            case ')': type = Token::RParen; break;
            case '[': type = Token::LBrack; break;
            case ']': type = Token::RBrack; break;
            case ',': type = Token::Comma; break;
            case ':': type = Token::Colon; break;
            case '@': type = Token::At; break;
            case '~': type = Token::Tilde; break;
            default:
                throw SyntaxError(line_, tok_.col, std::string("unexpected character '") + c + "'");
        }
        ++pos_;
        tok_ = {type, std::string(1, c), tok_.col};
    }

    const std::string& text_;
    int line_;
    size_t pos_ = 0;
    Token tok_;
};

Term parse_term(Lexer& lx) {
    Token t = lx.expect(Token::Ident, "constant or variable");
    if (!t.text.empty() && t.text[0] == '\0') return Term::constant(t.text.substr(1));
    if (std::isupper(static_cast<unsigned char>(t.text[0]))) return Term::variable(t.text);
    return Term::constant(t.text);
}

Atom parse_atom(Lexer& lx) {
    Token name = lx.expect(Token::Ident, "predicate");
    if (!name.text.empty() && name.text[0] == '\0')
        throw SyntaxError(lx.line(), name.col, "predicate must not be quoted");
    Atom atom;
    atom.predicate = name.text;
    lx.expect(Token::LParen, "'('");
    atom.args.push_back(parse_term(lx));
    if (lx.peek().type == Token::Comma) {
        lx.next();
        atom.args.push_back(parse_term(lx));
    }
    if (lx.peek().type == Token::Comma)
        lx.fail("predicates take at most two arguments");
    lx.expect(Token::RParen, "')'");
    return atom;
}

double parse_number(Lexer& lx) {
    Token t = lx.expect(Token::Number, "number");
    return std::strtod(t.text.c_str(), nullptr);
}

Interval parse_interval_tokens(Lexer& lx) {
    Token open = lx.expect(Token::LBrack, "'['");
    double lo = parse_number(lx);
    lx.expect(Token::Comma, "','");
    double up = parse_number(lx);
    lx.expect(Token::RBrack, "']'");
    try {
        return Interval::make(lo, up);
    } catch (const OutOfRange& e) {
        throw SyntaxError(lx.line(), open.col, e.what());
    }
}

Literal parse_literal(Lexer& lx) {
    Literal lit;
    if (lx.peek().type == Token::Tilde) {
        lx.next();
        lit.negated = true;
    }
    lit.atom = parse_atom(lx);
    if (lx.peek().type == Token::Colon) {
        lx.next();
        lit.threshold = parse_interval_tokens(lx);
    }
    return lit;
}

int parse_window_bound(Lexer& lx) {
    Token t = lx.expect(Token::Number, "timestep");
    if (t.text.find('.') != std::string::npos)
        throw SyntaxError(lx.line(), t.col, "timestep must be an integer");
    return static_cast<int>(std::strtol(t.text.c_str(), nullptr, 10));
}

}  // namespace

Rule parse_rule(const std::string& text, int line) {
    Lexer lx(text, line);
    Rule rule;
    rule.head = parse_atom(lx);
    if (lx.peek().type == Token::Colon) {
        lx.next();
        if (lx.peek().type == Token::LBrack) {
            rule.annotation = AnnotationSpec::constant(parse_interval_tokens(lx));
        } else {
            Token fn = lx.expect(Token::Ident, "interval or annotation function name");
            rule.annotation = AnnotationSpec::function(fn.text);
        }
    }
    lx.expect(Token::Arrow, "'<-'");
    if (lx.peek().type == Token::Number) {
        Token t = lx.next();
        if (t.text.find('.') != std::string::npos)
            throw SyntaxError(line, t.col, "rule delay must be an integer");
        rule.delta_t = static_cast<int>(std::strtol(t.text.c_str(), nullptr, 10));
    }
    rule.body.push_back(parse_literal(lx));
    while (lx.peek().type == Token::Comma) {
        lx.next();
        rule.body.push_back(parse_literal(lx));
    }
    if (lx.peek().type != Token::End) lx.fail("expected end of rule");

    std::set<std::string> body_vars;
    for (const auto& lit : rule.body)
        for (const auto& t : lit.atom.args)
            if (t.is_variable()) body_vars.insert(t.name);
    for (const auto& t : rule.head.args)
        if (t.is_variable() && !body_vars.count(t.name))
            throw RangeRestrictionError(line, 1,
                                        "head variable '" + t.name + "' does not appear in the body");
    return rule;
}

Fact parse_fact(const std::string& text, int line) {
    Lexer lx(text, line);
    Fact fact;
    fact.atom = parse_atom(lx);
    lx.expect(Token::Colon, "':'");
    fact.annotation = parse_interval_tokens(lx);
    if (lx.peek().type == Token::At) {
        lx.next();
        if (lx.peek().type == Token::Ident) {
            Token t = lx.next();
            if (t.text != "static")
                throw SyntaxError(line, t.col, "expected 'static' or a time window");
            fact.is_static = true;
        } else {
            Token open = lx.expect(Token::LBrack, "'[' or 'static'");
            fact.from_t = parse_window_bound(lx);
            lx.expect(Token::Comma, "','");
            fact.to_t = parse_window_bound(lx);
            lx.expect(Token::RBrack, "']'");
            if (fact.from_t > fact.to_t)
                throw SyntaxError(line, open.col, "window start exceeds window end");
        }
    }
    if (lx.peek().type != Token::End) lx.fail("expected end of fact");
    if (!fact.atom.ground())
        throw NonGroundFact(line, 1, "facts must not contain variables");
    return fact;
}

Query parse_query(const std::string& text, int line) {
    Lexer lx(text, line);
    Query q;
    q.atom = parse_atom(lx);
    lx.expect(Token::Colon, "':'");
    q.bound = parse_interval_tokens(lx);
    if (lx.peek().type != Token::End) lx.fail("expected end of query");
    if (!q.atom.ground())
        throw NonGroundFact(line, 1, "queries must be ground");
    return q;
}

Program parse_program(const std::string& text) {
    Program prog;
    std::vector<std::string> errors;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        size_t first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        // Anything with an arrow is a rule; everything else is a fact.
        bool is_rule = line.find("<-") != std::string::npos;
        try {
            if (is_rule) {
                Rule r = parse_rule(line, line_no);
                r.id = "r" + std::to_string(prog.rules.size());
                prog.rules.push_back(std::move(r));
            } else {
                Fact f = parse_fact(line, line_no);
                f.id = "f" + std::to_string(prog.facts.size());
                prog.facts.push_back(std::move(f));
            }
        } catch (const SyntaxError& e) {
            errors.push_back(e.what());
        }
    }
    if (!errors.empty()) {
        std::string combined;
        for (size_t i = 0; i < errors.size(); ++i) {
            if (i) combined += "; ";
            combined += errors[i];
        }
        throw SyntaxError(1, 1, combined);
    }
    return prog;
}

}  // namespace ivlog
