#include "ivlog/parser.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "ivlog/scenario.hpp"

using namespace ivlog;

namespace {

std::string read_data(const std::string& rel) {
    std::ifstream in(std::string(IVLOG_DATA_DIR) + "/" + rel);
    EXPECT_TRUE(in.good()) << rel;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(ParseRule, DelayedUnaryRule) {
    Rule r = parse_rule("repairing(W) <-1 gap(W)");
    EXPECT_EQ(r.head.predicate, "repairing");
    ASSERT_EQ(r.head.args.size(), 1u);
    EXPECT_TRUE(r.head.args[0].is_variable());
    EXPECT_EQ(r.delta_t, 1);
    ASSERT_EQ(r.body.size(), 1u);
    EXPECT_EQ(r.body[0].atom.predicate, "gap");
    EXPECT_EQ(r.body[0].threshold, Interval::always_true());
    EXPECT_EQ(r.annotation.kind, AnnotationSpec::Kind::ConstantInterval);
    EXPECT_EQ(r.annotation.value, Interval::always_true());
}

TEST(ParseRule, FunctionAnnotatedHead) {
    Rule r = parse_rule("hand_as_point_vals(hand) : append_hand <-0 player_holds(Card):[0.3,1]");
    EXPECT_EQ(r.annotation.kind, AnnotationSpec::Kind::Function);
    EXPECT_EQ(r.annotation.function_name, "append_hand");
    EXPECT_EQ(r.delta_t, 0);
    EXPECT_EQ(r.body[0].threshold, Interval::make(0.3, 1.0));
    EXPECT_FALSE(r.head.args[0].is_variable());
}

TEST(ParseRule, TwoLiteralBody) {
    Rule r = parse_rule("defective(W) <-1 gap(W), repairing(W)");
    ASSERT_EQ(r.body.size(), 2u);
    EXPECT_EQ(r.body[1].atom.predicate, "repairing");
}

TEST(ParseRule, Defaults) {
    Rule r = parse_rule("p(X) <- q(X)");
    EXPECT_EQ(r.delta_t, 0);
    Rule annotated = parse_rule("player_holds(two_clubs) : [0.6,1] <-0 two_clubs(card_drawn_obj)");
    EXPECT_EQ(annotated.annotation.value, Interval::make(0.6, 1.0));
}

TEST(ParseRule, NegationAndQuotedConstants) {
    Rule r = parse_rule("p(X) <-0 ~q(X):[0.2,0.8], e(X,\"Odd Node\")");
    EXPECT_TRUE(r.body[0].negated);
    EXPECT_EQ(r.body[1].atom.args[1].name, "Odd Node");
    EXPECT_FALSE(r.body[1].atom.args[1].is_variable());
}

TEST(ParseRule, Errors) {
    EXPECT_THROW(parse_rule("p(X,Y,Z) <- q(X)"), SyntaxError);
    EXPECT_THROW(parse_rule("p(X) <--1 q(X)"), SyntaxError);
    EXPECT_THROW(parse_rule("p(X) <- q(X):[0.9,0.1]"), SyntaxError);
    EXPECT_THROW(parse_rule("p(X) <- q(X):[0,2]"), SyntaxError);
    EXPECT_THROW(parse_rule("p(X) <-"), SyntaxError);
    EXPECT_THROW(parse_rule("p(X) <- q(Y)"), RangeRestrictionError);
    try {
        parse_rule("p(X) <- q(X:", 4);
        FAIL();
    } catch (const SyntaxError& e) {
        EXPECT_EQ(e.line, 4);
        EXPECT_GT(e.column, 0);
    }
}

TEST(ParseFact, Examples) {
    Fact windowed = parse_fact("gap(weld_object) : [1,1] @ [1,1]");
    EXPECT_EQ(windowed.from_t, 1);
    EXPECT_EQ(windowed.to_t, 1);
    EXPECT_EQ(windowed.annotation, Interval::always_true());

    Fact at_zero = parse_fact("good(weld_object) : [1,1]");
    EXPECT_EQ(at_zero.from_t, 0);
    EXPECT_EQ(at_zero.to_t, 0);
    EXPECT_FALSE(at_zero.is_static);

    Fact static_fact = parse_fact("deck_holds(two_clubs, full_deck) : [1,1] @ static");
    EXPECT_TRUE(static_fact.is_static);

    EXPECT_THROW(parse_fact("gap(W) : [1,1]"), NonGroundFact);
    EXPECT_THROW(parse_fact("gap(weld_object) : [1,1] @ [2,1]"), SyntaxError);
}

TEST(Format, Canonicalization) {
    EXPECT_EQ(format(parse_rule("repairing(W)<-1 gap(W)")), "repairing(W) <-1 gap(W):[1,1]");
    Fact f = parse_fact("p(a) : [0,1]");
    EXPECT_EQ(format(f), "p(a) : [0,1] @ [0,0]");
    Query q = parse_query("defective(weld_object):[1,1]");
    EXPECT_EQ(format(q), "defective(weld_object) : [1,1]");
}

TEST(ParseProgram, WeldingAndCardPrograms) {
    Program welding = parse_program(read_data("welding/program.ivl"));
    EXPECT_EQ(welding.rules.size(), 2u);
    EXPECT_EQ(welding.facts.size(), 0u);
    EXPECT_EQ(welding.rules[0].id, "r0");

    Program card = parse_program(read_data("cardgame/program.ivl"));
    EXPECT_EQ(card.rules.size(), 54u);
    EXPECT_EQ(card.rules[52].annotation.function_name, "append_hand");
    EXPECT_EQ(card.rules[53].annotation.function_name, "odds_of_losing");
}

TEST(ParseProgram, CommentsAndEmpty) {
    Program empty = parse_program("");
    EXPECT_TRUE(empty.rules.empty());
    EXPECT_TRUE(empty.facts.empty());

    Program prog = parse_program("# comment\n\np(a) : [1,1]\nq(X) <- p(X)  # trailing comment\n");
    EXPECT_EQ(prog.rules.size(), 1u);
    EXPECT_EQ(prog.facts.size(), 1u);
}

TEST(ParseProgram, AggregatesErrorsWithLocations) {
    try {
        parse_program("p(a) : [1,1]\np(X,Y,Z) <- q(X)\nbroken line\n");
        FAIL();
    } catch (const SyntaxError& e) {
        std::string what = e.what();
        EXPECT_NE(what.find("2:"), std::string::npos);
        EXPECT_NE(what.find("3:"), std::string::npos);
    }
}

TEST(RoundTrip, FormatParseIsAFixedPointOnTheCorpus) {
    std::vector<std::string> corpus;
    for (const auto& text : {std::string("welding/program.ivl"), std::string("cardgame/program.ivl")}) {
        Program prog = parse_program(read_data(text));
        for (const auto& r : prog.rules) corpus.push_back(format(r));
        for (const auto& f : prog.facts) corpus.push_back(format(f));
    }
    corpus.push_back(format(parse_rule("p(X) : min_tnorm <-2 q(X):[0.5,1], ~r(X):[0,0.5]")));
    corpus.push_back(format(parse_fact("e(a,b) : [0.25,0.75] @ [1,3]")));
    corpus.push_back(format(parse_fact("p(\"A weird name\") : [0,0] @ static")));
    for (int i = 0; i < 50; ++i)
        corpus.push_back(format(parse_rule("p_" + std::to_string(i) + "(X) <-" +
                                           std::to_string(i % 3) + " q(X):[0." +
                                           std::to_string(i % 10) + ",1]")));
    ASSERT_GE(corpus.size(), 100u);
    for (const auto& line : corpus) {
        if (line.find("<-") != std::string::npos) {
            Rule r = parse_rule(line);
            EXPECT_EQ(format(r), line);
        } else {
            Fact f = parse_fact(line);
            EXPECT_EQ(format(f), line);
        }
    }
}

TEST(Fuzz, MutatedInputsAlwaysFailWithLocatedErrorsOrParse) {
    std::mt19937 rng(99);
    const std::string seeds[] = {
        "repairing(W) <-1 gap(W)",
        "odds_of_losing(hand) : odds_of_losing <-0 a(hand):[0,1], deck_holds(C,full_deck):[0.3,1]",
        "gap(weld_object) : [1,1] @ [1,1]",
        "p(\"x y\") : [0.5,0.75] @ static",
    };
    const char junk[] = "()[]:,<-~@#.0123456789abcXYZ \"";
    int parsed = 0, rejected = 0;
    for (int i = 0; i < 3000; ++i) {
        std::string s = seeds[rng() % 4];
        int edits = 1 + static_cast<int>(rng() % 4);
        for (int e = 0; e < edits; ++e) {
            size_t pos = rng() % (s.size() + 1);
            switch (rng() % 3) {
                case 0: s.insert(pos, 1, junk[rng() % (sizeof(junk) - 1)]); break;
                case 1:
                    if (!s.empty()) s.erase(std::min(pos, s.size() - 1), 1);
                    break;
                default:
                    if (!s.empty()) s[std::min(pos, s.size() - 1)] = junk[rng() % (sizeof(junk) - 1)];
            }
        }
        try {
            if (s.find("<-") != std::string::npos) {
                parse_rule(s);
            } else {
                parse_fact(s);
            }
            ++parsed;
        } catch (const SyntaxError& e) {
            EXPECT_GE(e.line, 1);
            EXPECT_GE(e.column, 0);
            ++rejected;
        }
        // anything else escaping would crash the test binary
    }
    EXPECT_GT(rejected, 0);
    EXPECT_GT(parsed, 0);
}
