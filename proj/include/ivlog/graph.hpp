#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ivlog/ast.hpp"

namespace ivlog {

class SchemaError : public std::runtime_error {
public:
    explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

class DanglingEdge : public SchemaError {
public:
    using SchemaError::SchemaError;
};

class UnknownConstant : public std::runtime_error {
public:
    explicit UnknownConstant(const std::string& name)
        : std::runtime_error("unknown constant '" + name + "'") {}
};

struct Edge {
    std::string from;
    std::string to;
    std::string label;  // optional; labeled edges seed the initial interpretation
};

/// The grounding universe: typed nodes plus ordered, optionally labeled edges.
/// Immutable after loading.
class KnowledgeGraph {
public:
    void add_node(const std::string& name, const std::string& type = "");
    void add_edge(const std::string& from, const std::string& to, const std::string& label = "");

    bool has_node(const std::string& name) const { return node_types_.count(name) != 0; }
    bool has_edge(const std::string& from, const std::string& to) const {
        return edge_index_.count({from, to}) != 0;
    }
    const std::string& node_type(const std::string& name) const;

    /// Node names in sorted order (the deterministic grounding order).
    const std::vector<std::string>& nodes() const { return sorted_nodes_; }
    const std::vector<Edge>& edges() const { return edges_; }

    size_t node_count() const { return node_types_.size(); }
    size_t edge_count() const { return edges_.size(); }

    /// The reserved predicate: [1,1] when (a,b) is a declared edge, else
    /// [0,1]. Never [0,0] -- absent edges are uncertain, not false.
    Interval rel_annotation(const std::string& a, const std::string& b) const;

private:
    friend KnowledgeGraph load_graph(const std::string& json_text);

    std::map<std::string, std::string> node_types_;
    std::vector<std::string> sorted_nodes_;
    std::vector<Edge> edges_;
    std::set<std::pair<std::string, std::string>> edge_index_;
};

/// Permitted node types per argument position; an empty string in a
/// position leaves that position unconstrained.
class TypeSchema {
public:
    void set(const std::string& predicate, std::vector<std::string> arg_types) {
        types_[predicate] = std::move(arg_types);
    }
    bool admits(const std::string& predicate, size_t pos, const std::string& node_type) const;
    bool empty() const { return types_.empty(); }
    const std::map<std::string, std::vector<std::string>>& entries() const { return types_; }

    void validate_against(const KnowledgeGraph& g) const;

private:
    std::map<std::string, std::vector<std::string>> types_;
};

/// Parses the JSON graph document:
///   {"nodes":[{"id":"a","type":"t"}...],
///    "edges":[{"from":"a","to":"b","label":"l"}...]}
KnowledgeGraph load_graph(const std::string& json_text);

using Substitution = std::map<std::string, std::string>;

/// Enumerates every substitution of graph constants for the rule's
/// variables. Variables of unary predicates range over nodes; variable
/// pairs of binary predicates (other than `rel`) range over declared
/// edges. With a schema, substitutions violating argument types are
/// omitted. Order is deterministic: lexicographic in variable bindings.
std::vector<Substitution> groundings(const Rule& rule, const KnowledgeGraph& g,
                                     const TypeSchema* schema = nullptr);

}  // namespace ivlog
