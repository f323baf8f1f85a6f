#include "ivlog/graph.hpp"

#include <algorithm>
#include <functional>

#include <nlohmann/json.hpp>

namespace ivlog {

void KnowledgeGraph::add_node(const std::string& name, const std::string& type) {
    if (node_types_.count(name)) throw SchemaError("duplicate node '" + name + "'");
    node_types_[name] = type;
    sorted_nodes_.insert(std::lower_bound(sorted_nodes_.begin(), sorted_nodes_.end(), name), name);
}

void KnowledgeGraph::add_edge(const std::string& from, const std::string& to,
                              const std::string& label) {
    if (!has_node(from)) throw DanglingEdge("edge endpoint '" + from + "' is not a declared node");
    if (!has_node(to)) throw DanglingEdge("edge endpoint '" + to + "' is not a declared node");
    edges_.push_back({from, to, label});
    edge_index_.insert({from, to});
}

const std::string& KnowledgeGraph::node_type(const std::string& name) const {
    auto it = node_types_.find(name);
    if (it == node_types_.end()) throw UnknownConstant(name);
    return it->second;
}

Interval KnowledgeGraph::rel_annotation(const std::string& a, const std::string& b) const {
    if (!has_node(a)) throw UnknownConstant(a);
    if (!has_node(b)) throw UnknownConstant(b);
    return has_edge(a, b) ? Interval::always_true() : Interval::unknown();
}

bool TypeSchema::admits(const std::string& predicate, size_t pos,
                        const std::string& node_type) const {
    auto it = types_.find(predicate);
    if (it == types_.end()) return true;
    if (pos >= it->second.size()) return true;
    const std::string& wanted = it->second[pos];
    return wanted.empty() || wanted == node_type;
}

void TypeSchema::validate_against(const KnowledgeGraph& g) const {
    std::set<std::string> known;
    for (const auto& n : g.nodes()) known.insert(g.node_type(n));
    for (const auto& [pred, args] : types_)
        for (const auto& t : args)
            if (!t.empty() && !known.count(t))
                throw SchemaError("schema for '" + pred + "' references unknown type '" + t + "'");
}

KnowledgeGraph load_graph(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("graph is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("nodes") || !doc["nodes"].is_array())
        throw SchemaError("graph document requires a 'nodes' array");

    KnowledgeGraph g;
    for (const auto& n : doc["nodes"]) {
        if (!n.is_object() || !n.contains("id") || !n["id"].is_string())
            throw SchemaError("every node requires a string 'id'");
        g.add_node(n["id"].get<std::string>(), n.value("type", std::string{}));
    }
    if (doc.contains("edges")) {
        if (!doc["edges"].is_array()) throw SchemaError("'edges' must be an array");
        for (const auto& e : doc["edges"]) {
            if (!e.is_object() || !e.contains("from") || !e.contains("to"))
                throw SchemaError("every edge requires 'from' and 'to'");
            g.add_edge(e["from"].get<std::string>(), e["to"].get<std::string>(),
                       e.value("label", std::string{}));
        }
    }
    return g;
}

namespace {

constexpr const char* kRelPredicate = "rel";

struct GroundingSearch {
    const KnowledgeGraph& g;
    const TypeSchema* schema;
    std::vector<std::string> vars;
    std::map<std::string, std::vector<std::string>> domains;
    std::vector<const Atom*> atoms;
    std::vector<Substitution> out;

    bool resolve(const Term& t, const Substitution& sub, std::string& value) const {
        if (!t.is_variable()) {
            value = t.name;
            return true;
        }
        auto it = sub.find(t.name);
        if (it == sub.end()) return false;
        value = it->second;
        return true;
    }

    bool edges_ok(const Substitution& sub) const {
        for (const Atom* a : atoms) {
            if (a->args.size() != 2 || a->predicate == kRelPredicate) continue;
            std::string from, to;
            if (!resolve(a->args[0], sub, from) || !resolve(a->args[1], sub, to)) continue;
            if (!g.has_edge(from, to)) return false;
        }
        return true;
    }

    void search(size_t idx, Substitution& sub) {
        if (idx == vars.size()) {
            if (edges_ok(sub)) out.push_back(sub);
            return;
        }
        const std::string& var = vars[idx];
        for (const auto& node : domains.at(var)) {
            sub[var] = node;
            if (edges_ok(sub)) search(idx + 1, sub);
        }
        sub.erase(var);
    }
};

}  // namespace

std::vector<Substitution> groundings(const Rule& rule, const KnowledgeGraph& g,
                                     const TypeSchema* schema) {
    GroundingSearch s{g, schema, {}, {}, {}, {}};
    s.atoms.push_back(&rule.head);
    for (const auto& lit : rule.body) s.atoms.push_back(&lit.atom);

    std::set<std::string> seen;
    for (const Atom* a : s.atoms) {
        for (const auto& t : a->args) {
            if (t.is_variable() && seen.insert(t.name).second) s.vars.push_back(t.name);
        }
    }
    for (const auto& v : s.vars) s.domains[v] = g.nodes();

    // Constant arguments must name graph nodes of an admissible type;
    // variable domains are narrowed by the schema up front.
    for (const Atom* a : s.atoms) {
        for (size_t pos = 0; pos < a->args.size(); ++pos) {
            const Term& t = a->args[pos];
            if (!t.is_variable()) {
                if (!g.has_node(t.name)) return {};
                if (schema && !schema->admits(a->predicate, pos, g.node_type(t.name))) return {};
                continue;
            }
            if (!schema) continue;
            auto& dom = s.domains[t.name];
            std::erase_if(dom, [&](const std::string& node) {
                return !schema->admits(a->predicate, pos, g.node_type(node));
            });
        }
    }

    Substitution sub;
    s.search(0, sub);
    return s.out;
}

}  // namespace ivlog
