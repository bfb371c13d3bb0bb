#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace perfrec {

using NodeId = std::size_t;
using NameSet = std::set<std::string>;

/// Directed acyclic graph over named nodes. Immutable after construction.
class Dag {
public:
    Dag() = default;
    Dag(std::vector<std::string> nodes, const std::vector<std::pair<std::string, std::string>>& edges);

    std::size_t size() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }
    const std::string& name(NodeId id) const { return names_.at(id); }
    bool contains(std::string_view name) const;
    /// Throws Error naming the node if it does not exist.
    NodeId index(std::string_view name) const;

    const std::vector<NodeId>& parents(NodeId id) const { return parents_.at(id); }
    const std::vector<NodeId>& children(NodeId id) const { return children_.at(id); }
    std::vector<NodeId> ancestors(NodeId id) const;
    std::vector<NodeId> descendants(NodeId id) const;
    bool has_edge(NodeId from, NodeId to) const;
    std::vector<std::pair<NodeId, NodeId>> edges() const;

    /// Kahn order, ties broken by declaration order.
    const std::vector<NodeId>& topological_order() const { return topo_; }

    std::vector<NodeId> ids(const NameSet& names) const;
    NameSet names_of(const std::vector<NodeId>& ids) const;

private:
    std::vector<NodeId> reach(NodeId start, bool downward) const;

    std::vector<std::string> names_;
    std::vector<std::vector<NodeId>> parents_;
    std::vector<std::vector<NodeId>> children_;
    std::vector<NodeId> topo_;
};

/// True iff every path between `a` and `b` is blocked given `z`.
/// The three sets must be pairwise disjoint.
bool d_separated(const Dag& dag, const std::vector<NodeId>& a, const std::vector<NodeId>& b,
                 const std::vector<NodeId>& z);
bool d_separated(const Dag& dag, const NameSet& a, const NameSet& b, const NameSet& z);

/// A causal DAG with one node designated as the prediction target Y.
class CausalGraph {
public:
    CausalGraph(Dag dag, std::string_view target);

    /// Line format: `parent -> child`, `target: Y`, optional `nodes: a, b, ...`
    /// to fix node order or declare isolated nodes; `#` starts a comment.
    static CausalGraph parse(std::string_view text);
    static CausalGraph from_edges(const std::vector<std::string>& nodes,
                                  const std::vector<std::pair<std::string, std::string>>& edges,
                                  std::string_view target);
    std::string to_text() const;

    const Dag& dag() const { return dag_; }
    NodeId target() const { return target_; }
    const std::string& target_name() const { return dag_.name(target_); }
    /// All non-target nodes, in declaration order.
    const std::vector<NodeId>& features() const { return features_; }
    std::vector<std::string> feature_names() const;
    /// Position of a node within features(); throws for the target.
    std::size_t feature_position(NodeId id) const;

private:
    Dag dag_;
    NodeId target_ = 0;
    std::vector<NodeId> features_;
};

struct Relations {
    NameSet parents;
    NameSet children;
    NameSet ancestors;
    NameSet descendants;
    /// Co-parents of the node's children (pa(ch(node)) minus the node).
    NameSet spouses;
};

Relations relations(const CausalGraph& graph, std::string_view node);

/// Joint graph over pre-recourse variables, their post-recourse twins, one
/// noise node per variable on each side, and the action node.
struct TwinGraph {
    Dag dag;
    bool noise_resampled = false;

    static constexpr std::string_view action = "A";
    static std::string post(std::string_view node) { return std::string(node) + "^p"; }
    static std::string noise(std::string_view node) { return "U_" + std::string(node); }
    static std::string post_noise(std::string_view node) { return "U_" + std::string(node) + "^p"; }
};

TwinGraph build_twin_graph(const CausalGraph& graph, const NameSet& policy_inputs,
                           const NameSet& intervention_targets, bool noise_resampled);

struct AuditReport {
    bool influenced_by_effects = false;
    bool intervenes_on_effects = false;
    bool noise_resampled = false;
    bool d_separated = false;
    bool guaranteed_valid = false;
};

AuditReport audit_performative_validity(const CausalGraph& graph, const NameSet& policy_inputs,
                                        const NameSet& intervention_targets, bool noise_resampled);

/// Flat `key: yes|no` lines.
std::string to_text(const AuditReport& report);

}  // namespace perfrec
