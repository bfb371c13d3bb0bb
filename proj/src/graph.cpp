#include "perfrec/graph.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <sstream>

#include "perfrec/errors.hpp"

namespace perfrec {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

bool valid_name(std::string_view s) {
    if (s.empty()) return false;
    return std::none_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t' || c == ',' || c == ':'; });
}

}  // namespace

Dag::Dag(std::vector<std::string> nodes, const std::vector<std::pair<std::string, std::string>>& edges)
    : names_(std::move(nodes)), parents_(names_.size()), children_(names_.size()) {
    for (std::size_t i = 0; i < names_.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (names_[i] == names_[j]) throw Error("duplicate node '" + names_[i] + "'");

    for (const auto& [from, to] : edges) {
        const NodeId a = index(from);
        const NodeId b = index(to);
        if (a == b) throw Error("self-loop on '" + from + "'");
        if (has_edge(a, b)) throw Error("duplicate edge " + from + " -> " + to);
        children_[a].push_back(b);
        parents_[b].push_back(a);
    }
    for (auto& p : parents_) std::sort(p.begin(), p.end());
    for (auto& c : children_) std::sort(c.begin(), c.end());

    std::vector<std::size_t> indeg(size());
    for (NodeId v = 0; v < size(); ++v) indeg[v] = parents_[v].size();
    std::vector<bool> done(size(), false);
    while (topo_.size() < size()) {
        bool progressed = false;
        for (NodeId v = 0; v < size(); ++v) {
            if (done[v] || indeg[v] != 0) continue;
            done[v] = true;
            topo_.push_back(v);
            for (NodeId c : children_[v]) --indeg[c];
            progressed = true;
            break;
        }
        if (!progressed) throw Error("graph has a cycle");
    }
}

bool Dag::contains(std::string_view name) const {
    return std::find(names_.begin(), names_.end(), name) != names_.end();
}

NodeId Dag::index(std::string_view name) const {
    const auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw Error("unknown node '" + std::string(name) + "'");
    return static_cast<NodeId>(it - names_.begin());
}

bool Dag::has_edge(NodeId from, NodeId to) const {
    const auto& c = children_.at(from);
    return std::find(c.begin(), c.end(), to) != c.end();
}

std::vector<std::pair<NodeId, NodeId>> Dag::edges() const {
    std::vector<std::pair<NodeId, NodeId>> out;
    for (NodeId v = 0; v < size(); ++v)
        for (NodeId c : children_[v]) out.emplace_back(v, c);
    return out;
}

std::vector<NodeId> Dag::reach(NodeId start, bool downward) const {
    std::vector<bool> seen(size(), false);
    std::vector<NodeId> stack{start};
    while (!stack.empty()) {
        const NodeId v = stack.back();
        stack.pop_back();
        for (NodeId w : downward ? children_[v] : parents_[v]) {
            if (seen[w]) continue;
            seen[w] = true;
            stack.push_back(w);
        }
    }
    std::vector<NodeId> out;
    for (NodeId v = 0; v < size(); ++v)
        if (seen[v]) out.push_back(v);
    return out;
}

std::vector<NodeId> Dag::ancestors(NodeId id) const { return reach(id, false); }
std::vector<NodeId> Dag::descendants(NodeId id) const { return reach(id, true); }

std::vector<NodeId> Dag::ids(const NameSet& names) const {
    std::vector<NodeId> out;
    out.reserve(names.size());
    for (const auto& n : names) out.push_back(index(n));
    std::sort(out.begin(), out.end());
    return out;
}

NameSet Dag::names_of(const std::vector<NodeId>& ids) const {
    NameSet out;
    for (NodeId v : ids) out.insert(name(v));
    return out;
}

bool d_separated(const Dag& dag, const std::vector<NodeId>& a, const std::vector<NodeId>& b,
                 const std::vector<NodeId>& z) {
    const std::size_t n = dag.size();
    std::vector<int> role(n, 0);  // 1: a, 2: b, 4: z
    auto mark = [&](const std::vector<NodeId>& set, int bit) {
        for (NodeId v : set) {
            if (v >= n) throw Error("node id out of range");
            if (role[v] != 0 && (role[v] & bit) == 0) throw Error("d-separation sets must be disjoint");
            role[v] |= bit;
        }
    };
    mark(a, 1);
    mark(b, 2);
    mark(z, 4);

    // Nodes that are in z or have a descendant in z: colliders there are open.
    std::vector<bool> z_or_ancestor(n, false);
    for (NodeId v : z) {
        z_or_ancestor[v] = true;
        for (NodeId u : dag.ancestors(v)) z_or_ancestor[u] = true;
    }

    // Reachability over (node, arrived-from-child) states.
    std::vector<bool> visited_up(n, false), visited_down(n, false);
    std::deque<std::pair<NodeId, bool>> queue;
    for (NodeId v : a) queue.emplace_back(v, true);
    while (!queue.empty()) {
        const auto [v, up] = queue.front();
        queue.pop_front();
        auto& visited = up ? visited_up : visited_down;
        if (visited[v]) continue;
        visited[v] = true;
        if (role[v] & 2) return false;
        const bool observed = (role[v] & 4) != 0;
        if (up) {
            if (observed) continue;
            for (NodeId p : dag.parents(v)) queue.emplace_back(p, true);
            for (NodeId c : dag.children(v)) queue.emplace_back(c, false);
        } else {
            if (!observed)
                for (NodeId c : dag.children(v)) queue.emplace_back(c, false);
            if (z_or_ancestor[v])
                for (NodeId p : dag.parents(v)) queue.emplace_back(p, true);
        }
    }
    return true;
}

bool d_separated(const Dag& dag, const NameSet& a, const NameSet& b, const NameSet& z) {
    return d_separated(dag, dag.ids(a), dag.ids(b), dag.ids(z));
}

CausalGraph::CausalGraph(Dag dag, std::string_view target) : dag_(std::move(dag)) {
    target_ = dag_.index(target);
    for (NodeId v = 0; v < dag_.size(); ++v)
        if (v != target_) features_.push_back(v);
}

CausalGraph CausalGraph::from_edges(const std::vector<std::string>& nodes,
                                    const std::vector<std::pair<std::string, std::string>>& edges,
                                    std::string_view target) {
    return CausalGraph(Dag(nodes, edges), target);
}

CausalGraph CausalGraph::parse(std::string_view text) {
    std::vector<std::string> nodes;
    std::vector<std::pair<std::string, std::string>> edges;
    std::string target;
    int target_line = 0;
    auto add_node = [&](const std::string& n, int line) {
        if (!valid_name(n)) throw InputError("invalid node name '" + n + "'", line);
        if (std::find(nodes.begin(), nodes.end(), n) == nodes.end()) nodes.push_back(n);
    };

    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw.substr(0, raw.find('#'));
        line = trim(line);
        if (line.empty()) continue;
        if (const auto arrow = line.find("->"); arrow != std::string::npos) {
            const std::string from = trim(std::string_view(line).substr(0, arrow));
            const std::string to = trim(std::string_view(line).substr(arrow + 2));
            if (!valid_name(from) || !valid_name(to)) throw InputError("malformed edge line '" + line + "'", line_no);
            if (from == to) throw InputError("self-loop on '" + from + "'", line_no);
            const std::pair<std::string, std::string> e{from, to};
            if (std::find(edges.begin(), edges.end(), e) != edges.end())
                throw InputError("duplicate edge " + from + " -> " + to, line_no);
            add_node(from, line_no);
            add_node(to, line_no);
            edges.push_back(e);
            continue;
        }
        const auto colon = line.find(':');
        if (colon == std::string::npos) throw InputError("malformed line '" + line + "'", line_no);
        const std::string key = trim(std::string_view(line).substr(0, colon));
        const std::string value = trim(std::string_view(line).substr(colon + 1));
        if (key == "target") {
            if (!valid_name(value)) throw InputError("invalid target name '" + value + "'", line_no);
            target = value;
            target_line = line_no;
        } else if (key == "nodes") {
            std::istringstream list(value);
            std::string item;
            while (std::getline(list, item, ',')) add_node(trim(item), line_no);
        } else {
            throw InputError("unknown key '" + key + "'", line_no);
        }
    }
    if (target.empty()) throw InputError("missing 'target:' line");
    if (std::find(nodes.begin(), nodes.end(), target) == nodes.end())
        throw InputError("target '" + target + "' is not a node", target_line);
    try {
        return CausalGraph(Dag(nodes, edges), target);
    } catch (const InputError&) {
        throw;
    } catch (const Error& e) {
        throw InputError(e.what());
    }
}

std::string CausalGraph::to_text() const {
    std::ostringstream out;
    out << "target: " << target_name() << "\n";
    out << "nodes: ";
    for (std::size_t i = 0; i < dag_.size(); ++i) out << (i ? ", " : "") << dag_.name(i);
    out << "\n";
    for (const auto& [a, b] : dag_.edges()) out << dag_.name(a) << " -> " << dag_.name(b) << "\n";
    return out.str();
}

std::vector<std::string> CausalGraph::feature_names() const {
    std::vector<std::string> out;
    for (NodeId v : features_) out.push_back(dag_.name(v));
    return out;
}

std::size_t CausalGraph::feature_position(NodeId id) const {
    const auto it = std::find(features_.begin(), features_.end(), id);
    if (it == features_.end()) throw Error("'" + dag_.name(id) + "' is not a feature");
    return static_cast<std::size_t>(it - features_.begin());
}

Relations relations(const CausalGraph& graph, std::string_view node) {
    const Dag& dag = graph.dag();
    const NodeId v = dag.index(node);
    Relations r;
    r.parents = dag.names_of(dag.parents(v));
    r.children = dag.names_of(dag.children(v));
    r.ancestors = dag.names_of(dag.ancestors(v));
    r.descendants = dag.names_of(dag.descendants(v));
    for (NodeId c : dag.children(v))
        for (NodeId p : dag.parents(c))
            if (p != v) r.spouses.insert(dag.name(p));
    return r;
}

TwinGraph build_twin_graph(const CausalGraph& graph, const NameSet& policy_inputs,
                           const NameSet& intervention_targets, bool noise_resampled) {
    const Dag& g = graph.dag();
    for (const auto& n : intervention_targets) {
        g.index(n);
        if (n == graph.target_name())
            throw Error("interventions on the target '" + n + "' are not modeled");
    }
    for (const auto& n : policy_inputs) {
        g.index(n);
        if (n == graph.target_name()) throw Error("policy inputs must be features, got target '" + n + "'");
    }

    std::vector<std::string> nodes;
    for (const auto& n : g.names()) nodes.push_back(n);
    for (const auto& n : g.names()) nodes.push_back(TwinGraph::post(n));
    for (const auto& n : g.names()) nodes.push_back(TwinGraph::noise(n));
    for (const auto& n : g.names()) nodes.push_back(TwinGraph::post_noise(n));
    nodes.emplace_back(TwinGraph::action);

    std::vector<std::pair<std::string, std::string>> edges;
    for (const auto& [a, b] : g.edges()) {
        edges.emplace_back(g.name(a), g.name(b));
        edges.emplace_back(TwinGraph::post(g.name(a)), TwinGraph::post(g.name(b)));
    }
    for (const auto& n : g.names()) {
        edges.emplace_back(TwinGraph::noise(n), n);
        edges.emplace_back(TwinGraph::post_noise(n), TwinGraph::post(n));
        if (!noise_resampled) edges.emplace_back(TwinGraph::noise(n), TwinGraph::post_noise(n));
    }
    for (const auto& n : policy_inputs) edges.emplace_back(n, std::string(TwinGraph::action));
    for (const auto& n : intervention_targets) edges.emplace_back(std::string(TwinGraph::action), TwinGraph::post(n));

    TwinGraph twin{Dag(std::move(nodes), edges), noise_resampled};
    return twin;
}

AuditReport audit_performative_validity(const CausalGraph& graph, const NameSet& policy_inputs,
                                        const NameSet& intervention_targets, bool noise_resampled) {
    const TwinGraph twin = build_twin_graph(graph, policy_inputs, intervention_targets, noise_resampled);
    const Dag& g = graph.dag();
    const NameSet effects = g.names_of(g.descendants(graph.target()));
    const NameSet direct_effects = g.names_of(g.children(graph.target()));

    AuditReport r;
    r.noise_resampled = noise_resampled;
    r.influenced_by_effects = std::any_of(policy_inputs.begin(), policy_inputs.end(),
                                          [&](const std::string& n) { return effects.count(n) > 0; });
    r.intervenes_on_effects = std::any_of(intervention_targets.begin(), intervention_targets.end(),
                                          [&](const std::string& n) { return direct_effects.count(n) > 0; });
    NameSet post_features;
    for (const auto& n : graph.feature_names()) post_features.insert(TwinGraph::post(n));
    r.d_separated = d_separated(twin.dag, NameSet{std::string(TwinGraph::action)},
                                NameSet{TwinGraph::post(graph.target_name())}, post_features);
    r.guaranteed_valid = r.d_separated;
    return r;
}

std::string to_text(const AuditReport& report) {
    auto yn = [](bool b) { return b ? "yes" : "no"; };
    std::ostringstream out;
    out << "influenced_by_effects: " << yn(report.influenced_by_effects) << "\n"
        << "intervenes_on_effects: " << yn(report.intervenes_on_effects) << "\n"
        << "noise_resampled: " << yn(report.noise_resampled) << "\n"
        << "d_separated: " << yn(report.d_separated) << "\n"
        << "guaranteed_valid: " << yn(report.guaranteed_valid) << "\n";
    return out.str();
}

}  // namespace perfrec
