#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "perfrec/errors.hpp"
#include "perfrec/graph.hpp"

namespace perfrec::oracle {

// Path-enumeration oracle: every simple path in the skeleton is checked
// against the blocking rules directly.
inline bool brute_force_dsep(const Dag& g, NodeId a, NodeId b, const std::vector<bool>& observed) {
    const std::size_t n = g.size();
    std::vector<bool> opens_collider(n, false);
    for (NodeId v = 0; v < n; ++v) {
        opens_collider[v] = observed[v];
        for (NodeId d : g.descendants(v)) opens_collider[v] = opens_collider[v] || observed[d];
    }
    std::vector<NodeId> path{a};
    std::vector<bool> on_path(n, false);
    on_path[a] = true;
    bool open_found = false;

    auto blocked = [&]() {
        for (std::size_t i = 1; i + 1 < path.size(); ++i) {
            const NodeId prev = path[i - 1], mid = path[i], next = path[i + 1];
            const bool collider = g.has_edge(prev, mid) && g.has_edge(next, mid);
            if (collider ? !opens_collider[mid] : observed[mid]) return true;
        }
        return false;
    };
    std::function<void()> extend = [&]() {
        if (open_found) return;
        const NodeId last = path.back();
        if (last == b) {
            if (!blocked()) open_found = true;
            return;
        }
        for (NodeId w = 0; w < n; ++w) {
            if (on_path[w] || !(g.has_edge(last, w) || g.has_edge(w, last))) continue;
            on_path[w] = true;
            path.push_back(w);
            extend();
            path.pop_back();
            on_path[w] = false;
        }
    };
    extend();
    return !open_found;
}

inline std::vector<Dag> all_dags(std::size_t n) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n; ++i) names.push_back(std::string(1, static_cast<char>('a' + i)));
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    std::size_t combos = 1;
    for (std::size_t k = 0; k < pairs.size(); ++k) combos *= 3;

    std::vector<Dag> out;
    for (std::size_t code = 0; code < combos; ++code) {
        std::vector<std::pair<std::string, std::string>> edges;
        std::size_t c = code;
        for (const auto& [i, j] : pairs) {
            const std::size_t state = c % 3;
            c /= 3;
            if (state == 1) edges.emplace_back(names[i], names[j]);
            if (state == 2) edges.emplace_back(names[j], names[i]);
        }
        try {
            out.emplace_back(names, edges);
        } catch (const Error&) {
            // cyclic orientation
        }
    }
    return out;
}

}  // namespace perfrec::oracle
