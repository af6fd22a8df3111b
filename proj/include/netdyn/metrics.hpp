#pragma once

// Per-week structural measures: density, degree histograms, reciprocity,
// average clustering on the undirected projection, and average shortest
// path within the largest strongly connected component.

#include <map>
#include <optional>
#include <queue>
#include <vector>

#include "netdyn/core.hpp"
#include "netdyn/graph.hpp"
#include "netdyn/scc.hpp"
#include "netdyn/temporal_graph.hpp"

namespace netdyn {

// The paper's n_t is ambiguous between agents incident to at least one tie
// and the full roster; both conventions are supported.
enum class NodeScope { active, roster };

template <DirectedGraph G>
std::vector<AgentIdx> scope_nodes(const G& g, NodeScope scope) {
    if (scope == NodeScope::active) return active_nodes(g);
    std::vector<AgentIdx> all(g.node_count());
    for (std::size_t v = 0; v < all.size(); ++v) all[v] = static_cast<AgentIdx>(v);
    return all;
}

// |E| / (n (n-1)) over the scoped node set.
template <DirectedGraph G>
double density(const G& g, NodeScope scope = NodeScope::active) {
    std::size_t n = scope == NodeScope::active ? active_nodes(g).size() : g.node_count();
    if (n < 2) throw analysis_error("density undefined for fewer than two nodes");
    return static_cast<double>(g.edge_count()) / (static_cast<double>(n) * static_cast<double>(n - 1));
}

using DegreeHistogram = std::map<std::size_t, std::size_t>;

template <DirectedGraph G>
std::pair<DegreeHistogram, DegreeHistogram> degree_histograms(const G& g,
                                                              NodeScope scope = NodeScope::active) {
    DegreeHistogram in_hist, out_hist;
    for (AgentIdx v : scope_nodes(g, scope)) {
        ++in_hist[g.in_degree(v)];
        ++out_hist[g.out_degree(v)];
    }
    return {in_hist, out_hist};
}

// Fraction of directed edges whose reverse edge is also present.
template <DirectedGraph G>
double reciprocity(const G& g) {
    if (g.edge_count() == 0) throw analysis_error("reciprocity undefined on an empty graph");
    std::size_t mutual = 0;
    g.for_each_edge([&](AgentIdx u, AgentIdx v) {
        if (g.has_edge(v, u)) ++mutual;
    });
    return static_cast<double>(mutual) / static_cast<double>(g.edge_count());
}

namespace detail {

// Undirected projection as sorted unique neighbor lists.
inline std::vector<std::vector<AgentIdx>> undirected_adjacency(const AdjacencyGraph& g) {
    std::vector<std::vector<AgentIdx>> adj(g.node_count());
    for (std::size_t v = 0; v < g.node_count(); ++v) {
        AgentIdx a = static_cast<AgentIdx>(v);
        auto& list = adj[v];
        auto out = g.out_neighbors(a);
        auto in = g.in_neighbors(a);
        list.reserve(out.size() + in.size());
        list.insert(list.end(), out.begin(), out.end());
        list.insert(list.end(), in.begin(), in.end());
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
    }
    return adj;
}

inline std::size_t sorted_intersection_size(const std::vector<AgentIdx>& a, const std::vector<AgentIdx>& b) {
    std::size_t i = 0, j = 0, count = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j])
            ++i;
        else if (b[j] < a[i])
            ++j;
        else {
            ++count;
            ++i;
            ++j;
        }
    }
    return count;
}

} // namespace detail

// Mean local clustering 2 e_i / (k_i (k_i - 1)) on the undirected
// projection.  Nodes with undirected degree < 2 contribute 0 unless
// exclude_low_degree is set, in which case they are left out of the mean.
inline double avg_clustering(const AdjacencyGraph& g, NodeScope scope = NodeScope::active,
                             bool exclude_low_degree = false) {
    auto adj = detail::undirected_adjacency(g);
    auto nodes = scope_nodes(g, scope);
    if (nodes.empty()) return 0.0;
    double total = 0.0;
    std::size_t counted = 0;
    for (AgentIdx v : nodes) {
        const auto& nbrs = adj[v];
        std::size_t k = nbrs.size();
        if (k < 2) {
            if (!exclude_low_degree) ++counted;
            continue;
        }
        std::size_t closed = 0;  // sum over neighbors of |N(v) ∩ N(j)| = 2 e_v
        for (AgentIdx j : nbrs) closed += detail::sorted_intersection_size(nbrs, adj[j]);
        total += static_cast<double>(closed) / (static_cast<double>(k) * static_cast<double>(k - 1));
        ++counted;
    }
    if (counted == 0) return 0.0;
    return total / static_cast<double>(counted);
}

template <DirectedGraph G>
double avg_clustering(const G& g, NodeScope scope = NodeScope::active, bool exclude_low_degree = false) {
    auto edges = extract_edges(g);
    return avg_clustering(AdjacencyGraph(g.node_count(), edges), scope, exclude_low_degree);
}

// Mean shortest-path length over ordered pairs inside the largest strongly
// connected component, by breadth-first search from every member node.
inline double avg_shortest_path_lscc(const AdjacencyGraph& g) {
    SccResult scc = strongly_connected_components(g);
    if (scc.comp_size.empty() || scc.comp_size[scc.largest] < 2)
        throw analysis_error("largest strongly connected component has fewer than two nodes");
    std::uint32_t comp = static_cast<std::uint32_t>(scc.largest);
    // relabel members 0..s-1 and build the induced subgraph
    std::vector<std::uint32_t> local(g.node_count(), 0xffffffffu);
    std::vector<AgentIdx> members;
    for (std::size_t v = 0; v < g.node_count(); ++v)
        if (scc.comp_of[v] == comp) {
            local[v] = static_cast<std::uint32_t>(members.size());
            members.push_back(static_cast<AgentIdx>(v));
        }
    std::size_t s = members.size();
    std::vector<std::uint32_t> off(s + 1, 0);
    for (std::size_t i = 0; i < s; ++i)
        for (AgentIdx w : g.out_neighbors(members[i]))
            if (scc.comp_of[w] == comp) ++off[i + 1];
    for (std::size_t i = 0; i < s; ++i) off[i + 1] += off[i];
    std::vector<std::uint32_t> nbr(off[s]);
    {
        std::vector<std::uint32_t> cur(off.begin(), off.end() - 1);
        for (std::size_t i = 0; i < s; ++i)
            for (AgentIdx w : g.out_neighbors(members[i]))
                if (scc.comp_of[w] == comp) nbr[cur[i]++] = local[w];
    }
    std::vector<std::uint32_t> dist(s);
    std::vector<std::uint32_t> frontier;
    double sum = 0.0;
    for (std::size_t src = 0; src < s; ++src) {
        std::fill(dist.begin(), dist.end(), 0xffffffffu);
        dist[src] = 0;
        frontier.assign(1, static_cast<std::uint32_t>(src));
        std::uint32_t level = 0;
        std::vector<std::uint32_t> next;
        while (!frontier.empty()) {
            ++level;
            next.clear();
            for (std::uint32_t u : frontier)
                for (std::uint32_t i = off[u]; i < off[u + 1]; ++i) {
                    std::uint32_t w = nbr[i];
                    if (dist[w] == 0xffffffffu) {
                        dist[w] = level;
                        next.push_back(w);
                        sum += level;
                    }
                }
            frontier.swap(next);
        }
    }
    return sum / (static_cast<double>(s) * static_cast<double>(s - 1));
}

template <DirectedGraph G>
double avg_shortest_path_lscc(const G& g) {
    auto edges = extract_edges(g);
    return avg_shortest_path_lscc(AdjacencyGraph(g.node_count(), edges));
}

// ---------------------------------------------------------------------------
// Weekly report series.

struct StructuralReport {
    Week week = 0;
    std::optional<double> density;
    std::optional<double> reciprocity;
    std::optional<double> avg_clustering;
    std::optional<double> avg_path_lscc;
    std::size_t n_nodes = 0;  // scoped node count
    std::size_t n_edges = 0;
    DegreeHistogram in_hist, out_hist;
};

struct MetricsOptions {
    NodeScope scope = NodeScope::active;
    bool exclude_low_degree_clustering = false;
    unsigned workers = 1;
};

// One report per week; failed component measures become empty fields
// instead of aborting the series.
inline std::vector<StructuralReport> structural_report(const TemporalNetwork& net,
                                                       const MetricsOptions& opts = {}) {
    std::vector<StructuralReport> reports(net.n_weeks());
    parallel_for(net.n_weeks(), opts.workers, [&](std::size_t wi) {
        Week t = static_cast<Week>(wi + 1);
        SnapshotView snap = net.snapshot(t);
        AdjacencyGraph g(snap.node_count(), extract_edges(snap));
        StructuralReport& rep = reports[wi];
        rep.week = t;
        rep.n_nodes = scope_nodes(g, opts.scope).size();
        rep.n_edges = g.edge_count();
        std::tie(rep.in_hist, rep.out_hist) = degree_histograms(g, opts.scope);
        try {
            rep.density = density(g, opts.scope);
        } catch (const analysis_error&) {
        }
        try {
            rep.reciprocity = reciprocity(g);
        } catch (const analysis_error&) {
        }
        rep.avg_clustering = avg_clustering(g, opts.scope, opts.exclude_low_degree_clustering);
        try {
            rep.avg_path_lscc = avg_shortest_path_lscc(g);
        } catch (const analysis_error&) {
        }
    });
    return reports;
}

} // namespace netdyn
