#pragma once

// Degree-preserving null ensembles: the directed configuration model
// (stub matching, parallel edges collapsed, self-loops removed) and the
// joint-degree model (targeted double-edge swaps that preserve the
// edge-level source-out-degree x target-in-degree mixing matrix).

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <vector>

#include "netdyn/core.hpp"
#include "netdyn/graph.hpp"
#include "netdyn/rng.hpp"
#include "netdyn/temporal_graph.hpp"

namespace netdyn {

enum class NullKind { configuration, joint_degree };

inline const char* null_kind_name(NullKind k) {
    return k == NullKind::configuration ? "configuration" : "joint_degree";
}

struct NullEnsembleSpec {
    NullKind kind = NullKind::configuration;
    std::size_t realizations = 100;
    std::uint64_t seed = 0;
    double jd_burnin_factor = 10.0;     // swap attempts per edge
    bool reject_until_simple = false;   // configuration model only; small graphs
    int max_reject_attempts = 200;
};

struct NullRealization {
    std::vector<Edge> edges;
    std::vector<double> scores;  // per node; NaN when unavailable
    Week week = 0;
    NullKind kind = NullKind::configuration;
    std::size_t replicate = 0;
    std::uint64_t seed = 0;
    std::size_t collapsed_parallel = 0;
    std::size_t removed_self_loops = 0;
};

// ---------------------------------------------------------------------------
// Configuration model.

// Raw stub-matching draw: a directed multigraph whose in/out degree
// sequences equal the inputs exactly (self-loops and parallel edges
// included).
inline std::vector<Edge> configuration_multigraph(std::span<const std::uint32_t> out_deg,
                                                  std::span<const std::uint32_t> in_deg, Rng& rng) {
    std::vector<AgentIdx> sources, targets;
    for (std::size_t v = 0; v < out_deg.size(); ++v)
        for (std::uint32_t k = 0; k < out_deg[v]; ++k) sources.push_back(static_cast<AgentIdx>(v));
    for (std::size_t v = 0; v < in_deg.size(); ++v)
        for (std::uint32_t k = 0; k < in_deg[v]; ++k) targets.push_back(static_cast<AgentIdx>(v));
    rng.shuffle(std::span<AgentIdx>(targets));
    std::vector<Edge> edges(sources.size());
    for (std::size_t i = 0; i < sources.size(); ++i) edges[i] = {sources[i], targets[i]};
    return edges;
}

template <DirectedGraph G>
NullRealization sample_configuration(const G& g, std::span<const double> scores, std::uint64_t seed,
                                     bool reject_until_simple = false, int max_reject_attempts = 200) {
    Rng rng(seed);
    std::size_t n = g.node_count();
    std::vector<std::uint32_t> out_deg(n), in_deg(n);
    for (std::size_t v = 0; v < n; ++v) {
        out_deg[v] = static_cast<std::uint32_t>(g.out_degree(static_cast<AgentIdx>(v)));
        in_deg[v] = static_cast<std::uint32_t>(g.in_degree(static_cast<AgentIdx>(v)));
    }
    NullRealization real;
    real.kind = NullKind::configuration;
    real.seed = seed;
    real.scores.assign(scores.begin(), scores.end());
    int attempts = reject_until_simple ? max_reject_attempts : 1;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        auto multi = configuration_multigraph(out_deg, in_deg, rng);
        FlatEdgeSet seen(multi.size());
        real.edges.clear();
        real.edges.reserve(multi.size());
        real.collapsed_parallel = 0;
        real.removed_self_loops = 0;
        for (const auto& [u, v] : multi) {
            if (u == v) {
                ++real.removed_self_loops;
                continue;
            }
            if (!seen.insert(edge_key(u, v))) {
                ++real.collapsed_parallel;
                continue;
            }
            real.edges.emplace_back(u, v);
        }
        if (real.collapsed_parallel == 0 && real.removed_self_loops == 0) break;
    }
    return real;
}

// ---------------------------------------------------------------------------
// Joint-degree model.

// The edge-level mixing matrix n_{kk'}: counts of edges by (source
// out-degree, target in-degree) class pair.
template <DirectedGraph G>
std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> joint_degree_matrix(const G& g) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> counts;
    g.for_each_edge([&](AgentIdx u, AgentIdx v) {
        ++counts[{static_cast<std::uint32_t>(g.out_degree(u)), static_cast<std::uint32_t>(g.in_degree(v))}];
    });
    return counts;
}

// Samples an edge set with the degrees and the n_{kk'} matrix of g
// preserved exactly.  Starts from the empirical edge set and applies
// targeted double-edge swaps: a swap (a,b),(c,d) -> (a,d),(c,b) is accepted
// only when it keeps the graph simple and either the two targets share an
// in-degree class or the two sources share an out-degree class.
template <DirectedGraph G>
std::vector<Edge> sample_joint_degree(const G& g, std::uint64_t seed, double burnin_factor = 10.0) {
    std::vector<Edge> edges = extract_edges(g);
    std::size_t m = edges.size();
    if (m < 2) return edges;
    std::vector<std::uint32_t> out_class(g.node_count()), in_class(g.node_count());
    for (std::size_t v = 0; v < g.node_count(); ++v) {
        out_class[v] = static_cast<std::uint32_t>(g.out_degree(static_cast<AgentIdx>(v)));
        in_class[v] = static_cast<std::uint32_t>(g.in_degree(static_cast<AgentIdx>(v)));
    }
    FlatEdgeSet present(m);
    for (const auto& [u, v] : edges) present.insert(edge_key(u, v));
    Rng rng(seed);
    std::uint64_t attempts = static_cast<std::uint64_t>(std::ceil(burnin_factor * static_cast<double>(m)));
    for (std::uint64_t it = 0; it < attempts; ++it) {
        std::size_t i = static_cast<std::size_t>(rng.below(m));
        std::size_t j = static_cast<std::size_t>(rng.below(m));
        if (i == j) continue;
        auto [a, b] = edges[i];
        auto [c, d] = edges[j];
        if (in_class[b] != in_class[d] && out_class[a] != out_class[c]) continue;
        if (a == d || c == b) continue;
        std::uint64_t k1 = edge_key(a, d), k2 = edge_key(c, b);
        if (present.contains(k1) || present.contains(k2)) continue;
        present.erase(edge_key(a, b));
        present.erase(edge_key(c, d));
        present.insert(k1);
        present.insert(k2);
        edges[i] = {a, d};
        edges[j] = {c, b};
    }
    return edges;
}

// Draws each null node's score uniformly from the empirical score
// distribution of its (out-degree, in-degree) class, maintaining any
// attribute-degree relationship.  Nodes whose class holds no defined score
// keep NaN.
template <DirectedGraph G>
void assign_scores_by_degree_class(NullRealization& real, const G& empirical,
                                   std::span<const double> empirical_scores, Rng& rng) {
    std::size_t n = empirical.node_count();
    std::map<std::uint64_t, std::vector<double>> class_scores;
    for (std::size_t v = 0; v < n; ++v) {
        double s = empirical_scores[v];
        if (std::isnan(s)) continue;
        AgentIdx a = static_cast<AgentIdx>(v);
        std::uint64_t cls = (static_cast<std::uint64_t>(empirical.out_degree(a)) << 32) |
                            static_cast<std::uint64_t>(empirical.in_degree(a));
        class_scores[cls].push_back(s);
    }
    real.scores.assign(n, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t v = 0; v < n; ++v) {
        AgentIdx a = static_cast<AgentIdx>(v);
        std::uint64_t cls = (static_cast<std::uint64_t>(empirical.out_degree(a)) << 32) |
                            static_cast<std::uint64_t>(empirical.in_degree(a));
        auto it = class_scores.find(cls);
        if (it == class_scores.end() || it->second.empty()) continue;
        const auto& pool = it->second;
        real.scores[v] = pool[static_cast<std::size_t>(rng.below(pool.size()))];
    }
}

// ---------------------------------------------------------------------------
// Ensemble generation.

// One realization with a seed derived from (master seed, kind, week,
// replicate); identical regardless of scheduling.
inline NullRealization generate_realization(const TemporalNetwork& net, const ScorePanel& panel,
                                            const NullEnsembleSpec& spec, Week week, std::size_t replicate) {
    SnapshotView snap = net.snapshot(week);
    std::vector<double> scores(net.n_agents(), std::numeric_limits<double>::quiet_NaN());
    for (AgentIdx a = 0; a < net.n_agents(); ++a)
        if (panel.kept(a)) scores[a] = panel.completed(a, week);
    std::uint64_t seed = derive_seed(spec.seed, static_cast<std::uint64_t>(spec.kind) + 1, week, replicate);
    NullRealization real;
    if (spec.kind == NullKind::configuration) {
        real = sample_configuration(snap, scores, seed, spec.reject_until_simple, spec.max_reject_attempts);
    } else {
        Rng rng(seed);
        real.kind = NullKind::joint_degree;
        real.seed = seed;
        real.edges = sample_joint_degree(snap, derive_seed(seed, 1), spec.jd_burnin_factor);
        assign_scores_by_degree_class(real, snap, scores, rng);
    }
    real.week = week;
    real.replicate = replicate;
    return real;
}

// Materializes spec.realizations draws for every week.  Suitable for small
// inputs; the pipeline streams realizations instead of holding them.
inline std::vector<std::vector<NullRealization>> generate_ensemble(const TemporalNetwork& net,
                                                                   const ScorePanel& panel,
                                                                   const NullEnsembleSpec& spec,
                                                                   unsigned workers = 1) {
    std::vector<std::vector<NullRealization>> by_week(net.n_weeks());
    for (auto& v : by_week) v.resize(spec.realizations);
    std::size_t total = static_cast<std::size_t>(net.n_weeks()) * spec.realizations;
    parallel_for(total, workers, [&](std::size_t task) {
        Week week = static_cast<Week>(task / spec.realizations + 1);
        std::size_t rep = task % spec.realizations;
        by_week[week - 1][rep] = generate_realization(net, panel, spec, week, rep);
    });
    return by_week;
}

} // namespace netdyn
