#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <set>

#include "netdyn/homophily.hpp"
#include "netdyn/nulls.hpp"
#include "netdyn/rng.hpp"

using namespace netdyn;

namespace {

// heavy-tail-ish degree profile: a few hubs plus many low-degree nodes
AdjacencyGraph heavy_tail_graph(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Edge> edges;
    FlatEdgeSet seen;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t fanout = 1 + static_cast<std::size_t>(std::floor(std::pow(rng.uniform01(), 3.0) * 20.0));
        for (std::size_t k = 0; k < fanout; ++k) {
            // preferential-ish target choice: squared uniform biases low ids
            AgentIdx u = static_cast<AgentIdx>(i);
            AgentIdx v = static_cast<AgentIdx>(static_cast<double>(n) * rng.uniform01() * rng.uniform01());
            if (u == v || v >= n) continue;
            if (seen.insert(edge_key(u, v))) edges.emplace_back(u, v);
        }
    }
    return AdjacencyGraph(n, edges);
}

std::vector<double> degree_coupled_scores(const AdjacencyGraph& g, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> scores(g.node_count());
    for (std::size_t v = 0; v < g.node_count(); ++v)
        scores[v] = std::min(100.0, 5.0 * static_cast<double>(g.out_degree(static_cast<AgentIdx>(v))) +
                                        std::floor(rng.uniform01() * 40.0));
    return scores;
}

} // namespace

TEST_CASE("configuration multigraph conserves stubs exactly", "[nulls]") {
    auto g = heavy_tail_graph(200, 7);
    std::vector<std::uint32_t> out_deg(g.node_count()), in_deg(g.node_count());
    for (std::size_t v = 0; v < g.node_count(); ++v) {
        out_deg[v] = static_cast<std::uint32_t>(g.out_degree(static_cast<AgentIdx>(v)));
        in_deg[v] = static_cast<std::uint32_t>(g.in_degree(static_cast<AgentIdx>(v)));
    }
    Rng rng(99);
    auto multi = configuration_multigraph(out_deg, in_deg, rng);
    REQUIRE(multi.size() == g.edge_count());
    std::vector<std::uint32_t> out_check(g.node_count(), 0), in_check(g.node_count(), 0);
    for (const auto& [u, v] : multi) {
        ++out_check[u];
        ++in_check[v];
    }
    REQUIRE(out_check == out_deg);
    REQUIRE(in_check == in_deg);
}

TEST_CASE("configuration draws are deterministic in the seed", "[nulls]") {
    auto g = heavy_tail_graph(150, 11);
    auto scores = degree_coupled_scores(g, 12);
    auto a = sample_configuration(g, scores, 42);
    auto b = sample_configuration(g, scores, 42);
    REQUIRE(a.edges == b.edges);
    auto c = sample_configuration(g, scores, 43);
    REQUIRE(a.edges != c.edges);
}

TEST_CASE("collapse losses are small and stable on a heavy-tail graph", "[nulls]") {
    auto g = heavy_tail_graph(1000, 5);
    auto scores = degree_coupled_scores(g, 6);
    std::vector<double> losses;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto real = sample_configuration(g, scores, seed);
        REQUIRE(real.edges.size() <= g.edge_count());
        REQUIRE(real.edges.size() + real.collapsed_parallel + real.removed_self_loops == g.edge_count());
        losses.push_back(static_cast<double>(real.collapsed_parallel + real.removed_self_loops) /
                         static_cast<double>(g.edge_count()));
    }
    Moments m = moments(losses);
    REQUIRE(m.mean < 0.10);       // simple-graph collapse losses stay modest
    REQUIRE(m.sd < 0.5 * (m.mean + 1e-9) + 0.01);
}

TEST_CASE("rejection mode yields a simple draw on small graphs", "[nulls]") {
    std::vector<Edge> edges{{0, 1}, {1, 2}, {2, 0}, {0, 2}};
    AdjacencyGraph g(3, edges);
    std::vector<double> scores{10, 20, 30};
    auto real = sample_configuration(g, scores, 1, /*reject_until_simple=*/true);
    if (real.collapsed_parallel == 0 && real.removed_self_loops == 0) {
        REQUIRE(real.edges.size() == g.edge_count());
    }
}

TEST_CASE("joint-degree sampler preserves the mixing matrix exactly", "[nulls]") {
    auto g = heavy_tail_graph(300, 21);
    auto target = joint_degree_matrix(g);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto edges = sample_joint_degree(g, seed);
        REQUIRE(edges.size() == g.edge_count());
        AdjacencyGraph null_graph(g.node_count(), edges);
        // recount n_kk' with classes from the NULL graph itself; degrees are
        // preserved so this equals the empirical matrix
        auto recount = joint_degree_matrix(null_graph);
        REQUIRE(recount == target);
        for (std::size_t v = 0; v < g.node_count(); ++v) {
            REQUIRE(null_graph.out_degree(static_cast<AgentIdx>(v)) == g.out_degree(static_cast<AgentIdx>(v)));
            REQUIRE(null_graph.in_degree(static_cast<AgentIdx>(v)) == g.in_degree(static_cast<AgentIdx>(v)));
        }
    }
}

TEST_CASE("joint-degree sampler moves edges away from the empirical graph", "[nulls]") {
    auto g = heavy_tail_graph(300, 22);
    auto edges = sample_joint_degree(g, 77);
    std::size_t moved = 0;
    for (const auto& [u, v] : edges)
        if (!g.has_edge(u, v)) ++moved;
    REQUIRE(moved > 0);
}

TEST_CASE("single-class graphs keep every edge class pair", "[nulls]") {
    // 2-regular-ish ring: all edges go from out-degree-2 nodes to in-degree-2 nodes
    std::size_t n = 20;
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i) {
        edges.emplace_back(static_cast<AgentIdx>(i), static_cast<AgentIdx>((i + 1) % n));
        edges.emplace_back(static_cast<AgentIdx>(i), static_cast<AgentIdx>((i + 3) % n));
    }
    AdjacencyGraph g(n, edges);
    auto sampled = sample_joint_degree(g, 3);
    AdjacencyGraph ng(n, sampled);
    for (const auto& [u, v] : sampled) {
        REQUIRE(ng.out_degree(u) == 2);
        REQUIRE(ng.in_degree(v) == 2);
    }
}

TEST_CASE("degree-class score assignment respects class membership", "[nulls]") {
    // two classes: node 0 (out 2, in 0) alone; nodes 1,2 (out 0, in 1) together
    std::vector<Edge> edges{{0, 1}, {0, 2}};
    AdjacencyGraph g(3, edges);
    std::vector<double> scores{50, 10, 20};
    NullRealization real;
    real.edges = edges;
    Rng rng(5);
    for (int rep = 0; rep < 50; ++rep) {
        assign_scores_by_degree_class(real, g, scores, rng);
        REQUIRE(real.scores[0] == 50.0);  // singleton class keeps its score
        REQUIRE((real.scores[1] == 10.0 || real.scores[1] == 20.0));
        REQUIRE((real.scores[2] == 10.0 || real.scores[2] == 20.0));
    }
}

TEST_CASE("class-conditional score means converge to empirical means", "[nulls][property]") {
    auto g = heavy_tail_graph(120, 31);
    auto scores = degree_coupled_scores(g, 32);
    // empirical class means
    std::map<std::uint64_t, std::pair<double, std::size_t>> cls;
    for (std::size_t v = 0; v < g.node_count(); ++v) {
        std::uint64_t key = (static_cast<std::uint64_t>(g.out_degree(static_cast<AgentIdx>(v))) << 32) |
                            g.in_degree(static_cast<AgentIdx>(v));
        cls[key].first += scores[v];
        cls[key].second += 1;
    }
    // Monte-Carlo over many assignments
    Rng rng(33);
    std::map<std::uint64_t, std::pair<double, std::size_t>> sampled;
    NullRealization real;
    const int reps = 400;
    for (int rep = 0; rep < reps; ++rep) {
        assign_scores_by_degree_class(real, g, scores, rng);
        for (std::size_t v = 0; v < g.node_count(); ++v) {
            std::uint64_t key = (static_cast<std::uint64_t>(g.out_degree(static_cast<AgentIdx>(v))) << 32) |
                                g.in_degree(static_cast<AgentIdx>(v));
            sampled[key].first += real.scores[v];
            sampled[key].second += 1;
        }
    }
    for (const auto& [key, acc] : cls) {
        double emp_mean = acc.first / static_cast<double>(acc.second);
        double got_mean = sampled[key].first / static_cast<double>(sampled[key].second);
        // class score range is bounded by 100; 3 standard errors of the MC mean
        double se = 100.0 / std::sqrt(static_cast<double>(sampled[key].second));
        REQUIRE(std::abs(got_mean - emp_mean) <= 3.0 * se + 1e-9);
    }
}

TEST_CASE("generate_ensemble has distinct provenance and is reproducible", "[nulls]") {
    std::vector<FollowEvent> events{{0, 1, 1}, {1, 2, 1}, {2, 0, 2}, {0, 2, 3}, {2, 1, 3}};
    TemporalNetwork net(3, 3, events);
    std::vector<ScoreObs> obs;
    for (AgentIdx a = 0; a < 3; ++a)
        for (Week t = 1; t <= 3; ++t) obs.push_back({a, t, static_cast<double>(20 * (a + 1))});
    ScorePanel panel = impute_scores(obs, 3, 3);

    NullEnsembleSpec spec;
    spec.kind = NullKind::configuration;
    spec.realizations = 2;
    spec.seed = 9;
    auto ens = generate_ensemble(net, panel, spec);
    REQUIRE(ens.size() == 3);
    std::set<std::pair<Week, std::size_t>> provenance;
    std::set<std::uint64_t> seeds;
    for (const auto& week : ens)
        for (const auto& real : week) {
            provenance.insert({real.week, real.replicate});
            seeds.insert(real.seed);
        }
    REQUIRE(provenance.size() == 6);
    REQUIRE(seeds.size() == 6);

    auto again = generate_ensemble(net, panel, spec, 4);
    for (Week t = 0; t < 3; ++t)
        for (std::size_t r = 0; r < 2; ++r) REQUIRE(ens[t][r].edges == again[t][r].edges);
}

TEST_CASE("configuration nulls center assortativity near zero on a planted-homophily graph",
          "[nulls][property]") {
    // strongly homophilous graph: low ids follow low ids, high follow high
    Rng rng(41);
    std::size_t n = 120;
    std::vector<Edge> edges;
    FlatEdgeSet seen;
    std::vector<double> scores(n);
    for (std::size_t v = 0; v < n; ++v) scores[v] = v < n / 2 ? 20.0 : 80.0;
    while (edges.size() < 400) {
        AgentIdx u = static_cast<AgentIdx>(rng.below(n));
        AgentIdx v = static_cast<AgentIdx>(rng.below(n / 2) + (u < n / 2 ? 0 : n / 2));
        if (u == v || !seen.insert(edge_key(u, v))) continue;
        edges.emplace_back(u, v);
    }
    AdjacencyGraph g(n, edges);
    REQUIRE(numeric_assortativity(g, scores) > 0.9);

    std::vector<double> null_rs;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto real = sample_configuration(g, scores, seed);
        AdjacencyGraph ng(n, real.edges);
        null_rs.push_back(numeric_assortativity(ng, real.scores));
    }
    Moments m = moments(null_rs);
    REQUIRE(std::abs(m.mean) < 3.0 * m.sd / std::sqrt(100.0) + 0.05);
}
