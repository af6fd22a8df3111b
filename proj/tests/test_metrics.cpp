#include <catch2/catch_amalgamated.hpp>

#include "netdyn/metrics.hpp"
#include "netdyn/rng.hpp"
#include "oracle_helpers.hpp"

using namespace netdyn;

namespace {

AdjacencyGraph from_dense(const oracle::Dense& a) {
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a.size(); ++j)
            if (a[i][j]) edges.emplace_back(static_cast<AgentIdx>(i), static_cast<AgentIdx>(j));
    return AdjacencyGraph(a.size(), edges);
}

oracle::Dense random_dense(std::size_t n, double p, Rng& rng) {
    oracle::Dense a(n, std::vector<int>(n, 0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j && rng.uniform01() < p) a[i][j] = 1;
    return a;
}

} // namespace

TEST_CASE("density on canonical small graphs", "[metrics]") {
    oracle::Dense complete{{0, 1, 1}, {1, 0, 1}, {1, 1, 0}};
    REQUIRE(density(from_dense(complete)) == 1.0);

    oracle::Dense empty(3, std::vector<int>(3, 0));
    REQUIRE(density(from_dense(empty), NodeScope::roster) == 0.0);
    REQUIRE_THROWS_AS(density(from_dense(empty), NodeScope::active), analysis_error);

    oracle::Dense path{{0, 1, 0}, {0, 0, 1}, {0, 0, 0}};
    REQUIRE(density(from_dense(path)) == Catch::Approx(2.0 / 6.0));
}

TEST_CASE("degree histograms on the out-star", "[metrics]") {
    // hub 0 -> {1,2,3}
    oracle::Dense star{{0, 1, 1, 1}, {0, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}};
    auto [in_hist, out_hist] = degree_histograms(from_dense(star));
    REQUIRE(out_hist == DegreeHistogram{{0, 3}, {3, 1}});
    REQUIRE(in_hist == DegreeHistogram{{0, 1}, {1, 3}});
}

TEST_CASE("degree histograms of the empty graph cover the roster", "[metrics]") {
    oracle::Dense empty(5, std::vector<int>(5, 0));
    auto [in_hist, out_hist] = degree_histograms(from_dense(empty), NodeScope::roster);
    REQUIRE(in_hist == DegreeHistogram{{0, 5}});
    REQUIRE(out_hist == DegreeHistogram{{0, 5}});
}

TEST_CASE("degree histograms match adjacency row and column sums", "[metrics][property]") {
    Rng rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        auto a = random_dense(10, 0.3, rng);
        auto [in_impl, out_impl] = degree_histograms(from_dense(a), NodeScope::roster);
        auto [in_or, out_or] = oracle::degree_histograms(a, true);
        REQUIRE(in_impl == in_or);
        REQUIRE(out_impl == out_or);
    }
}

TEST_CASE("reciprocity on canonical graphs", "[metrics]") {
    oracle::Dense mutual{{0, 1}, {1, 0}};
    REQUIRE(reciprocity(from_dense(mutual)) == 1.0);
    oracle::Dense single{{0, 1}, {0, 0}};
    REQUIRE(reciprocity(from_dense(single)) == 0.0);
    oracle::Dense mixed{{0, 1, 1}, {1, 0, 0}, {0, 0, 0}};
    REQUIRE(reciprocity(from_dense(mixed)) == Catch::Approx(2.0 / 3.0));
    oracle::Dense empty(2, std::vector<int>(2, 0));
    REQUIRE_THROWS_AS(reciprocity(from_dense(empty)), analysis_error);
}

TEST_CASE("reciprocal edge counts are even", "[metrics][property]") {
    Rng rng(32);
    for (int trial = 0; trial < 30; ++trial) {
        auto a = random_dense(9, 0.25, rng);
        auto g = from_dense(a);
        if (g.edge_count() == 0) continue;
        double r = reciprocity(g);
        double count = r * static_cast<double>(g.edge_count());
        long rounded = std::lround(count);
        REQUIRE(std::abs(count - static_cast<double>(rounded)) < 1e-9);
        REQUIRE(rounded % 2 == 0);
    }
}

TEST_CASE("clustering on triangle and path", "[metrics]") {
    oracle::Dense triangle{{0, 1, 0}, {0, 0, 1}, {1, 0, 0}};  // directed 3-cycle -> undirected triangle
    REQUIRE(avg_clustering(from_dense(triangle)) == 1.0);
    oracle::Dense path{{0, 1, 0}, {0, 0, 1}, {0, 0, 0}};
    REQUIRE(avg_clustering(from_dense(path)) == 0.0);
}

TEST_CASE("clustering equals exhaustive neighbor-pair enumeration", "[metrics][property]") {
    Rng rng(33);
    for (int trial = 0; trial < 40; ++trial) {
        auto a = random_dense(5, 0.4, rng);
        for (bool exclude : {false, true}) {
            double impl = avg_clustering(from_dense(a), NodeScope::roster, exclude);
            double orc = oracle::clustering(a, true, exclude);
            REQUIRE(impl == Catch::Approx(orc).margin(1e-12));
        }
    }
}

TEST_CASE("average shortest path on canonical graphs", "[metrics]") {
    oracle::Dense cycle{{0, 1, 0}, {0, 0, 1}, {1, 0, 0}};
    REQUIRE(avg_shortest_path_lscc(from_dense(cycle)) == Catch::Approx(1.5));
    oracle::Dense complete(4, std::vector<int>(4, 1));
    for (int i = 0; i < 4; ++i) complete[i][i] = 0;
    REQUIRE(avg_shortest_path_lscc(from_dense(complete)) == 1.0);
    oracle::Dense no_cycle{{0, 1}, {0, 0}};
    REQUIRE_THROWS_AS(avg_shortest_path_lscc(from_dense(no_cycle)), analysis_error);
}

TEST_CASE("average shortest path matches Floyd-Warshall", "[metrics][property]") {
    Rng rng(34);
    int checked = 0;
    for (int trial = 0; trial < 60; ++trial) {
        auto a = random_dense(8, 0.3, rng);
        auto expect = oracle::avg_path_lscc(a);
        if (!expect) {
            REQUIRE_THROWS_AS(avg_shortest_path_lscc(from_dense(a)), analysis_error);
            continue;
        }
        ++checked;
        REQUIRE(avg_shortest_path_lscc(from_dense(a)) == Catch::Approx(*expect).margin(1e-12));
    }
    REQUIRE(checked > 10);
}

TEST_CASE("path length is at least one", "[metrics][property]") {
    Rng rng(35);
    for (int trial = 0; trial < 40; ++trial) {
        auto a = random_dense(7, 0.5, rng);
        try {
            double l = avg_shortest_path_lscc(from_dense(a));
            REQUIRE(l >= 1.0);
        } catch (const analysis_error&) {
        }
    }
    oracle::Dense complete(5, std::vector<int>(5, 1));
    for (int i = 0; i < 5; ++i) complete[i][i] = 0;
    REQUIRE(avg_shortest_path_lscc(from_dense(complete)) == 1.0);
}

TEST_CASE("structural report fields equal individually computed values", "[metrics]") {
    std::vector<FollowEvent> events{{0, 1, 1}, {1, 0, 1}, {1, 2, 2}};
    TemporalNetwork net(3, 2, events);
    auto reports = structural_report(net);
    REQUIRE(reports.size() == 2);

    const auto& w1 = reports[0];
    REQUIRE(w1.week == 1);
    REQUIRE(w1.n_nodes == 2);
    REQUIRE(w1.n_edges == 2);
    REQUIRE(w1.density);
    REQUIRE(*w1.density == 1.0);
    REQUIRE(*w1.reciprocity == 1.0);
    REQUIRE(*w1.avg_path_lscc == 1.0);

    const auto& w2 = reports[1];
    REQUIRE(w2.n_nodes == 3);
    REQUIRE(w2.n_edges == 3);
    REQUIRE(*w2.density == Catch::Approx(3.0 / 6.0));
    REQUIRE(*w2.reciprocity == Catch::Approx(2.0 / 3.0));
}

TEST_CASE("roster-scope density is nondecreasing on cumulative networks", "[metrics][property]") {
    Rng rng(36);
    std::vector<FollowEvent> events;
    FlatEdgeSet seen;
    for (int i = 0; i < 120; ++i) {
        AgentIdx u = static_cast<AgentIdx>(rng.below(15));
        AgentIdx v = static_cast<AgentIdx>(rng.below(15));
        if (u == v || !seen.insert(edge_key(u, v))) continue;
        events.push_back({u, v, static_cast<Week>(rng.below(10) + 1)});
    }
    TemporalNetwork net(15, 10, events);
    MetricsOptions opts;
    opts.scope = NodeScope::roster;
    auto reports = structural_report(net, opts);
    for (std::size_t i = 1; i < reports.size(); ++i) {
        REQUIRE(reports[i].density);
        REQUIRE(*reports[i].density >= *reports[i - 1].density);
    }
}

TEST_CASE("report series records undefined fields as nulls", "[metrics]") {
    // week 1 has no edges at all: density (active), reciprocity, path undefined
    std::vector<FollowEvent> events{{0, 1, 2}};
    TemporalNetwork net(2, 2, events);
    auto reports = structural_report(net);
    REQUIRE_FALSE(reports[0].density);
    REQUIRE_FALSE(reports[0].reciprocity);
    REQUIRE_FALSE(reports[0].avg_path_lscc);
    REQUIRE(reports[1].density);
}

TEST_CASE("histograms sum to the scoped node count", "[metrics][property]") {
    Rng rng(37);
    for (int trial = 0; trial < 20; ++trial) {
        auto a = random_dense(12, 0.2, rng);
        auto g = from_dense(a);
        for (NodeScope scope : {NodeScope::active, NodeScope::roster}) {
            auto [in_hist, out_hist] = degree_histograms(g, scope);
            std::size_t expected = scope_nodes(g, scope).size();
            std::size_t in_total = 0, out_total = 0;
            for (const auto& [k, c] : in_hist) in_total += c;
            for (const auto& [k, c] : out_hist) out_total += c;
            REQUIRE(in_total == expected);
            REQUIRE(out_total == expected);
        }
    }
}
