#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "netdyn/homophily.hpp"
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

} // namespace

TEST_CASE("perfectly assortative and disassortative configurations", "[homophily]") {
    // edges {(a,b),(c,d)} with scores 0,0,100,100
    std::vector<Edge> edges{{0, 1}, {2, 3}};
    AdjacencyGraph g(4, edges);
    std::vector<double> scores{0, 0, 100, 100};
    REQUIRE(numeric_assortativity(g, scores) == Catch::Approx(1.0));

    // directed 4-cycle with alternating scores
    std::vector<Edge> cycle{{0, 1}, {1, 2}, {2, 3}, {3, 0}};
    AdjacencyGraph c(4, cycle);
    std::vector<double> alt{0, 100, 0, 100};
    REQUIRE(numeric_assortativity(c, alt) == Catch::Approx(-1.0));
}

TEST_CASE("assortativity equals an independent pair-list correlation", "[homophily][property]") {
    Rng rng(51);
    for (int trial = 0; trial < 25; ++trial) {
        std::size_t n = 12;
        oracle::Dense a(n, std::vector<int>(n, 0));
        std::size_t placed = 0;
        while (placed < 50) {
            std::size_t i = rng.below(n), j = rng.below(n);
            if (i == j || a[i][j]) continue;
            a[i][j] = 1;
            ++placed;
        }
        std::vector<double> scores(n);
        for (double& s : scores) s = std::floor(rng.uniform01() * 101.0);
        auto g = from_dense(a);
        for (bool undirected : {false, true}) {
            auto expect = oracle::assortativity(a, scores, undirected);
            AssortMode mode = undirected ? AssortMode::undirected : AssortMode::directed;
            if (!expect) {
                REQUIRE_THROWS_AS(numeric_assortativity(g, scores, mode), analysis_error);
            } else {
                REQUIRE(numeric_assortativity(g, scores, mode) == Catch::Approx(*expect).margin(1e-12));
            }
        }
    }
}

TEST_CASE("assortativity is invariant under affine transforms of all scores", "[homophily][property]") {
    // both endpoints are transformed, so the sign of the scale factor
    // cancels: corr(ax+b, ay+b) = corr(x, y) for any a != 0
    Rng rng(52);
    std::vector<Edge> edges;
    FlatEdgeSet seen;
    std::size_t n = 20;
    while (edges.size() < 60) {
        AgentIdx u = static_cast<AgentIdx>(rng.below(n)), v = static_cast<AgentIdx>(rng.below(n));
        if (u == v || !seen.insert(edge_key(u, v))) continue;
        edges.emplace_back(u, v);
    }
    AdjacencyGraph g(n, edges);
    std::vector<double> scores(n);
    for (double& s : scores) s = rng.uniform01() * 100.0;
    double base = numeric_assortativity(g, scores);
    std::vector<double> scaled(n), flipped(n);
    for (std::size_t i = 0; i < n; ++i) {
        scaled[i] = 3.5 * scores[i] + 11.0;
        flipped[i] = -2.0 * scores[i] + 7.0;
    }
    REQUIRE(numeric_assortativity(g, scaled) == Catch::Approx(base).margin(1e-10));
    REQUIRE(numeric_assortativity(g, flipped) == Catch::Approx(base).margin(1e-10));
}

TEST_CASE("undirected r equals directed r on a symmetric edge set", "[homophily]") {
    Rng rng(53);
    std::size_t n = 15;
    std::vector<Edge> edges;
    FlatEdgeSet seen;
    while (edges.size() < 40) {
        AgentIdx u = static_cast<AgentIdx>(rng.below(n)), v = static_cast<AgentIdx>(rng.below(n));
        if (u == v) continue;
        if (seen.insert(edge_key(u, v))) edges.emplace_back(u, v);
        if (seen.insert(edge_key(v, u))) edges.emplace_back(v, u);
    }
    AdjacencyGraph g(n, edges);
    std::vector<double> scores(n);
    for (double& s : scores) s = std::floor(rng.uniform01() * 101.0);
    double dir = numeric_assortativity(g, scores, AssortMode::directed);
    double undir = numeric_assortativity(g, scores, AssortMode::undirected);
    REQUIRE(undir == Catch::Approx(dir).margin(1e-12));
}

TEST_CASE("missing endpoint scores exclude the edge and are counted", "[homophily]") {
    std::vector<Edge> edges{{0, 1}, {1, 3}, {2, 3}, {0, 3}};
    AdjacencyGraph g(4, edges);
    std::vector<double> scores{10, 20, std::numeric_limits<double>::quiet_NaN(), 40};
    AssortDiagnostics diag;
    numeric_assortativity(g, scores, AssortMode::directed, UndirectedTreatment::symmetrize, &diag);
    REQUIRE(diag.n_pairs == 3);
    REQUIRE(diag.excluded_missing == 1);
}

TEST_CASE("zero endpoint variance is an error", "[homophily]") {
    std::vector<Edge> edges{{0, 1}, {2, 3}};
    AdjacencyGraph g(4, edges);
    std::vector<double> scores{50, 50, 50, 50};
    REQUIRE_THROWS_AS(numeric_assortativity(g, scores), analysis_error);
}

TEST_CASE("null band over identical samples has zero sd", "[homophily]") {
    std::vector<double> samples(10, 0.25);
    NullBand band = null_band_from_samples(samples);
    REQUIRE(band.mean == Catch::Approx(0.25));
    REQUIRE(band.sd == 0.0);
    REQUIRE(band.n_defined == 10);
}

TEST_CASE("null band of two samples matches hand computation", "[homophily]") {
    std::vector<double> samples{0.1, 0.3};
    NullBand band = null_band_from_samples(samples);
    REQUIRE(band.mean == Catch::Approx(0.2));
    REQUIRE(band.sd == Catch::Approx(0.1414213562).epsilon(1e-9));
}

TEST_CASE("undefined realizations are excluded and counted", "[homophily]") {
    std::vector<double> samples{0.2, std::numeric_limits<double>::quiet_NaN(), 0.4};
    NullBand band = null_band_from_samples(samples);
    REQUIRE(band.n_defined == 2);
    REQUIRE(band.n_undefined == 1);
    std::vector<double> all_bad(3, std::numeric_limits<double>::quiet_NaN());
    REQUIRE_THROWS_AS(null_band_from_samples(all_bad), analysis_error);
}

TEST_CASE("configuration-null band contains zero for shuffled scores", "[homophily][property]") {
    Rng rng(54);
    std::size_t n = 100;
    std::vector<Edge> edges;
    FlatEdgeSet seen;
    while (edges.size() < 300) {
        AgentIdx u = static_cast<AgentIdx>(rng.below(n)), v = static_cast<AgentIdx>(rng.below(n));
        if (u == v || !seen.insert(edge_key(u, v))) continue;
        edges.emplace_back(u, v);
    }
    AdjacencyGraph g(n, edges);
    std::vector<double> scores(n);
    for (double& s : scores) s = std::floor(rng.uniform01() * 101.0);

    std::vector<NullRealization> reals;
    for (std::uint64_t seed = 0; seed < 100; ++seed)
        reals.push_back(sample_configuration(g, scores, seed));
    NullBand band = null_band(reals, n);
    REQUIRE(std::abs(band.mean) <= 3.0 * band.sd);
}

TEST_CASE("single-week series produces one row", "[homophily]") {
    std::vector<FollowEvent> events{{0, 1, 1}, {1, 2, 1}, {2, 0, 1}, {0, 2, 1}};
    TemporalNetwork net(3, 1, events);
    std::vector<ScoreObs> obs{{0, 1, 10}, {1, 1, 50}, {2, 1, 90}};
    ScorePanel panel = impute_scores(obs, 3, 1);
    WeeklyEnsembles ens;
    auto series = homophily_series(net, panel, ens);
    REQUIRE(series.size() == 1);
    REQUIRE(series[0].week == 1);
    REQUIRE(series[0].r_directed);
    REQUIRE_FALSE(series[0].config.mean);
}

TEST_CASE("series bands carry z-scores against both ensembles", "[homophily]") {
    Rng rng(55);
    std::size_t n = 60;
    std::vector<FollowEvent> events;
    FlatEdgeSet seen;
    int placed = 0;
    while (placed < 180) {
        AgentIdx u = static_cast<AgentIdx>(rng.below(n)), v = static_cast<AgentIdx>(rng.below(n));
        if (u == v || !seen.insert(edge_key(u, v))) continue;
        events.push_back({u, v, static_cast<Week>(rng.below(2) + 1)});
        ++placed;
    }
    TemporalNetwork net(n, 2, events);
    std::vector<ScoreObs> obs;
    for (AgentIdx a = 0; a < n; ++a)
        for (Week t = 1; t <= 2; ++t) obs.push_back({a, t, std::floor(rng.uniform01() * 101.0)});
    ScorePanel panel = impute_scores(obs, n, 2);

    WeeklyEnsembles ens;
    NullEnsembleSpec cfg;
    cfg.kind = NullKind::configuration;
    cfg.realizations = 30;
    cfg.seed = 5;
    ens.configuration = generate_ensemble(net, panel, cfg);
    NullEnsembleSpec jd;
    jd.kind = NullKind::joint_degree;
    jd.realizations = 30;
    jd.seed = 6;
    ens.joint_degree = generate_ensemble(net, panel, jd);

    auto series = homophily_series(net, panel, ens);
    for (const auto& row : series) {
        REQUIRE(row.r_directed);
        REQUIRE(row.config.mean);
        REQUIRE(row.config.z);
        REQUIRE(row.joint.mean);
        REQUIRE(row.joint.z);
        REQUIRE(row.config.n_defined == 30);
    }
}
