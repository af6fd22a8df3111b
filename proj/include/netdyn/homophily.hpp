#pragma once

// Scalar (numeric) assortativity of attribute values across edges, and the
// weekly series benchmarked against null ensembles.

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "netdyn/core.hpp"
#include "netdyn/graph.hpp"
#include "netdyn/nulls.hpp"
#include "netdyn/stats.hpp"

namespace netdyn {

enum class AssortMode { directed, undirected };

// How the undirected variant treats reciprocal directed edges: symmetrize
// keeps both orientations of every directed edge; collapse reduces each
// unordered pair to a single undirected edge first.
enum class UndirectedTreatment { symmetrize, collapse };

struct AssortDiagnostics {
    std::size_t n_pairs = 0;
    std::size_t excluded_missing = 0;
};

// Pearson correlation of the paired attribute values at the two ends of
// each edge; directed mode pairs (source, target), undirected mode includes
// each edge in both orientations.  Edges with a missing endpoint value are
// excluded and counted.  Two-pass accumulation, no materialized pair list.
template <DirectedGraph G>
double numeric_assortativity(const G& g, std::span<const double> scores,
                             AssortMode mode = AssortMode::directed,
                             UndirectedTreatment treatment = UndirectedTreatment::symmetrize,
                             AssortDiagnostics* diag = nullptr) {
    auto edge_usable = [&](AgentIdx u, AgentIdx v) {
        return !std::isnan(scores[u]) && !std::isnan(scores[v]);
    };
    // In collapse mode each unordered pair is visited once: from its
    // lexicographically smaller directed representative.
    auto visit_pairs = [&](auto&& fn) {
        std::size_t excluded = 0;
        g.for_each_edge([&](AgentIdx u, AgentIdx v) {
            if (mode == AssortMode::undirected && treatment == UndirectedTreatment::collapse &&
                u > v && g.has_edge(v, u))
                return;  // the (v,u) representative covers this pair
            if (!edge_usable(u, v)) {
                ++excluded;
                return;
            }
            fn(scores[u], scores[v]);
            if (mode == AssortMode::undirected) fn(scores[v], scores[u]);
        });
        return excluded;
    };

    double sx = 0.0, sy = 0.0;
    std::size_t n = 0;
    std::size_t excluded = visit_pairs([&](double x, double y) {
        sx += x;
        sy += y;
        ++n;
    });
    if (diag) {
        diag->n_pairs = n;
        diag->excluded_missing = excluded;
    }
    if (n < 2) throw analysis_error("assortativity needs at least two endpoint pairs");
    double mx = sx / static_cast<double>(n);
    double my = sy / static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    visit_pairs([&](double x, double y) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    });
    if (!(sxx > 0.0) || !(syy > 0.0))
        throw analysis_error("assortativity undefined: zero variance at edge endpoints");
    return sxy / std::sqrt(sxx * syy);
}

// ---------------------------------------------------------------------------
// Null bands.

struct NullBand {
    double mean = 0.0;
    double sd = 0.0;  // sample sd across realizations
    std::size_t n_defined = 0;
    std::size_t n_undefined = 0;
};

// Band from precomputed per-realization assortativity samples (NaN =
// undefined realization, excluded and counted).
inline NullBand null_band_from_samples(std::span<const double> samples) {
    std::vector<double> defined;
    defined.reserve(samples.size());
    std::size_t undefined = 0;
    for (double r : samples) {
        if (std::isnan(r))
            ++undefined;
        else
            defined.push_back(r);
    }
    if (defined.empty()) throw analysis_error("all null realizations had undefined assortativity");
    Moments m = moments(defined);
    return {m.mean, m.sd, defined.size(), undefined};
}

// Band over materialized realizations of one week.
inline NullBand null_band(std::span<const NullRealization> realizations, std::size_t n_nodes,
                          AssortMode mode = AssortMode::directed,
                          UndirectedTreatment treatment = UndirectedTreatment::symmetrize) {
    std::vector<double> samples;
    samples.reserve(realizations.size());
    for (const NullRealization& real : realizations) {
        AdjacencyGraph g(n_nodes, real.edges);
        double r;
        try {
            r = numeric_assortativity(g, real.scores, mode, treatment);
        } catch (const analysis_error&) {
            r = std::numeric_limits<double>::quiet_NaN();
        }
        samples.push_back(r);
    }
    return null_band_from_samples(samples);
}

// ---------------------------------------------------------------------------
// Weekly series.

struct EnsembleBand {
    std::optional<double> mean, sd, z;
    std::size_t n_defined = 0, n_undefined = 0;
};

struct AssortativityResult {
    Week week = 0;
    std::optional<double> r_directed;
    std::optional<double> r_undirected;
    EnsembleBand config;  // configuration-model ensemble
    EnsembleBand joint;   // joint-degree ensemble
};

namespace detail {

inline EnsembleBand band_with_z(const NullBand& band, std::optional<double> r_emp) {
    EnsembleBand out;
    out.mean = band.mean;
    out.sd = band.sd;
    out.n_defined = band.n_defined;
    out.n_undefined = band.n_undefined;
    if (r_emp) {
        if (band.sd > 0.0)
            out.z = (*r_emp - band.mean) / band.sd;
        else if (*r_emp == band.mean)
            out.z = 0.0;
    }
    return out;
}

} // namespace detail

struct WeeklyEnsembles {
    // indexed [week-1][replicate]; either list may be empty
    std::vector<std::vector<NullRealization>> configuration;
    std::vector<std::vector<NullRealization>> joint_degree;
};

// Empirical weekly assortativity plus null bands and z-scores.  Bands use
// directed assortativity, matching the headline series.  Weeks where a
// quantity is undefined get empty fields rather than aborting the series.
inline std::vector<AssortativityResult> homophily_series(const TemporalNetwork& net, const ScorePanel& panel,
                                                         const WeeklyEnsembles& ensembles,
                                                         UndirectedTreatment treatment = UndirectedTreatment::symmetrize,
                                                         unsigned workers = 1) {
    std::vector<AssortativityResult> series(net.n_weeks());
    parallel_for(net.n_weeks(), workers, [&](std::size_t wi) {
        Week t = static_cast<Week>(wi + 1);
        AssortativityResult& res = series[wi];
        res.week = t;
        SnapshotView snap = net.snapshot(t);
        std::vector<double> scores(net.n_agents(), std::numeric_limits<double>::quiet_NaN());
        for (AgentIdx a = 0; a < net.n_agents(); ++a)
            if (panel.kept(a)) scores[a] = panel.completed(a, t);
        try {
            res.r_directed = numeric_assortativity(snap, scores, AssortMode::directed);
        } catch (const analysis_error&) {
        }
        try {
            res.r_undirected = numeric_assortativity(snap, scores, AssortMode::undirected, treatment);
        } catch (const analysis_error&) {
        }
        if (wi < ensembles.configuration.size() && !ensembles.configuration[wi].empty()) {
            try {
                res.config = detail::band_with_z(
                    null_band(ensembles.configuration[wi], net.n_agents(), AssortMode::directed), res.r_directed);
            } catch (const analysis_error&) {
            }
        }
        if (wi < ensembles.joint_degree.size() && !ensembles.joint_degree[wi].empty()) {
            try {
                res.joint = detail::band_with_z(
                    null_band(ensembles.joint_degree[wi], net.n_agents(), AssortMode::directed), res.r_directed);
            } catch (const analysis_error&) {
            }
        }
    });
    return series;
}

} // namespace netdyn
