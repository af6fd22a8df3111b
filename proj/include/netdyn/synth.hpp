#pragma once

// Generative simulator with planted parameters.  Tie formation follows the
// same logistic kernel the selection model estimates (edges, mutual,
// absolute z-score difference); scores follow the mean-reverting influence
// process the panel model estimates.  Every candidate dyad and its
// statistics are recorded in a ledger so estimators can be validated on
// exactly the risk set the generator used.
//
// An optional endogeneity channel plants hidden weekly shocks that enter a
// followee's own score and spill onto the follower's next change.  That
// makes the lagged peer mean correlated with the ego's error (biasing OLS)
// while distance-two scores remain valid instruments.

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "netdyn/core.hpp"
#include "netdyn/graph.hpp"
#include "netdyn/rng.hpp"
#include "netdyn/stats.hpp"
#include "netdyn/temporal_graph.hpp"

namespace netdyn {

struct RegimeSwitch {
    Week week = 0;               // first week governed by the new values
    double theta_abs_after = 0.0;
    double gamma_after = 0.0;
};

struct SimConfig {
    std::size_t n_agents = 500;
    Week n_weeks = 20;

    // two-component base-score mixture, clipped to [0,100]
    double mix_mean1 = 30.0, mix_sd1 = 10.0;
    double mix_mean2 = 75.0, mix_sd2 = 10.0;
    double mix_weight1 = 0.5;

    // formation kernel on the log-odds scale
    double theta_edges = -2.0;
    double theta_mutual = 0.5;
    double theta_abs = 0.0;
    double candidate_rate = 3.0;             // expected candidate dyads per agent per week
    double reciprocal_candidate_frac = 0.1;  // candidates proposed as reversals of existing ties

    // score dynamics
    double phi_sim = 0.2;    // mean reversion toward the agent's base level
    double gamma_sim = 0.0;  // influence toward the lagged mean followee score
    double noise_sd = 2.0;

    // endogeneity channel (0 disables it)
    double hidden_shock_sd = 0.0;
    double endogeneity_rho = 0.0;

    std::optional<RegimeSwitch> regime_switch;
    std::uint64_t seed = 0;

    void validate() const {
        if (n_agents < 2) throw config_error("simulator needs at least two agents");
        if (n_weeks < 2) throw config_error("simulator needs at least two weeks");
        if (!(mix_weight1 >= 0.0 && mix_weight1 <= 1.0))
            throw config_error("mixture weight must lie in [0,1]");
        if (candidate_rate < 0.0 || noise_sd < 0.0 || hidden_shock_sd < 0.0)
            throw config_error("rates and spreads must be nonnegative");
        if (!(reciprocal_candidate_frac >= 0.0 && reciprocal_candidate_frac <= 1.0))
            throw config_error("reciprocal candidate fraction must lie in [0,1]");
        if (!(phi_sim >= 0.0 && phi_sim <= 1.0)) throw config_error("mean-reversion rate must lie in [0,1]");
        if (gamma_sim < 0.0) throw config_error("influence rate must be nonnegative");
        if (regime_switch && (regime_switch->week < 1 || regime_switch->week > n_weeks))
            throw config_error("regime switch week out of range");
    }
};

struct LedgerRow {
    Week week = 0;   // the week the tie would appear in (transition end)
    AgentIdx i = 0;
    AgentIdx j = 0;
    bool mutual = false;
    double absdiff = 0.0;
    bool formed = false;
};

struct SimTruth {
    SimConfig config;
    std::vector<LedgerRow> ledger;
    std::vector<std::size_t> formed_per_week;  // indexed week-1
};

struct SimResult {
    std::size_t n_agents = 0;
    Week n_weeks = 0;
    std::vector<FollowEvent> events;
    std::vector<ScoreObs> scores;  // integer-valued, every agent-week
    SimTruth truth;
};

namespace detail {

inline double clip_score(double x) { return x < 0.0 ? 0.0 : (x > 100.0 ? 100.0 : x); }

inline double sigmoid_prob(double eta) {
    if (eta > 40.0) return 1.0;
    if (eta < -40.0) return 0.0;
    return 1.0 / (1.0 + std::exp(-eta));
}

} // namespace detail

inline SimResult simulate(const SimConfig& config) {
    config.validate();
    const std::size_t n = config.n_agents;
    const Week T = config.n_weeks;
    Rng rng(derive_seed(config.seed, 0x51713));

    SimResult result;
    result.n_agents = n;
    result.n_weeks = T;
    result.truth.config = config;
    result.truth.formed_per_week.assign(T, 0);

    auto theta_abs_at = [&](Week w) {
        if (config.regime_switch && w >= config.regime_switch->week)
            return config.regime_switch->theta_abs_after;
        return config.theta_abs;
    };
    auto gamma_at = [&](Week w) {
        if (config.regime_switch && w >= config.regime_switch->week) return config.regime_switch->gamma_after;
        return config.gamma_sim;
    };

    // base levels and week-1 scores
    std::vector<double> mu(n), x(n);
    std::vector<double> hidden(n, 0.0);  // hidden shock of the current week
    for (std::size_t i = 0; i < n; ++i) {
        bool first = rng.uniform01() < config.mix_weight1;
        mu[i] = detail::clip_score(first ? rng.normal(config.mix_mean1, config.mix_sd1)
                                         : rng.normal(config.mix_mean2, config.mix_sd2));
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (config.hidden_shock_sd > 0.0) hidden[i] = rng.normal(0.0, config.hidden_shock_sd);
        x[i] = detail::clip_score(mu[i] + hidden[i]);
    }

    FlatEdgeSet exists(static_cast<std::size_t>(config.candidate_rate * n * T) + 16);
    std::vector<std::vector<AgentIdx>> out_nbrs(n), in_nbrs(n);

    std::vector<double> z(n), prev_x(n), prev_hidden(n);
    auto record_scores = [&](Week w) {
        for (std::size_t i = 0; i < n; ++i)
            result.scores.push_back({static_cast<AgentIdx>(i), w, std::round(x[i])});
    };

    auto formation_round = [&](Week w, std::span<const double> scores_at_start) {
        // standardize the interval-start scores over the full population
        for (std::size_t i = 0; i < n; ++i) z[i] = scores_at_start[i];
        Moments zm = moments(z);
        double sd = zm.sd > 0.0 ? zm.sd : 1.0;
        for (std::size_t i = 0; i < n; ++i) z[i] = (z[i] - zm.mean) / sd;

        double th_abs = theta_abs_at(w);
        FlatEdgeSet round_seen;
        std::vector<Edge> formed_now;
        for (std::size_t i = 0; i < n; ++i) {
            std::uint64_t k = rng.poisson(config.candidate_rate);
            for (std::uint64_t c = 0; c < k; ++c) {
                AgentIdx u = static_cast<AgentIdx>(i);
                AgentIdx v;
                if (!in_nbrs[i].empty() && rng.uniform01() < config.reciprocal_candidate_frac) {
                    v = in_nbrs[i][rng.below(in_nbrs[i].size())];
                } else {
                    v = static_cast<AgentIdx>(rng.below(n));
                }
                if (u == v) continue;
                std::uint64_t key = edge_key(u, v);
                if (exists.contains(key)) continue;     // ties persist
                if (!round_seen.insert(key)) continue;  // one decision per dyad per week
                LedgerRow row;
                row.week = w;
                row.i = u;
                row.j = v;
                row.mutual = exists.contains(edge_key(v, u));
                row.absdiff = std::abs(z[u] - z[v]);
                double eta = config.theta_edges + (row.mutual ? config.theta_mutual : 0.0) +
                             th_abs * row.absdiff;
                row.formed = rng.uniform01() < detail::sigmoid_prob(eta);
                result.truth.ledger.push_back(row);
                if (row.formed) formed_now.emplace_back(u, v);
            }
        }
        for (const auto& [u, v] : formed_now) {
            exists.insert(edge_key(u, v));
            out_nbrs[u].push_back(v);
            in_nbrs[v].push_back(u);
            result.events.push_back({u, v, w});
        }
        result.truth.formed_per_week[w - 1] = formed_now.size();
    };

    // week 1: scores exist, seed formation round against the empty network
    record_scores(1);
    formation_round(1, x);

    for (Week w = 2; w <= T; ++w) {
        prev_x = x;
        prev_hidden = hidden;
        // influence update first: X_w depends on X_{w-1} and the week w-1
        // network, so peer sets must be read before this week's formation
        // round extends the adjacency
        double gamma_w = gamma_at(w);
        for (std::size_t i = 0; i < n; ++i) {
            double next = prev_x[i] + config.phi_sim * (mu[i] - prev_x[i]);
            if (config.hidden_shock_sd > 0.0)
                hidden[i] = rng.normal(0.0, config.hidden_shock_sd);
            else
                hidden[i] = 0.0;
            double peer_sum = 0.0, spill_sum = 0.0;
            std::size_t peer_count = 0;
            for (AgentIdx j : out_nbrs[i]) {
                peer_sum += prev_x[j];
                spill_sum += prev_hidden[j];
                ++peer_count;
            }
            if (peer_count > 0) {
                double peer_mean = peer_sum / static_cast<double>(peer_count);
                next += gamma_w * (peer_mean - prev_x[i]);
                next += config.endogeneity_rho * (spill_sum / static_cast<double>(peer_count));
            }
            next += hidden[i];
            if (config.noise_sd > 0.0) next += rng.normal(0.0, config.noise_sd);
            x[i] = detail::clip_score(next);
        }
        // formation for week w: interval-start scores, week w-1 network
        formation_round(w, prev_x);
        record_scores(w);
    }

    return result;
}

// Machine-readable record of the planted parameters (the config embedded in
// SimTruth, ledger sizes, and per-week formation counts).
inline SimTruth planted_truth(const SimResult& result) { return result.truth; }

} // namespace netdyn
