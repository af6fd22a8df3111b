#pragma once

// Formation-only temporal ERGM on rolling blocks of weekly snapshots:
// risk sets of unconnected dyads, change statistics for the edges / mutual
// / absolute-score-difference terms, and maximum pseudo-likelihood
// estimation (logistic regression by Newton iteration).
//
// Estimation works transition by transition.  Small rosters enumerate the
// full risk set through per-transition bitmaps and never materialize rows;
// large rosters keep every formation event and subsample non-events at a
// fixed ratio, with the usual case-control offset log(1/p0) added to the
// linear predictor so the intercept stays interpretable.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "netdyn/core.hpp"
#include "netdyn/linalg.hpp"
#include "netdyn/rng.hpp"
#include "netdyn/stats.hpp"
#include "netdyn/temporal_graph.hpp"

namespace netdyn {

class separation_error : public analysis_error {
public:
    using analysis_error::analysis_error;
};

// ---------------------------------------------------------------------------
// Blocks.

struct BlockSpec {
    Week first = 0;
    Week last = 0;  // inclusive

    Week length() const { return last - first + 1; }
    bool operator==(const BlockSpec&) const = default;
};

// Consecutive blocks of block_len weeks covering 1..T; the final block may
// be shorter.  A single-week tail has no transition and merges into the
// preceding block.
inline std::vector<BlockSpec> make_blocks(Week T, Week block_len = 8) {
    if (block_len < 2) throw config_error("block length must be >= 2");
    if (T < 2) throw config_error("need at least two weeks to form a block");
    std::vector<BlockSpec> blocks;
    for (Week start = 1; start <= T; start += block_len)
        blocks.push_back({start, std::min<Week>(T, start + block_len - 1)});
    if (blocks.size() > 1 && blocks.back().length() < 2) {
        blocks[blocks.size() - 2].last = blocks.back().last;
        blocks.pop_back();
    }
    return blocks;
}

// ---------------------------------------------------------------------------
// Risk sets and change statistics.

struct RiskSetRow {
    AgentIdx i = 0;
    AgentIdx j = 0;
    Week t = 0;          // transition (t, t+1)
    bool formed = false;  // (i,j) in E^(t+1)
    bool mutual = false;  // (j,i) in E^(t+1)
    double absdiff = 0.0; // |z_i - z_j| with week-t standardized scores
    double offset = 0.0;  // case-control offset; 0 without subsampling
};

// All ordered dyads (i,j), i != j, both endpoints active at week t+1, with
// (i,j) absent from E^(t).  Materialized; intended for modest rosters (the
// block fitter streams instead).
inline std::vector<std::pair<AgentIdx, AgentIdx>> formation_risk_set(const TemporalNetwork& net, Week t) {
    if (t + 1 > net.n_weeks()) throw config_error("transition start must satisfy t < T");
    SnapshotView next = net.snapshot(t + 1);
    std::vector<AgentIdx> eligible = active_nodes(next);
    if (eligible.size() > 6000)
        throw analysis_error("risk set too large to materialize; use fit_block");
    std::vector<std::pair<AgentIdx, AgentIdx>> dyads;
    for (AgentIdx i : eligible)
        for (AgentIdx j : eligible) {
            if (i == j) continue;
            Week w = net.first_week(i, j);
            if (w != 0 && w <= t) continue;
            dyads.emplace_back(i, j);
        }
    return dyads;
}

// Change statistics for each risk-set dyad.  z_scores_t is indexed by
// global agent id (NaN = missing; such rows are dropped and counted).
inline std::vector<RiskSetRow> change_statistics(const TemporalNetwork& net,
                                                 std::span<const std::pair<AgentIdx, AgentIdx>> dyads,
                                                 Week t, std::span<const double> z_scores_t,
                                                 std::size_t* dropped_missing = nullptr) {
    std::vector<RiskSetRow> rows;
    rows.reserve(dyads.size());
    std::size_t dropped = 0;
    for (const auto& [i, j] : dyads) {
        double zi = z_scores_t[i], zj = z_scores_t[j];
        if (std::isnan(zi) || std::isnan(zj)) {
            ++dropped;
            continue;
        }
        RiskSetRow row;
        row.i = i;
        row.j = j;
        row.t = t;
        Week wij = net.first_week(i, j);
        row.formed = wij != 0 && wij <= t + 1;
        Week wji = net.first_week(j, i);
        row.mutual = wji != 0 && wji <= t + 1;  // end-of-interval conditioning
        row.absdiff = std::abs(zi - zj);
        rows.push_back(row);
    }
    if (dropped_missing) *dropped_missing = dropped;
    return rows;
}

// ---------------------------------------------------------------------------
// Logistic MPLE core: y ~ intercept + mutual + absdiff with optional
// per-row offsets.  Newton iteration; standard errors from the inverse
// observed information.

struct LogisticFit {
    double beta[3] = {0, 0, 0};  // edges (intercept), mutual, absdiff
    double se[3] = {0, 0, 0};
    bool converged = false;
    int iterations = 0;
    double max_abs_gradient = 0.0;
    std::size_t n_rows = 0;
    std::size_t n_events = 0;
    double fitted_event_sum = 0.0;  // sum of fitted probabilities at the optimum
};

namespace detail {

inline double sigmoid(double eta) {
    if (eta > 40.0) return 1.0;
    if (eta < -40.0) return 0.0;
    return 1.0 / (1.0 + std::exp(-eta));
}

// for_each_rows(fn) must call fn(y, mutual, absdiff, offset) for every row.
template <typename ForEachRows>
LogisticFit fit_logistic3(ForEachRows&& for_each_rows, double grad_tol = 1e-8, int max_iter = 50,
                          double separation_bound = 15.0) {
    LogisticFit fit;
    {
        std::size_t rows = 0, events = 0;
        for_each_rows([&](double y, double, double, double) {
            ++rows;
            if (y > 0.5) ++events;
        });
        fit.n_rows = rows;
        fit.n_events = events;
        if (rows == 0) throw analysis_error("risk set has no rows");
        if (events == 0) throw separation_error("all rows unformed: intercept diverges");
        if (events == rows) throw separation_error("all rows formed: intercept diverges");
    }
    double beta[3] = {0, 0, 0};
    std::vector<double> hess(9);
    auto loglik_at = [&](const double b[3]) {
        double ll = 0.0;
        for_each_rows([&](double y, double x1, double x2, double offset) {
            double eta = offset + b[0] + b[1] * x1 + b[2] * x2;
            // log-likelihood contribution y*eta - log(1 + e^eta), stable form
            double log1pe = eta > 30.0 ? eta : std::log1p(std::exp(eta));
            ll += y * eta - log1pe;
        });
        return ll;
    };
    double current_ll = loglik_at(beta);
    for (int iter = 1; iter <= max_iter; ++iter) {
        double g[3] = {0, 0, 0};
        double h[6] = {0, 0, 0, 0, 0, 0};  // packed upper triangle of X'WX
        double fitted_sum = 0.0;
        for_each_rows([&](double y, double x1, double x2, double offset) {
            double eta = offset + beta[0] + beta[1] * x1 + beta[2] * x2;
            double p = sigmoid(eta);
            double r = y - p;
            double w = p * (1.0 - p);
            g[0] += r;
            g[1] += r * x1;
            g[2] += r * x2;
            h[0] += w;
            h[1] += w * x1;
            h[2] += w * x2;
            h[3] += w * x1 * x1;
            h[4] += w * x1 * x2;
            h[5] += w * x2 * x2;
            fitted_sum += p;
        });
        fit.iterations = iter;
        fit.max_abs_gradient = std::max({std::abs(g[0]), std::abs(g[1]), std::abs(g[2])});
        fit.fitted_event_sum = fitted_sum;
        if (fit.max_abs_gradient < grad_tol) {
            fit.converged = true;
            break;
        }
        hess = {h[0], h[1], h[2], h[1], h[3], h[4], h[2], h[4], h[5]};
        std::vector<double> delta;
        if (!solve_spd(hess, 3, {g[0], g[1], g[2]}, delta))
            throw collinearity_error("singular information matrix in MPLE");
        // step-halving keeps the ascent monotone; Newton can overshoot on
        // sharply bimodal covariates.  The acceptance tolerance scales with
        // |ll| so summation roundoff never rejects a converged step.
        double trial[3];
        double step = 1.0;
        double trial_ll = -std::numeric_limits<double>::infinity();
        double ll_tol = 1e-9 * (1.0 + std::abs(current_ll));
        for (int halving = 0; halving < 30; ++halving) {
            for (int k = 0; k < 3; ++k) trial[k] = beta[k] + step * delta[k];
            trial_ll = loglik_at(trial);
            if (trial_ll >= current_ll - ll_tol) break;
            step *= 0.5;
        }
        for (int k = 0; k < 3; ++k) beta[k] = trial[k];
        current_ll = trial_ll;
        for (int k = 0; k < 3; ++k)
            if (std::abs(beta[k]) > separation_bound)
                throw separation_error("coefficient diverged: perfect separation suspected");
    }
    // observed information at the final estimate
    {
        double h[6] = {0, 0, 0, 0, 0, 0};
        for_each_rows([&](double, double x1, double x2, double offset) {
            double eta = offset + beta[0] + beta[1] * x1 + beta[2] * x2;
            double p = sigmoid(eta);
            double w = p * (1.0 - p);
            h[0] += w;
            h[1] += w * x1;
            h[2] += w * x2;
            h[3] += w * x1 * x1;
            h[4] += w * x1 * x2;
            h[5] += w * x2 * x2;
        });
        hess = {h[0], h[1], h[2], h[1], h[3], h[4], h[2], h[4], h[5]};
        std::vector<double> cov;
        if (!spd_inverse(hess, 3, cov))
            throw collinearity_error("singular information matrix in MPLE");
        for (int k = 0; k < 3; ++k) {
            fit.beta[k] = beta[k];
            fit.se[k] = std::sqrt(cov[k * 3 + k]);
        }
    }
    return fit;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Fits.

struct FormationFit {
    BlockSpec block;
    double phi_edges = 0.0, phi_mutual = 0.0, phi_abs = 0.0;
    double se_edges = 0.0, se_mutual = 0.0, se_abs = 0.0;
    double odds_ratio_abs = 1.0;  // exp(phi_abs)
    std::size_t n_rows = 0;
    std::size_t n_events = 0;
    bool converged = false;
    int iterations = 0;
    double max_abs_gradient = 0.0;
    double fitted_event_sum = 0.0;
    bool subsampled = false;
};

namespace detail {

inline FormationFit to_formation_fit(const LogisticFit& lf) {
    FormationFit fit;
    fit.phi_edges = lf.beta[0];
    fit.phi_mutual = lf.beta[1];
    fit.phi_abs = lf.beta[2];
    fit.se_edges = lf.se[0];
    fit.se_mutual = lf.se[1];
    fit.se_abs = lf.se[2];
    fit.odds_ratio_abs = std::exp(lf.beta[2]);
    fit.n_rows = lf.n_rows;
    fit.n_events = lf.n_events;
    fit.converged = lf.converged;
    fit.iterations = lf.iterations;
    fit.max_abs_gradient = lf.max_abs_gradient;
    fit.fitted_event_sum = lf.fitted_event_sum;
    return fit;
}

} // namespace detail

// MPLE over materialized rows.
inline FormationFit fit_formation_mple(std::span<const RiskSetRow> rows) {
    auto visit = [rows](auto&& fn) {
        for (const RiskSetRow& row : rows)
            fn(row.formed ? 1.0 : 0.0, row.mutual ? 1.0 : 0.0, row.absdiff, row.offset);
    };
    return detail::to_formation_fit(detail::fit_logistic3(visit));
}

struct SelectionOptions {
    Week block_len = 8;
    std::size_t full_enum_threshold = 3000;  // actors; above this, subsample non-events
    double subsample_ratio = 20.0;           // sampled non-events per event
    std::uint64_t seed = 0;
    unsigned workers = 1;
};

namespace detail {

inline std::size_t local_index(const std::vector<AgentIdx>& sorted, AgentIdx a) {
    return static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), a) - sorted.begin());
}

// One transition's rows: either a bitmap-backed full enumeration or a
// materialized event + sampled-non-event list.
struct TransitionRows {
    Week t = 0;
    // bitmap representation over local indices of `eligible`
    std::vector<AgentIdx> eligible;
    std::vector<double> z;                   // z[k] for eligible[k], week t
    std::vector<std::uint64_t> exists_bits;  // E^(t)
    std::vector<std::uint64_t> next_bits;    // E^(t+1)
    bool enumerated = false;
    std::vector<RiskSetRow> rows;  // when subsampled

    static bool test_bit(const std::vector<std::uint64_t>& bits, std::size_t idx) {
        return (bits[idx >> 6] >> (idx & 63)) & 1u;
    }
    static void set_bit(std::vector<std::uint64_t>& bits, std::size_t idx) {
        bits[idx >> 6] |= (std::uint64_t{1} << (idx & 63));
    }

    template <typename F>
    void for_each(F&& fn) const {
        if (!enumerated) {
            for (const RiskSetRow& row : rows)
                fn(row.formed ? 1.0 : 0.0, row.mutual ? 1.0 : 0.0, row.absdiff, row.offset);
            return;
        }
        std::size_t a = eligible.size();
        for (std::size_t i = 0; i < a; ++i) {
            double zi = z[i];
            std::size_t base = i * a;
            for (std::size_t j = 0; j < a; ++j) {
                if (i == j || test_bit(exists_bits, base + j)) continue;
                double formed = test_bit(next_bits, base + j) ? 1.0 : 0.0;
                double mutual = test_bit(next_bits, j * a + i) ? 1.0 : 0.0;
                fn(formed, mutual, std::abs(zi - z[j]), 0.0);
            }
        }
    }
};

} // namespace detail

// Pools risk-set rows over every transition of a block into one MPLE fit.
// Block roster: actors incident to an edge by the block's last week,
// intersected with the completed score panel; scores are standardized per
// week over that roster.
inline FormationFit fit_block(const TemporalNetwork& net, const ScorePanel& panel, const BlockSpec& block,
                              const SelectionOptions& opts = {}) {
    if (block.length() < 2) throw config_error("block needs at least one transition");
    if (block.last > net.n_weeks()) throw config_error("block extends past the last week");

    // block roster
    SnapshotView last_snap = net.snapshot(block.last);
    std::vector<AgentIdx> roster;
    for (std::size_t v = 0; v < net.n_agents(); ++v) {
        AgentIdx a = static_cast<AgentIdx>(v);
        if (panel.kept(a) && last_snap.out_degree(a) + last_snap.in_degree(a) > 0) roster.push_back(a);
    }
    if (roster.size() < 2) throw analysis_error("block roster has fewer than two actors");

    // per-week z-scores over the block roster (weeks with transitions only)
    std::vector<std::vector<double>> z_week(block.length() - 1);
    for (Week t = block.first; t < block.last; ++t) {
        std::vector<double> values(roster.size());
        for (std::size_t k = 0; k < roster.size(); ++k) values[k] = panel.completed(roster[k], t);
        zscore_inplace(values);
        z_week[t - block.first] = std::move(values);
    }

    bool subsample = roster.size() > opts.full_enum_threshold;
    std::size_t n_transitions = block.length() - 1;
    std::vector<detail::TransitionRows> transitions(n_transitions);
    std::vector<std::uint32_t> local_of(net.n_agents());

    for (std::size_t ti = 0; ti < n_transitions; ++ti) {
        Week t = block.first + static_cast<Week>(ti);
        detail::TransitionRows& tr = transitions[ti];
        tr.t = t;
        SnapshotView next = net.snapshot(t + 1);
        // eligible: block roster, active at t+1
        for (AgentIdx a : roster)
            if (next.out_degree(a) + next.in_degree(a) > 0) tr.eligible.push_back(a);
        std::size_t a_count = tr.eligible.size();
        if (a_count < 2) continue;  // no dyads this transition
        tr.z.resize(a_count);
        for (std::size_t k = 0; k < a_count; ++k)
            tr.z[k] = z_week[ti][detail::local_index(roster, tr.eligible[k])];

        const auto& events = net.events();
        std::size_t upto_t = net.edges_through(t);
        std::size_t upto_next = net.edges_through(t + 1);

        if (!subsample) {
            tr.enumerated = true;
            std::size_t words = (a_count * a_count + 63) / 64;
            tr.exists_bits.assign(words, 0);
            tr.next_bits.assign(words, 0);
            for (std::size_t k = 0; k < a_count; ++k) local_of[tr.eligible[k]] = static_cast<std::uint32_t>(k);
            std::vector<std::uint8_t> is_eligible(net.n_agents(), 0);
            for (AgentIdx a : tr.eligible) is_eligible[a] = 1;
            for (std::size_t e = 0; e < upto_next; ++e) {
                AgentIdx u = events[e].follower, v = events[e].followee;
                if (!is_eligible[u] || !is_eligible[v]) continue;
                std::size_t idx = static_cast<std::size_t>(local_of[u]) * a_count + local_of[v];
                detail::TransitionRows::set_bit(tr.next_bits, idx);
                if (e < upto_t) detail::TransitionRows::set_bit(tr.exists_bits, idx);
            }
        } else {
            std::vector<std::uint8_t> is_eligible(net.n_agents(), 0);
            for (AgentIdx a : tr.eligible) is_eligible[a] = 1;
            // edges already present at t between eligible actors
            std::size_t existing_in_scope = 0;
            for (std::size_t e = 0; e < upto_t; ++e)
                if (is_eligible[events[e].follower] && is_eligible[events[e].followee]) ++existing_in_scope;

            std::size_t n_events_tr = 0;
            for (std::size_t e = upto_t; e < upto_next; ++e) {
                AgentIdx u = events[e].follower, v = events[e].followee;
                if (!is_eligible[u] || !is_eligible[v]) continue;
                RiskSetRow row;
                row.i = u;
                row.j = v;
                row.t = t;
                row.formed = true;
                Week wji = net.first_week(v, u);
                row.mutual = wji != 0 && wji <= t + 1;
                row.absdiff = std::abs(tr.z[detail::local_index(tr.eligible, u)] -
                                       tr.z[detail::local_index(tr.eligible, v)]);
                tr.rows.push_back(row);
                ++n_events_tr;
            }
            double risk_size = static_cast<double>(a_count) * static_cast<double>(a_count - 1) -
                               static_cast<double>(existing_in_scope);
            double n_nonevents = risk_size - static_cast<double>(n_events_tr);
            std::size_t m = static_cast<std::size_t>(opts.subsample_ratio * static_cast<double>(n_events_tr));
            if (m == 0 || n_nonevents <= static_cast<double>(m)) {
                // degenerate; fall back to no sampling for this transition
                m = 0;
            }
            double offset = m > 0 ? std::log(n_nonevents / static_cast<double>(m)) : 0.0;
            for (RiskSetRow& row : tr.rows) row.offset = offset;
            Rng rng(derive_seed(opts.seed, 0x5e1ec7, block.first, t));
            std::size_t drawn = 0;
            while (drawn < m) {
                AgentIdx u = tr.eligible[rng.below(a_count)];
                AgentIdx v = tr.eligible[rng.below(a_count)];
                if (u == v) continue;
                Week w = net.first_week(u, v);
                if (w != 0 && w <= t + 1) continue;  // existing or just formed
                RiskSetRow row;
                row.i = u;
                row.j = v;
                row.t = t;
                row.formed = false;
                Week wji = net.first_week(v, u);
                row.mutual = wji != 0 && wji <= t + 1;
                row.absdiff = std::abs(tr.z[detail::local_index(tr.eligible, u)] -
                                       tr.z[detail::local_index(tr.eligible, v)]);
                row.offset = offset;
                tr.rows.push_back(row);
                ++drawn;
            }
        }
    }

    auto visit_all = [&](auto&& fn) {
        for (const auto& tr : transitions) tr.for_each(fn);
    };
    FormationFit fit = detail::to_formation_fit(detail::fit_logistic3(visit_all));
    fit.block = block;
    fit.subsampled = subsample;
    return fit;
}

// Per-block fits across the whole observation window.
struct BlockOutcome {
    BlockSpec block;
    std::optional<FormationFit> fit;
    std::string error;
};

inline std::vector<BlockOutcome> selection_series(const TemporalNetwork& net, const ScorePanel& panel,
                                                  const SelectionOptions& opts = {}) {
    auto blocks = make_blocks(net.n_weeks(), opts.block_len);
    std::vector<BlockOutcome> out(blocks.size());
    parallel_for(blocks.size(), opts.workers, [&](std::size_t bi) {
        out[bi].block = blocks[bi];
        try {
            out[bi].fit = fit_block(net, panel, blocks[bi], opts);
        } catch (const error& e) {
            out[bi].error = e.what();
        }
    });
    return out;
}

} // namespace netdyn
