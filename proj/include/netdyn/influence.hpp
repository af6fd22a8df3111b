#pragma once

// Panel estimation of social influence: weekly score changes regressed on
// the lagged own score and the lagged mean followee score, with two-way
// (agent and week) fixed effects absorbed by alternating demeaning and
// standard errors clustered at the agent level.  The instrumental-variable
// variant uses the mean lagged score of followees-of-followees (distance
// two, excluding the ego and its direct followees) in a two-stage
// least-squares fit, with a cluster-robust first-stage F statistic and a
// control-function Wu-Hausman endogeneity test.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "netdyn/core.hpp"
#include "netdyn/linalg.hpp"
#include "netdyn/selection.hpp"  // BlockSpec for windows
#include "netdyn/stats.hpp"
#include "netdyn/temporal_graph.hpp"

namespace netdyn {

struct PanelRow {
    AgentIdx agent = 0;
    Week week = 0;        // the week of the change, >= 2
    double delta = 0.0;   // X_t - X_{t-1}, raw score units
    double lag_self = 0.0;
    double lag_peer = 0.0;
    std::optional<double> instrument;  // distance-2 mean; absent if no such agent
};

struct PanelBuildStats {
    std::size_t n_rows = 0;
    std::size_t dropped_no_followees = 0;
    std::size_t undefined_instrument = 0;
};

// Distance-2 instrument values for every agent at change week t (network
// and scores from week t-1): mean lagged score over {k : i->j->k, k != i,
// k not a direct followee of i}.  Agents without such a set get nullopt.
inline std::vector<std::optional<double>> build_instrument(const TemporalNetwork& net,
                                                           const ScorePanel& panel, Week t) {
    if (t < 2) throw config_error("instrument needs a lagged week");
    SnapshotView prev = net.snapshot(t - 1);
    std::size_t n = net.n_agents();
    std::vector<std::optional<double>> z(n);
    std::vector<std::uint32_t> excluded(n, 0), counted(n, 0);
    std::uint32_t stamp = 0;
    for (AgentIdx i = 0; i < n; ++i) {
        if (!panel.kept(i)) continue;
        ++stamp;
        excluded[i] = stamp;
        prev.for_each_out(i, [&](AgentIdx j) { excluded[j] = stamp; });
        double sum = 0.0;
        std::size_t count = 0;
        prev.for_each_out(i, [&](AgentIdx j) {
            prev.for_each_out(j, [&](AgentIdx k) {
                if (excluded[k] == stamp || counted[k] == stamp) return;
                counted[k] = stamp;
                if (!panel.kept(k)) return;
                sum += panel.completed(k, t - 1);
                ++count;
            });
        });
        if (count > 0) z[i] = sum / static_cast<double>(count);
    }
    return z;
}

// Rows for all (agent, week >= 2) pairs with a defined lagged mean followee
// score.  Values are kept in raw score units; each fit standardizes over
// its own estimation sample.
inline std::vector<PanelRow> build_panel(const TemporalNetwork& net, const ScorePanel& panel,
                                         PanelBuildStats* stats = nullptr) {
    if (panel.n_weeks() != net.n_weeks() || panel.n_agents() != net.n_agents())
        throw config_error("network and panel cover different rosters");
    PanelBuildStats local;
    std::vector<PanelRow> rows;
    for (Week t = 2; t <= net.n_weeks(); ++t) {
        SnapshotView prev = net.snapshot(t - 1);
        auto z = build_instrument(net, panel, t);
        for (AgentIdx a = 0; a < net.n_agents(); ++a) {
            if (!panel.kept(a)) continue;
            double sum = 0.0;
            std::size_t count = 0;
            prev.for_each_out(a, [&](AgentIdx j) {
                if (!panel.kept(j)) return;
                sum += panel.completed(j, t - 1);
                ++count;
            });
            if (count == 0) {
                ++local.dropped_no_followees;
                continue;
            }
            PanelRow row;
            row.agent = a;
            row.week = t;
            row.lag_self = panel.completed(a, t - 1);
            row.delta = panel.completed(a, t) - row.lag_self;
            row.lag_peer = sum / static_cast<double>(count);
            row.instrument = z[a];
            if (!row.instrument) ++local.undefined_instrument;
            rows.push_back(row);
        }
    }
    if (rows.empty()) throw analysis_error("panel is empty");
    local.n_rows = rows.size();
    if (stats) *stats = local;
    return rows;
}

// ---------------------------------------------------------------------------
// Fixed-effects machinery.

enum class ClusterVariant { CR0, CR1 };

struct FeOptions {
    ClusterVariant cluster = ClusterVariant::CR1;
    double weak_f_floor = 10.0;
    double demean_tol = 1e-10;
    int demean_max_sweeps = 1000;
};

namespace detail {

struct Groups {
    std::vector<std::uint32_t> id;  // per row, compacted to 0..count-1
    std::size_t count = 0;
};

template <typename KeyFn>
Groups compact_groups(std::size_t n_rows, KeyFn&& key_of) {
    Groups g;
    g.id.resize(n_rows);
    std::unordered_map<std::uint64_t, std::uint32_t> map;
    for (std::size_t r = 0; r < n_rows; ++r) {
        auto [it, inserted] = map.try_emplace(key_of(r), static_cast<std::uint32_t>(g.count));
        if (inserted) ++g.count;
        g.id[r] = it->second;
    }
    return g;
}

// Alternating projection onto the two-way fixed-effects complement:
// repeatedly remove agent means then week means from every column until the
// largest removed mean falls below tol.  Idempotent at convergence.
inline void demean_two_way(std::vector<std::vector<double>*> cols, const Groups& agents,
                           const Groups& weeks, double tol, int max_sweeps) {
    std::size_t n = cols.empty() ? 0 : cols.front()->size();
    std::vector<double> mean_a(agents.count), mean_w(weeks.count);
    std::vector<std::size_t> count_a(agents.count, 0), count_w(weeks.count, 0);
    for (std::size_t r = 0; r < n; ++r) {
        ++count_a[agents.id[r]];
        ++count_w[weeks.id[r]];
    }
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double max_adjust = 0.0;
        for (auto* col : cols) {
            std::fill(mean_a.begin(), mean_a.end(), 0.0);
            for (std::size_t r = 0; r < n; ++r) mean_a[agents.id[r]] += (*col)[r];
            for (std::size_t gidx = 0; gidx < agents.count; ++gidx) {
                mean_a[gidx] /= static_cast<double>(count_a[gidx]);
                max_adjust = std::max(max_adjust, std::abs(mean_a[gidx]));
            }
            for (std::size_t r = 0; r < n; ++r) (*col)[r] -= mean_a[agents.id[r]];

            std::fill(mean_w.begin(), mean_w.end(), 0.0);
            for (std::size_t r = 0; r < n; ++r) mean_w[weeks.id[r]] += (*col)[r];
            for (std::size_t gidx = 0; gidx < weeks.count; ++gidx) {
                mean_w[gidx] /= static_cast<double>(count_w[gidx]);
                max_adjust = std::max(max_adjust, std::abs(mean_w[gidx]));
            }
            for (std::size_t r = 0; r < n; ++r) (*col)[r] -= mean_w[weeks.id[r]];
        }
        if (max_adjust < tol) return;
    }
    // unbalanced panels can converge slowly; reaching the sweep cap still
    // leaves the transform a valid projection approximation
}

struct ClusterOls {
    std::vector<double> beta;
    std::vector<double> cov;  // cluster-robust, K x K
    std::vector<double> resid;
};

// OLS of y on the given columns (no intercept; inputs are demeaned) with a
// cluster-robust sandwich covariance.
inline ClusterOls ols_cluster(const std::vector<double>& y,
                              const std::vector<const std::vector<double>*>& xcols,
                              const Groups& clusters, ClusterVariant variant,
                              const std::vector<double>* resid_override = nullptr) {
    std::size_t n = y.size(), k = xcols.size();
    if (clusters.count < 2) throw analysis_error("cluster-robust errors need at least two clusters");
    std::vector<double> xtx(k * k, 0.0), xty(k, 0.0);
    for (std::size_t a = 0; a < k; ++a) {
        const auto& xa = *xcols[a];
        for (std::size_t b = a; b < k; ++b) {
            const auto& xb = *xcols[b];
            double s = 0.0;
            for (std::size_t r = 0; r < n; ++r) s += xa[r] * xb[r];
            xtx[a * k + b] = xtx[b * k + a] = s;
        }
        double s = 0.0;
        for (std::size_t r = 0; r < n; ++r) s += xa[r] * y[r];
        xty[a] = s;
    }
    ClusterOls out;
    std::vector<double> bread;
    if (!spd_inverse(xtx, k, bread, 1e-10))
        throw collinearity_error("singular design in fixed-effects regression");
    out.beta.assign(k, 0.0);
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b) out.beta[a] += bread[a * k + b] * xty[b];
    out.resid.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
        double fit = 0.0;
        for (std::size_t a = 0; a < k; ++a) fit += out.beta[a] * (*xcols[a])[r];
        out.resid[r] = y[r] - fit;
    }
    const std::vector<double>& u = resid_override ? *resid_override : out.resid;
    // meat = sum_g (X_g' u_g)(X_g' u_g)'
    std::vector<double> scores(clusters.count * k, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        double* row = scores.data() + static_cast<std::size_t>(clusters.id[r]) * k;
        for (std::size_t a = 0; a < k; ++a) row[a] += (*xcols[a])[r] * u[r];
    }
    std::vector<double> meat(k * k, 0.0);
    for (std::size_t g = 0; g < clusters.count; ++g) {
        const double* row = scores.data() + g * k;
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = 0; b < k; ++b) meat[a * k + b] += row[a] * row[b];
    }
    double c = 1.0;
    if (variant == ClusterVariant::CR1) {
        double G = static_cast<double>(clusters.count);
        double N = static_cast<double>(n);
        double K = static_cast<double>(k);
        c = (G / (G - 1.0)) * ((N - 1.0) / (N - K));
    }
    auto bm = mat_mul(bread, meat, k, k, k);
    out.cov = mat_mul(bm, bread, k, k, k);
    for (double& v : out.cov) v *= c;
    return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Fits.

struct PanelFit {
    enum class Method { ols, iv2sls };
    Method method = Method::ols;
    double phi = 0.0, gamma = 0.0;        // standardized (sd) units
    double se_phi = 0.0, se_gamma = 0.0;  // cluster-robust
    double p_phi = 1.0, p_gamma = 1.0;
    std::size_t n_obs = 0, n_agents = 0, n_weeks = 0;
    // scale factors of the estimation sample, for de-standardization
    double sd_delta = 1.0, sd_lag_self = 1.0, sd_lag_peer = 1.0;
    // IV diagnostics
    double first_stage_f = std::numeric_limits<double>::quiet_NaN();
    double wu_hausman_p = std::numeric_limits<double>::quiet_NaN();
    bool weak_instrument = false;

    // effects in raw score units
    double phi_raw() const { return phi * sd_delta / sd_lag_self; }
    double gamma_raw() const { return gamma * sd_delta / sd_lag_peer; }
    double se_phi_raw() const { return se_phi * sd_delta / sd_lag_self; }
    double se_gamma_raw() const { return se_gamma * sd_delta / sd_lag_peer; }
};

namespace detail {

struct PreparedPanel {
    std::vector<double> y, x_self, x_peer, z;
    Groups agents, weeks;
    double sd_delta = 1.0, sd_self = 1.0, sd_peer = 1.0;
    std::size_t n = 0;
};

inline PreparedPanel prepare(std::span<const PanelRow> rows, bool need_instrument,
                             const FeOptions& opts) {
    PreparedPanel p;
    for (const PanelRow& row : rows) {
        if (need_instrument && !row.instrument) continue;
        p.y.push_back(row.delta);
        p.x_self.push_back(row.lag_self);
        p.x_peer.push_back(row.lag_peer);
        if (need_instrument) p.z.push_back(*row.instrument);
    }
    p.n = p.y.size();
    if (p.n < 4) throw analysis_error("not enough panel rows to estimate");
    std::vector<const PanelRow*> used;
    used.reserve(p.n);
    for (const PanelRow& row : rows)
        if (!need_instrument || row.instrument) used.push_back(&row);
    p.agents = compact_groups(p.n, [&](std::size_t r) { return static_cast<std::uint64_t>(used[r]->agent); });
    p.weeks = compact_groups(p.n, [&](std::size_t r) { return static_cast<std::uint64_t>(used[r]->week); });
    if (p.agents.count < 2) throw analysis_error("panel needs at least two agents");
    if (p.weeks.count < 2) throw analysis_error("panel needs at least two weeks");
    // standardize over the estimation sample
    p.sd_delta = zscore_inplace(p.y).sd;
    p.sd_self = zscore_inplace(p.x_self).sd;
    p.sd_peer = zscore_inplace(p.x_peer).sd;
    if (need_instrument) zscore_inplace(p.z);  // conditioning only; IV slopes unchanged
    std::vector<std::vector<double>*> cols{&p.y, &p.x_self, &p.x_peer};
    if (need_instrument) cols.push_back(&p.z);
    demean_two_way(cols, p.agents, p.weeks, opts.demean_tol, opts.demean_max_sweeps);
    return p;
}

inline void fill_common(PanelFit& fit, const PreparedPanel& p) {
    fit.n_obs = p.n;
    fit.n_agents = p.agents.count;
    fit.n_weeks = p.weeks.count;
    fit.sd_delta = p.sd_delta;
    fit.sd_lag_self = p.sd_self;
    fit.sd_lag_peer = p.sd_peer;
}

} // namespace detail

// OLS with agent and week fixed effects; cluster-robust inference by agent.
inline PanelFit fit_fe_ols(std::span<const PanelRow> rows, const FeOptions& opts = {}) {
    auto p = detail::prepare(rows, /*need_instrument=*/false, opts);
    auto ols = detail::ols_cluster(p.y, {&p.x_self, &p.x_peer}, p.agents, opts.cluster);
    PanelFit fit;
    fit.method = PanelFit::Method::ols;
    detail::fill_common(fit, p);
    fit.phi = ols.beta[0];
    fit.gamma = ols.beta[1];
    fit.se_phi = std::sqrt(ols.cov[0]);
    fit.se_gamma = std::sqrt(ols.cov[3]);
    double df = static_cast<double>(p.agents.count - 1);
    fit.p_phi = student_t_two_sided_p(fit.phi / fit.se_phi, df);
    fit.p_gamma = student_t_two_sided_p(fit.gamma / fit.se_gamma, df);
    return fit;
}

// Two-stage least squares with the distance-2 instrument.  Second-stage
// standard errors use residuals computed with the actual (not fitted) peer
// regressor; the Wu-Hausman test enters the first-stage residual into the
// outcome equation and tests its coefficient.
inline PanelFit fit_fe_2sls(std::span<const PanelRow> rows, const FeOptions& opts = {}) {
    auto p = detail::prepare(rows, /*need_instrument=*/true, opts);
    double df = static_cast<double>(p.agents.count - 1);

    // first stage: lag_peer on instrument and lag_self
    auto stage1 = detail::ols_cluster(p.x_peer, {&p.z, &p.x_self}, p.agents, opts.cluster);
    double pi_z = stage1.beta[0];
    double se_pi_z = std::sqrt(stage1.cov[0]);

    PanelFit fit;
    fit.method = PanelFit::Method::iv2sls;
    detail::fill_common(fit, p);
    fit.first_stage_f = (pi_z / se_pi_z) * (pi_z / se_pi_z);
    fit.weak_instrument = !(fit.first_stage_f >= opts.weak_f_floor);

    std::vector<double> fitted_peer(p.n), v_hat(p.n);
    for (std::size_t r = 0; r < p.n; ++r) {
        fitted_peer[r] = pi_z * p.z[r] + stage1.beta[1] * p.x_self[r];
        v_hat[r] = p.x_peer[r] - fitted_peer[r];
    }

    // second stage on the fitted peer term
    auto stage2 = detail::ols_cluster(p.y, {&p.x_self, &fitted_peer}, p.agents, opts.cluster);
    fit.phi = stage2.beta[0];
    fit.gamma = stage2.beta[1];
    // 2SLS residuals use the actual regressor
    std::vector<double> u(p.n);
    for (std::size_t r = 0; r < p.n; ++r)
        u[r] = p.y[r] - fit.phi * p.x_self[r] - fit.gamma * p.x_peer[r];
    auto corrected = detail::ols_cluster(p.y, {&p.x_self, &fitted_peer}, p.agents, opts.cluster, &u);
    fit.se_phi = std::sqrt(corrected.cov[0]);
    fit.se_gamma = std::sqrt(corrected.cov[3]);
    fit.p_phi = student_t_two_sided_p(fit.phi / fit.se_phi, df);
    fit.p_gamma = student_t_two_sided_p(fit.gamma / fit.se_gamma, df);

    // Wu-Hausman by control function: y on x_self, x_peer, v_hat
    Moments v_m = moments(v_hat);
    if (v_m.sd > 1e-10) {
        try {
            auto cf = detail::ols_cluster(p.y, {&p.x_self, &p.x_peer, &v_hat}, p.agents, opts.cluster);
            double t_stat = cf.beta[2] / std::sqrt(cf.cov[8]);
            fit.wu_hausman_p = student_t_two_sided_p(t_stat, df);
        } catch (const collinearity_error&) {
            // degenerate control function; leave the p-value undefined
        }
    }
    return fit;
}

// ---------------------------------------------------------------------------
// Windowed estimation.

struct WindowFit {
    BlockSpec window;
    std::optional<PanelFit> ols;
    std::optional<PanelFit> iv;
    std::string error;
};

// OLS and IV fits per window; a window's rows are the change weeks it
// covers (the look-back week for lags precedes the window automatically).
inline std::vector<WindowFit> windowed_fits(std::span<const PanelRow> rows,
                                            std::span<const BlockSpec> windows,
                                            const FeOptions& opts = {}, unsigned workers = 1) {
    std::vector<WindowFit> out(windows.size());
    parallel_for(windows.size(), workers, [&](std::size_t wi) {
        const BlockSpec& win = windows[wi];
        out[wi].window = win;
        std::vector<PanelRow> subset;
        for (const PanelRow& row : rows)
            if (row.week >= std::max<Week>(win.first, 2) && row.week <= win.last) subset.push_back(row);
        try {
            out[wi].ols = fit_fe_ols(subset, opts);
        } catch (const error& e) {
            out[wi].error = e.what();
        }
        try {
            out[wi].iv = fit_fe_2sls(subset, opts);
        } catch (const error& e) {
            if (!out[wi].error.empty()) out[wi].error += "; ";
            out[wi].error += e.what();
        }
    });
    return out;
}

} // namespace netdyn
