#pragma once

// Temporal follow-network construction: event ingestion and validation,
// cumulative weekly snapshots, and the weekly attribute panel with
// forward/backward gap filling.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "netdyn/core.hpp"
#include "netdyn/graph.hpp"
#include "netdyn/io.hpp"
#include "netdyn/stats.hpp"

namespace netdyn {

struct FollowEvent {
    AgentIdx follower = 0;
    AgentIdx followee = 0;
    Week week = 0;
};

// ---------------------------------------------------------------------------
// Week binning.  Weeks are half-open 7-day bins from a configured epoch
// date when events carry timestamps; week columns are taken as-is.

inline std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097LL + static_cast<std::int64_t>(doe) - 719468;
}

inline std::int64_t parse_date_days(std::string_view s, long line = -1) {
    auto fields = split_fields(s, '-');
    if (fields.size() != 3) throw parse_error("expected date YYYY-MM-DD, got '" + std::string(s) + "'", line);
    int y = static_cast<int>(parse_int_strict(fields[0], line));
    int m = static_cast<int>(parse_int_strict(fields[1], line));
    int d = static_cast<int>(parse_int_strict(fields[2], line));
    if (m < 1 || m > 12 || d < 1 || d > 31) throw parse_error("invalid date '" + std::string(s) + "'", line);
    return days_from_civil(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
}

// Timestamp fields may be ISO dates (YYYY-MM-DD) or integer unix seconds.
inline Week week_from_timestamp(std::string_view field, std::int64_t epoch_days, long line) {
    std::int64_t seconds;
    if (field.find('-') != std::string_view::npos && field.find('-') != 0)
        seconds = parse_date_days(field, line) * 86400;
    else
        seconds = parse_int_strict(field, line);
    std::int64_t rel = seconds - epoch_days * 86400;
    if (rel < 0) throw parse_error("timestamp precedes the configured epoch", line);
    return static_cast<Week>(rel / (7 * 86400) + 1);
}

// ---------------------------------------------------------------------------
// Ingestion.

struct RawEventRow {
    std::string follower;
    std::string followee;
    std::string when;  // week number or timestamp, per header
    long line = -1;
};

struct RosterFilter {
    std::set<std::string> ids;  // empty set => accept every agent
    bool accepts(const std::string& id) const { return ids.empty() || ids.count(id) > 0; }
};

struct IngestStats {
    std::size_t n_rows = 0;
    std::size_t dropped_roster = 0;
    std::size_t dropped_self = 0;
    std::size_t collapsed_duplicates = 0;
};

// Validates raw rows against the roster filter, removes self-loops, bins
// timestamps to weeks, and collapses repeated ordered pairs to their
// earliest occurrence.  Events come back sorted by (week, follower,
// followee), which makes rebuilds from identical inputs bit-identical.
inline std::vector<FollowEvent> ingest_events(std::span<const RawEventRow> rows, AgentTable& agents,
                                              const RosterFilter& roster, bool when_is_timestamp,
                                              std::int64_t epoch_days, IngestStats* stats = nullptr) {
    IngestStats local;
    local.n_rows = rows.size();
    std::unordered_map<std::uint64_t, Week> earliest;
    earliest.reserve(rows.size());
    for (const RawEventRow& row : rows) {
        if (row.follower.empty() || row.followee.empty())
            throw parse_error("empty agent id", row.line);
        if (!roster.accepts(row.follower) || !roster.accepts(row.followee)) {
            ++local.dropped_roster;
            continue;
        }
        Week week;
        if (when_is_timestamp) {
            week = week_from_timestamp(row.when, epoch_days, row.line);
        } else {
            std::int64_t w = parse_int_strict(row.when, row.line);
            if (w < 1) throw parse_error("week must be >= 1", row.line);
            week = static_cast<Week>(w);
        }
        if (row.follower == row.followee) {
            ++local.dropped_self;
            continue;
        }
        AgentIdx u = agents.intern(row.follower);
        AgentIdx v = agents.intern(row.followee);
        auto [it, inserted] = earliest.try_emplace(edge_key(u, v), week);
        if (!inserted) {
            ++local.collapsed_duplicates;
            if (week < it->second) it->second = week;
        }
    }
    if (earliest.empty()) throw parse_error("no events remain after filtering");
    std::vector<FollowEvent> events;
    events.reserve(earliest.size());
    for (const auto& [key, week] : earliest)
        events.push_back({static_cast<AgentIdx>(key >> 32), static_cast<AgentIdx>(key & 0xffffffffULL), week});
    std::sort(events.begin(), events.end(), [](const FollowEvent& a, const FollowEvent& b) {
        if (a.week != b.week) return a.week < b.week;
        if (a.follower != b.follower) return a.follower < b.follower;
        return a.followee < b.followee;
    });
    if (stats) *stats = local;
    return events;
}

// ---------------------------------------------------------------------------
// FlatWeekMap: open-addressing (edge key -> first week) map used for O(1)
// expected edge lookups on snapshots.

class FlatWeekMap {
public:
    void build(std::span<const FollowEvent> events) {
        std::size_t cap = 16;
        while (cap * 7 < (events.size() + 1) * 8) cap <<= 1;
        keys_.assign(cap, 0);
        weeks_.assign(cap, 0);
        std::size_t mask = cap - 1;
        for (const FollowEvent& e : events) {
            std::uint64_t key = edge_key(e.follower, e.followee);
            std::size_t i = static_cast<std::size_t>(splitmix64(key)) & mask;
            while (keys_[i] != 0) i = (i + 1) & mask;
            keys_[i] = key;
            weeks_[i] = e.week;
        }
    }

    // 0 when the edge never appears.
    Week first_week(AgentIdx u, AgentIdx v) const {
        std::uint64_t key = edge_key(u, v);
        std::size_t mask = keys_.size() - 1;
        std::size_t i = static_cast<std::size_t>(splitmix64(key)) & mask;
        while (keys_[i] != 0) {
            if (keys_[i] == key) return weeks_[i];
            i = (i + 1) & mask;
        }
        return 0;
    }

private:
    std::vector<std::uint64_t> keys_{std::vector<std::uint64_t>(16, 0)};
    std::vector<Week> weeks_{std::vector<Week>(16, 0)};
};

// ---------------------------------------------------------------------------
// TemporalNetwork: the sequence of cumulative weekly edge sets E^(1) ⊆ ...
// ⊆ E^(T) over a fixed roster of agents.

class TemporalNetwork;

class SnapshotView {
public:
    SnapshotView(const TemporalNetwork& net, Week t);

    std::size_t node_count() const;
    std::size_t edge_count() const;
    Week week() const { return t_; }

    bool has_edge(AgentIdx u, AgentIdx v) const;
    std::size_t out_degree(AgentIdx v) const;
    std::size_t in_degree(AgentIdx v) const;

    template <typename F>
    void for_each_out(AgentIdx v, F&& fn) const;
    template <typename F>
    void for_each_in(AgentIdx v, F&& fn) const;
    template <typename F>
    void for_each_edge(F&& fn) const;

private:
    const TemporalNetwork* net_;
    Week t_;
};

class TemporalNetwork {
public:
    TemporalNetwork() = default;

    // Events must be validated (simple, roster-resolved).  T must cover the
    // last event week.
    TemporalNetwork(std::size_t n_agents, Week T, std::vector<FollowEvent> events) {
        build(n_agents, T, std::move(events));
    }

    void build(std::size_t n_agents, Week T, std::vector<FollowEvent> events) {
        if (T < 1) throw config_error("number of weeks must be >= 1");
        n_ = n_agents;
        T_ = T;
        events_ = std::move(events);
        std::sort(events_.begin(), events_.end(), [](const FollowEvent& a, const FollowEvent& b) {
            if (a.week != b.week) return a.week < b.week;
            if (a.follower != b.follower) return a.follower < b.follower;
            return a.followee < b.followee;
        });
        cum_count_.assign(T + 1, 0);
        for (const FollowEvent& e : events_) {
            if (e.week < 1 || e.week > T)
                throw config_error("event week " + std::to_string(e.week) +
                                   " outside configured range 1.." + std::to_string(T));
            if (e.follower >= n_ || e.followee >= n_) throw config_error("event endpoint outside roster");
            ++cum_count_[e.week];
        }
        for (Week t = 1; t <= T; ++t) cum_count_[t] += cum_count_[t - 1];
        struct WN {
            Week week;
            AgentIdx node;
        };
        out_adj_.assign(n_, {});
        in_adj_.assign(n_, {});
        // events are week-sorted, so per-node lists come out week-sorted
        for (const FollowEvent& e : events_) {
            out_adj_[e.follower].push_back({e.week, e.followee});
            in_adj_[e.followee].push_back({e.week, e.follower});
        }
        first_week_.build(events_);
    }

    std::size_t n_agents() const { return n_; }
    Week n_weeks() const { return T_; }
    const std::vector<FollowEvent>& events() const { return events_; }

    std::size_t edges_through(Week t) const { return cum_count_[t]; }

    Week first_week(AgentIdx u, AgentIdx v) const { return first_week_.first_week(u, v); }

    SnapshotView snapshot(Week t) const {
        if (t < 1 || t > T_) throw config_error("snapshot week out of range");
        return SnapshotView(*this, t);
    }

private:
    friend class SnapshotView;

    struct WeekNode {
        Week week;
        AgentIdx node;
    };

    static std::size_t prefix_len(const std::vector<WeekNode>& list, Week t) {
        std::size_t lo = 0, hi = list.size();
        while (lo < hi) {
            std::size_t mid = (lo + hi) / 2;
            if (list[mid].week <= t)
                lo = mid + 1;
            else
                hi = mid;
        }
        return lo;
    }

    std::size_t n_ = 0;
    Week T_ = 0;
    std::vector<FollowEvent> events_;       // sorted by (week, follower, followee)
    std::vector<std::size_t> cum_count_;    // cum_count_[t] = |E^(t)|
    std::vector<std::vector<WeekNode>> out_adj_, in_adj_;
    FlatWeekMap first_week_;
};

inline SnapshotView::SnapshotView(const TemporalNetwork& net, Week t) : net_(&net), t_(t) {}

inline std::size_t SnapshotView::node_count() const { return net_->n_; }
inline std::size_t SnapshotView::edge_count() const { return net_->cum_count_[t_]; }

inline bool SnapshotView::has_edge(AgentIdx u, AgentIdx v) const {
    Week w = net_->first_week_.first_week(u, v);
    return w != 0 && w <= t_;
}

inline std::size_t SnapshotView::out_degree(AgentIdx v) const {
    return TemporalNetwork::prefix_len(net_->out_adj_[v], t_);
}
inline std::size_t SnapshotView::in_degree(AgentIdx v) const {
    return TemporalNetwork::prefix_len(net_->in_adj_[v], t_);
}

template <typename F>
void SnapshotView::for_each_out(AgentIdx v, F&& fn) const {
    const auto& list = net_->out_adj_[v];
    std::size_t len = TemporalNetwork::prefix_len(list, t_);
    for (std::size_t i = 0; i < len; ++i) fn(list[i].node);
}

template <typename F>
void SnapshotView::for_each_in(AgentIdx v, F&& fn) const {
    const auto& list = net_->in_adj_[v];
    std::size_t len = TemporalNetwork::prefix_len(list, t_);
    for (std::size_t i = 0; i < len; ++i) fn(list[i].node);
}

template <typename F>
void SnapshotView::for_each_edge(F&& fn) const {
    std::size_t m = edge_count();
    const auto& events = net_->events_;
    for (std::size_t i = 0; i < m; ++i) fn(events[i].follower, events[i].followee);
}

static_assert(DirectedGraph<SnapshotView>);

// Builds E^(t) = { (i,j) : first event week <= t }.
inline TemporalNetwork build_cumulative(std::span<const FollowEvent> events, std::size_t n_agents, Week T) {
    Week max_week = 0;
    for (const FollowEvent& e : events) max_week = std::max(max_week, e.week);
    if (T < max_week)
        throw config_error("T=" + std::to_string(T) + " is smaller than the last event week " +
                           std::to_string(max_week));
    return TemporalNetwork(n_agents, T, std::vector<FollowEvent>(events.begin(), events.end()));
}

// ---------------------------------------------------------------------------
// ScorePanel: observed weekly attribute scores and their gap-filled
// completion.  Agents without a single observation are dropped from the
// completed panel (but remain in the network roster).

struct ScoreObs {
    AgentIdx agent = 0;
    Week week = 0;
    double value = 0.0;
};

class ScorePanel {
public:
    std::size_t n_agents() const { return n_; }
    Week n_weeks() const { return T_; }

    bool kept(AgentIdx a) const { return kept_[a] != 0; }
    const std::vector<AgentIdx>& dropped_agents() const { return dropped_; }

    bool observed(AgentIdx a, Week t) const { return observed_[idx(a, t)] != 0; }
    double completed(AgentIdx a, Week t) const { return completed_[idx(a, t)]; }

    std::size_t kept_count() const {
        std::size_t c = 0;
        for (auto k : kept_) c += k;
        return c;
    }

private:
    friend ScorePanel impute_scores(std::span<const ScoreObs>, std::size_t, Week);

    std::size_t idx(AgentIdx a, Week t) const { return static_cast<std::size_t>(a) * T_ + (t - 1); }

    std::size_t n_ = 0;
    Week T_ = 0;
    std::vector<double> completed_;        // n x T, NaN for dropped agents
    std::vector<std::uint8_t> observed_;   // n x T
    std::vector<std::uint8_t> kept_;
    std::vector<AgentIdx> dropped_;
};

// Fills every week for agents with at least one observation: last
// observation carried forward, then remaining leading gaps filled from the
// nearest subsequent observation.
inline ScorePanel impute_scores(std::span<const ScoreObs> observations, std::size_t n_agents, Week T) {
    if (T < 1) throw config_error("number of weeks must be >= 1");
    ScorePanel panel;
    panel.n_ = n_agents;
    panel.T_ = T;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    panel.completed_.assign(n_agents * T, nan);
    panel.observed_.assign(n_agents * T, 0);
    panel.kept_.assign(n_agents, 0);
    for (const ScoreObs& obs : observations) {
        if (obs.agent >= n_agents) throw config_error("score for agent outside roster");
        if (obs.week < 1 || obs.week > T)
            throw config_error("score week " + std::to_string(obs.week) + " outside 1.." + std::to_string(T));
        if (!(obs.value >= 0.0 && obs.value <= 100.0))
            throw config_error("score " + format_double(obs.value) + " outside [0,100]");
        std::size_t i = panel.idx(obs.agent, obs.week);
        panel.completed_[i] = obs.value;
        panel.observed_[i] = 1;
        panel.kept_[obs.agent] = 1;
    }
    for (AgentIdx a = 0; a < n_agents; ++a) {
        if (!panel.kept_[a]) {
            panel.dropped_.push_back(a);
            continue;
        }
        double* row = panel.completed_.data() + static_cast<std::size_t>(a) * T;
        // forward fill
        double last = nan;
        for (Week t = 0; t < T; ++t) {
            if (std::isnan(row[t]))
                row[t] = last;
            else
                last = row[t];
        }
        // leading gaps from the nearest subsequent observation
        double next = nan;
        for (Week t = T; t-- > 0;) {
            if (std::isnan(row[t]))
                row[t] = next;
            else
                next = row[t];
        }
    }
    return panel;
}

// ---------------------------------------------------------------------------
// Standardized view of a completed panel.

enum class StandardizeScope { global, per_week };

class StandardizedScores {
public:
    StandardizedScores(const ScorePanel& panel, StandardizeScope scope) : n_(panel.n_agents()), T_(panel.n_weeks()), scope_(scope) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        z_.assign(n_ * T_, nan);
        if (scope == StandardizeScope::global) {
            std::vector<double> values;
            values.reserve(n_ * T_);
            for (AgentIdx a = 0; a < n_; ++a)
                if (panel.kept(a))
                    for (Week t = 1; t <= T_; ++t) values.push_back(panel.completed(a, t));
            Moments m = moments(values);
            if (m.n < 2) throw analysis_error("standardization scope has fewer than two values");
            if (!(m.sd > 0.0)) throw analysis_error("standardization scope has zero variance");
            scales_.assign(1, m);
            for (AgentIdx a = 0; a < n_; ++a)
                if (panel.kept(a))
                    for (Week t = 1; t <= T_; ++t)
                        z_[idx(a, t)] = (panel.completed(a, t) - m.mean) / m.sd;
        } else {
            scales_.assign(T_, Moments{});
            std::vector<double> values;
            for (Week t = 1; t <= T_; ++t) {
                values.clear();
                for (AgentIdx a = 0; a < n_; ++a)
                    if (panel.kept(a)) values.push_back(panel.completed(a, t));
                Moments m = moments(values);
                if (m.n < 2) throw analysis_error("standardization scope has fewer than two values");
                if (!(m.sd > 0.0)) throw analysis_error("standardization scope has zero variance in week " +
                                                        std::to_string(t));
                scales_[t - 1] = m;
                for (AgentIdx a = 0; a < n_; ++a)
                    if (panel.kept(a)) z_[idx(a, t)] = (panel.completed(a, t) - m.mean) / m.sd;
            }
        }
    }

    double z(AgentIdx a, Week t) const { return z_[idx(a, t)]; }

    // Inverse transform; recovers the completed score from its z value.
    double destandardize(double z, Week t) const {
        const Moments& m = scope_ == StandardizeScope::global ? scales_[0] : scales_[t - 1];
        return z * m.sd + m.mean;
    }

    const std::vector<Moments>& scales() const { return scales_; }

private:
    std::size_t idx(AgentIdx a, Week t) const { return static_cast<std::size_t>(a) * T_ + (t - 1); }

    std::size_t n_ = 0;
    Week T_ = 0;
    StandardizeScope scope_;
    std::vector<double> z_;
    std::vector<Moments> scales_;
};

inline StandardizedScores standardize_scores(const ScorePanel& panel, StandardizeScope scope) {
    return StandardizedScores(panel, scope);
}

// ---------------------------------------------------------------------------
// CSV readers for the two input formats.

struct EventFileResult {
    std::vector<FollowEvent> events;
    IngestStats stats;
};

// Header must be `follower,followee,week` or `follower,followee,timestamp`;
// the latter requires an epoch date for binning.
inline EventFileResult read_events_csv(const std::string& path, AgentTable& agents,
                                       const RosterFilter& roster,
                                       std::optional<std::int64_t> epoch_days = std::nullopt) {
    std::vector<RawEventRow> rows;
    bool when_is_timestamp = false;
    for_each_csv_row(
        path,
        [&](long lineno, const std::vector<std::string_view>& header) {
            if (header.size() != 3 || trim(header[0]) != "follower" || trim(header[1]) != "followee")
                throw parse_error("expected header follower,followee,{week|timestamp}", lineno);
            std::string_view third = trim(header[2]);
            if (third == "week")
                when_is_timestamp = false;
            else if (third == "timestamp")
                when_is_timestamp = true;
            else
                throw parse_error("third column must be week or timestamp", lineno);
        },
        [&](long lineno, const std::vector<std::string_view>& fields) {
            if (fields.size() != 3) throw parse_error("expected 3 fields", lineno);
            rows.push_back({std::string(trim(fields[0])), std::string(trim(fields[1])),
                            std::string(trim(fields[2])), lineno});
        });
    if (when_is_timestamp && !epoch_days)
        throw config_error("events carry timestamps but no epoch date is configured");
    EventFileResult result;
    result.events = ingest_events(rows, agents, roster, when_is_timestamp,
                                  epoch_days.value_or(0), &result.stats);
    return result;
}

struct ScoreFileResult {
    std::vector<ScoreObs> observations;
    std::size_t dropped_roster = 0;
};

// Header must be `agent,week,score`; weeks and scores are exact integers.
inline ScoreFileResult read_scores_csv(const std::string& path, AgentTable& agents,
                                       const RosterFilter& roster) {
    ScoreFileResult result;
    std::set<std::uint64_t> seen;
    for_each_csv_row(
        path,
        [&](long lineno, const std::vector<std::string_view>& header) {
            if (header.size() != 3 || trim(header[0]) != "agent" || trim(header[1]) != "week" ||
                trim(header[2]) != "score")
                throw parse_error("expected header agent,week,score", lineno);
        },
        [&](long lineno, const std::vector<std::string_view>& fields) {
            if (fields.size() != 3) throw parse_error("expected 3 fields", lineno);
            std::string id(trim(fields[0]));
            if (id.empty()) throw parse_error("empty agent id", lineno);
            if (!roster.accepts(id)) {
                ++result.dropped_roster;
                return;
            }
            std::int64_t week = parse_int_strict(fields[1], lineno);
            std::int64_t score = parse_int_strict(fields[2], lineno);
            if (week < 1) throw parse_error("week must be >= 1", lineno);
            if (score < 0 || score > 100) throw parse_error("score outside [0,100]", lineno);
            AgentIdx a = agents.intern(id);
            if (!seen.insert(edge_key(a, static_cast<AgentIdx>(week))).second)
                throw parse_error("duplicate score for agent '" + id + "' week " + std::to_string(week),
                                  lineno);
            result.observations.push_back({a, static_cast<Week>(week), static_cast<double>(score)});
        });
    if (result.observations.empty()) throw parse_error("no scores remain after filtering: " + path);
    return result;
}

} // namespace netdyn
