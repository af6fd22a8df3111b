#pragma once

// Pipeline orchestration behind the command-line tool: a declarative JSON
// run configuration, per-stage runners that read and write the out-tree,
// and provenance headers on every table.  Stage outputs are deterministic
// for a fixed seed regardless of the worker count (seeds are derived per
// task and reductions happen in fixed order).

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "netdyn/core.hpp"
#include "netdyn/homophily.hpp"
#include "netdyn/influence.hpp"
#include "netdyn/io.hpp"
#include "netdyn/metrics.hpp"
#include "netdyn/nulls.hpp"
#include "netdyn/selection.hpp"
#include "netdyn/synth.hpp"
#include "netdyn/temporal_graph.hpp"
#include "netdyn/version.hpp"

namespace netdyn {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct RunConfig {
    // inputs
    std::string events_path;
    std::string scores_path;
    std::optional<std::string> epoch_date;  // required when events carry timestamps
    std::optional<std::string> roster_path; // newline-delimited agent ids
    Week n_weeks = 52;

    std::string out_dir = "out";
    std::uint64_t seed = 42;
    unsigned workers = 0;  // 0 = hardware concurrency

    // nulls
    std::size_t null_realizations = 100;
    bool nulls_configuration = true;
    bool nulls_joint_degree = true;
    double jd_burnin_factor = 10.0;
    bool persist_null_edges = false;

    // metrics
    NodeScope metrics_scope = NodeScope::active;
    bool exclude_low_degree_clustering = false;

    // homophily
    UndirectedTreatment undirected_treatment = UndirectedTreatment::symmetrize;

    // selection
    Week block_len = 8;
    std::size_t full_enum_threshold = 3000;
    double subsample_ratio = 20.0;

    // influence
    Week window_len = 8;
    ClusterVariant cluster_variant = ClusterVariant::CR1;
    double weak_f_floor = 10.0;

    // simulate
    std::optional<SimConfig> sim;
    bool sim_emit_ledger = false;

    std::uint64_t config_digest = 0;  // digest of the raw config text

    Provenance provenance(std::string stage) const {
        Provenance p;
        p.config_digest = config_digest;
        p.seed = seed;
        p.extra.emplace_back("stage", std::move(stage));
        return p;
    }
};

namespace detail {

template <typename T>
void read_field(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

inline SimConfig sim_from_json(const json& j) {
    SimConfig cfg;
    std::uint64_t n_agents = cfg.n_agents;
    std::uint64_t weeks = cfg.n_weeks;
    read_field(j, "n_agents", n_agents);
    read_field(j, "weeks", weeks);
    cfg.n_agents = static_cast<std::size_t>(n_agents);
    cfg.n_weeks = static_cast<Week>(weeks);
    read_field(j, "mix_mean1", cfg.mix_mean1);
    read_field(j, "mix_sd1", cfg.mix_sd1);
    read_field(j, "mix_mean2", cfg.mix_mean2);
    read_field(j, "mix_sd2", cfg.mix_sd2);
    read_field(j, "mix_weight1", cfg.mix_weight1);
    read_field(j, "theta_edges", cfg.theta_edges);
    read_field(j, "theta_mutual", cfg.theta_mutual);
    read_field(j, "theta_abs", cfg.theta_abs);
    read_field(j, "candidate_rate", cfg.candidate_rate);
    read_field(j, "reciprocal_candidate_frac", cfg.reciprocal_candidate_frac);
    read_field(j, "phi_sim", cfg.phi_sim);
    read_field(j, "gamma_sim", cfg.gamma_sim);
    read_field(j, "noise_sd", cfg.noise_sd);
    read_field(j, "hidden_shock_sd", cfg.hidden_shock_sd);
    read_field(j, "endogeneity_rho", cfg.endogeneity_rho);
    read_field(j, "seed", cfg.seed);
    if (j.contains("regime_switch")) {
        const json& rs = j.at("regime_switch");
        RegimeSwitch sw;
        std::uint64_t week = 0;
        read_field(rs, "week", week);
        sw.week = static_cast<Week>(week);
        read_field(rs, "theta_abs_after", sw.theta_abs_after);
        read_field(rs, "gamma_after", sw.gamma_after);
        cfg.regime_switch = sw;
    }
    return cfg;
}

} // namespace detail

inline RunConfig load_run_config(const std::string& path) {
    std::string text = read_file(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw config_error(std::string("config parse failure: ") + e.what());
    }
    RunConfig cfg;
    cfg.config_digest = fnv1a(text);
    try {
        if (j.contains("inputs")) {
            const json& in = j.at("inputs");
            detail::read_field(in, "events", cfg.events_path);
            detail::read_field(in, "scores", cfg.scores_path);
            if (in.contains("epoch")) cfg.epoch_date = in.at("epoch").get<std::string>();
            if (in.contains("roster")) cfg.roster_path = in.at("roster").get<std::string>();
        }
        std::uint64_t weeks = cfg.n_weeks;
        detail::read_field(j, "weeks", weeks);
        cfg.n_weeks = static_cast<Week>(weeks);
        detail::read_field(j, "out", cfg.out_dir);
        detail::read_field(j, "seed", cfg.seed);
        std::uint64_t workers = cfg.workers;
        detail::read_field(j, "workers", workers);
        cfg.workers = static_cast<unsigned>(workers);
        if (j.contains("nulls")) {
            const json& n = j.at("nulls");
            std::uint64_t reals = cfg.null_realizations;
            detail::read_field(n, "realizations", reals);
            cfg.null_realizations = static_cast<std::size_t>(reals);
            detail::read_field(n, "configuration", cfg.nulls_configuration);
            detail::read_field(n, "joint_degree", cfg.nulls_joint_degree);
            detail::read_field(n, "jd_burnin_factor", cfg.jd_burnin_factor);
            detail::read_field(n, "persist_edges", cfg.persist_null_edges);
        }
        if (j.contains("metrics")) {
            const json& m = j.at("metrics");
            std::string scope = "active";
            detail::read_field(m, "scope", scope);
            if (scope == "active")
                cfg.metrics_scope = NodeScope::active;
            else if (scope == "roster")
                cfg.metrics_scope = NodeScope::roster;
            else
                throw config_error("metrics.scope must be active or roster");
            detail::read_field(m, "exclude_low_degree_clustering", cfg.exclude_low_degree_clustering);
        }
        if (j.contains("homophily")) {
            std::string mode = "symmetrize";
            detail::read_field(j.at("homophily"), "undirected", mode);
            if (mode == "symmetrize")
                cfg.undirected_treatment = UndirectedTreatment::symmetrize;
            else if (mode == "collapse")
                cfg.undirected_treatment = UndirectedTreatment::collapse;
            else
                throw config_error("homophily.undirected must be symmetrize or collapse");
        }
        if (j.contains("selection")) {
            const json& s = j.at("selection");
            std::uint64_t block_len = cfg.block_len, threshold = cfg.full_enum_threshold;
            detail::read_field(s, "block_len", block_len);
            detail::read_field(s, "full_enum_threshold", threshold);
            cfg.block_len = static_cast<Week>(block_len);
            cfg.full_enum_threshold = static_cast<std::size_t>(threshold);
            detail::read_field(s, "subsample_ratio", cfg.subsample_ratio);
        }
        if (j.contains("influence")) {
            const json& i = j.at("influence");
            std::uint64_t window_len = cfg.window_len;
            detail::read_field(i, "window_len", window_len);
            cfg.window_len = static_cast<Week>(window_len);
            std::string variant = "CR1";
            detail::read_field(i, "cluster_se", variant);
            if (variant == "CR1")
                cfg.cluster_variant = ClusterVariant::CR1;
            else if (variant == "CR0")
                cfg.cluster_variant = ClusterVariant::CR0;
            else
                throw config_error("influence.cluster_se must be CR0 or CR1");
            detail::read_field(i, "weak_f_floor", cfg.weak_f_floor);
        }
        if (j.contains("simulate")) {
            cfg.sim = detail::sim_from_json(j.at("simulate"));
            detail::read_field(j.at("simulate"), "emit_ledger", cfg.sim_emit_ledger);
        }
    } catch (const json::exception& e) {
        throw config_error(std::string("config field error: ") + e.what());
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// Built-data persistence.

struct BuiltData {
    AgentTable agents;
    TemporalNetwork net;
    ScorePanel panel;
};

namespace detail {

inline fs::path build_dir(const RunConfig& cfg) { return fs::path(cfg.out_dir) / "build"; }
inline fs::path events_clean_path(const RunConfig& cfg) { return build_dir(cfg) / "events_clean.csv"; }
inline fs::path scores_completed_path(const RunConfig& cfg) {
    return build_dir(cfg) / "scores_completed.csv";
}

inline RosterFilter load_roster(const RunConfig& cfg) {
    RosterFilter roster;
    if (!cfg.roster_path) return roster;
    std::ifstream in(*cfg.roster_path);
    if (!in) throw parse_error("cannot open roster file: " + *cfg.roster_path);
    std::string line;
    while (std::getline(in, line)) {
        std::string_view sv = trim(line);
        if (!sv.empty()) roster.ids.insert(std::string(sv));
    }
    return roster;
}

inline void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw error("cannot write file: " + path.string());
    out << j.dump(2) << '\n';
}

} // namespace detail

// Reads raw inputs, builds the cumulative network and completed panel, and
// persists them with provenance metadata.
inline BuiltData run_build(const RunConfig& cfg) {
    if (cfg.events_path.empty() || cfg.scores_path.empty())
        throw config_error("inputs.events and inputs.scores are required");
    BuiltData data;
    RosterFilter roster = detail::load_roster(cfg);
    std::optional<std::int64_t> epoch;
    if (cfg.epoch_date) epoch = parse_date_days(*cfg.epoch_date);
    EventFileResult events = read_events_csv(cfg.events_path, data.agents, roster, epoch);
    ScoreFileResult scores = read_scores_csv(cfg.scores_path, data.agents, roster);
    data.net = build_cumulative(events.events, data.agents.size(), cfg.n_weeks);
    data.panel = impute_scores(scores.observations, data.agents.size(), cfg.n_weeks);

    fs::create_directories(detail::build_dir(cfg));
    {
        TableWriter w(detail::events_clean_path(cfg).string(), cfg.provenance("build"),
                      "follower,followee,week");
        for (const FollowEvent& e : data.net.events()) {
            w.field(std::string_view(data.agents.name(e.follower)));
            w.field(std::string_view(data.agents.name(e.followee)));
            w.field(static_cast<std::uint64_t>(e.week));
            w.end_row();
        }
    }
    {
        TableWriter w(detail::scores_completed_path(cfg).string(), cfg.provenance("build"),
                      "agent,week,score");
        for (AgentIdx a = 0; a < data.agents.size(); ++a) {
            if (!data.panel.kept(a)) continue;
            for (Week t = 1; t <= cfg.n_weeks; ++t) {
                w.field(std::string_view(data.agents.name(a)));
                w.field(static_cast<std::uint64_t>(t));
                w.field(data.panel.completed(a, t));
                w.end_row();
            }
        }
    }
    json meta;
    meta["tool"] = std::string(kToolName) + " " + kToolVersion;
    meta["config_digest"] = hex64(cfg.config_digest);
    meta["seed"] = cfg.seed;
    meta["prng"] = kPrngName;
    meta["weeks"] = cfg.n_weeks;
    meta["n_agents"] = data.agents.size();
    meta["n_events"] = data.net.events().size();
    meta["n_score_rows"] = scores.observations.size();
    meta["input_digests"] = {{"events", hex64(file_digest(cfg.events_path))},
                             {"scores", hex64(file_digest(cfg.scores_path))}};
    meta["output_digests"] = {
        {"events_clean", hex64(file_digest(detail::events_clean_path(cfg).string()))},
        {"scores_completed", hex64(file_digest(detail::scores_completed_path(cfg).string()))}};
    meta["ingest"] = {{"rows", events.stats.n_rows},
                      {"dropped_roster", events.stats.dropped_roster},
                      {"dropped_self_loops", events.stats.dropped_self},
                      {"collapsed_duplicates", events.stats.collapsed_duplicates},
                      {"scores_dropped_roster", scores.dropped_roster}};
    meta["panel"] = {{"kept_agents", data.panel.kept_count()},
                     {"dropped_agents", data.panel.dropped_agents().size()}};
    detail::write_json(detail::build_dir(cfg) / "build.json", meta);
    return data;
}

// Loads the persisted build outputs for downstream stages.
inline BuiltData load_built(const RunConfig& cfg) {
    if (!fs::exists(detail::events_clean_path(cfg)) || !fs::exists(detail::scores_completed_path(cfg)))
        throw config_error("built data not found under " + detail::build_dir(cfg).string() +
                           "; run the build stage first");
    BuiltData data;
    EventFileResult events = read_events_csv(detail::events_clean_path(cfg).string(), data.agents, {});
    ScoreFileResult scores = read_scores_csv(detail::scores_completed_path(cfg).string(), data.agents, {});
    data.net = build_cumulative(events.events, data.agents.size(), cfg.n_weeks);
    data.panel = impute_scores(scores.observations, data.agents.size(), cfg.n_weeks);
    return data;
}

// ---------------------------------------------------------------------------
// Metrics stage.

inline void run_metrics(const RunConfig& cfg, const BuiltData& data) {
    MetricsOptions opts;
    opts.scope = cfg.metrics_scope;
    opts.exclude_low_degree_clustering = cfg.exclude_low_degree_clustering;
    opts.workers = resolve_workers(cfg.workers);
    auto reports = structural_report(data.net, opts);

    fs::path dir = fs::path(cfg.out_dir) / "metrics";
    fs::create_directories(dir / "hist");
    TableWriter w((dir / "metrics.csv").string(), cfg.provenance("metrics"),
                  "week,density,reciprocity,avg_clustering,avg_path,n,m");
    for (const StructuralReport& rep : reports) {
        w.field(static_cast<std::uint64_t>(rep.week));
        w.field(rep.density);
        w.field(rep.reciprocity);
        w.field(rep.avg_clustering);
        w.field(rep.avg_path_lscc);
        w.field(static_cast<std::uint64_t>(rep.n_nodes));
        w.field(static_cast<std::uint64_t>(rep.n_edges));
        w.end_row();
        char name[32];
        std::snprintf(name, sizeof(name), "in_w%02u.csv", rep.week);
        TableWriter wi((dir / "hist" / name).string(), cfg.provenance("metrics"), "degree,count");
        for (const auto& [deg, count] : rep.in_hist) {
            wi.field(static_cast<std::uint64_t>(deg));
            wi.field(static_cast<std::uint64_t>(count));
            wi.end_row();
        }
        std::snprintf(name, sizeof(name), "out_w%02u.csv", rep.week);
        TableWriter wo((dir / "hist" / name).string(), cfg.provenance("metrics"), "degree,count");
        for (const auto& [deg, count] : rep.out_hist) {
            wo.field(static_cast<std::uint64_t>(deg));
            wo.field(static_cast<std::uint64_t>(count));
            wo.end_row();
        }
    }
    json meta;
    meta["weeks"] = reports.size();
    meta["scope"] = cfg.metrics_scope == NodeScope::active ? "active" : "roster";
    detail::write_json(dir / "metrics.json", meta);
}

// ---------------------------------------------------------------------------
// Nulls stage: streams realizations, records per-realization assortativity
// samples (the homophily stage consumes them) plus constraint diagnostics.

struct NullSample {
    Week week = 0;
    NullKind kind = NullKind::configuration;
    std::size_t replicate = 0;
    double r_dir = std::numeric_limits<double>::quiet_NaN();
    double r_undir = std::numeric_limits<double>::quiet_NaN();
    std::size_t collapsed = 0;
    std::size_t self_loops = 0;
};

inline void run_nulls(const RunConfig& cfg, const BuiltData& data) {
    std::vector<NullKind> kinds;
    if (cfg.nulls_configuration) kinds.push_back(NullKind::configuration);
    if (cfg.nulls_joint_degree) kinds.push_back(NullKind::joint_degree);
    if (kinds.empty()) throw config_error("no null ensembles enabled");

    fs::path dir = fs::path(cfg.out_dir) / "nulls";
    fs::create_directories(dir);
    if (cfg.persist_null_edges) fs::create_directories(dir / "realizations");

    const std::size_t per_week = kinds.size() * cfg.null_realizations;
    const std::size_t total = static_cast<std::size_t>(data.net.n_weeks()) * per_week;
    std::vector<NullSample> samples(total);
    std::vector<json> sidecar_slots(cfg.persist_null_edges ? total : 0);

    parallel_for(total, resolve_workers(cfg.workers), [&](std::size_t task) {
        Week week = static_cast<Week>(task / per_week + 1);
        std::size_t rem = task % per_week;
        NullKind kind = kinds[rem / cfg.null_realizations];
        std::size_t rep = rem % cfg.null_realizations;

        NullEnsembleSpec spec;
        spec.kind = kind;
        spec.realizations = cfg.null_realizations;
        spec.seed = cfg.seed;
        spec.jd_burnin_factor = cfg.jd_burnin_factor;
        NullRealization real = generate_realization(data.net, data.panel, spec, week, rep);

        NullSample& sample = samples[task];
        sample.week = week;
        sample.kind = kind;
        sample.replicate = rep;
        sample.collapsed = real.collapsed_parallel;
        sample.self_loops = real.removed_self_loops;
        AdjacencyGraph g(data.net.n_agents(), real.edges);
        try {
            sample.r_dir = numeric_assortativity(g, real.scores, AssortMode::directed);
        } catch (const analysis_error&) {
        }
        try {
            sample.r_undir =
                numeric_assortativity(g, real.scores, AssortMode::undirected, cfg.undirected_treatment);
        } catch (const analysis_error&) {
        }
        if (cfg.persist_null_edges) {
            char name[64];
            std::snprintf(name, sizeof(name), "w%02u_%s_r%03zu.csv", week, null_kind_name(kind), rep);
            TableWriter w((dir / "realizations" / name).string(), cfg.provenance("nulls"),
                          "follower,followee");
            for (const auto& [u, v] : real.edges) {
                w.field(std::string_view(data.agents.name(u)));
                w.field(std::string_view(data.agents.name(v)));
                w.end_row();
            }
            sidecar_slots[task] = {{"file", name},
                                   {"week", week},
                                   {"kind", null_kind_name(kind)},
                                   {"replicate", rep},
                                   {"seed", real.seed}};
        }
    });
    json sidecar = json::array();
    for (json& entry : sidecar_slots) sidecar.push_back(std::move(entry));

    TableWriter w((dir / "null_assortativity.csv").string(), cfg.provenance("nulls"),
                  "week,kind,replicate,r_dir,r_undir,collapsed_parallel,removed_self_loops");
    double total_loss = 0.0;
    std::size_t cfg_count = 0;
    for (const NullSample& s : samples) {
        w.field(static_cast<std::uint64_t>(s.week));
        w.field(std::string_view(null_kind_name(s.kind)));
        w.field(static_cast<std::uint64_t>(s.replicate));
        w.field(std::isnan(s.r_dir) ? std::optional<double>{} : std::optional<double>{s.r_dir});
        w.field(std::isnan(s.r_undir) ? std::optional<double>{} : std::optional<double>{s.r_undir});
        w.field(static_cast<std::uint64_t>(s.collapsed));
        w.field(static_cast<std::uint64_t>(s.self_loops));
        w.end_row();
        if (s.kind == NullKind::configuration) {
            total_loss += static_cast<double>(s.collapsed + s.self_loops);
            ++cfg_count;
        }
    }
    json meta;
    meta["realizations"] = cfg.null_realizations;
    meta["kinds"] = json::array();
    for (NullKind k : kinds) meta["kinds"].push_back(null_kind_name(k));
    meta["prng"] = kPrngName;
    meta["seed"] = cfg.seed;
    meta["jd_burnin_factor"] = cfg.jd_burnin_factor;
    meta["mean_configuration_collapse_loss"] = cfg_count > 0 ? total_loss / cfg_count : 0.0;
    if (cfg.persist_null_edges) meta["persisted"] = sidecar;
    detail::write_json(dir / "nulls.json", meta);
}

// ---------------------------------------------------------------------------
// Homophily stage: empirical weekly series benchmarked against the stored
// null samples.

inline void run_homophily(const RunConfig& cfg, const BuiltData& data) {
    fs::path nulls_csv = fs::path(cfg.out_dir) / "nulls" / "null_assortativity.csv";
    if (!fs::exists(nulls_csv))
        throw config_error("null ensemble outputs not found at " + nulls_csv.string() +
                           "; run the nulls stage first");
    // per-week samples by kind
    std::size_t T = data.net.n_weeks();
    std::vector<std::vector<double>> cfg_samples(T), jd_samples(T);
    for_each_csv_row(
        nulls_csv.string(), [&](long, const std::vector<std::string_view>&) {},
        [&](long lineno, const std::vector<std::string_view>& fields) {
            if (fields.size() < 5) throw parse_error("malformed null sample row", lineno);
            Week week = static_cast<Week>(parse_int_strict(fields[0], lineno));
            if (week < 1 || week > T) throw parse_error("null sample week out of range", lineno);
            double r = std::numeric_limits<double>::quiet_NaN();
            if (!trim(fields[3]).empty()) r = parse_double_strict(fields[3], lineno);
            if (trim(fields[1]) == "configuration")
                cfg_samples[week - 1].push_back(r);
            else
                jd_samples[week - 1].push_back(r);
        });

    fs::path dir = fs::path(cfg.out_dir) / "homophily";
    fs::create_directories(dir);
    TableWriter w((dir / "homophily.csv").string(), cfg.provenance("homophily"),
                  "week,r_dir,r_undir,cfg_mean,cfg_sd,jd_mean,jd_sd,z_cfg,z_jd");
    json failures = json::array();
    for (Week t = 1; t <= T; ++t) {
        SnapshotView snap = data.net.snapshot(t);
        std::vector<double> scores(data.net.n_agents(), std::numeric_limits<double>::quiet_NaN());
        for (AgentIdx a = 0; a < data.net.n_agents(); ++a)
            if (data.panel.kept(a)) scores[a] = data.panel.completed(a, t);
        std::optional<double> r_dir, r_undir;
        try {
            r_dir = numeric_assortativity(snap, scores, AssortMode::directed);
        } catch (const analysis_error& e) {
            failures.push_back({{"week", t}, {"what", e.what()}});
        }
        try {
            r_undir = numeric_assortativity(snap, scores, AssortMode::undirected, cfg.undirected_treatment);
        } catch (const analysis_error&) {
        }
        auto band_of = [&](const std::vector<double>& samples) -> EnsembleBand {
            EnsembleBand band;
            if (samples.empty()) return band;
            try {
                return detail::band_with_z(null_band_from_samples(samples), r_dir);
            } catch (const analysis_error&) {
                return band;
            }
        };
        EnsembleBand cfg_band = band_of(cfg_samples[t - 1]);
        EnsembleBand jd_band = band_of(jd_samples[t - 1]);
        w.field(static_cast<std::uint64_t>(t));
        w.field(r_dir);
        w.field(r_undir);
        w.field(cfg_band.mean);
        w.field(cfg_band.sd);
        w.field(jd_band.mean);
        w.field(jd_band.sd);
        w.field(cfg_band.z);
        w.field(jd_band.z);
        w.end_row();
    }
    json meta;
    meta["undirected"] =
        cfg.undirected_treatment == UndirectedTreatment::symmetrize ? "symmetrize" : "collapse";
    meta["failures"] = failures;
    detail::write_json(dir / "homophily.json", meta);
}

// ---------------------------------------------------------------------------
// Selection stage.

inline void run_selection(const RunConfig& cfg, const BuiltData& data) {
    SelectionOptions opts;
    opts.block_len = cfg.block_len;
    opts.full_enum_threshold = cfg.full_enum_threshold;
    opts.subsample_ratio = cfg.subsample_ratio;
    opts.seed = cfg.seed;
    opts.workers = resolve_workers(cfg.workers);
    auto series = selection_series(data.net, data.panel, opts);

    fs::path dir = fs::path(cfg.out_dir) / "selection";
    fs::create_directories(dir);
    TableWriter w((dir / "selection.csv").string(), cfg.provenance("selection"),
                  "block_start,block_end,phi_edges,phi_mutual,phi_abs,se_abs,odds_ratio,n_rows,n_events,"
                  "converged");
    json blocks = json::array();
    for (const BlockOutcome& outcome : series) {
        w.field(static_cast<std::uint64_t>(outcome.block.first));
        w.field(static_cast<std::uint64_t>(outcome.block.last));
        if (outcome.fit) {
            const FormationFit& fit = *outcome.fit;
            w.field(fit.phi_edges);
            w.field(fit.phi_mutual);
            w.field(fit.phi_abs);
            w.field(fit.se_abs);
            w.field(fit.odds_ratio_abs);
            w.field(static_cast<std::uint64_t>(fit.n_rows));
            w.field(static_cast<std::uint64_t>(fit.n_events));
            w.field(fit.converged);
            blocks.push_back({{"block", {outcome.block.first, outcome.block.last}},
                              {"se_edges", fit.se_edges},
                              {"se_mutual", fit.se_mutual},
                              {"subsampled", fit.subsampled},
                              {"iterations", fit.iterations}});
        } else {
            for (int k = 0; k < 7; ++k) w.field(std::string_view(""));
            w.field(false);
            blocks.push_back(
                {{"block", {outcome.block.first, outcome.block.last}}, {"error", outcome.error}});
        }
        w.end_row();
    }
    json meta;
    meta["block_len"] = cfg.block_len;
    meta["full_enum_threshold"] = cfg.full_enum_threshold;
    meta["subsample_ratio"] = cfg.subsample_ratio;
    meta["blocks"] = blocks;
    detail::write_json(dir / "selection.json", meta);
}

// ---------------------------------------------------------------------------
// Influence stage.

inline void run_influence(const RunConfig& cfg, const BuiltData& data) {
    PanelBuildStats stats;
    auto rows = build_panel(data.net, data.panel, &stats);
    auto windows = make_blocks(data.net.n_weeks(), cfg.window_len);
    windows.push_back({1, data.net.n_weeks()});  // full-year row
    FeOptions opts;
    opts.cluster = cfg.cluster_variant;
    opts.weak_f_floor = cfg.weak_f_floor;
    auto fits = windowed_fits(rows, windows, opts, resolve_workers(cfg.workers));

    fs::path dir = fs::path(cfg.out_dir) / "influence";
    fs::create_directories(dir);
    TableWriter w((dir / "influence.csv").string(), cfg.provenance("influence"),
                  "window,phi_ols,gamma_ols,phi_iv,gamma_iv,se_phi_ols,se_gamma_ols,se_phi_iv,se_gamma_iv,"
                  "F_first_stage,wu_hausman_p,n_obs");
    json meta_windows = json::array();
    for (std::size_t i = 0; i < fits.size(); ++i) {
        const WindowFit& wf = fits[i];
        bool full_year = i + 1 == fits.size();
        std::string label = full_year ? "full"
                                      : std::to_string(wf.window.first) + "-" + std::to_string(wf.window.last);
        w.field(std::string_view(label));
        if (wf.ols) {
            w.field(wf.ols->phi);
            w.field(wf.ols->gamma);
        } else {
            w.field(std::string_view(""));
            w.field(std::string_view(""));
        }
        if (wf.iv) {
            w.field(wf.iv->phi);
            w.field(wf.iv->gamma);
        } else {
            w.field(std::string_view(""));
            w.field(std::string_view(""));
        }
        if (wf.ols) {
            w.field(wf.ols->se_phi);
            w.field(wf.ols->se_gamma);
        } else {
            w.field(std::string_view(""));
            w.field(std::string_view(""));
        }
        if (wf.iv) {
            w.field(wf.iv->se_phi);
            w.field(wf.iv->se_gamma);
            w.field(std::isnan(wf.iv->first_stage_f) ? std::optional<double>{}
                                                     : std::optional<double>{wf.iv->first_stage_f});
            w.field(std::isnan(wf.iv->wu_hausman_p) ? std::optional<double>{}
                                                    : std::optional<double>{wf.iv->wu_hausman_p});
        } else {
            for (int k = 0; k < 4; ++k) w.field(std::string_view(""));
        }
        w.field(static_cast<std::uint64_t>(wf.ols ? wf.ols->n_obs : (wf.iv ? wf.iv->n_obs : 0)));
        w.end_row();
        json jw;
        jw["window"] = label;
        if (!wf.error.empty()) jw["error"] = wf.error;
        if (wf.iv) jw["weak_instrument"] = wf.iv->weak_instrument;
        if (wf.ols) {
            jw["p_gamma_ols"] = wf.ols->p_gamma;
            jw["sd_delta"] = wf.ols->sd_delta;
            jw["sd_lag_self"] = wf.ols->sd_lag_self;
            jw["sd_lag_peer"] = wf.ols->sd_lag_peer;
        }
        if (wf.iv) jw["p_gamma_iv"] = wf.iv->p_gamma;
        meta_windows.push_back(jw);
    }
    json meta;
    meta["rows"] = stats.n_rows;
    meta["dropped_no_followees"] = stats.dropped_no_followees;
    meta["undefined_instrument"] = stats.undefined_instrument;
    meta["cluster_se"] = cfg.cluster_variant == ClusterVariant::CR1 ? "CR1" : "CR0";
    meta["windows"] = meta_windows;
    detail::write_json(dir / "influence.json", meta);
}

// ---------------------------------------------------------------------------
// Simulate stage.

inline void run_simulate(const RunConfig& cfg) {
    if (!cfg.sim) throw config_error("config has no simulate section");
    SimResult sim = simulate(*cfg.sim);
    fs::path dir(cfg.out_dir);
    fs::create_directories(dir);
    {
        TableWriter w((dir / "events.csv").string(), cfg.provenance("simulate"), "follower,followee,week");
        for (const FollowEvent& e : sim.events) {
            w.field(static_cast<std::uint64_t>(e.follower));
            w.field(static_cast<std::uint64_t>(e.followee));
            w.field(static_cast<std::uint64_t>(e.week));
            w.end_row();
        }
    }
    {
        TableWriter w((dir / "scores.csv").string(), cfg.provenance("simulate"), "agent,week,score");
        for (const ScoreObs& s : sim.scores) {
            w.field(static_cast<std::uint64_t>(s.agent));
            w.field(static_cast<std::uint64_t>(s.week));
            w.field(static_cast<std::int64_t>(std::llround(s.value)));
            w.end_row();
        }
    }
    const SimConfig& sc = *cfg.sim;
    json truth;
    truth["n_agents"] = sc.n_agents;
    truth["weeks"] = sc.n_weeks;
    truth["theta_edges"] = sc.theta_edges;
    truth["theta_mutual"] = sc.theta_mutual;
    truth["theta_abs"] = sc.theta_abs;
    truth["candidate_rate"] = sc.candidate_rate;
    truth["reciprocal_candidate_frac"] = sc.reciprocal_candidate_frac;
    truth["phi_sim"] = sc.phi_sim;
    truth["gamma_sim"] = sc.gamma_sim;
    truth["noise_sd"] = sc.noise_sd;
    truth["hidden_shock_sd"] = sc.hidden_shock_sd;
    truth["endogeneity_rho"] = sc.endogeneity_rho;
    truth["mixture"] = {{"mean1", sc.mix_mean1}, {"sd1", sc.mix_sd1},   {"mean2", sc.mix_mean2},
                        {"sd2", sc.mix_sd2},     {"weight1", sc.mix_weight1}};
    if (sc.regime_switch)
        truth["regime_switch"] = {{"week", sc.regime_switch->week},
                                  {"theta_abs_after", sc.regime_switch->theta_abs_after},
                                  {"gamma_after", sc.regime_switch->gamma_after}};
    truth["seed"] = sc.seed;
    truth["prng"] = kPrngName;
    truth["n_events"] = sim.events.size();
    truth["formed_per_week"] = sim.truth.formed_per_week;
    truth["ledger_rows"] = sim.truth.ledger.size();
    detail::write_json(dir / "truth.json", truth);
    if (cfg.sim_emit_ledger) {
        TableWriter w((dir / "ledger.csv").string(), cfg.provenance("simulate"),
                      "week,follower,followee,mutual,absdiff,formed");
        for (const LedgerRow& row : sim.truth.ledger) {
            w.field(static_cast<std::uint64_t>(row.week));
            w.field(static_cast<std::uint64_t>(row.i));
            w.field(static_cast<std::uint64_t>(row.j));
            w.field(row.mutual);
            w.field(row.absdiff);
            w.field(row.formed);
            w.end_row();
        }
    }
}

// ---------------------------------------------------------------------------
// Stage dispatch.

inline void run_all(const RunConfig& cfg) {
    BuiltData data = run_build(cfg);
    run_metrics(cfg, data);
    run_nulls(cfg, data);
    run_homophily(cfg, data);
    run_selection(cfg, data);
    run_influence(cfg, data);
}

inline void run_stage(const std::string& stage, const RunConfig& cfg) {
    if (stage == "simulate") {
        run_simulate(cfg);
        return;
    }
    if (stage == "build") {
        run_build(cfg);
        return;
    }
    if (stage == "all") {
        run_all(cfg);
        return;
    }
    BuiltData data = load_built(cfg);
    if (stage == "metrics")
        run_metrics(cfg, data);
    else if (stage == "nulls")
        run_nulls(cfg, data);
    else if (stage == "homophily")
        run_homophily(cfg, data);
    else if (stage == "selection")
        run_selection(cfg, data);
    else if (stage == "influence")
        run_influence(cfg, data);
    else
        throw config_error("unknown stage: " + stage);
}

} // namespace netdyn
