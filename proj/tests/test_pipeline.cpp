#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "netdyn/pipeline.hpp"

using namespace netdyn;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / "netdyn_pipeline" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// a small end-to-end configuration backed by simulator outputs
RunConfig small_run(const fs::path& dir, std::uint64_t seed = 5) {
    RunConfig cfg;
    cfg.out_dir = (dir / "out").string();
    cfg.seed = seed;
    cfg.n_weeks = 6;
    cfg.null_realizations = 20;
    cfg.workers = 2;
    SimConfig sim;
    sim.n_agents = 80;
    sim.n_weeks = 6;
    sim.theta_abs = -0.8;
    sim.candidate_rate = 3.0;
    sim.reciprocal_candidate_frac = 0.2;
    sim.gamma_sim = 0.1;
    sim.seed = seed;
    cfg.sim = sim;
    cfg.block_len = 3;
    cfg.window_len = 3;
    run_simulate(cfg);
    cfg.events_path = (fs::path(cfg.out_dir) / "events.csv").string();
    cfg.scores_path = (fs::path(cfg.out_dir) / "scores.csv").string();
    return cfg;
}

std::string first_data_line(const fs::path& file) {
    std::ifstream in(file);
    std::string line;
    int skipped_comments = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] == '#') {
            ++skipped_comments;
            continue;
        }
        if (!line.empty()) return line;
    }
    (void)skipped_comments;
    return "";
}

} // namespace

TEST_CASE("simulate stage round-trips through build", "[pipeline]") {
    fs::path dir = fresh_dir("roundtrip");
    RunConfig cfg = small_run(dir);
    BuiltData data = run_build(cfg);
    REQUIRE(data.net.events().size() > 0);
    REQUIRE(data.panel.kept_count() == 80);
    REQUIRE(fs::exists(fs::path(cfg.out_dir) / "build" / "build.json"));
    REQUIRE(fs::exists(fs::path(cfg.out_dir) / "truth.json"));
}

TEST_CASE("rebuild from identical inputs yields identical content digests", "[pipeline]") {
    fs::path dir = fresh_dir("digests");
    RunConfig cfg = small_run(dir);
    run_build(cfg);
    auto d1 = file_digest((fs::path(cfg.out_dir) / "build" / "events_clean.csv").string());
    auto s1 = file_digest((fs::path(cfg.out_dir) / "build" / "scores_completed.csv").string());
    run_build(cfg);
    auto d2 = file_digest((fs::path(cfg.out_dir) / "build" / "events_clean.csv").string());
    auto s2 = file_digest((fs::path(cfg.out_dir) / "build" / "scores_completed.csv").string());
    REQUIRE(d1 == d2);
    REQUIRE(s1 == s2);
}

TEST_CASE("stages produce their tables and the full pipeline runs", "[pipeline][slow]") {
    fs::path dir = fresh_dir("stages");
    RunConfig cfg = small_run(dir);
    run_all(cfg);
    fs::path out(cfg.out_dir);
    // five stage tables
    REQUIRE(fs::exists(out / "metrics" / "metrics.csv"));
    REQUIRE(fs::exists(out / "nulls" / "null_assortativity.csv"));
    REQUIRE(fs::exists(out / "homophily" / "homophily.csv"));
    REQUIRE(fs::exists(out / "selection" / "selection.csv"));
    REQUIRE(fs::exists(out / "influence" / "influence.csv"));
    // provenance headers on every table
    for (const char* rel : {"metrics/metrics.csv", "nulls/null_assortativity.csv",
                            "homophily/homophily.csv", "selection/selection.csv",
                            "influence/influence.csv"}) {
        std::ifstream in(out / rel);
        std::string line;
        std::getline(in, line);
        REQUIRE(line.rfind("# tool: netdyn", 0) == 0);
        bool saw_digest = false, saw_seed = false, saw_prng = false;
        while (std::getline(in, line) && !line.empty() && line[0] == '#') {
            if (line.find("config_digest") != std::string::npos) saw_digest = true;
            if (line.find("seed") != std::string::npos) saw_seed = true;
            if (line.find("prng") != std::string::npos) saw_prng = true;
        }
        REQUIRE(saw_digest);
        REQUIRE(saw_seed);
        REQUIRE(saw_prng);
    }
}

TEST_CASE("repeated runs with the same seed produce identical outputs", "[pipeline][slow]") {
    fs::path dir1 = fresh_dir("repeat1");
    fs::path dir2 = fresh_dir("repeat2");
    RunConfig a = small_run(dir1, 9);
    RunConfig b = small_run(dir2, 9);
    a.workers = 1;
    b.workers = 3;  // determinism must not depend on worker count
    run_all(a);
    run_all(b);
    for (const char* rel : {"metrics/metrics.csv", "nulls/null_assortativity.csv",
                            "homophily/homophily.csv", "selection/selection.csv",
                            "influence/influence.csv"}) {
        auto da = file_digest((fs::path(a.out_dir) / rel).string());
        auto db = file_digest((fs::path(b.out_dir) / rel).string());
        REQUIRE(da == db);
    }
}

TEST_CASE("homophily without nulls names the missing stage", "[pipeline]") {
    fs::path dir = fresh_dir("prereq");
    RunConfig cfg = small_run(dir);
    BuiltData data = run_build(cfg);
    try {
        run_homophily(cfg, data);
        FAIL("expected config_error");
    } catch (const config_error& e) {
        REQUIRE(std::string(e.what()).find("nulls") != std::string::npos);
    }
}

TEST_CASE("stages without built data name the build stage", "[pipeline]") {
    fs::path dir = fresh_dir("nobuild");
    RunConfig cfg;
    cfg.out_dir = (dir / "out").string();
    try {
        run_stage("metrics", cfg);
        FAIL("expected config_error");
    } catch (const config_error& e) {
        REQUIRE(std::string(e.what()).find("build") != std::string::npos);
    }
}

TEST_CASE("config files parse with defaults and overrides", "[pipeline]") {
    fs::path dir = fresh_dir("config");
    fs::path cfg_path = dir / "run.json";
    {
        std::ofstream out(cfg_path);
        out << R"({
            "inputs": {"events": "e.csv", "scores": "s.csv"},
            "weeks": 12,
            "seed": 99,
            "nulls": {"realizations": 7},
            "selection": {"block_len": 4},
            "influence": {"cluster_se": "CR0"},
            "simulate": {"n_agents": 50, "weeks": 12, "theta_abs": -1.5,
                          "regime_switch": {"week": 6, "theta_abs_after": 0.0, "gamma_after": 0.2}}
        })";
    }
    RunConfig cfg = load_run_config(cfg_path.string());
    REQUIRE(cfg.events_path == "e.csv");
    REQUIRE(cfg.n_weeks == 12);
    REQUIRE(cfg.seed == 99);
    REQUIRE(cfg.null_realizations == 7);
    REQUIRE(cfg.block_len == 4);
    REQUIRE(cfg.cluster_variant == ClusterVariant::CR0);
    REQUIRE(cfg.sim);
    REQUIRE(cfg.sim->n_agents == 50);
    REQUIRE(cfg.sim->theta_abs == -1.5);
    REQUIRE(cfg.sim->regime_switch->week == 6);
    REQUIRE(cfg.config_digest != 0);
    // defaults reproduce the reference setup
    RunConfig defaults;
    REQUIRE(defaults.n_weeks == 52);
    REQUIRE(defaults.null_realizations == 100);
    REQUIRE(defaults.block_len == 8);
    REQUIRE(defaults.window_len == 8);

    {
        std::ofstream out(cfg_path);
        out << "{not valid json";
    }
    REQUIRE_THROWS_AS(load_run_config(cfg_path.string()), config_error);
}

TEST_CASE("cli binary maps error classes to exit codes", "[pipeline][cli]") {
    const char* bin = std::getenv("NETDYN_BIN");
    if (!bin) {
        SKIP("NETDYN_BIN not set");
    }
    fs::path dir = fresh_dir("cli");
    // corrupted events CSV -> exit 2
    fs::path events = dir / "events.csv";
    {
        std::ofstream out(events);
        out << "follower,followee,week\n";
        out << "a,b,notanumber\n";
    }
    fs::path scores = dir / "scores.csv";
    {
        std::ofstream out(scores);
        out << "agent,week,score\n";
        out << "a,1,50\n";
        out << "b,1,60\n";
    }
    fs::path cfg_path = dir / "run.json";
    {
        std::ofstream out(cfg_path);
        out << "{\"inputs\": {\"events\": \"" << events.string() << "\", \"scores\": \""
            << scores.string() << "\"}, \"weeks\": 3, \"out\": \"" << (dir / "out").string() << "\"}";
    }
    std::string cmd = std::string(bin) + " build --config " + cfg_path.string() + " 2>/dev/null";
    int rc = std::system(cmd.c_str());
    REQUIRE(WEXITSTATUS(rc) == 2);

    // valid inputs -> exit 0
    {
        std::ofstream out(events);
        out << "follower,followee,week\n";
        out << "a,b,1\n";
        out << "b,a,2\n";
    }
    rc = std::system(cmd.c_str());
    REQUIRE(WEXITSTATUS(rc) == 0);

    // unknown stage -> exit 2
    std::string bad = std::string(bin) + " frobnicate --config " + cfg_path.string() + " 2>/dev/null";
    rc = std::system(bad.c_str());
    REQUIRE(WEXITSTATUS(rc) == 2);
}

TEST_CASE("timestamp events bin through the configured epoch", "[pipeline]") {
    fs::path dir = fresh_dir("epoch");
    fs::path events = dir / "events.csv";
    {
        std::ofstream out(events);
        out << "follower,followee,timestamp\n";
        out << "a,b,2023-05-01\n";
        out << "b,c,2023-05-09\n";
    }
    fs::path scores = dir / "scores.csv";
    {
        std::ofstream out(scores);
        out << "agent,week,score\n";
        out << "a,1,40\nb,1,60\nc,2,80\n";
    }
    RunConfig cfg;
    cfg.out_dir = (dir / "out").string();
    cfg.events_path = events.string();
    cfg.scores_path = scores.string();
    cfg.epoch_date = "2023-05-01";
    cfg.n_weeks = 3;
    BuiltData data = run_build(cfg);
    REQUIRE(data.net.snapshot(1).edge_count() == 1);
    REQUIRE(data.net.snapshot(2).edge_count() == 2);

    // timestamps without an epoch are a config error
    RunConfig bad = cfg;
    bad.epoch_date.reset();
    REQUIRE_THROWS_AS(run_build(bad), config_error);
}

TEST_CASE("null realizations persist as edge lists with a sidecar", "[pipeline]") {
    fs::path dir = fresh_dir("persist");
    RunConfig cfg = small_run(dir);
    cfg.null_realizations = 3;
    cfg.persist_null_edges = true;
    BuiltData data = run_build(cfg);
    run_nulls(cfg, data);
    fs::path reals = fs::path(cfg.out_dir) / "nulls" / "realizations";
    REQUIRE(fs::exists(reals / "w01_configuration_r000.csv"));
    REQUIRE(fs::exists(reals / "w06_joint_degree_r002.csv"));
    std::string meta = read_file((fs::path(cfg.out_dir) / "nulls" / "nulls.json").string());
    REQUIRE(meta.find("\"persisted\"") != std::string::npos);
    REQUIRE(meta.find("w01_configuration_r000.csv") != std::string::npos);
}

TEST_CASE("cli reports analysis failures with exit code 1", "[pipeline][cli]") {
    const char* bin = std::getenv("NETDYN_BIN");
    if (!bin) {
        SKIP("NETDYN_BIN not set");
    }
    fs::path dir = fresh_dir("cli_analysis");
    // followees without any scores never enter the panel, so no row has a
    // defined lagged peer mean and the influence stage fails
    fs::path events = dir / "events.csv";
    {
        std::ofstream out(events);
        out << "follower,followee,week\n";
        out << "a,b,1\n";
        out << "a,c,1\n";
    }
    fs::path scores = dir / "scores.csv";
    {
        std::ofstream out(scores);
        out << "agent,week,score\n";
        for (int w = 1; w <= 4; ++w) out << "a," << w << "," << 40 + w << "\n";
    }
    fs::path cfg_path = dir / "run.json";
    {
        std::ofstream out(cfg_path);
        out << "{\"inputs\": {\"events\": \"" << events.string() << "\", \"scores\": \""
            << scores.string() << "\"}, \"weeks\": 4, \"out\": \"" << (dir / "out").string()
            << "\", \"influence\": {\"window_len\": 4}}";
    }
    std::string build_cmd = std::string(bin) + " build --config " + cfg_path.string() + " 2>/dev/null";
    REQUIRE(WEXITSTATUS(std::system(build_cmd.c_str())) == 0);
    std::string infl_cmd = std::string(bin) + " influence --config " + cfg_path.string() + " 2>/dev/null";
    REQUIRE(WEXITSTATUS(std::system(infl_cmd.c_str())) == 1);
}
