// netdyn command-line tool: temporal follow-network analysis pipeline.
//
// Usage:
//   netdyn <stage> --config CONFIG.json [--out DIR] [--seed N] [--workers N]
//
// Stages: build, metrics, nulls, homophily, selection, influence, simulate,
// all.  Exit codes: 0 success, 1 analysis failure, 2 input/config error.

#include <cstdio>
#include <cstring>
#include <exception>
#include <string>

#include "netdyn/pipeline.hpp"
#include "netdyn/version.hpp"

namespace {

void print_usage() {
    std::fprintf(stderr,
                 "%s %s - temporal follow-network analysis\n"
                 "usage: netdyn <stage> --config CONFIG.json [--out DIR] [--seed N] [--workers N]\n"
                 "stages: build metrics nulls homophily selection influence simulate all\n",
                 netdyn::kToolName, netdyn::kToolVersion);
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        print_usage();
        return 2;
    }
    std::string stage = argv[1];
    if (stage == "-h" || stage == "--help") {
        print_usage();
        return 0;
    }
    std::string config_path;
    std::string out_override;
    std::string seed_override;
    std::string workers_override;
    for (int i = 2; i < argc; ++i) {
        std::string arg = argv[i];
        auto take_value = [&](const char* name) -> std::string {
            if (i + 1 >= argc) {
                std::fprintf(stderr, "netdyn: %s needs a value\n", name);
                std::exit(2);
            }
            return argv[++i];
        };
        if (arg == "--config")
            config_path = take_value("--config");
        else if (arg == "--out")
            out_override = take_value("--out");
        else if (arg == "--seed")
            seed_override = take_value("--seed");
        else if (arg == "--workers")
            workers_override = take_value("--workers");
        else {
            std::fprintf(stderr, "netdyn: unknown option '%s'\n", arg.c_str());
            print_usage();
            return 2;
        }
    }
    if (config_path.empty()) {
        std::fprintf(stderr, "netdyn: --config is required\n");
        return 2;
    }

    try {
        netdyn::RunConfig cfg = netdyn::load_run_config(config_path);
        if (!out_override.empty()) cfg.out_dir = out_override;
        if (!seed_override.empty()) cfg.seed = std::stoull(seed_override);
        if (!workers_override.empty()) cfg.workers = static_cast<unsigned>(std::stoul(workers_override));
        netdyn::run_stage(stage, cfg);
        return 0;
    } catch (const netdyn::parse_error& e) {
        std::fprintf(stderr, "netdyn: input error: %s\n", e.what());
        return 2;
    } catch (const netdyn::config_error& e) {
        std::fprintf(stderr, "netdyn: config error: %s\n", e.what());
        return 2;
    } catch (const netdyn::analysis_error& e) {
        std::fprintf(stderr, "netdyn: analysis failure: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "netdyn: error: %s\n", e.what());
        return 1;
    }
}
