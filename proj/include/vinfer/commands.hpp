#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vinfer/runconfig.hpp"

namespace vinfer {

struct SplitArgs {
    std::filesystem::path corpus_root;
    double ratio = 0.8;
    std::uint64_t seed = 0;
    std::filesystem::path out_path;
};

struct BuildDatasetArgs {
    std::filesystem::path corpus_root;
    std::filesystem::path config_path;
    std::filesystem::path out_dir;
    std::filesystem::path split_path;  // empty: all records
    std::string side = "train";        // train | test | all
};

struct RunArgs {
    std::filesystem::path config_path;
    std::filesystem::path out_dir;
    std::filesystem::path split_path;  // empty: all records
    std::string side = "test";
    // Flag overrides; unset fields keep the config-file values.
    std::optional<std::string> mode;
    std::optional<int> shots;
    bool flag_gate = false;
    bool flag_no_gate = false;
    std::optional<int> repetitions;
    std::optional<std::string> settings_csv;
    bool no_cache = false;
};

struct ReportArgs {
    std::vector<std::filesystem::path> store_dirs;
    std::filesystem::path out_dir;
    std::filesystem::path lexical_csv;  // optional
};

struct ScoreScArgs {
    std::filesystem::path candidates_path;
    std::filesystem::path references_path;
    std::filesystem::path out_path;
};

struct StatsArgs {
    std::string x_csv;
    std::string y_csv;
};

void cmd_split(const SplitArgs& args);
void cmd_build_dataset(const BuildDatasetArgs& args);
void cmd_run(const RunArgs& args);
void cmd_report(const ReportArgs& args);
void cmd_score_sc(const ScoreScArgs& args);
void cmd_stats(const StatsArgs& args);

}  // namespace vinfer
