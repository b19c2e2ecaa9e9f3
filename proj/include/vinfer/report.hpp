#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vinfer/metrics.hpp"
#include "vinfer/pipeline.hpp"
#include "vinfer/stats.hpp"

namespace vinfer {

// One persisted run: manifest.json plus results.jsonl in a directory.
struct RunStore {
    std::filesystem::path dir;
    nlohmann::json manifest;
    std::vector<RunResult> results;
    Mode mode = Mode::zero_shot;
    // Mode name, suffixed with #k when several stores share a mode.
    std::string label;
};

RunStore load_run_store(const std::filesystem::path& dir);

// Rows parsed back from a score-sc CSV.
struct LexicalTable {
    std::vector<ScoredPair> rows;
    LexicalScores mean;
};

LexicalTable parse_lexical_csv(const std::filesystem::path& path);

struct ReportBundle {
    std::string markdown;
    std::string accuracy_csv;
    std::string flips_csv;         // empty without a second store
    std::string significance_csv;  // empty without a second store
    std::string cost_csv;
    nlohmann::json plot_data;
};

// Pure function of the stored artifacts: identical stores produce identical
// bytes. Stores must agree on the corpus content hash. Flip rows compare
// each later store against the first; significance rows compare the last
// store against the earlier ones under both baseline pairings.
ReportBundle build_report(const std::vector<RunStore>& stores,
                          const std::optional<LexicalTable>& lexical);

// Writes report.md, the CSV tables, and plot_data.json into out_dir.
void write_report(const ReportBundle& bundle, const std::filesystem::path& out_dir);

// Shared row shapes used by both the report and the stats command.
std::vector<OutcomeRow> outcome_rows(const std::vector<RunResult>& results, int repetition = -1);
std::vector<CostRow> cost_rows(const std::vector<RunResult>& results);

}  // namespace vinfer
