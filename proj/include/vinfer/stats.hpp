#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vinfer/corpus.hpp"

namespace vinfer {

struct OutcomeRow {
    std::string problem_id;
    Setting setting = Setting::TextDominant;
    bool correct = false;
};

struct AccuracyTable {
    // Percentages at full precision; reports round to one decimal.
    std::map<Setting, double> per_setting;
    std::map<Setting, int> n_per_setting;
    double all_mean = 0.0;
};

// Per-setting accuracy over all five settings plus their unweighted mean.
// A setting with no results is an error naming that setting.
AccuracyTable accuracy_table(const std::vector<OutcomeRow>& results);

struct FlipStats {
    int improvements = 0;
    int degradations = 0;
    // Absent when degradations == 0; full precision otherwise.
    std::optional<double> ratio;

    // Two decimals; an infinity sign when only improvements exist; a dash
    // when nothing flipped either way.
    std::string formatted_ratio() const;
};

// Pairwise correct-flag comparison over identical (problem, setting) key
// sets; mismatched keys are an error listing the missing ones.
FlipStats flip_stats(const std::vector<OutcomeRow>& baseline,
                     const std::vector<OutcomeRow>& treated);

enum class MWUMethod { exact, normal_approx };

std::string to_string(MWUMethod m);

struct MWUResult {
    double u_statistic = 0.0;
    double p_one_tailed = 1.0;
    MWUMethod method = MWUMethod::exact;
};

// One-tailed Mann-Whitney U for the alternative "x stochastically greater
// than y". U counts x-over-y wins with half credit for ties. The p-value is
// exact over all rank assignments (tied values take midranks) whenever
// n*m <= 400, and a tie-corrected normal approximation with continuity
// correction beyond that.
MWUResult mann_whitney_one_tailed(const std::vector<double>& x, const std::vector<double>& y);

struct CostRow {
    int repetition = 0;
    double latency_s = 0.0;
    long long tokens = 0;
};

struct CostStats {
    // Keyed by repetition index, mean latency within that run.
    std::map<int, double> per_run_mean_latency;
    // Mean of the per-run means.
    double mean_latency = 0.0;
    double mean_tokens = 0.0;
};

CostStats cost_stats(const std::vector<CostRow>& rows);

}  // namespace vinfer
