#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vinfer/answers.hpp"
#include "vinfer/corpus.hpp"
#include "vinfer/gateway.hpp"

namespace vinfer {

enum class Mode { zero_shot, icl, cot, sft, sft_aug, sx_plus_default, spatialmath };

std::string to_string(Mode m);
Mode mode_from_string(const std::string& s);
const std::vector<Mode>& all_modes();

// Prompt templates loaded from a directory of <name>.txt files with
// {question}, {choices}, {context} and {demonstrations} placeholders.
class TemplateSet {
  public:
    static TemplateSet load_dir(const std::filesystem::path& dir);

    const std::string& get(const std::string& name) const;
    bool has(const std::string& name) const;
    // name -> sha256 of file content, for manifests.
    nlohmann::json hashes() const;

  private:
    std::map<std::string, std::string> by_name_;
};

struct Demo {
    std::string question;
    std::string chain;
    std::string answer;
};

struct DemoBank {
    std::vector<Demo> demos;
    std::string content_sha256;

    static DemoBank load(const std::filesystem::path& path);
};

struct RunConfig {
    Mode mode = Mode::zero_shot;
    int shots = 1;
    std::map<Role, std::string> backend_ids;
    bool gate_enabled = false;
    std::vector<Setting> settings;  // empty means all five
    int repetitions = 1;
    double tol = kDefaultNumericTol;

    void validate() const;
    std::vector<Setting> effective_settings() const;
    nlohmann::json to_json() const;
};

struct RunResult {
    std::string problem_id;
    Setting setting = Setting::TextDominant;
    Mode mode = Mode::zero_shot;
    int repetition = 0;
    std::string raw_response;
    std::optional<std::string> sc_used;
    std::optional<std::string> gate_verdict;  // "yes" or "no"
    bool gate_warning = false;
    NormalizedAnswer extracted;
    bool correct = false;
    double latency_s = 0.0;
    long long tokens_generated = 0;

    nlohmann::json to_json() const;
    static RunResult from_json(const nlohmann::json& j, const std::string& where);
};

struct SuiteResult {
    std::vector<RunResult> results;
    nlohmann::json manifest;
    std::vector<std::string> failures;
};

// First standalone yes/no token, case-insensitive; nullopt when absent.
std::optional<bool> parse_yes_no(const std::string& text);

class Pipeline {
  public:
    Pipeline(const Corpus& corpus, Gateway& gateway, TemplateSet templates,
             std::optional<DemoBank> demos = std::nullopt);

    RunResult run_item(const ProblemRecord& problem, Setting setting, const RunConfig& config,
                       int repetition);

    // Runs settings x problems x repetitions in deterministic order and
    // assembles the manifest; every manifest field is a pure function of the
    // inputs, so identical runs serialize identically.
    SuiteResult run_suite(const std::vector<std::string>& ids, const RunConfig& config,
                          const nlohmann::json& provenance = nlohmann::json::object());

  private:
    struct StageTotals {
        double latency_s = 0.0;
        long long tokens = 0;
    };

    ModelResponse call(Role role, const RunConfig& config, const std::string& prompt,
                       const std::string& image, StageTotals& totals);
    std::string demonstrations_block(Mode mode, int shots) const;

    const Corpus& corpus_;
    Gateway& gateway_;
    TemplateSet templates_;
    std::optional<DemoBank> demos_;
};

}  // namespace vinfer
