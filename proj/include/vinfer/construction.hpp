#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vinfer/answers.hpp"
#include "vinfer/corpus.hpp"
#include "vinfer/gateway.hpp"

namespace vinfer {

enum class AnnotationKind { sc, rc };

std::string to_string(AnnotationKind k);

struct AnnotationRecord {
    std::string problem_id;
    Setting setting = Setting::TextDominant;
    AnnotationKind kind = AnnotationKind::sc;
    std::string text;
    std::string generator_backend_id;
    bool enriched = false;                         // sc only
    std::optional<NormalizedAnswer> final_answer;  // rc only
    std::optional<bool> valid;                     // rc only, set by filter_rc

    nlohmann::json to_json() const;
    static AnnotationRecord from_json(const nlohmann::json& j, const std::string& where);
};

struct ConstructionTemplates {
    std::string sc_generate;
    std::string rc_generate;
    std::string sx_infer;
    std::string rx_infer;
    std::string evaluator;
    std::string sft;
};

// Visual-interpretation generation for one (problem, setting). Settings
// whose text omits problem content need the image understood, so they
// require an image-capable backend; a text-dominant variant degrades to a
// text-only call when the backend cannot take images.
AnnotationRecord generate_sc(const Corpus& corpus, const ProblemRecord& problem, Setting setting,
                             Gateway& gateway, const std::string& backend_id,
                             const std::string& sc_template);

// Prepends the full text-only problem form to the generated interpretation
// under fixed section headers.
AnnotationRecord enrich_sc(const AnnotationRecord& sc, const ProblemRecord& problem);

// Reasoning-chain generation; always runs on the text-dominant variant.
AnnotationRecord generate_rc(const Corpus& corpus, const ProblemRecord& problem, Gateway& gateway,
                             const std::string& backend_id, const std::string& rc_template);

// Keeps the chain only when its parsed final answer matches gold.
AnnotationRecord filter_rc(const AnnotationRecord& rc, const ProblemRecord& problem,
                           double tol = kDefaultNumericTol);

// Attaches one valid text-dominant chain to all five settings.
std::vector<std::pair<Setting, AnnotationRecord>> propagate_td_rc(const ProblemRecord& problem,
                                                                  const AnnotationRecord& td_rc);

struct PairedOutcome {
    bool with_sc_correct = false;
    bool without_sc_correct = false;
};

struct ConstructionAnnotations {
    std::map<std::pair<std::string, Setting>, AnnotationRecord> enriched_sc;
    std::map<std::string, AnnotationRecord> valid_td_rc;
    std::map<std::pair<std::string, Setting>, PairedOutcome> gate_outcomes;
};

enum class FinetuneRole { sx, rx, evaluator, sft_baseline };

std::string to_string(FinetuneRole r);

// Writes one JSONL row per training example: {role, input: {text, image?},
// target}. rx needs an interpretation for every row and fails listing the
// ids that lack one.
void emit_finetune_dataset(const Corpus& corpus, const std::vector<std::string>& ids,
                           const ConstructionAnnotations& annotations, FinetuneRole role,
                           const ConstructionTemplates& templates,
                           const std::filesystem::path& out_path);

struct ConstructionConfig {
    std::string sc_backend;
    std::string rc_backend;
    std::string rx_backend;
    ConstructionTemplates templates;
    double tol = kDefaultNumericTol;
};

struct ConstructionResult {
    ConstructionAnnotations annotations;
    std::vector<std::string> failure_log;
    int rc_total = 0;
    int rc_valid = 0;
};

// The full dataset-construction pass over the given problems: generate and
// enrich interpretations, generate and filter chains, and run the paired
// solver comparisons that label the gate corpus.
ConstructionResult run_construction(const Corpus& corpus, const std::vector<std::string>& ids,
                                    Gateway& gateway, const ConstructionConfig& config);

}  // namespace vinfer
