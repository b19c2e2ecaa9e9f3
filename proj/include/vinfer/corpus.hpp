#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace vinfer {

enum class Subject { geometry2d, geometry3d };

std::string to_string(Subject s);
Subject subject_from_string(const std::string& s);

enum class Setting {
    TextDominant,
    TextLite,
    VisionIntensive,
    VisionDominant,
    VisionOnly,
};

// All five settings in their stable ordinal order.
const std::vector<Setting>& all_settings();

std::string to_string(Setting s);
Setting setting_from_string(const std::string& s);

enum class AnswerKind { choice, numeric, text };

std::string to_string(AnswerKind k);
AnswerKind answer_kind_from_string(const std::string& s);

struct AnswerKey {
    AnswerKind kind = AnswerKind::text;
    std::string value;
    std::optional<double> numeric_value;
};

struct Choice {
    std::string label;
    std::string text;
};

struct ProblemRecord {
    std::string id;
    Subject subject = Subject::geometry2d;
    std::string descriptive;
    std::string implicit;
    std::string essential;
    std::vector<Choice> choices;
    AnswerKey gold;
    // Image paths, relative to the corpus root (the JSONL file's directory).
    std::string image_base;
    std::string image_dominant;
    std::string image_only;
};

struct Corpus {
    std::filesystem::path root;
    std::vector<ProblemRecord> records;

    const ProblemRecord* find(const std::string& id) const;
    std::filesystem::path resolve_image(const std::string& ref) const;
};

struct CorpusSplit {
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;
    std::uint64_t seed = 0;
    double ratio = 0.0;
};

struct LikertSummary {
    int n = 0;
    double mean = 0.0;
    double std_dev = 0.0;

    // "m±s", both to two decimals.
    std::string formatted() const;
};

// Loads, validates, and returns the corpus. Every record must satisfy the
// type invariants; all three image references must resolve under the file's
// directory. Errors name the offending line or record id.
Corpus load_corpus(const std::filesystem::path& path);

// Serializes field-for-field so load→save→load round-trips identically.
void save_corpus(const std::filesystem::path& path, const Corpus& corpus);

nlohmann::json record_to_json(const ProblemRecord& rec);
ProblemRecord record_from_json(const nlohmann::json& j, const std::string& where);

// Deterministic stratified split: each base problem lands wholly in train or
// test, so no variant of a test problem leaks into training.
CorpusSplit split_corpus(const Corpus& corpus, double ratio, std::uint64_t seed);

void save_split(const std::filesystem::path& path, const CorpusSplit& split);
CorpusSplit load_split(const std::filesystem::path& path);

// Subset of the corpus restricted to the given ids, in corpus order.
std::vector<const ProblemRecord*> select_records(const Corpus& corpus,
                                                 const std::vector<std::string>& ids);

LikertSummary aggregate_likert(const std::vector<int>& scores);

// Manifest describing a corpus file: root dir, record count, content hash.
nlohmann::json corpus_manifest(const std::filesystem::path& path);

}  // namespace vinfer
