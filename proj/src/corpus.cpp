#include "vinfer/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "vinfer/common.hpp"
#include "vinfer/hashing.hpp"
#include "vinfer/jsonl.hpp"
#include "vinfer/textutil.hpp"

namespace vinfer {

std::string to_string(Subject s) {
    switch (s) {
        case Subject::geometry2d: return "geometry2d";
        case Subject::geometry3d: return "geometry3d";
    }
    throw DataError("unknown subject enum value");
}

Subject subject_from_string(const std::string& s) {
    if (s == "geometry2d") return Subject::geometry2d;
    if (s == "geometry3d") return Subject::geometry3d;
    throw DataError("unknown subject: " + s);
}

const std::vector<Setting>& all_settings() {
    static const std::vector<Setting> settings = {
        Setting::TextDominant,    Setting::TextLite,   Setting::VisionIntensive,
        Setting::VisionDominant,  Setting::VisionOnly,
    };
    return settings;
}

std::string to_string(Setting s) {
    switch (s) {
        case Setting::TextDominant: return "text_dominant";
        case Setting::TextLite: return "text_lite";
        case Setting::VisionIntensive: return "vision_intensive";
        case Setting::VisionDominant: return "vision_dominant";
        case Setting::VisionOnly: return "vision_only";
    }
    throw DataError("unknown setting enum value");
}

Setting setting_from_string(const std::string& s) {
    for (Setting candidate : all_settings()) {
        if (to_string(candidate) == s) return candidate;
    }
    throw DataError("unknown setting: " + s);
}

std::string to_string(AnswerKind k) {
    switch (k) {
        case AnswerKind::choice: return "choice";
        case AnswerKind::numeric: return "numeric";
        case AnswerKind::text: return "text";
    }
    throw DataError("unknown answer kind enum value");
}

AnswerKind answer_kind_from_string(const std::string& s) {
    if (s == "choice") return AnswerKind::choice;
    if (s == "numeric") return AnswerKind::numeric;
    if (s == "text") return AnswerKind::text;
    throw DataError("unknown answer kind: " + s);
}

const ProblemRecord* Corpus::find(const std::string& id) const {
    for (const auto& rec : records) {
        if (rec.id == id) return &rec;
    }
    return nullptr;
}

std::filesystem::path Corpus::resolve_image(const std::string& ref) const {
    return root / ref;
}

std::string LikertSummary::formatted() const {
    return format_fixed(mean, 2) + "±" + format_fixed(std_dev, 2);
}

namespace {

std::string require_string(const nlohmann::json& j, const char* key, const std::string& where) {
    if (!j.contains(key) || !j[key].is_string()) {
        throw DataError(where + ": missing or non-string field \"" + key + "\"");
    }
    return j[key].get<std::string>();
}

void validate_record(const ProblemRecord& rec, const std::string& where) {
    if (rec.id.empty()) throw DataError(where + ": empty id");
    if (rec.gold.kind == AnswerKind::choice) {
        if (rec.choices.empty()) {
            throw DataError(where + ": gold is a choice but choices are empty");
        }
        if (rec.gold.value.size() != 1 || rec.gold.value[0] < 'A' || rec.gold.value[0] > 'Z') {
            throw DataError(where + ": choice gold must be a single uppercase letter, got \"" +
                            rec.gold.value + "\"");
        }
        bool found = false;
        for (const auto& c : rec.choices) {
            if (c.label == rec.gold.value) found = true;
        }
        if (!found) {
            throw DataError(where + ": gold label \"" + rec.gold.value +
                            "\" not among the choice labels");
        }
    } else if (!rec.choices.empty()) {
        throw DataError(where + ": choices present but gold kind is " + to_string(rec.gold.kind));
    }
    if (rec.gold.kind == AnswerKind::numeric && !rec.gold.numeric_value.has_value()) {
        throw DataError(where + ": numeric gold lacks numeric_value");
    }
    if (rec.image_base.empty() || rec.image_dominant.empty() || rec.image_only.empty()) {
        throw DataError(where + ": all three image references are required");
    }
}

}  // namespace

ProblemRecord record_from_json(const nlohmann::json& j, const std::string& where) {
    if (!j.is_object()) throw DataError(where + ": record is not an object");
    ProblemRecord rec;
    rec.id = require_string(j, "id", where);
    rec.subject = subject_from_string(require_string(j, "subject", where));
    rec.descriptive = require_string(j, "descriptive", where);
    rec.implicit = require_string(j, "implicit", where);
    rec.essential = require_string(j, "essential", where);
    if (!j.contains("choices") || !j["choices"].is_array()) {
        throw DataError(where + ": missing or non-array field \"choices\"");
    }
    for (const auto& cj : j["choices"]) {
        Choice c;
        c.label = require_string(cj, "label", where);
        c.text = require_string(cj, "text", where);
        rec.choices.push_back(std::move(c));
    }
    if (!j.contains("gold") || !j["gold"].is_object()) {
        throw DataError(where + ": missing or non-object field \"gold\"");
    }
    const auto& gj = j["gold"];
    rec.gold.kind = answer_kind_from_string(require_string(gj, "kind", where));
    rec.gold.value = require_string(gj, "value", where);
    if (gj.contains("numeric_value")) {
        if (!gj["numeric_value"].is_number()) {
            throw DataError(where + ": numeric_value must be a number");
        }
        rec.gold.numeric_value = gj["numeric_value"].get<double>();
    }
    rec.image_base = require_string(j, "image_base", where);
    rec.image_dominant = require_string(j, "image_dominant", where);
    rec.image_only = require_string(j, "image_only", where);
    validate_record(rec, where);
    return rec;
}

nlohmann::json record_to_json(const ProblemRecord& rec) {
    nlohmann::json j;
    j["id"] = rec.id;
    j["subject"] = to_string(rec.subject);
    j["descriptive"] = rec.descriptive;
    j["implicit"] = rec.implicit;
    j["essential"] = rec.essential;
    j["choices"] = nlohmann::json::array();
    for (const auto& c : rec.choices) {
        j["choices"].push_back({{"label", c.label}, {"text", c.text}});
    }
    j["gold"] = {{"kind", to_string(rec.gold.kind)}, {"value", rec.gold.value}};
    if (rec.gold.numeric_value.has_value()) {
        j["gold"]["numeric_value"] = *rec.gold.numeric_value;
    }
    j["image_base"] = rec.image_base;
    j["image_dominant"] = rec.image_dominant;
    j["image_only"] = rec.image_only;
    return j;
}

Corpus load_corpus(const std::filesystem::path& path) {
    Corpus corpus;
    corpus.root = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    auto rows = read_jsonl(path);
    std::set<std::string> seen_ids;
    size_t index = 0;
    for (const auto& row : rows) {
        ++index;
        std::string where = path.filename().string() + " record " + std::to_string(index);
        ProblemRecord rec = record_from_json(row, where);
        if (!seen_ids.insert(rec.id).second) {
            throw DataError(where + ": duplicate id \"" + rec.id + "\"");
        }
        for (const auto* field : {&rec.image_base, &rec.image_dominant, &rec.image_only}) {
            auto resolved = corpus.root / *field;
            if (!std::filesystem::exists(resolved)) {
                const char* name = field == &rec.image_base      ? "image_base"
                                   : field == &rec.image_dominant ? "image_dominant"
                                                                  : "image_only";
                throw DataError("record \"" + rec.id + "\": " + name +
                                " does not exist: " + resolved.string());
            }
        }
        corpus.records.push_back(std::move(rec));
    }
    return corpus;
}

void save_corpus(const std::filesystem::path& path, const Corpus& corpus) {
    std::vector<nlohmann::json> rows;
    rows.reserve(corpus.records.size());
    for (const auto& rec : corpus.records) {
        rows.push_back(record_to_json(rec));
    }
    write_jsonl(path, rows);
}

CorpusSplit split_corpus(const Corpus& corpus, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0)) {
        throw UsageError("split ratio must be strictly between 0 and 1");
    }
    if (corpus.records.empty()) {
        throw DataError("cannot split an empty corpus");
    }
    if (corpus.records.size() < 5) {
        throw DataError("corpus has fewer than 5 base problems; cannot stratify");
    }
    std::vector<std::string> ids;
    ids.reserve(corpus.records.size());
    for (const auto& rec : corpus.records) ids.push_back(rec.id);

    // Fisher-Yates with an explicit engine: std::shuffle's draw sequence is
    // implementation-defined, and the split must be stable across platforms.
    std::mt19937_64 rng(seed);
    for (size_t i = ids.size() - 1; i > 0; --i) {
        size_t j = static_cast<size_t>(rng() % (i + 1));
        std::swap(ids[i], ids[j]);
    }

    auto n = static_cast<long long>(ids.size());
    auto train_count = static_cast<long long>(std::llround(ratio * static_cast<double>(n)));
    train_count = std::clamp(train_count, 1LL, n - 1);

    CorpusSplit split;
    split.seed = seed;
    split.ratio = ratio;
    split.train_ids.assign(ids.begin(), ids.begin() + train_count);
    split.test_ids.assign(ids.begin() + train_count, ids.end());
    std::sort(split.train_ids.begin(), split.train_ids.end());
    std::sort(split.test_ids.begin(), split.test_ids.end());
    return split;
}

void save_split(const std::filesystem::path& path, const CorpusSplit& split) {
    nlohmann::json j;
    j["train_ids"] = split.train_ids;
    j["test_ids"] = split.test_ids;
    j["seed"] = split.seed;
    j["ratio"] = split.ratio;
    write_file_atomic(path, j.dump(2) + "\n");
}

CorpusSplit load_split(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(path.string() + ": invalid split file: " + e.what());
    }
    CorpusSplit split;
    try {
        split.train_ids = j.at("train_ids").get<std::vector<std::string>>();
        split.test_ids = j.at("test_ids").get<std::vector<std::string>>();
        split.seed = j.at("seed").get<std::uint64_t>();
        split.ratio = j.at("ratio").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": malformed split file: " + e.what());
    }
    return split;
}

std::vector<const ProblemRecord*> select_records(const Corpus& corpus,
                                                 const std::vector<std::string>& ids) {
    std::set<std::string> wanted(ids.begin(), ids.end());
    std::vector<const ProblemRecord*> out;
    for (const auto& rec : corpus.records) {
        if (wanted.count(rec.id)) out.push_back(&rec);
    }
    if (out.size() != wanted.size()) {
        throw DataError("split references ids missing from the corpus");
    }
    return out;
}

LikertSummary aggregate_likert(const std::vector<int>& scores) {
    if (scores.empty()) throw DataError("likert score list is empty");
    double sum = 0.0;
    for (int s : scores) {
        if (s < 0 || s > 5) {
            throw DataError("likert score out of range 0..5: " + std::to_string(s));
        }
        sum += s;
    }
    LikertSummary summary;
    summary.n = static_cast<int>(scores.size());
    summary.mean = sum / static_cast<double>(scores.size());
    double sq = 0.0;
    for (int s : scores) {
        double d = s - summary.mean;
        sq += d * d;
    }
    summary.std_dev = std::sqrt(sq / static_cast<double>(scores.size()));
    return summary;
}

nlohmann::json corpus_manifest(const std::filesystem::path& path) {
    Corpus corpus = load_corpus(path);
    nlohmann::json j;
    j["root"] = corpus.root.string();
    j["record_count"] = corpus.records.size();
    j["content_sha256"] = sha256_hex(read_file(path));
    return j;
}

}  // namespace vinfer
