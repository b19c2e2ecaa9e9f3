#include "vinfer/pipeline.hpp"

#include <algorithm>
#include <cctype>

#include "vinfer/common.hpp"
#include "vinfer/hashing.hpp"
#include "vinfer/jsonl.hpp"
#include "vinfer/textutil.hpp"
#include "vinfer/variants.hpp"

namespace vinfer {

std::string to_string(Mode m) {
    switch (m) {
        case Mode::zero_shot: return "zero_shot";
        case Mode::icl: return "icl";
        case Mode::cot: return "cot";
        case Mode::sft: return "sft";
        case Mode::sft_aug: return "sft_aug";
        case Mode::sx_plus_default: return "sx_plus_default";
        case Mode::spatialmath: return "spatialmath";
    }
    throw DataError("unknown mode enum value");
}

const std::vector<Mode>& all_modes() {
    static const std::vector<Mode> modes = {
        Mode::zero_shot, Mode::icl,             Mode::cot,         Mode::sft,
        Mode::sft_aug,   Mode::sx_plus_default, Mode::spatialmath,
    };
    return modes;
}

Mode mode_from_string(const std::string& s) {
    for (Mode m : all_modes()) {
        if (to_string(m) == s) return m;
    }
    throw UsageError("unknown mode: " + s);
}

TemplateSet TemplateSet::load_dir(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw DataError("template directory does not exist: " + dir.string());
    }
    TemplateSet set;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() != ".txt") continue;
        set.by_name_[entry.path().stem().string()] = read_file(entry.path());
    }
    if (set.by_name_.empty()) {
        throw DataError("no .txt templates found in " + dir.string());
    }
    return set;
}

const std::string& TemplateSet::get(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) throw DataError("missing prompt template: " + name);
    return it->second;
}

bool TemplateSet::has(const std::string& name) const { return by_name_.count(name) > 0; }

nlohmann::json TemplateSet::hashes() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [name, content] : by_name_) {
        j[name] = sha256_hex(content);
    }
    return j;
}

DemoBank DemoBank::load(const std::filesystem::path& path) {
    DemoBank bank;
    bank.content_sha256 = sha256_hex(read_file(path));
    size_t index = 0;
    for (const auto& row : read_jsonl(path)) {
        ++index;
        std::string where = path.filename().string() + " demo " + std::to_string(index);
        Demo demo;
        try {
            demo.question = row.at("question").get<std::string>();
            demo.answer = row.at("answer").get<std::string>();
            demo.chain = row.value("chain", "");
        } catch (const nlohmann::json::exception& e) {
            throw DataError(where + ": malformed demo: " + e.what());
        }
        bank.demos.push_back(std::move(demo));
    }
    if (bank.demos.empty()) throw DataError(path.string() + ": demo bank is empty");
    return bank;
}

void RunConfig::validate() const {
    if (repetitions < 1) throw UsageError("repetitions must be >= 1");
    if ((mode == Mode::icl || mode == Mode::cot) && shots < 1) {
        throw UsageError("shots must be >= 1 for icl/cot");
    }
    if (!backend_ids.count(Role::rx)) throw UsageError("an rx (solver) backend is required");
    if (mode == Mode::spatialmath || mode == Mode::sx_plus_default) {
        if (!backend_ids.count(Role::sx)) {
            throw UsageError(to_string(mode) + " requires an sx backend");
        }
    }
    if (gate_enabled) {
        if (mode != Mode::spatialmath) {
            throw UsageError("the evaluator gate only applies to spatialmath mode");
        }
        if (!backend_ids.count(Role::evaluator)) {
            throw UsageError("gate_enabled requires an evaluator backend");
        }
    }
}

std::vector<Setting> RunConfig::effective_settings() const {
    return settings.empty() ? all_settings() : settings;
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json j;
    j["mode"] = to_string(mode);
    j["shots"] = shots;
    j["gate_enabled"] = gate_enabled;
    j["repetitions"] = repetitions;
    j["tol"] = tol;
    j["settings"] = nlohmann::json::array();
    for (Setting s : effective_settings()) j["settings"].push_back(to_string(s));
    j["backends"] = nlohmann::json::object();
    for (const auto& [role, backend_id] : backend_ids) {
        j["backends"][to_string(role)] = backend_id;
    }
    return j;
}

nlohmann::json RunResult::to_json() const {
    nlohmann::json j;
    j["problem_id"] = problem_id;
    j["setting"] = to_string(setting);
    j["mode"] = to_string(mode);
    j["repetition"] = repetition;
    j["raw_response"] = raw_response;
    if (sc_used.has_value()) j["sc_used"] = *sc_used;
    if (gate_verdict.has_value()) j["gate_verdict"] = *gate_verdict;
    if (gate_warning) j["gate_warning"] = true;
    nlohmann::json ex;
    ex["kind"] = to_string(extracted.kind);
    ex["canonical"] = extracted.canonical;
    if (extracted.numeric_value.has_value()) ex["numeric_value"] = *extracted.numeric_value;
    j["extracted"] = ex;
    j["correct"] = correct;
    j["latency_s"] = latency_s;
    j["tokens_generated"] = tokens_generated;
    return j;
}

RunResult RunResult::from_json(const nlohmann::json& j, const std::string& where) {
    RunResult r;
    try {
        r.problem_id = j.at("problem_id").get<std::string>();
        r.setting = setting_from_string(j.at("setting").get<std::string>());
        r.mode = mode_from_string(j.at("mode").get<std::string>());
        r.repetition = j.at("repetition").get<int>();
        r.raw_response = j.at("raw_response").get<std::string>();
        if (j.contains("sc_used")) r.sc_used = j["sc_used"].get<std::string>();
        if (j.contains("gate_verdict")) r.gate_verdict = j["gate_verdict"].get<std::string>();
        r.gate_warning = j.value("gate_warning", false);
        const auto& ex = j.at("extracted");
        std::string kind = ex.at("kind").get<std::string>();
        if (kind == "choice") {
            r.extracted.kind = NormalizedKind::choice;
        } else if (kind == "numeric") {
            r.extracted.kind = NormalizedKind::numeric;
        } else if (kind == "text") {
            r.extracted.kind = NormalizedKind::text;
        } else {
            r.extracted.kind = NormalizedKind::unparsed;
        }
        r.extracted.canonical = ex.at("canonical").get<std::string>();
        if (ex.contains("numeric_value")) {
            r.extracted.numeric_value = ex["numeric_value"].get<double>();
        }
        r.correct = j.at("correct").get<bool>();
        r.latency_s = j.at("latency_s").get<double>();
        r.tokens_generated = j.at("tokens_generated").get<long long>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(where + ": malformed run result: " + e.what());
    }
    return r;
}

std::optional<bool> parse_yes_no(const std::string& text) {
    for (const auto& raw_token : whitespace_tokens(text)) {
        size_t begin = 0;
        size_t end = raw_token.size();
        while (begin < end && !std::isalnum(static_cast<unsigned char>(raw_token[begin]))) {
            ++begin;
        }
        while (end > begin && !std::isalnum(static_cast<unsigned char>(raw_token[end - 1]))) {
            --end;
        }
        std::string token = to_lower(raw_token.substr(begin, end - begin));
        if (token == "yes") return true;
        if (token == "no") return false;
    }
    return std::nullopt;
}

Pipeline::Pipeline(const Corpus& corpus, Gateway& gateway, TemplateSet templates,
                   std::optional<DemoBank> demos)
    : corpus_(corpus),
      gateway_(gateway),
      templates_(std::move(templates)),
      demos_(std::move(demos)) {}

ModelResponse Pipeline::call(Role role, const RunConfig& config, const std::string& prompt,
                             const std::string& image, StageTotals& totals) {
    auto it = config.backend_ids.find(role);
    if (it == config.backend_ids.end()) {
        throw UsageError("no backend configured for role " + to_string(role));
    }
    const BackendConfig& backend = gateway_.backend(it->second);
    ModelRequest request;
    request.role = role;
    request.prompt = prompt;
    if (!image.empty() && backend.supports_images) request.image = image;
    ModelResponse response = gateway_.invoke(it->second, request);
    totals.latency_s += response.latency_s;
    totals.tokens += response.token_count;
    return response;
}

std::string Pipeline::demonstrations_block(Mode mode, int shots) const {
    if (!demos_.has_value()) {
        throw DataError("mode " + to_string(mode) + " needs a demonstration bank");
    }
    if (static_cast<size_t>(shots) > demos_->demos.size()) {
        throw DataError("demo bank holds " + std::to_string(demos_->demos.size()) +
                        " demonstrations; " + std::to_string(shots) + " requested");
    }
    std::string block;
    for (int i = 0; i < shots; ++i) {
        const Demo& demo = demos_->demos[static_cast<size_t>(i)];
        if (!block.empty()) block += "\n\n";
        block += "Question: " + demo.question + "\n";
        if (mode == Mode::cot && !demo.chain.empty()) {
            block += demo.chain + "\n";
        }
        block += "Answer: " + demo.answer;
    }
    return block;
}

RunResult Pipeline::run_item(const ProblemRecord& problem, Setting setting,
                             const RunConfig& config, int repetition) {
    const std::string rx_backend_id = config.backend_ids.at(Role::rx);
    const BackendConfig& rx_backend = gateway_.backend(rx_backend_id);
    if (setting != Setting::TextDominant && !rx_backend.supports_images) {
        throw UsageError("backend " + rx_backend_id + " cannot take images; setting " +
                         to_string(setting) + " is not answerable without one");
    }

    VariantInstance variant = compose_variant(problem, setting);
    std::string image = corpus_.resolve_image(variant.image).string();

    RunResult result;
    result.problem_id = problem.id;
    result.setting = setting;
    result.mode = config.mode;
    result.repetition = repetition;

    StageTotals totals;
    std::vector<std::pair<std::string, std::string>> vars = {
        {"question", variant.text},
        {"choices", variant.choices_rendered},
    };

    switch (config.mode) {
        case Mode::zero_shot:
        case Mode::sft:
        case Mode::sft_aug: {
            std::string prompt = render_template(templates_.get(to_string(config.mode)), vars);
            result.raw_response = call(Role::rx, config, prompt, image, totals).text;
            break;
        }
        case Mode::icl:
        case Mode::cot: {
            auto with_demos = vars;
            with_demos.emplace_back("demonstrations",
                                    demonstrations_block(config.mode, config.shots));
            std::string prompt =
                render_template(templates_.get(to_string(config.mode)), with_demos);
            result.raw_response = call(Role::rx, config, prompt, image, totals).text;
            break;
        }
        case Mode::sx_plus_default:
        case Mode::spatialmath: {
            std::string sx_prompt = render_template(templates_.get("sx_infer"), vars);
            std::string sc = call(Role::sx, config, sx_prompt, image, totals).text;

            bool use_sc = true;
            if (config.mode == Mode::spatialmath && config.gate_enabled) {
                std::string gate_prompt = render_template(
                    templates_.get("evaluator"),
                    {{"context", sc}, {"question", variant.text}});
                std::string gate_reply =
                    call(Role::evaluator, config, gate_prompt, image, totals).text;
                auto verdict = parse_yes_no(gate_reply);
                if (!verdict.has_value()) {
                    // Conservative default: an unreadable verdict drops the
                    // interpretation rather than trusting it.
                    result.gate_warning = true;
                    use_sc = false;
                } else {
                    use_sc = *verdict;
                }
                result.gate_verdict = use_sc ? "yes" : "no";
            }

            std::string solver_template = config.mode == Mode::spatialmath
                                              ? templates_.get("rx_infer")
                                              : templates_.get("sx_plus_default");
            auto with_context = vars;
            with_context.emplace_back("context", use_sc ? "Context:\n" + sc + "\n\n" : "");
            std::string solver_prompt = render_template(solver_template, with_context);
            result.raw_response = call(Role::rx, config, solver_prompt, image, totals).text;
            if (use_sc) result.sc_used = sc;
            break;
        }
    }

    result.extracted = normalize_answer(result.raw_response, hint_for(problem.gold));
    result.correct = match_answer(result.extracted, problem.gold, config.tol);
    result.latency_s = totals.latency_s;
    result.tokens_generated = totals.tokens;
    return result;
}

SuiteResult Pipeline::run_suite(const std::vector<std::string>& ids, const RunConfig& config,
                                const nlohmann::json& provenance) {
    config.validate();
    auto records = select_records(corpus_, ids);

    SuiteResult suite;
    for (Setting setting : config.effective_settings()) {
        for (const ProblemRecord* problem : records) {
            for (int rep = 0; rep < config.repetitions; ++rep) {
                try {
                    suite.results.push_back(run_item(*problem, setting, config, rep));
                } catch (const BackendError& e) {
                    suite.failures.push_back(problem->id + "/" + to_string(setting) + " rep " +
                                             std::to_string(rep) + ": " + e.what());
                }
            }
        }
    }

    std::string results_payload;
    for (const auto& result : suite.results) {
        results_payload += result.to_json().dump();
        results_payload.push_back('\n');
    }

    nlohmann::json core;
    core["config"] = config.to_json();
    core["templates_sha256"] = templates_.hashes();
    core["demo_bank_sha256"] = demos_.has_value() ? nlohmann::json(demos_->content_sha256)
                                                  : nlohmann::json(nullptr);
    core["provenance"] = provenance;
    core["n_results"] = suite.results.size();
    core["n_failures"] = suite.failures.size();
    core["results_sha256"] = sha256_hex(results_payload);

    suite.manifest = core;
    suite.manifest["core_sha256"] = sha256_hex(canonical_json(core));
    return suite;
}

}  // namespace vinfer
