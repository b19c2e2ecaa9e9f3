#include "vinfer/construction.hpp"

#include <algorithm>

#include "vinfer/common.hpp"
#include "vinfer/jsonl.hpp"
#include "vinfer/textutil.hpp"
#include "vinfer/variants.hpp"

namespace vinfer {

std::string to_string(AnnotationKind k) {
    switch (k) {
        case AnnotationKind::sc: return "sc";
        case AnnotationKind::rc: return "rc";
    }
    throw DataError("unknown annotation kind enum value");
}

nlohmann::json AnnotationRecord::to_json() const {
    nlohmann::json j;
    j["problem_id"] = problem_id;
    j["setting"] = vinfer::to_string(setting);
    j["kind"] = vinfer::to_string(kind);
    j["text"] = text;
    j["generator_backend_id"] = generator_backend_id;
    if (kind == AnnotationKind::sc) {
        j["enriched"] = enriched;
    }
    if (final_answer.has_value()) {
        nlohmann::json fa;
        fa["kind"] = vinfer::to_string(final_answer->kind);
        fa["canonical"] = final_answer->canonical;
        if (final_answer->numeric_value.has_value()) {
            fa["numeric_value"] = *final_answer->numeric_value;
        }
        j["final_answer"] = fa;
    }
    if (valid.has_value()) j["valid"] = *valid;
    return j;
}

AnnotationRecord AnnotationRecord::from_json(const nlohmann::json& j, const std::string& where) {
    AnnotationRecord rec;
    try {
        rec.problem_id = j.at("problem_id").get<std::string>();
        rec.setting = setting_from_string(j.at("setting").get<std::string>());
        std::string kind = j.at("kind").get<std::string>();
        if (kind == "sc") {
            rec.kind = AnnotationKind::sc;
        } else if (kind == "rc") {
            rec.kind = AnnotationKind::rc;
        } else {
            throw DataError(where + ": unknown annotation kind " + kind);
        }
        rec.text = j.at("text").get<std::string>();
        rec.generator_backend_id = j.at("generator_backend_id").get<std::string>();
        rec.enriched = j.value("enriched", false);
        if (j.contains("final_answer")) {
            const auto& fa = j["final_answer"];
            NormalizedAnswer answer;
            std::string fa_kind = fa.at("kind").get<std::string>();
            if (fa_kind == "choice") {
                answer.kind = NormalizedKind::choice;
            } else if (fa_kind == "numeric") {
                answer.kind = NormalizedKind::numeric;
            } else if (fa_kind == "text") {
                answer.kind = NormalizedKind::text;
            } else {
                answer.kind = NormalizedKind::unparsed;
            }
            answer.canonical = fa.at("canonical").get<std::string>();
            if (fa.contains("numeric_value")) {
                answer.numeric_value = fa["numeric_value"].get<double>();
            }
            rec.final_answer = answer;
        }
        if (j.contains("valid")) rec.valid = j["valid"].get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(where + ": malformed annotation record: " + e.what());
    }
    return rec;
}

namespace {

// Only the text-dominant variant carries the full problem in prose; the
// other settings cannot be understood without their image.
bool image_required(Setting setting) {
    return setting != Setting::TextDominant;
}

}  // namespace

AnnotationRecord generate_sc(const Corpus& corpus, const ProblemRecord& problem, Setting setting,
                             Gateway& gateway, const std::string& backend_id,
                             const std::string& sc_template) {
    const BackendConfig& config = gateway.backend(backend_id);
    if (image_required(setting) && !config.supports_images) {
        throw UsageError("backend " + backend_id + " cannot take images; setting " +
                         to_string(setting) + " of problem \"" + problem.id +
                         "\" is not answerable without one");
    }
    VariantInstance variant = compose_variant(problem, setting);
    ModelRequest request;
    request.role = Role::sc_gen;
    request.prompt = render_template(sc_template, {{"question", variant.text}});
    if (config.supports_images) {
        request.image = corpus.resolve_image(variant.image).string();
    }
    ModelResponse response;
    try {
        response = gateway.invoke(backend_id, request);
    } catch (const Error& e) {
        throw BackendError("problem \"" + problem.id + "\" setting " + to_string(setting) +
                           ": " + e.what());
    }
    AnnotationRecord rec;
    rec.problem_id = problem.id;
    rec.setting = setting;
    rec.kind = AnnotationKind::sc;
    rec.text = response.text;
    rec.generator_backend_id = backend_id;
    rec.enriched = false;
    return rec;
}

AnnotationRecord enrich_sc(const AnnotationRecord& sc, const ProblemRecord& problem) {
    if (sc.kind != AnnotationKind::sc) {
        throw DataError("cannot enrich a non-sc annotation for \"" + sc.problem_id + "\"");
    }
    if (sc.enriched) {
        throw DataError("annotation for \"" + sc.problem_id + "\" is already enriched");
    }
    AnnotationRecord out = sc;
    out.text = "Problem statement:\n" + compose_text_only(problem) +
               "\n\nVisual interpretation:\n" + sc.text;
    out.enriched = true;
    return out;
}

AnnotationRecord generate_rc(const Corpus& corpus, const ProblemRecord& problem, Gateway& gateway,
                             const std::string& backend_id, const std::string& rc_template) {
    const BackendConfig& config = gateway.backend(backend_id);
    VariantInstance variant = compose_variant(problem, Setting::TextDominant);
    ModelRequest request;
    request.role = Role::rc_gen;
    request.prompt = render_template(rc_template, {{"question", variant.text}});
    if (config.supports_images) {
        request.image = corpus.resolve_image(variant.image).string();
    }
    ModelResponse response;
    try {
        response = gateway.invoke(backend_id, request);
    } catch (const Error& e) {
        throw BackendError("problem \"" + problem.id + "\": " + std::string(e.what()));
    }
    AnnotationRecord rec;
    rec.problem_id = problem.id;
    rec.setting = Setting::TextDominant;
    rec.kind = AnnotationKind::rc;
    rec.text = response.text;
    rec.generator_backend_id = backend_id;
    rec.final_answer = normalize_answer(response.text, hint_for(problem.gold));
    return rec;
}

AnnotationRecord filter_rc(const AnnotationRecord& rc, const ProblemRecord& problem, double tol) {
    if (rc.kind != AnnotationKind::rc) {
        throw DataError("cannot filter a non-rc annotation for \"" + rc.problem_id + "\"");
    }
    AnnotationRecord out = rc;
    out.valid = rc.final_answer.has_value() && match_answer(*rc.final_answer, problem.gold, tol);
    return out;
}

std::vector<std::pair<Setting, AnnotationRecord>> propagate_td_rc(const ProblemRecord& problem,
                                                                  const AnnotationRecord& td_rc) {
    if (!td_rc.valid.value_or(false)) {
        throw DataError("chain for \"" + problem.id + "\" is not valid; nothing to propagate");
    }
    std::vector<std::pair<Setting, AnnotationRecord>> out;
    for (Setting setting : all_settings()) {
        AnnotationRecord copy = td_rc;
        copy.setting = setting;
        out.emplace_back(setting, std::move(copy));
    }
    return out;
}

std::string to_string(FinetuneRole r) {
    switch (r) {
        case FinetuneRole::sx: return "sx";
        case FinetuneRole::rx: return "rx";
        case FinetuneRole::evaluator: return "evaluator";
        case FinetuneRole::sft_baseline: return "sft_baseline";
    }
    throw DataError("unknown finetune role enum value");
}

namespace {

nlohmann::json finetune_row(FinetuneRole role, const std::string& text, const std::string& image,
                            const std::string& target) {
    nlohmann::json input;
    input["text"] = text;
    if (!image.empty()) input["image"] = image;
    nlohmann::json row;
    row["role"] = to_string(role);
    row["input"] = input;
    row["target"] = target;
    return row;
}

std::string context_block(const std::string& sc_text) {
    return "Context:\n" + sc_text + "\n\n";
}

}  // namespace

void emit_finetune_dataset(const Corpus& corpus, const std::vector<std::string>& ids,
                           const ConstructionAnnotations& annotations, FinetuneRole role,
                           const ConstructionTemplates& templates,
                           const std::filesystem::path& out_path) {
    auto records = select_records(corpus, ids);
    std::vector<nlohmann::json> rows;
    std::vector<std::string> missing_sc;

    for (const ProblemRecord* problem : records) {
        for (Setting setting : all_settings()) {
            VariantInstance variant = compose_variant(*problem, setting);
            std::string image = variant.image;
            auto sc_it = annotations.enriched_sc.find({problem->id, setting});

            switch (role) {
                case FinetuneRole::sx: {
                    if (sc_it == annotations.enriched_sc.end()) continue;
                    std::string prompt =
                        render_template(templates.sx_infer, {{"question", variant.text}});
                    rows.push_back(finetune_row(role, prompt, image, sc_it->second.text));
                    break;
                }
                case FinetuneRole::rx: {
                    auto rc_it = annotations.valid_td_rc.find(problem->id);
                    if (rc_it == annotations.valid_td_rc.end()) continue;
                    if (sc_it == annotations.enriched_sc.end()) {
                        missing_sc.push_back(problem->id + "/" + to_string(setting));
                        continue;
                    }
                    std::string prompt = render_template(
                        templates.rx_infer, {{"context", context_block(sc_it->second.text)},
                                             {"question", variant.text}});
                    rows.push_back(finetune_row(role, prompt, image, rc_it->second.text));
                    break;
                }
                case FinetuneRole::evaluator: {
                    auto gate_it = annotations.gate_outcomes.find({problem->id, setting});
                    if (gate_it == annotations.gate_outcomes.end()) continue;
                    if (sc_it == annotations.enriched_sc.end()) continue;
                    std::string prompt = render_template(
                        templates.evaluator, {{"context", sc_it->second.text},
                                              {"question", variant.text}});
                    const PairedOutcome& outcome = gate_it->second;
                    bool adverse = outcome.without_sc_correct && !outcome.with_sc_correct;
                    rows.push_back(finetune_row(role, prompt, image, adverse ? "no" : "yes"));
                    break;
                }
                case FinetuneRole::sft_baseline: {
                    auto rc_it = annotations.valid_td_rc.find(problem->id);
                    if (rc_it == annotations.valid_td_rc.end()) continue;
                    std::string prompt =
                        render_template(templates.sft, {{"question", variant.text}});
                    rows.push_back(finetune_row(role, prompt, image, rc_it->second.text));
                    break;
                }
            }
        }
    }
    if (!missing_sc.empty()) {
        std::string joined;
        for (const auto& id : missing_sc) {
            if (!joined.empty()) joined += ", ";
            joined += id;
        }
        throw DataError("rx rows lack an interpretation for: " + joined);
    }
    write_jsonl(out_path, rows);
}

ConstructionResult run_construction(const Corpus& corpus, const std::vector<std::string>& ids,
                                    Gateway& gateway, const ConstructionConfig& config) {
    auto records = select_records(corpus, ids);
    ConstructionResult result;

    for (const ProblemRecord* problem : records) {
        for (Setting setting : all_settings()) {
            try {
                AnnotationRecord sc =
                    generate_sc(corpus, *problem, setting, gateway, config.sc_backend,
                                config.templates.sc_generate);
                AnnotationRecord enriched = enrich_sc(sc, *problem);
                result.annotations.enriched_sc[{problem->id, setting}] = std::move(enriched);
            } catch (const BackendError& e) {
                result.failure_log.push_back(e.what());
            }
        }
    }

    for (const ProblemRecord* problem : records) {
        try {
            AnnotationRecord rc = generate_rc(corpus, *problem, gateway, config.rc_backend,
                                              config.templates.rc_generate);
            AnnotationRecord filtered = filter_rc(rc, *problem, config.tol);
            ++result.rc_total;
            if (filtered.valid.value_or(false)) {
                ++result.rc_valid;
                result.annotations.valid_td_rc[problem->id] = std::move(filtered);
            }
        } catch (const BackendError& e) {
            result.failure_log.push_back(e.what());
        }
    }

    // Paired solver runs that label the gate corpus: the same variant asked
    // with and without the interpretation in context.
    for (const ProblemRecord* problem : records) {
        for (Setting setting : all_settings()) {
            auto sc_it = result.annotations.enriched_sc.find({problem->id, setting});
            if (sc_it == result.annotations.enriched_sc.end()) continue;
            VariantInstance variant = compose_variant(*problem, setting);
            std::string image = corpus.resolve_image(variant.image).string();

            ModelRequest with_sc;
            with_sc.role = Role::rx;
            with_sc.prompt = render_template(
                config.templates.rx_infer, {{"context", context_block(sc_it->second.text)},
                                            {"question", variant.text}});
            with_sc.image = image;

            ModelRequest without_sc;
            without_sc.role = Role::rx;
            without_sc.prompt = render_template(config.templates.rx_infer,
                                                {{"context", ""}, {"question", variant.text}});
            without_sc.image = image;

            try {
                ModelResponse with_response = gateway.invoke(config.rx_backend, with_sc);
                ModelResponse without_response = gateway.invoke(config.rx_backend, without_sc);
                PairedOutcome outcome;
                outcome.with_sc_correct =
                    match_raw_answer(with_response.text, problem->gold, config.tol);
                outcome.without_sc_correct =
                    match_raw_answer(without_response.text, problem->gold, config.tol);
                result.annotations.gate_outcomes[{problem->id, setting}] = outcome;
            } catch (const BackendError& e) {
                result.failure_log.push_back(e.what());
            }
        }
    }
    return result;
}

}  // namespace vinfer
