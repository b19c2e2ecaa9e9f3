#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "vinfer/common.hpp"
#include "vinfer/construction.hpp"
#include "vinfer/hashing.hpp"
#include "vinfer/jsonl.hpp"
#include "vinfer/pipeline.hpp"
#include "vinfer/variants.hpp"

using namespace vinfer;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = fs::path(VINFER_FIXTURES_DIR);
const fs::path kTemplates = fs::path(VINFER_TEMPLATES_DIR);

const std::set<std::string> kInvalidRc = {"p02", "p05", "p09"};
const std::set<std::string> kRightWithoutSc = {"p04", "p06", "p08"};

ConstructionTemplates load_templates() {
    TemplateSet set = TemplateSet::load_dir(kTemplates);
    ConstructionTemplates templates;
    templates.sc_generate = set.get("sc_generate");
    templates.rc_generate = set.get("rc_generate");
    templates.sx_infer = set.get("sx_infer");
    templates.rx_infer = set.get("rx_infer");
    templates.evaluator = set.get("evaluator");
    templates.sft = set.get("sft");
    return templates;
}

void register_construction_backend(Gateway& gateway, const std::string& id,
                                   bool supports_images = true) {
    BackendConfig config;
    config.backend_id = id;
    config.kind = BackendKind::mock;
    config.supports_images = supports_images;
    config.fixtures_path = (kFixtures / "mocks" / "construction.json").string();
    gateway.register_backend(config);
}

ConstructionResult run_fixture_construction(const Corpus& corpus, Gateway& gateway) {
    register_construction_backend(gateway, "gen");
    ConstructionConfig config;
    config.sc_backend = "gen";
    config.rc_backend = "gen";
    config.rx_backend = "gen";
    config.templates = load_templates();
    std::vector<std::string> ids;
    for (const auto& rec : corpus.records) ids.push_back(rec.id);
    return run_construction(corpus, ids, gateway, config);
}

std::vector<std::string> all_ids(const Corpus& corpus) {
    std::vector<std::string> ids;
    for (const auto& rec : corpus.records) ids.push_back(rec.id);
    return ids;
}

// The problem a finetune row belongs to, recovered from its image path.
std::string problem_of_row(const nlohmann::json& row) {
    std::string image = row["input"].value("image", "");
    auto pos = image.find("/p");
    REQUIRE(pos != std::string::npos);
    return image.substr(pos + 1, 3);
}

}  // namespace

TEST_CASE("construction over the fixture corpus") {
    Corpus corpus = load_corpus(kFixtures / "corpus" / "records.jsonl");
    Gateway gateway;
    ConstructionResult built = run_fixture_construction(corpus, gateway);
    CHECK(built.failure_log.empty());

    SUBCASE("interpretations exist for every problem and setting, enriched verbatim") {
        CHECK(built.annotations.enriched_sc.size() == 50);
        for (const auto& rec : corpus.records) {
            for (Setting setting : all_settings()) {
                auto it = built.annotations.enriched_sc.find({rec.id, setting});
                REQUIRE(it != built.annotations.enriched_sc.end());
                const AnnotationRecord& sc = it->second;
                CHECK(sc.enriched);
                CHECK(sc.kind == AnnotationKind::sc);
                std::string text_only = compose_text_only(rec);
                CHECK(sc.text.find(text_only) != std::string::npos);
                CHECK(sc.text.find("perceive-" + rec.id) != std::string::npos);
            }
        }
    }

    SUBCASE("chains are kept exactly when their final answer matches gold") {
        CHECK(built.rc_total == 10);
        CHECK(built.rc_valid == 7);
        CHECK(built.annotations.valid_td_rc.size() == 7);
        for (const auto& rec : corpus.records) {
            auto it = built.annotations.valid_td_rc.find(rec.id);
            if (kInvalidRc.count(rec.id)) {
                CHECK(it == built.annotations.valid_td_rc.end());
            } else {
                REQUIRE(it != built.annotations.valid_td_rc.end());
                REQUIRE(it->second.final_answer.has_value());
                CHECK(match_answer(*it->second.final_answer, rec.gold));
                CHECK(it->second.valid == true);
            }
        }
    }

    SUBCASE("paired outcomes reflect the scripted solver behavior") {
        CHECK(built.annotations.gate_outcomes.size() == 50);
        for (const auto& [key, outcome] : built.annotations.gate_outcomes) {
            const auto& [id, setting] = key;
            CHECK(outcome.with_sc_correct == (id != "p04"));
            CHECK(outcome.without_sc_correct == (kRightWithoutSc.count(id) > 0));
        }
    }
}

TEST_CASE("finetune datasets: row counts, filters, and gate labels") {
    Corpus corpus = load_corpus(kFixtures / "corpus" / "records.jsonl");
    Gateway gateway;
    ConstructionResult built = run_fixture_construction(corpus, gateway);
    ConstructionTemplates templates = load_templates();
    fs::path dir = fs::temp_directory_path() / "vinfer_finetune";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::vector<std::string> ids = all_ids(corpus);

    emit_finetune_dataset(corpus, ids, built.annotations, FinetuneRole::sx, templates,
                          dir / "sx.jsonl");
    emit_finetune_dataset(corpus, ids, built.annotations, FinetuneRole::rx, templates,
                          dir / "rx.jsonl");
    emit_finetune_dataset(corpus, ids, built.annotations, FinetuneRole::evaluator, templates,
                          dir / "evaluator.jsonl");
    emit_finetune_dataset(corpus, ids, built.annotations, FinetuneRole::sft_baseline, templates,
                          dir / "sft.jsonl");

    auto sx_rows = read_jsonl(dir / "sx.jsonl");
    auto rx_rows = read_jsonl(dir / "rx.jsonl");
    auto evaluator_rows = read_jsonl(dir / "evaluator.jsonl");
    auto sft_rows = read_jsonl(dir / "sft.jsonl");

    CHECK(sx_rows.size() == 50);
    CHECK(rx_rows.size() == 5 * built.annotations.valid_td_rc.size());
    CHECK(evaluator_rows.size() == 50);
    CHECK(sft_rows.size() == 35);

    SUBCASE("every rx target is a chain whose answer matches that problem's gold") {
        for (const auto& row : rx_rows) {
            CHECK(row["role"] == "rx");
            std::string id = problem_of_row(row);
            const ProblemRecord* problem = corpus.find(id);
            REQUIRE(problem != nullptr);
            CHECK_FALSE(kInvalidRc.count(id));
            std::string target = row["target"].get<std::string>();
            CHECK(match_raw_answer(target, problem->gold));
            CHECK(row["input"]["text"].get<std::string>().find("Context:") !=
                  std::string::npos);
        }
    }

    SUBCASE("evaluator labels are no exactly on correct-to-incorrect flips") {
        int no_count = 0;
        for (const auto& row : evaluator_rows) {
            std::string id = problem_of_row(row);
            auto target = row["target"].get<std::string>();
            bool adverse = id == "p04";
            CHECK(target == (adverse ? "no" : "yes"));
            if (target == "no") ++no_count;
        }
        CHECK(no_count == 5);
    }

    SUBCASE("sx targets are the enriched interpretations") {
        for (const auto& row : sx_rows) {
            std::string target = row["target"].get<std::string>();
            CHECK(target.find("Problem statement:") == 0);
            CHECK(target.find("Visual interpretation:") != std::string::npos);
        }
    }

    SUBCASE("rows carry the variant image and parseable input") {
        for (const auto& row : sft_rows) {
            CHECK(row["input"].contains("image"));
            CHECK_FALSE(row["input"]["text"].get<std::string>().empty());
        }
    }
    fs::remove_all(dir);
}

TEST_CASE("rx emission demands an interpretation for every valid chain") {
    Corpus corpus = load_corpus(kFixtures / "corpus" / "records.jsonl");
    Gateway gateway;
    ConstructionResult built = run_fixture_construction(corpus, gateway);
    ConstructionTemplates templates = load_templates();

    ConstructionAnnotations pruned = built.annotations;
    pruned.enriched_sc.erase({"p01", Setting::TextLite});
    fs::path out = fs::temp_directory_path() / "vinfer_rx_missing.jsonl";
    CHECK_THROWS_WITH_AS(
        emit_finetune_dataset(corpus, all_ids(corpus), pruned, FinetuneRole::rx, templates, out),
        doctest::Contains("p01/text_lite"), DataError);
    fs::remove(out);
}

TEST_CASE("interpretation generation needs image support beyond text-dominant") {
    Corpus corpus = load_corpus(kFixtures / "corpus" / "records.jsonl");
    Gateway gateway;
    register_construction_backend(gateway, "blind", false);
    ConstructionTemplates templates = load_templates();

    const ProblemRecord& rec = corpus.records[0];
    AnnotationRecord sc = generate_sc(corpus, rec, Setting::TextDominant, gateway, "blind",
                                      templates.sc_generate);
    CHECK(sc.text.find("perceive-p01") != std::string::npos);
    CHECK_THROWS_AS(generate_sc(corpus, rec, Setting::VisionOnly, gateway, "blind",
                                templates.sc_generate),
                    UsageError);
    CHECK_THROWS_AS(generate_sc(corpus, rec, Setting::TextLite, gateway, "blind",
                                templates.sc_generate),
                    UsageError);
}

TEST_CASE("filter and propagation unit behavior") {
    Corpus corpus = load_corpus(kFixtures / "corpus" / "records.jsonl");
    const ProblemRecord& rec = *corpus.find("p01");

    AnnotationRecord rc;
    rc.problem_id = rec.id;
    rc.kind = AnnotationKind::rc;
    rc.text = "Step 1: reason.\nAnswer: B";
    rc.final_answer = normalize_answer(rc.text, hint_for(rec.gold));
    AnnotationRecord kept = filter_rc(rc, rec);
    CHECK(kept.valid == true);

    rc.text = "Step 1: reason.\nAnswer: C";
    rc.final_answer = normalize_answer(rc.text, hint_for(rec.gold));
    CHECK(filter_rc(rc, rec).valid == false);

    rc.kind = AnnotationKind::sc;
    CHECK_THROWS_AS(filter_rc(rc, rec), DataError);

    rc.kind = AnnotationKind::rc;
    rc.text = "Step 1: reason.\nAnswer: B";
    rc.final_answer = normalize_answer(rc.text, hint_for(rec.gold));
    auto propagated = propagate_td_rc(rec, filter_rc(rc, rec));
    REQUIRE(propagated.size() == 5);
    for (size_t i = 0; i < propagated.size(); ++i) {
        CHECK(propagated[i].first == all_settings()[i]);
        CHECK(propagated[i].second.text == rc.text);
    }
}

TEST_CASE("annotation records round-trip through json") {
    AnnotationRecord rec;
    rec.problem_id = "p03";
    rec.setting = Setting::VisionDominant;
    rec.kind = AnnotationKind::rc;
    rec.text = "Step 1\nAnswer: isosceles";
    rec.generator_backend_id = "gen";
    rec.final_answer = NormalizedAnswer{NormalizedKind::text, "isosceles", std::nullopt};
    rec.valid = true;
    AnnotationRecord back = AnnotationRecord::from_json(rec.to_json(), "roundtrip");
    CHECK(back.to_json() == rec.to_json());

    AnnotationRecord sc;
    sc.problem_id = "p01";
    sc.kind = AnnotationKind::sc;
    sc.text = "the figure";
    sc.enriched = true;
    CHECK(AnnotationRecord::from_json(sc.to_json(), "rt").to_json() == sc.to_json());
}
