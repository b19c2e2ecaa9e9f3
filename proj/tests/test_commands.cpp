#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "vinfer/commands.hpp"
#include "vinfer/corpus.hpp"
#include "vinfer/common.hpp"
#include "vinfer/hashing.hpp"
#include "vinfer/jsonl.hpp"
#include "vinfer/report.hpp"

using namespace vinfer;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = fs::path(VINFER_FIXTURES_DIR);
const fs::path kTemplates = fs::path(VINFER_TEMPLATES_DIR);

fs::path temp_dir(const std::string& tag) {
    fs::path dir = fs::temp_directory_path() / ("vinfer_cmd_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

struct CoutCapture {
    std::stringstream stream;
    std::streambuf* old;
    CoutCapture() : old(std::cout.rdbuf(stream.rdbuf())) {}
    ~CoutCapture() { std::cout.rdbuf(old); }
    std::string text() const { return stream.str(); }
};

std::string mock_section(const std::string& role) {
    return "[backend." + role + "]\nkind = \"mock\"\nfixtures = \"" +
           (kFixtures / "mocks" / "pipeline.json").string() + "\"\n\n";
}

fs::path write_config(const fs::path& dir, const std::string& name, const std::string& mode,
                      bool gate, const fs::path& cache, bool with_demos = true,
                      const std::string& extra = "") {
    std::string text;
    text += "corpus = \"" + (kFixtures / "corpus" / "records.jsonl").string() + "\"\n";
    text += "templates = \"" + kTemplates.string() + "\"\n";
    if (with_demos) text += "demos = \"" + (kFixtures / "demos.jsonl").string() + "\"\n";
    if (!cache.empty()) text += "cache = \"" + cache.string() + "\"\n";
    text += "mode = \"" + mode + "\"\n";
    if (gate) text += "gate = true\n";
    text += "seed = 7\n";
    text += extra;
    text += "\n" + mock_section("rx");
    if (mode == "spatialmath") text += mock_section("sx") + mock_section("evaluator");
    fs::path path = dir / name;
    write_file_atomic(path, text);
    return path;
}

std::pair<long, long> cache_counts(const std::string& out) {
    size_t pos = out.find("cache: ");
    REQUIRE(pos != std::string::npos);
    long hits = -1;
    long misses = -1;
    std::sscanf(out.c_str() + pos, "cache: %ld hits, %ld misses", &hits, &misses);
    return {hits, misses};
}

std::string run_capturing(const RunArgs& args) {
    CoutCapture capture;
    cmd_run(args);
    return capture.text();
}

}  // namespace

TEST_CASE("split writes the file and reports the counts") {
    fs::path dir = temp_dir("split");
    SplitArgs args;
    args.corpus_root = kFixtures / "corpus" / "records.jsonl";
    args.ratio = 0.8;
    args.seed = 3;
    args.out_path = dir / "split.json";

    CoutCapture capture;
    cmd_split(args);
    CHECK(capture.text() ==
          "split: 8 train, 2 test -> " + args.out_path.string() + "\n");

    CorpusSplit split = load_split(args.out_path);
    CHECK(split.train_ids.size() == 8);
    CHECK(split.test_ids.size() == 2);
}

TEST_CASE("run executes the mock suite end to end") {
    fs::path store = temp_dir("run_store");
    RunArgs args;
    args.config_path = kFixtures / "run_mock.toml";
    args.out_dir = store;

    std::string out = run_capturing(args);
    CHECK(out.find("run complete: 50 results, 0 failures -> " + store.string()) !=
          std::string::npos);
    CHECK(out.find("cache: 0 hits, 0 misses") != std::string::npos);
    CHECK(!fs::exists(store / "failures.txt"));
    CHECK(!fs::exists(store / ".lock"));

    RunStore loaded = load_run_store(store);
    CHECK(loaded.mode == Mode::spatialmath);
    REQUIRE(loaded.results.size() == 50);
    long correct = std::count_if(loaded.results.begin(), loaded.results.end(),
                                 [](const RunResult& r) { return r.correct; });
    CHECK(correct == 35);
    CHECK(loaded.manifest.at("provenance").at("corpus_records") == 10);
    CHECK(loaded.manifest.at("provenance").at("seed") == 7);
}

TEST_CASE("gate flags conflict") {
    RunArgs args;
    args.config_path = kFixtures / "run_mock.toml";
    args.out_dir = temp_dir("gate_conflict");
    args.flag_gate = true;
    args.flag_no_gate = true;
    try {
        cmd_run(args);
        FAIL("expected a usage error");
    } catch (const UsageError& e) {
        CHECK(std::string(e.what()).find("--gate and --no-gate conflict") != std::string::npos);
    }
}

TEST_CASE("a held lock refuses a second writer") {
    fs::path store = temp_dir("locked");
    std::ofstream(store / ".lock") << "";
    RunArgs args;
    args.config_path = kFixtures / "run_mock.toml";
    args.out_dir = store;
    try {
        run_capturing(args);
        FAIL("expected a usage error");
    } catch (const UsageError& e) {
        CHECK(std::string(e.what()).find("is locked by another writer") != std::string::npos);
    }
    fs::remove(store / ".lock");
    run_capturing(args);
    CHECK(fs::exists(store / "results.jsonl"));
    CHECK(!fs::exists(store / ".lock"));
}

TEST_CASE("cached reruns replay the first run byte for byte") {
    fs::path work = temp_dir("cache_replay");
    fs::path config_a = write_config(work, "a.toml", "spatialmath", true, work / "cache1");
    fs::path config_b = write_config(work, "b.toml", "spatialmath", true, work / "cache2");

    RunArgs args;
    args.config_path = config_a;
    args.out_dir = work / "store_a";
    // p07 has no descriptive component, so its text_dominant and text_lite
    // variants coincide and three stage calls repeat within the cold run.
    auto [hits_a, misses_a] = cache_counts(run_capturing(args));
    CHECK(hits_a == 3);
    CHECK(misses_a == 147);

    args.config_path = config_b;
    args.out_dir = work / "store_b";
    run_capturing(args);
    CHECK(read_file(work / "store_a" / "results.jsonl") ==
          read_file(work / "store_b" / "results.jsonl"));
    CHECK(read_file(work / "store_a" / "manifest.json") ==
          read_file(work / "store_b" / "manifest.json"));

    args.config_path = config_a;
    args.out_dir = work / "store_c";
    auto [hits_c, misses_c] = cache_counts(run_capturing(args));
    CHECK(hits_c == hits_a + misses_a);
    CHECK(misses_c == 0);
    CHECK(read_file(work / "store_a" / "results.jsonl") ==
          read_file(work / "store_c" / "results.jsonl"));
}

TEST_CASE("icl without a demo bank is refused") {
    fs::path work = temp_dir("icl_nodemos");
    fs::path config = write_config(work, "icl.toml", "icl", false, "", false, "shots = 2\n");
    RunArgs args;
    args.config_path = config;
    args.out_dir = work / "store";
    try {
        cmd_run(args);
        FAIL("expected a usage error");
    } catch (const UsageError& e) {
        CHECK(std::string(e.what()).find("needs a demos file") != std::string::npos);
    }
}

TEST_CASE("build-dataset emits the dataset tree") {
    fs::path out = temp_dir("dataset");
    BuildDatasetArgs args;
    args.config_path = kFixtures / "construction_mock.toml";
    args.out_dir = out;

    CoutCapture capture;
    cmd_build_dataset(args);
    std::string text = capture.text();
    CHECK(text.find("rc kept 7 of 10") != std::string::npos);
    CHECK(text.find("dataset written to " + out.string()) != std::string::npos);

    nlohmann::json manifest = nlohmann::json::parse(read_file(out / "manifest.json"));
    CHECK(manifest.at("complete") == true);
    CHECK(manifest.at("retention").at("sc") == 50);
    CHECK(manifest.at("retention").at("rc_total") == 10);
    CHECK(manifest.at("retention").at("rc_valid") == 7);
    CHECK(manifest.at("retention").at("finetune_rows").at("sx") == 50);
    CHECK(manifest.at("retention").at("finetune_rows").at("rx") == 35);
    CHECK(manifest.at("retention").at("finetune_rows").at("evaluator") == 50);
    CHECK(manifest.at("retention").at("finetune_rows").at("sft_baseline") == 35);
    CHECK(manifest.at("templates_sha256").size() == 6);
    CHECK(manifest.at("failures").empty());

    CHECK(read_jsonl(out / "annotations_sc.jsonl").size() == 50);
    CHECK(read_jsonl(out / "annotations_rc.jsonl").size() == 7);
    auto paired = read_jsonl(out / "paired_outcomes.jsonl");
    REQUIRE(paired.size() == 50);
    CHECK(paired[0].contains("problem_id"));
    CHECK(paired[0].contains("setting"));
    CHECK(paired[0].contains("with_sc_correct"));
    CHECK(paired[0].contains("without_sc_correct"));
    CHECK(read_jsonl(out / "finetune_sx.jsonl").size() == 50);
    CHECK(read_jsonl(out / "finetune_rx.jsonl").size() == 35);
    CHECK(read_jsonl(out / "finetune_evaluator.jsonl").size() == 50);
    CHECK(read_jsonl(out / "finetune_sft_baseline.jsonl").size() == 35);
}

TEST_CASE("build-dataset without a corpus is refused") {
    fs::path work = temp_dir("dataset_nocorpus");
    std::string section = "kind = \"mock\"\nfixtures = \"" +
                          (kFixtures / "mocks" / "construction.json").string() + "\"\n\n";
    std::string text = "templates = \"" + kTemplates.string() + "\"\n\n";
    text += "[backend.sc_gen]\n" + section;
    text += "[backend.rc_gen]\n" + section;
    text += "[backend.rx]\n" + section;
    write_file_atomic(work / "bare.toml", text);

    BuildDatasetArgs args;
    args.config_path = work / "bare.toml";
    args.out_dir = work / "out";
    try {
        cmd_build_dataset(args);
        FAIL("expected a usage error");
    } catch (const UsageError& e) {
        CHECK(std::string(e.what()).find("no corpus given") != std::string::npos);
    }
}

TEST_CASE("report composes stores and lexical scores") {
    fs::path work = temp_dir("report");
    fs::path config_zs = write_config(work, "zs.toml", "zero_shot", false, "");

    RunArgs run_args;
    run_args.config_path = config_zs;
    run_args.out_dir = work / "store_zs";
    run_capturing(run_args);

    run_args.config_path = kFixtures / "run_mock.toml";
    run_args.out_dir = work / "store_sm";
    run_capturing(run_args);

    ScoreScArgs score_args;
    score_args.candidates_path = kFixtures / "score" / "candidates.jsonl";
    score_args.references_path = kFixtures / "score" / "references.jsonl";
    score_args.out_path = work / "lexical.csv";
    {
        CoutCapture capture;
        cmd_score_sc(score_args);
    }

    ReportArgs report_args;
    report_args.store_dirs = {work / "store_zs", work / "store_sm"};
    report_args.out_dir = work / "report";
    report_args.lexical_csv = work / "lexical.csv";
    CoutCapture capture;
    cmd_report(report_args);
    CHECK(capture.text() == "report written to " + (work / "report").string() + "\n");

    CHECK(read_file(work / "report" / "accuracy.csv") ==
          "run,text_dominant,text_lite,vision_intensive,vision_dominant,vision_only,all\n"
          "zero_shot,30.0,30.0,30.0,30.0,30.0,30.0\n"
          "spatialmath,70.0,70.0,70.0,70.0,70.0,70.0\n");
    CHECK(read_file(work / "report" / "flips.csv") ==
          "run,improvements,degradations,ratio\n"
          "spatialmath,25,5,5.00\n");
    CHECK(read_file(work / "report" / "significance.csv") ==
          "pairing,baseline,u,p,method\n"
          "best_overall,zero_shot,25.0,0.00396825,exact\n"
          "best_per_setting,composite,25.0,0.00396825,exact\n");
    std::string md = read_file(work / "report" / "report.md");
    CHECK(md.find("## Lexical scores (x100)") != std::string::npos);
    nlohmann::json plot = nlohmann::json::parse(read_file(work / "report" / "plot_data.json"));
    CHECK(plot.at("points").size() == 2);
}

TEST_CASE("score-sc writes the CSV and the mean row") {
    fs::path work = temp_dir("score");
    ScoreScArgs args;
    args.candidates_path = kFixtures / "score" / "candidates.jsonl";
    args.references_path = kFixtures / "score" / "references.jsonl";
    args.out_path = work / "scores.csv";

    CoutCapture capture;
    cmd_score_sc(args);
    std::string out = capture.text();
    CHECK(out.find("scored 10 pairs -> " + args.out_path.string()) != std::string::npos);
    CHECK(out.find("mean: bleu4 ") != std::string::npos);

    LexicalTable table = parse_lexical_csv(args.out_path);
    REQUIRE(table.rows.size() == 10);
    CHECK(table.rows[0].id == "p01");
    for (const ScoredPair& row : table.rows) {
        CHECK(row.scores.bleu4 >= 0.0);
        CHECK(row.scores.bleu4 <= 100.0);
        CHECK(row.scores.meteor >= 0.0);
        CHECK(row.scores.meteor <= 100.0);
    }
}

TEST_CASE("score-sc refuses misaligned id sets") {
    fs::path work = temp_dir("score_mismatch");
    write_file_atomic(work / "cand.jsonl", "{\"id\": \"a\", \"text\": \"one two\"}\n");
    write_file_atomic(work / "ref.jsonl", "{\"id\": \"b\", \"text\": \"one two\"}\n");
    ScoreScArgs args;
    args.candidates_path = work / "cand.jsonl";
    args.references_path = work / "ref.jsonl";
    args.out_path = work / "scores.csv";
    try {
        cmd_score_sc(args);
        FAIL("expected a data error");
    } catch (const DataError& e) {
        std::string what = e.what();
        CHECK(what.find("only in candidates: a") != std::string::npos);
        CHECK(what.find("only in references: b") != std::string::npos);
    }
}

TEST_CASE("stats prints the exact summary line") {
    StatsArgs args;
    args.x_csv = "53,48,45,41,31";
    args.y_csv = "38,35,33,30,31";
    CoutCapture capture;
    cmd_stats(args);
    CHECK(capture.text() == "U=21.5 p=0.031746 method=exact n=5 m=5\n");
}

TEST_CASE("stats rejects malformed vectors") {
    StatsArgs args;
    args.x_csv = "1,zap";
    args.y_csv = "1,2";
    try {
        cmd_stats(args);
        FAIL("expected a usage error");
    } catch (const UsageError& e) {
        CHECK(std::string(e.what()).find("not a number") != std::string::npos);
    }
    args.x_csv = "";
    try {
        cmd_stats(args);
        FAIL("expected a usage error");
    } catch (const UsageError& e) {
        CHECK(std::string(e.what()).find("empty vector") != std::string::npos);
    }
}
