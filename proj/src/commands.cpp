#include "vinfer/commands.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <iostream>
#include <set>
#include <sstream>

#include "vinfer/common.hpp"
#include "vinfer/construction.hpp"
#include "vinfer/hashing.hpp"
#include "vinfer/jsonl.hpp"
#include "vinfer/report.hpp"
#include "vinfer/textutil.hpp"

namespace vinfer {

namespace {

// One writer per store directory; the lock file survives a crash and must
// then be removed by hand, which beats silently interleaving two runs.
class StoreLock {
  public:
    explicit StoreLock(const std::filesystem::path& dir) : path_(dir / ".lock") {
        std::filesystem::create_directories(dir);
        fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd_ < 0) {
            throw UsageError("store " + dir.string() +
                             " is locked by another writer (remove " + path_.string() +
                             " if that run is dead)");
        }
    }

    ~StoreLock() {
        if (fd_ >= 0) {
            ::close(fd_);
            std::error_code ec;
            std::filesystem::remove(path_, ec);
        }
    }

    StoreLock(const StoreLock&) = delete;
    StoreLock& operator=(const StoreLock&) = delete;

  private:
    std::filesystem::path path_;
    int fd_ = -1;
};

std::vector<std::string> ids_for(const Corpus& corpus, const std::filesystem::path& split_path,
                                 const std::string& side) {
    std::vector<std::string> ids;
    if (split_path.empty()) {
        for (const ProblemRecord& rec : corpus.records) ids.push_back(rec.id);
    } else {
        CorpusSplit split = load_split(split_path);
        if (side == "train") {
            ids = split.train_ids;
        } else if (side == "test") {
            ids = split.test_ids;
        } else if (side == "all") {
            ids = split.train_ids;
            ids.insert(ids.end(), split.test_ids.begin(), split.test_ids.end());
        } else {
            throw UsageError("side must be train, test, or all; got \"" + side + "\"");
        }
    }
    std::sort(ids.begin(), ids.end());
    select_records(corpus, ids);  // fail early when the split names unknown ids
    return ids;
}

nlohmann::json provenance_for(const std::filesystem::path& corpus_path, const Corpus& corpus,
                              const std::vector<std::string>& ids, std::uint64_t seed) {
    nlohmann::json ids_json = nlohmann::json::array();
    for (const std::string& id : ids) ids_json.push_back(id);
    nlohmann::json j;
    j["corpus_sha256"] = sha256_hex(read_file(corpus_path));
    j["corpus_records"] = corpus.records.size();
    j["ids_sha256"] = sha256_hex(canonical_json(ids_json));
    j["seed"] = seed;
    return j;
}

std::vector<std::string> required_templates(Mode mode, bool gate) {
    switch (mode) {
        case Mode::zero_shot: return {"zero_shot"};
        case Mode::icl: return {"icl"};
        case Mode::cot: return {"cot"};
        case Mode::sft: return {"sft"};
        case Mode::sft_aug: return {"sft_aug"};
        case Mode::sx_plus_default: return {"sx_infer", "sx_plus_default"};
        case Mode::spatialmath: {
            std::vector<std::string> names = {"sx_infer", "rx_infer"};
            if (gate) names.push_back("evaluator");
            return names;
        }
    }
    throw DataError("unknown mode enum value");
}

void require_templates(const TemplateSet& templates, const std::vector<std::string>& names) {
    std::string missing;
    for (const std::string& name : names) {
        if (!templates.has(name)) {
            if (!missing.empty()) missing += ", ";
            missing += name;
        }
    }
    if (!missing.empty()) throw DataError("missing prompt templates: " + missing);
}

void require_roles(const RunSpec& spec, const std::vector<Role>& roles) {
    for (Role role : roles) {
        if (!spec.run.backend_ids.count(role)) {
            throw UsageError("backends config missing a [backend." + to_string(role) +
                             "] section");
        }
    }
}

void register_backends(Gateway& gateway, const RunSpec& spec) {
    for (const BackendConfig& backend : spec.backends) gateway.register_backend(backend);
}

std::vector<double> parse_double_csv(const std::string& text, const std::string& what) {
    std::vector<double> out;
    std::stringstream stream(text);
    std::string item;
    while (std::getline(stream, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        size_t used = 0;
        try {
            out.push_back(std::stod(item, &used));
        } catch (const std::exception&) {
            used = std::string::npos;
        }
        if (used != item.size()) {
            throw UsageError(what + ": not a number: \"" + item + "\"");
        }
    }
    if (out.empty()) throw UsageError(what + ": empty vector");
    return out;
}

std::map<std::string, std::string> read_id_text_file(const std::filesystem::path& path,
                                                     std::vector<std::string>* order) {
    std::map<std::string, std::string> by_id;
    size_t line_no = 0;
    for (const nlohmann::json& row : read_jsonl(path)) {
        ++line_no;
        std::string where = path.string() + " line " + std::to_string(line_no);
        if (!row.is_object() || !row.contains("id") || !row.contains("text")) {
            throw DataError(where + ": expected {\"id\", \"text\"}");
        }
        std::string id = row.at("id").get<std::string>();
        if (!by_id.emplace(id, row.at("text").get<std::string>()).second) {
            throw DataError(where + ": duplicate id \"" + id + "\"");
        }
        if (order) order->push_back(id);
    }
    return by_id;
}

std::string join_ids(const std::vector<std::string>& ids) {
    std::string out;
    for (const std::string& id : ids) {
        if (!out.empty()) out += ", ";
        out += id;
    }
    return out;
}

}  // namespace

void cmd_split(const SplitArgs& args) {
    Corpus corpus = load_corpus(args.corpus_root);
    CorpusSplit split = split_corpus(corpus, args.ratio, args.seed);
    save_split(args.out_path, split);
    std::cout << "split: " << split.train_ids.size() << " train, " << split.test_ids.size()
              << " test -> " << args.out_path.string() << "\n";
}

void cmd_build_dataset(const BuildDatasetArgs& args) {
    RunSpec spec = run_spec_from_file(args.config_path);
    if (!args.corpus_root.empty()) spec.corpus_root = args.corpus_root;
    if (spec.corpus_root.empty()) throw UsageError("no corpus given (flag or config)");
    if (spec.templates_dir.empty()) throw UsageError("config missing templates directory");
    require_roles(spec, {Role::sc_gen, Role::rc_gen, Role::rx});

    TemplateSet templates = TemplateSet::load_dir(spec.templates_dir);
    require_templates(templates,
                      {"sc_generate", "rc_generate", "sx_infer", "rx_infer", "evaluator", "sft"});

    Corpus corpus = load_corpus(spec.corpus_root);
    std::vector<std::string> ids = ids_for(corpus, args.split_path, args.side);

    StoreLock lock(args.out_dir);
    nlohmann::json manifest;
    manifest["complete"] = false;
    write_file_atomic(args.out_dir / "manifest.json", manifest.dump(2) + "\n");

    Gateway gateway({spec.cache_dir});
    register_backends(gateway, spec);

    ConstructionConfig config;
    config.sc_backend = spec.run.backend_ids.at(Role::sc_gen);
    config.rc_backend = spec.run.backend_ids.at(Role::rc_gen);
    config.rx_backend = spec.run.backend_ids.at(Role::rx);
    config.tol = spec.run.tol;
    config.templates.sc_generate = templates.get("sc_generate");
    config.templates.rc_generate = templates.get("rc_generate");
    config.templates.sx_infer = templates.get("sx_infer");
    config.templates.rx_infer = templates.get("rx_infer");
    config.templates.evaluator = templates.get("evaluator");
    config.templates.sft = templates.get("sft");

    ConstructionResult result = run_construction(corpus, ids, gateway, config);

    std::vector<nlohmann::json> sc_rows;
    for (const auto& [key, record] : result.annotations.enriched_sc) {
        sc_rows.push_back(record.to_json());
    }
    write_jsonl(args.out_dir / "annotations_sc.jsonl", sc_rows);

    std::vector<nlohmann::json> rc_rows;
    for (const auto& [id, record] : result.annotations.valid_td_rc) {
        rc_rows.push_back(record.to_json());
    }
    write_jsonl(args.out_dir / "annotations_rc.jsonl", rc_rows);

    std::vector<nlohmann::json> paired_rows;
    for (const auto& [key, outcome] : result.annotations.gate_outcomes) {
        paired_rows.push_back({{"problem_id", key.first},
                               {"setting", to_string(key.second)},
                               {"with_sc_correct", outcome.with_sc_correct},
                               {"without_sc_correct", outcome.without_sc_correct}});
    }
    write_jsonl(args.out_dir / "paired_outcomes.jsonl", paired_rows);

    nlohmann::json row_counts;
    for (FinetuneRole role : {FinetuneRole::sx, FinetuneRole::rx, FinetuneRole::evaluator,
                              FinetuneRole::sft_baseline}) {
        std::filesystem::path out = args.out_dir / ("finetune_" + to_string(role) + ".jsonl");
        emit_finetune_dataset(corpus, ids, result.annotations, role, config.templates, out);
        row_counts[to_string(role)] = read_jsonl(out).size();
    }

    nlohmann::json templates_sha;
    for (const char* name :
         {"sc_generate", "rc_generate", "sx_infer", "rx_infer", "evaluator", "sft"}) {
        templates_sha[name] = sha256_hex(templates.get(name));
    }

    manifest["complete"] = true;
    manifest["backends"] = {{"sc_gen", config.sc_backend},
                            {"rc_gen", config.rc_backend},
                            {"rx", config.rx_backend}};
    manifest["templates_sha256"] = templates_sha;
    manifest["provenance"] = provenance_for(spec.corpus_root, corpus, ids, spec.seed);
    manifest["retention"] = {{"sc", sc_rows.size()},
                             {"rc_total", result.rc_total},
                             {"rc_valid", result.rc_valid},
                             {"finetune_rows", row_counts}};
    manifest["failures"] = result.failure_log;
    write_file_atomic(args.out_dir / "manifest.json", manifest.dump(2) + "\n");

    std::cout << "rc kept " << result.rc_valid << " of " << result.rc_total << "\n";
    std::cout << "dataset written to " << args.out_dir.string() << "\n";
    for (const std::string& failure : result.failure_log) {
        std::cerr << "failure: " << failure << "\n";
    }
}

void cmd_run(const RunArgs& args) {
    RunSpec spec = run_spec_from_file(args.config_path);
    if (args.mode.has_value()) spec.run.mode = mode_from_string(*args.mode);
    if (args.shots.has_value()) spec.run.shots = *args.shots;
    if (args.flag_gate && args.flag_no_gate) {
        throw UsageError("--gate and --no-gate conflict");
    }
    if (args.flag_gate) spec.run.gate_enabled = true;
    if (args.flag_no_gate) spec.run.gate_enabled = false;
    if (args.repetitions.has_value()) spec.run.repetitions = *args.repetitions;
    if (args.settings_csv.has_value()) {
        spec.run.settings.clear();
        if (*args.settings_csv != "all") {
            std::stringstream stream(*args.settings_csv);
            std::string item;
            while (std::getline(stream, item, ',')) {
                item = trim(item);
                if (!item.empty()) spec.run.settings.push_back(setting_from_string(item));
            }
        }
    }
    if (args.no_cache) spec.cache_dir.clear();

    if (spec.corpus_root.empty()) throw UsageError("config missing corpus");
    if (spec.templates_dir.empty()) throw UsageError("config missing templates directory");
    spec.run.validate();

    bool needs_demos = spec.run.mode == Mode::icl || spec.run.mode == Mode::cot;
    if (needs_demos && spec.demos_path.empty()) {
        throw UsageError("mode " + to_string(spec.run.mode) + " needs a demos file in the config");
    }

    TemplateSet templates = TemplateSet::load_dir(spec.templates_dir);
    require_templates(templates, required_templates(spec.run.mode, spec.run.gate_enabled));

    Corpus corpus = load_corpus(spec.corpus_root);
    std::vector<std::string> ids = ids_for(corpus, args.split_path, args.side);

    std::optional<DemoBank> demos;
    if (!spec.demos_path.empty()) demos = DemoBank::load(spec.demos_path);

    StoreLock lock(args.out_dir);
    nlohmann::json initial;
    initial["complete"] = false;
    initial["config"] = spec.run.to_json();
    write_file_atomic(args.out_dir / "manifest.json", initial.dump(2) + "\n");

    Gateway gateway({spec.cache_dir});
    register_backends(gateway, spec);
    Pipeline pipeline(corpus, gateway, templates, demos);
    SuiteResult suite =
        pipeline.run_suite(ids, spec.run, provenance_for(spec.corpus_root, corpus, ids, spec.seed));

    std::vector<nlohmann::json> rows;
    rows.reserve(suite.results.size());
    for (const RunResult& result : suite.results) rows.push_back(result.to_json());
    write_jsonl(args.out_dir / "results.jsonl", rows);

    if (!suite.failures.empty()) {
        std::string failure_text;
        for (const std::string& failure : suite.failures) failure_text += failure + "\n";
        write_file_atomic(args.out_dir / "failures.txt", failure_text);
        for (const std::string& failure : suite.failures) {
            std::cerr << "failure: " << failure << "\n";
        }
    }

    nlohmann::json manifest = suite.manifest;
    manifest["complete"] = true;
    write_file_atomic(args.out_dir / "manifest.json", manifest.dump(2) + "\n");

    CacheStats stats = gateway.cache_stats();
    std::cout << "run complete: " << suite.results.size() << " results, "
              << suite.failures.size() << " failures -> " << args.out_dir.string() << "\n";
    std::cout << "cache: " << stats.hits << " hits, " << stats.misses << " misses\n";
}

void cmd_report(const ReportArgs& args) {
    if (args.store_dirs.empty()) throw UsageError("report needs at least one run store");
    std::vector<RunStore> stores;
    for (const std::filesystem::path& dir : args.store_dirs) {
        stores.push_back(load_run_store(dir));
    }
    std::optional<LexicalTable> lexical;
    if (!args.lexical_csv.empty()) lexical = parse_lexical_csv(args.lexical_csv);
    ReportBundle bundle = build_report(stores, lexical);
    write_report(bundle, args.out_dir);
    std::cout << "report written to " << args.out_dir.string() << "\n";
}

void cmd_score_sc(const ScoreScArgs& args) {
    std::vector<std::string> order;
    auto candidates = read_id_text_file(args.candidates_path, &order);
    auto references = read_id_text_file(args.references_path, nullptr);

    std::vector<std::string> only_candidates, only_references;
    for (const auto& [id, text] : candidates) {
        (void)text;
        if (!references.count(id)) only_candidates.push_back(id);
    }
    for (const auto& [id, text] : references) {
        (void)text;
        if (!candidates.count(id)) only_references.push_back(id);
    }
    if (!only_candidates.empty() || !only_references.empty()) {
        std::string msg = "candidate and reference ids do not align";
        if (!only_candidates.empty()) {
            msg += "; only in candidates: " + join_ids(only_candidates);
        }
        if (!only_references.empty()) {
            msg += "; only in references: " + join_ids(only_references);
        }
        throw DataError(msg);
    }

    std::vector<CandidateRef> pairs;
    for (const std::string& id : order) {
        pairs.push_back({id, candidates.at(id), references.at(id)});
    }
    BatchScores scores = score_batch(pairs);

    std::string csv = "id,bleu4,rouge1,rouge_lsum,meteor\n";
    auto row = [&csv](const std::string& id, const LexicalScores& s) {
        csv += id + "," + format_fixed(s.bleu4 * 100.0, 1) + "," +
               format_fixed(s.rouge1 * 100.0, 1) + "," + format_fixed(s.rouge_lsum * 100.0, 1) +
               "," + format_fixed(s.meteor * 100.0, 1) + "\n";
    };
    for (const ScoredPair& pair : scores.rows) row(pair.id, pair.scores);
    row("mean", scores.mean);
    write_file_atomic(args.out_path, csv);

    std::cout << "scored " << scores.rows.size() << " pairs -> " << args.out_path.string()
              << "\n";
    std::cout << "mean: bleu4 " << format_fixed(scores.mean.bleu4 * 100.0, 1) << ", rouge1 "
              << format_fixed(scores.mean.rouge1 * 100.0, 1) << ", rouge_lsum "
              << format_fixed(scores.mean.rouge_lsum * 100.0, 1) << ", meteor "
              << format_fixed(scores.mean.meteor * 100.0, 1) << "\n";
}

void cmd_stats(const StatsArgs& args) {
    std::vector<double> x = parse_double_csv(args.x_csv, "--x");
    std::vector<double> y = parse_double_csv(args.y_csv, "--y");
    MWUResult result = mann_whitney_one_tailed(x, y);
    char p_buf[32];
    std::snprintf(p_buf, sizeof(p_buf), "%.6g", result.p_one_tailed);
    std::cout << "U=" << format_fixed(result.u_statistic, 1) << " p=" << p_buf
              << " method=" << to_string(result.method) << " n=" << x.size() << " m=" << y.size()
              << "\n";
}

}  // namespace vinfer
