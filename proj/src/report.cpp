#include "vinfer/report.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include "vinfer/common.hpp"
#include "vinfer/hashing.hpp"
#include "vinfer/jsonl.hpp"
#include "vinfer/textutil.hpp"

namespace vinfer {

namespace {

std::string fmt_p(double p) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", p);
    return buf;
}

std::string setting_header() {
    std::string out;
    for (Setting s : all_settings()) {
        out += to_string(s);
        out += ',';
    }
    return out;  // trailing comma left for the caller to follow with "all"
}

std::vector<double> setting_vector(const AccuracyTable& table) {
    std::vector<double> out;
    for (Setting s : all_settings()) out.push_back(table.per_setting.at(s));
    return out;
}

const RunStore& best_overall_baseline(const std::vector<RunStore>& stores,
                                      const std::vector<AccuracyTable>& tables) {
    size_t best = 0;
    for (size_t i = 1; i + 1 < stores.size(); ++i) {
        if (tables[i].all_mean > tables[best].all_mean) best = i;
    }
    return stores[best];
}

}  // namespace

std::vector<OutcomeRow> outcome_rows(const std::vector<RunResult>& results, int repetition) {
    std::vector<OutcomeRow> rows;
    for (const RunResult& r : results) {
        if (repetition >= 0 && r.repetition != repetition) continue;
        rows.push_back({r.problem_id, r.setting, r.correct});
    }
    return rows;
}

std::vector<CostRow> cost_rows(const std::vector<RunResult>& results) {
    std::vector<CostRow> rows;
    for (const RunResult& r : results) {
        rows.push_back({r.repetition, r.latency_s, r.tokens_generated});
    }
    return rows;
}

RunStore load_run_store(const std::filesystem::path& dir) {
    RunStore store;
    store.dir = dir;
    std::filesystem::path manifest_path = dir / "manifest.json";
    std::filesystem::path results_path = dir / "results.jsonl";
    try {
        store.manifest = nlohmann::json::parse(read_file(manifest_path));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(manifest_path.string() + ": invalid JSON: " + e.what());
    }
    if (!store.manifest.value("complete", false)) {
        throw DataError(dir.string() + ": run store is marked incomplete");
    }

    std::string payload = read_file(results_path);
    std::string expected = store.manifest.value("results_sha256", "");
    if (sha256_hex(payload) != expected) {
        throw DataError(results_path.string() + ": content does not match the manifest hash");
    }
    size_t line_no = 0;
    for (const nlohmann::json& row : read_jsonl(results_path)) {
        ++line_no;
        store.results.push_back(
            RunResult::from_json(row, results_path.string() + " line " + std::to_string(line_no)));
    }
    store.mode = mode_from_string(store.manifest.at("config").at("mode").get<std::string>());
    store.label = to_string(store.mode);
    return store;
}

LexicalTable parse_lexical_csv(const std::filesystem::path& path) {
    std::stringstream stream(read_file(path));
    std::string line;
    if (!std::getline(stream, line) || trim(line) != "id,bleu4,rouge1,rouge_lsum,meteor") {
        throw DataError(path.string() + ": not a score-sc CSV (unexpected header)");
    }
    LexicalTable table;
    bool saw_mean = false;
    int line_no = 1;
    while (std::getline(stream, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::stringstream fields(line);
        std::string id, b, r1, rl, me;
        if (!std::getline(fields, id, ',') || !std::getline(fields, b, ',') ||
            !std::getline(fields, r1, ',') || !std::getline(fields, rl, ',') ||
            !std::getline(fields, me)) {
            throw DataError(path.string() + " line " + std::to_string(line_no) +
                            ": expected 5 comma-separated fields");
        }
        LexicalScores scores;
        try {
            scores.bleu4 = std::stod(b);
            scores.rouge1 = std::stod(r1);
            scores.rouge_lsum = std::stod(rl);
            scores.meteor = std::stod(me);
        } catch (const std::exception&) {
            throw DataError(path.string() + " line " + std::to_string(line_no) +
                            ": non-numeric score field");
        }
        if (id == "mean") {
            table.mean = scores;
            saw_mean = true;
        } else {
            table.rows.push_back({id, scores});
        }
    }
    if (!saw_mean) throw DataError(path.string() + ": missing the mean summary row");
    return table;
}

ReportBundle build_report(const std::vector<RunStore>& stores,
                          const std::optional<LexicalTable>& lexical) {
    if (stores.empty()) throw UsageError("report needs at least one run store");

    std::string corpus_sha = stores.front().manifest.at("provenance").at("corpus_sha256");
    for (const RunStore& store : stores) {
        std::string sha = store.manifest.at("provenance").at("corpus_sha256");
        if (sha != corpus_sha) {
            throw DataError("incompatible corpora across stores: " + stores.front().label +
                            " has " + corpus_sha + ", " + store.label + " has " + sha);
        }
    }

    // Disambiguate labels when several stores share a mode.
    std::vector<RunStore> labeled = stores;
    std::map<std::string, int> label_counts;
    for (RunStore& store : labeled) {
        int n = ++label_counts[store.label];
        if (n > 1) store.label += "#" + std::to_string(n);
    }

    std::vector<AccuracyTable> tables;
    std::vector<CostStats> costs;
    for (const RunStore& store : labeled) {
        tables.push_back(accuracy_table(outcome_rows(store.results)));
        costs.push_back(cost_stats(cost_rows(store.results)));
    }

    ReportBundle bundle;
    std::string& md = bundle.markdown;
    md = "# Evaluation report\n\n";

    md += "## Accuracy (%)\n\n";
    md += "| run |";
    for (Setting s : all_settings()) md += " " + to_string(s) + " |";
    md += " all |\n|---|";
    for (size_t i = 0; i < all_settings().size() + 1; ++i) md += "---|";
    md += "\n";
    bundle.accuracy_csv = "run," + setting_header() + "all\n";
    for (size_t i = 0; i < labeled.size(); ++i) {
        md += "| " + labeled[i].label + " |";
        bundle.accuracy_csv += labeled[i].label;
        for (Setting s : all_settings()) {
            std::string cell = format_fixed(tables[i].per_setting.at(s), 1);
            md += " " + cell + " |";
            bundle.accuracy_csv += "," + cell;
        }
        std::string all_cell = format_fixed(tables[i].all_mean, 1);
        md += " " + all_cell + " |\n";
        bundle.accuracy_csv += "," + all_cell + "\n";
    }
    md += "\n";

    if (labeled.size() > 1) {
        md += "## Flips against " + labeled.front().label + " (first repetition)\n\n";
        md += "| run | improvements | degradations | ratio |\n|---|---|---|---|\n";
        bundle.flips_csv = "run,improvements,degradations,ratio\n";
        auto baseline_rows = outcome_rows(labeled.front().results, 0);
        for (size_t i = 1; i < labeled.size(); ++i) {
            FlipStats flips = flip_stats(baseline_rows, outcome_rows(labeled[i].results, 0));
            md += "| " + labeled[i].label + " | " + std::to_string(flips.improvements) + " | " +
                  std::to_string(flips.degradations) + " | " + flips.formatted_ratio() + " |\n";
            bundle.flips_csv += labeled[i].label + "," + std::to_string(flips.improvements) +
                                "," + std::to_string(flips.degradations) + "," +
                                flips.formatted_ratio() + "\n";
        }
        md += "\n";

        const RunStore& treatment = labeled.back();
        std::vector<double> x = setting_vector(tables.back());

        const RunStore& best = best_overall_baseline(labeled, tables);
        size_t best_idx = static_cast<size_t>(&best - labeled.data());
        MWUResult overall = mann_whitney_one_tailed(x, setting_vector(tables[best_idx]));

        std::vector<double> composite;
        for (Setting s : all_settings()) {
            double best_value = tables[0].per_setting.at(s);
            for (size_t i = 1; i + 1 < labeled.size(); ++i) {
                best_value = std::max(best_value, tables[i].per_setting.at(s));
            }
            composite.push_back(best_value);
        }
        MWUResult per_setting = mann_whitney_one_tailed(x, composite);

        md += "## Significance (one-tailed Mann-Whitney U, treatment: " + treatment.label +
              ")\n\nThe nearest-baseline pairing is ambiguous, so both conventions are "
              "reported.\n\n";
        md += "| pairing | baseline | U | p | method |\n|---|---|---|---|---|\n";
        md += "| best_overall | " + best.label + " | " + format_fixed(overall.u_statistic, 1) +
              " | " + fmt_p(overall.p_one_tailed) + " | " + to_string(overall.method) + " |\n";
        md += "| best_per_setting | composite | " + format_fixed(per_setting.u_statistic, 1) +
              " | " + fmt_p(per_setting.p_one_tailed) + " | " + to_string(per_setting.method) +
              " |\n\n";
        bundle.significance_csv = "pairing,baseline,u,p,method\n";
        bundle.significance_csv += "best_overall," + best.label + "," +
                                   format_fixed(overall.u_statistic, 1) + "," +
                                   fmt_p(overall.p_one_tailed) + "," + to_string(overall.method) +
                                   "\n";
        bundle.significance_csv += "best_per_setting,composite," +
                                   format_fixed(per_setting.u_statistic, 1) + "," +
                                   fmt_p(per_setting.p_one_tailed) + "," +
                                   to_string(per_setting.method) + "\n";
    }

    md += "## Cost\n\n| run | mean latency (s) | mean tokens |\n|---|---|---|\n";
    bundle.cost_csv = "run,mean_latency_s,mean_tokens\n";
    for (size_t i = 0; i < labeled.size(); ++i) {
        std::string latency = format_fixed(costs[i].mean_latency, 2);
        std::string tokens = format_fixed(costs[i].mean_tokens, 2);
        md += "| " + labeled[i].label + " | " + latency + " | " + tokens + " |\n";
        bundle.cost_csv += labeled[i].label + "," + latency + "," + tokens + "\n";
    }
    md += "\n";

    if (lexical.has_value()) {
        md += "## Lexical scores (x100)\n\n";
        md += "| n | bleu4 | rouge1 | rouge_lsum | meteor |\n|---|---|---|---|---|\n";
        md += "| " + std::to_string(lexical->rows.size()) + " | " +
              format_fixed(lexical->mean.bleu4, 1) + " | " + format_fixed(lexical->mean.rouge1, 1) +
              " | " + format_fixed(lexical->mean.rouge_lsum, 1) + " | " +
              format_fixed(lexical->mean.meteor, 1) + " |\n\n";
    }

    md += "## Provenance\n\n";
    md += "corpus_sha256: " + corpus_sha + "\n\n";
    for (const RunStore& store : labeled) {
        md += "- " + store.label + " (" + store.dir.filename().string() +
              "): core_sha256 " + store.manifest.value("core_sha256", "?") + ", results_sha256 " +
              store.manifest.value("results_sha256", "?") + "\n";
    }

    nlohmann::json points = nlohmann::json::array();
    for (size_t i = 0; i < labeled.size(); ++i) {
        points.push_back({{"mode", labeled[i].label},
                          {"x_mean_latency_s", costs[i].mean_latency},
                          {"y_accuracy_all", tables[i].all_mean},
                          {"size_mean_tokens", costs[i].mean_tokens}});
    }
    bundle.plot_data = {{"points", points}};
    return bundle;
}

void write_report(const ReportBundle& bundle, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    write_file_atomic(out_dir / "report.md", bundle.markdown);
    write_file_atomic(out_dir / "accuracy.csv", bundle.accuracy_csv);
    write_file_atomic(out_dir / "cost.csv", bundle.cost_csv);
    if (!bundle.flips_csv.empty()) write_file_atomic(out_dir / "flips.csv", bundle.flips_csv);
    if (!bundle.significance_csv.empty()) {
        write_file_atomic(out_dir / "significance.csv", bundle.significance_csv);
    }
    write_file_atomic(out_dir / "plot_data.json", bundle.plot_data.dump(2) + "\n");
}

}  // namespace vinfer
