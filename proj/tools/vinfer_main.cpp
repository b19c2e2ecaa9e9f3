#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "vinfer/commands.hpp"
#include "vinfer/common.hpp"

namespace {

void wire_split(CLI::App& app, vinfer::SplitArgs& args) {
    CLI::App* cmd = app.add_subcommand("split", "Split a corpus into train and test ids");
    cmd->add_option("--corpus", args.corpus_root, "Corpus records JSONL")->required();
    cmd->add_option("--ratio", args.ratio, "Train fraction (0,1)")->capture_default_str();
    cmd->add_option("--seed", args.seed, "Shuffle seed")->capture_default_str();
    cmd->add_option("--out", args.out_path, "Output split JSON")->required();
    cmd->callback([&args] { vinfer::cmd_split(args); });
}

void wire_build_dataset(CLI::App& app, vinfer::BuildDatasetArgs& args) {
    CLI::App* cmd = app.add_subcommand(
        "build-dataset", "Generate annotations and fine-tune corpora from a corpus");
    cmd->add_option("--corpus", args.corpus_root,
                    "Corpus records JSONL (overrides the config value)");
    cmd->add_option("--config", args.config_path, "Run configuration file")->required();
    cmd->add_option("--out", args.out_dir, "Output dataset directory")->required();
    cmd->add_option("--split", args.split_path, "Split JSON restricting the problems");
    cmd->add_option("--side", args.side, "Which split side to use: train, test, all")
        ->capture_default_str();
    cmd->callback([&args] { vinfer::cmd_build_dataset(args); });
}

void wire_run(CLI::App& app, vinfer::RunArgs& args) {
    CLI::App* cmd = app.add_subcommand("run", "Execute an inference run over a corpus");
    cmd->add_option("--config", args.config_path, "Run configuration file")->required();
    cmd->add_option("--out", args.out_dir, "Run store directory")->required();
    cmd->add_option("--split", args.split_path, "Split JSON restricting the problems");
    cmd->add_option("--side", args.side, "Which split side to use: train, test, all")
        ->capture_default_str();
    cmd->add_option("--mode", args.mode,
                    "zero_shot, icl, cot, sft, sft_aug, sx_plus_default, spatialmath");
    cmd->add_option("--shots", args.shots, "Demonstration count for icl/cot");
    cmd->add_flag("--gate", args.flag_gate, "Enable the evaluator gate");
    cmd->add_flag("--no-gate", args.flag_no_gate, "Disable the evaluator gate");
    cmd->add_option("--repetitions", args.repetitions, "Repeat each item N times");
    cmd->add_option("--settings", args.settings_csv,
                    "Comma-separated setting names, or \"all\"");
    cmd->add_flag("--no-cache", args.no_cache, "Disable the response cache");
    cmd->callback([&args] { vinfer::cmd_run(args); });
}

void wire_report(CLI::App& app, vinfer::ReportArgs& args) {
    CLI::App* cmd = app.add_subcommand("report", "Build tables and plot data from run stores");
    cmd->add_option("stores", args.store_dirs, "Run store directories")->required();
    cmd->add_option("--out", args.out_dir, "Report output directory")->required();
    cmd->add_option("--lexical", args.lexical_csv, "score-sc CSV to include");
    cmd->callback([&args] { vinfer::cmd_report(args); });
}

void wire_score_sc(CLI::App& app, vinfer::ScoreScArgs& args) {
    CLI::App* cmd = app.add_subcommand(
        "score-sc", "Score candidate interpretations against references");
    cmd->add_option("--candidates", args.candidates_path, "JSONL of {id, text}")->required();
    cmd->add_option("--references", args.references_path, "JSONL of {id, text}")->required();
    cmd->add_option("--out", args.out_path, "Output CSV")->required();
    cmd->callback([&args] { vinfer::cmd_score_sc(args); });
}

void wire_stats(CLI::App& app, vinfer::StatsArgs& args) {
    CLI::App* cmd = app.add_subcommand(
        "stats", "One-tailed Mann-Whitney U over two accuracy vectors");
    cmd->add_option("--x", args.x_csv, "Comma-separated values (alternative: x > y)")
        ->required();
    cmd->add_option("--y", args.y_csv, "Comma-separated values")->required();
    cmd->callback([&args] { vinfer::cmd_stats(args); });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Visual-infusion inference and evaluation harness"};
    app.require_subcommand(1);

    vinfer::SplitArgs split_args;
    vinfer::BuildDatasetArgs build_args;
    vinfer::RunArgs run_args;
    vinfer::ReportArgs report_args;
    vinfer::ScoreScArgs score_args;
    vinfer::StatsArgs stats_args;

    wire_split(app, split_args);
    wire_build_dataset(app, build_args);
    wire_run(app, run_args);
    wire_report(app, report_args);
    wire_score_sc(app, score_args);
    wire_stats(app, stats_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const vinfer::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.code());
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
