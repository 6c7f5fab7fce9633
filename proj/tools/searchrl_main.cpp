// SPDX-License-Identifier: Apache-2.0
//
// searchrl: desk-scale RL pipeline for search-augmented reasoning agents.
// Subcommands: train, evaluate, score-trajectories, report, make-task.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "searchrl/harness.hpp"
#include "searchrl/synth.hpp"

namespace {

using namespace searchrl;

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "JSON run configuration file");
  cmd->add_option("--seed", args.seed, "Override the config seed");
  cmd->add_option("--out", args.out, "Override the output location");
}

RunConfig resolve_config(const CommonArgs& args) {
  RunConfig cfg = args.config.empty() ? RunConfig{} : load_run_config(args.config);
  if (args.seed) cfg.seed = *args.seed;
  if (!args.out.empty()) cfg.out_dir = args.out;
  return cfg;
}

int cmd_train(const CommonArgs& args) {
  RunConfig cfg = resolve_config(args);
  TrainResult result = train(cfg);
  const StepMetrics& last = result.metrics.back();
  std::cout << "trained " << result.metrics.size() << " steps; final mean reward "
            << last.mean_reward << ", final eval F1 " << result.final_eval_f1 << "\n";
  std::cout << "run directory: " << result.run_dir << "\n";
  return 0;
}

int cmd_evaluate(const CommonArgs& args, const std::string& checkpoint,
                 const std::string& dataset, const std::string& corpus) {
  RunConfig cfg = resolve_config(args);
  std::string dataset_path = dataset.empty() ? cfg.dataset_path : dataset;
  std::string corpus_path = corpus.empty() ? cfg.corpus_path : corpus;
  EvalResult result = evaluate_checkpoint(checkpoint, dataset_path, corpus_path, cfg.episode,
                                          cfg.eval_temperature, cfg.seed);
  std::string out = args.out.empty() ? "eval.jsonl" : args.out;
  write_eval_report(out, result);
  std::printf("items %zu  mean F1 %.4f  avg response tokens %.2f  avg think tokens %.2f  "
              "avg tool calls %.2f\n",
              result.summary.items, result.summary.mean_f1, result.summary.avg_response_tokens,
              result.summary.avg_think_tokens, result.summary.avg_tool_calls);
  std::cout << "per-item report: " << out << "\n";
  return 0;
}

int cmd_score(const CommonArgs& args, const std::string& in_path, const std::string& dataset,
              int step, int schedule_max) {
  RunConfig cfg = resolve_config(args);
  std::string dataset_path = dataset.empty() ? cfg.dataset_path : dataset;
  std::vector<QAItem> refs;
  if (!dataset_path.empty()) refs = load_dataset(dataset_path);
  std::string out = args.out.empty() ? in_path + ".scored" : args.out;
  int t_max = schedule_max > 0 ? schedule_max : cfg.max_steps;
  ScoreStats stats = score_trajectories(in_path, out, refs, {step, t_max},
                                        cfg.episode.limits, cfg.rrm);
  std::cout << "scored " << stats.records << " records (" << stats.format_failures
            << " format failures) -> " << out << "\n";
  return 0;
}

int cmd_report(const CommonArgs& args, const std::string& run_dir) {
  std::string out = args.out.empty() ? run_dir + "/report" : args.out;
  std::vector<std::string> files = write_report(run_dir, out);
  for (const std::string& f : files) std::cout << f << "\n";
  return 0;
}

int cmd_make_task(const CommonArgs& args, const std::string& kind, int items) {
  std::uint64_t seed = args.seed.value_or(1);
  SynthTask task;
  if (kind == "singlehop") {
    task = make_singlehop_task(items, seed);
  } else if (kind == "multihop") {
    task = make_multihop_task(items, seed);
  } else {
    std::cerr << "unknown task kind '" << kind << "' (use singlehop or multihop)\n";
    return 1;
  }
  std::string out = args.out.empty() ? "data/" + kind : args.out;
  std::filesystem::create_directories(out);
  save_corpus(out + "/corpus.jsonl", task.corpus);
  save_dataset(out + "/dataset.jsonl", task.items);
  std::cout << "wrote " << task.corpus.documents.size() << " documents and "
            << task.items.size() << " items under " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Desk-scale RL lab for search-augmented reasoning agents"};
  app.require_subcommand(1);

  CommonArgs train_args;
  CLI::App* train_cmd = app.add_subcommand("train", "Run the training loop");
  add_common(train_cmd, train_args);

  CommonArgs eval_args;
  std::string checkpoint, eval_dataset, eval_corpus;
  CLI::App* eval_cmd = app.add_subcommand("evaluate", "Greedy evaluation of a checkpoint");
  add_common(eval_cmd, eval_args);
  eval_cmd->add_option("--checkpoint", checkpoint, "Policy checkpoint file")->required();
  eval_cmd->add_option("--dataset", eval_dataset, "Dataset file (defaults to config)");
  eval_cmd->add_option("--corpus", eval_corpus, "Corpus file (defaults to config)");

  CommonArgs score_args;
  std::string score_in, score_dataset;
  int score_step = 0, score_max = 0;
  CLI::App* score_cmd =
      app.add_subcommand("score-trajectories", "Attach reward breakdowns to a record file");
  add_common(score_cmd, score_args);
  score_cmd->add_option("--in", score_in, "Trajectory record file")->required();
  score_cmd->add_option("--dataset", score_dataset, "Reference dataset (defaults to config)");
  score_cmd->add_option("--step", score_step, "Schedule step T for alpha");
  score_cmd->add_option("--schedule-max", score_max, "Schedule T_MAX (defaults to config)");

  CommonArgs report_args;
  std::string run_dir;
  CLI::App* report_cmd = app.add_subcommand("report", "Emit CSV and charts for a run");
  add_common(report_cmd, report_args);
  report_cmd->add_option("--run", run_dir, "Run directory with metrics.jsonl")->required();

  CommonArgs task_args;
  std::string task_kind = "singlehop";
  int task_items = 50;
  CLI::App* task_cmd = app.add_subcommand("make-task", "Generate a synthetic task");
  add_common(task_cmd, task_args);
  task_cmd->add_option("--kind", task_kind, "singlehop or multihop");
  task_cmd->add_option("--items", task_items, "Number of QA items");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) return cmd_train(train_args);
    if (eval_cmd->parsed()) {
      return cmd_evaluate(eval_args, checkpoint, eval_dataset, eval_corpus);
    }
    if (score_cmd->parsed()) {
      return cmd_score(score_args, score_in, score_dataset, score_step, score_max);
    }
    if (report_cmd->parsed()) return cmd_report(report_args, run_dir);
    if (task_cmd->parsed()) return cmd_make_task(task_args, task_kind, task_items);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
