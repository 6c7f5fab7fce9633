// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "searchrl/episode.hpp"
#include "searchrl/grpo.hpp"
#include "searchrl/reward.hpp"
#include "searchrl/rrm.hpp"
#include "searchrl/swerm.hpp"

namespace searchrl {

// Initial bias-row logits that make well-formed trajectories likely from
// step 0 (the format warm start). Everything else starts at zero.
struct WarmStart {
  double think_open = 0.0;
  double think_close = 4.0;
  double atom_open = 1.5;
  double atom_close = 4.0;
  double tool_call_open = 0.5;
  double answer_open = 1.5;
  double answer_close = 5.0;
};

struct RrmRunConfig {
  std::string mode = "heuristic"; // "heuristic" | "remote"
  RrmConfig remote;
  std::string template_path;      // empty = built-in template
};

struct RunConfig {
  std::uint64_t seed = 7;
  int prompts_per_step = 32;
  int rollouts_per_prompt = 16;
  int max_steps = 200; // T_MAX
  std::string corpus_path;
  std::string dataset_path;
  std::string out_dir = "runs/run";
  EpisodeConfig episode;
  double eval_temperature = 0.01;
  GRPOConfig grpo;
  SwermConfig swerm;
  RrmRunConfig rrm;
  WarmStart warm_start;
  std::string alpha_mode = "schedule"; // "schedule" | "zero"
  int eval_every = 0;                  // 0 disables in-loop evaluation
  int checkpoint_every = 50;
  int workers = 0; // 0 = hardware concurrency (capped)
  bool persist_trajectories = true;

  void validate() const; // throws std::runtime_error on bad combinations
};

// Reads a JSON config file; missing keys keep their defaults. Environment
// variables SEARCHRL_RRM_ENDPOINT / SEARCHRL_RRM_MODEL / SEARCHRL_RRM_TOKEN
// override the corresponding rrm fields so secrets stay out of the file.
RunConfig load_run_config(const std::string& path);
void save_run_config(const std::string& path, const RunConfig& cfg);

struct StepMetrics {
  int step = 0;
  double mean_reward = 0.0;
  double mean_f1 = 0.0;
  double mean_atom_reward = 0.0;
  double mean_tool_calls = 0.0;
  double alpha = 0.0;
  double entropy = 0.0;
  double window_mean = 0.0;
  double kl_mean = 0.0;
  double clip_fraction = 0.0;
  int interventions = 0;
  std::optional<double> eval_f1; // pre-update evaluation, when enabled
};

struct TrainResult {
  std::string run_dir;
  std::vector<StepMetrics> metrics;
  double final_eval_f1 = 0.0; // evaluation after the last update (greedy)
};

// Runs the full loop: rollout -> reward -> entropy regulation -> update.
// Writes config.json, metrics.jsonl, trajectories.jsonl and checkpoints
// under cfg.out_dir. Byte-reproducible for a fixed seed without a remote RRM.
TrainResult train(const RunConfig& cfg);

struct EvalItemResult {
  std::string question;
  std::string answer;
  double f1 = 0.0;
  std::size_t response_tokens = 0; // policy-origin tokens
  std::size_t think_tokens = 0;    // tokens inside think blocks, tags included
  std::size_t tool_calls = 0;
};

struct EvalSummary {
  double mean_f1 = 0.0;
  double avg_response_tokens = 0.0;
  double avg_think_tokens = 0.0;
  double avg_tool_calls = 0.0;
  std::size_t items = 0;
};

struct EvalResult {
  std::vector<EvalItemResult> per_item;
  EvalSummary summary;
};

// Greedy (low-temperature) episodes over the dataset. Throws on an empty
// dataset rather than reporting zero.
EvalResult evaluate(const PolicyParams& params, const Vocab& vocab,
                    const std::vector<QAItem>& items, const Corpus& corpus,
                    const EpisodeConfig& episode, double eval_temperature, std::uint64_t seed);

// Checkpoint-file front end used by the CLI.
EvalResult evaluate_checkpoint(const std::string& checkpoint_path,
                               const std::string& dataset_path, const std::string& corpus_path,
                               const EpisodeConfig& episode, double eval_temperature,
                               std::uint64_t seed);

void write_eval_report(const std::string& path, const EvalResult& result);

// Offline scoring of a trajectory record file (one JSON object per line with
// "instruction" and "text"). Each record gains a reward breakdown; records
// that fail to parse or validate get format_ok=false and final=-1.
// References come from the dataset, matched by instruction text.
struct ScoreStats {
  std::size_t records = 0;
  std::size_t format_failures = 0;
};
ScoreStats score_trajectories(const std::string& in_path, const std::string& out_path,
                              const std::vector<QAItem>& references, const ScheduleState& at,
                              const EpisodeLimits& limits, const RrmRunConfig& rrm = {});

// Emits report.csv plus SVG charts (reward, entropy, alpha curves and a
// tool-call histogram) from a run directory's metrics and trajectories.
std::vector<std::string> write_report(const std::string& run_dir, const std::string& out_dir);

// Bias-row initialization of a fresh policy for the given vocab.
PolicyParams make_warm_start_params(const Vocab& vocab, const VocabLayout& layout,
                                    const StateFeaturizer& featurizer, const WarmStart& warm);

std::vector<StepMetrics> load_metrics(const std::string& path);

}  // namespace searchrl
