// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <thread>

#include <json.hpp>

#include "searchrl/common.hpp"
#include "searchrl/environment.hpp"
#include "searchrl/harness.hpp"
#include "searchrl/synth.hpp"
#include "scoring.hpp"

namespace searchrl {

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      fn(i);
    }
  };
  std::vector<std::thread> pool;
  int spawn = std::min<int>(workers, static_cast<int>(n));
  pool.reserve(spawn);
  for (int w = 0; w < spawn; ++w) pool.emplace_back(work);
  for (std::thread& t : pool) t.join();
}

int resolve_workers(int configured) {
  if (configured > 0) return configured;
  unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::clamp<unsigned>(hw, 1, 8));
}

// Deterministic epoch-shuffled prompt stream: every item is visited once
// per epoch, in a seed-derived order.
class PromptStream {
 public:
  PromptStream(std::size_t n, std::uint64_t seed) : n_(n), rng_(splitmix64(seed)) {}

  std::size_t next() {
    if (cursor_ == order_.size()) reshuffle();
    return order_[cursor_++];
  }

 private:
  void reshuffle() {
    if (order_.empty()) {
      order_.resize(n_);
      for (std::size_t i = 0; i < n_; ++i) order_[i] = i;
    }
    for (std::size_t i = n_; i > 1; --i) {
      std::size_t j = rng_() % i;
      std::swap(order_[i - 1], order_[j]);
    }
    cursor_ = 0;
  }

  std::size_t n_;
  std::mt19937_64 rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

struct ScoredRollout {
  Rollout rollout;
  RewardBreakdown reward;
};

json reward_json(const RewardBreakdown& r) {
  return json{{"f1", r.r_f1},
              {"atom", r.r_atom},
              {"alpha", r.alpha},
              {"final", r.final},
              {"formatOk", r.format_ok}};
}

json metrics_json(const StepMetrics& m) {
  json j{{"step", m.step},
         {"meanReward", m.mean_reward},
         {"meanF1", m.mean_f1},
         {"meanAtomReward", m.mean_atom_reward},
         {"meanToolCalls", m.mean_tool_calls},
         {"alpha", m.alpha},
         {"entropy", m.entropy},
         {"windowMean", m.window_mean},
         {"klMean", m.kl_mean},
         {"clipFraction", m.clip_fraction},
         {"interventions", m.interventions}};
  if (m.eval_f1) j["evalF1"] = *m.eval_f1;
  return j;
}

}  // namespace

TrajectoryScorer::TrajectoryScorer(const EpisodeLimits& limits,
                                   std::set<std::string> registry_names,
                                   const RrmRunConfig& rrm)
    : limits_(limits), registry_names_(std::move(registry_names)) {
  if (rrm.mode == "remote") {
    remote_ = true;
    client_ = std::make_unique<RrmClient>(rrm.remote);
  }
  template_text_ = rrm.template_path.empty() ? std::string(kDefaultScoringTemplate)
                                             : read_file(rrm.template_path);
}

RewardBreakdown TrajectoryScorer::score(const Trajectory& traj,
                                        const std::vector<std::string>& references,
                                        double alpha) const {
  FormatVerdict verdict = validate_format(traj, limits_, registry_names_);
  std::vector<AtomicThought> atoms = extract_atomic_thoughts(traj);

  double r_atom = 0.0;
  if (!atoms.empty()) {
    std::vector<double> scores;
    if (remote_) {
      RemoteScoreResult remote = client_->score(build_scoring_prompt(template_text_, traj));
      if (remote.status == RemoteScoreStatus::ok) scores = remote.scores->scores;
    }
    if (scores.empty()) scores = score_heuristic(traj).scores;
    r_atom = aggregate_atomic(scores);
  }

  double r_f1 = 0.0;
  if (traj.has_answer()) {
    const auto& answer = std::get<AnswerBlock>(traj.segments.back());
    r_f1 = f1_reward_multi(answer.text, references);
  }
  return hybrid_reward(verdict.ok, r_atom, r_f1, alpha);
}

PolicyParams make_warm_start_params(const Vocab& vocab, const VocabLayout& layout,
                                    const StateFeaturizer& featurizer, const WarmStart& warm) {
  PolicyParams params =
      make_params(featurizer.feature_dim(), static_cast<std::int32_t>(vocab.size()));
  std::int32_t bias = featurizer.bias_feature();
  auto set = [&](std::int32_t token, double value) {
    if (token >= 0) params.at(bias, token) = value;
  };
  set(layout.think_open, warm.think_open);
  set(layout.think_close, warm.think_close);
  set(layout.answer_open, warm.answer_open);
  set(layout.answer_close, warm.answer_close);
  set(layout.tool_call_open, warm.tool_call_open);
  for (std::int32_t open : layout.atom_opens) {
    set(open, warm.atom_open);
    set(layout.atom_close_of.at(open), warm.atom_close);
  }
  return params;
}

TrainResult train(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.corpus_path.empty() || cfg.dataset_path.empty()) {
    throw std::runtime_error("train: corpus and dataset paths are required");
  }
  Corpus corpus = load_corpus(cfg.corpus_path);
  std::vector<QAItem> items = load_dataset(cfg.dataset_path);
  if (items.empty()) throw std::runtime_error("train: dataset is empty");

  Vocab vocab = build_task_vocab(corpus, items, cfg.episode.schema);
  VocabLayout layout = VocabLayout::analyze(vocab, cfg.episode.schema);
  StateFeaturizer featurizer(&vocab, cfg.episode.feature_window,
                             cfg.episode.limits.max_tool_calls, cfg.episode.limits.max_steps);
  ToolRegistry registry = make_local_registry(&corpus, cfg.episode.snippet_tokens);
  TrajectoryScorer scorer(cfg.episode.limits, registry_names(registry), cfg.rrm);

  PolicyParams params = make_warm_start_params(vocab, layout, featurizer, cfg.warm_start);
  PolicyParams ref_params = snapshot(params);

  std::filesystem::create_directories(cfg.out_dir);
  save_run_config(cfg.out_dir + "/config.json", cfg);
  std::ofstream metrics_out(cfg.out_dir + "/metrics.jsonl");
  if (!metrics_out) throw std::runtime_error("train: cannot write metrics in " + cfg.out_dir);
  std::ofstream traj_out;
  if (cfg.persist_trajectories) {
    traj_out.open(cfg.out_dir + "/trajectories.jsonl");
    if (!traj_out) throw std::runtime_error("train: cannot write trajectories");
  }

  const int P = cfg.prompts_per_step;
  const int G = cfg.rollouts_per_prompt;
  const int workers = resolve_workers(cfg.workers);
  SwermController swerm(cfg.swerm, cfg.episode.temperature);
  PromptStream prompts(items.size(), mix_seed(cfg.seed, 0xA1));

  TrainResult result;
  result.run_dir = cfg.out_dir;

  for (int step = 0; step < cfg.max_steps; ++step) {
    double alpha = cfg.alpha_mode == "zero"
                       ? 0.0
                       : alpha_schedule({step, cfg.max_steps});

    std::vector<std::size_t> prompt_idx(P);
    for (int p = 0; p < P; ++p) prompt_idx[p] = prompts.next();

    PolicyParams pi_old = snapshot(params);
    std::vector<ScoredRollout> batch(static_cast<std::size_t>(P) * G);

    auto roll = [&](std::uint64_t salt) {
      EpisodeConfig ep = cfg.episode;
      ep.temperature = swerm.temperature();
      parallel_for(batch.size(), workers, [&](std::size_t i) {
        const QAItem& item = items[prompt_idx[i / G]];
        SoftmaxPolicy handle(&pi_old);
        Rollout r = run_episode(handle, item, registry, vocab, layout, ep,
                                mix_seed(cfg.seed, salt, static_cast<std::uint64_t>(step), i));
        RewardBreakdown reward = scorer.score(r.trajectory, item.reference_answers, alpha);
        batch[i] = {std::move(r), reward};
      });
    };
    roll(0xE0);

    auto batch_steps = [&] {
      std::vector<std::vector<PolicyStep>> seqs(batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const Rollout& r = batch[i].rollout;
        for (std::size_t t = 0; t < r.loss_mask.size(); ++t) {
          if (r.loss_mask[t]) seqs[i].push_back({r.features[t], r.legal[t]});
        }
      }
      return seqs;
    };

    double entropy = batch_entropy(pi_old, batch_steps());
    std::optional<InterventionEvent> event = swerm.on_step(entropy);
    int interventions = 0;
    if (event) {
      interventions = 1;
      roll(0xE1); // regenerate the whole batch at the raised temperature
      entropy = batch_entropy(pi_old, batch_steps());
      swerm.replace_last_entropy(entropy);
    }

    // Pre-update evaluation (the policy entering this step).
    std::optional<double> eval_f1;
    if (cfg.eval_every > 0 && step % cfg.eval_every == 0) {
      EvalResult ev = evaluate(params, vocab, items, corpus, cfg.episode, cfg.eval_temperature,
                               mix_seed(cfg.seed, 0xEE, static_cast<std::uint64_t>(step)));
      eval_f1 = ev.summary.mean_f1;
    }

    // GRPO over the P groups, fixed reduction order.
    double loss_sum = 0.0, kl_sum = 0.0, clip_sum = 0.0;
    std::vector<double> grad_sum(params.weights.size(), 0.0);
    for (int p = 0; p < P; ++p) {
      RolloutGroup group;
      group.prompt = items[prompt_idx[p]].question;
      group.trajectories.reserve(G);
      group.rewards.reserve(G);
      for (int g = 0; g < G; ++g) {
        ScoredRollout& sr = batch[static_cast<std::size_t>(p) * G + g];
        Rollout& r = sr.rollout;
        TrajectoryRecordTensors tr;
        tr.token_ids = r.token_ids;
        tr.loss_mask = r.loss_mask;
        tr.logp_old = r.logp_old;
        tr.features = r.features;
        tr.legal = r.legal;
        tr.logp_ref.assign(tr.token_ids.size(), 0.0);
        for (std::size_t t = 0; t < tr.token_ids.size(); ++t) {
          if (tr.loss_mask[t]) {
            tr.logp_ref[t] =
                masked_logprob(ref_params, tr.features[t], tr.legal[t], tr.token_ids[t]);
          }
        }
        group.trajectories.push_back(std::move(tr));
        group.rewards.push_back(sr.reward.final);
      }
      GrpoResult gr = grpo_loss(group, params, cfg.grpo);
      loss_sum += gr.loss;
      kl_sum += gr.mean_kl;
      clip_sum += gr.clip_fraction;
      for (std::size_t k = 0; k < grad_sum.size(); ++k) grad_sum[k] += gr.grad[k];
    }
    std::vector<double> objective_grad(grad_sum.size());
    for (std::size_t k = 0; k < grad_sum.size(); ++k) {
      objective_grad[k] = -grad_sum[k] / P;
    }
    params = update(params, objective_grad, cfg.grpo);

    StepMetrics m;
    m.step = step;
    double n = static_cast<double>(batch.size());
    for (const ScoredRollout& sr : batch) {
      m.mean_reward += sr.reward.final / n;
      m.mean_f1 += sr.reward.r_f1 / n;
      m.mean_atom_reward += sr.reward.r_atom / n;
      m.mean_tool_calls += static_cast<double>(sr.rollout.trajectory.tool_call_count()) / n;
    }
    m.alpha = alpha;
    m.entropy = entropy;
    m.window_mean = swerm.window().mean();
    m.kl_mean = kl_sum / P;
    m.clip_fraction = clip_sum / P;
    m.interventions = interventions;
    m.eval_f1 = eval_f1;
    metrics_out << metrics_json(m).dump() << "\n";
    result.metrics.push_back(m);

    if (cfg.persist_trajectories) {
      for (const ScoredRollout& sr : batch) {
        json rec{{"step", step},
                 {"instruction", sr.rollout.trajectory.instruction},
                 {"text", serialize(sr.rollout.trajectory)},
                 {"toolCalls", sr.rollout.trajectory.tool_call_count()},
                 {"reward", reward_json(sr.reward)}};
        traj_out << rec.dump() << "\n";
      }
    }

    if (cfg.checkpoint_every > 0 && (step + 1) % cfg.checkpoint_every == 0) {
      char name[48];
      std::snprintf(name, sizeof(name), "/checkpoint_%05d.txt", step + 1);
      save_checkpoint(cfg.out_dir + name, params, vocab);
    }
  }

  save_checkpoint(cfg.out_dir + "/checkpoint_final.txt", params, vocab);
  EvalResult final_eval = evaluate(params, vocab, items, corpus, cfg.episode,
                                   cfg.eval_temperature, mix_seed(cfg.seed, 0xEF));
  result.final_eval_f1 = final_eval.summary.mean_f1;
  json summary{{"steps", cfg.max_steps},
               {"finalEvalF1", result.final_eval_f1},
               {"items", items.size()}};
  std::ofstream summary_out(cfg.out_dir + "/summary.json");
  summary_out << summary.dump(2) << "\n";
  return result;
}

}  // namespace searchrl
