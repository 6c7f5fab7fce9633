// SPDX-License-Identifier: Apache-2.0
#include <fstream>
#include <map>

#include <json.hpp>

#include "searchrl/common.hpp"
#include "searchrl/harness.hpp"
#include "scoring.hpp"

namespace searchrl {

namespace {

using nlohmann::json;

std::size_t think_token_count(const Trajectory& traj) {
  std::size_t n = 0;
  for (const Segment& seg : traj.segments) {
    if (const auto* think = std::get_if<ThinkBlock>(&seg)) n += think->token_span.size();
  }
  return n;
}

}  // namespace

EvalResult evaluate(const PolicyParams& params, const Vocab& vocab,
                    const std::vector<QAItem>& items, const Corpus& corpus,
                    const EpisodeConfig& episode, double eval_temperature, std::uint64_t seed) {
  if (items.empty()) throw std::runtime_error("evaluate: dataset is empty");
  VocabLayout layout = VocabLayout::analyze(vocab, episode.schema);
  ToolRegistry registry = make_local_registry(&corpus, episode.snippet_tokens);
  EpisodeConfig ep = episode;
  ep.temperature = eval_temperature;

  EvalResult result;
  for (std::size_t i = 0; i < items.size(); ++i) {
    SoftmaxPolicy handle(&params);
    Rollout r = run_episode(handle, items[i], registry, vocab, layout, ep,
                            mix_seed(seed, 0xD, i));
    EvalItemResult item;
    item.question = items[i].question;
    if (r.trajectory.has_answer()) {
      item.answer = std::get<AnswerBlock>(r.trajectory.segments.back()).text;
    }
    item.f1 = f1_reward_multi(item.answer, items[i].reference_answers);
    for (std::uint8_t m : r.loss_mask) item.response_tokens += m ? 1 : 0;
    item.think_tokens = think_token_count(r.trajectory);
    item.tool_calls = r.trajectory.tool_call_count();
    result.per_item.push_back(std::move(item));
  }

  EvalSummary& s = result.summary;
  s.items = result.per_item.size();
  double n = static_cast<double>(s.items);
  for (const EvalItemResult& it : result.per_item) {
    s.mean_f1 += it.f1 / n;
    s.avg_response_tokens += static_cast<double>(it.response_tokens) / n;
    s.avg_think_tokens += static_cast<double>(it.think_tokens) / n;
    s.avg_tool_calls += static_cast<double>(it.tool_calls) / n;
  }
  return result;
}

EvalResult evaluate_checkpoint(const std::string& checkpoint_path,
                               const std::string& dataset_path, const std::string& corpus_path,
                               const EpisodeConfig& episode, double eval_temperature,
                               std::uint64_t seed) {
  Checkpoint ck = load_checkpoint(checkpoint_path);
  Corpus corpus = load_corpus(corpus_path);
  std::vector<QAItem> items = load_dataset(dataset_path);
  return evaluate(ck.params, ck.vocab, items, corpus, episode, eval_temperature, seed);
}

void write_eval_report(const std::string& path, const EvalResult& result) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("evaluate: cannot write " + path);
  for (const EvalItemResult& it : result.per_item) {
    json j{{"question", it.question}, {"answer", it.answer},         {"f1", it.f1},
           {"responseTokens", it.response_tokens}, {"thinkTokens", it.think_tokens},
           {"toolCalls", it.tool_calls}};
    out << j.dump() << "\n";
  }
  json agg{{"aggregate",
            json{{"meanF1", result.summary.mean_f1},
                 {"avgResponseTokens", result.summary.avg_response_tokens},
                 {"avgThinkTokens", result.summary.avg_think_tokens},
                 {"avgToolCalls", result.summary.avg_tool_calls},
                 {"items", result.summary.items}}}};
  out << agg.dump() << "\n";
}

ScoreStats score_trajectories(const std::string& in_path, const std::string& out_path,
                              const std::vector<QAItem>& references, const ScheduleState& at,
                              const EpisodeLimits& limits, const RrmRunConfig& rrm) {
  std::ifstream in(in_path);
  if (!in) throw std::runtime_error("score_trajectories: cannot open " + in_path);
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("score_trajectories: cannot write " + out_path);

  std::map<std::string, const QAItem*> by_question;
  for (const QAItem& item : references) by_question[item.question] = &item;

  TrajectoryScorer scorer(limits, kDefaultToolRegistry, rrm);
  double alpha = alpha_schedule(at);

  ScoreStats stats;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++stats.records;
    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object()) {
      rec = json{{"raw", line}};
    }
    std::string instruction = rec.value("instruction", std::string{});
    std::string text = rec.value("text", std::string{});

    RewardBreakdown breakdown;
    try {
      Trajectory traj = parse_trajectory(text);
      traj.instruction = instruction;
      std::vector<std::string> refs;
      auto it = by_question.find(instruction);
      if (it != by_question.end()) refs = it->second->reference_answers;
      breakdown = scorer.score(traj, refs, alpha);
    } catch (const ParseError&) {
      breakdown = hybrid_reward(false, 0.0, 0.0, alpha);
    }
    if (!breakdown.format_ok) ++stats.format_failures;
    rec["reward"] = json{{"f1", breakdown.r_f1},
                         {"atom", breakdown.r_atom},
                         {"alpha", breakdown.alpha},
                         {"final", breakdown.final},
                         {"formatOk", breakdown.format_ok}};
    out << rec.dump() << "\n";
  }
  return stats;
}

std::vector<StepMetrics> load_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("metrics: cannot open " + path);
  std::vector<StepMetrics> all;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw std::runtime_error("metrics: malformed line in " + path);
    StepMetrics m;
    m.step = j.value("step", 0);
    m.mean_reward = j.value("meanReward", 0.0);
    m.mean_f1 = j.value("meanF1", 0.0);
    m.mean_atom_reward = j.value("meanAtomReward", 0.0);
    m.mean_tool_calls = j.value("meanToolCalls", 0.0);
    m.alpha = j.value("alpha", 0.0);
    m.entropy = j.value("entropy", 0.0);
    m.window_mean = j.value("windowMean", 0.0);
    m.kl_mean = j.value("klMean", 0.0);
    m.clip_fraction = j.value("clipFraction", 0.0);
    m.interventions = j.value("interventions", 0);
    if (j.contains("evalF1")) m.eval_f1 = j["evalF1"].get<double>();
    all.push_back(m);
  }
  return all;
}

}  // namespace searchrl
