// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>
#include <fstream>

#include <json.hpp>

#include "searchrl/harness.hpp"

namespace searchrl {

namespace {

using nlohmann::json;

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void apply_env_overrides(RrmRunConfig& rrm) {
  if (const char* v = std::getenv("SEARCHRL_RRM_ENDPOINT")) rrm.remote.endpoint = v;
  if (const char* v = std::getenv("SEARCHRL_RRM_MODEL")) rrm.remote.model = v;
  if (const char* v = std::getenv("SEARCHRL_RRM_TOKEN")) rrm.remote.auth_token = v;
}

}  // namespace

void RunConfig::validate() const {
  if (prompts_per_step < 1) throw std::runtime_error("config: prompts_per_step must be >= 1");
  if (rollouts_per_prompt < 2) {
    throw std::runtime_error("config: rollouts_per_prompt must be >= 2 (GRPO group size)");
  }
  if (max_steps < 1) throw std::runtime_error("config: max_steps must be >= 1");
  if (episode.limits.max_tool_calls < 1 || episode.limits.max_steps < 1) {
    throw std::runtime_error("config: episode limits must be positive");
  }
  if (episode.max_segment_tokens < 9) {
    throw std::runtime_error("config: episode.max_segment_tokens must be >= 9");
  }
  if (!(episode.temperature > 0.0) || !(eval_temperature > 0.0)) {
    throw std::runtime_error("config: temperatures must be positive");
  }
  if (grpo.clip_eps <= 0.0 || grpo.clip_eps >= 1.0) {
    throw std::runtime_error("config: grpo.clip_eps must lie in (0,1)");
  }
  if (grpo.kl_beta < 0.0) throw std::runtime_error("config: grpo.kl_beta must be >= 0");
  if (!(grpo.learning_rate > 0.0)) {
    throw std::runtime_error("config: grpo.learning_rate must be positive");
  }
  if (swerm.window < 1) throw std::runtime_error("config: swerm.window must be >= 1");
  if (!(swerm.tau > 0.0)) throw std::runtime_error("config: swerm.tau must be positive");
  if (!(swerm.temp_factor > 1.0)) {
    throw std::runtime_error("config: swerm.temp_factor must exceed 1");
  }
  if (alpha_mode != "schedule" && alpha_mode != "zero") {
    throw std::runtime_error("config: alpha_mode must be 'schedule' or 'zero'");
  }
  if (rrm.mode != "heuristic" && rrm.mode != "remote") {
    throw std::runtime_error("config: rrm.mode must be 'heuristic' or 'remote'");
  }
  if (rrm.mode == "remote" && rrm.remote.endpoint.empty()) {
    throw std::runtime_error("config: rrm.mode is 'remote' but no endpoint is set");
  }
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw std::runtime_error("config: " + path + " is not a JSON object");
  }

  RunConfig cfg;
  read_if(j, "seed", cfg.seed);
  read_if(j, "prompts_per_step", cfg.prompts_per_step);
  read_if(j, "rollouts_per_prompt", cfg.rollouts_per_prompt);
  read_if(j, "max_steps", cfg.max_steps);
  read_if(j, "corpus", cfg.corpus_path);
  read_if(j, "dataset", cfg.dataset_path);
  read_if(j, "out_dir", cfg.out_dir);
  read_if(j, "alpha_mode", cfg.alpha_mode);
  read_if(j, "eval_every", cfg.eval_every);
  read_if(j, "checkpoint_every", cfg.checkpoint_every);
  read_if(j, "workers", cfg.workers);
  read_if(j, "persist_trajectories", cfg.persist_trajectories);
  read_if(j, "eval_temperature", cfg.eval_temperature);

  if (j.contains("episode")) {
    const json& e = j["episode"];
    read_if(e, "max_tool_calls", cfg.episode.limits.max_tool_calls);
    read_if(e, "max_episode_steps", cfg.episode.limits.max_steps);
    read_if(e, "max_segment_tokens", cfg.episode.max_segment_tokens);
    read_if(e, "search_k", cfg.episode.search_k);
    read_if(e, "snippet_tokens", cfg.episode.snippet_tokens);
    read_if(e, "feature_window", cfg.episode.feature_window);
    read_if(e, "temperature", cfg.episode.temperature);
  }
  if (j.contains("grpo")) {
    const json& g = j["grpo"];
    read_if(g, "clip_eps", cfg.grpo.clip_eps);
    read_if(g, "kl_beta", cfg.grpo.kl_beta);
    read_if(g, "learning_rate", cfg.grpo.learning_rate);
  }
  cfg.grpo.group_size = cfg.rollouts_per_prompt;
  if (j.contains("swerm")) {
    const json& s = j["swerm"];
    read_if(s, "window", cfg.swerm.window);
    read_if(s, "tau", cfg.swerm.tau);
    read_if(s, "temp_factor", cfg.swerm.temp_factor);
    read_if(s, "max_temp", cfg.swerm.max_temp);
    read_if(s, "cooldown_steps", cfg.swerm.cooldown_steps);
  }
  if (j.contains("rrm")) {
    const json& r = j["rrm"];
    read_if(r, "mode", cfg.rrm.mode);
    read_if(r, "endpoint", cfg.rrm.remote.endpoint);
    read_if(r, "path", cfg.rrm.remote.path);
    read_if(r, "model", cfg.rrm.remote.model);
    read_if(r, "timeout_ms", cfg.rrm.remote.timeout_ms);
    read_if(r, "retries", cfg.rrm.remote.retries);
    read_if(r, "max_inflight", cfg.rrm.remote.max_inflight);
    read_if(r, "template_path", cfg.rrm.template_path);
  }
  if (j.contains("warm_start")) {
    const json& w = j["warm_start"];
    read_if(w, "think_open", cfg.warm_start.think_open);
    read_if(w, "think_close", cfg.warm_start.think_close);
    read_if(w, "atom_open", cfg.warm_start.atom_open);
    read_if(w, "atom_close", cfg.warm_start.atom_close);
    read_if(w, "tool_call_open", cfg.warm_start.tool_call_open);
    read_if(w, "answer_open", cfg.warm_start.answer_open);
    read_if(w, "answer_close", cfg.warm_start.answer_close);
  }

  apply_env_overrides(cfg.rrm);
  cfg.validate();
  return cfg;
}

void save_run_config(const std::string& path, const RunConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["prompts_per_step"] = cfg.prompts_per_step;
  j["rollouts_per_prompt"] = cfg.rollouts_per_prompt;
  j["max_steps"] = cfg.max_steps;
  j["corpus"] = cfg.corpus_path;
  j["dataset"] = cfg.dataset_path;
  j["out_dir"] = cfg.out_dir;
  j["alpha_mode"] = cfg.alpha_mode;
  j["eval_every"] = cfg.eval_every;
  j["checkpoint_every"] = cfg.checkpoint_every;
  j["workers"] = cfg.workers;
  j["persist_trajectories"] = cfg.persist_trajectories;
  j["eval_temperature"] = cfg.eval_temperature;
  j["episode"] = {{"max_tool_calls", cfg.episode.limits.max_tool_calls},
                  {"max_episode_steps", cfg.episode.limits.max_steps},
                  {"max_segment_tokens", cfg.episode.max_segment_tokens},
                  {"search_k", cfg.episode.search_k},
                  {"snippet_tokens", cfg.episode.snippet_tokens},
                  {"feature_window", cfg.episode.feature_window},
                  {"temperature", cfg.episode.temperature}};
  j["grpo"] = {{"clip_eps", cfg.grpo.clip_eps},
               {"kl_beta", cfg.grpo.kl_beta},
               {"learning_rate", cfg.grpo.learning_rate}};
  j["swerm"] = {{"window", cfg.swerm.window},
                {"tau", cfg.swerm.tau},
                {"temp_factor", cfg.swerm.temp_factor},
                {"max_temp", cfg.swerm.max_temp},
                {"cooldown_steps", cfg.swerm.cooldown_steps}};
  j["rrm"] = {{"mode", cfg.rrm.mode},
              {"endpoint", cfg.rrm.remote.endpoint},
              {"path", cfg.rrm.remote.path},
              {"model", cfg.rrm.remote.model},
              {"timeout_ms", cfg.rrm.remote.timeout_ms},
              {"retries", cfg.rrm.remote.retries},
              {"max_inflight", cfg.rrm.remote.max_inflight},
              {"template_path", cfg.rrm.template_path}};
  j["warm_start"] = {{"think_open", cfg.warm_start.think_open},
                     {"think_close", cfg.warm_start.think_close},
                     {"atom_open", cfg.warm_start.atom_open},
                     {"atom_close", cfg.warm_start.atom_close},
                     {"tool_call_open", cfg.warm_start.tool_call_open},
                     {"answer_open", cfg.warm_start.answer_open},
                     {"answer_close", cfg.warm_start.answer_close}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("config: cannot write " + path);
  out << j.dump(2) << "\n";
}

}  // namespace searchrl
