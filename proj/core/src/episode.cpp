// SPDX-License-Identifier: Apache-2.0
#include "searchrl/episode.hpp"

#include <algorithm>
#include <stdexcept>

#include "searchrl/common.hpp"
#include "searchrl/text.hpp"

namespace searchrl {

const std::array<const char*, 5> kPayloadPrefixTokens = {
    "{\"name\":", "\"web_search\",", "\"arguments\":", "{\"queries\":", "[\""};
const char kPayloadSuffixToken[] = "\"]}}";

VocabLayout VocabLayout::analyze(const Vocab& vocab, const TagSchema& schema) {
  VocabLayout layout;
  std::map<std::string, std::int32_t> open_atoms; // label -> open id
  std::map<std::string, std::int32_t> close_atoms;

  std::map<std::string, std::int32_t> scaffold;
  for (const char* tok : kPayloadPrefixTokens) scaffold[tok] = -1;
  scaffold[kPayloadSuffixToken] = -1;

  for (std::int32_t id = 0; id < static_cast<std::int32_t>(vocab.size()); ++id) {
    const std::string& tok = vocab.tokens[id];
    if (is_tag_token(tok)) {
      std::string name(tag_name(tok));
      bool close = is_close_tag(tok);
      if (name == schema.think) {
        (close ? layout.think_close : layout.think_open) = id;
      } else if (name == schema.tool_call) {
        (close ? layout.tool_call_close : layout.tool_call_open) = id;
      } else if (name == schema.answer) {
        (close ? layout.answer_close : layout.answer_open) = id;
      } else if (name == schema.tool_response) {
        // environment-emitted; never sampled
      } else {
        (close ? close_atoms : open_atoms)[name] = id;
      }
      continue;
    }
    auto it = scaffold.find(tok);
    if (it != scaffold.end()) {
      it->second = id;
      continue;
    }
    layout.content.push_back(id);
  }

  if (layout.think_open < 0 || layout.think_close < 0 || layout.answer_open < 0 ||
      layout.answer_close < 0) {
    throw std::invalid_argument("vocab layout: think/answer tag pairs are required");
  }
  for (const auto& [label, open_id] : open_atoms) {
    auto it = close_atoms.find(label);
    if (it == close_atoms.end()) {
      throw std::invalid_argument("vocab layout: atom tag <" + label + "> has no closing tag");
    }
    layout.atom_opens.push_back(open_id);
    layout.atom_close_of[open_id] = it->second;
  }
  bool has_tool_tags = layout.tool_call_open >= 0 && layout.tool_call_close >= 0;
  bool has_scaffold = std::all_of(scaffold.begin(), scaffold.end(),
                                  [](const auto& kv) { return kv.second >= 0; });
  if (has_tool_tags && has_scaffold) {
    for (const char* tok : kPayloadPrefixTokens) layout.payload_prefix.push_back(scaffold[tok]);
    layout.payload_suffix = scaffold[kPayloadSuffixToken];
  } else {
    layout.tool_call_open = layout.tool_call_close = -1; // searching disabled
  }
  return layout;
}

std::int32_t SoftmaxPolicy::next_token(const SparseFeatures& features, const LegalSet& legal,
                                       double temperature, std::mt19937_64& rng) {
  return sample(*params_, features, legal, temperature, rng);
}

double SoftmaxPolicy::logprob_temp1(const SparseFeatures& features, const LegalSet& legal,
                                    std::int32_t token) const {
  return masked_logprob(*params_, features, legal, token);
}

ScriptedPolicy::ScriptedPolicy(const Vocab* vocab, std::vector<std::string> script)
    : vocab_(vocab) {
  script_.reserve(script.size());
  for (const std::string& tok : script) script_.push_back(vocab_->require(tok));
}

std::int32_t ScriptedPolicy::next_token(const SparseFeatures&, const LegalSet& legal, double,
                                        std::mt19937_64&) {
  if (pos_ >= script_.size()) {
    throw std::logic_error("scripted policy: script exhausted");
  }
  std::int32_t tok = script_[pos_++];
  if (!legal.empty() && std::find(legal.begin(), legal.end(), tok) == legal.end()) {
    throw std::logic_error("scripted policy: token '" + vocab_->tokens[tok] +
                           "' not admissible at position " + std::to_string(pos_ - 1));
  }
  return tok;
}

std::vector<std::string> render_tool_response_tokens(const std::vector<SearchHit>& hits,
                                                     const TagSchema& schema) {
  std::vector<std::string> tokens;
  tokens.push_back("<" + schema.tool_response + ">");
  for (const SearchHit& hit : hits) {
    tokens.push_back("[" + hit.doc_id + "]");
    for (const std::string& tok : tokenize(hit.snippet)) tokens.push_back(tok);
  }
  tokens.push_back("</" + schema.tool_response + ">");
  return tokens;
}

namespace {

enum class Phase { top, think, atom, payload_scaffold, payload_query, answer };

struct PendingSegment {
  std::vector<std::int32_t> token_ids;
  std::vector<std::string> tokens;
  std::vector<SparseFeatures> features;
  std::vector<LegalSet> legal;
  std::vector<double> logp;
};

}  // namespace

Rollout run_episode(PolicyHandle& policy, const QAItem& item, const ToolRegistry& registry,
                    const Vocab& vocab, const VocabLayout& layout, const EpisodeConfig& cfg,
                    std::uint64_t seed) {
  if (cfg.max_segment_tokens < 9) {
    throw std::invalid_argument("run_episode: max_segment_tokens must be >= 9");
  }
  const bool can_search = layout.tool_call_open >= 0;

  std::mt19937_64 rng(splitmix64(seed));
  StateFeaturizer featurizer(&vocab, cfg.feature_window, cfg.limits.max_tool_calls,
                             cfg.limits.max_steps);

  Rollout rollout;
  TrajectoryBuilder builder(item.question, cfg.schema);

  EpisodeState state;
  state.history = tokenize(item.question);
  std::vector<std::string> work_hist = state.history;

  Phase phase = Phase::top;
  PendingSegment pending;
  bool first_segment = true;
  bool answered = false;
  bool truncated = false;
  std::size_t scaffold_pos = 0;
  std::size_t query_words = 0;
  std::int32_t atom_close_id = -1;

  auto commit_policy_tokens = [&](const PendingSegment& seg) {
    for (std::size_t i = 0; i < seg.tokens.size(); ++i) {
      rollout.token_ids.push_back(seg.token_ids[i]);
      rollout.loss_mask.push_back(1);
      rollout.logp_old.push_back(seg.logp[i]);
      rollout.features.push_back(seg.features[i]);
      rollout.legal.push_back(seg.legal[i]);
    }
  };
  auto commit_env_tokens = [&](const std::vector<std::string>& tokens) {
    for (const std::string& tok : tokens) {
      (void)tok;
      rollout.token_ids.push_back(-1);
      rollout.loss_mask.push_back(0);
      rollout.logp_old.push_back(0.0);
      rollout.features.push_back({});
      rollout.legal.push_back({});
    }
  };

  auto legal_now = [&]() -> LegalSet {
    int remaining = cfg.max_segment_tokens - static_cast<int>(pending.tokens.size());
    LegalSet legal;
    switch (phase) {
      case Phase::top:
        if (first_segment) {
          legal = {layout.think_open};
        } else {
          legal = {layout.think_open, layout.answer_open};
          if (can_search) legal.insert(legal.begin() + 1, layout.tool_call_open);
        }
        break;
      case Phase::think:
        if (remaining <= 1) {
          legal = {layout.think_close};
        } else {
          legal = LegalSet(layout.content);
          if (remaining >= 3) {
            legal.insert(legal.end(), layout.atom_opens.begin(), layout.atom_opens.end());
          }
          legal.push_back(layout.think_close);
        }
        break;
      case Phase::atom:
        if (remaining <= 2) {
          legal = {atom_close_id};
        } else {
          legal = LegalSet(layout.content);
          legal.push_back(atom_close_id);
        }
        break;
      case Phase::payload_scaffold:
        legal = {layout.payload_prefix[scaffold_pos]};
        break;
      case Phase::payload_query:
        if (query_words == 0) {
          legal = LegalSet(layout.content);
        } else if (remaining <= 2) {
          legal = {layout.payload_suffix};
        } else {
          legal = LegalSet(layout.content);
          legal.push_back(layout.payload_suffix);
        }
        break;
      case Phase::answer:
        if (pending.tokens.size() == 1) {
          legal = LegalSet(layout.content);
        } else if (remaining <= 1) {
          legal = {layout.answer_close};
        } else {
          legal = LegalSet(layout.content);
          legal.push_back(layout.answer_close);
        }
        break;
    }
    return legal;
  };

  while (!answered && !truncated) {
    if (phase == Phase::top && state.step_index >= cfg.limits.max_steps) {
      truncated = true;
      break;
    }

    SparseFeatures f = featurizer.featurize(work_hist, state.tool_calls_used, state.step_index);
    LegalSet legal = legal_now();
    std::int32_t tok = policy.next_token(f, legal, cfg.temperature, rng);
    double lp = policy.logprob_temp1(f, legal, tok);

    pending.token_ids.push_back(tok);
    pending.tokens.push_back(vocab.tokens[tok]);
    pending.features.push_back(std::move(f));
    pending.legal.push_back(std::move(legal));
    pending.logp.push_back(lp);
    work_hist.push_back(vocab.tokens[tok]);

    switch (phase) {
      case Phase::top:
        if (tok == layout.think_open) {
          phase = Phase::think;
        } else if (tok == layout.tool_call_open) {
          phase = Phase::payload_scaffold;
          scaffold_pos = 0;
          query_words = 0;
        } else {
          phase = Phase::answer;
        }
        break;

      case Phase::think:
        if (tok == layout.think_close) {
          state = transition(state, GenerateThought{pending.tokens}, {}, cfg.limits);
          builder.append_think_tokens(
              {pending.tokens.begin() + 1, pending.tokens.end() - 1});
          commit_policy_tokens(pending);
          pending = {};
          phase = Phase::top;
          first_segment = false;
        } else if (layout.atom_close_of.count(tok)) {
          atom_close_id = layout.atom_close_of.at(tok);
          phase = Phase::atom;
        }
        break;

      case Phase::atom:
        if (tok == atom_close_id) phase = Phase::think;
        break;

      case Phase::payload_scaffold:
        ++scaffold_pos;
        if (scaffold_pos == layout.payload_prefix.size()) phase = Phase::payload_query;
        break;

      case Phase::payload_query:
        if (tok == layout.payload_suffix) {
          // Forced close, then execute the call.
          SparseFeatures f2 =
              featurizer.featurize(work_hist, state.tool_calls_used, state.step_index);
          LegalSet close_legal = {layout.tool_call_close};
          std::int32_t close_tok = policy.next_token(f2, close_legal, cfg.temperature, rng);
          double close_lp = policy.logprob_temp1(f2, close_legal, close_tok);
          pending.token_ids.push_back(close_tok);
          pending.tokens.push_back(vocab.tokens[close_tok]);
          pending.features.push_back(std::move(f2));
          pending.legal.push_back(std::move(close_legal));
          pending.logp.push_back(close_lp);
          work_hist.push_back(vocab.tokens[close_tok]);

          std::vector<std::string> query_tokens(pending.tokens.end() - 2 - query_words,
                                                pending.tokens.end() - 2);
          std::string query = join_tokens(query_tokens);
          std::vector<SearchHit> hits;
          auto tool = registry.find("web_search");
          if (tool != registry.end()) hits = tool->second->run(query, cfg.search_k);
          std::vector<std::string> response = render_tool_response_tokens(hits, cfg.schema);

          try {
            state = transition(state, InvokeSearch{pending.tokens, {query}}, response,
                               cfg.limits);
          } catch (const LimitExceeded&) {
            work_hist.resize(work_hist.size() - pending.tokens.size());
            pending = {};
            truncated = true;
            break;
          }
          std::vector<std::string> payload(pending.tokens.begin() + 1,
                                           pending.tokens.end() - 1);
          builder.append_tool_call_tokens(payload, "web_search", {query}, true);
          commit_policy_tokens(pending);
          std::vector<RetrievedDoc> docs;
          for (const SearchHit& h : hits) docs.push_back({h.doc_id, h.snippet});
          builder.append_tool_response(docs);
          commit_env_tokens(response);
          work_hist.insert(work_hist.end(), response.begin(), response.end());
          pending = {};
          phase = Phase::top;
        } else {
          ++query_words;
        }
        break;

      case Phase::answer:
        if (tok == layout.answer_close) {
          state = transition(state, Answer{pending.tokens}, {}, cfg.limits);
          std::vector<std::string> body(pending.tokens.begin() + 1, pending.tokens.end() - 1);
          builder.append_answer(join_tokens(body));
          commit_policy_tokens(pending);
          pending = {};
          answered = true;
        }
        break;
    }
  }

  if (truncated) builder.mark_terminal();
  rollout.trajectory = builder.finish();
  rollout.truncated = truncated;
  return rollout;
}

Rollout run_episode(PolicyHandle& policy, const QAItem& item, const Corpus& corpus,
                    const Vocab& vocab, const EpisodeConfig& cfg, std::uint64_t seed) {
  ToolRegistry registry = make_local_registry(&corpus, cfg.snippet_tokens);
  VocabLayout layout = VocabLayout::analyze(vocab, cfg.schema);
  return run_episode(policy, item, registry, vocab, layout, cfg, seed);
}

}  // namespace searchrl
