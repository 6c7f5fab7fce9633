// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "searchrl/trajectory.hpp"

namespace searchrl {

struct Document {
  std::string doc_id;
  std::string title;
  std::string body;
};

// Immutable after load; shareable across episode workers.
struct Corpus {
  std::vector<Document> documents;
  std::map<std::string, std::vector<std::size_t>> index; // term -> posting list (doc positions)

  static Corpus build(std::vector<Document> docs); // validates ids, builds the index
  const Document* find(const std::string& doc_id) const;
};

struct QAItem {
  std::string question;
  std::vector<std::string> reference_answers;
  std::vector<std::string> required_doc_ids;
};

struct ScoredDoc {
  std::size_t doc_index;
  double score;
};

// Term-overlap retrieval: score = |query terms ∩ doc terms| / |query terms|
// over distinct normalized terms, ties broken by ascending docId. Documents
// with zero overlap are not returned. Deterministic for a fixed corpus.
std::vector<ScoredDoc> search(const Corpus& corpus, const std::string& query, int k);

// MDP pieces. The history is the token sequence of the instruction plus all
// actions and observations so far.
struct EpisodeState {
  std::vector<std::string> history;
  int step_index = 0;
  int tool_calls_used = 0;
};

struct GenerateThought {
  std::vector<std::string> tokens;
};
struct InvokeSearch {
  std::vector<std::string> tokens; // the tool-call segment's tokens
  std::vector<std::string> queries;
};
struct Answer {
  std::vector<std::string> tokens;
};
using EpisodeAction = std::variant<GenerateThought, InvokeSearch, Answer>;

class LimitExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Deterministic transition: appends the action tokens (plus the retrieved
// observation tokens for a search action) to the history and advances the
// counters. Throws LimitExceeded when a search action would exceed
// limits.max_tool_calls.
EpisodeState transition(const EpisodeState& state, const EpisodeAction& action,
                        const std::vector<std::string>& retrieved_tokens,
                        const EpisodeLimits& limits);

// Line-delimited JSON loaders; malformed lines are reported with their
// 1-based line number, duplicate docIds by id.
Corpus load_corpus(const std::string& path);
std::vector<QAItem> load_dataset(const std::string& path);
void save_corpus(const std::string& path, const Corpus& corpus);
void save_dataset(const std::string& path, const std::vector<QAItem>& items);

struct SearchHit {
  std::string doc_id;
  std::string snippet;
};

// Pluggable search seam: a tool takes {query, k} and returns ranked hits.
class SearchTool {
 public:
  virtual ~SearchTool() = default;
  virtual std::vector<SearchHit> run(const std::string& query, int k) const = 0;
};

// Local corpus-backed tool; snippets are the first `snippet_tokens` tokens of
// the document body, sanitized so they cannot inject tag or marker tokens.
class LocalSearchTool : public SearchTool {
 public:
  LocalSearchTool(const Corpus* corpus, int snippet_tokens);
  std::vector<SearchHit> run(const std::string& query, int k) const override;

 private:
  const Corpus* corpus_;
  int snippet_tokens_;
};

// HTTP tool speaking the same contract: POST {"query":..., "k":...} returns
// {"results":[{"docId":..., "snippet":...}, ...]} ranked.
class RemoteSearchTool : public SearchTool {
 public:
  RemoteSearchTool(std::string endpoint, std::string path = "/search", int timeout_ms = 2000);
  std::vector<SearchHit> run(const std::string& query, int k) const override;

 private:
  std::string endpoint_;
  std::string path_;
  int timeout_ms_;
};

using ToolRegistry = std::map<std::string, std::shared_ptr<SearchTool>>;

ToolRegistry make_local_registry(const Corpus* corpus, int snippet_tokens);
std::set<std::string> registry_names(const ToolRegistry& registry);

std::string sanitize_snippet_token(const std::string& token);

}  // namespace searchrl
