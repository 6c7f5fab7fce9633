// SPDX-License-Identifier: Apache-2.0
#include "searchrl/environment.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include <httplib.h>
#include <json.hpp>

#include "searchrl/text.hpp"

namespace searchrl {

namespace {

using nlohmann::json;

bool valid_doc_id(const std::string& id) {
  if (id.empty()) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.' ||
           c == ':';
  });
}

std::set<std::string> doc_terms(const Document& doc) {
  std::set<std::string> terms;
  for (const std::string& w : normalize_words(doc.title)) terms.insert(w);
  for (const std::string& w : normalize_words(doc.body)) terms.insert(w);
  return terms;
}

[[noreturn]] void line_error(const std::string& path, std::size_t line_no,
                             const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
}

}  // namespace

Corpus Corpus::build(std::vector<Document> docs) {
  Corpus corpus;
  corpus.documents = std::move(docs);
  std::set<std::string> seen;
  for (std::size_t i = 0; i < corpus.documents.size(); ++i) {
    const Document& doc = corpus.documents[i];
    if (!valid_doc_id(doc.doc_id)) {
      throw std::runtime_error("corpus: invalid docId '" + doc.doc_id + "'");
    }
    if (!seen.insert(doc.doc_id).second) {
      throw std::runtime_error("corpus: duplicate docId '" + doc.doc_id + "'");
    }
    for (const std::string& term : doc_terms(doc)) {
      corpus.index[term].push_back(i);
    }
  }
  return corpus;
}

const Document* Corpus::find(const std::string& doc_id) const {
  for (const Document& d : documents) {
    if (d.doc_id == doc_id) return &d;
  }
  return nullptr;
}

std::vector<ScoredDoc> search(const Corpus& corpus, const std::string& query, int k) {
  if (k < 1) throw std::invalid_argument("search: k must be >= 1");
  std::vector<std::string> words = normalize_words(query);
  std::set<std::string> terms(words.begin(), words.end());
  if (terms.empty()) return {};

  std::map<std::size_t, std::size_t> overlap; // doc index -> matched term count
  for (const std::string& term : terms) {
    auto it = corpus.index.find(term);
    if (it == corpus.index.end()) continue;
    for (std::size_t doc : it->second) ++overlap[doc];
  }

  std::vector<ScoredDoc> scored;
  scored.reserve(overlap.size());
  for (const auto& [doc, hits] : overlap) {
    scored.push_back({doc, static_cast<double>(hits) / static_cast<double>(terms.size())});
  }
  std::sort(scored.begin(), scored.end(), [&](const ScoredDoc& a, const ScoredDoc& b) {
    if (a.score != b.score) return a.score > b.score;
    return corpus.documents[a.doc_index].doc_id < corpus.documents[b.doc_index].doc_id;
  });
  if (scored.size() > static_cast<std::size_t>(k)) scored.resize(static_cast<std::size_t>(k));
  return scored;
}

EpisodeState transition(const EpisodeState& state, const EpisodeAction& action,
                        const std::vector<std::string>& retrieved_tokens,
                        const EpisodeLimits& limits) {
  EpisodeState next = state;
  next.step_index += 1;
  if (!std::holds_alternative<InvokeSearch>(action) && !retrieved_tokens.empty()) {
    throw std::invalid_argument("transition: retrieved tokens only accompany a search action");
  }
  if (const auto* search_action = std::get_if<InvokeSearch>(&action)) {
    if (state.tool_calls_used + 1 > limits.max_tool_calls) {
      throw LimitExceeded("tool call limit of " + std::to_string(limits.max_tool_calls) +
                          " exceeded");
    }
    next.tool_calls_used += 1;
    next.history.insert(next.history.end(), search_action->tokens.begin(),
                        search_action->tokens.end());
    next.history.insert(next.history.end(), retrieved_tokens.begin(), retrieved_tokens.end());
  } else if (const auto* thought = std::get_if<GenerateThought>(&action)) {
    next.history.insert(next.history.end(), thought->tokens.begin(), thought->tokens.end());
  } else {
    const auto& answer = std::get<Answer>(action);
    next.history.insert(next.history.end(), answer.tokens.begin(), answer.tokens.end());
  }
  return next;
}

Corpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_corpus: cannot open " + path);
  std::vector<Document> docs;
  std::string line;
  std::size_t line_no = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) line_error(path, line_no, "malformed JSON record");
    if (!j.contains("docId") || !j["docId"].is_string()) {
      line_error(path, line_no, "missing string field 'docId'");
    }
    Document doc;
    doc.doc_id = j["docId"].get<std::string>();
    doc.title = j.value("title", std::string{});
    doc.body = j.value("body", std::string{});
    if (!valid_doc_id(doc.doc_id)) {
      line_error(path, line_no, "invalid docId '" + doc.doc_id + "'");
    }
    if (!seen.insert(doc.doc_id).second) {
      line_error(path, line_no, "duplicate docId '" + doc.doc_id + "'");
    }
    docs.push_back(std::move(doc));
  }
  return Corpus::build(std::move(docs));
}

std::vector<QAItem> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_dataset: cannot open " + path);
  std::vector<QAItem> items;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) line_error(path, line_no, "malformed JSON record");
    if (!j.contains("question") || !j["question"].is_string()) {
      line_error(path, line_no, "missing string field 'question'");
    }
    QAItem item;
    item.question = j["question"].get<std::string>();
    if (!j.contains("referenceAnswers") || !j["referenceAnswers"].is_array() ||
        j["referenceAnswers"].empty()) {
      line_error(path, line_no, "'referenceAnswers' must be a non-empty array");
    }
    for (const json& a : j["referenceAnswers"]) {
      if (!a.is_string()) line_error(path, line_no, "non-string reference answer");
      item.reference_answers.push_back(a.get<std::string>());
    }
    if (j.contains("requiredDocIds")) {
      for (const json& d : j["requiredDocIds"]) {
        if (!d.is_string()) line_error(path, line_no, "non-string requiredDocId");
        item.required_doc_ids.push_back(d.get<std::string>());
      }
    }
    items.push_back(std::move(item));
  }
  return items;
}

void save_corpus(const std::string& path, const Corpus& corpus) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_corpus: cannot open " + path);
  for (const Document& d : corpus.documents) {
    json j;
    j["docId"] = d.doc_id;
    j["title"] = d.title;
    j["body"] = d.body;
    out << j.dump() << "\n";
  }
}

void save_dataset(const std::string& path, const std::vector<QAItem>& items) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_dataset: cannot open " + path);
  for (const QAItem& item : items) {
    json j;
    j["question"] = item.question;
    j["referenceAnswers"] = item.reference_answers;
    j["requiredDocIds"] = item.required_doc_ids;
    out << j.dump() << "\n";
  }
}

std::string sanitize_snippet_token(const std::string& token) {
  std::string out;
  out.reserve(token.size());
  for (char c : token) {
    if (c != '<' && c != '>' && c != '[' && c != ']') out.push_back(c);
  }
  return out;
}

LocalSearchTool::LocalSearchTool(const Corpus* corpus, int snippet_tokens)
    : corpus_(corpus), snippet_tokens_(snippet_tokens) {}

std::vector<SearchHit> LocalSearchTool::run(const std::string& query, int k) const {
  std::vector<SearchHit> hits;
  for (const ScoredDoc& sd : search(*corpus_, query, k)) {
    const Document& doc = corpus_->documents[sd.doc_index];
    std::vector<std::string> body = tokenize(doc.body);
    if (body.size() > static_cast<std::size_t>(snippet_tokens_)) {
      body.resize(static_cast<std::size_t>(snippet_tokens_));
    }
    std::vector<std::string> cleaned;
    for (const std::string& tok : body) {
      std::string s = sanitize_snippet_token(tok);
      if (!s.empty()) cleaned.push_back(std::move(s));
    }
    hits.push_back({doc.doc_id, join_tokens(cleaned)});
  }
  return hits;
}

RemoteSearchTool::RemoteSearchTool(std::string endpoint, std::string path, int timeout_ms)
    : endpoint_(std::move(endpoint)), path_(std::move(path)), timeout_ms_(timeout_ms) {}

std::vector<SearchHit> RemoteSearchTool::run(const std::string& query, int k) const {
  httplib::Client client(endpoint_);
  client.set_connection_timeout(0, timeout_ms_ * 1000);
  client.set_read_timeout(0, timeout_ms_ * 1000);
  json body;
  body["query"] = query;
  body["k"] = k;
  httplib::Result res = client.Post(path_, body.dump(), "application/json");
  if (!res || res->status != 200) {
    throw std::runtime_error("remote search failed: " +
                             (!res ? httplib::to_string(res.error())
                                   : "http status " + std::to_string(res->status)));
  }
  json reply = json::parse(res->body, nullptr, false);
  if (reply.is_discarded() || !reply.contains("results") || !reply["results"].is_array()) {
    throw std::runtime_error("remote search: malformed reply");
  }
  std::vector<SearchHit> hits;
  for (const json& r : reply["results"]) {
    hits.push_back({r.value("docId", std::string{}), r.value("snippet", std::string{})});
  }
  return hits;
}

ToolRegistry make_local_registry(const Corpus* corpus, int snippet_tokens) {
  ToolRegistry registry;
  registry["web_search"] = std::make_shared<LocalSearchTool>(corpus, snippet_tokens);
  return registry;
}

std::set<std::string> registry_names(const ToolRegistry& registry) {
  std::set<std::string> names;
  for (const auto& [name, tool] : registry) names.insert(name);
  return names;
}

}  // namespace searchrl
