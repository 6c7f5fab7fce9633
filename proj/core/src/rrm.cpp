// SPDX-License-Identifier: Apache-2.0
#include "searchrl/rrm.hpp"

#include <algorithm>
#include <cctype>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "searchrl/text.hpp"

namespace searchrl {

const char kDefaultScoringTemplate[] =
    "You are grading the labeled reasoning steps of a research assistant.\n"
    "Question: {question}\n"
    "Trajectory: {trajectory}\n"
    "There are {atom_count} labeled reasoning steps. Score each step between\n"
    "0 and 1 for usefulness and reply with one line exactly of the form:\n"
    "scores: s1, s2, ...\n";

namespace {

void replace_all(std::string& text, const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  while ((pos = text.find(key, pos)) != std::string::npos) {
    text.replace(pos, key.size(), value);
    pos += value.size();
  }
}

}  // namespace

ScoringRequest build_scoring_prompt(const std::string& prompt_template, const Trajectory& traj) {
  if (prompt_template.find("{trajectory}") == std::string::npos) {
    throw TemplateError("scoring template is missing the {trajectory} placeholder");
  }
  ScoringRequest req;
  req.trajectory_text = serialize(traj);
  req.atom_count = extract_atomic_thoughts(traj).size();
  req.prompt_text = prompt_template;
  replace_all(req.prompt_text, "{trajectory}", req.trajectory_text);
  replace_all(req.prompt_text, "{question}", traj.instruction);
  replace_all(req.prompt_text, "{atom_count}", std::to_string(req.atom_count));
  return req;
}

namespace {

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  for (const std::string& w : a) inter += b.count(w);
  std::size_t uni = a.size() + b.size() - inter;
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

bool label_quality_high(const std::string& label) {
  if (label.size() < 3) return false;
  if (!std::isalpha(static_cast<unsigned char>(label.front()))) return false;
  return std::all_of(label.begin(), label.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c));
  });
}

}  // namespace

AtomicScoreSet score_heuristic(const Trajectory& traj) {
  std::vector<AtomicThought> atoms = extract_atomic_thoughts(traj);
  AtomicScoreSet out;
  out.scores.reserve(atoms.size());
  std::vector<std::set<std::string>> seen;
  for (const AtomicThought& atom : atoms) {
    std::vector<std::string> body = tokenize(atom.body);
    std::set<std::string> body_set(body.begin(), body.end());
    if (body.empty()) {
      out.scores.push_back(0.0);
      seen.push_back(std::move(body_set));
      continue;
    }
    double len_band = static_cast<double>(std::min<std::size_t>(body.size(), 8)) / 8.0;
    double label_quality = label_quality_high(atom.label) ? 1.0 : 0.4;
    double max_overlap = 0.0;
    for (const auto& prev : seen) {
      max_overlap = std::max(max_overlap, jaccard(body_set, prev));
    }
    double novelty = 1.0 - max_overlap;
    out.scores.push_back(0.45 * len_band + 0.25 * label_quality + 0.30 * novelty);
    seen.push_back(std::move(body_set));
  }
  return out;
}

RemoteScoreResult parse_score_reply(const std::string& content, std::size_t atom_count) {
  RemoteScoreResult result;
  result.status = RemoteScoreStatus::parse_failed;

  std::istringstream lines(content);
  std::string line;
  while (std::getline(lines, line)) {
    std::size_t at = line.find("scores:");
    if (at == std::string::npos) continue;
    std::string rest = line.substr(at + 7);
    std::replace(rest.begin(), rest.end(), ',', ' ');
    std::istringstream nums(rest);
    std::vector<double> scores;
    double v;
    while (nums >> v) scores.push_back(v);
    nums.clear();
    std::string trailing;
    nums >> trailing;
    if (!trailing.empty()) {
      result.message = "non-numeric score token '" + trailing + "'";
      return result;
    }
    if (scores.size() != atom_count) {
      result.message = "expected " + std::to_string(atom_count) + " scores, got " +
                       std::to_string(scores.size());
      return result;
    }
    for (double s : scores) {
      if (!(s >= 0.0 && s <= 1.0)) {
        result.message = "score out of [0,1]";
        return result;
      }
    }
    result.status = RemoteScoreStatus::ok;
    result.scores = AtomicScoreSet{std::move(scores)};
    result.message.clear();
    return result;
  }
  result.message = "reply contains no 'scores:' line";
  return result;
}

// Counting gate bounding concurrent in-flight requests.
struct RrmClient::Gate {
  explicit Gate(int slots) : available(slots) {}
  std::mutex mu;
  std::condition_variable cv;
  int available;

  void acquire() {
    std::unique_lock<std::mutex> lock(mu);
    cv.wait(lock, [&] { return available > 0; });
    --available;
  }
  void release() {
    {
      std::lock_guard<std::mutex> lock(mu);
      ++available;
    }
    cv.notify_one();
  }
};

RrmClient::RrmClient(RrmConfig config)
    : config_(std::move(config)), gate_(std::make_unique<Gate>(std::max(1, config_.max_inflight))) {}

RrmClient::~RrmClient() = default;

RemoteScoreResult RrmClient::score(const ScoringRequest& request) const {
  gate_->acquire();
  struct Release {
    Gate* g;
    ~Release() { g->release(); }
  } release{gate_.get()};

  nlohmann::json body;
  body["model"] = config_.model;
  body["messages"] = nlohmann::json::array({
      nlohmann::json{{"role", "user"}, {"content", request.prompt_text}},
  });

  httplib::Client client(config_.endpoint);
  client.set_connection_timeout(0, config_.timeout_ms * 1000);
  client.set_read_timeout(0, config_.timeout_ms * 1000);
  client.set_write_timeout(0, config_.timeout_ms * 1000);
  httplib::Headers headers;
  if (!config_.auth_token.empty()) {
    headers.emplace("Authorization", "Bearer " + config_.auth_token);
  }

  RemoteScoreResult last;
  int attempts = std::max(1, config_.retries);
  for (int attempt = 0; attempt < attempts; ++attempt) {
    httplib::Result res = client.Post(config_.path, headers, body.dump(), "application/json");
    if (!res || res->status != 200) {
      last.status = RemoteScoreStatus::transport_failed;
      last.message = !res ? "transport error: " + httplib::to_string(res.error())
                          : "http status " + std::to_string(res->status);
      continue;
    }
    std::string content = res->body;
    nlohmann::json reply = nlohmann::json::parse(content, nullptr, false);
    if (!reply.is_discarded()) {
      // Chat-completion shape; fall back to the raw body otherwise.
      if (reply.contains("choices") && reply["choices"].is_array() && !reply["choices"].empty()) {
        const nlohmann::json& msg = reply["choices"][0];
        if (msg.contains("message") && msg["message"].contains("content")) {
          content = msg["message"]["content"].get<std::string>();
        }
      } else if (reply.contains("content") && reply["content"].is_string()) {
        content = reply["content"].get<std::string>();
      }
    }
    return parse_score_reply(content, request.atom_count);
  }
  return last;
}

}  // namespace searchrl
