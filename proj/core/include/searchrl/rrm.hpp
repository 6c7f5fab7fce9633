// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "searchrl/trajectory.hpp"

namespace searchrl {

class TemplateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A rendered scoring request for one trajectory. The template must contain
// {trajectory}; {question} and {atom_count} are optional placeholders.
struct ScoringRequest {
  std::string prompt_text;      // template with placeholders substituted
  std::string trajectory_text;  // serialized trajectory
  std::size_t atom_count = 0;
};

// Per-atom scores in [0,1], one per atomic thought of the trajectory.
struct AtomicScoreSet {
  std::vector<double> scores;
};

ScoringRequest build_scoring_prompt(const std::string& prompt_template, const Trajectory& traj);

// Deterministic stand-in scorer so the pipeline runs offline. Per atom:
//   0                                     if the body is empty, else
//   0.45*len_band + 0.25*label_quality + 0.30*novelty
// len_band      = min(body_tokens, 8) / 8
// label_quality = 1 if the label is >= 3 chars, alphanumeric, and starts
//                 with a letter; 0.4 otherwise
// novelty       = 1 - max Jaccard overlap of the body's distinct-token set
//                 with any earlier atom's (1 for the first atom)
AtomicScoreSet score_heuristic(const Trajectory& traj);

struct RrmConfig {
  std::string endpoint;      // e.g. "http://127.0.0.1:8080"
  std::string path = "/v1/chat/completions";
  std::string model;
  std::string auth_token;    // sent as a bearer token when non-empty
  int timeout_ms = 2000;
  int retries = 3;
  int max_inflight = 4;
};

enum class RemoteScoreStatus { ok, transport_failed, parse_failed };

// Remote scoring outcome. `scores` is present only on success; the caller
// degrades to score_heuristic (and then to r_atom = 0) on failure.
struct RemoteScoreResult {
  RemoteScoreStatus status = RemoteScoreStatus::transport_failed;
  std::optional<AtomicScoreSet> scores;
  std::string message;
};

// HTTP client for a chat-completion style scoring service. The reply content
// must contain a line "scores: s1, s2, ..." with exactly atom_count values
// in [0,1]; out-of-range or miscounted scores are a parse failure, never
// silently clamped or padded. Bounded retries on transport errors; at most
// `max_inflight` requests are in flight across threads.
class RrmClient {
 public:
  explicit RrmClient(RrmConfig config);
  ~RrmClient();

  RrmClient(const RrmClient&) = delete;
  RrmClient& operator=(const RrmClient&) = delete;

  RemoteScoreResult score(const ScoringRequest& request) const;

  const RrmConfig& config() const { return config_; }

 private:
  RrmConfig config_;
  struct Gate;
  std::unique_ptr<Gate> gate_;
};

// Parses "scores: 0.7, 0.3" style content. Exposed for tests.
RemoteScoreResult parse_score_reply(const std::string& content, std::size_t atom_count);

extern const char kDefaultScoringTemplate[];

}  // namespace searchrl
