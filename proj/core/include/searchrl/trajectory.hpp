// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace searchrl {

// Half-open [begin, end) range into a trajectory's token sequence.
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  bool empty() const { return begin == end; }
};

// The five tag pairs of the trajectory grammar. Atomic thoughts use an open
// label set: any <Label>...</Label> pair nested inside a think block is an
// atomic thought, as long as the label is not one of the reserved names below.
struct TagSchema {
  std::string think = "think";
  std::string tool_call = "tool_call";
  std::string tool_response = "tool_response";
  std::string answer = "answer";

  bool is_reserved(std::string_view name) const {
    return name == think || name == tool_call || name == tool_response ||
           name == answer;
  }
};

struct AtomicThought {
  std::string label;
  std::string body;     // body text, tag tokens excluded
  TokenSpan token_span; // includes the atom's open/close tag tokens
};

struct ThinkBlock {
  std::vector<AtomicThought> atoms;
  TokenSpan token_span;
};

struct ToolCall {
  std::string tool_name;
  std::vector<std::string> queries;
  TokenSpan token_span;
  bool payload_ok = false; // payload parsed as {"name":..., "arguments":{"queries":[...]}}
};

struct RetrievedDoc {
  std::string doc_id;
  std::string snippet;
};

struct ToolResponse {
  std::vector<RetrievedDoc> documents;
  TokenSpan token_span;
};

struct AnswerBlock {
  std::string text;
  TokenSpan token_span;
};

using Segment = std::variant<ThinkBlock, ToolCall, ToolResponse, AnswerBlock>;

enum class TokenOrigin : unsigned char { policy = 0, environment = 1 };

struct Trajectory {
  std::string instruction;
  std::vector<std::string> tokens;   // canonical token sequence of the response
  std::vector<TokenOrigin> origin;   // one flag per token
  std::vector<Segment> segments;
  bool terminal = false;

  bool has_answer() const;
  std::size_t tool_call_count() const;
};

struct FormatViolation {
  std::string rule;       // e.g. "missing-answer", "tool-cap", "bad-tool-call"
  std::size_t token_pos;
};

struct FormatVerdict {
  bool ok = true;
  std::optional<FormatViolation> first_violation;
};

struct EpisodeLimits {
  int max_tool_calls = 10;
  int max_steps = 12; // segment-level interaction cap per episode
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::string message, std::size_t token_pos)
      : std::runtime_error(std::move(message)), token_pos_(token_pos) {}
  std::size_t token_pos() const { return token_pos_; }

 private:
  std::size_t token_pos_;
};

extern const std::set<std::string> kDefaultToolRegistry; // {"web_search"}

// Parses tagged trajectory text into a structured Trajectory.
// Throws ParseError (with token position) on unclosed, mismatched or
// interleaved tags, unknown top-level tags, text outside tags, a tool
// response that does not follow a tool call, or an answer block that is
// not the final segment. A syntactically correct but semantically bad
// tool-call payload does NOT throw; it surfaces via validate_format.
Trajectory parse_trajectory(std::string_view text, const TagSchema& schema = {});

// Joins the token sequence back into canonical single-space-separated text.
// parse -> serialize is the identity on canonically spaced input.
std::string serialize(const Trajectory& traj);

// Checks everything the parser cannot: an answer block exists, the tool-call
// count is within limits.max_tool_calls, payloads are well-formed, tool names
// are registered, and (for programmatically built trajectories) the
// structural invariants hold. Returns a verdict, never throws.
FormatVerdict validate_format(const Trajectory& traj, const EpisodeLimits& limits,
                              const std::set<std::string>& tool_registry = kDefaultToolRegistry,
                              const TagSchema& schema = {});

// All atomic thoughts in document order, concatenated across think blocks.
std::vector<AtomicThought> extract_atomic_thoughts(const Trajectory& traj);

// mask[i] == true iff token i is policy-origin (trainable). Tool-response
// spans, which the environment injects, come out false.
std::vector<bool> build_loss_mask(const Trajectory& traj);

// Incremental construction with consistent tokens/origin/segments; used by
// the episode runner and tests. Tokens passed to the append_* calls are the
// segment contents WITHOUT the enclosing tags; the builder adds those.
class TrajectoryBuilder {
 public:
  explicit TrajectoryBuilder(std::string instruction, TagSchema schema = {});

  void append_think(const std::vector<std::pair<std::string, std::string>>& atoms);
  // Raw think-block content tokens (words and atom tags already interleaved).
  void append_think_tokens(const std::vector<std::string>& content_tokens);
  void append_tool_call(const std::string& tool_name, const std::vector<std::string>& queries);
  // Raw payload tokens plus the already-parsed call fields.
  void append_tool_call_tokens(const std::vector<std::string>& payload_tokens,
                               const std::string& tool_name,
                               const std::vector<std::string>& queries, bool payload_ok);
  void append_tool_response(const std::vector<RetrievedDoc>& docs);
  void append_answer(const std::string& text);
  void mark_terminal();

  const Trajectory& peek() const { return traj_; }
  Trajectory finish();

 private:
  void push_policy(const std::string& token);
  Trajectory traj_;
  TagSchema schema_;
};

// Canonical JSON payload text for a web-search style tool call, tokenized.
std::vector<std::string> render_tool_call_payload(const std::string& tool_name,
                                                  const std::vector<std::string>& queries);

}  // namespace searchrl
