// SPDX-License-Identifier: Apache-2.0
#include "searchrl/trajectory.hpp"

#include <algorithm>
#include <cctype>

#include <json.hpp>

#include "searchrl/text.hpp"

namespace searchrl {

const std::set<std::string> kDefaultToolRegistry = {"web_search"};

namespace {

using nlohmann::json;

bool is_doc_marker(std::string_view token) {
  return token.size() >= 3 && token.front() == '[' && token.back() == ']';
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// Fills tool_name/queries/payload_ok from the raw payload text between
// <tool_call> tags. Malformed payloads are carried, not rejected.
void parse_tool_payload(std::string_view payload_text, ToolCall& call) {
  json j = json::parse(payload_text, nullptr, /*allow_exceptions=*/false);
  call.payload_ok = false;
  if (j.is_discarded() || !j.is_object()) return;
  if (!j.contains("name") || !j["name"].is_string()) return;
  if (!j.contains("arguments") || !j["arguments"].is_object()) return;
  const json& args = j["arguments"];
  if (!args.contains("queries") || !args["queries"].is_array() || args["queries"].empty()) return;
  std::vector<std::string> queries;
  for (const json& q : args["queries"]) {
    if (!q.is_string()) return;
    queries.push_back(trim(q.get<std::string>()));
  }
  call.tool_name = j["name"].get<std::string>();
  call.queries = std::move(queries);
  call.payload_ok = true;
}

std::vector<RetrievedDoc> parse_response_docs(const std::vector<std::string>& tokens,
                                              std::size_t begin, std::size_t end) {
  std::vector<RetrievedDoc> docs;
  std::vector<std::string> snippet;
  auto flush = [&] {
    if (!docs.empty()) {
      docs.back().snippet = join_tokens(snippet);
    }
    snippet.clear();
  };
  for (std::size_t i = begin; i < end; ++i) {
    const std::string& tok = tokens[i];
    if (is_doc_marker(tok)) {
      flush();
      docs.push_back({tok.substr(1, tok.size() - 2), ""});
    } else if (!docs.empty()) {
      snippet.push_back(tok);
    } else {
      // Content before the first [docId] marker: keep it as one unnamed doc.
      docs.push_back({"", ""});
      snippet.push_back(tok);
    }
  }
  flush();
  return docs;
}

struct Parser {
  const std::vector<std::string>& toks;
  const TagSchema& schema;
  std::size_t pos = 0;

  [[noreturn]] void fail(const std::string& msg, std::size_t at) const {
    throw ParseError(msg, at);
  }

  bool done() const { return pos >= toks.size(); }

  const std::string& cur() const { return toks[pos]; }

  // Consumes tokens until the given close tag at segment nesting depth 0.
  // Any other tag token inside is an error.
  std::size_t scan_flat_until(const std::string& close_name) {
    while (!done()) {
      const std::string& t = cur();
      if (is_tag_token(t)) {
        if (is_close_tag(t) && tag_name(t) == close_name) return pos;
        fail("unexpected tag <" + std::string(tag_name(t)) + "> inside <" +
                 close_name + "> block", pos);
      }
      ++pos;
    }
    fail("unclosed <" + close_name + "> block", toks.size());
  }

  ThinkBlock parse_think() {
    ThinkBlock block;
    std::size_t open_pos = pos;
    ++pos; // <think>
    while (true) {
      if (done()) fail("unclosed <" + schema.think + "> block", toks.size());
      const std::string& t = cur();
      if (!is_tag_token(t)) {
        ++pos;
        continue;
      }
      std::string name(tag_name(t));
      if (is_close_tag(t)) {
        if (name == schema.think) break;
        fail("close tag </" + name + "> without matching open", pos);
      }
      if (schema.is_reserved(name)) {
        fail("reserved tag <" + name + "> nested inside think block", pos);
      }
      // Atomic thought.
      AtomicThought atom;
      atom.label = name;
      std::size_t atom_open = pos;
      ++pos;
      std::vector<std::string> body;
      while (true) {
        if (done()) fail("unclosed atomic thought <" + name + ">", toks.size());
        const std::string& bt = cur();
        if (is_tag_token(bt)) {
          if (is_close_tag(bt) && tag_name(bt) == name) break;
          fail("unexpected tag inside atomic thought <" + name + ">", pos);
        }
        body.push_back(bt);
        ++pos;
      }
      atom.body = join_tokens(body);
      atom.token_span = {atom_open, pos + 1};
      block.atoms.push_back(std::move(atom));
      ++pos; // </Label>
    }
    block.token_span = {open_pos, pos + 1};
    ++pos; // </think>
    return block;
  }
};

}  // namespace

bool Trajectory::has_answer() const {
  return !segments.empty() && std::holds_alternative<AnswerBlock>(segments.back());
}

std::size_t Trajectory::tool_call_count() const {
  std::size_t n = 0;
  for (const Segment& s : segments) n += std::holds_alternative<ToolCall>(s) ? 1 : 0;
  return n;
}

Trajectory parse_trajectory(std::string_view text, const TagSchema& schema) {
  Trajectory traj;
  traj.tokens = tokenize(text);
  traj.origin.assign(traj.tokens.size(), TokenOrigin::policy);

  Parser p{traj.tokens, schema};
  bool answered = false;
  while (!p.done()) {
    const std::string& t = p.cur();
    if (answered) p.fail("content after final answer block", p.pos);
    if (!is_tag_token(t)) p.fail("text outside tags at top level", p.pos);
    if (is_close_tag(t)) p.fail("close tag without matching open", p.pos);
    std::string name(tag_name(t));

    if (name == schema.think) {
      traj.segments.emplace_back(p.parse_think());
    } else if (name == schema.tool_call) {
      std::size_t open_pos = p.pos++;
      std::size_t close_pos = p.scan_flat_until(schema.tool_call);
      ToolCall call;
      std::vector<std::string> payload(traj.tokens.begin() + open_pos + 1,
                                       traj.tokens.begin() + close_pos);
      parse_tool_payload(join_tokens(payload), call);
      call.token_span = {open_pos, close_pos + 1};
      traj.segments.emplace_back(std::move(call));
      p.pos = close_pos + 1;
    } else if (name == schema.tool_response) {
      if (traj.segments.empty() || !std::holds_alternative<ToolCall>(traj.segments.back())) {
        p.fail("tool response without preceding tool call", p.pos);
      }
      std::size_t open_pos = p.pos++;
      std::size_t close_pos = p.scan_flat_until(schema.tool_response);
      ToolResponse resp;
      resp.documents = parse_response_docs(traj.tokens, open_pos + 1, close_pos);
      resp.token_span = {open_pos, close_pos + 1};
      traj.segments.emplace_back(std::move(resp));
      p.pos = close_pos + 1;
      for (std::size_t i = open_pos; i <= close_pos; ++i) {
        traj.origin[i] = TokenOrigin::environment;
      }
    } else if (name == schema.answer) {
      std::size_t open_pos = p.pos++;
      std::size_t close_pos = p.scan_flat_until(schema.answer);
      AnswerBlock ans;
      ans.text = join_tokens({traj.tokens.begin() + open_pos + 1,
                              traj.tokens.begin() + close_pos});
      ans.token_span = {open_pos, close_pos + 1};
      traj.segments.emplace_back(std::move(ans));
      p.pos = close_pos + 1;
      answered = true;
    } else {
      p.fail("unknown top-level tag <" + name + ">", p.pos);
    }

    if (traj.segments.size() == 1 &&
        !std::holds_alternative<ThinkBlock>(traj.segments.front())) {
      throw ParseError("trajectory must start with a think block", 0);
    }
  }
  traj.terminal = answered;
  return traj;
}

std::string serialize(const Trajectory& traj) { return join_tokens(traj.tokens); }

namespace {

TokenSpan span_of(const Segment& s) {
  return std::visit([](const auto& seg) { return seg.token_span; }, s);
}

}  // namespace

FormatVerdict validate_format(const Trajectory& traj, const EpisodeLimits& limits,
                              const std::set<std::string>& tool_registry,
                              const TagSchema& schema) {
  std::optional<FormatViolation> first;
  auto violate = [&](const std::string& rule, std::size_t pos) {
    if (!first || pos < first->token_pos) first = FormatViolation{rule, pos};
  };

  if (traj.segments.empty() || !std::holds_alternative<ThinkBlock>(traj.segments.front())) {
    violate("first-segment-think", 0);
  }

  std::size_t expect_begin = 0;
  int tool_calls = 0;
  for (std::size_t i = 0; i < traj.segments.size() && !first; ++i) {
    const Segment& seg = traj.segments[i];
    TokenSpan span = span_of(seg);
    if (span.begin != expect_begin || span.end > traj.tokens.size() || span.empty()) {
      violate("span-structure", span.begin);
      break;
    }
    expect_begin = span.end;

    bool is_response = std::holds_alternative<ToolResponse>(seg);
    for (std::size_t t = span.begin; t < span.end; ++t) {
      bool env = traj.origin[t] == TokenOrigin::environment;
      if (env != is_response) {
        violate("origin-flags", t);
        break;
      }
    }

    if (const auto* think = std::get_if<ThinkBlock>(&seg)) {
      std::size_t prev_end = think->token_span.begin + 1;
      for (const AtomicThought& atom : think->atoms) {
        bool inside = atom.token_span.begin >= prev_end &&
                      atom.token_span.end < think->token_span.end &&
                      !atom.token_span.empty();
        bool label_ok = !atom.label.empty() && !schema.is_reserved(atom.label) &&
                        atom.label.find('<') == std::string::npos &&
                        atom.label.find('>') == std::string::npos;
        if (!inside || !label_ok) {
          violate("atom-structure", atom.token_span.begin);
          break;
        }
        prev_end = atom.token_span.end;
      }
    } else if (const auto* call = std::get_if<ToolCall>(&seg)) {
      ++tool_calls;
      if (!call->payload_ok || call->queries.empty()) {
        violate("bad-tool-call", span.begin);
      } else if (!tool_registry.count(call->tool_name)) {
        violate("unknown-tool", span.begin);
      } else if (tool_calls > limits.max_tool_calls) {
        violate("tool-cap", span.begin);
      }
    } else if (is_response) {
      if (i == 0 || !std::holds_alternative<ToolCall>(traj.segments[i - 1])) {
        violate("response-without-call", span.begin);
      }
    } else if (std::holds_alternative<AnswerBlock>(seg)) {
      if (i + 1 != traj.segments.size()) violate("answer-not-final", span.begin);
    }
  }
  if (!first && expect_begin != traj.tokens.size()) {
    violate("span-structure", expect_begin);
  }
  if (!first && !traj.has_answer()) {
    violate("missing-answer", traj.tokens.size());
  }
  if (!first && traj.has_answer() && !traj.terminal) {
    violate("terminal-flag", traj.tokens.size());
  }

  FormatVerdict verdict;
  verdict.ok = !first.has_value();
  verdict.first_violation = std::move(first);
  return verdict;
}

std::vector<AtomicThought> extract_atomic_thoughts(const Trajectory& traj) {
  std::vector<AtomicThought> atoms;
  for (const Segment& seg : traj.segments) {
    if (const auto* think = std::get_if<ThinkBlock>(&seg)) {
      atoms.insert(atoms.end(), think->atoms.begin(), think->atoms.end());
    }
  }
  return atoms;
}

std::vector<bool> build_loss_mask(const Trajectory& traj) {
  std::vector<bool> mask(traj.tokens.size());
  for (std::size_t i = 0; i < traj.tokens.size(); ++i) {
    mask[i] = traj.origin[i] == TokenOrigin::policy;
  }
  return mask;
}

std::vector<std::string> render_tool_call_payload(const std::string& tool_name,
                                                  const std::vector<std::string>& queries) {
  nlohmann::json args;
  args["queries"] = queries;
  nlohmann::json j;
  j["name"] = tool_name;
  j["arguments"] = args;
  // dump() emits no spaces, so the payload stays a single token.
  return {j.dump()};
}

TrajectoryBuilder::TrajectoryBuilder(std::string instruction, TagSchema schema)
    : schema_(std::move(schema)) {
  traj_.instruction = std::move(instruction);
}

void TrajectoryBuilder::push_policy(const std::string& token) {
  traj_.tokens.push_back(token);
  traj_.origin.push_back(TokenOrigin::policy);
}

void TrajectoryBuilder::append_think(
    const std::vector<std::pair<std::string, std::string>>& atoms) {
  std::vector<std::string> content;
  for (const auto& [label, body] : atoms) {
    content.push_back("<" + label + ">");
    for (const std::string& w : tokenize(body)) content.push_back(w);
    content.push_back("</" + label + ">");
  }
  append_think_tokens(content);
}

void TrajectoryBuilder::append_think_tokens(const std::vector<std::string>& content_tokens) {
  ThinkBlock block;
  std::size_t open_pos = traj_.tokens.size();
  push_policy("<" + schema_.think + ">");
  std::optional<std::size_t> atom_open;
  std::string atom_label;
  std::vector<std::string> atom_body;
  for (const std::string& tok : content_tokens) {
    std::size_t here = traj_.tokens.size();
    push_policy(tok);
    if (!is_tag_token(tok)) {
      if (atom_open) atom_body.push_back(tok);
      continue;
    }
    if (is_close_tag(tok)) {
      block.atoms.push_back({atom_label, join_tokens(atom_body), {*atom_open, here + 1}});
      atom_open.reset();
      atom_body.clear();
    } else {
      atom_open = here;
      atom_label = std::string(tag_name(tok));
    }
  }
  push_policy("</" + schema_.think + ">");
  block.token_span = {open_pos, traj_.tokens.size()};
  traj_.segments.emplace_back(std::move(block));
}

void TrajectoryBuilder::append_tool_call(const std::string& tool_name,
                                         const std::vector<std::string>& queries) {
  ToolCall call;
  call.tool_name = tool_name;
  call.queries = queries;
  call.payload_ok = !queries.empty();
  std::size_t open_pos = traj_.tokens.size();
  push_policy("<" + schema_.tool_call + ">");
  for (const std::string& tok : render_tool_call_payload(tool_name, queries)) {
    push_policy(tok);
  }
  push_policy("</" + schema_.tool_call + ">");
  call.token_span = {open_pos, traj_.tokens.size()};
  traj_.segments.emplace_back(std::move(call));
}

void TrajectoryBuilder::append_tool_call_tokens(const std::vector<std::string>& payload_tokens,
                                                const std::string& tool_name,
                                                const std::vector<std::string>& queries,
                                                bool payload_ok) {
  ToolCall call;
  call.tool_name = tool_name;
  call.queries = queries;
  call.payload_ok = payload_ok;
  std::size_t open_pos = traj_.tokens.size();
  push_policy("<" + schema_.tool_call + ">");
  for (const std::string& tok : payload_tokens) push_policy(tok);
  push_policy("</" + schema_.tool_call + ">");
  call.token_span = {open_pos, traj_.tokens.size()};
  traj_.segments.emplace_back(std::move(call));
}

void TrajectoryBuilder::append_tool_response(const std::vector<RetrievedDoc>& docs) {
  ToolResponse resp;
  resp.documents = docs;
  std::size_t open_pos = traj_.tokens.size();
  auto push_env = [&](const std::string& tok) {
    traj_.tokens.push_back(tok);
    traj_.origin.push_back(TokenOrigin::environment);
  };
  push_env("<" + schema_.tool_response + ">");
  for (const RetrievedDoc& doc : docs) {
    push_env("[" + doc.doc_id + "]");
    for (const std::string& tok : tokenize(doc.snippet)) push_env(tok);
  }
  push_env("</" + schema_.tool_response + ">");
  resp.token_span = {open_pos, traj_.tokens.size()};
  traj_.segments.emplace_back(std::move(resp));
}

void TrajectoryBuilder::append_answer(const std::string& text) {
  AnswerBlock ans;
  std::size_t open_pos = traj_.tokens.size();
  push_policy("<" + schema_.answer + ">");
  std::vector<std::string> body = tokenize(text);
  for (const std::string& tok : body) push_policy(tok);
  push_policy("</" + schema_.answer + ">");
  ans.text = join_tokens(body);
  ans.token_span = {open_pos, traj_.tokens.size()};
  traj_.segments.emplace_back(std::move(ans));
  traj_.terminal = true;
}

void TrajectoryBuilder::mark_terminal() { traj_.terminal = true; }

Trajectory TrajectoryBuilder::finish() { return std::move(traj_); }

}  // namespace searchrl
