// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <random>
#include <regex>

#include "searchrl/trajectory.hpp"
#include "searchrl/text.hpp"
#include "generators.hpp"

using namespace searchrl;

TEST_CASE("parse: minimal well-formed trajectory") {
  Trajectory t = parse_trajectory("<think> <Plan> find X </Plan> </think> <answer> X </answer>");
  REQUIRE(t.segments.size() == 2);
  const auto& think = std::get<ThinkBlock>(t.segments[0]);
  REQUIRE(think.atoms.size() == 1);
  CHECK(think.atoms[0].label == "Plan");
  CHECK(think.atoms[0].body == "find X");
  CHECK(std::get<AnswerBlock>(t.segments[1]).text == "X");
  CHECK(t.terminal);
}

TEST_CASE("parse: tags glued without whitespace still split") {
  Trajectory t = parse_trajectory("<think><Plan>find X</Plan></think><answer>X</answer>");
  REQUIRE(t.segments.size() == 2);
  CHECK(std::get<ThinkBlock>(t.segments[0]).atoms.size() == 1);
}

TEST_CASE("parse: five-segment trajectory with a search round trip") {
  std::string text =
      "<think> <Plan> locate </Plan> </think> "
      "<tool_call> {\"name\":\"web_search\",\"arguments\":{\"queries\":[\"q\"]}} </tool_call> "
      "<tool_response> [d001] doc text </tool_response> "
      "<think> done </think> "
      "<answer> a </answer>";
  Trajectory t = parse_trajectory(text);
  REQUIRE(t.segments.size() == 5);
  CHECK(std::holds_alternative<ThinkBlock>(t.segments[0]));
  CHECK(std::holds_alternative<ToolCall>(t.segments[1]));
  CHECK(std::holds_alternative<ToolResponse>(t.segments[2]));
  CHECK(std::holds_alternative<ThinkBlock>(t.segments[3]));
  CHECK(std::holds_alternative<AnswerBlock>(t.segments[4]));

  const auto& call = std::get<ToolCall>(t.segments[1]);
  CHECK(call.payload_ok);
  CHECK(call.tool_name == "web_search");
  REQUIRE(call.queries.size() == 1);
  CHECK(call.queries[0] == "q");

  const auto& resp = std::get<ToolResponse>(t.segments[2]);
  REQUIRE(resp.documents.size() == 1);
  CHECK(resp.documents[0].doc_id == "d001");
  CHECK(resp.documents[0].snippet == "doc text");

  CHECK(serialize(t) == text);
}

TEST_CASE("parse: unclosed think is a ParseError at end of input") {
  CHECK_THROWS_AS(parse_trajectory("<think> unclosed"), ParseError);
  try {
    parse_trajectory("<think> unclosed");
  } catch (const ParseError& e) {
    CHECK(e.token_pos() == 2); // one past the final token
  }
}

TEST_CASE("parse: rejections") {
  CHECK_THROWS_AS(parse_trajectory("stray <think> x </think>"), ParseError);
  CHECK_THROWS_AS(parse_trajectory("<zzz> x </zzz>"), ParseError);
  CHECK_THROWS_AS(parse_trajectory("<think> <think> </think> </think>"), ParseError);
  CHECK_THROWS_AS(parse_trajectory("<think> <answer> no </answer> </think>"), ParseError);
  CHECK_THROWS_AS(parse_trajectory("<think> </think> <answer> a </answer> <think> </think>"),
                  ParseError);
  CHECK_THROWS_AS(parse_trajectory("<think> <A> x </B> </think>"), ParseError);
  CHECK_THROWS_AS(parse_trajectory("<think> </think> <tool_response> x </tool_response>"),
                  ParseError);
  CHECK_THROWS_AS(parse_trajectory("<answer> a </answer>"), ParseError); // must start with think
  CHECK_THROWS_AS(parse_trajectory("<think> <A> <B> </B> </A> </think>"), ParseError);
}

TEST_CASE("validate_format: missing answer") {
  Trajectory t = parse_trajectory("<think> x </think>");
  FormatVerdict v = validate_format(t, EpisodeLimits{});
  CHECK_FALSE(v.ok);
  REQUIRE(v.first_violation.has_value());
  CHECK(v.first_violation->rule == "missing-answer");
}

TEST_CASE("validate_format: tool-call cap") {
  std::string text = "<think> </think> ";
  for (int i = 0; i < 11; ++i) {
    text +=
        "<tool_call> {\"name\":\"web_search\",\"arguments\":{\"queries\":[\"q\"]}} "
        "</tool_call> <tool_response> </tool_response> ";
  }
  text += "<answer> a </answer>";
  Trajectory t = parse_trajectory(text);
  EpisodeLimits limits;
  limits.max_tool_calls = 10;
  FormatVerdict v = validate_format(t, limits);
  CHECK_FALSE(v.ok);
  REQUIRE(v.first_violation.has_value());
  CHECK(v.first_violation->rule == "tool-cap");

  // The 10th call is fine.
  limits.max_tool_calls = 11;
  CHECK(validate_format(t, limits).ok);
}

TEST_CASE("validate_format: minimal well-formed trajectory passes") {
  Trajectory t = parse_trajectory("<think> ok </think> <answer> a </answer>");
  CHECK(validate_format(t, EpisodeLimits{}).ok);
}

TEST_CASE("validate_format: bad tool payload and unknown tool") {
  Trajectory bad = parse_trajectory(
      "<think> </think> <tool_call> not json </tool_call> "
      "<tool_response> </tool_response> <answer> a </answer>");
  FormatVerdict v = validate_format(bad, EpisodeLimits{});
  CHECK_FALSE(v.ok);
  CHECK(v.first_violation->rule == "bad-tool-call");

  Trajectory unknown = parse_trajectory(
      "<think> </think> "
      "<tool_call> {\"name\":\"wiki\",\"arguments\":{\"queries\":[\"q\"]}} </tool_call> "
      "<tool_response> </tool_response> <answer> a </answer>");
  v = validate_format(unknown, EpisodeLimits{});
  CHECK_FALSE(v.ok);
  CHECK(v.first_violation->rule == "unknown-tool");
}

TEST_CASE("extract_atomic_thoughts: document order across blocks") {
  Trajectory t = parse_trajectory(
      "<think> <Plan> p </Plan> <Reflection> r </Reflection> </think> "
      "<think> <Verification> v </Verification> </think> <answer> a </answer>");
  auto atoms = extract_atomic_thoughts(t);
  REQUIRE(atoms.size() == 3);
  CHECK(atoms[0].label == "Plan");
  CHECK(atoms[1].label == "Reflection");
  CHECK(atoms[2].label == "Verification");
}

TEST_CASE("extract_atomic_thoughts: think without subtags yields none") {
  Trajectory t = parse_trajectory("<think> free text only </think> <answer> a </answer>");
  CHECK(extract_atomic_thoughts(t).empty());
}

TEST_CASE("build_loss_mask: response span of 7 tokens is exactly false") {
  std::string text =
      "<think> x </think> "
      "<tool_call> {\"name\":\"web_search\",\"arguments\":{\"queries\":[\"q\"]}} </tool_call> "
      "<tool_response> [d001] four more words here </tool_response> "
      "<answer> a </answer>";
  Trajectory t = parse_trajectory(text);
  const auto& resp = std::get<ToolResponse>(t.segments[2]);
  REQUIRE(resp.token_span.size() == 7); // tags + marker + 4 words
  std::vector<bool> mask = build_loss_mask(t);
  std::size_t false_count = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) {
      ++false_count;
      CHECK(i >= resp.token_span.begin);
      CHECK(i < resp.token_span.end);
    }
  }
  CHECK(false_count == 7);
}

TEST_CASE("build_loss_mask: no tool calls means all-true") {
  Trajectory t = parse_trajectory("<think> a b </think> <answer> c </answer>");
  std::vector<bool> mask = build_loss_mask(t);
  CHECK(std::all_of(mask.begin(), mask.end(), [](bool b) { return b; }));
}

TEST_CASE("atom spans live strictly inside their think block") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    auto gen = testgen::random_trajectory(rng);
    Trajectory t = parse_trajectory(gen.text);
    for (const Segment& seg : t.segments) {
      if (const auto* think = std::get_if<ThinkBlock>(&seg)) {
        for (const AtomicThought& atom : think->atoms) {
          CHECK(atom.token_span.begin > think->token_span.begin);
          CHECK(atom.token_span.end < think->token_span.end);
          CHECK_FALSE(atom.token_span.empty());
        }
      }
    }
  }
}

TEST_CASE("property: round-trip, atom counts, mask totals") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 500; ++i) {
    auto gen = testgen::random_trajectory(rng);
    Trajectory t = parse_trajectory(gen.text);
    CHECK(serialize(t) == gen.text);
    CHECK(extract_atomic_thoughts(t).size() == static_cast<std::size_t>(gen.atom_count));
    CHECK(t.tool_call_count() == static_cast<std::size_t>(gen.tool_calls));
    CHECK(t.has_answer() == gen.has_answer);

    std::vector<bool> mask = build_loss_mask(t);
    std::size_t env = 0;
    for (bool b : mask) env += b ? 0 : 1;
    CHECK(env == static_cast<std::size_t>(gen.response_tokens));

    // Mask/flag agreement.
    for (std::size_t k = 0; k < mask.size(); ++k) {
      CHECK(mask[k] == (t.origin[k] == TokenOrigin::policy));
    }

    // Grammar soundness: parsed trajectories never carry tag-structure
    // violations into the verdict; only missing-answer or tool caps.
    EpisodeLimits wide;
    wide.max_tool_calls = 1000;
    FormatVerdict v = validate_format(t, wide);
    if (!v.ok) CHECK(v.first_violation->rule == "missing-answer");
  }
}

TEST_CASE("property: regex atom-count oracle agrees on atom-only bodies") {
  // Independent oracle: count open tags between think tags on the raw text.
  std::regex tag_re("<[A-Za-z_][A-Za-z0-9_-]*>");
  std::mt19937_64 rng(23);
  for (int i = 0; i < 100; ++i) {
    auto gen = testgen::random_trajectory(rng);
    int depth = 0;
    int counted = 0;
    for (const std::string& tok : gen.tokens) {
      if (tok == "<think>") {
        depth = 1;
      } else if (tok == "</think>") {
        depth = 0;
      } else if (depth == 1 && std::regex_match(tok, tag_re)) {
        ++counted;
      }
    }
    Trajectory t = parse_trajectory(gen.text);
    CHECK(static_cast<int>(extract_atomic_thoughts(t).size()) == counted);
  }
}

TEST_CASE("mutated trajectories never silently pass") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 300; ++i) {
    auto gen = testgen::random_trajectory(rng);
    std::string broken = testgen::mutate_break(gen, rng);
    bool rejected = false;
    try {
      Trajectory t = parse_trajectory(broken);
      EpisodeLimits limits;
      rejected = !validate_format(t, limits).ok;
    } catch (const ParseError&) {
      rejected = true;
    }
    CHECK(rejected);
  }
}

TEST_CASE("TrajectoryBuilder output parses back to the same tokens") {
  TrajectoryBuilder b("what is x");
  b.append_think({{"Plan", "look it up"}});
  b.append_tool_call("web_search", {"x fact"});
  b.append_tool_response({{"d042", "x is tall"}});
  b.append_think_tokens({"<Verification>", "confirmed", "</Verification>"});
  b.append_answer("tall");
  Trajectory built = b.finish();

  Trajectory reparsed = parse_trajectory(serialize(built));
  CHECK(reparsed.tokens == built.tokens);
  REQUIRE(reparsed.segments.size() == built.segments.size());
  CHECK(validate_format(built, EpisodeLimits{}).ok);
  CHECK(validate_format(reparsed, EpisodeLimits{}).ok);

  // Origin flags agree between construction and reparse.
  for (std::size_t i = 0; i < built.tokens.size(); ++i) {
    CHECK(built.origin[i] == reparsed.origin[i]);
  }
}
