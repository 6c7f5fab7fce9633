// SPDX-License-Identifier: Apache-2.0
//
// Test-side generator of well-formed trajectory text plus guaranteed-invalid
// mutations. Builds strings directly from the grammar, independently of the
// parser under test, and reports ground-truth counts for oracle checks.
#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace searchrl::testgen {

struct GenOptions {
  int max_extra_segments = 4; // segments after the mandatory leading think
  int max_atoms = 3;
  int max_words = 5;
  bool always_answer = false;
};

struct GenInfo {
  std::string text;
  std::vector<std::string> tokens;
  int think_blocks = 0;
  int atom_count = 0;
  int tool_calls = 0;
  int response_tokens = 0; // environment-origin tokens, tags included
  bool has_answer = false;
};

inline const std::vector<std::string>& word_pool() {
  static const std::vector<std::string> words = {
      "alpha", "beta",  "gamma", "delta", "fact",  "tower",  "river",
      "stone", "check", "plan",  "seek",  "found", "answer", "height"};
  return words;
}

inline const std::vector<std::string>& label_pool() {
  static const std::vector<std::string> labels = {"Plan", "Reflection", "Verification",
                                                  "Hypothesis", "risk_check"};
  return labels;
}

inline std::string pick(const std::vector<std::string>& pool, std::mt19937_64& rng) {
  return pool[rng() % pool.size()];
}

inline GenInfo random_trajectory(std::mt19937_64& rng, const GenOptions& opt = {}) {
  GenInfo info;
  std::vector<std::string>& toks = info.tokens;

  auto emit_words = [&](int n) {
    for (int i = 0; i < n; ++i) toks.push_back(pick(word_pool(), rng));
  };

  auto emit_think = [&] {
    ++info.think_blocks;
    toks.push_back("<think>");
    int parts = static_cast<int>(rng() % (opt.max_atoms + 1));
    if (rng() % 3 == 0) emit_words(1 + static_cast<int>(rng() % opt.max_words));
    for (int a = 0; a < parts; ++a) {
      ++info.atom_count;
      std::string label = pick(label_pool(), rng);
      toks.push_back("<" + label + ">");
      emit_words(static_cast<int>(rng() % (opt.max_words + 1)));
      toks.push_back("</" + label + ">");
      if (rng() % 4 == 0) emit_words(1);
    }
    toks.push_back("</think>");
  };

  auto emit_tool_call_and_response = [&] {
    ++info.tool_calls;
    toks.push_back("<tool_call>");
    if (rng() % 2 == 0) {
      // Compact single-token payload.
      std::string q1 = pick(word_pool(), rng);
      std::string q2 = pick(word_pool(), rng);
      toks.push_back("{\"name\":\"web_search\",\"arguments\":{\"queries\":[\"" + q1 + " " + q2 +
                     "\"]}}");
    } else {
      // Multi-token payload with two queries.
      toks.push_back("{\"name\":");
      toks.push_back("\"web_search\",");
      toks.push_back("\"arguments\":");
      toks.push_back("{\"queries\":");
      toks.push_back("[\"" + pick(word_pool(), rng) + "\",");
      toks.push_back("\"" + pick(word_pool(), rng) + "\"]}}");
    }
    toks.push_back("</tool_call>");

    std::size_t resp_begin = toks.size();
    toks.push_back("<tool_response>");
    int docs = static_cast<int>(rng() % 3);
    for (int d = 0; d < docs; ++d) {
      toks.push_back("[d" + std::to_string(100 + static_cast<int>(rng() % 900)) + "]");
      emit_words(1 + static_cast<int>(rng() % opt.max_words));
    }
    toks.push_back("</tool_response>");
    info.response_tokens += static_cast<int>(toks.size() - resp_begin);
  };

  emit_think();
  int extra = static_cast<int>(rng() % (opt.max_extra_segments + 1));
  for (int s = 0; s < extra; ++s) {
    if (rng() % 2 == 0) {
      emit_think();
    } else {
      emit_tool_call_and_response();
    }
  }
  if (opt.always_answer || rng() % 5 != 0) {
    info.has_answer = true;
    toks.push_back("<answer>");
    emit_words(1 + static_cast<int>(rng() % 3));
    toks.push_back("</answer>");
  }

  std::ostringstream joined;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (i > 0) joined << ' ';
    joined << toks[i];
  }
  info.text = joined.str();
  return info;
}

// Applies one structure-breaking mutation. Every emitted string is invalid:
// it must either fail to parse or fail format validation.
inline std::string mutate_break(const GenInfo& info, std::mt19937_64& rng) {
  std::vector<std::string> toks = info.tokens;
  auto rejoin = [&] {
    std::ostringstream out;
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (i > 0) out << ' ';
      out << toks[i];
    }
    return out.str();
  };
  auto find_token = [&](const std::string& t) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (toks[i] == t) return i;
    }
    return std::nullopt;
  };

  for (;;) {
    switch (rng() % 9) {
      case 0: // drop the final close tag -> unclosed segment
        toks.pop_back();
        return rejoin();
      case 1: // drop the leading <think> -> bad top level
        toks.erase(toks.begin());
        return rejoin();
      case 2: { // mismatch: first </think> becomes </answer>
        if (auto i = find_token("</think>")) {
          toks[*i] = "</answer>";
          return rejoin();
        }
        break;
      }
      case 3: // nested think
        toks.insert(toks.begin() + 1, "<think>");
        return rejoin();
      case 4: { // content after the final answer
        if (info.has_answer) {
          toks.push_back("<think>");
          toks.push_back("</think>");
          return rejoin();
        }
        break;
      }
      case 5: { // stray word at top level
        toks.insert(toks.begin(), pick(word_pool(), rng));
        return rejoin();
      }
      case 6: { // truncate just before the last close tag -> unclosed
        for (std::size_t i = toks.size(); i-- > 0;) {
          if (toks[i].rfind("</", 0) == 0) {
            toks.resize(i);
            return rejoin();
          }
        }
        break;
      }
      case 7: { // corrupt a tool-call payload -> bad-tool-call verdict
        if (auto i = find_token("<tool_call>")) {
          toks.erase(toks.begin() + static_cast<std::ptrdiff_t>(*i) + 1);
          return rejoin();
        }
        break;
      }
      case 8: { // tool response with no preceding call
        if (auto i = find_token("</think>")) {
          std::vector<std::string> resp = {"<tool_response>", "[d001]", "stray",
                                           "</tool_response>"};
          toks.insert(toks.begin() + static_cast<std::ptrdiff_t>(*i) + 1, resp.begin(),
                      resp.end());
          return rejoin();
        }
        break;
      }
    }
    toks = info.tokens; // mutation not applicable; try another
  }
}

}  // namespace searchrl::testgen
