// SPDX-License-Identifier: Apache-2.0
#include "searchrl/text.hpp"

#include <cctype>

namespace searchrl {

namespace {

bool is_name_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

// Returns the length of a tag starting at text[pos] ('<'), or 0.
std::size_t tag_length_at(std::string_view text, std::size_t pos) {
  std::size_t i = pos + 1;
  if (i < text.size() && text[i] == '/') ++i;
  if (i >= text.size() || !is_name_start(text[i])) return 0;
  ++i;
  while (i < text.size() && is_name_char(text[i])) ++i;
  if (i < text.size() && text[i] == '>') return i - pos + 1;
  return 0;
}

void split_piece(std::string_view piece, std::vector<std::string>& out) {
  std::size_t start = 0;
  for (std::size_t i = 0; i < piece.size();) {
    std::size_t len = piece[i] == '<' ? tag_length_at(piece, i) : 0;
    if (len > 0) {
      if (i > start) out.emplace_back(piece.substr(start, i - start));
      out.emplace_back(piece.substr(i, len));
      i += len;
      start = i;
    } else {
      ++i;
    }
  }
  if (start < piece.size()) out.emplace_back(piece.substr(start));
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) split_piece(text.substr(start, i - start), out);
  }
  return out;
}

bool is_tag_token(std::string_view token) {
  if (token.size() < 3 || token.front() != '<' || token.back() != '>') return false;
  return tag_length_at(token, 0) == token.size();
}

bool is_close_tag(std::string_view token) {
  return is_tag_token(token) && token[1] == '/';
}

std::string_view tag_name(std::string_view token) {
  if (!is_tag_token(token)) return {};
  std::size_t begin = token[1] == '/' ? 2 : 1;
  return token.substr(begin, token.size() - begin - 1);
}

std::vector<std::string> normalize_words(std::string_view text) {
  std::vector<std::string> words;
  std::string cur;
  for (char c : text) {
    unsigned char uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc)) {
      cur.push_back(static_cast<char>(std::tolower(uc)));
    } else if (!cur.empty()) {
      words.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

}  // namespace searchrl
