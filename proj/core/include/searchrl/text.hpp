// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace searchrl {

// Splits on ASCII whitespace. Tag tokens like "<think>" or "</Plan>" are
// standalone tokens even when glued to neighbouring text.
std::vector<std::string> tokenize(std::string_view text);

// True if the token has the shape <name> or </name>, name = [A-Za-z_][A-Za-z0-9_-]*.
bool is_tag_token(std::string_view token);

// True for closing tags "</name>".
bool is_close_tag(std::string_view token);

// Tag name without delimiters; empty if not a tag token.
std::string_view tag_name(std::string_view token);

// Lowercases, strips punctuation, splits on whitespace. Word-overlap
// convention used by both answer F1 and corpus term indexing.
std::vector<std::string> normalize_words(std::string_view text);

std::string join_tokens(const std::vector<std::string>& tokens);

}  // namespace searchrl
