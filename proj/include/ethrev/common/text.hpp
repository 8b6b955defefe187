// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ethrev::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
bool is_blank(std::string_view s);

// Trims and collapses every whitespace run into a single space.
std::string collapse_whitespace(std::string_view s);

// Lowercase, ASCII punctuation replaced by spaces, whitespace collapsed.
// Used for leakage checks, closed-form answer matching and lexical overlap.
std::string normalize(std::string_view s);

// Words of normalize(s).
std::vector<std::string> words(std::string_view s);

// words(s) without common English function words.
std::vector<std::string> content_tokens(std::string_view s);

std::size_t word_count(std::string_view s);

// Splits prose into sentences at [.!?] followed by whitespace. Sentence text
// is whitespace-collapsed; empty sentences are dropped.
std::vector<std::string> sentences(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace ethrev::text
