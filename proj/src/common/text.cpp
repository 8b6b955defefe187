// SPDX-License-Identifier: Apache-2.0
#include "ethrev/common/text.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

namespace ethrev::text {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

const std::unordered_set<std::string_view>& stopwords() {
  static const std::unordered_set<std::string_view> kWords = {
      "a",    "an",   "the",  "of",   "and",  "or",   "to",    "in",   "on",   "for",
      "by",   "with", "at",   "as",   "is",   "are",  "be",    "been", "was",  "were",
      "it",   "its",  "this", "that", "these", "those", "from", "into", "any",  "all",
      "which", "who", "whom", "such", "than", "then", "there", "their", "they", "them",
      "has",  "have", "had",  "do",   "does", "not",  "no",    "if",   "so",   "but"};
  return kWords;
}

}  // namespace

std::string trim(std::string_view s) {
  auto b = s.begin();
  auto e = s.end();
  while (b != e && is_space(*b)) ++b;
  while (e != b && is_space(*(e - 1))) --e;
  return std::string(b, e);
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return is_space(c); });
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::string normalize(std::string_view s) {
  std::string buf;
  buf.reserve(s.size());
  for (char c : s) {
    auto u = static_cast<unsigned char>(c);
    if (std::ispunct(u)) {
      buf.push_back(' ');
    } else {
      buf.push_back(static_cast<char>(std::tolower(u)));
    }
  }
  return collapse_whitespace(buf);
}

std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::string norm = normalize(s);
  std::size_t start = 0;
  while (start < norm.size()) {
    auto end = norm.find(' ', start);
    if (end == std::string::npos) end = norm.size();
    out.emplace_back(norm.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

std::vector<std::string> content_tokens(std::string_view s) {
  auto all = words(s);
  std::erase_if(all, [](const std::string& w) { return stopwords().contains(w); });
  return all;
}

std::size_t word_count(std::string_view s) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : s) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++n;
    }
  }
  return n;
}

std::vector<std::string> sentences(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    bool terminal = (c == '.' || c == '!' || c == '?');
    bool at_break = (i + 1 == s.size()) || is_space(s[i + 1]);
    if (terminal && at_break) {
      auto sentence = collapse_whitespace(s.substr(start, i + 1 - start));
      if (!sentence.empty()) out.push_back(std::move(sentence));
      start = i + 1;
    }
  }
  auto tail = collapse_whitespace(s.substr(std::min(start, s.size())));
  if (!tail.empty()) out.push_back(std::move(tail));
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

}  // namespace ethrev::text
