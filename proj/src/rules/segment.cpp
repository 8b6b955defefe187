// SPDX-License-Identifier: Apache-2.0
#include "ethrev/rules/segment.hpp"

#include <array>
#include <cctype>
#include <cstdio>

#include "ethrev/common/text.hpp"

namespace ethrev::rules {
namespace {

bool space_at(std::string_view s, std::size_t i) {
  return i < s.size() && std::isspace(static_cast<unsigned char>(s[i]));
}
bool digit_at(std::string_view s, std::size_t i) {
  return i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]));
}
bool upper_at(std::string_view s, std::size_t i) {
  return i < s.size() && std::isupper(static_cast<unsigned char>(s[i]));
}
bool ends_token(std::string_view s, std::size_t i) { return i >= s.size() || space_at(s, i); }

bool is_roman(char c, bool upper) {
  constexpr std::string_view kLower = "ivxlc";
  constexpr std::string_view kUpper = "IVXLC";
  return (upper ? kUpper : kLower).find(c) != std::string_view::npos;
}

std::size_t skip_space(std::string_view s, std::size_t i) {
  while (space_at(s, i)) ++i;
  return i;
}

std::size_t header_length(std::string_view s, std::size_t pos) {
  static constexpr std::array<std::string_view, 10> kKeywords = {
      "Article", "ARTICLE", "Section", "SECTION", "Chapter", "CHAPTER", "Part", "PART", "Art.", "\xC2\xA7"};
  for (auto kw : kKeywords) {
    if (s.substr(pos, kw.size()) != kw) continue;
    std::size_t i = pos + kw.size();
    std::size_t after_kw = i;
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    if (i == after_kw && kw != "\xC2\xA7") continue;
    std::size_t num = i;
    if (digit_at(s, i)) {
      while (digit_at(s, i)) ++i;
      while (i + 1 < s.size() && s[i] == '.' && digit_at(s, i + 1)) {
        ++i;
        while (digit_at(s, i)) ++i;
      }
      if (i < s.size() && std::isalpha(static_cast<unsigned char>(s[i])) && ends_token(s, i + 1)) ++i;
    } else {
      while (i < s.size() && is_roman(s[i], true)) ++i;
    }
    if (i == num) continue;
    if (i < s.size() && (s[i] == '.' || s[i] == ':')) ++i;
    if (!ends_token(s, i)) continue;
    return i - pos;
  }
  return 0;
}

std::size_t list_marker_length(std::string_view s, std::size_t pos) {
  if (pos >= s.size()) return 0;
  // Bullets.
  if ((s[pos] == '-' || s[pos] == '*') && space_at(s, pos + 1)) return 1;
  if (s.substr(pos, 3) == "\xE2\x80\xA2" && ends_token(s, pos + 3)) return 3;
  // (a) (iv) (1) (A)
  if (s[pos] == '(') {
    std::size_t i = pos + 1;
    if (digit_at(s, i)) {
      while (digit_at(s, i) && i - pos <= 3) ++i;
    } else if (i < s.size() && is_roman(s[i], false)) {
      while (i < s.size() && is_roman(s[i], false) && i - pos <= 5) ++i;
    } else if (i < s.size() && std::isalpha(static_cast<unsigned char>(s[i]))) {
      ++i;
    }
    if (i > pos + 1 && i < s.size() && s[i] == ')' && ends_token(s, i + 1)) return i + 1 - pos;
    return 0;
  }
  // 1.  12)
  if (digit_at(s, pos)) {
    std::size_t i = pos;
    while (digit_at(s, i) && i - pos < 3) ++i;
    if (i < s.size() && (s[i] == '.' || s[i] == ')') && space_at(s, i + 1)) return i + 1 - pos;
    return 0;
  }
  // a)
  if (std::islower(static_cast<unsigned char>(s[pos])) && pos + 1 < s.size() && s[pos + 1] == ')' &&
      ends_token(s, pos + 2)) {
    return 2;
  }
  return 0;
}

// Word immediately before the terminator at `dot`, lowercased, keeping
// internal dots ("e.g").
std::string word_before(std::string_view s, std::size_t dot) {
  std::size_t b = dot;
  while (b > 0 && (std::isalnum(static_cast<unsigned char>(s[b - 1])) || s[b - 1] == '.')) --b;
  return text::to_lower(s.substr(b, dot - b));
}

bool abbreviation_blocks(std::string_view s, std::size_t dot, std::size_t next) {
  static constexpr std::array<std::string_view, 8> kAlways = {"e.g", "i.e", "cf", "vs", "dr", "mr", "ms", "prof"};
  static constexpr std::array<std::string_view, 6> kBeforeNumber = {"no", "nos", "art", "sec", "para", "fig"};
  auto w = word_before(s, dot);
  if (w.empty()) return false;
  for (auto a : kAlways) {
    if (w == a) return true;
  }
  if (digit_at(s, next)) {
    for (auto a : kBeforeNumber) {
      if (w == a) return true;
    }
  }
  // Single-letter initial: "J. Smith".
  return w.size() == 1 && std::isalpha(static_cast<unsigned char>(w[0])) &&
         upper_at(s, dot - 1);
}

bool line_break_ends_clause(std::string_view s, std::size_t newline) {
  std::size_t i = newline + 1;
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
  if (i >= s.size() || s[i] == '\n') return true;
  return marker_length(s, i) > 0;
}

// End (exclusive) of the clause starting at `start`.
std::size_t clause_end(std::string_view s, std::size_t start) {
  for (std::size_t i = start; i < s.size(); ++i) {
    char c = s[i];
    if (c == '.' || c == '!' || c == '?') {
      std::size_t j = i + 1;
      while (j < s.size() && (s[j] == '"' || s[j] == '\'' || s[j] == ')' || s[j] == ']')) ++j;
      if (j >= s.size()) return j;
      if (!space_at(s, j)) continue;
      std::size_t k = skip_space(s, j);
      if (k >= s.size()) return j;
      bool opener = upper_at(s, k) || digit_at(s, k) || s[k] == '(' || s[k] == '"' ||
                    marker_length(s, k) > 0;
      if (!opener) continue;
      if (c == '.' && abbreviation_blocks(s, i, k)) continue;
      return j;
    }
    if (c == ';' || c == ':') {
      if (!space_at(s, i + 1)) continue;
      std::size_t k = skip_space(s, i + 1);
      if (k < s.size() && marker_length(s, k) > 0) return i + 1;
      continue;
    }
    if (c == '\n' && line_break_ends_clause(s, i)) return i;
  }
  return s.size();
}

bool has_alnum(std::string_view s) {
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c))) return true;
  }
  return false;
}

std::string clause_id(const std::string& doc_id, std::size_t n) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "c%03zu", n);
  return doc_id + "/" + buf;
}

}  // namespace

std::size_t marker_length(std::string_view body, std::size_t pos) {
  if (std::size_t h = header_length(body, pos)) return h;
  return list_marker_length(body, pos);
}

std::vector<Clause> segment_clauses(const RegulatoryDocument& doc) {
  std::string_view s = doc.body;
  std::vector<Clause> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    pos = skip_space(s, pos);
    // Strip any run of headers and list markers.
    while (pos < s.size()) {
      std::size_t h = header_length(s, pos);
      std::size_t len = h ? h : list_marker_length(s, pos);
      if (len == 0) break;
      pos += len;
      if (h) {
        // "Article 3 Informed consent\n..." : the title line carries no clause.
        std::size_t eol = s.find('\n', pos);
        if (eol != std::string_view::npos) {
          auto rest = s.substr(pos, eol - pos);
          if (!text::is_blank(rest) && rest.find_first_of(".!?;:") == std::string_view::npos) pos = eol;
        }
      }
      pos = skip_space(s, pos);
    }
    if (pos >= s.size()) break;

    std::size_t start = pos;
    std::size_t end = clause_end(s, start);
    pos = end;
    while (end > start && space_at(s, end - 1)) --end;
    auto raw = s.substr(start, end - start);
    if (!has_alnum(raw)) continue;
    out.push_back({doc.doc_id, clause_id(doc.doc_id, out.size() + 1), text::collapse_whitespace(raw),
                   {start, end}});
  }
  return out;
}

}  // namespace ethrev::rules
