// SPDX-License-Identifier: Apache-2.0
#include "ethrev/rules/vocabulary.hpp"

#include <algorithm>
#include <utility>

#include "ethrev/common/text.hpp"

namespace ethrev::rules {
namespace {

// Phrase -> vocabulary label. Matched on whole normalized phrases, then on
// the phrase's head noun (last word).
const std::vector<std::pair<std::string, std::string>>& subject_synonyms() {
  static const std::vector<std::pair<std::string, std::string>> kSynonyms = {
      {"investigator", "investigator"},
      {"investigators", "investigator"},
      {"principal investigator", "investigator"},
      {"pi", "investigator"},
      {"researcher", "investigator"},
      {"researchers", "investigator"},
      {"research team", "investigator"},
      {"study team", "investigator"},
      {"applicant", "investigator"},
      {"institution", "institution"},
      {"institutions", "institution"},
      {"research institution", "institution"},
      {"university", "institution"},
      {"hospital", "institution"},
      {"organization", "institution"},
      {"organisation", "institution"},
      {"participant", "participant"},
      {"participants", "participant"},
      {"research participant", "participant"},
      {"subject", "participant"},
      {"subjects", "participant"},
      {"human subject", "participant"},
      {"volunteer", "participant"},
      {"volunteers", "participant"},
      {"patient", "participant"},
      {"patients", "participant"},
      {"data controller", "data_controller"},
      {"data controllers", "data_controller"},
      {"controller", "data_controller"},
      {"data processor", "data_controller"},
      {"data custodian", "data_controller"},
      {"biobank", "data_controller"},
      {"sponsor", "sponsor"},
      {"sponsors", "sponsor"},
      {"funder", "sponsor"},
      {"committee", "committee"},
      {"ethics committee", "committee"},
      {"ethics review committee", "committee"},
      {"research ethics committee", "committee"},
      {"irb", "committee"},
      {"institutional review board", "committee"},
      {"review board", "committee"},
  };
  return kSynonyms;
}

const std::vector<std::pair<std::string, Deontic>>& deontic_forms() {
  // Longest forms first so scanning prefers "must not" over "must".
  static const std::vector<std::pair<std::string, Deontic>> kForms = [] {
    std::vector<std::pair<std::string, Deontic>> forms = {
        {"must not", Deontic::must_not},
        {"shall not", Deontic::must_not},
        {"may not", Deontic::must_not},
        {"should not", Deontic::must_not},
        {"cannot", Deontic::must_not},
        {"is prohibited", Deontic::must_not},
        {"are prohibited", Deontic::must_not},
        {"is prohibited from", Deontic::must_not},
        {"are prohibited from", Deontic::must_not},
        {"is forbidden", Deontic::must_not},
        {"are forbidden", Deontic::must_not},
        {"is not permitted to", Deontic::must_not},
        {"are not permitted to", Deontic::must_not},
        {"is not allowed to", Deontic::must_not},
        {"are not allowed to", Deontic::must_not},
        {"must_not", Deontic::must_not},
        {"must", Deontic::must},
        {"shall", Deontic::must},
        {"is required to", Deontic::must},
        {"are required to", Deontic::must},
        {"has to", Deontic::must},
        {"have to", Deontic::must},
        {"is obliged to", Deontic::must},
        {"are obliged to", Deontic::must},
        {"is obligated to", Deontic::must},
        {"are obligated to", Deontic::must},
        {"needs to", Deontic::must},
        {"need to", Deontic::must},
        {"may", Deontic::may},
        {"can", Deontic::may},
        {"is permitted to", Deontic::may},
        {"are permitted to", Deontic::may},
        {"is allowed to", Deontic::may},
        {"are allowed to", Deontic::may},
        {"should", Deontic::should},
        {"ought to", Deontic::should},
        {"is encouraged to", Deontic::should},
        {"are encouraged to", Deontic::should},
        {"is recommended to", Deontic::should},
        {"are recommended to", Deontic::should},
        {"is encouraged", Deontic::should},
        {"is recommended", Deontic::should},
    };
    std::stable_sort(forms.begin(), forms.end(), [](const auto& a, const auto& b) {
      return text::word_count(a.first) > text::word_count(b.first);
    });
    return forms;
  }();
  return kForms;
}

std::string label_of_unknown(std::string_view raw) {
  auto w = text::words(raw);
  return text::join(w, "_");
}

}  // namespace

const std::vector<std::string>& subject_vocabulary() {
  static const std::vector<std::string> kVocab = {"investigator", "institution", "participant",
                                                  "data_controller", "sponsor", "committee"};
  return kVocab;
}

namespace {

// "biobanks" -> "biobank", "bodies" -> "body"; other words unchanged.
std::string singular(const std::string& w) {
  if (w.size() > 4 && w.ends_with("ies")) return w.substr(0, w.size() - 3) + "y";
  if (w.size() > 3 && w.ends_with('s') && !w.ends_with("ss")) return w.substr(0, w.size() - 1);
  return w;
}

std::optional<std::string> known_label(const std::string& phrase) {
  for (const auto& v : subject_vocabulary()) {
    if (phrase == v || label_of_unknown(phrase) == v) return v;
  }
  const auto& syn = subject_synonyms();
  for (const auto& [form, label] : syn) {
    if (phrase == form) return label;
  }
  // Head noun fallback: "the research sponsor" -> sponsor.
  auto w = text::words(phrase);
  if (w.size() > 1) {
    std::string tail2 = w[w.size() - 2] + " " + w.back();
    for (const auto& [form, label] : syn) {
      if (tail2 == form) return label;
    }
    for (const auto& [form, label] : syn) {
      if (w.back() == form) return label;
    }
  }
  return std::nullopt;
}

}  // namespace

std::string normalize_subject(std::string_view raw) {
  std::string phrase = text::normalize(raw);
  if (phrase.starts_with("the ")) phrase = phrase.substr(4);
  if (phrase.empty()) return {};
  if (auto label = known_label(phrase)) return *label;
  auto w = text::words(phrase);
  w.back() = singular(w.back());
  if (auto label = known_label(text::join(w, " "))) return *label;
  return label_of_unknown(phrase);
}

std::optional<Deontic> parse_deontic(std::string_view surface) {
  std::string s = text::collapse_whitespace(text::to_lower(surface));
  if (s == "must_not") return Deontic::must_not;
  std::replace(s.begin(), s.end(), '_', ' ');
  for (const auto& [form, d] : deontic_forms()) {
    if (s == form) return d;
  }
  return std::nullopt;
}

std::size_t count_deontic_markers(std::string_view text_in) {
  auto w = text::words(text_in);
  std::size_t count = 0;
  std::size_t i = 0;
  while (i < w.size()) {
    std::size_t matched = 0;
    for (const auto& [form, _] : deontic_forms()) {
      auto fw = text::words(form);
      if (fw.size() > w.size() - i) continue;
      if (std::equal(fw.begin(), fw.end(), w.begin() + static_cast<std::ptrdiff_t>(i))) {
        matched = fw.size();
        break;
      }
    }
    if (matched > 0) {
      ++count;
      i += matched;
    } else {
      ++i;
    }
  }
  return count;
}

}  // namespace ethrev::rules
