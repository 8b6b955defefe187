// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "ethrev/rules/forge.hpp"

namespace ethrev::rules {

inline constexpr int kRuleBaseSchemaVersion = 1;

// JSON-Lines: a header line
//   {"format":"ethrev.rule_base","schema_version":1,"rule_count":N,
//    "provenance":"...","warnings":[...]}
// followed by one CanonicalRule per line, sorted by rule id.
std::string serialize_rule_base(const RuleBase& base, std::string_view provenance = {});
RuleBase parse_rule_base(std::string_view content);

void save_rule_base(const std::filesystem::path& path, const RuleBase& base, std::string_view provenance = {});
RuleBase load_rule_base(const std::filesystem::path& path);

// SHA-256 over the serialized rules only (header excluded).
std::string rule_base_digest(std::span<const CanonicalRule> rules);

}  // namespace ethrev::rules
