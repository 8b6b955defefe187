// SPDX-License-Identifier: Apache-2.0
#include "ethrev/rules/store.hpp"

#include <sstream>
#include <stdexcept>

#include "ethrev/common/hash.hpp"
#include "ethrev/common/io.hpp"

namespace ethrev::rules {
namespace {

constexpr std::string_view kFormat = "ethrev.rule_base";

std::string rule_lines(std::span<const CanonicalRule> rules) {
  std::string out;
  for (const auto& r : rules) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

}  // namespace

std::string serialize_rule_base(const RuleBase& base, std::string_view provenance) {
  auto rules = base.rules;
  sort_rules(rules);
  nlohmann::json header = {{"format", kFormat},
                           {"schema_version", kRuleBaseSchemaVersion},
                           {"rule_count", rules.size()},
                           {"provenance", provenance},
                           {"warnings", base.warnings}};
  return header.dump() + "\n" + rule_lines(rules);
}

RuleBase parse_rule_base(std::string_view content) {
  std::istringstream in{std::string(content)};
  std::string line;
  nlohmann::json header;
  RuleBase base;
  bool have_header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw io::IoError("rule base line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!have_header) {
      if (j.value("format", "") != kFormat) throw io::IoError("not a rule base file");
      if (j.value("schema_version", 0) != kRuleBaseSchemaVersion) {
        throw io::IoError("unsupported rule base schema_version");
      }
      header = std::move(j);
      have_header = true;
      continue;
    }
    base.rules.push_back(rule_from_json(j));
  }
  if (!have_header) throw io::IoError("rule base file has no header");
  if (header.value("rule_count", std::size_t{0}) != base.rules.size()) {
    throw io::IoError("rule base header count does not match its rules");
  }
  base.warnings = header.value("warnings", std::vector<std::string>{});
  sort_rules(base.rules);
  for (std::size_t i = 1; i < base.rules.size(); ++i) {
    if (base.rules[i].rule_id == base.rules[i - 1].rule_id) {
      throw io::IoError("duplicate rule id " + base.rules[i].rule_id);
    }
  }
  return base;
}

void save_rule_base(const std::filesystem::path& path, const RuleBase& base, std::string_view provenance) {
  io::write_file_atomic(path, serialize_rule_base(base, provenance));
}

RuleBase load_rule_base(const std::filesystem::path& path) { return parse_rule_base(io::read_file(path)); }

std::string rule_base_digest(std::span<const CanonicalRule> rules) {
  std::vector<CanonicalRule> sorted(rules.begin(), rules.end());
  sort_rules(sorted);
  return sha256_hex(rule_lines(sorted));
}

}  // namespace ethrev::rules
