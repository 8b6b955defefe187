// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ethrev/common/diagnostics.hpp"
#include "ethrev/gateway/gateway.hpp"
#include "ethrev/review/dossier.hpp"

// Simulated full-board committee review: independent per-dimension review by
// six voting experts, bounded expert/PI debate per issue, and a secretary
// synthesis of what remains unresolved.
namespace ethrev::committee {

enum class Role { ethics_reviewer, life_sciences, medical, legal, disciplinary, social_representative, secretary, pi };

std::string_view to_string(Role r);
Role parse_role(std::string_view s);
// Expertise domain a concern is attributed to.
std::string_view domain_of(Role r);
bool is_voting(Role r);
// Every role, voting roles first, in declaration order.
const std::vector<Role>& all_roles();

enum class Gender { female, male };
std::string_view to_string(Gender g);

struct ExpertAgent {
  Role role = Role::ethics_reviewer;
  Gender gender = Gender::female;
  std::string persona_prompt;
  bool voting = true;
};

// risk_minimization ... cross_jurisdictional_coordination
const std::vector<std::string>& dimensions();

struct Templates {
  std::map<Role, std::string> personas;
  std::map<std::string, std::string> rubrics;  // by dimension

  static Templates builtin();
  // Directory with personas/<role>.txt and rubrics/<dimension>.txt. Every
  // file must be present.
  static Templates load(const std::filesystem::path& dir);
};

// Eight agents in all_roles() order. Genders come from a 64-bit Mersenne
// Twister seeded with `seed`, one draw per agent (top bit set -> female).
std::vector<ExpertAgent> convene_committee(std::uint64_t seed, const Templates& templates = Templates::builtin());

enum class IssueStatus { open, provisionally_resolved, unresolved };
std::string_view to_string(IssueStatus s);

struct Turn {
  Role speaker = Role::pi;
  int round = 0;
  std::string text;
};

struct Issue {
  std::string issue_id;  // "{role}/{dimension}/{n}"
  std::string dimension;
  Role raised_by = Role::ethics_reviewer;
  std::string description;
  IssueStatus status = IssueStatus::open;
  std::vector<Turn> transcript;
  std::string position;  // the raiser's last stated position
  std::string note;      // failure note, if any
};

// One call per (voting expert, dimension). Prompts carry only the expert's
// persona, the dimension rubric and the dossier digest. Failed cells are
// logged and left empty. Issues are ordered by role, then dimension.
std::vector<Issue> independent_review(gateway::Gateway& gw, const review::Dossier& dossier,
                                      std::span<const ExpertAgent> experts, const Templates& templates,
                                      Diagnostics& diag, std::size_t workers = 8);

// Up to max_rounds of expert turn, PI turn and a structured satisfaction
// check by the expert. Each prompt carries every prior turn. A gateway
// failure leaves the issue unresolved with a note.
Issue debate_issue(gateway::Gateway& gw, Issue issue, const ExpertAgent& expert, const ExpertAgent& pi,
                   const review::Dossier& dossier, int max_rounds = 3);

struct Recommendation {
  std::string category;  // protocol_revision | additional_safeguards | further_review
  std::string text;
};

struct Dissent {
  std::string issue_id;
  Role role = Role::ethics_reviewer;
  std::string position;
};

struct AttributedIssue {
  Issue issue;
  std::string domain;
};

struct CommitteeReport {
  std::string dossier_id;
  std::uint64_t seed = 0;
  int max_rounds = 3;
  std::vector<ExpertAgent> roster;
  std::size_t phase1_issue_count = 0;
  std::vector<Issue> resolved;
  std::vector<AttributedIssue> unresolved;
  std::string summary;
  std::vector<Recommendation> recommendations;
  std::vector<Dissent> dissent;
  bool summary_flagged = false;
  std::vector<std::string> warnings;
};

// Partitions terminal issues into resolved and unresolved and drafts the
// assessment. With nothing unresolved no call is made. Throws if any issue is
// still open.
CommitteeReport synthesize(gateway::Gateway& gw, const std::string& dossier_id, std::vector<Issue> issues,
                           const ExpertAgent& secretary, Diagnostics& diag);

// Same dimension, one expert satisfied and another not.
std::vector<Dissent> find_dissent(std::span<const Issue> issues);

struct CommitteeOptions {
  std::uint64_t seed = 42;
  int max_rounds = 3;
  std::size_t workers = 8;
  bool parallel_debates = false;
};

CommitteeReport run_committee_review(gateway::Gateway& gw, const review::Dossier& dossier,
                                     const CommitteeOptions& options = {},
                                     const Templates& templates = Templates::builtin());

nlohmann::json to_json(const CommitteeReport& r);
// Roster, per-phase transcript and final assessment.
std::string render_minutes(const CommitteeReport& r);

}  // namespace ethrev::committee
