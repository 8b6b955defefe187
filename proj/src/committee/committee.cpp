// SPDX-License-Identifier: Apache-2.0
#include "ethrev/committee/committee.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "ethrev/common/io.hpp"
#include "ethrev/common/parallel.hpp"
#include "ethrev/common/text.hpp"

namespace ethrev::committee {
namespace {

using gateway::ChatRequest;
using gateway::FieldKind;
using gateway::GatewayError;
using gateway::ResponseSchema;
using GwRole = gateway::Role;

const std::map<std::string, std::string>& builtin_rubrics() {
  static const std::map<std::string, std::string> kRubrics = {
      {"risk_minimization",
       "Risk minimization: are foreseeable physical, psychological, social, legal and economic risks identified, "
       "minimized by design, monitored, and reasonable in relation to anticipated benefits?"},
      {"scientific_validity",
       "Scientific validity: is the question important and the design, sample size and analysis capable of "
       "answering it, so that participants are not exposed to risk for uninformative research?"},
      {"informed_consent",
       "Informed consent: is consent voluntary, informed and documented, with understandable materials, "
       "withdrawal rights, surrogate or guardian consent where needed, and re-consent for new uses?"},
      {"data_protection",
       "Data protection: are collection, storage, access, sharing, retention and de-identification of personal "
       "data and samples specified, lawful and proportionate, with breach handling?"},
      {"justice",
       "Justice: are burdens and benefits fairly distributed, with inclusion and exclusion criteria justified "
       "and no group unfairly targeted or excluded?"},
      {"vulnerability",
       "Vulnerability: are minors, patients lacking capacity, dependent persons or other vulnerable groups "
       "involved, and are additional protections in place?"},
      {"conflicts_of_interest",
       "Conflicts of interest: are financial, institutional or personal interests of investigators and sponsors "
       "disclosed and managed?"},
      {"compensation",
       "Compensation: are reimbursement, payment and compensation or insurance for research-related injury fair "
       "and non-coercive?"},
      {"accountability",
       "Accountability: are responsibilities, oversight, adverse-event reporting, monitoring and record keeping "
       "clearly assigned?"},
      {"cross_jurisdictional_coordination",
       "Cross-jurisdictional coordination: for multi-site or international work, are approvals from every "
       "jurisdiction, data transfer rules and applicable laws addressed?"},
  };
  return kRubrics;
}

const std::map<Role, std::string>& builtin_personas() {
  static const std::map<Role, std::string> kPersonas = {
      {Role::ethics_reviewer,
       "You are the ethics reviewer on a research ethics committee, an expert in bioethics who evaluates "
       "compliance with fundamental ethical principles: respect for persons, beneficence and justice."},
      {Role::life_sciences,
       "You are the life sciences expert on a research ethics committee. You assess scientific validity, "
       "biosafety considerations and experimental integrity."},
      {Role::medical,
       "You are the medical expert on a research ethics committee. You examine participant protection, clinical "
       "risk and potential health impacts."},
      {Role::legal,
       "You are the legal expert on a research ethics committee. You interpret the laws, administrative "
       "regulations and normative documents governing research involving human participants."},
      {Role::disciplinary,
       "You are the disciplinary expert on a research ethics committee. You evaluate methodological rigor and "
       "the research standards of the study's own field."},
      {Role::social_representative,
       "You are the non-institutional social representative on a research ethics committee. You consider "
       "fairness, societal impact and the protection of vulnerable populations from a lay perspective."},
      {Role::secretary,
       "You are the ethics committee secretary. You organize the review and record its outcome; you do not vote "
       "and do not add concerns of your own."},
      {Role::pi,
       "You are the principal investigator of the research project under review. Answer the committee's concerns "
       "with clarification, justification or proposed mitigation, staying faithful to the submitted dossier."},
  };
  return kPersonas;
}

std::string transcript_text(const Issue& issue) {
  std::string out;
  for (const auto& t : issue.transcript) {
    out += "[round " + std::to_string(t.round) + "] " + std::string(to_string(t.speaker)) + ": " + t.text + "\n";
  }
  return out;
}

std::string issue_header(const Issue& issue) {
  return "Concern " + issue.issue_id + " (" + issue.dimension + ", raised by " +
         std::string(to_string(issue.raised_by)) + "): " + issue.description;
}

bool role_before(Role a, Role b) { return static_cast<int>(a) < static_cast<int>(b); }

std::string mechanical_summary(const std::vector<AttributedIssue>& unresolved) {
  std::string out = std::to_string(unresolved.size()) + " concern(s) remain unresolved after deliberation:\n";
  for (const auto& u : unresolved) {
    out += "- [" + u.domain + "] " + u.issue.dimension + ": " + u.issue.description + "\n";
  }
  out += "This assessment was compiled mechanically; the secretary draft was unavailable.";
  return out;
}

}  // namespace

std::string_view to_string(Role r) {
  switch (r) {
    case Role::ethics_reviewer: return "ethics_reviewer";
    case Role::life_sciences: return "life_sciences";
    case Role::medical: return "medical";
    case Role::legal: return "legal";
    case Role::disciplinary: return "disciplinary";
    case Role::social_representative: return "social_representative";
    case Role::secretary: return "secretary";
    case Role::pi: return "pi";
  }
  return "pi";
}

Role parse_role(std::string_view s) {
  for (Role r : all_roles()) {
    if (to_string(r) == s) return r;
  }
  throw std::invalid_argument("unknown committee role: " + std::string(s));
}

std::string_view domain_of(Role r) {
  switch (r) {
    case Role::ethics_reviewer: return "ethics";
    case Role::life_sciences: return "life sciences";
    case Role::medical: return "medicine";
    case Role::legal: return "law";
    case Role::disciplinary: return "research discipline";
    case Role::social_representative: return "social representation";
    case Role::secretary: return "committee secretariat";
    case Role::pi: return "investigator";
  }
  return "ethics";
}

bool is_voting(Role r) { return r != Role::secretary && r != Role::pi; }

const std::vector<Role>& all_roles() {
  static const std::vector<Role> kRoles = {Role::ethics_reviewer, Role::life_sciences, Role::medical,
                                           Role::legal,           Role::disciplinary,  Role::social_representative,
                                           Role::secretary,       Role::pi};
  return kRoles;
}

std::string_view to_string(Gender g) { return g == Gender::female ? "female" : "male"; }

const std::vector<std::string>& dimensions() {
  static const std::vector<std::string> kDims = {
      "risk_minimization", "scientific_validity",   "informed_consent", "data_protection", "justice",
      "vulnerability",     "conflicts_of_interest", "compensation",     "accountability",
      "cross_jurisdictional_coordination"};
  return kDims;
}

Templates Templates::builtin() { return {builtin_personas(), builtin_rubrics()}; }

Templates Templates::load(const std::filesystem::path& dir) {
  Templates t;
  for (Role r : all_roles()) {
    auto p = dir / "personas" / (std::string(to_string(r)) + ".txt");
    if (!std::filesystem::exists(p)) throw io::IoError("missing persona template " + p.string());
    t.personas[r] = text::trim(io::read_file(p));
  }
  for (const auto& d : dimensions()) {
    auto p = dir / "rubrics" / (d + ".txt");
    if (!std::filesystem::exists(p)) throw io::IoError("missing dimension rubric " + p.string());
    t.rubrics[d] = text::trim(io::read_file(p));
  }
  return t;
}

std::vector<ExpertAgent> convene_committee(std::uint64_t seed, const Templates& templates) {
  std::mt19937_64 rng(seed);
  std::vector<ExpertAgent> out;
  for (Role r : all_roles()) {
    auto it = templates.personas.find(r);
    if (it == templates.personas.end() || text::is_blank(it->second)) {
      throw std::invalid_argument("missing persona template for " + std::string(to_string(r)));
    }
    Gender g = (rng() >> 63) ? Gender::female : Gender::male;
    out.push_back({r, g, it->second, is_voting(r)});
  }
  return out;
}

std::string_view to_string(IssueStatus s) {
  switch (s) {
    case IssueStatus::open: return "open";
    case IssueStatus::provisionally_resolved: return "provisionally_resolved";
    case IssueStatus::unresolved: return "unresolved";
  }
  return "open";
}

std::vector<Issue> independent_review(gateway::Gateway& gw, const review::Dossier& dossier,
                                      std::span<const ExpertAgent> experts, const Templates& templates,
                                      Diagnostics& diag, std::size_t workers) {
  struct Cell {
    const ExpertAgent* expert;
    const std::string* dimension;
  };
  std::vector<Cell> cells;
  for (const auto& e : experts) {
    if (!e.voting) throw std::invalid_argument("only voting experts take part in independent review");
    for (const auto& d : dimensions()) cells.push_back({&e, &d});
  }
  const std::string digest = review::dossier_digest(dossier);
  ResponseSchema schema{"review_issues", {{"issues", FieldKind::array, true, {}, FieldKind::object}}};

  auto per_cell = parallel_map(cells.size(), workers, [&](std::size_t i) {
    const auto& expert = *cells[i].expert;
    const auto& dim = *cells[i].dimension;
    auto rubric = templates.rubrics.find(dim);
    if (rubric == templates.rubrics.end()) throw std::invalid_argument("missing rubric for " + dim);
    const std::string role(to_string(expert.role));
    ChatRequest req;
    req.tag = "review:" + role + ":" + dim;
    req.messages = {{GwRole::system, expert.persona_prompt +
                                         " Review the protocol on your own, without consulting other members."},
                    {GwRole::user, "Dimension. " + rubric->second +
                                       "\n\nList each distinct ethical concern on this dimension as an issue with a "
                                       "description. Return no issues if the protocol is adequate.\n\n" + digest}};
    req.response_schema = schema;
    std::vector<Issue> issues;
    try {
      auto reply = gw.chat_json(req);
      for (const auto& item : reply["issues"]) {
        auto desc = item.contains("description") && item["description"].is_string()
                        ? text::collapse_whitespace(item["description"].get<std::string>())
                        : std::string();
        if (desc.empty()) {
          diag.warn("review " + role + "/" + dim + ": dropped issue without description");
          continue;
        }
        Issue is;
        is.issue_id = role + "/" + dim + "/" + std::to_string(issues.size() + 1);
        is.dimension = dim;
        is.raised_by = expert.role;
        is.description = std::move(desc);
        issues.push_back(std::move(is));
      }
    } catch (const GatewayError& e) {
      diag.warn("review " + role + "/" + dim + " left empty: " + e.what());
    }
    return issues;
  });
  std::vector<Issue> out;
  for (auto& group : per_cell) {
    for (auto& is : group) out.push_back(std::move(is));
  }
  return out;
}

Issue debate_issue(gateway::Gateway& gw, Issue issue, const ExpertAgent& expert, const ExpertAgent& pi,
                   const review::Dossier& dossier, int max_rounds) {
  if (max_rounds < 1) throw std::invalid_argument("max_rounds must be positive");
  if (issue.status != IssueStatus::open) throw std::invalid_argument("issue " + issue.issue_id + " is not open");
  if (expert.role != issue.raised_by) throw std::invalid_argument("issue is debated by the expert who raised it");
  if (pi.role != Role::pi) throw std::invalid_argument("debate counterpart must be the pi");

  const std::string digest = review::dossier_digest(dossier);
  const std::string full = review::dossier_fulltext(dossier);
  ResponseSchema judge{"satisfaction",
                       {{"satisfied", FieldKind::boolean}, {"position", FieldKind::string}}};
  try {
    for (int r = 1; r <= max_rounds; ++r) {
      const std::string base = "debate:" + issue.issue_id + ":";
      ChatRequest ex;
      ex.tag = base + "expert:" + std::to_string(r);
      ex.messages = {{GwRole::system, expert.persona_prompt},
                     {GwRole::user, issue_header(issue) + "\n\nProtocol digest:\n" + digest + "\nDeliberation so far:\n" +
                                        transcript_text(issue) +
                                        "\nState the ethical basis and implications of your concern to the "
                                        "principal investigator, responding to anything they have said."}};
      issue.transcript.push_back({expert.role, r, text::trim(gw.chat(ex))});

      ChatRequest pr;
      pr.tag = base + "pi:" + std::to_string(r);
      pr.messages = {{GwRole::system, pi.persona_prompt},
                     {GwRole::user, "Full dossier:\n" + full + "\n" + issue_header(issue) + "\n\nDeliberation so far:\n" +
                                        transcript_text(issue) +
                                        "\nRespond with clarification, justification or proposed mitigation."}};
      issue.transcript.push_back({Role::pi, r, text::trim(gw.chat(pr))});

      ChatRequest jd;
      jd.tag = base + "judge:" + std::to_string(r);
      jd.messages = {{GwRole::system, expert.persona_prompt},
                     {GwRole::user, issue_header(issue) + "\n\nDeliberation so far:\n" + transcript_text(issue) +
                                        "\nDoes the investigator's response adequately address the underlying "
                                        "ethical concern? State whether you are satisfied and your position."}};
      jd.response_schema = judge;
      auto verdict = gw.chat_json(jd);
      issue.position = text::collapse_whitespace(verdict["position"].get<std::string>());
      if (verdict["satisfied"].get<bool>()) {
        issue.status = IssueStatus::provisionally_resolved;
        return issue;
      }
    }
    issue.status = IssueStatus::unresolved;
  } catch (const GatewayError& e) {
    issue.status = IssueStatus::unresolved;
    issue.note = std::string("debate interrupted by a model failure: ") + e.what();
  }
  return issue;
}

std::vector<Dissent> find_dissent(std::span<const Issue> issues) {
  std::map<std::string, std::pair<std::set<Role>, std::set<Role>>> by_dim;  // resolved roles, unresolved roles
  for (const auto& is : issues) {
    auto& [res, unres] = by_dim[is.dimension];
    if (is.status == IssueStatus::provisionally_resolved) res.insert(is.raised_by);
    if (is.status == IssueStatus::unresolved) unres.insert(is.raised_by);
  }
  std::vector<Dissent> out;
  for (const auto& is : issues) {
    const auto& [res, unres] = by_dim[is.dimension];
    bool split = false;
    for (Role a : res) {
      for (Role b : unres) split = split || a != b;
    }
    if (!split || is.status == IssueStatus::open) continue;
    std::string stance = is.status == IssueStatus::provisionally_resolved ? "satisfied" : "maintains the concern";
    out.push_back({is.issue_id, is.raised_by, stance + (is.position.empty() ? "" : ": " + is.position)});
  }
  return out;
}

CommitteeReport synthesize(gateway::Gateway& gw, const std::string& dossier_id, std::vector<Issue> issues,
                           const ExpertAgent& secretary, Diagnostics& diag) {
  if (secretary.role != Role::secretary) throw std::invalid_argument("synthesis is drafted by the secretary");
  CommitteeReport r;
  r.dossier_id = dossier_id;
  r.phase1_issue_count = issues.size();
  std::set<std::string> ids;
  for (const auto& is : issues) {
    if (!ids.insert(is.issue_id).second) throw std::invalid_argument("duplicate issue " + is.issue_id);
    if (is.status == IssueStatus::open) throw std::invalid_argument("issue " + is.issue_id + " is still open");
  }
  r.dissent = find_dissent(issues);
  for (auto& is : issues) {
    if (is.status == IssueStatus::provisionally_resolved) {
      r.resolved.push_back(std::move(is));
    } else {
      std::string domain(domain_of(is.raised_by));
      r.unresolved.push_back({std::move(is), std::move(domain)});
    }
  }

  if (r.unresolved.empty()) {
    r.summary = "The committee raises no objection. " + std::to_string(r.resolved.size()) +
                " issue(s) were raised and all were provisionally resolved during deliberation.";
    return r;
  }

  std::string listing;
  for (const auto& u : r.unresolved) {
    listing += "- " + u.issue.issue_id + " [" + u.domain + ", " + u.issue.dimension + "] " + u.issue.description;
    if (!u.issue.position.empty()) listing += " Expert position: " + u.issue.position;
    if (!u.issue.note.empty()) listing += " Note: " + u.issue.note;
    listing += "\n";
  }
  for (const auto& d : r.dissent) {
    listing += "Divergent view on " + d.issue_id + " by " + std::string(to_string(d.role)) + ": " + d.position + "\n";
  }
  ChatRequest req;
  req.tag = "synthesis:" + dossier_id;
  req.messages = {{GwRole::system, secretary.persona_prompt},
                  {GwRole::user,
                   "Consolidate the unresolved issues below into a committee-level assessment. Attribute each "
                   "concern to its domain of expertise, summarize the substantive ethical risks, document divergent "
                   "views, and give recommendations, each categorized as protocol_revision, additional_safeguards "
                   "or further_review.\n\n" + listing}};
  req.response_schema = ResponseSchema{
      "committee_synthesis",
      {{"summary", FieldKind::string}, {"recommendations", FieldKind::array, true, {}, FieldKind::object}}};
  try {
    auto reply = gw.chat_json(req);
    r.summary = text::trim(reply["summary"].get<std::string>());
    static const std::set<std::string> kCategories = {"protocol_revision", "additional_safeguards", "further_review"};
    for (const auto& rec : reply["recommendations"]) {
      auto cat = rec.value("category", "");
      auto txt = rec.contains("text") && rec["text"].is_string() ? text::trim(rec["text"].get<std::string>()) : "";
      if (!kCategories.count(cat) || txt.empty()) {
        diag.warn("dropped malformed recommendation from synthesis");
        continue;
      }
      r.recommendations.push_back({cat, txt});
    }
  } catch (const GatewayError& e) {
    diag.warn("secretary synthesis failed: " + std::string(e.what()));
    r.summary.clear();
  }
  if (r.summary.empty()) {
    r.summary_flagged = true;
    r.summary = mechanical_summary(r.unresolved);
    r.recommendations.clear();
    for (const auto& u : r.unresolved) {
      r.recommendations.push_back(
          {"further_review", "Resolve the " + u.domain + " concern on " + u.issue.dimension + ": " + u.issue.description});
    }
  }
  return r;
}

CommitteeReport run_committee_review(gateway::Gateway& gw, const review::Dossier& dossier,
                                     const CommitteeOptions& options, const Templates& templates) {
  Diagnostics diag;
  auto roster = convene_committee(options.seed, templates);
  std::vector<ExpertAgent> voting;
  const ExpertAgent* secretary = nullptr;
  const ExpertAgent* pi = nullptr;
  for (const auto& a : roster) {
    if (a.voting) voting.push_back(a);
    if (a.role == Role::secretary) secretary = &a;
    if (a.role == Role::pi) pi = &a;
  }
  auto issues = independent_review(gw, dossier, voting, templates, diag, options.workers);
  auto expert_for = [&](Role r) -> const ExpertAgent& {
    for (const auto& a : roster) {
      if (a.role == r) return a;
    }
    throw std::logic_error("role missing from roster");
  };
  auto debate = [&](std::size_t i) {
    return debate_issue(gw, issues[i], expert_for(issues[i].raised_by), *pi, dossier, options.max_rounds);
  };
  issues = parallel_map(issues.size(), options.parallel_debates ? options.workers : 1, debate);
  for (const auto& is : issues) {
    if (!is.note.empty()) diag.warn("issue " + is.issue_id + ": " + is.note);
  }
  auto report = synthesize(gw, dossier.dossier_id, std::move(issues), *secretary, diag);
  report.seed = options.seed;
  report.max_rounds = options.max_rounds;
  report.roster = std::move(roster);
  report.warnings = diag.warnings();
  return report;
}

namespace {

nlohmann::json issue_json(const Issue& is) {
  nlohmann::json transcript = nlohmann::json::array();
  for (const auto& t : is.transcript) {
    transcript.push_back({{"speaker", to_string(t.speaker)}, {"round", t.round}, {"text", t.text}});
  }
  return {{"issue_id", is.issue_id},       {"dimension", is.dimension}, {"raised_by", to_string(is.raised_by)},
          {"description", is.description}, {"status", to_string(is.status)}, {"position", is.position},
          {"note", is.note},               {"transcript", transcript}};
}

}  // namespace

nlohmann::json to_json(const CommitteeReport& r) {
  nlohmann::json roster = nlohmann::json::array();
  for (const auto& a : r.roster) {
    roster.push_back({{"role", to_string(a.role)}, {"gender", to_string(a.gender)}, {"voting", a.voting}});
  }
  nlohmann::json resolved = nlohmann::json::array();
  for (const auto& is : r.resolved) resolved.push_back(issue_json(is));
  nlohmann::json unresolved = nlohmann::json::array();
  for (const auto& u : r.unresolved) {
    auto j = issue_json(u.issue);
    j["attributed_domain"] = u.domain;
    unresolved.push_back(std::move(j));
  }
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& rec : r.recommendations) recs.push_back({{"category", rec.category}, {"text", rec.text}});
  nlohmann::json dissent = nlohmann::json::array();
  for (const auto& d : r.dissent) {
    dissent.push_back({{"issue_id", d.issue_id}, {"role", to_string(d.role)}, {"position", d.position}});
  }
  return {{"dossier_id", r.dossier_id},
          {"seed", r.seed},
          {"max_rounds", r.max_rounds},
          {"roster", roster},
          {"phase1_issue_count", r.phase1_issue_count},
          {"resolved", resolved},
          {"unresolved", unresolved},
          {"summary", r.summary},
          {"summary_flagged", r.summary_flagged},
          {"recommendations", recs},
          {"dissent_records", dissent},
          {"warnings", r.warnings}};
}

std::string render_minutes(const CommitteeReport& r) {
  std::ostringstream out;
  out << "ETHICS COMMITTEE MINUTES\n"
      << "Dossier: " << r.dossier_id << "\n"
      << "Seed: " << r.seed << "  Debate rounds: " << r.max_rounds << "\n\n"
      << "ROSTER\n";
  for (const auto& a : r.roster) {
    out << "- " << to_string(a.role) << " (" << to_string(a.gender) << (a.voting ? ", voting" : ", non-voting")
        << ")\n";
  }

  std::vector<const Issue*> all;
  for (const auto& is : r.resolved) all.push_back(&is);
  for (const auto& u : r.unresolved) all.push_back(&u.issue);
  std::sort(all.begin(), all.end(), [&](const Issue* a, const Issue* b) {
    if (a->raised_by != b->raised_by) return role_before(a->raised_by, b->raised_by);
    auto da = std::find(dimensions().begin(), dimensions().end(), a->dimension);
    auto db = std::find(dimensions().begin(), dimensions().end(), b->dimension);
    if (da != db) return da < db;
    return a->issue_id < b->issue_id;
  });

  out << "\nPHASE I: INDEPENDENT EXPERT REVIEW\n";
  if (all.empty()) out << "No issues were raised.\n";
  for (const auto* is : all) out << "- " << is->issue_id << ": " << is->description << "\n";

  out << "\nPHASE II: EXPERT DELIBERATION\n";
  for (const auto* is : all) {
    out << "\n" << is->issue_id << " -> " << to_string(is->status) << "\n";
    for (const auto& t : is->transcript) {
      out << "  [round " << t.round << "] " << to_string(t.speaker) << ": " << t.text << "\n";
    }
    if (!is->position.empty()) out << "  Position: " << is->position << "\n";
    if (!is->note.empty()) out << "  Note: " << is->note << "\n";
  }

  out << "\nPHASE III: COMMITTEE ASSESSMENT\n" << r.summary << "\n";
  if (r.summary_flagged) out << "(assessment compiled mechanically)\n";
  if (!r.unresolved.empty()) {
    out << "\nUnresolved concerns:\n";
    for (const auto& u : r.unresolved) out << "- [" << u.domain << "] " << u.issue.issue_id << ": " << u.issue.description << "\n";
  }
  if (!r.recommendations.empty()) {
    out << "\nRecommendations:\n";
    for (const auto& rec : r.recommendations) out << "- (" << rec.category << ") " << rec.text << "\n";
  }
  if (!r.dissent.empty()) {
    out << "\nDivergent views:\n";
    for (const auto& d : r.dissent) out << "- " << d.issue_id << " " << to_string(d.role) << ": " << d.position << "\n";
  }
  if (!r.warnings.empty()) {
    out << "\nWARNINGS\n";
    for (const auto& w : r.warnings) out << "- " << w << "\n";
  }
  return out.str();
}

}  // namespace ethrev::committee
