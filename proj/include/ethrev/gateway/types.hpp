// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace ethrev::gateway {

enum class Role { system, user, assistant };

std::string_view to_string(Role role);

struct ChatMessage {
  Role role = Role::user;
  std::string text;
};

enum class FieldKind { string, number, integer, boolean, array, object };

struct SchemaField {
  std::string name;
  FieldKind kind = FieldKind::string;
  bool required = true;
  // Allowed values for string fields (empty = any).
  std::vector<std::string> allowed = {};
  // Element kind for arrays (unset = any).
  std::optional<FieldKind> items = std::nullopt;
  // Inclusive bounds for numeric fields.
  std::optional<double> minimum = std::nullopt;
  std::optional<double> maximum = std::nullopt;
};

// Structured-output contract for a chat call. The schema is recited in the
// prompt and the reply must be a single JSON object satisfying it.
struct ResponseSchema {
  std::string name;
  std::vector<SchemaField> fields;

  // Human/LLM readable rendering appended to the prompt.
  std::string describe() const;
  // Empty when `value` satisfies the schema, otherwise the first violation.
  std::optional<std::string> violation(const nlohmann::json& value) const;
};

struct ChatRequest {
  // Stable name of the logical call (e.g. "verdict:R003"). Mock playbooks
  // key on it; live backends ignore it.
  std::string tag;
  std::vector<ChatMessage> messages;
  // Unset means the gateway default (0.1).
  std::optional<double> temperature;
  int max_tokens = 1024;
  std::optional<ResponseSchema> response_schema;
};

struct RerankCandidate {
  std::string id;
  std::string text;
};

struct RerankScore {
  std::string candidate_id;
  double score = 0.0;
};

enum class ErrorKind { transport, schema_violation, playbook_miss, invalid_request };

std::string_view to_string(ErrorKind kind);

class GatewayError : public std::runtime_error {
 public:
  GatewayError(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Parses a model reply into a JSON object: surrounding whitespace and a
// single markdown code fence are tolerated, nothing else is.
std::optional<nlohmann::json> parse_json_reply(std::string_view reply);

}  // namespace ethrev::gateway
