// SPDX-License-Identifier: Apache-2.0
#include "ethrev/gateway/types.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ethrev/common/text.hpp"

namespace ethrev::gateway {
namespace {

std::string_view kind_name(FieldKind kind) {
  switch (kind) {
    case FieldKind::string: return "string";
    case FieldKind::number: return "number";
    case FieldKind::integer: return "integer";
    case FieldKind::boolean: return "boolean";
    case FieldKind::array: return "array";
    case FieldKind::object: return "object";
  }
  return "?";
}

bool matches_kind(const nlohmann::json& v, FieldKind kind) {
  switch (kind) {
    case FieldKind::string: return v.is_string();
    case FieldKind::number: return v.is_number();
    case FieldKind::integer:
      if (v.is_number_integer()) return true;
      if (v.is_number_float()) {
        double d = v.get<double>();
        return std::isfinite(d) && std::floor(d) == d;
      }
      return false;
    case FieldKind::boolean: return v.is_boolean();
    case FieldKind::array: return v.is_array();
    case FieldKind::object: return v.is_object();
  }
  return false;
}

}  // namespace

std::string_view to_string(Role role) {
  switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "user";
}

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::transport: return "transport";
    case ErrorKind::schema_violation: return "schema_violation";
    case ErrorKind::playbook_miss: return "playbook_miss";
    case ErrorKind::invalid_request: return "invalid_request";
  }
  return "unknown";
}

std::string ResponseSchema::describe() const {
  std::ostringstream out;
  out << "Respond with a single JSON object (schema \"" << name
      << "\") and nothing else. Fields:\n";
  for (const auto& f : fields) {
    out << "- \"" << f.name << "\": " << kind_name(f.kind);
    if (f.items) out << " of " << kind_name(*f.items);
    if (!f.allowed.empty()) out << " one of [" << text::join(f.allowed, ", ") << "]";
    if (f.minimum) out << " >= " << *f.minimum;
    if (f.maximum) out << " <= " << *f.maximum;
    out << (f.required ? " (required)" : " (optional)") << "\n";
  }
  return out.str();
}

std::optional<std::string> ResponseSchema::violation(const nlohmann::json& value) const {
  if (!value.is_object()) return "reply is not a JSON object";
  for (const auto& f : fields) {
    auto it = value.find(f.name);
    if (it == value.end() || it->is_null()) {
      if (f.required) return "missing field '" + f.name + "'";
      continue;
    }
    if (!matches_kind(*it, f.kind)) {
      return "field '" + f.name + "' is not " + std::string(kind_name(f.kind));
    }
    if (!f.allowed.empty()) {
      auto s = it->get<std::string>();
      if (std::find(f.allowed.begin(), f.allowed.end(), s) == f.allowed.end()) {
        return "field '" + f.name + "' has disallowed value '" + s + "'";
      }
    }
    if (f.kind == FieldKind::number || f.kind == FieldKind::integer) {
      double d = it->get<double>();
      if ((f.minimum && d < *f.minimum) || (f.maximum && d > *f.maximum)) {
        return "field '" + f.name + "' out of range";
      }
    }
    if (f.kind == FieldKind::array && f.items) {
      for (const auto& el : *it) {
        if (!matches_kind(el, *f.items)) {
          return "element of '" + f.name + "' is not " + std::string(kind_name(*f.items));
        }
      }
    }
  }
  return std::nullopt;
}

std::optional<nlohmann::json> parse_json_reply(std::string_view reply) {
  std::string body = text::trim(reply);
  if (body.starts_with("```")) {
    auto first_nl = body.find('\n');
    auto last_fence = body.rfind("```");
    if (first_nl == std::string::npos || last_fence <= first_nl) return std::nullopt;
    body = text::trim(std::string_view(body).substr(first_nl + 1, last_fence - first_nl - 1));
  }
  auto parsed = nlohmann::json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (parsed.is_discarded() || !parsed.is_object()) return std::nullopt;
  return parsed;
}

}  // namespace ethrev::gateway
