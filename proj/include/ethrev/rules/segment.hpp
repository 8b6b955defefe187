// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string_view>
#include <vector>

#include "ethrev/rules/types.hpp"

namespace ethrev::rules {

// Splits a regulation body into clauses at sentence boundaries and at
// enumeration markers:
//   headers     Article 3 / Section 2.1 / Chapter IV (a trailing title line is skipped)
//   list items  (a)  (iv)  (1)  1.  a)  -  *  •
// Markers and headers are not part of the clause span. A sentence ends at
// [.!?] followed by whitespace and an uppercase letter, digit, '(' or end of
// text, except after common abbreviations. ';' and ':' end a clause only when
// an enumeration marker follows. Clause ids are "{doc_id}/c001", ...
// Spans are byte offsets into the body; text is the whitespace-collapsed span.
std::vector<Clause> segment_clauses(const RegulatoryDocument& doc);

// Length of the header or list marker starting at `pos` (0 if none). Exposed
// for tests.
std::size_t marker_length(std::string_view body, std::size_t pos);

}  // namespace ethrev::rules
