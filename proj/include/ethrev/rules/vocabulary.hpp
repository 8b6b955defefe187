// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ethrev/rules/types.hpp"

namespace ethrev::rules {

// investigator, institution, participant, data_controller, sponsor, committee
const std::vector<std::string>& subject_vocabulary();

// Maps a subject phrase onto the vocabulary ("principal investigator" ->
// investigator, "IRB" -> committee, ...). Unknown phrases become their own
// label: lowercased, punctuation stripped, spaces as underscores.
std::string normalize_subject(std::string_view raw);

// Maps a deontic surface form onto the four-value enum:
//   must      shall, must, is required to, has to, ...
//   must_not  must not, shall not, may not, is prohibited, ...
//   may       may, is permitted to, can, ...
//   should    should, is encouraged to, is recommended to, ...
// Enum names ("must_not") are accepted as well.
std::optional<Deontic> parse_deontic(std::string_view surface);

// Number of deontic surface forms found in free text (longest match wins, so
// "must not" counts once).
std::size_t count_deontic_markers(std::string_view text);

}  // namespace ethrev::rules
