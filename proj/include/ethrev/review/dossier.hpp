// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ethrev/rules/types.hpp"

namespace ethrev::review {

struct ChunkingParams {
  std::size_t size = 400;     // words per window
  std::size_t overlap = 80;   // words shared by consecutive windows
};

struct Section {
  std::string name;
  std::string text;
};

struct Chunk {
  std::string chunk_id;  // "{section}:{n}", n from 1
  std::string section;
  std::string text;      // whitespace-collapsed
  rules::CharSpan span;  // byte offsets into the section text
};

struct Dossier {
  std::string dossier_id;
  std::map<std::string, std::string> metadata;  // study_type, participant_population, intervention, ...
  std::vector<Section> sections;
  std::vector<Chunk> chunks;
  ChunkingParams chunking;

  const Chunk* find_chunk(std::string_view chunk_id) const;
};

// Word windows over each section separately, so no chunk straddles two
// sections. The last window of a section may be shorter.
std::vector<Chunk> chunk_sections(const std::vector<Section>& sections, const ChunkingParams& params);

Dossier make_dossier(std::string dossier_id, std::map<std::string, std::string> metadata,
                     std::vector<Section> sections, const ChunkingParams& params = {});

// Either a JSON file {dossier_id, metadata: {..}, sections: [{name, text}]},
// or a directory holding metadata.txt ("key: value" lines, '#' comments) and
// one .txt file per section (section name = file stem, ordered by filename).
// A directory dossier's id is the directory name unless metadata sets dossier_id.
Dossier load_dossier(const std::filesystem::path& path, const ChunkingParams& params = {});

nlohmann::json dossier_json(const Dossier& d);

// Metadata lines, then each section header followed by its leading sentences,
// with the word budget split evenly across sections.
std::string dossier_digest(const Dossier& d, std::size_t word_budget = 600);

// Metadata lines followed by every section in full.
std::string dossier_fulltext(const Dossier& d);

}  // namespace ethrev::review
