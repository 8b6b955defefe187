// SPDX-License-Identifier: Apache-2.0
#include "ethrev/review/dossier.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>
#include <stdexcept>

#include "ethrev/common/io.hpp"
#include "ethrev/common/text.hpp"

namespace ethrev::review {
namespace {

struct WordPos {
  std::size_t start;
  std::size_t end;
};

std::vector<WordPos> word_positions(std::string_view s) {
  std::vector<WordPos> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i >= s.size()) break;
    std::size_t b = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    out.push_back({b, i});
  }
  return out;
}

std::map<std::string, std::string> parse_metadata(std::string_view content) {
  std::map<std::string, std::string> out;
  std::istringstream in{std::string(content)};
  std::string line;
  while (std::getline(in, line)) {
    auto t = text::trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto colon = t.find(':');
    if (colon == std::string::npos) throw io::IoError("metadata line without ':': " + t);
    auto key = text::trim(t.substr(0, colon));
    if (key.empty()) throw io::IoError("metadata line without key: " + t);
    out[key] = text::trim(t.substr(colon + 1));
  }
  return out;
}

}  // namespace

const Chunk* Dossier::find_chunk(std::string_view chunk_id) const {
  for (const auto& c : chunks) {
    if (c.chunk_id == chunk_id) return &c;
  }
  return nullptr;
}

std::vector<Chunk> chunk_sections(const std::vector<Section>& sections, const ChunkingParams& params) {
  if (params.size == 0 || params.overlap >= params.size) {
    throw std::invalid_argument("chunking needs size > overlap >= 0");
  }
  std::vector<Chunk> out;
  std::set<std::string> names;
  for (const auto& sec : sections) {
    if (!names.insert(sec.name).second) throw std::invalid_argument("duplicate section " + sec.name);
    auto words = word_positions(sec.text);
    std::size_t step = params.size - params.overlap;
    std::size_t n = 0;
    for (std::size_t first = 0; first < words.size(); first += step) {
      std::size_t last = std::min(first + params.size, words.size());
      rules::CharSpan span{words[first].start, words[last - 1].end};
      out.push_back({sec.name + ":" + std::to_string(++n), sec.name,
                     text::collapse_whitespace(std::string_view(sec.text).substr(span.start, span.end - span.start)),
                     span});
      if (last == words.size()) break;
    }
  }
  return out;
}

Dossier make_dossier(std::string dossier_id, std::map<std::string, std::string> metadata,
                     std::vector<Section> sections, const ChunkingParams& params) {
  if (dossier_id.empty()) throw std::invalid_argument("dossier without id");
  Dossier d;
  d.dossier_id = std::move(dossier_id);
  d.metadata = std::move(metadata);
  d.sections = std::move(sections);
  d.chunking = params;
  d.chunks = chunk_sections(d.sections, params);
  return d;
}

Dossier load_dossier(const std::filesystem::path& path, const ChunkingParams& params) {
  if (std::filesystem::is_directory(path)) {
    std::map<std::string, std::string> meta;
    auto meta_path = path / "metadata.txt";
    if (std::filesystem::exists(meta_path)) meta = parse_metadata(io::read_file(meta_path));
    std::string id = path.filename().string();
    if (id.empty()) id = path.parent_path().filename().string();
    if (auto it = meta.find("dossier_id"); it != meta.end()) {
      id = it->second;
      meta.erase(it);
    }
    std::vector<Section> sections;
    for (const auto& f : io::list_files(path, ".txt")) {
      if (f.filename() == "metadata.txt") continue;
      sections.push_back({f.stem().string(), io::read_file(f)});
    }
    return make_dossier(std::move(id), std::move(meta), std::move(sections), params);
  }
  auto j = io::read_json(path);
  std::map<std::string, std::string> meta;
  const auto metadata = j.value("metadata", nlohmann::json::object());
  for (const auto& [k, v] : metadata.items()) {
    meta[k] = v.is_string() ? v.get<std::string>() : v.dump();
  }
  std::vector<Section> sections;
  for (const auto& s : j.at("sections")) {
    sections.push_back({s.at("name").get<std::string>(), s.at("text").get<std::string>()});
  }
  return make_dossier(j.at("dossier_id").get<std::string>(), std::move(meta), std::move(sections), params);
}

nlohmann::json dossier_json(const Dossier& d) {
  nlohmann::json sections = nlohmann::json::array();
  for (const auto& s : d.sections) sections.push_back({{"name", s.name}, {"text", s.text}});
  return {{"dossier_id", d.dossier_id}, {"metadata", d.metadata}, {"sections", sections}};
}

static std::string metadata_block(const Dossier& d) {
  std::string out;
  for (const auto& [k, v] : d.metadata) out += k + ": " + v + "\n";
  return out;
}

std::string dossier_digest(const Dossier& d, std::size_t word_budget) {
  std::string out = "Dossier " + d.dossier_id + "\n" + metadata_block(d);
  if (d.sections.empty()) return out;
  std::size_t per_section = std::max<std::size_t>(word_budget / d.sections.size(), 1);
  for (const auto& sec : d.sections) {
    out += "\n## " + sec.name + "\n";
    std::size_t used = 0;
    std::vector<std::string> kept;
    for (const auto& sentence : text::sentences(sec.text)) {
      std::size_t n = text::word_count(sentence);
      if (!kept.empty() && used + n > per_section) break;
      kept.push_back(sentence);
      used += n;
    }
    out += text::join(kept, " ") + "\n";
  }
  return out;
}

std::string dossier_fulltext(const Dossier& d) {
  std::string out = "Dossier " + d.dossier_id + "\n" + metadata_block(d);
  for (const auto& sec : d.sections) out += "\n## " + sec.name + "\n" + text::collapse_whitespace(sec.text) + "\n";
  return out;
}

}  // namespace ethrev::review
