// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <regex>
#include <sstream>

#include "fixtures.hpp"
#include "oracles.hpp"

namespace ethrev::testing {

TempDir::TempDir(std::string_view name) {
  std::random_device rd;
  path_ = std::filesystem::temp_directory_path() /
          ("ethrev-test-" + std::string(name) + "-" + std::to_string(rd()) + std::to_string(rd()));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace ethrev::testing

namespace ethrev::oracle {

Partition canonical(Partition p) {
  for (auto& c : p) std::sort(c.begin(), c.end());
  std::sort(p.begin(), p.end());
  return p;
}

Partition brute_force_clusters(const std::vector<std::vector<double>>& sim, double threshold,
                               cluster::Linkage linkage) {
  Partition clusters;
  for (std::size_t i = 0; i < sim.size(); ++i) clusters.push_back({i});
  auto link = [&](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    double sum = 0.0, mx = -2.0, mn = 2.0;
    for (auto x : a) {
      for (auto y : b) {
        sum += sim[x][y];
        mx = std::max(mx, sim[x][y]);
        mn = std::min(mn, sim[x][y]);
      }
    }
    switch (linkage) {
      case cluster::Linkage::single: return mx;
      case cluster::Linkage::complete: return mn;
      default: return sum / static_cast<double>(a.size() * b.size());
    }
  };
  while (clusters.size() > 1) {
    double best = -3.0;
    std::pair<std::size_t, std::size_t> best_key{SIZE_MAX, SIZE_MAX};
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      for (std::size_t j = i + 1; j < clusters.size(); ++j) {
        double v = link(clusters[i], clusters[j]);
        std::pair<std::size_t, std::size_t> key = std::minmax(clusters[i].front(), clusters[j].front());
        bool better = v > best + 1e-12 || (std::abs(v - best) <= 1e-12 && key < best_key);
        if (better) {
          best = v;
          best_key = key;
          bi = i;
          bj = j;
        }
      }
    }
    if (best + 1e-12 < threshold) break;
    clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(), clusters[bj].end());
    std::sort(clusters[bi].begin(), clusters[bi].end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bj));
    std::sort(clusters.begin(), clusters.end());
  }
  return canonical(clusters);
}

std::vector<std::vector<double>> cosine_matrix(const std::vector<EmbeddingVector>& v) {
  std::vector<std::vector<double>> m(v.size(), std::vector<double>(v.size(), 1.0));
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (i == j) continue;
      double dot = 0.0, na = 0.0, nb = 0.0;
      for (std::size_t d = 0; d < v[i].values.size(); ++d) {
        dot += v[i].values[d] * v[j].values[d];
        na += v[i].values[d] * v[i].values[d];
        nb += v[j].values[d] * v[j].values[d];
      }
      m[i][j] = dot / std::sqrt(na * nb);
    }
  }
  return m;
}

std::vector<std::string> regex_clauses(std::string_view body) {
  static const std::regex line_re(R"(^(?:(?:Article|Section)\s+\d+\.|\d+\.)\s+(.+)$)");
  static const std::regex split_re(R"(\.\s+(?=[A-Z]))");
  std::vector<std::string> out;
  std::istringstream in{std::string(body)};
  std::string line;
  while (std::getline(in, line)) {
    std::smatch m;
    if (!std::regex_match(line, m, line_re)) continue;
    std::string rest = m[1];
    std::sregex_token_iterator it(rest.begin(), rest.end(), split_re, -1), end;
    std::vector<std::string> parts(it, end);
    for (std::size_t i = 0; i < parts.size(); ++i) {
      std::string s = parts[i];
      if (i + 1 < parts.size()) s += ".";
      out.push_back(s);
    }
  }
  return out;
}

std::vector<std::string> brute_force_match(const std::vector<rules::CanonicalRule>& rules,
                                           const std::string& scenario, const std::set<std::string>& subjects) {
  std::vector<std::pair<int, std::string>> hits;
  for (const auto& r : rules) {
    bool in_scenario = r.scenario_tags.count(scenario) || r.scenario_tags.count("general");
    if (in_scenario && subjects.count(r.subject.label)) hits.push_back({std::stoi(r.rule_id.substr(1)), r.rule_id});
  }
  std::sort(hits.begin(), hits.end());
  std::vector<std::string> out;
  for (auto& h : hits) out.push_back(h.second);
  return out;
}

std::vector<std::size_t> top_k_cosine(const EmbeddingVector& query, const std::vector<EmbeddingVector>& items,
                                      std::size_t k) {
  std::vector<std::pair<double, std::size_t>> scored;
  for (std::size_t i = 0; i < items.size(); ++i) {
    double dot = 0.0, nq = 0.0, ni = 0.0;
    for (std::size_t d = 0; d < query.values.size(); ++d) {
      dot += query.values[d] * items[i].values[d];
      nq += query.values[d] * query.values[d];
      ni += items[i].values[d] * items[i].values[d];
    }
    scored.push_back({dot / std::sqrt(nq * ni), i});
  }
  // Exhaustive: every item is scored, then the list is fully ordered.
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < std::min(k, scored.size()); ++i) out.push_back(scored[i].second);
  return out;
}

std::vector<std::string> tokens(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

bool contains_answer(std::string_view cot, std::string_view answer) {
  auto c = tokens(cot);
  auto a = tokens(answer);
  if (a.empty()) return false;
  return std::search(c.begin(), c.end(), a.begin(), a.end()) != c.end();
}

bool shares_ngram(std::string_view a, std::string_view b, std::size_t n) {
  auto x = tokens(a);
  auto y = tokens(b);
  if (x.size() < n || y.size() < n) return false;
  std::set<std::vector<std::string>> grams;
  for (std::size_t i = 0; i + n <= x.size(); ++i) grams.insert({x.begin() + i, x.begin() + i + n});
  for (std::size_t i = 0; i + n <= y.size(); ++i) {
    if (grams.count({y.begin() + i, y.begin() + i + n})) return true;
  }
  return false;
}

}  // namespace ethrev::oracle
