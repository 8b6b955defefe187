// SPDX-License-Identifier: Apache-2.0
#include "ethrev/common/cluster.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

namespace ethrev::cluster {

Linkage parse_linkage(std::string_view name) {
  if (name == "average") return Linkage::average;
  if (name == "single") return Linkage::single;
  if (name == "complete") return Linkage::complete;
  throw std::invalid_argument("unknown linkage: " + std::string(name));
}

Partition agglomerate_matrix(const std::vector<std::vector<double>>& similarity,
                             const Options& options) {
  const std::size_t n = similarity.size();
  // Slot k always holds the cluster whose smallest member is k: merging j
  // into i with i < j keeps slot i.
  std::vector<std::vector<std::size_t>> members(n);
  std::vector<bool> active(n, true);
  // For average linkage this holds the sum of pairwise similarities; for
  // single/complete it holds the current max/min.
  std::vector<std::vector<double>> link(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    if (similarity[i].size() != n) throw std::invalid_argument("similarity matrix is not square");
    members[i] = {i};
    for (std::size_t j = 0; j < n; ++j) link[i][j] = similarity[i][j];
  }

  auto linkage_value = [&](std::size_t i, std::size_t j) {
    if (options.linkage == Linkage::average) {
      return link[i][j] / static_cast<double>(members[i].size() * members[j].size());
    }
    return link[i][j];
  };

  while (true) {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t bi = n;
    std::size_t bj = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!active[j]) continue;
        double v = linkage_value(i, j);
        if (bi == n || v > best + kTieEpsilon) {
          best = v;
          bi = i;
          bj = j;
        }
      }
    }
    if (bi == n || best + kTieEpsilon < options.threshold) break;

    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == bi || k == bj) continue;
      double merged = 0.0;
      switch (options.linkage) {
        case Linkage::average: merged = link[bi][k] + link[bj][k]; break;
        case Linkage::single: merged = std::max(link[bi][k], link[bj][k]); break;
        case Linkage::complete: merged = std::min(link[bi][k], link[bj][k]); break;
      }
      link[bi][k] = link[k][bi] = merged;
    }
    members[bi].insert(members[bi].end(), members[bj].begin(), members[bj].end());
    std::sort(members[bi].begin(), members[bi].end());
    members[bj].clear();
    active[bj] = false;
  }

  Partition out;
  for (std::size_t i = 0; i < n; ++i) {
    if (active[i]) out.push_back(std::move(members[i]));
  }
  return out;
}

Partition agglomerate(std::span<const EmbeddingVector> vectors, const Options& options) {
  const std::size_t n = vectors.size();
  std::vector<std::vector<double>> sim(n, std::vector<double>(n, 1.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      sim[i][j] = sim[j][i] = cosine(vectors[i], vectors[j]);
    }
  }
  return agglomerate_matrix(sim, options);
}

std::size_t representative(std::span<const std::size_t> members,
                           std::span<const EmbeddingVector> vectors) {
  if (members.empty()) throw std::invalid_argument("representative of an empty cluster");
  EmbeddingVector centroid{std::vector<double>(vectors[members.front()].dim(), 0.0)};
  for (std::size_t m : members) {
    const auto& v = vectors[m].values;
    for (std::size_t d = 0; d < v.size(); ++d) centroid.values[d] += v[d];
  }
  std::vector<std::size_t> order(members.begin(), members.end());
  std::sort(order.begin(), order.end());
  std::size_t best = order.front();
  double best_sim = -std::numeric_limits<double>::infinity();
  for (std::size_t m : order) {
    double s = cosine(vectors[m], centroid);
    if (s > best_sim + kTieEpsilon) {
      best = m;
      best_sim = s;
    }
  }
  return best;
}

}  // namespace ethrev::cluster
