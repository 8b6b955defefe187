// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "ethrev/common/embedding.hpp"

namespace ethrev::cluster {

// Clusters as sorted member indices, ordered by their smallest member.
using Partition = std::vector<std::vector<std::size_t>>;

enum class Linkage { average, single, complete };

Linkage parse_linkage(std::string_view name);

struct Options {
  double threshold = 0.75;
  Linkage linkage = Linkage::average;
};

// Similarities closer than this are treated as equal; ties go to the pair
// with the lexicographically smallest (min member, min member).
inline constexpr double kTieEpsilon = 1e-12;

// Bottom-up agglomerative clustering over cosine similarity. Starting from
// singletons, repeatedly merges the most similar pair of clusters while their
// linkage similarity is >= threshold. Callers establish a canonical input
// order (by id) so results are order independent.
Partition agglomerate(std::span<const EmbeddingVector> vectors, const Options& options = {});

// Same as agglomerate() but over a precomputed symmetric similarity matrix.
Partition agglomerate_matrix(const std::vector<std::vector<double>>& similarity,
                             const Options& options = {});

// Member closest (by cosine) to the cluster centroid; ties go to the lowest index.
std::size_t representative(std::span<const std::size_t> members,
                           std::span<const EmbeddingVector> vectors);

}  // namespace ethrev::cluster
