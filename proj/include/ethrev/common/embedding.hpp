// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ethrev {

// Dense sentence embedding. Vectors handed out by the gateway are unit length.
struct EmbeddingVector {
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
  double norm() const;
  bool operator==(const EmbeddingVector&) const = default;
};

double dot(std::span<const double> a, std::span<const double> b);

// Cosine similarity; 0 when either vector is zero.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

// Scales to unit L2 norm in place. Zero vectors are left untouched.
void normalize(EmbeddingVector& v);

}  // namespace ethrev
