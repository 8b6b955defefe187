// SPDX-License-Identifier: Apache-2.0
#include "ethrev/common/embedding.hpp"

#include <cmath>
#include <stdexcept>

namespace ethrev {

double EmbeddingVector::norm() const { return std::sqrt(dot(values, values)); }

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("embedding dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  double na = a.norm();
  double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a.values, b.values) / (na * nb);
}

void normalize(EmbeddingVector& v) {
  double n = v.norm();
  if (n == 0.0) return;
  for (double& x : v.values) x /= n;
}

}  // namespace ethrev
