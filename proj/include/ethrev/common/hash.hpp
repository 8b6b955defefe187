// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace ethrev {

// 64-bit FNV-1a with the seed folded into the offset basis. Stable across
// platforms, which std::hash is not.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0);

// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

// First 16 hex chars of sha256_hex; used for config hashes and versions.
std::string short_digest(std::string_view data);

}  // namespace ethrev
