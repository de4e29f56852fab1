#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

#include "snl/types.hpp"

namespace snl {

// Independent generator keyed by a base seed and a list of integers. Used
// wherever a draw must not depend on how many other draws happened first.
inline Rng keyed_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::vector<std::uint32_t> words;
  words.reserve(2 + 2 * keys.size());
  auto push = [&](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(seed);
  for (auto k : keys) push(k);
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

}  // namespace snl
