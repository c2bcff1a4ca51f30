#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace topictrend {

/// 64-bit seed mixer used to derive independent substreams from one
/// global seed.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed for the named substream `name` of `seed`; distinct names give
/// statistically independent engines.
std::uint64_t substream_seed(std::uint64_t seed, std::string_view name);
std::uint64_t substream_seed(std::uint64_t seed, std::string_view name, std::uint64_t index);

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed, std::string_view name) {
  return Engine{substream_seed(seed, name)};
}

}  // namespace topictrend
