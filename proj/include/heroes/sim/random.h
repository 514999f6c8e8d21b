#pragma once

#include <cstdint>
#include <random>

namespace heroes::sim {

std::uint64_t splitmix64(std::uint64_t x);

// Independent stream for one (seed, query) pair, stable under any generation order.
std::mt19937_64 query_stream(std::uint64_t seed, std::int64_t query_id, std::uint64_t salt = 0);

}  // namespace heroes::sim
