#pragma once

// Seed derivation: every randomized quantity traces back to one u64 seed
// through named substreams.

#include <cstdint>
#include <random>
#include <string_view>

namespace otlab {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

/// Deterministic child seed for the substream called `name`.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view name);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view name, std::uint64_t index);

inline Rng make_rng(std::uint64_t seed, std::string_view name) { return Rng(derive_seed(seed, name)); }

}  // namespace otlab
