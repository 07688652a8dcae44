#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace gazessl {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

// Derive an independent sub-seed from a parent seed and a stream name.
// Adding a new named stream never perturbs the existing ones.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view stream);
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index);

}  // namespace gazessl
