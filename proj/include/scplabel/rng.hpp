#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace scplabel {

using Seed = std::uint64_t;
using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to decorrelate seeds before they reach the engine.
std::uint64_t mix64(std::uint64_t x);

/// 64-bit FNV-1a over the bytes of `text`.
std::uint64_t fnv1a64(std::string_view text);

/// Seed splitting rule: every pipeline stage draws from
/// mix64(root ^ fnv1a64(stage)), so a stage run standalone with the same
/// root seed sees exactly the randomness it sees inside `pipeline`.
Seed derive_seed(Seed root, std::string_view stage);

/// Sub-seed for an indexed repetition (restarts, trials).
Seed derive_seed(Seed root, std::uint64_t index);

inline Rng make_rng(Seed seed) { return Rng(mix64(seed)); }

}  // namespace scplabel
