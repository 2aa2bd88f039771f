#include "scplabel/rng.hpp"

namespace scplabel {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Seed derive_seed(Seed root, std::string_view stage) {
  return mix64(root ^ fnv1a64(stage));
}

Seed derive_seed(Seed root, std::uint64_t index) {
  return mix64(mix64(root) + index);
}

}  // namespace scplabel
