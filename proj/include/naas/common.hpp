#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace naas {

using u64 = std::uint64_t;

// Raised on malformed input files; message carries the file/field locus.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when a search cannot produce any valid candidate within its budget.
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline u64 ceil_div(u64 a, u64 b) { return (a + b - 1) / b; }

// splitmix64 finalizer; used to derive independent RNG streams.
inline u64 mix64(u64 x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline u64 derive_seed(u64 base, u64 salt) { return mix64(base ^ mix64(salt)); }

inline u64 derive_seed(u64 base, std::string_view tag) {
  u64 h = 0xcbf29ce484222325ull;
  for (unsigned char c : tag) h = (h ^ c) * 0x100000001b3ull;
  return derive_seed(base, h);
}

}  // namespace naas
