#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <random>

#include "cyclodiff/padic_scalar.hpp"

namespace cyclodiff {

/// splitmix64 finalizer; used to derive independent per-cell seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
  return mix_seed(mix_seed(mix_seed(seed ^ mix_seed(a)) ^ mix_seed(b + 0x51)) ^ mix_seed(c + 0xa3));
}

/// Deterministic source of random residues. Only raw engine output is used,
/// so streams are identical across standard libraries.
class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform-ish integer in [0, bound) for small bounds.
  std::uint64_t below(std::uint64_t bound) { return bound == 0 ? 0 : next() % bound; }

  /// Residue modulo p^k built from enough engine words to make the bias negligible.
  mpz_class residue(unsigned p, int k) {
    const mpz_class& modulus = prime_power(p, k);
    std::size_t words = mpz_sizeinbase(modulus.get_mpz_t(), 2) / 64 + 2;
    mpz_class acc = 0;
    for (std::size_t i = 0; i < words; ++i) {
      acc <<= 64;
      acc += mpz_class(static_cast<unsigned long>(next()));
    }
    return mod_prime_power(acc, p, k);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cyclodiff
