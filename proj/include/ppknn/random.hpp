#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <mutex>

namespace ppknn {

/// Uniform big-integer randomness on top of GMP's Mersenne Twister.
/// Every draw locks the underlying state, so one source may be shared
/// between threads (contention is negligible next to the modexp work).
class RandomSource {
public:
  /// Seeded from the OS entropy source.
  RandomSource();

  /// Deterministic stream, for tests and reproducible transcripts.
  explicit RandomSource(uint64_t seed);

  /// Uniform in [0, 2^bit_count).
  mpz_class bits(unsigned bit_count);

  /// Uniform in [0, bound). bound must be positive.
  mpz_class below(const mpz_class& bound);

  /// Uniform in [1, bound). bound must exceed 1.
  mpz_class nonzero_below(const mpz_class& bound);

  /// Uniform in [1, n) with gcd(result, n) = 1.
  mpz_class unit_modulo(const mpz_class& n);

  /// Random probable prime of exactly bit_count bits
  /// (Miller-Rabin, 64 rounds).
  mpz_class probable_prime(unsigned bit_count);

  uint64_t below_u64(uint64_t bound);

private:
  std::mutex mutex_;
  gmp_randclass state_;
};

}  // namespace ppknn
