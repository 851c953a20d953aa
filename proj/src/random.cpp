#include "ppknn/random.hpp"

#include <random>

#include "ppknn/errors.hpp"

namespace ppknn {

namespace {

constexpr int kMillerRabinRounds = 64;

mpz_class entropy_seed() {
  std::random_device dev;
  mpz_class seed = 0;
  for (int i = 0; i < 8; ++i) {
    seed <<= 32;
    seed += dev();
  }
  return seed;
}

}  // namespace

RandomSource::RandomSource() : state_(gmp_randinit_mt) {
  state_.seed(entropy_seed());
}

RandomSource::RandomSource(uint64_t seed) : state_(gmp_randinit_mt) {
  state_.seed(mpz_class(static_cast<unsigned long>(seed >> 32)) << 32 |
              mpz_class(static_cast<unsigned long>(seed & 0xffffffffULL)));
}

mpz_class RandomSource::bits(unsigned bit_count) {
  std::lock_guard lock(mutex_);
  return state_.get_z_bits(bit_count);
}

mpz_class RandomSource::below(const mpz_class& bound) {
  if (bound <= 0) fail(Errc::insecure_parameters, "random bound must be positive");
  std::lock_guard lock(mutex_);
  return state_.get_z_range(bound);
}

mpz_class RandomSource::nonzero_below(const mpz_class& bound) {
  if (bound <= 1) fail(Errc::insecure_parameters, "random bound must exceed 1");
  std::lock_guard lock(mutex_);
  mpz_class r;
  do {
    r = state_.get_z_range(bound);
  } while (r == 0);
  return r;
}

mpz_class RandomSource::unit_modulo(const mpz_class& n) {
  if (n <= 1) fail(Errc::insecure_parameters, "modulus must exceed 1");
  std::lock_guard lock(mutex_);
  mpz_class r, g;
  do {
    r = state_.get_z_range(n);
    mpz_gcd(g.get_mpz_t(), r.get_mpz_t(), n.get_mpz_t());
  } while (r == 0 || g != 1);
  return r;
}

mpz_class RandomSource::probable_prime(unsigned bit_count) {
  if (bit_count < 2) fail(Errc::insecure_parameters, "prime bit length too small");
  std::lock_guard lock(mutex_);
  for (;;) {
    mpz_class candidate = state_.get_z_bits(bit_count);
    mpz_setbit(candidate.get_mpz_t(), bit_count - 1);
    mpz_setbit(candidate.get_mpz_t(), 0);
    // Walk odd numbers from the sample; resample when the walk would overflow
    // the requested bit length.
    while (mpz_sizeinbase(candidate.get_mpz_t(), 2) == bit_count) {
      if (mpz_probab_prime_p(candidate.get_mpz_t(), kMillerRabinRounds) != 0) {
        return candidate;
      }
      candidate += 2;
    }
  }
}

uint64_t RandomSource::below_u64(uint64_t bound) {
  if (bound == 0) fail(Errc::insecure_parameters, "random bound must be positive");
  mpz_class r = below(mpz_class(static_cast<unsigned long>(bound)));
  return mpz_get_ui(r.get_mpz_t());
}

}  // namespace ppknn
