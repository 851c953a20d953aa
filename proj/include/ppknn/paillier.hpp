#pragma once

#include <gmpxx.h>

#include <string>

#include "ppknn/random.hpp"

namespace ppknn {

/// One Paillier ciphertext: a residue modulo N^2.
struct Ciphertext {
  mpz_class value;

  friend bool operator==(const Ciphertext&, const Ciphertext&) = default;
};

struct PublicKey {
  mpz_class n;          // modulus, product of two primes
  mpz_class n_squared;  // cached N^2
  mpz_class g;          // generator, fixed to N + 1
  unsigned bits = 0;    // bit size of N
};

struct SecretKey {
  mpz_class p, q;
  mpz_class lambda;  // lcm(p-1, q-1)
  mpz_class mu;      // (L(g^lambda mod N^2))^-1 mod N

  // Decryption cache: c^lambda mod N^2 is evaluated by CRT over p^2 and q^2
  // with exponents reduced mod the group orders p(p-1) and q(q-1).
  mpz_class n, n_squared;
  mpz_class p_squared, q_squared;
  mpz_class lambda_p, lambda_q;
  mpz_class q_squared_inv;  // (q^2)^-1 mod p^2
};

struct KeyPair {
  PublicKey pub;
  SecretKey sec;
};

inline constexpr unsigned kMinKeyBits = 256;

/// Generates a key pair whose modulus has exactly bit_length bits.
/// bit_length must be even and at least kMinKeyBits.
KeyPair keygen(unsigned bit_length, RandomSource& rng);

/// Rebuilds a secret key (and its cache) from the stored prime factors.
SecretKey secret_key_from_primes(const mpz_class& p, const mpz_class& q);

PublicKey public_key_from_modulus(const mpz_class& n);
PublicKey public_key_of(const SecretKey& sec);

/// E(m) = g^m * r^N mod N^2 with fresh r coprime to N. Requires 0 <= m < N.
Ciphertext encrypt(const PublicKey& pk, const mpz_class& m, RandomSource& rng);

/// Inverts encrypt; the ciphertext must be a unit modulo N^2.
mpz_class decrypt(const SecretKey& sk, const Ciphertext& c);

/// Decrypts to (a + b) mod N.
Ciphertext add(const PublicKey& pk, const Ciphertext& a, const Ciphertext& b);

/// c^k mod N^2; decrypts to (k * m) mod N.
Ciphertext scalar_mul(const PublicKey& pk, const Ciphertext& c, const mpz_class& k);

/// Decrypts to (-m) mod N. Computed as the modular inverse of c, which is a
/// ciphertext of the additive inverse, avoiding a full exponentiation.
Ciphertext negate(const PublicKey& pk, const Ciphertext& c);

/// Decrypts to (a - b) mod N.
Ciphertext sub(const PublicKey& pk, const Ciphertext& a, const Ciphertext& b);

/// Fresh ciphertext with the same plaintext and new randomness.
Ciphertext rerandomize(const PublicKey& pk, const Ciphertext& c, RandomSource& rng);

// Key files are line oriented, one `name=hex` field per line, lowercase
// hexadecimal without leading zeros. The public file carries `n` and `bits`;
// the secret file carries `p` and `q`.
void save_public_key(const std::string& path, const PublicKey& pk);
PublicKey load_public_key(const std::string& path);
void save_secret_key(const std::string& path, const SecretKey& sk);
SecretKey load_secret_key(const std::string& path);

}  // namespace ppknn
