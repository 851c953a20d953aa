#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ppknn/paillier.hpp"
#include "ppknn/random.hpp"
#include "ppknn/transport.hpp"

namespace ppknn {

struct ProtocolConfig {
  /// The bit budget l: every protocol value, in particular every squared
  /// distance, must lie in [0, 2^l).
  unsigned bit_budget_l = 32;
};

/// Enforces the blinding headroom rule 4 * 2^l < N.
void validate_config(const ProtocolConfig& config, const PublicKey& pk);

/// Bit-decomposed encrypted integer; index 0 is the least significant bit.
struct EncryptedBits {
  std::vector<Ciphertext> bits;

  size_t size() const { return bits.size(); }
};

/// A bit-decomposed comparison key plus the ciphertext that travels with it
/// (for k-NN: a distance and its class label).
struct MinEntry {
  EncryptedBits key_bits;
  Ciphertext payload;
};

/// Atomic services P2 offers. Each P1 request carries its opcode as the
/// first payload entry; the remaining entries are the operands.
enum class P2Op : unsigned long {
  hello = 1,      // [n] -> [1 if the peer key matches, else 0]
  mul = 2,        // [a', b'] -> [E(D(a') * D(b') mod N)]
  parity = 3,     // [c] -> [E(D(c) mod 2)]
  zero_test = 4,  // [c] -> [D(c) == 0 ? 1 : 0]
  find_zero = 5,  // [c_0 .. c_t-1] -> [first index with D(c_i) == 0, else t]
  unblind = 6,    // [c] -> [D(c)]
  finish = 7,     // [] -> [] and the session ends
};

struct ProtocolStats {
  uint64_t sm_calls = 0;
  uint64_t lsb_calls = 0;
  uint64_t sbd_calls = 0;
  uint64_t smin_calls = 0;
  uint64_t sessions_opened = 0;
};

enum class SmVariant {
  fixed_unblinding,  // cancels all three cross terms; the default
  published_literal,  // the published unblinding, kept as a regression foil
};

/// P1 side of every sub-protocol: drives the message exchanges and performs
/// the public-key algebra. Holds no secret key material.
class PartyOne {
public:
  PartyOne(Endpoint& endpoint, PublicKey pk, ProtocolConfig config);
  PartyOne(Endpoint& endpoint, PublicKey pk, ProtocolConfig config, uint64_t seed);

  /// Opens a session for one sub-protocol invocation.
  Session begin(ProtocolTag tag);
  /// Finish handshake plus session teardown.
  void finish(Session& session);

  /// Secure multiplication: E(a), E(b) -> E(a*b mod N).
  Ciphertext sm(Session& session, const Ciphertext& a, const Ciphertext& b);
  Ciphertext sm(Session& session, const Ciphertext& a, const Ciphertext& b, SmVariant variant);

  /// Secure squared euclidean distance over attribute vectors of equal length.
  Ciphertext ssed(Session& session, std::span<const Ciphertext> x,
                  std::span<const Ciphertext> y);

  /// E(z) -> E(z mod 2) for z below the bit budget.
  Ciphertext encrypted_lsb(Session& session, const Ciphertext& z);

  /// E(z) -> bit decomposition, least significant first. Verifies the
  /// recomposition online through a blinded zero test and aborts on mismatch.
  EncryptedBits sbd(Session& session, const Ciphertext& z);
  EncryptedBits sbd(Session& session, const Ciphertext& z, unsigned bit_count);

  /// Pairwise secure minimum; ties keep the first argument and its payload.
  MinEntry smin(Session& session, const MinEntry& u, const MinEntry& v);

  /// Tournament reduction of smin. Ties resolve to the earliest entry.
  MinEntry smin_n(Session& session, std::vector<MinEntry> entries);

  /// Index of the first zero plaintext among the given ciphertexts, in the
  /// order sent. Aborts if the peer reports none.
  size_t find_zero(Session& session, std::span<const Ciphertext> values);

  /// Plain decryption of a (blinded) ciphertext by the key holder.
  mpz_class unblind(Session& session, const Ciphertext& c);

  /// True when the peer's key pair matches this public key.
  bool key_matches_peer(Session& session);

  const PublicKey& pub() const { return pk_; }
  const ProtocolConfig& config() const { return config_; }
  RandomSource& rng() { return rng_; }
  ProtocolStats& stats() { return stats_; }
  Endpoint& endpoint() { return endpoint_; }

private:
  Ciphertext xor_bits(Session& session, const Ciphertext& a, const Ciphertext& b);

  Endpoint& endpoint_;
  PublicKey pk_;
  ProtocolConfig config_;
  RandomSource rng_;
  ProtocolStats stats_;
};

/// One value P2 recovered with the secret key, recorded for privacy audits.
struct P2ViewEntry {
  P2Op op;
  mpz_class value;
};

struct PartyTwoOptions {
  bool record_view = false;
  /// Serve accepted sessions on their own threads (independent sessions may
  /// then run in parallel over one transport).
  bool concurrent_sessions = false;
};

/// P2 side: the key holder. A pure responder; decrypts only what P1 sends,
/// which the protocols guarantee is blinded.
class PartyTwo {
public:
  PartyTwo(Endpoint& endpoint, PublicKey pk, SecretKey sk, PartyTwoOptions options = {});
  PartyTwo(Endpoint& endpoint, PublicKey pk, SecretKey sk, PartyTwoOptions options,
           uint64_t seed);

  /// Accepts and serves sessions until the transport disconnects.
  void serve();

  /// Accepts and serves exactly one session to completion.
  void serve_one();

  /// Handles requests on an accepted session until its finish request.
  void serve_session(Session& session);

  std::vector<P2ViewEntry> view() const;
  void reset_view();

private:
  std::vector<mpz_class> handle(P2Op op, std::span<const mpz_class> operands);
  mpz_class decrypt_operand(P2Op op, const mpz_class& raw);

  Endpoint& endpoint_;
  PublicKey pk_;
  SecretKey sk_;
  PartyTwoOptions options_;
  RandomSource rng_;

  mutable std::mutex view_mutex_;
  std::vector<P2ViewEntry> view_;
};

}  // namespace ppknn
