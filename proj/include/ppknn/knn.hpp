#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ppknn/protocols.hpp"
#include "ppknn/records.hpp"

namespace ppknn {

struct DatabaseSchema {
  size_t m = 0;       // attributes per record (label excluded)
  unsigned w = 0;     // number of classes; labels lie in [0, w)
  unsigned l = 32;    // bit budget shared with ProtocolConfig
};

/// Largest per-attribute bit width l' such that m * 2^(2l') <= 2^l, i.e.
/// squared distances always fit the bit budget.
unsigned attribute_bit_limit(const DatabaseSchema& schema);

struct EncryptedRecord {
  std::vector<Ciphertext> attributes;
  Ciphertext label;
};

struct EncryptedDatabase {
  DatabaseSchema schema;
  std::vector<EncryptedRecord> records;

  size_t n() const { return records.size(); }
};

struct EncryptedQuery {
  std::vector<Ciphertext> attributes;
};

/// Attribute-wise encryption of the whole table, label column included.
EncryptedDatabase encrypt_database(const PublicKey& pk,
                                   std::span<const PlainRecord> records,
                                   const DatabaseSchema& schema, RandomSource& rng);

EncryptedQuery encrypt_query(const PublicKey& pk, std::span<const uint64_t> query,
                             const DatabaseSchema& schema, RandomSource& rng);

/// The additive shares that deliver a result to the user: P1 keeps the
/// blinding value, P2 produces the blinded plaintext. Neither cloud party
/// sees the label; the user subtracts the shares mod N.
struct DeliveryShares {
  mpz_class blinding;
  mpz_class blinded_value;
};

uint64_t reconstruct_delivery(const PublicKey& pk, const DeliveryShares& shares);

struct ClassificationResult {
  uint64_t label = 0;
  unsigned k_used = 0;
  DeliveryShares shares;
};

/// Per-extraction-round record kept only when the caller asks for a trace;
/// used by verification harnesses, never by the protocol itself.
struct RoundTrace {
  Ciphertext min_distance;          // recomposed E(d_min) for this round
  size_t extracted_index = 0;       // database index removed this round
  std::vector<size_t> permutation;  // permutation applied before find-zero
};

struct RunTrace {
  std::vector<RoundTrace> rounds;
  std::vector<Ciphertext> neighbor_labels;  // the k extracted label ciphertexts
};

inline constexpr unsigned kMaxClasses = 16;

/// P1-side orchestration of one classification: distances, bit
/// decomposition, k secure-minimum rounds with oblivious exclusion, secure
/// majority and blinded delivery.
class Classifier {
public:
  explicit Classifier(PartyOne& p1);

  ClassificationResult classify(const EncryptedDatabase& db, const EncryptedQuery& query,
                                unsigned k, RunTrace* trace = nullptr);

  /// Stages 1-3 only: the k nearest labels, still encrypted.
  std::vector<Ciphertext> retrieve_neighbor_labels(const EncryptedDatabase& db,
                                                   const EncryptedQuery& query, unsigned k,
                                                   RunTrace* trace = nullptr);

  /// Encrypted argmax-frequency class over the retrieved labels.
  Ciphertext majority_label(std::span<const Ciphertext> labels, unsigned class_count);

  DeliveryShares deliver_result(const Ciphertext& encrypted_label);

  /// One oblivious exclusion round: locate the record matching min_distance
  /// among the active ones without showing P2 which it is. The key holder
  /// sees only scalar-blinded differences under a fresh permutation.
  size_t exclude_minimum(std::span<const Ciphertext> distances,
                         std::span<const size_t> active, const Ciphertext& min_distance,
                         std::vector<size_t>* permutation_out = nullptr);

private:
  PartyOne& p1_;
};

// Encrypted database file: a `ppknn-db v1` header carrying n, m, w and l,
// then one record per line as space-separated lowercase hex ciphertexts with
// the label last.
void save_encrypted_db(const std::string& path, const EncryptedDatabase& db);
EncryptedDatabase load_encrypted_db(const std::string& path);

/// True when every stored residue is a plausible ciphertext under pk.
bool database_matches_key(const EncryptedDatabase& db, const PublicKey& pk);

}  // namespace ppknn
