#pragma once

#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "ppknn/knn.hpp"
#include "ppknn/protocols.hpp"

namespace ppknn {

/// P1 and P2 wired over the in-process transport; P2 serves sessions on its
/// own thread until the rig is destroyed.
class LocalRig {
public:
  LocalRig(const KeyPair& keys, ProtocolConfig config, PartyTwoOptions p2_options = {},
           std::optional<uint64_t> seed = std::nullopt,
           EndpointOptions endpoint_options = {});
  ~LocalRig();

  LocalRig(const LocalRig&) = delete;
  LocalRig& operator=(const LocalRig&) = delete;

  PartyOne& p1() { return *party_one_; }
  PartyTwo& p2() { return *party_two_; }
  Endpoint& p1_endpoint() { return *p1_endpoint_; }
  Endpoint& p2_endpoint() { return *p2_endpoint_; }

  void shutdown();

private:
  std::unique_ptr<Endpoint> p1_endpoint_;
  std::unique_ptr<Endpoint> p2_endpoint_;
  std::unique_ptr<PartyTwo> party_two_;
  std::unique_ptr<PartyOne> party_one_;
  std::thread serve_thread_;
};

// ---------------------------------------------------------------------------
// Differential suites: protocol outputs against the plaintext oracle.

struct SuiteResult {
  std::string name;
  unsigned trials = 0;
  unsigned failures = 0;
  std::string detail;  // describes the first failing input
  double millis = 0;

  bool passed() const { return trials > 0 && failures == 0; }
};

SuiteResult verify_paillier(const KeyPair& keys, unsigned trials, uint64_t seed);
SuiteResult verify_sm(const KeyPair& keys, unsigned trials, uint64_t seed,
                      SmVariant variant = SmVariant::fixed_unblinding);
SuiteResult verify_ssed(const KeyPair& keys, unsigned trials, uint64_t seed);
SuiteResult verify_sbd(const KeyPair& keys, unsigned trials, uint64_t seed);
SuiteResult verify_smin(const KeyPair& keys, unsigned trials, uint64_t seed,
                        unsigned value_bits = 16);
SuiteResult verify_smin_n(const KeyPair& keys, unsigned lists, size_t list_length,
                          uint64_t seed, unsigned value_bits = 20);

struct EndToEndParams {
  size_t n = 12;
  size_t m = 4;
  unsigned w = 3;
  unsigned attr_bits = 8;
  std::vector<unsigned> ks = {1, 3};
  unsigned queries_per_k = 2;
};

SuiteResult verify_end_to_end(const KeyPair& keys, const EndToEndParams& params,
                              uint64_t seed);

struct VerifyOptions {
  unsigned key_bits = 512;
  unsigned trials = 100;  // base count; suites scale their defaults from it
  uint64_t seed = 1;
  SmVariant sm_variant = SmVariant::fixed_unblinding;
};

/// Runs every suite; prints one progress line per suite when out is given.
std::vector<SuiteResult> run_verification(const VerifyOptions& options, std::ostream* out);

// ---------------------------------------------------------------------------
// Deterministic test data

std::vector<PlainRecord> random_dataset(std::mt19937_64& gen, size_t n, size_t m,
                                        unsigned w, unsigned attr_bits);

/// A query whose squared distances to all records are pairwise distinct.
std::vector<uint64_t> random_distinct_distance_query(std::mt19937_64& gen,
                                                     const std::vector<PlainRecord>& records,
                                                     unsigned attr_bits);

}  // namespace ppknn
