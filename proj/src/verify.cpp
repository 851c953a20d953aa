#include "ppknn/verify.hpp"

#include <chrono>
#include <set>
#include <sstream>

#include "ppknn/oracle.hpp"

namespace ppknn {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

mpz_class to_mpz(uint64_t v) { return mpz_class(static_cast<unsigned long>(v)); }

uint64_t to_u64(const mpz_class& v) { return mpz_get_ui(v.get_mpz_t()); }

EncryptedBits encrypt_bits(const PublicKey& pk, uint64_t value, unsigned bit_count,
                           RandomSource& rng) {
  EncryptedBits out;
  out.bits.reserve(bit_count);
  for (unsigned i = 0; i < bit_count; ++i) {
    out.bits.push_back(encrypt(pk, mpz_class((value >> i) & 1), rng));
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// LocalRig

LocalRig::LocalRig(const KeyPair& keys, ProtocolConfig config, PartyTwoOptions p2_options,
                   std::optional<uint64_t> seed, EndpointOptions endpoint_options) {
  auto [left, right] = make_in_process_pair();
  p1_endpoint_ = std::make_unique<Endpoint>(std::move(left), PartyRole::p1, endpoint_options);
  p2_endpoint_ = std::make_unique<Endpoint>(std::move(right), PartyRole::p2, endpoint_options);
  if (seed) {
    party_two_ = std::make_unique<PartyTwo>(*p2_endpoint_, keys.pub, keys.sec, p2_options,
                                            *seed + 0x9e3779b97f4a7c15ULL);
    party_one_ = std::make_unique<PartyOne>(*p1_endpoint_, keys.pub, config, *seed);
  } else {
    party_two_ = std::make_unique<PartyTwo>(*p2_endpoint_, keys.pub, keys.sec, p2_options);
    party_one_ = std::make_unique<PartyOne>(*p1_endpoint_, keys.pub, config);
  }
  serve_thread_ = std::thread([this] {
    try {
      party_two_->serve();
    } catch (...) {
      // Any responder-side failure tears the transport down; P1 observes a
      // disconnect on its next exchange.
    }
    p2_endpoint_->close();
  });
}

void LocalRig::shutdown() {
  if (p1_endpoint_) p1_endpoint_->close();
  if (p2_endpoint_) p2_endpoint_->close();
  if (serve_thread_.joinable()) serve_thread_.join();
}

LocalRig::~LocalRig() { shutdown(); }

// ---------------------------------------------------------------------------
// Suites

SuiteResult verify_paillier(const KeyPair& keys, unsigned trials, uint64_t seed) {
  SuiteResult result;
  result.name = "paillier";
  auto start = Clock::now();
  RandomSource rng(seed);
  const PublicKey& pk = keys.pub;

  auto check = [&](bool ok, const std::string& what) {
    ++result.trials;
    if (!ok && result.failures++ == 0) result.detail = what;
  };

  for (const mpz_class& m :
       {mpz_class(0), mpz_class(1), mpz_class(pk.n - 1)}) {
    check(decrypt(keys.sec, encrypt(pk, m, rng)) == m, "boundary roundtrip");
  }
  for (unsigned t = 0; t < trials; ++t) {
    mpz_class m = rng.below(pk.n);
    check(decrypt(keys.sec, encrypt(pk, m, rng)) == m, "random roundtrip");
  }
  unsigned pair_trials = std::max(1u, trials / 5);
  for (unsigned t = 0; t < pair_trials; ++t) {
    mpz_class a = rng.below(pk.n), b = rng.below(pk.n);
    Ciphertext sum = add(pk, encrypt(pk, a, rng), encrypt(pk, b, rng));
    check(decrypt(keys.sec, sum) == (a + b) % pk.n, "homomorphic add");
    mpz_class k = rng.below(pk.n);
    check(decrypt(keys.sec, scalar_mul(pk, encrypt(pk, a, rng), k)) == a * k % pk.n,
          "scalar multiply");
  }
  result.millis = elapsed_ms(start);
  return result;
}

SuiteResult verify_sm(const KeyPair& keys, unsigned trials, uint64_t seed,
                      SmVariant variant) {
  SuiteResult result;
  result.name = "sm";
  auto start = Clock::now();
  std::mt19937_64 gen(seed);
  LocalRig rig(keys, ProtocolConfig{}, {}, seed);
  RandomSource enc_rng(seed ^ 0x5151);

  for (unsigned t = 0; t < trials; ++t) {
    uint64_t a = gen() & 0xffffffffULL;
    uint64_t b = gen() & 0xffffffffULL;
    Session session = rig.p1().begin(ProtocolTag::sm);
    Ciphertext product = rig.p1().sm(session, encrypt(keys.pub, to_mpz(a), enc_rng),
                                     encrypt(keys.pub, to_mpz(b), enc_rng), variant);
    rig.p1().finish(session);
    ++result.trials;
    if (decrypt(keys.sec, product) != to_mpz(a) * to_mpz(b)) {
      if (result.failures++ == 0) {
        result.detail = "a=" + std::to_string(a) + " b=" + std::to_string(b);
      }
    }
  }
  result.millis = elapsed_ms(start);
  return result;
}

SuiteResult verify_ssed(const KeyPair& keys, unsigned trials, uint64_t seed) {
  SuiteResult result;
  result.name = "ssed";
  auto start = Clock::now();
  std::mt19937_64 gen(seed);
  LocalRig rig(keys, ProtocolConfig{}, {}, seed);
  RandomSource enc_rng(seed ^ 0x5152);
  constexpr size_t kDim = 5;
  constexpr uint64_t kCoordMask = 0xffff;  // 16-bit coordinates

  for (unsigned t = 0; t < trials; ++t) {
    std::vector<uint64_t> x(kDim), y(kDim);
    std::vector<Ciphertext> ex(kDim), ey(kDim);
    for (size_t j = 0; j < kDim; ++j) {
      x[j] = gen() & kCoordMask;
      y[j] = gen() & kCoordMask;
      ex[j] = encrypt(keys.pub, to_mpz(x[j]), enc_rng);
      ey[j] = encrypt(keys.pub, to_mpz(y[j]), enc_rng);
    }
    Session session = rig.p1().begin(ProtocolTag::ssed);
    Ciphertext dist = rig.p1().ssed(session, ex, ey);
    rig.p1().finish(session);
    ++result.trials;
    if (decrypt(keys.sec, dist) != to_mpz(oracle::squared_distance(x, y))) {
      if (result.failures++ == 0) result.detail = "trial " + std::to_string(t);
    }
  }
  result.millis = elapsed_ms(start);
  return result;
}

SuiteResult verify_sbd(const KeyPair& keys, unsigned trials, uint64_t seed) {
  SuiteResult result;
  result.name = "sbd";
  auto start = Clock::now();
  std::mt19937_64 gen(seed);
  constexpr unsigned kBits = 32;
  LocalRig rig(keys, ProtocolConfig{.bit_budget_l = kBits}, {}, seed);
  RandomSource enc_rng(seed ^ 0x5153);

  for (unsigned t = 0; t < trials; ++t) {
    uint64_t z = gen() & 0xffffffffULL;
    Session session = rig.p1().begin(ProtocolTag::sbd);
    EncryptedBits bits = rig.p1().sbd(session, encrypt(keys.pub, to_mpz(z), enc_rng));
    rig.p1().finish(session);

    std::vector<int> expected = oracle::binary_decompose(z, kBits);
    bool ok = bits.size() == kBits;
    uint64_t recomposed = 0;
    for (unsigned i = 0; ok && i < kBits; ++i) {
      mpz_class bit = decrypt(keys.sec, bits.bits[i]);
      ok = (bit == 0 || bit == 1) && bit == expected[i];
      recomposed |= to_u64(bit) << i;
    }
    ok = ok && recomposed == z;
    ++result.trials;
    if (!ok && result.failures++ == 0) result.detail = "z=" + std::to_string(z);
  }
  result.millis = elapsed_ms(start);
  return result;
}

SuiteResult verify_smin(const KeyPair& keys, unsigned trials, uint64_t seed,
                        unsigned value_bits) {
  SuiteResult result;
  result.name = "smin";
  auto start = Clock::now();
  std::mt19937_64 gen(seed);
  const unsigned kBits = value_bits;
  const uint64_t mask = (uint64_t{1} << kBits) - 1;
  LocalRig rig(keys, ProtocolConfig{.bit_budget_l = kBits}, {}, seed);
  RandomSource enc_rng(seed ^ 0x5154);

  for (unsigned t = 0; t < trials; ++t) {
    uint64_t u = gen() & mask, v = gen() & mask;
    MinEntry eu{encrypt_bits(keys.pub, u, kBits, enc_rng),
                encrypt(keys.pub, to_mpz(100), enc_rng)};
    MinEntry ev{encrypt_bits(keys.pub, v, kBits, enc_rng),
                encrypt(keys.pub, to_mpz(200), enc_rng)};
    Session session = rig.p1().begin(ProtocolTag::smin);
    MinEntry out = rig.p1().smin(session, eu, ev);
    rig.p1().finish(session);

    uint64_t min_value = 0;
    bool ok = true;
    for (unsigned i = 0; i < kBits; ++i) {
      mpz_class bit = decrypt(keys.sec, out.key_bits.bits[i]);
      ok = ok && (bit == 0 || bit == 1);
      min_value |= to_u64(bit) << i;
    }
    uint64_t expect_min = std::min(u, v);
    uint64_t expect_payload = u <= v ? 100 : 200;  // ties keep u
    ok = ok && min_value == expect_min &&
         decrypt(keys.sec, out.payload) == to_mpz(expect_payload);
    ++result.trials;
    if (!ok && result.failures++ == 0) {
      result.detail = "u=" + std::to_string(u) + " v=" + std::to_string(v);
    }
  }
  result.millis = elapsed_ms(start);
  return result;
}

SuiteResult verify_smin_n(const KeyPair& keys, unsigned lists, size_t list_length,
                          uint64_t seed, unsigned value_bits) {
  SuiteResult result;
  result.name = "smin_n";
  auto start = Clock::now();
  std::mt19937_64 gen(seed);
  const unsigned kBits = value_bits;
  const uint64_t mask = (uint64_t{1} << kBits) - 1;
  LocalRig rig(keys, ProtocolConfig{.bit_budget_l = kBits}, {}, seed);
  RandomSource enc_rng(seed ^ 0x5155);

  for (unsigned t = 0; t < lists; ++t) {
    std::vector<std::pair<uint64_t, uint64_t>> plain(list_length);
    std::vector<MinEntry> entries(list_length);
    for (size_t i = 0; i < list_length; ++i) {
      plain[i] = {gen() & mask, i};  // payload = position
      entries[i] = {encrypt_bits(keys.pub, plain[i].first, kBits, enc_rng),
                    encrypt(keys.pub, to_mpz(plain[i].second), enc_rng)};
    }
    Session session = rig.p1().begin(ProtocolTag::sminn);
    MinEntry out = rig.p1().smin_n(session, std::move(entries));
    rig.p1().finish(session);

    auto [expect_min, expect_payload] = oracle::min_n_plain(plain);
    uint64_t min_value = 0;
    for (unsigned i = 0; i < kBits; ++i) {
      min_value |= to_u64(decrypt(keys.sec, out.key_bits.bits[i])) << i;
    }
    bool ok = min_value == expect_min &&
              decrypt(keys.sec, out.payload) == to_mpz(expect_payload);
    ++result.trials;
    if (!ok && result.failures++ == 0) result.detail = "list " + std::to_string(t);
  }
  result.millis = elapsed_ms(start);
  return result;
}

SuiteResult verify_end_to_end(const KeyPair& keys, const EndToEndParams& params,
                              uint64_t seed) {
  SuiteResult result;
  result.name = "ppknn";
  auto start = Clock::now();
  std::mt19937_64 gen(seed);
  RandomSource enc_rng(seed ^ 0x5156);
  ProtocolConfig config{};
  DatabaseSchema schema{params.m, params.w, config.bit_budget_l};

  std::vector<PlainRecord> records =
      random_dataset(gen, params.n, params.m, params.w, params.attr_bits);
  EncryptedDatabase db = encrypt_database(keys.pub, records, schema, enc_rng);

  LocalRig rig(keys, config, {}, seed);
  Classifier classifier(rig.p1());
  for (unsigned q = 0; q < params.queries_per_k; ++q) {
    std::vector<uint64_t> query =
        random_distinct_distance_query(gen, records, params.attr_bits);
    EncryptedQuery eq = encrypt_query(keys.pub, query, schema, enc_rng);
    for (unsigned k : params.ks) {
      uint64_t expected = oracle::knn_classify_plain(records, query, k);
      ClassificationResult got = classifier.classify(db, eq, k);
      ++result.trials;
      if (got.label != expected && result.failures++ == 0) {
        std::ostringstream what;
        what << "query " << q << " k=" << k << ": got " << got.label << ", oracle says "
             << expected;
        result.detail = what.str();
      }
    }
  }
  result.millis = elapsed_ms(start);
  return result;
}

std::vector<SuiteResult> run_verification(const VerifyOptions& options, std::ostream* out) {
  RandomSource key_rng(options.seed);
  KeyPair keys = keygen(options.key_bits, key_rng);

  unsigned t = std::max(1u, options.trials);
  std::vector<SuiteResult> results;
  auto record = [&](SuiteResult r) {
    if (out != nullptr) {
      *out << r.name << ": " << (r.trials - r.failures) << "/" << r.trials << " passed";
      if (!r.passed()) *out << "  [" << r.detail << "]";
      *out << "  (" << static_cast<long>(r.millis) << " ms)\n";
      out->flush();
    }
    results.push_back(std::move(r));
  };

  record(verify_paillier(keys, t, options.seed + 1));
  record(verify_sm(keys, t, options.seed + 2, options.sm_variant));
  record(verify_ssed(keys, std::max(1u, t / 2), options.seed + 3));
  record(verify_sbd(keys, std::max(1u, t / 2), options.seed + 4));
  record(verify_smin(keys, t, options.seed + 5));
  record(verify_smin_n(keys, std::max(1u, t / 10), 25, options.seed + 6));
  record(verify_end_to_end(keys, EndToEndParams{}, options.seed + 7));
  return results;
}

// ---------------------------------------------------------------------------
// Test data

std::vector<PlainRecord> random_dataset(std::mt19937_64& gen, size_t n, size_t m,
                                        unsigned w, unsigned attr_bits) {
  uint64_t mask = (uint64_t{1} << attr_bits) - 1;
  std::vector<PlainRecord> records(n);
  for (size_t i = 0; i < n; ++i) {
    records[i].attributes.resize(m);
    for (size_t j = 0; j < m; ++j) records[i].attributes[j] = gen() & mask;
    // every class appears at least once
    records[i].label = i < w ? i : gen() % w;
  }
  return records;
}

std::vector<uint64_t> random_distinct_distance_query(std::mt19937_64& gen,
                                                     const std::vector<PlainRecord>& records,
                                                     unsigned attr_bits) {
  uint64_t mask = (uint64_t{1} << attr_bits) - 1;
  size_t m = records.empty() ? 0 : records.front().attributes.size();
  for (;;) {
    std::vector<uint64_t> query(m);
    for (size_t j = 0; j < m; ++j) query[j] = gen() & mask;
    std::set<uint64_t> seen;
    bool distinct = true;
    for (const PlainRecord& record : records) {
      if (!seen.insert(oracle::squared_distance(record.attributes, query)).second) {
        distinct = false;
        break;
      }
    }
    if (distinct) return query;
  }
}

}  // namespace ppknn
