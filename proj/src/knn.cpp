#include "ppknn/knn.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <numeric>
#include <sstream>

namespace ppknn {

unsigned attribute_bit_limit(const DatabaseSchema& schema) {
  if (schema.m == 0) return schema.l / 2;
  unsigned limit = 0;
  while (limit + 1 <= 31) {
    // m * 2^(2(limit+1)) <= 2^l, evaluated without overflow
    mpz_class lhs = mpz_class(static_cast<unsigned long>(schema.m)) << (2 * (limit + 1));
    if (lhs > (mpz_class(1) << schema.l)) break;
    ++limit;
  }
  return limit;
}

namespace {

void check_schema(const DatabaseSchema& schema) {
  if (schema.w == 0 || schema.w > kMaxClasses) {
    fail(Errc::w_out_of_range,
         "class count must lie in [1, " + std::to_string(kMaxClasses) + "]");
  }
}

void check_attributes(std::span<const uint64_t> values, const DatabaseSchema& schema) {
  uint64_t bound = uint64_t{1} << attribute_bit_limit(schema);
  for (uint64_t v : values) {
    if (v >= bound) {
      fail(Errc::attribute_out_of_range,
           "attribute " + std::to_string(v) + " exceeds the schema bound " +
               std::to_string(bound));
    }
  }
}

unsigned bit_width_of(uint64_t value) {
  return value == 0 ? 1 : static_cast<unsigned>(std::bit_width(value));
}

}  // namespace

EncryptedDatabase encrypt_database(const PublicKey& pk,
                                   std::span<const PlainRecord> records,
                                   const DatabaseSchema& schema, RandomSource& rng) {
  check_schema(schema);
  EncryptedDatabase db;
  db.schema = schema;
  db.records.reserve(records.size());
  for (const PlainRecord& record : records) {
    if (record.attributes.size() != schema.m) {
      fail(Errc::schema_mismatch, "record has " + std::to_string(record.attributes.size()) +
                                      " attributes, schema says " + std::to_string(schema.m));
    }
    if (record.label >= schema.w) {
      fail(Errc::schema_mismatch, "label " + std::to_string(record.label) +
                                      " outside the declared class set");
    }
    check_attributes(record.attributes, schema);
    EncryptedRecord enc;
    enc.attributes.reserve(schema.m);
    for (uint64_t v : record.attributes) {
      enc.attributes.push_back(encrypt(pk, mpz_class(static_cast<unsigned long>(v)), rng));
    }
    enc.label = encrypt(pk, mpz_class(static_cast<unsigned long>(record.label)), rng);
    db.records.push_back(std::move(enc));
  }
  return db;
}

EncryptedQuery encrypt_query(const PublicKey& pk, std::span<const uint64_t> query,
                             const DatabaseSchema& schema, RandomSource& rng) {
  if (query.size() != schema.m) {
    fail(Errc::dimension_error, "query has " + std::to_string(query.size()) +
                                    " attributes, schema says " + std::to_string(schema.m));
  }
  check_attributes(query, schema);
  EncryptedQuery out;
  out.attributes.reserve(query.size());
  for (uint64_t v : query) {
    out.attributes.push_back(encrypt(pk, mpz_class(static_cast<unsigned long>(v)), rng));
  }
  return out;
}

uint64_t reconstruct_delivery(const PublicKey& pk, const DeliveryShares& shares) {
  mpz_class label = (shares.blinded_value - shares.blinding) % pk.n;
  if (label < 0) label += pk.n;
  return mpz_get_ui(label.get_mpz_t());
}

// ---------------------------------------------------------------------------
// Classifier

Classifier::Classifier(PartyOne& p1) : p1_(p1) {}

size_t Classifier::exclude_minimum(std::span<const Ciphertext> distances,
                                   std::span<const size_t> active,
                                   const Ciphertext& min_distance,
                                   std::vector<size_t>* permutation_out) {
  const PublicKey& pk = p1_.pub();

  // Blind each active difference d_i - d_min with a fresh nonzero scalar,
  // then shuffle, so P2 learns only the position of the zero under a fresh
  // permutation.
  std::vector<size_t> order(active.size());
  std::iota(order.begin(), order.end(), size_t{0});
  for (size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[p1_.rng().below_u64(i)]);
  }

  std::vector<Ciphertext> masked(active.size());
  for (size_t pos = 0; pos < active.size(); ++pos) {
    Ciphertext diff = sub(pk, distances[active[order[pos]]], min_distance);
    masked[pos] = scalar_mul(pk, diff, p1_.rng().nonzero_below(pk.n));
  }

  Session session = p1_.begin(ProtocolTag::ppknn);
  size_t zero_pos = p1_.find_zero(session, masked);
  p1_.finish(session);

  if (permutation_out != nullptr) *permutation_out = order;
  return active[order[zero_pos]];
}

std::vector<Ciphertext> Classifier::retrieve_neighbor_labels(const EncryptedDatabase& db,
                                                             const EncryptedQuery& query,
                                                             unsigned k, RunTrace* trace) {
  const PublicKey& pk = p1_.pub();
  const size_t n = db.n();
  if (k == 0 || k > n) {
    fail(Errc::k_out_of_range, "need 1 <= k <= " + std::to_string(n));
  }
  if (query.attributes.size() != db.schema.m) {
    fail(Errc::dimension_error, "query arity does not match the database schema");
  }
  const unsigned l = p1_.config().bit_budget_l;

  // Stage 1: encrypted squared distance per record.
  std::vector<Ciphertext> distances(n);
  for (size_t i = 0; i < n; ++i) {
    Session session = p1_.begin(ProtocolTag::ssed);
    distances[i] = p1_.ssed(session, db.records[i].attributes, query.attributes);
    p1_.finish(session);
  }

  // Stage 2: bit decomposition of every distance.
  std::vector<MinEntry> entries(n);
  for (size_t i = 0; i < n; ++i) {
    Session session = p1_.begin(ProtocolTag::sbd);
    entries[i].key_bits = p1_.sbd(session, distances[i]);
    p1_.finish(session);
    entries[i].payload = db.records[i].label;
  }

  // Stage 3: k extraction rounds. Extracted records stay in the tournament
  // with the maximum distance 2^l - 1 so every round has the same shape;
  // the exclusion exchange only ever covers the still-active records.
  std::vector<size_t> active(n);
  std::iota(active.begin(), active.end(), size_t{0});
  std::vector<Ciphertext> retrieved;
  retrieved.reserve(k);

  mpz_class sentinel = (mpz_class(1) << l) - 1;
  for (unsigned round = 0; round < k; ++round) {
    Session session = p1_.begin(ProtocolTag::sminn);
    MinEntry winner = p1_.smin_n(session, entries);
    p1_.finish(session);
    retrieved.push_back(winner.payload);

    // Recompose E(d_min) from the winner's bits for the exclusion step.
    Ciphertext min_distance = winner.key_bits.bits[0];
    for (unsigned i = 1; i < l; ++i) {
      min_distance =
          add(pk, min_distance, scalar_mul(pk, winner.key_bits.bits[i], mpz_class(1) << i));
    }

    std::vector<size_t> permutation;
    size_t excluded =
        exclude_minimum(distances, active, min_distance,
                        trace != nullptr ? &permutation : nullptr);
    active.erase(std::find(active.begin(), active.end(), excluded));

    distances[excluded] = encrypt(pk, sentinel, p1_.rng());
    for (unsigned i = 0; i < l; ++i) {
      entries[excluded].key_bits.bits[i] = encrypt(pk, 1, p1_.rng());
    }
    entries[excluded].payload = rerandomize(pk, entries[excluded].payload, p1_.rng());

    if (trace != nullptr) {
      trace->rounds.push_back({min_distance, excluded, std::move(permutation)});
    }
  }
  if (trace != nullptr) trace->neighbor_labels = retrieved;
  return retrieved;
}

Ciphertext Classifier::majority_label(std::span<const Ciphertext> labels,
                                      unsigned class_count) {
  const PublicKey& pk = p1_.pub();
  if (labels.empty()) fail(Errc::empty_input, "majority over an empty list");
  if (class_count == 0 || class_count > kMaxClasses) {
    fail(Errc::w_out_of_range,
         "class count must lie in [1, " + std::to_string(kMaxClasses) + "]");
  }
  const unsigned label_bits = bit_width_of(class_count - 1);
  const unsigned count_bits = bit_width_of(labels.size());

  // Decompose each retrieved label once; the per-class equality bits are
  // built from these shared decompositions.
  std::vector<EncryptedBits> label_decomp(labels.size());
  for (size_t j = 0; j < labels.size(); ++j) {
    Session session = p1_.begin(ProtocolTag::sbd);
    label_decomp[j] = p1_.sbd(session, labels[j], label_bits);
    p1_.finish(session);
  }

  // Sessions never overlap: the responder serves them one at a time. All the
  // equality/frequency algebra runs in one working session, then each class
  // deficit gets its own decomposition session.
  std::vector<Ciphertext> deficits(class_count);
  {
    Session work = p1_.begin(ProtocolTag::ppknn);
    for (unsigned c = 0; c < class_count; ++c) {
      // Frequency of class c: sum over labels of prod_i (1 - (bit_i xor c_i)).
      // The class bits are public, so each factor is affine in the label bit.
      Ciphertext freq;
      bool have_freq = false;
      for (size_t j = 0; j < labels.size(); ++j) {
        Ciphertext eq;
        bool have_eq = false;
        for (unsigned i = 0; i < label_bits; ++i) {
          bool class_bit = ((c >> i) & 1) != 0;
          Ciphertext factor =
              class_bit ? label_decomp[j].bits[i]
                        : add(pk, encrypt(pk, 1, p1_.rng()),
                              negate(pk, label_decomp[j].bits[i]));
          eq = have_eq ? p1_.sm(work, eq, factor) : factor;
          have_eq = true;
        }
        freq = have_freq ? add(pk, freq, eq) : eq;
        have_freq = true;
      }
      // Feed k - freq_c into the minimum tournament: the class with the
      // highest frequency yields the smallest key.
      deficits[c] = sub(
          pk, encrypt(pk, mpz_class(static_cast<unsigned long>(labels.size())), p1_.rng()),
          freq);
    }
    p1_.finish(work);
  }

  std::vector<MinEntry> entries(class_count);
  for (unsigned c = 0; c < class_count; ++c) {
    Session sbd_session = p1_.begin(ProtocolTag::sbd);
    entries[c].key_bits = p1_.sbd(sbd_session, deficits[c], count_bits);
    p1_.finish(sbd_session);
    entries[c].payload = encrypt(pk, mpz_class(static_cast<unsigned long>(c)), p1_.rng());
  }

  // Entries are in class order, so frequency ties resolve to the smallest
  // class id via the tournament's first-entry preference.
  Session tournament = p1_.begin(ProtocolTag::sminn);
  MinEntry winner = p1_.smin_n(tournament, std::move(entries));
  p1_.finish(tournament);
  return winner.payload;
}

DeliveryShares Classifier::deliver_result(const Ciphertext& encrypted_label) {
  const PublicKey& pk = p1_.pub();
  DeliveryShares shares;
  shares.blinding = p1_.rng().below(pk.n);
  Ciphertext blinded = add(pk, encrypted_label, encrypt(pk, shares.blinding, p1_.rng()));
  Session session = p1_.begin(ProtocolTag::result);
  shares.blinded_value = p1_.unblind(session, blinded);
  p1_.finish(session);
  return shares;
}

ClassificationResult Classifier::classify(const EncryptedDatabase& db,
                                          const EncryptedQuery& query, unsigned k,
                                          RunTrace* trace) {
  std::vector<Ciphertext> labels = retrieve_neighbor_labels(db, query, k, trace);
  Ciphertext majority = majority_label(labels, db.schema.w);
  ClassificationResult result;
  result.k_used = k;
  result.shares = deliver_result(majority);
  result.label = reconstruct_delivery(p1_.pub(), result.shares);
  return result;
}

// ---------------------------------------------------------------------------
// Database file format

void save_encrypted_db(const std::string& path, const EncryptedDatabase& db) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Errc::io_error, "cannot write " + path);
  out << "ppknn-db v1; n=" << db.records.size() << "; m=" << db.schema.m
      << "; w=" << db.schema.w << "; l=" << db.schema.l << "\n";
  for (const EncryptedRecord& record : db.records) {
    for (const Ciphertext& c : record.attributes) {
      out << c.value.get_str(16) << ' ';
    }
    out << record.label.value.get_str(16) << "\n";
  }
  if (!out.flush()) fail(Errc::io_error, "write failed for " + path);
}

namespace {

size_t parse_header_field(const std::string& header, const std::string& name,
                          const std::string& path) {
  std::string key = name + "=";
  auto pos = header.find(key);
  if (pos == std::string::npos) {
    fail(Errc::io_error, path + ": header missing field " + name);
  }
  size_t value = 0;
  size_t at = pos + key.size();
  if (at >= header.size() || !isdigit(static_cast<unsigned char>(header[at]))) {
    fail(Errc::io_error, path + ": bad header field " + name);
  }
  while (at < header.size() && isdigit(static_cast<unsigned char>(header[at]))) {
    value = value * 10 + static_cast<size_t>(header[at] - '0');
    ++at;
  }
  return value;
}

mpz_class parse_hex_token(const std::string& token, const std::string& path, size_t line) {
  mpz_class v;
  if (token.empty() || mpz_set_str(v.get_mpz_t(), token.c_str(), 16) != 0 || v < 0) {
    fail(Errc::io_error, path + ": bad ciphertext on line " + std::to_string(line));
  }
  return v;
}

}  // namespace

EncryptedDatabase load_encrypted_db(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_error, "cannot open " + path);
  std::string header;
  if (!std::getline(in, header) || header.rfind("ppknn-db v1;", 0) != 0) {
    fail(Errc::io_error, path + ": not a ppknn-db v1 file");
  }
  EncryptedDatabase db;
  size_t n = parse_header_field(header, "n", path);
  db.schema.m = parse_header_field(header, "m", path);
  db.schema.w = static_cast<unsigned>(parse_header_field(header, "w", path));
  db.schema.l = static_cast<unsigned>(parse_header_field(header, "l", path));

  std::string line;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::vector<mpz_class> values;
    std::string token;
    while (fields >> token) values.push_back(parse_hex_token(token, path, line_no));
    if (values.size() != db.schema.m + 1) {
      fail(Errc::io_error, path + ": line " + std::to_string(line_no) + " has " +
                               std::to_string(values.size()) + " fields, expected " +
                               std::to_string(db.schema.m + 1));
    }
    EncryptedRecord record;
    record.attributes.reserve(db.schema.m);
    for (size_t j = 0; j < db.schema.m; ++j) record.attributes.push_back({values[j]});
    record.label = Ciphertext{values.back()};
    db.records.push_back(std::move(record));
  }
  if (db.records.size() != n) {
    fail(Errc::io_error, path + ": header says n=" + std::to_string(n) + " but found " +
                             std::to_string(db.records.size()) + " records");
  }
  return db;
}

bool database_matches_key(const EncryptedDatabase& db, const PublicKey& pk) {
  for (const EncryptedRecord& record : db.records) {
    for (const Ciphertext& c : record.attributes) {
      if (c.value <= 0 || c.value >= pk.n_squared) return false;
    }
    if (record.label.value <= 0 || record.label.value >= pk.n_squared) return false;
  }
  return true;
}

}  // namespace ppknn
