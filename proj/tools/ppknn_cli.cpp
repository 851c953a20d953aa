// ppknn command line: key generation, database encryption, the two cloud
// party processes, the user-side query client, and the verification and
// benchmark harnesses.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ppknn/csv.hpp"
#include "ppknn/knn.hpp"
#include "ppknn/oracle.hpp"
#include "ppknn/verify.hpp"

namespace {

using namespace ppknn;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

constexpr unsigned kSecureKeyBits = 2048;
constexpr unsigned kMinCliKeyBits = 512;

mpz_class to_mpz(uint64_t v) { return mpz_class(static_cast<unsigned long>(v)); }

std::vector<uint64_t> parse_query_values(const std::string& text) {
  std::vector<uint64_t> values;
  std::istringstream in(text);
  std::string cell;
  while (std::getline(in, cell, ',')) {
    try {
      size_t used = 0;
      unsigned long long v = std::stoull(cell, &used);
      if (used != cell.size()) throw std::invalid_argument(cell);
      values.push_back(v);
    } catch (const std::exception&) {
      fail(Errc::io_error, "query attribute '" + cell + "' is not a nonnegative integer");
    }
  }
  if (values.empty()) fail(Errc::io_error, "empty query");
  return values;
}

// --------------------------------------------------------------------------
// keygen

int cmd_keygen(unsigned bits, const std::string& out_dir, bool insecure) {
  if (bits < kMinCliKeyBits) {
    std::cerr << "error: keys below " << kMinCliKeyBits << " bits are not supported\n";
    return kExitUsage;
  }
  if (bits < kSecureKeyBits && !insecure) {
    std::cerr << "error: " << bits << "-bit keys need --insecure (only " << kSecureKeyBits
              << "+ bits are production size)\n";
    return kExitUsage;
  }
  std::filesystem::create_directories(out_dir);
  RandomSource rng;
  KeyPair keys = keygen(bits, rng);
  std::string pub_path = out_dir + "/public.key";
  std::string sec_path = out_dir + "/secret.key";
  save_public_key(pub_path, keys.pub);
  save_secret_key(sec_path, keys.sec);
  std::cout << "wrote " << pub_path << " and " << sec_path << " (" << bits << "-bit modulus)"
            << std::endl;
  return kExitOk;
}

// --------------------------------------------------------------------------
// encrypt-db

int cmd_encrypt_db(const std::string& csv_path, const std::string& pub_path,
                   const std::string& out_path, unsigned l, unsigned w) {
  PublicKey pk = load_public_key(pub_path);
  std::vector<PlainRecord> records = load_csv_records_file(csv_path);

  DatabaseSchema schema;
  schema.m = records.empty() ? 0 : records.front().attributes.size();
  schema.l = l;
  if (w == 0) {
    uint64_t max_label = 0;
    for (const PlainRecord& r : records) max_label = std::max(max_label, r.label);
    schema.w = records.empty() ? 1 : static_cast<unsigned>(max_label) + 1;
  } else {
    schema.w = w;
  }
  validate_config(ProtocolConfig{schema.l}, pk);

  RandomSource rng;
  EncryptedDatabase db = encrypt_database(pk, records, schema, rng);
  save_encrypted_db(out_path, db);
  std::cout << "n=" << db.n() << " m=" << schema.m << " w=" << schema.w << " l=" << schema.l
            << std::endl;
  return kExitOk;
}

// --------------------------------------------------------------------------
// serve

// User-facing reply payloads start with a status entry: 0 for success, or
// 1 + Errc for a failure.
mpz_class status_of(Errc code) { return mpz_class(1 + static_cast<int>(code)); }

int serve_p2(const std::string& sec_path, const std::string& listen_addr) {
  SecretKey sk = load_secret_key(sec_path);
  PublicKey pk = public_key_of(sk);
  SocketListener listener(listen_addr);
  std::cout << "listening on " << listen_addr.substr(0, listen_addr.rfind(':')) << ":"
            << listener.port() << std::endl;
  for (;;) {
    Endpoint endpoint(listener.accept(), PartyRole::p2);
    PartyTwo party(endpoint, pk, sk);
    try {
      party.serve();
    } catch (const Error& e) {
      std::cerr << "session aborted: " << e.what() << std::endl;
      return kExitFailure;
    }
    std::cout << "peer disconnected" << std::endl;
  }
}

int serve_p1(const std::string& pub_path, const std::string& db_path,
             const std::string& connect_addr, const std::string& listen_addr,
             bool fast_mode) {
  PublicKey pk = load_public_key(pub_path);
  EncryptedDatabase db = load_encrypted_db(db_path);
  if (!database_matches_key(db, pk)) {
    std::cerr << "error: key/db mismatch (database was not encrypted under this modulus)\n";
    return kExitFailure;
  }

  Endpoint peer(connect_socket(connect_addr), PartyRole::p1);
  ProtocolConfig config{db.schema.l};
  PartyOne p1(peer, pk, config);
  {
    Session hello = p1.begin(ProtocolTag::ppknn);
    bool match = p1.key_matches_peer(hello);
    p1.finish(hello);
    if (!match) {
      std::cerr << "error: key/db mismatch (peer holds a different modulus)\n";
      return kExitFailure;
    }
  }
  Classifier classifier(p1);

  SocketListener listener(listen_addr);
  std::cout << "listening on " << listen_addr.substr(0, listen_addr.rfind(':')) << ":"
            << listener.port() << std::endl;

  for (;;) {
    std::unique_ptr<Channel> channel;
    try {
      channel = listener.accept();
    } catch (const Error&) {
      return kExitOk;  // listener closed
    }
    Endpoint user(std::move(channel), PartyRole::p2);
    bool peer_lost = false;
    try {
      Session session = user.accept_session();
      std::vector<mpz_class> request = session.recv();

      std::vector<mpz_class> reply;
      if (request.size() != 1 + db.schema.m) {
        reply = {status_of(Errc::dimension_error)};
      } else if (request[0] < 1 || request[0] > db.n()) {
        reply = {status_of(Errc::k_out_of_range)};
      } else {
        unsigned k = static_cast<unsigned>(request[0].get_ui());
        EncryptedQuery query;
        for (size_t j = 0; j < db.schema.m; ++j) {
          query.attributes.push_back(Ciphertext{request[1 + j]});
        }
        try {
          std::vector<Ciphertext> labels = classifier.retrieve_neighbor_labels(db, query, k);
          if (fast_mode) {
            reply = {0, to_mpz(labels.size())};
            for (Ciphertext& label : labels) {
              DeliveryShares shares =
                  classifier.deliver_result(rerandomize(pk, label, p1.rng()));
              reply.push_back(shares.blinding);
              reply.push_back(shares.blinded_value);
            }
          } else {
            Ciphertext majority = classifier.majority_label(labels, db.schema.w);
            DeliveryShares shares = classifier.deliver_result(majority);
            reply = {0, shares.blinding, shares.blinded_value};
          }
        } catch (const Error& e) {
          if (e.code() == Errc::transport_disconnected) {
            peer_lost = true;  // the p2 link is gone, not just this user
            throw;
          }
          reply = {status_of(e.code())};
        }
      }
      session.send(std::move(reply));
    } catch (const Error& e) {
      if (peer_lost) {
        std::cerr << "error: " << e.what() << " (peer link lost)" << std::endl;
        return kExitFailure;
      }
      // this user connection failed; keep serving others
    }
  }
}

int cmd_serve(const std::string& role, const std::string& pub_path,
              const std::string& sec_path, const std::string& db_path,
              const std::string& listen_addr, const std::string& connect_addr,
              const std::string& mode) {
  if (role == "p2") {
    if (sec_path.empty() || listen_addr.empty()) {
      std::cerr << "error: --role p2 needs --sec and --listen\n";
      return kExitUsage;
    }
    return serve_p2(sec_path, listen_addr);
  }
  if (role == "p1") {
    if (pub_path.empty() || db_path.empty() || connect_addr.empty() || listen_addr.empty()) {
      std::cerr << "error: --role p1 needs --pub, --db, --connect and --listen\n";
      return kExitUsage;
    }
    if (mode != "secure" && mode != "fast") {
      std::cerr << "error: --mode must be secure or fast\n";
      return kExitUsage;
    }
    return serve_p1(pub_path, db_path, connect_addr, listen_addr, mode == "fast");
  }
  std::cerr << "error: --role must be p1 or p2\n";
  return kExitUsage;
}

// --------------------------------------------------------------------------
// query

int cmd_query(const std::string& connect_addr, const std::string& pub_path, unsigned k,
              const std::string& query_text) {
  if (k == 0) {
    std::cerr << "error: k-out-of-range (k must be at least 1)\n";
    return kExitUsage;
  }
  PublicKey pk = load_public_key(pub_path);
  std::vector<uint64_t> values = parse_query_values(query_text);

  RandomSource rng;
  std::vector<mpz_class> request = {to_mpz(k)};
  for (uint64_t v : values) {
    request.push_back(encrypt(pk, to_mpz(v), rng).value);
  }

  Endpoint endpoint(connect_socket(connect_addr), PartyRole::p1);
  Session session = endpoint.open_session(ProtocolTag::ppknn);
  std::vector<mpz_class> reply = session.call(std::move(request));
  session.close();
  endpoint.close();

  if (reply.empty()) {
    std::cerr << "error: empty reply\n";
    return kExitFailure;
  }
  if (reply[0] != 0) {
    int code = static_cast<int>(reply[0].get_ui()) - 1;
    std::cerr << "error: " << errc_name(static_cast<Errc>(code)) << std::endl;
    return kExitFailure;
  }
  if (reply.size() == 3) {
    uint64_t label = reconstruct_delivery(pk, {reply[1], reply[2]});
    std::cout << label << std::endl;
    return kExitOk;
  }
  // fast mode: k (blinding, blinded) share pairs; the user reconstructs the
  // labels and takes the majority locally.
  if (reply.size() < 2 || reply.size() != 2 + 2 * reply[1].get_ui()) {
    std::cerr << "error: malformed reply\n";
    return kExitFailure;
  }
  std::vector<uint64_t> labels;
  for (size_t i = 2; i + 1 < reply.size(); i += 2) {
    labels.push_back(reconstruct_delivery(pk, {reply[i], reply[i + 1]}));
  }
  uint64_t max_label = 0;
  for (uint64_t label : labels) max_label = std::max(max_label, label);
  std::cout << oracle::majority_label_plain(labels, static_cast<unsigned>(max_label) + 1)
            << std::endl;
  return kExitOk;
}

// --------------------------------------------------------------------------
// verify

int cmd_verify(unsigned bits, unsigned trials, uint64_t seed, bool sm_literal) {
  VerifyOptions options;
  options.key_bits = bits;
  options.trials = trials;
  options.seed = seed;
  options.sm_variant = sm_literal ? SmVariant::published_literal : SmVariant::fixed_unblinding;
  std::cout << "verifying with " << bits << "-bit keys, base trial count " << trials
            << (sm_literal ? ", literal-transcription sm" : "") << std::endl;
  std::vector<SuiteResult> results = run_verification(options, &std::cout);
  bool all_passed = true;
  for (const SuiteResult& r : results) all_passed = all_passed && r.passed();
  std::cout << (all_passed ? "all suites passed" : "FAILURES detected") << std::endl;
  return all_passed ? kExitOk : kExitFailure;
}

// --------------------------------------------------------------------------
// bench

int cmd_bench(unsigned bits, size_t n, size_t m, unsigned l, unsigned k, uint64_t seed) {
  RandomSource key_rng(seed);
  KeyPair keys = keygen(bits, key_rng);
  ProtocolConfig config{l};
  DatabaseSchema schema{m, 3, l};
  std::mt19937_64 gen(seed);
  RandomSource enc_rng(seed + 17);

  std::cout << "# protocol\tn\tm\tl\tk\tmillis\tsm_calls\n";
  auto row = [&](const std::string& name, double millis, uint64_t sm_calls) {
    std::cout << name << '\t' << n << '\t' << m << '\t' << l << '\t' << k << '\t'
              << static_cast<long>(millis) << '\t' << sm_calls << "\n";
  };
  using Clock = std::chrono::steady_clock;
  auto ms_since = [](Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  };

  LocalRig rig(keys, config, {}, seed);
  PartyOne& p1 = rig.p1();
  uint64_t mask = (uint64_t{1} << attribute_bit_limit(schema)) - 1;

  {
    Ciphertext a = encrypt(keys.pub, to_mpz(gen() & mask), enc_rng);
    Ciphertext b = encrypt(keys.pub, to_mpz(gen() & mask), enc_rng);
    uint64_t before = p1.stats().sm_calls;
    Session s = p1.begin(ProtocolTag::sm);
    auto t0 = Clock::now();
    p1.sm(s, a, b);
    double ms = ms_since(t0);
    p1.finish(s);
    row("sm", ms, p1.stats().sm_calls - before);
  }
  {
    std::vector<Ciphertext> x(m), y(m);
    for (size_t j = 0; j < m; ++j) {
      x[j] = encrypt(keys.pub, to_mpz(gen() & mask), enc_rng);
      y[j] = encrypt(keys.pub, to_mpz(gen() & mask), enc_rng);
    }
    uint64_t before = p1.stats().sm_calls;
    Session s = p1.begin(ProtocolTag::ssed);
    auto t0 = Clock::now();
    p1.ssed(s, x, y);
    double ms = ms_since(t0);
    p1.finish(s);
    row("ssed", ms, p1.stats().sm_calls - before);
  }
  Ciphertext sample_distance = encrypt(keys.pub, to_mpz(gen() & ((1u << 16) - 1)), enc_rng);
  {
    uint64_t before = p1.stats().sm_calls;
    Session s = p1.begin(ProtocolTag::sbd);
    auto t0 = Clock::now();
    p1.sbd(s, sample_distance);
    double ms = ms_since(t0);
    p1.finish(s);
    row("sbd", ms, p1.stats().sm_calls - before);
  }
  auto random_entry = [&] {
    MinEntry e;
    uint64_t v = gen() & ((uint64_t{1} << l) - 1);
    for (unsigned i = 0; i < l; ++i) {
      e.key_bits.bits.push_back(encrypt(keys.pub, mpz_class((v >> i) & 1), enc_rng));
    }
    e.payload = encrypt(keys.pub, to_mpz(gen() % 3), enc_rng);
    return e;
  };
  {
    MinEntry u = random_entry(), v = random_entry();
    uint64_t before = p1.stats().sm_calls;
    Session s = p1.begin(ProtocolTag::smin);
    auto t0 = Clock::now();
    p1.smin(s, u, v);
    double ms = ms_since(t0);
    p1.finish(s);
    row("smin", ms, p1.stats().sm_calls - before);
  }
  {
    std::vector<MinEntry> entries;
    for (size_t i = 0; i < n; ++i) entries.push_back(random_entry());
    uint64_t before = p1.stats().sm_calls;
    Session s = p1.begin(ProtocolTag::sminn);
    auto t0 = Clock::now();
    p1.smin_n(s, std::move(entries));
    double ms = ms_since(t0);
    p1.finish(s);
    row("smin_n", ms, p1.stats().sm_calls - before);
  }
  {
    unsigned attr_bits = std::min(8u, attribute_bit_limit(schema));
    std::vector<PlainRecord> records = random_dataset(gen, n, m, schema.w, attr_bits);
    EncryptedDatabase db = encrypt_database(keys.pub, records, schema, enc_rng);
    std::vector<uint64_t> query = random_distinct_distance_query(gen, records, attr_bits);
    EncryptedQuery eq = encrypt_query(keys.pub, query, schema, enc_rng);
    Classifier classifier(p1);
    uint64_t before = p1.stats().sm_calls;
    auto t0 = Clock::now();
    classifier.classify(db, eq, k);
    row("classify", ms_since(t0), p1.stats().sm_calls - before);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"privacy-preserving k-NN classification over Paillier-encrypted data"};
  app.require_subcommand(1);

  unsigned bits = kSecureKeyBits;
  std::string out_dir = "keys";
  bool insecure = false;
  auto* keygen_cmd = app.add_subcommand("keygen", "generate a Paillier key pair");
  keygen_cmd->add_option("--bits", bits, "modulus size in bits");
  keygen_cmd->add_option("--out", out_dir, "output directory");
  keygen_cmd->add_flag("--insecure", insecure, "allow short keys for tests/benchmarks");

  std::string csv_path, pub_path, db_out = "db.ppknn";
  unsigned enc_l = 32, enc_w = 0;
  auto* enc_cmd = app.add_subcommand("encrypt-db", "encrypt a CSV dataset attribute-wise");
  enc_cmd->add_option("--csv", csv_path, "input CSV (attributes..., label)")->required();
  enc_cmd->add_option("--pub", pub_path, "public key file")->required();
  enc_cmd->add_option("--out", db_out, "output database file");
  enc_cmd->add_option("--l", enc_l, "bit budget for squared distances");
  enc_cmd->add_option("--w", enc_w, "class count (0 = derive from labels)");

  std::string role, serve_pub, serve_sec, serve_db, listen_addr, connect_addr;
  std::string mode = "secure";
  auto* serve_cmd = app.add_subcommand("serve", "run a cloud party process");
  serve_cmd->add_option("--role", role, "p1 or p2")->required();
  serve_cmd->add_option("--pub", serve_pub, "public key file (p1)");
  serve_cmd->add_option("--sec", serve_sec, "secret key file (p2)");
  serve_cmd->add_option("--db", serve_db, "encrypted database file (p1)");
  serve_cmd->add_option("--listen", listen_addr, "host:port to listen on");
  serve_cmd->add_option("--connect", connect_addr, "peer host:port (p1)");
  serve_cmd->add_option("--mode", mode, "secure | fast (label majority location)");

  std::string query_connect, query_pub, query_text;
  unsigned query_k = 1;
  auto* query_cmd = app.add_subcommand("query", "classify one record via a running p1");
  query_cmd->add_option("--connect", query_connect, "p1 user host:port")->required();
  query_cmd->add_option("--pub", query_pub, "public key file")->required();
  query_cmd->add_option("--k", query_k, "neighbor count");
  query_cmd->add_option("--query", query_text, "comma-separated attribute values")->required();

  unsigned verify_bits = 512, verify_trials = 100;
  uint64_t verify_seed = 1;
  bool sm_literal = false;
  auto* verify_cmd = app.add_subcommand("verify", "run the differential suites in-process");
  verify_cmd->add_option("--bits", verify_bits, "key size (insecure sizes allowed here)");
  verify_cmd->add_option("--trials", verify_trials, "base trial count");
  verify_cmd->add_option("--seed", verify_seed, "deterministic seed");
  verify_cmd->add_flag("--sm-literal", sm_literal,
                       "use the published multiplication unblinding (expected to fail)");

  unsigned bench_bits = 512, bench_l = 32, bench_k = 3;
  size_t bench_n = 30, bench_m = 4;
  uint64_t bench_seed = 1;
  auto* bench_cmd = app.add_subcommand("bench", "print per-protocol timings");
  bench_cmd->add_option("--bits", bench_bits, "key size");
  bench_cmd->add_option("--n", bench_n, "record count");
  bench_cmd->add_option("--m", bench_m, "attribute count");
  bench_cmd->add_option("--l", bench_l, "bit budget");
  bench_cmd->add_option("--k", bench_k, "neighbor count");
  bench_cmd->add_option("--seed", bench_seed, "deterministic seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (keygen_cmd->parsed()) return cmd_keygen(bits, out_dir, insecure);
    if (enc_cmd->parsed()) return cmd_encrypt_db(csv_path, pub_path, db_out, enc_l, enc_w);
    if (serve_cmd->parsed()) {
      return cmd_serve(role, serve_pub, serve_sec, serve_db, listen_addr, connect_addr, mode);
    }
    if (query_cmd->parsed()) {
      return cmd_query(query_connect, query_pub, query_k, query_text);
    }
    if (verify_cmd->parsed()) {
      return cmd_verify(verify_bits, verify_trials, verify_seed, sm_literal);
    }
    if (bench_cmd->parsed()) {
      return cmd_bench(bench_bits, bench_n, bench_m, bench_l, bench_k, bench_seed);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitFailure;
  }
  return kExitUsage;
}
