#include "ppknn/protocols.hpp"

#include <utility>

namespace ppknn {

namespace {

mpz_class op_code(P2Op op) { return mpz_class(static_cast<unsigned long>(op)); }

Ciphertext reply_ciphertext(const PublicKey& pk, const std::vector<mpz_class>& reply,
                            size_t index = 0) {
  if (reply.size() <= index) fail(Errc::protocol_abort, "short reply from peer");
  const mpz_class& v = reply[index];
  if (v < 0 || v >= pk.n_squared) fail(Errc::protocol_abort, "reply outside [0, n^2)");
  return Ciphertext{v};
}

}  // namespace

void validate_config(const ProtocolConfig& config, const PublicKey& pk) {
  if (config.bit_budget_l == 0 || config.bit_budget_l > 62) {
    fail(Errc::insecure_parameters, "bit budget must be in [1, 62]");
  }
  mpz_class headroom = mpz_class(1) << (config.bit_budget_l + 2);
  if (headroom >= pk.n) {
    fail(Errc::insecure_parameters, "blinding headroom violated: need 4 * 2^l < n");
  }
}

// ---------------------------------------------------------------------------
// PartyOne

PartyOne::PartyOne(Endpoint& endpoint, PublicKey pk, ProtocolConfig config)
    : endpoint_(endpoint), pk_(std::move(pk)), config_(config) {
  validate_config(config_, pk_);
}

PartyOne::PartyOne(Endpoint& endpoint, PublicKey pk, ProtocolConfig config, uint64_t seed)
    : endpoint_(endpoint), pk_(std::move(pk)), config_(config), rng_(seed) {
  validate_config(config_, pk_);
}

Session PartyOne::begin(ProtocolTag tag) {
  ++stats_.sessions_opened;
  return endpoint_.open_session(tag);
}

void PartyOne::finish(Session& session) {
  auto reply = session.call({op_code(P2Op::finish)});
  if (reply.size() != 1 || reply[0] != op_code(P2Op::finish)) {
    fail(Errc::protocol_abort, "bad finish acknowledgement");
  }
  session.close();
}

Ciphertext PartyOne::sm(Session& session, const Ciphertext& a, const Ciphertext& b) {
  return sm(session, a, b, SmVariant::fixed_unblinding);
}

Ciphertext PartyOne::sm(Session& session, const Ciphertext& a, const Ciphertext& b,
                        SmVariant variant) {
  ++stats_.sm_calls;
  mpz_class r_a = rng_.below(pk_.n);
  mpz_class r_b = rng_.below(pk_.n);
  Ciphertext blinded_a = add(pk_, a, encrypt(pk_, r_a, rng_));
  Ciphertext blinded_b = add(pk_, b, encrypt(pk_, r_b, rng_));

  auto reply = session.call({op_code(P2Op::mul), blinded_a.value, blinded_b.value});
  Ciphertext product = reply_ciphertext(pk_, reply);

  // product encrypts (a + r_a)(b + r_b); cancel a*r_b, b*r_a and r_a*r_b.
  mpz_class cross = r_a * r_b % pk_.n;
  if (variant == SmVariant::fixed_unblinding) {
    Ciphertext s = add(pk_, product, scalar_mul(pk_, a, (pk_.n - r_b) % pk_.n));
    s = add(pk_, s, scalar_mul(pk_, b, (pk_.n - r_a) % pk_.n));
    return add(pk_, s, encrypt(pk_, (pk_.n - cross) % pk_.n, rng_));
  }
  // The published unblinding adds E(a) instead of cancelling a*r_b; it leaves
  // b*r_a + a*r_b + a - b*r_b in the plaintext and fails the differential
  // suite. Kept selectable as a regression foil only.
  Ciphertext s = add(pk_, product, a);
  s = add(pk_, s, scalar_mul(pk_, b, (pk_.n - r_b) % pk_.n));
  return add(pk_, s, encrypt(pk_, (pk_.n - cross) % pk_.n, rng_));
}

Ciphertext PartyOne::ssed(Session& session, std::span<const Ciphertext> x,
                          std::span<const Ciphertext> y) {
  if (x.size() != y.size()) {
    fail(Errc::dimension_error, "vectors of different length");
  }
  if (x.empty()) return encrypt(pk_, 0, rng_);
  Ciphertext total;
  for (size_t j = 0; j < x.size(); ++j) {
    Ciphertext diff = sub(pk_, x[j], y[j]);
    Ciphertext square = sm(session, diff, diff);
    total = (j == 0) ? square : add(pk_, total, square);
  }
  return total;
}

Ciphertext PartyOne::encrypted_lsb(Session& session, const Ciphertext& z) {
  ++stats_.lsb_calls;
  // r < N/4 together with z < 2^l << N/4 keeps z + r from wrapping mod N,
  // so the parity of z + r determines the parity of z given r.
  mpz_class r = rng_.below(pk_.n >> 2);
  Ciphertext blinded = add(pk_, z, encrypt(pk_, r, rng_));
  auto reply = session.call({op_code(P2Op::parity), blinded.value});
  Ciphertext parity = reply_ciphertext(pk_, reply);
  if (mpz_odd_p(r.get_mpz_t())) {
    return add(pk_, encrypt(pk_, 1, rng_), negate(pk_, parity));
  }
  return parity;
}

EncryptedBits PartyOne::sbd(Session& session, const Ciphertext& z) {
  return sbd(session, z, config_.bit_budget_l);
}

EncryptedBits PartyOne::sbd(Session& session, const Ciphertext& z, unsigned bit_count) {
  if (bit_count == 0 || bit_count > config_.bit_budget_l) {
    fail(Errc::dimension_error, "bit count outside [1, l]");
  }
  ++stats_.sbd_calls;
  // 2^-1 mod N maps an even plaintext 2u to u.
  mpz_class half = (pk_.n + 1) / 2;

  EncryptedBits out;
  out.bits.reserve(bit_count);
  Ciphertext rest = z;
  for (unsigned i = 0; i < bit_count; ++i) {
    Ciphertext bit = encrypted_lsb(session, rest);
    out.bits.push_back(bit);
    if (i + 1 < bit_count) {
      rest = scalar_mul(pk_, sub(pk_, rest, bit), half);
    }
  }

  // Online recomposition check: sum(2^i b_i) - z, masked by a fresh nonzero
  // scalar, must decrypt to zero. Catches both faults and callers that fed a
  // value outside [0, 2^bit_count).
  Ciphertext recomposed = out.bits[0];
  for (unsigned i = 1; i < bit_count; ++i) {
    recomposed = add(pk_, recomposed, scalar_mul(pk_, out.bits[i], mpz_class(1) << i));
  }
  Ciphertext masked =
      scalar_mul(pk_, sub(pk_, recomposed, z), rng_.nonzero_below(pk_.n));
  auto reply = session.call({op_code(P2Op::zero_test), masked.value});
  if (reply.size() != 1 || reply[0] != 1) {
    fail(Errc::protocol_abort, "bit decomposition failed the recomposition check");
  }
  return out;
}

Ciphertext PartyOne::xor_bits(Session& session, const Ciphertext& a, const Ciphertext& b) {
  // a xor b = a + b - 2ab for bits.
  Ciphertext product = sm(session, a, b);
  Ciphertext twice = add(pk_, product, product);
  return add(pk_, add(pk_, a, b), negate(pk_, twice));
}

MinEntry PartyOne::smin(Session& session, const MinEntry& u, const MinEntry& v) {
  const size_t l = u.key_bits.size();
  if (l == 0 || l != v.key_bits.size()) {
    fail(Errc::dimension_error, "operands must share a nonzero bit length");
  }
  ++stats_.smin_calls;

  // Bitwise difference, then a most-significant-first prefix OR isolates the
  // highest differing position.
  std::vector<Ciphertext> diff(l);
  for (size_t i = 0; i < l; ++i) {
    diff[i] = xor_bits(session, u.key_bits.bits[i], v.key_bits.bits[i]);
  }
  std::vector<Ciphertext> prefix(l);
  prefix[l - 1] = diff[l - 1];
  for (size_t i = l - 1; i-- > 0;) {
    // OR(a, b) = a + b - ab.
    Ciphertext product = sm(session, prefix[i + 1], diff[i]);
    prefix[i] = add(pk_, add(pk_, prefix[i + 1], diff[i]), negate(pk_, product));
  }

  // first_diff[i] is 1 exactly at the highest differing bit (all zero when
  // u = v); u's bit there is 1 iff u > v.
  Ciphertext u_greater;
  bool have_sum = false;
  for (size_t i = 0; i < l; ++i) {
    Ciphertext first_diff =
        (i + 1 < l) ? sub(pk_, prefix[i], prefix[i + 1]) : prefix[l - 1];
    Ciphertext term = sm(session, first_diff, u.key_bits.bits[i]);
    u_greater = have_sum ? add(pk_, u_greater, term) : term;
    have_sum = true;
  }

  // Select u when u <= v, else v: out = u + b * (v - u), b = [u > v].
  MinEntry out;
  out.key_bits.bits.reserve(l);
  for (size_t i = 0; i < l; ++i) {
    Ciphertext swap =
        sm(session, u_greater, sub(pk_, v.key_bits.bits[i], u.key_bits.bits[i]));
    out.key_bits.bits.push_back(add(pk_, u.key_bits.bits[i], swap));
  }
  Ciphertext payload_swap = sm(session, u_greater, sub(pk_, v.payload, u.payload));
  out.payload = add(pk_, u.payload, payload_swap);
  return out;
}

MinEntry PartyOne::smin_n(Session& session, std::vector<MinEntry> entries) {
  if (entries.empty()) fail(Errc::empty_input, "smin_n over an empty list");
  const size_t l = entries.front().key_bits.size();
  for (const MinEntry& e : entries) {
    if (e.key_bits.size() != l) {
      fail(Errc::dimension_error, "entries must share one bit length");
    }
  }
  // Tournament: adjacent pairing preserves entry order, so tied minima
  // resolve to the earliest entry.
  while (entries.size() > 1) {
    std::vector<MinEntry> next;
    next.reserve((entries.size() + 1) / 2);
    for (size_t i = 0; i + 1 < entries.size(); i += 2) {
      next.push_back(smin(session, entries[i], entries[i + 1]));
    }
    if (entries.size() % 2 == 1) {
      next.push_back(std::move(entries.back()));
    }
    entries = std::move(next);
  }
  return std::move(entries.front());
}

size_t PartyOne::find_zero(Session& session, std::span<const Ciphertext> values) {
  std::vector<mpz_class> request;
  request.reserve(values.size() + 1);
  request.push_back(op_code(P2Op::find_zero));
  for (const Ciphertext& c : values) request.push_back(c.value);
  auto reply = session.call(std::move(request));
  if (reply.size() != 1 || reply[0] >= values.size()) {
    fail(Errc::protocol_abort, "peer found no zero entry");
  }
  return reply[0].get_ui();
}

mpz_class PartyOne::unblind(Session& session, const Ciphertext& c) {
  auto reply = session.call({op_code(P2Op::unblind), c.value});
  if (reply.size() != 1) fail(Errc::protocol_abort, "bad unblind reply");
  return reply[0];
}

bool PartyOne::key_matches_peer(Session& session) {
  auto reply = session.call({op_code(P2Op::hello), pk_.n});
  if (reply.size() != 1) fail(Errc::protocol_abort, "bad hello reply");
  return reply[0] == 1;
}

// ---------------------------------------------------------------------------
// PartyTwo

PartyTwo::PartyTwo(Endpoint& endpoint, PublicKey pk, SecretKey sk, PartyTwoOptions options)
    : endpoint_(endpoint), pk_(std::move(pk)), sk_(std::move(sk)), options_(options) {}

PartyTwo::PartyTwo(Endpoint& endpoint, PublicKey pk, SecretKey sk, PartyTwoOptions options,
                   uint64_t seed)
    : endpoint_(endpoint), pk_(std::move(pk)), sk_(std::move(sk)), options_(options),
      rng_(seed) {}

void PartyTwo::serve() {
  std::vector<std::thread> workers;
  auto join_all = [&workers] {
    for (auto& w : workers) w.join();
  };
  try {
    for (;;) {
      Session session;
      try {
        session = endpoint_.accept_session();
      } catch (const Error& e) {
        join_all();
        // A disconnect between sessions is a clean shutdown; mid-session it
        // surfaces through serve_session below.
        if (e.code() == Errc::transport_disconnected) return;
        throw;
      }
      if (options_.concurrent_sessions) {
        workers.emplace_back([this, s = std::move(session)]() mutable {
          try {
            serve_session(s);
          } catch (...) {
            endpoint_.close();  // abort the whole transport, not just this session
          }
        });
      } else {
        serve_session(session);
      }
    }
  } catch (...) {
    join_all();
    throw;
  }
}

void PartyTwo::serve_one() {
  Session session = endpoint_.accept_session();
  serve_session(session);
}

void PartyTwo::serve_session(Session& session) {
  for (;;) {
    std::vector<mpz_class> request = session.recv();
    if (request.empty() || request[0] < 1 ||
        request[0] > op_code(P2Op::finish)) {
      fail(Errc::protocol_abort, "unknown request opcode");
    }
    P2Op op = static_cast<P2Op>(request[0].get_ui());
    if (op == P2Op::finish) {
      session.send({op_code(P2Op::finish)});
      session.close();
      return;
    }
    session.send(handle(op, std::span(request).subspan(1)));
  }
}

mpz_class PartyTwo::decrypt_operand(P2Op op, const mpz_class& raw) {
  mpz_class value = decrypt(sk_, Ciphertext{raw});
  if (options_.record_view) {
    std::lock_guard lock(view_mutex_);
    view_.push_back({op, value});
  }
  return value;
}

std::vector<mpz_class> PartyTwo::handle(P2Op op, std::span<const mpz_class> operands) {
  switch (op) {
    case P2Op::hello:
      if (operands.size() != 1) fail(Errc::protocol_abort, "hello expects one operand");
      return {operands[0] == pk_.n ? 1 : 0};

    case P2Op::mul: {
      if (operands.size() != 2) fail(Errc::protocol_abort, "mul expects two operands");
      mpz_class left = decrypt_operand(op, operands[0]);
      mpz_class right = decrypt_operand(op, operands[1]);
      return {encrypt(pk_, left * right % pk_.n, rng_).value};
    }

    case P2Op::parity: {
      if (operands.size() != 1) fail(Errc::protocol_abort, "parity expects one operand");
      mpz_class value = decrypt_operand(op, operands[0]);
      return {encrypt(pk_, value % 2, rng_).value};
    }

    case P2Op::zero_test: {
      if (operands.size() != 1) fail(Errc::protocol_abort, "zero test expects one operand");
      return {decrypt_operand(op, operands[0]) == 0 ? 1 : 0};
    }

    case P2Op::find_zero: {
      size_t zero_at = operands.size();
      for (size_t i = 0; i < operands.size(); ++i) {
        if (decrypt_operand(op, operands[i]) == 0 && zero_at == operands.size()) {
          zero_at = i;
        }
      }
      return {mpz_class(static_cast<unsigned long>(zero_at))};
    }

    case P2Op::unblind: {
      if (operands.size() != 1) fail(Errc::protocol_abort, "unblind expects one operand");
      return {decrypt_operand(op, operands[0])};
    }

    case P2Op::finish:
      break;  // handled by serve_session
  }
  fail(Errc::protocol_abort, "unhandled opcode");
}

std::vector<P2ViewEntry> PartyTwo::view() const {
  std::lock_guard lock(view_mutex_);
  return view_;
}

void PartyTwo::reset_view() {
  std::lock_guard lock(view_mutex_);
  view_.clear();
}

}  // namespace ppknn
