#include "ppknn/paillier.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "ppknn/errors.hpp"

namespace ppknn {

namespace {

mpz_class powm(const mpz_class& base, const mpz_class& exp, const mpz_class& mod) {
  mpz_class out;
  mpz_powm(out.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(), mod.get_mpz_t());
  return out;
}

void build_secret_cache(SecretKey& sk) {
  sk.n = sk.p * sk.q;
  sk.n_squared = sk.n * sk.n;
  mpz_lcm(sk.lambda.get_mpz_t(), mpz_class(sk.p - 1).get_mpz_t(),
          mpz_class(sk.q - 1).get_mpz_t());
  // g = N + 1 makes L(g^lambda mod N^2) = lambda mod N.
  if (mpz_invert(sk.mu.get_mpz_t(), sk.lambda.get_mpz_t(), sk.n.get_mpz_t()) == 0) {
    fail(Errc::insecure_parameters, "lambda not invertible modulo n");
  }
  sk.p_squared = sk.p * sk.p;
  sk.q_squared = sk.q * sk.q;
  sk.lambda_p = sk.lambda % (sk.p_squared - sk.p);
  sk.lambda_q = sk.lambda % (sk.q_squared - sk.q);
  if (mpz_invert(sk.q_squared_inv.get_mpz_t(), sk.q_squared.get_mpz_t(),
                 sk.p_squared.get_mpz_t()) == 0) {
    fail(Errc::insecure_parameters, "p and q are not distinct primes");
  }
}

void check_ciphertext(const PublicKey& pk, const Ciphertext& c) {
  if (c.value < 0 || c.value >= pk.n_squared) {
    fail(Errc::malformed_ciphertext, "ciphertext outside [0, n^2)");
  }
}

}  // namespace

KeyPair keygen(unsigned bit_length, RandomSource& rng) {
  if (bit_length < kMinKeyBits || bit_length % 2 != 0) {
    fail(Errc::insecure_parameters,
         "key size must be even and at least " + std::to_string(kMinKeyBits) + " bits");
  }
  for (;;) {
    mpz_class p = rng.probable_prime(bit_length / 2);
    mpz_class q = rng.probable_prime(bit_length / 2);
    if (p == q) continue;
    mpz_class n = p * q;
    if (mpz_sizeinbase(n.get_mpz_t(), 2) != bit_length) continue;

    KeyPair keys;
    keys.sec.p = p;
    keys.sec.q = q;
    build_secret_cache(keys.sec);
    keys.pub = public_key_of(keys.sec);
    return keys;
  }
}

SecretKey secret_key_from_primes(const mpz_class& p, const mpz_class& q) {
  if (p <= 1 || q <= 1 || p == q) {
    fail(Errc::insecure_parameters, "secret key needs two distinct primes");
  }
  SecretKey sk;
  sk.p = p;
  sk.q = q;
  build_secret_cache(sk);
  return sk;
}

PublicKey public_key_from_modulus(const mpz_class& n) {
  if (n <= 1) fail(Errc::insecure_parameters, "modulus must exceed 1");
  PublicKey pk;
  pk.n = n;
  pk.n_squared = n * n;
  pk.g = n + 1;
  pk.bits = static_cast<unsigned>(mpz_sizeinbase(n.get_mpz_t(), 2));
  return pk;
}

PublicKey public_key_of(const SecretKey& sec) { return public_key_from_modulus(sec.n); }

Ciphertext encrypt(const PublicKey& pk, const mpz_class& m, RandomSource& rng) {
  if (m < 0 || m >= pk.n) {
    fail(Errc::plaintext_out_of_range, "plaintext outside [0, n)");
  }
  mpz_class r = rng.unit_modulo(pk.n);
  // g^m = (1 + N)^m = 1 + mN mod N^2.
  mpz_class c = (1 + m * pk.n) % pk.n_squared;
  c = c * powm(r, pk.n, pk.n_squared) % pk.n_squared;
  return Ciphertext{c};
}

mpz_class decrypt(const SecretKey& sk, const Ciphertext& c) {
  if (c.value < 0 || c.value >= sk.n_squared) {
    fail(Errc::malformed_ciphertext, "ciphertext outside [0, n^2)");
  }
  mpz_class g;
  mpz_gcd(g.get_mpz_t(), c.value.get_mpz_t(), sk.n.get_mpz_t());
  if (g != 1) {
    fail(Errc::malformed_ciphertext, "ciphertext shares a factor with the modulus");
  }
  // c^lambda mod N^2 via CRT over p^2 and q^2.
  mpz_class rp = powm(c.value % sk.p_squared, sk.lambda_p, sk.p_squared);
  mpz_class rq = powm(c.value % sk.q_squared, sk.lambda_q, sk.q_squared);
  mpz_class x = ((rp - rq) * sk.q_squared_inv) % sk.p_squared;
  if (x < 0) x += sk.p_squared;
  x = rq + x * sk.q_squared;

  // L(x) = (x - 1) / N is exact for every unit modulo N^2.
  mpz_class l = x - 1;
  mpz_divexact(l.get_mpz_t(), l.get_mpz_t(), sk.n.get_mpz_t());
  return l * sk.mu % sk.n;
}

Ciphertext add(const PublicKey& pk, const Ciphertext& a, const Ciphertext& b) {
  check_ciphertext(pk, a);
  check_ciphertext(pk, b);
  return Ciphertext{a.value * b.value % pk.n_squared};
}

Ciphertext scalar_mul(const PublicKey& pk, const Ciphertext& c, const mpz_class& k) {
  check_ciphertext(pk, c);
  mpz_class e = k % pk.n;
  if (e < 0) e += pk.n;
  return Ciphertext{powm(c.value, e, pk.n_squared)};
}

Ciphertext negate(const PublicKey& pk, const Ciphertext& c) {
  check_ciphertext(pk, c);
  mpz_class inv;
  if (mpz_invert(inv.get_mpz_t(), c.value.get_mpz_t(), pk.n_squared.get_mpz_t()) == 0) {
    fail(Errc::malformed_ciphertext, "ciphertext is not a unit modulo n^2");
  }
  return Ciphertext{inv};
}

Ciphertext sub(const PublicKey& pk, const Ciphertext& a, const Ciphertext& b) {
  return add(pk, a, negate(pk, b));
}

Ciphertext rerandomize(const PublicKey& pk, const Ciphertext& c, RandomSource& rng) {
  check_ciphertext(pk, c);
  mpz_class r = rng.unit_modulo(pk.n);
  return Ciphertext{c.value * powm(r, pk.n, pk.n_squared) % pk.n_squared};
}

namespace {

std::string to_hex(const mpz_class& v) { return v.get_str(16); }

mpz_class from_hex(const std::string& text, const std::string& field) {
  if (text.empty()) fail(Errc::io_error, "empty value for field " + field);
  mpz_class v;
  if (mpz_set_str(v.get_mpz_t(), text.c_str(), 16) != 0 || v < 0) {
    fail(Errc::io_error, "bad hex value for field " + field);
  }
  return v;
}

std::map<std::string, std::string> read_fields(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_error, "cannot open " + path);
  std::map<std::string, std::string> fields;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(Errc::io_error, path + ": line " + std::to_string(line_no) + " is not name=hex");
    }
    fields[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return fields;
}

const std::string& field_or_fail(const std::map<std::string, std::string>& fields,
                                 const std::string& name, const std::string& path) {
  auto it = fields.find(name);
  if (it == fields.end()) fail(Errc::io_error, path + ": missing field " + name);
  return it->second;
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Errc::io_error, "cannot write " + path);
  out << body;
  if (!out.flush()) fail(Errc::io_error, "write failed for " + path);
}

}  // namespace

void save_public_key(const std::string& path, const PublicKey& pk) {
  std::ostringstream body;
  body << "n=" << to_hex(pk.n) << "\n";
  body << "bits=" << to_hex(mpz_class(pk.bits)) << "\n";
  write_file(path, body.str());
}

PublicKey load_public_key(const std::string& path) {
  auto fields = read_fields(path);
  mpz_class n = from_hex(field_or_fail(fields, "n", path), "n");
  mpz_class bits = from_hex(field_or_fail(fields, "bits", path), "bits");
  PublicKey pk = public_key_from_modulus(n);
  if (mpz_class(pk.bits) != bits) {
    fail(Errc::io_error, path + ": bits field does not match the modulus");
  }
  return pk;
}

void save_secret_key(const std::string& path, const SecretKey& sk) {
  std::ostringstream body;
  body << "p=" << to_hex(sk.p) << "\n";
  body << "q=" << to_hex(sk.q) << "\n";
  write_file(path, body.str());
}

SecretKey load_secret_key(const std::string& path) {
  auto fields = read_fields(path);
  mpz_class p = from_hex(field_or_fail(fields, "p", path), "p");
  mpz_class q = from_hex(field_or_fail(fields, "q", path), "q");
  return secret_key_from_primes(p, q);
}

}  // namespace ppknn
