#include <random>

#include "doctest.h"
#include "ppknn/errors.hpp"
#include "ppknn/wire.hpp"

using namespace ppknn;

namespace {

ProtocolMessage sample_message() {
  ProtocolMessage msg;
  msg.session_id = 0x1122334455667788ULL;
  msg.tag = ProtocolTag::ssed;
  msg.sequence_no = 7;
  msg.payload = {mpz_class("123456789012345678901234567890"), mpz_class(0), mpz_class(255)};
  return msg;
}

}  // namespace

TEST_CASE("messages roundtrip and encode canonically") {
  ProtocolMessage msg = sample_message();
  auto bytes = encode_message(msg);
  CHECK(decode_message(bytes) == msg);
  CHECK(encode_message(msg) == bytes);  // one byte sequence per message

  ProtocolMessage empty;
  empty.tag = ProtocolTag::lsb;
  empty.session_id = 1;
  empty.sequence_no = 0;
  CHECK(decode_message(encode_message(empty)) == empty);
}

TEST_CASE("random messages roundtrip") {
  std::mt19937_64 gen(11);
  for (int t = 0; t < 100; ++t) {
    ProtocolMessage msg;
    msg.session_id = gen();
    msg.tag = static_cast<ProtocolTag>(1 + gen() % 8);
    msg.sequence_no = static_cast<uint32_t>(gen());
    size_t count = gen() % 5;
    for (size_t i = 0; i < count; ++i) {
      mpz_class v = gen();
      v = (v << 64) + gen();
      msg.payload.push_back(v >> static_cast<unsigned>(gen() % 100));
    }
    CHECK(decode_message(encode_message(msg)) == msg);
  }
}

TEST_CASE("single byte mutations never decode to the original message") {
  ProtocolMessage msg = sample_message();
  auto bytes = encode_message(msg);
  std::mt19937_64 gen(12);
  int detected = 0;
  for (int t = 0; t < 300; ++t) {
    auto mutated = bytes;
    size_t at = gen() % mutated.size();
    uint8_t flip = static_cast<uint8_t>(1 + gen() % 255);
    mutated[at] ^= flip;
    try {
      ProtocolMessage out = decode_message(mutated);
      // The format has no checksum: a flip inside a value's magnitude bytes
      // decodes, but never to the original message.
      CHECK(out != msg);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::frame_corrupt);
      ++detected;
    }
  }
  CHECK(detected > 0);
}

TEST_CASE("decode rejects structural corruption") {
  ProtocolMessage msg = sample_message();
  auto bytes = encode_message(msg);

  SUBCASE("bad version") {
    bytes[0] = 0x02;
    CHECK_THROWS_AS(decode_message(bytes), Error);
  }
  SUBCASE("unknown tag") {
    bytes[1] = 0;
    CHECK_THROWS_AS(decode_message(bytes), Error);
    bytes[1] = 9;
    CHECK_THROWS_AS(decode_message(bytes), Error);
  }
  SUBCASE("truncated") {
    for (size_t keep : {size_t{0}, size_t{5}, size_t{15}, bytes.size() - 1}) {
      std::vector<uint8_t> cut(bytes.begin(), bytes.begin() + keep);
      CHECK_THROWS_AS(decode_message(cut), Error);
    }
  }
  SUBCASE("trailing bytes") {
    bytes.push_back(0);
    CHECK_THROWS_AS(decode_message(bytes), Error);
  }
  SUBCASE("open frame with payload stays decodable") {
    // sequence 0 is transport policy, not a wire-format property
    msg.sequence_no = 0;
    CHECK(decode_message(encode_message(msg)) == msg);
  }
}

TEST_CASE("decode rejects non-canonical integers") {
  ProtocolMessage msg;
  msg.tag = ProtocolTag::sm;
  msg.session_id = 3;
  msg.sequence_no = 1;
  msg.payload = {mpz_class(255)};
  auto bytes = encode_message(msg);
  // widen the single value 0xff to 0x00 0xff
  auto padded = bytes;
  padded[padded.size() - 2] = 0x02;  // length low byte: 1 -> 2
  padded.insert(padded.end() - 1, 0x00);
  CHECK_THROWS_AS(decode_message(padded), Error);
}

TEST_CASE("encode rejects invalid payloads") {
  ProtocolMessage msg;
  msg.payload = {mpz_class(-5)};
  CHECK_THROWS_AS(encode_message(msg), Error);
}

TEST_CASE("oversize payload is rejected on both sides") {
  ProtocolMessage msg;
  msg.tag = ProtocolTag::ppknn;
  msg.session_id = 9;
  msg.sequence_no = 1;
  mpz_class big = (mpz_class(1) << (8 * (1 << 23))) - 1;  // 8 MiB of 0xff
  msg.payload = {big, big, big};                          // 24 MiB total
  CHECK_THROWS_AS(encode_message(msg), Error);
}

TEST_CASE("magnitude export import") {
  CHECK(export_magnitude(mpz_class(0)).empty());
  CHECK(export_magnitude(mpz_class(0x01ff)) == std::vector<uint8_t>{0x01, 0xff});
  CHECK(import_magnitude(std::vector<uint8_t>{}) == 0);
  CHECK(import_magnitude(std::vector<uint8_t>{0x01, 0x00}) == 256);
  std::vector<uint8_t> bad = {0x00, 0x01};
  CHECK_THROWS_AS(import_magnitude(bad), Error);
}
