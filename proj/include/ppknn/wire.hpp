#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <span>
#include <vector>

namespace ppknn {

enum class ProtocolTag : uint8_t {
  sm = 1,
  ssed = 2,
  sbd = 3,
  lsb = 4,
  smin = 5,
  sminn = 6,
  ppknn = 7,
  result = 8,
};

const char* tag_name(ProtocolTag tag) noexcept;
bool is_valid_tag(uint8_t raw) noexcept;

/// One framed unit of P1 <-> P2 communication.
struct ProtocolMessage {
  uint64_t session_id = 0;
  ProtocolTag tag = ProtocolTag::sm;
  uint32_t sequence_no = 0;
  std::vector<mpz_class> payload;  // nonnegative big integers

  friend bool operator==(const ProtocolMessage&, const ProtocolMessage&) = default;
};

inline constexpr uint8_t kWireVersion = 0x01;
inline constexpr size_t kMaxPayloadBytes = size_t{1} << 24;
inline constexpr size_t kMaxPayloadCount = 0xffff;

// Layout: version(1) | tag(1) | session_id(8 BE) | sequence_no(4 BE) |
// payload_count(2 BE) | count * (length(4 BE) | magnitude bytes, big-endian,
// no leading zero byte; zero encodes with length 0).
std::vector<uint8_t> encode_message(const ProtocolMessage& msg);

/// Rejects unknown versions/tags, non-canonical integers, oversize payloads,
/// truncated input and trailing bytes. Every rejection is frame-corrupt.
ProtocolMessage decode_message(std::span<const uint8_t> bytes);

std::vector<uint8_t> export_magnitude(const mpz_class& value);
mpz_class import_magnitude(std::span<const uint8_t> bytes);

}  // namespace ppknn
