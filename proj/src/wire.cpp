#include "ppknn/wire.hpp"

#include "ppknn/errors.hpp"

namespace ppknn {

namespace {

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) {
    out.push_back(static_cast<uint8_t>(v >> shift));
  }
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) {
    out.push_back(static_cast<uint8_t>(v >> shift));
  }
}

class Reader {
public:
  explicit Reader(std::span<const uint8_t> bytes) : bytes_(bytes) {}

  uint8_t u8() { return take(1)[0]; }

  uint16_t u16() {
    auto b = take(2);
    return static_cast<uint16_t>(b[0]) << 8 | b[1];
  }

  uint32_t u32() {
    auto b = take(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = v << 8 | b[i];
    return v;
  }

  uint64_t u64() {
    auto b = take(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = v << 8 | b[i];
    return v;
  }

  std::span<const uint8_t> take(size_t count) {
    if (bytes_.size() - pos_ < count) fail(Errc::frame_corrupt, "truncated message");
    auto out = bytes_.subspan(pos_, count);
    pos_ += count;
    return out;
  }

  bool done() const { return pos_ == bytes_.size(); }

private:
  std::span<const uint8_t> bytes_;
  size_t pos_ = 0;
};

}  // namespace

const char* tag_name(ProtocolTag tag) noexcept {
  switch (tag) {
    case ProtocolTag::sm: return "SM";
    case ProtocolTag::ssed: return "SSED";
    case ProtocolTag::sbd: return "SBD";
    case ProtocolTag::lsb: return "LSB";
    case ProtocolTag::smin: return "SMIN";
    case ProtocolTag::sminn: return "SMINN";
    case ProtocolTag::ppknn: return "PPKNN";
    case ProtocolTag::result: return "RESULT";
  }
  return "?";
}

bool is_valid_tag(uint8_t raw) noexcept {
  return raw >= static_cast<uint8_t>(ProtocolTag::sm) &&
         raw <= static_cast<uint8_t>(ProtocolTag::result);
}

std::vector<uint8_t> export_magnitude(const mpz_class& value) {
  if (value < 0) fail(Errc::frame_corrupt, "negative payload value");
  if (value == 0) return {};
  std::vector<uint8_t> out((mpz_sizeinbase(value.get_mpz_t(), 2) + 7) / 8);
  size_t written = 0;
  mpz_export(out.data(), &written, 1, 1, 1, 0, value.get_mpz_t());
  out.resize(written);
  return out;
}

mpz_class import_magnitude(std::span<const uint8_t> bytes) {
  if (!bytes.empty() && bytes.front() == 0) {
    fail(Errc::frame_corrupt, "non-canonical integer encoding");
  }
  mpz_class v = 0;
  if (!bytes.empty()) {
    mpz_import(v.get_mpz_t(), bytes.size(), 1, 1, 1, 0, bytes.data());
  }
  return v;
}

std::vector<uint8_t> encode_message(const ProtocolMessage& msg) {
  if (msg.payload.size() > kMaxPayloadCount) {
    fail(Errc::frame_corrupt, "too many payload entries");
  }
  std::vector<uint8_t> out;
  out.push_back(kWireVersion);
  out.push_back(static_cast<uint8_t>(msg.tag));
  put_u64(out, msg.session_id);
  put_u32(out, msg.sequence_no);
  put_u16(out, static_cast<uint16_t>(msg.payload.size()));
  size_t payload_bytes = 0;
  for (const mpz_class& value : msg.payload) {
    auto bytes = export_magnitude(value);
    payload_bytes += bytes.size();
    if (payload_bytes > kMaxPayloadBytes) fail(Errc::frame_corrupt, "oversize payload");
    put_u32(out, static_cast<uint32_t>(bytes.size()));
    out.insert(out.end(), bytes.begin(), bytes.end());
  }
  return out;
}

ProtocolMessage decode_message(std::span<const uint8_t> bytes) {
  Reader in(bytes);
  if (in.u8() != kWireVersion) fail(Errc::frame_corrupt, "unknown wire version");
  uint8_t raw_tag = in.u8();
  if (!is_valid_tag(raw_tag)) fail(Errc::frame_corrupt, "unknown protocol tag");

  ProtocolMessage msg;
  msg.tag = static_cast<ProtocolTag>(raw_tag);
  msg.session_id = in.u64();
  msg.sequence_no = in.u32();
  uint16_t count = in.u16();
  msg.payload.reserve(count);
  size_t payload_bytes = 0;
  for (uint16_t i = 0; i < count; ++i) {
    uint32_t len = in.u32();
    payload_bytes += len;
    if (payload_bytes > kMaxPayloadBytes) fail(Errc::frame_corrupt, "oversize payload");
    msg.payload.push_back(import_magnitude(in.take(len)));
  }
  if (!in.done()) fail(Errc::frame_corrupt, "trailing bytes after payload");
  return msg;
}

}  // namespace ppknn
