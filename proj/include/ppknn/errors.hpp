#pragma once

#include <stdexcept>
#include <string>

namespace ppknn {

enum class Errc {
  insecure_parameters,
  plaintext_out_of_range,
  malformed_ciphertext,
  frame_corrupt,
  sequence_gap,
  transport_disconnected,
  session_id_collision,
  dimension_error,
  protocol_abort,
  empty_input,
  k_out_of_range,
  attribute_out_of_range,
  schema_mismatch,
  w_out_of_range,
  io_error,
};

const char* errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace ppknn
