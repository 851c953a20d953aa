#include "ppknn/errors.hpp"

namespace ppknn {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::insecure_parameters: return "insecure-parameters";
    case Errc::plaintext_out_of_range: return "plaintext-out-of-range";
    case Errc::malformed_ciphertext: return "malformed-ciphertext";
    case Errc::frame_corrupt: return "frame-corrupt";
    case Errc::sequence_gap: return "sequence-gap";
    case Errc::transport_disconnected: return "transport-disconnected";
    case Errc::session_id_collision: return "session-id-collision";
    case Errc::dimension_error: return "dimension-error";
    case Errc::protocol_abort: return "protocol-abort";
    case Errc::empty_input: return "empty-input";
    case Errc::k_out_of_range: return "k-out-of-range";
    case Errc::attribute_out_of_range: return "attribute-out-of-range";
    case Errc::schema_mismatch: return "schema-mismatch";
    case Errc::w_out_of_range: return "w-out-of-range";
    case Errc::io_error: return "io-error";
  }
  return "unknown-error";
}

}  // namespace ppknn
