#include "upad/error.hpp"

namespace upad {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_key: return "invalid key";
    case Errc::invalid_parameter: return "invalid parameter";
    case Errc::domain_mismatch: return "domain mismatch";
    case Errc::length_mismatch: return "length mismatch";
    case Errc::parse_error: return "parse error";
    case Errc::one_time_violation: return "one-time violation";
    case Errc::protocol_corruption: return "protocol corruption";
    case Errc::protocol_state: return "protocol state";
    case Errc::destroyed_material: return "destroyed material";
    case Errc::insufficient_data: return "insufficient data";
    case Errc::budget_exceeded: return "budget exceeded";
    case Errc::unsupported_frame: return "unsupported frame";
    case Errc::malformed_frame: return "malformed frame";
    case Errc::incomplete_frame: return "incomplete frame";
    case Errc::delivery: return "delivery error";
    case Errc::io: return "i/o error";
  }
  return "unknown error";
}

}  // namespace upad
