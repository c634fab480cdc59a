#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace upad {

enum class Errc {
  invalid_key,
  invalid_parameter,
  domain_mismatch,
  length_mismatch,
  parse_error,
  one_time_violation,
  protocol_corruption,
  protocol_state,
  destroyed_material,
  insufficient_data,
  budget_exceeded,
  unsupported_frame,
  malformed_frame,
  incomplete_frame,
  delivery,
  io,
};

std::string_view to_string(Errc code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI) can branch on the kind without parsing messages.
class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] Errc code() const noexcept { return code_; }

private:
  Errc code_;
};

}  // namespace upad
