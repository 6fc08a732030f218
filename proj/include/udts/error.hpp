#pragma once

#include <stdexcept>
#include <string>

namespace udts {

enum class Errc {
    out_of_range,
    no_free_bits,
    value_not_in_v,
    address_not_aligned,
    length_mismatch,
    equal_pair,
    no_undefined_rep,
    bound_exceeded,
    empty_input,
    size_mismatch,
    ill_formed_program,
    cap_exceeded,
    invalid_argument,
    parse_error,
};

const char* errc_name(Errc code) noexcept;

// Caller-side failures. Detected type errors are never reported through this
// type; they show up as Undefined decodes, Stuck outcomes or witnesses.
class Error : public std::runtime_error {
  public:
    Error(Errc code, const std::string& what);
    [[nodiscard]] Errc code() const noexcept { return code_; }

  private:
    Errc code_;
};

} // namespace udts
