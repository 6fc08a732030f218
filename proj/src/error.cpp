#include "udts/error.hpp"

namespace udts {

const char* errc_name(const Errc code) noexcept {
    switch (code) {
    case Errc::out_of_range: return "OutOfRange";
    case Errc::no_free_bits: return "NoFreeBits";
    case Errc::value_not_in_v: return "ValueNotInV";
    case Errc::address_not_aligned: return "AddressNotAligned";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::equal_pair: return "EqualPair";
    case Errc::no_undefined_rep: return "NoUndefinedRep";
    case Errc::bound_exceeded: return "BoundExceeded";
    case Errc::empty_input: return "EmptyInput";
    case Errc::size_mismatch: return "SizeMismatch";
    case Errc::ill_formed_program: return "IllFormedProgram";
    case Errc::cap_exceeded: return "CapExceeded";
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::parse_error: return "ParseError";
    }
    return "Unknown";
}

Error::Error(const Errc code, const std::string& what)
    : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

} // namespace udts
