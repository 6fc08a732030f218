#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "udts/semantics.hpp"

namespace udts {

// Exit codes of the command-line tool.
inline constexpr int kExitPass = 0;
inline constexpr int kExitViolation = 1;
inline constexpr int kExitInput = 2;
inline constexpr int kExitCap = 3;

// Runs the tool on `args` (without the program name). Reports go to `out`,
// diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Named families available through --builtin / --family / --foreign.
std::vector<std::string> builtin_family_names();
StructureFamily builtin_family(const std::string& name, unsigned radix, std::uint64_t seed, std::size_t mem_size);

} // namespace udts
