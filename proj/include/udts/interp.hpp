#pragma once

// A toy typed program language executed against one structure choice, and a
// verifier that runs it under every admissible choice.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "udts/core_model.hpp"
#include "udts/error_classes.hpp"
#include "udts/semantics.hpp"
#include "udts/sensitivity.hpp"

namespace udts {

struct Decl {
    std::string var;
    std::string type;
    Address addr = 0;
};

struct WriteTyped {
    std::string var;
    Value value;
};
struct ReadTyped {
    std::string var;
};
// Reads the bytes of `var` as `type` (an implicit cast).
struct ReadAs {
    std::string var;
    std::string type;
};
// Copies cells only; protected bits stay where they are.
struct ByteCopy {
    Address dst = 0;
    Address src = 0;
    std::size_t n = 0;
};
struct HardwareEffect {
    MemoryModification mod;
};
struct AssertValue {
    std::string var;
    Value value;
};

using Statement = std::variant<WriteTyped, ReadTyped, ReadAs, ByteCopy, HardwareEffect, AssertValue>;

struct Program {
    std::vector<Decl> decls;
    std::vector<Statement> stmts;

    [[nodiscard]] const Decl* find(const std::string& var) const;
    // Type names used by declarations and casts, sorted.
    [[nodiscard]] std::vector<std::string> types() const;
};

enum class OutcomeKind { terminated, stuck, inadmissible };
enum class StuckReason { undefined_decode, assert_failed, unknown_value_used };

const char* outcome_name(OutcomeKind k) noexcept;
const char* stuck_reason_name(StuckReason r) noexcept;

struct ReadRecord {
    std::size_t step = 0;
    std::string var;
    ReadResult result;
    // Some window cell was not last written by a typed write of this object.
    bool tainted = false;
};

struct Outcome {
    OutcomeKind kind = OutcomeKind::terminated;
    std::size_t step = 0;
    std::optional<StuckReason> reason;
    // Latest step that wrote into the window of the failing read.
    std::optional<std::size_t> cause_step;
    std::string detail;
    std::vector<ReadRecord> reads;
};

struct RunResult {
    Outcome outcome;
    Memory memory;
};

// Throws IllFormedProgram for unknown variables or missing structures.
RunResult run(const Program& p, const StructureChoice& choice, const Memory& m0);

struct Verdict {
    bool verified = true;
    // Failing choice and its outcome.
    std::optional<StructureChoice> choice;
    std::optional<Outcome> outcome;
    // First terminating choice that read a tainted window, if any.
    std::optional<StructureChoice> tainted_choice;
    std::optional<ReadRecord> tainted_read;
    std::size_t choices = 0;
    std::size_t inadmissible = 0;
};

// Enumerates the product of the families in (type name, member id) order.
// Throws CapExceeded when the product exceeds `cap`.
Verdict verify(const Program& p, const std::vector<StructureFamily>& families, const Memory& m0, std::size_t cap);

// Scheduler fragment with a TCB copied by memcpy.
enum class CaseStudyVariant { fixed, buggy, buggy_same_address };

Program build_case_study(CaseStudyVariant variant);
Program build_case_study(bool buggy);

// Families for the case study: TCB, TCB* and uchar. With `plain_tcb` the TCB
// family uses plain encodings instead of the protected-bit scheme.
std::vector<StructureFamily> case_study_families(bool plain_tcb = false);
// Eight cells over radix 4 with the free bits in the last byte.
Memory case_study_memory();

// decl x at the witness read address; optional history write; the effect; read x.
Program program_from_witness(const SensitivityWitness& w, const std::string& type_name);

nlohmann::json to_json(const Program& p);
Program program_from_json(const nlohmann::json& j);
nlohmann::json to_json(const StructureChoice& c);
nlohmann::json to_json(const Outcome& o);
nlohmann::json to_json(const Verdict& v);

} // namespace udts
