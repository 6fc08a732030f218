#pragma once

// The five classes of type errors as generators of memory modifications
// relative to one typed read, and a classifier working from provenance.

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "udts/core_model.hpp"
#include "udts/semantics.hpp"

namespace udts {

// 1 unspecified contents, 2 constant bytes, 3 foreign representation,
// 4 slice of foreign representations, 5 bitwise copy.
using ClassId = int;
inline constexpr ClassId kFirstClass = 1;
inline constexpr ClassId kLastClass = 5;

struct UnknownFill {
    friend bool operator==(const UnknownFill&, const UnknownFill&) = default;
};

struct ConstantFill {
    Byte value = 0;
    friend bool operator==(const ConstantFill&, const ConstantFill&) = default;
};

// A complete object representation of `value` produced by `structure_id`
// (a member of the family for `type_name`), encoded for `source_address`.
struct RepresentationWrite {
    std::string type_name;
    std::string structure_id;
    Value value;
    Address source_address = 0;
    ByteList bytes;
    friend bool operator==(const RepresentationWrite&, const RepresentationWrite&) = default;
};

// bytes = concat(fragments)[offset, offset + range length).
struct SliceWrite {
    std::vector<RepresentationWrite> fragments;
    std::size_t offset = 0;
    ByteList bytes;
    friend bool operator==(const SliceWrite&, const SliceWrite&) = default;
};

// Copies the bits at `bits` (positions relative to the start of the range,
// byte * bits_per_byte + bit) from `source_bytes`, the encoding of `value`
// at `source_address` under `structure_id`.
struct BitCopy {
    std::string type_name;
    std::string structure_id;
    Value value;
    Address source_address = 0;
    std::vector<unsigned> bits;
    ByteList source_bytes;
    friend bool operator==(const BitCopy&, const BitCopy&) = default;
};

using Payload = std::variant<UnknownFill, ConstantFill, RepresentationWrite, SliceWrite, BitCopy>;

struct MemoryModification {
    Address begin = 0;
    Address end = 0; // exclusive
    Payload payload;
    ClassId cls = 1;

    [[nodiscard]] std::size_t length() const { return end - begin; }
    friend bool operator==(const MemoryModification&, const MemoryModification&) = default;
};

struct ClassContext {
    std::string type_name;
    StructurePtr reader;
    Address read_address = 0;
    std::vector<StructureFamily> foreign_families;
    // Class-5 source addresses; empty means every address of the reader.
    std::vector<Address> copy_sources;
    // Maximum number of concatenated representations for class 4.
    std::size_t slice_bound = 2;
};

// Throws BoundExceeded when more than `bound` modifications would be produced.
std::vector<MemoryModification> gen_modifications(ClassId cls, const ClassContext& ctx, std::size_t bound = 100000);

std::set<ClassId> classify(const MemoryModification& mod, const ClassContext& ctx);

// Throws OutOfRange, LengthMismatch. Bit copies need a power-of-two radix.
Memory apply_modification(const Memory& m, const MemoryModification& mod);

// Re-encodes a bit copy's source with `s`. nullopt when `s` cannot encode the
// value at the source address. Other payloads are returned unchanged.
std::optional<MemoryModification> rebind_copy(const MemoryModification& mod, const SemanticStructure& s);

// Complete representations of every value of every member of the families
// whose type differs from `exclude_type`, as encoded for `placed_at`.
// Address-dependent members are skipped when `placed_at` is absent or not aligned.
std::vector<RepresentationWrite> foreign_representations(const std::vector<StructureFamily>& families,
                                                         const std::string& exclude_type,
                                                         std::optional<Address> placed_at);

// Every slice of length `length` of a concatenation of 1..max_fragments
// foreign representations that meets each fragment, for a slice placed at
// `slice_at`. Fragment placement follows from the slice offset.
std::vector<SliceWrite> foreign_slices(const std::vector<StructureFamily>& families, const std::string& exclude_type,
                                       Address slice_at, std::size_t length, std::size_t max_fragments,
                                       std::size_t bound = 100000);

const char* payload_kind(const Payload& p) noexcept;

nlohmann::json to_json(const MemoryModification& mod);
MemoryModification modification_from_json(const nlohmann::json& j);

} // namespace udts
