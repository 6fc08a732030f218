#pragma once

// Visibility, executable sufficient conditions for type sensitivity, and a
// brute-force oracle that checks the definition directly.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "udts/error_classes.hpp"
#include "udts/semantics.hpp"

namespace udts {

bool visible(Address a, const SemanticStructure& s);
bool visible_in_family(Address a, const StructureFamily& f);

struct Counterexample {
    Address address = 0;
    std::optional<Byte> byte;
    ByteList bytes;
    std::string structure_id;
    std::string detail;
};

struct LemmaReport {
    int lemma = 0;
    bool holds = true;
    std::optional<Counterexample> counterexample;
};

LemmaReport check_lemma1(const StructureFamily& f, Address addr_bound);
LemmaReport check_lemma2(const StructureFamily& f, Address addr_bound);

struct Lemma3Options {
    // Replace complete foreign representations by slices of concatenations
    // of up to `slice_bound` of them (the class-4 generalization).
    bool slices = false;
    std::size_t slice_bound = 2;
};

// Throws SizeMismatch when sizes differ and slices are off.
LemmaReport check_lemma3(const StructureFamily& ft, const StructureFamily& fu, Address addr_bound,
                         const Lemma3Options& options = {});

// For every s, a, source address, value, nonempty copied-bit set, prior
// target bytes and prior protected-bit state there must be an equivalent s'
// whose decoder rejects the target once the copied bits come from s'.
LemmaReport check_lemma4(const StructureFamily& f, Address addr_bound);

struct SensitivityWitness {
    std::size_t modification_index = 0;
    MemoryModification modification;
    // Value written at the read position before the modification, if any.
    std::optional<Value> history;
    StructurePtr structure;
    Address read_address = 0;
    ReadResult read;
};

struct SensitivityVerdict {
    bool sensitive = true;
    ClassId cls = 1;
    std::string type_name;
    std::size_t modifications = 0;
    std::size_t executions = 0;
    std::optional<SensitivityWitness> witness;
};

// The family whose type is ctx.type_name supplies the structure choices; the
// remaining families join ctx.foreign_families. A modification is a violation
// when, for some prior history, it changes a read window under some choice and
// no choice reading a window it touches gets an Undefined decode.
SensitivityVerdict type_sensitive_bruteforce(const std::vector<StructureFamily>& families, ClassId cls,
                                             const ClassContext& ctx, std::size_t bound = 100000);

nlohmann::json to_json(const Counterexample& c);
nlohmann::json to_json(const LemmaReport& r);
nlohmann::json to_json(const SensitivityVerdict& v);
const char* read_status_name(ReadStatus s) noexcept;

} // namespace udts
