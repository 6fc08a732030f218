#pragma once

// Semantic structures: a value set, an alignment set, a size and a pair of
// conversion functions between values and byte lists. Families of them stand
// for the admissible compiler encodings of one type.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "udts/core_model.hpp"

namespace udts {

struct Value {
    std::string tag;

    friend auto operator<=>(const Value&, const Value&) = default;
};

inline Value operator""_v(const char* s, std::size_t n) { return Value{std::string(s, n)}; }

enum class Variant { plain, address_dependent, external_state };

const char* variant_name(Variant v) noexcept;
Variant variant_from_name(const std::string& name);

// Extra representation bit at `target` for objects stored at `address`.
// The encoder emits 1 exactly for the values in `set_values`.
struct ProtectedBit {
    Address address = 0;
    BitAddress target;
    std::set<Value> set_values;

    friend bool operator==(const ProtectedBit&, const ProtectedBit&) = default;
};

struct Encoded {
    ByteList bytes;
    bool bit = false;
};

class SemanticStructure {
  public:
    // The address argument is ignored by plain structures.
    using EncodeFn = std::function<ByteList(const Value&, Address)>;
    using DecodeFn = std::function<std::optional<Value>(std::span<const Byte>, Address)>;

    SemanticStructure(std::string id, ByteSpace space, std::vector<Value> values, std::set<Address> addresses,
                      std::size_t size, Variant variant, EncodeFn encode, DecodeFn decode,
                      std::optional<ProtectedBit> protected_bit = {});

    [[nodiscard]] const std::string& id() const noexcept { return id_; }
    [[nodiscard]] const ByteSpace& space() const noexcept { return space_; }
    [[nodiscard]] const std::vector<Value>& values() const noexcept { return values_; }
    [[nodiscard]] const std::set<Address>& addresses() const noexcept { return addresses_; }
    [[nodiscard]] std::size_t size() const noexcept { return size_; }
    [[nodiscard]] Variant variant() const noexcept { return variant_; }
    [[nodiscard]] const std::optional<ProtectedBit>& protected_bit() const noexcept { return protected_bit_; }

    [[nodiscard]] bool has_value(const Value& v) const;
    [[nodiscard]] bool aligned(Address a) const { return addresses_.contains(a); }
    [[nodiscard]] bool uses_bit_at(Address a) const { return protected_bit_ && protected_bit_->address == a; }

    // Throws ValueNotInV, AddressNotAligned.
    [[nodiscard]] Encoded encode(const Value& v, std::optional<Address> a = {}) const;

    // nullopt is Undefined. A length different from size() is a caller bug
    // (LengthMismatch). An unaligned address is outside the decoder's domain
    // for address-dependent variants.
    [[nodiscard]] std::optional<Value> decode(std::span<const Byte> bytes, std::optional<Address> a = {},
                                              std::optional<bool> bit = {}) const;

    // Byte part of the decoder, ignoring any protected bit.
    [[nodiscard]] std::optional<Value> decode_bytes(std::span<const Byte> bytes, Address a) const;

    // Raw encoder output, without any checks. Used by the well-formedness check.
    [[nodiscard]] ByteList raw_encode(const Value& v, Address a) const { return encode_(v, a); }

  private:
    std::string id_;
    ByteSpace space_;
    std::vector<Value> values_;
    std::set<Address> addresses_;
    std::size_t size_;
    Variant variant_;
    EncodeFn encode_;
    DecodeFn decode_;
    std::optional<ProtectedBit> protected_bit_;
};

using StructurePtr = std::shared_ptr<const SemanticStructure>;

struct Violation {
    std::string rule; // size | values | length | byte-range | left-inverse | protected_bit
    std::string detail;
};

struct WellformedReport {
    std::vector<Violation> violations;
    [[nodiscard]] bool ok() const { return violations.empty(); }
};

WellformedReport check_wellformed(const SemanticStructure& s);

enum class ReadStatus { value, undefined, unknown_value };

struct ReadResult {
    ReadStatus status = ReadStatus::undefined;
    std::optional<Value> value;
};

// Decodes a window that may hold Unknown cells (and an unknown protected bit)
// by enumerating every completion. Undefined if any completion is outside the
// decoder's domain; otherwise the value, or unknown_value when completions
// disagree.
ReadResult decode_cells(const SemanticStructure& s, std::span<const Cell> window, Address a, BitValue bit,
                        std::size_t limit = std::size_t{1} << 20);

// Same values, addresses, size and variant.
bool equivalent(const SemanticStructure& s1, const SemanticStructure& s2);

class StructureFamily {
  public:
    // Empty `common_values` means the intersection of all members' values,
    // in the first member's order. Members are kept sorted by id.
    StructureFamily(std::string type_name, std::vector<StructurePtr> members, std::vector<Value> common_values = {});

    [[nodiscard]] const std::string& type_name() const noexcept { return type_name_; }
    [[nodiscard]] const std::vector<StructurePtr>& members() const noexcept { return members_; }
    [[nodiscard]] const std::vector<Value>& common_values() const noexcept { return common_values_; }
    [[nodiscard]] std::size_t size() const noexcept { return members_.size(); }
    [[nodiscard]] StructurePtr find(const std::string& id) const;
    [[nodiscard]] const ByteSpace& space() const { return members_.front()->space(); }

  private:
    std::string type_name_;
    std::vector<StructurePtr> members_;
    std::vector<Value> common_values_;
};

// One structure per type. At most one of them may define a protected bit.
class StructureChoice {
  public:
    StructureChoice() = default;
    explicit StructureChoice(std::map<std::string, StructurePtr> assignment);

    [[nodiscard]] const std::map<std::string, StructurePtr>& assignment() const noexcept { return assignment_; }
    [[nodiscard]] StructurePtr find(const std::string& type_name) const;
    [[nodiscard]] static bool admissible(const std::map<std::string, StructurePtr>& assignment);

  private:
    std::map<std::string, StructurePtr> assignment_;
};

// Extensional construction helpers. Plain tables use address 0 as key.
using EncodeTable = std::map<std::pair<Address, Value>, ByteList>;
using DecodeTable = std::map<std::pair<Address, ByteList>, Value>;

StructurePtr make_table_structure(std::string id, ByteSpace space, std::vector<Value> values,
                                  std::set<Address> addresses, std::size_t size, Variant variant, EncodeTable encode,
                                  DecodeTable decode, std::optional<ProtectedBit> protected_bit = {});

// Enumerates the byte decoder's domain (bit ignored). Keys use address 0 for plain structures.
DecodeTable decode_table(const SemanticStructure& s, std::size_t limit = std::size_t{1} << 20);

// Built-in constructors.
StructurePtr make_bool_total(ByteSpace space = ByteSpace(256), std::set<Address> addresses = {0});
StructurePtr make_bool_pair(Byte true_byte, Byte false_byte, ByteSpace space = ByteSpace(256),
                            std::set<Address> addresses = {0}, std::string id = {});

// Identity ("pure binary") encoding of all radix^size numbers; total decoder.
StructurePtr make_total_uint(ByteSpace space, std::size_t size = 1, std::set<Address> addresses = {0},
                             std::string id = "uint_binary");

StructureFamily permutation_closure(const StructurePtr& s, std::size_t universe_bound,
                                    const std::string& type_name = "bool");

// Members scramble `base` with an address-indexed additive offset on the byte
// list. `max_members` = 0 keeps every offset assignment.
StructureFamily make_address_family(const StructurePtr& base, std::uint64_t scramble_seed,
                                    std::size_t max_members = 0, const std::string& type_name = "bool");

StructureFamily make_protected_family(ByteSpace space, const std::vector<Value>& values,
                                      const std::set<Address>& addresses,
                                      const std::set<BitAddress>& bit_targets, const std::string& type_name = "T");

struct RandomFamilyOptions {
    std::size_t min_members = 1;
    std::size_t max_members = 4;
    std::size_t size = 1;
    std::set<Address> address_pool = {0};
    // Chance that an unused byte list joins a member's decoder domain.
    double extra_domain_probability = 0.2;
};

// Seed-deterministic plain family over `values`.
StructureFamily random_plain_family(ByteSpace space, const std::string& type_name, const std::vector<Value>& values,
                                    std::uint64_t seed, const RandomFamilyOptions& options = {});

// Serialization following the family description file layout.
nlohmann::json structure_to_json(const SemanticStructure& s);
nlohmann::json family_to_json(const StructureFamily& f);

// Parsed family file. Members are not validated; see to_family().
struct FamilyDescription {
    std::string type_name;
    std::vector<StructurePtr> members;
    std::vector<Value> values;
    [[nodiscard]] StructureFamily to_family() const;
};

FamilyDescription family_from_json(const nlohmann::json& j);
StructurePtr structure_from_json(const nlohmann::json& member, const nlohmann::json& defaults);

} // namespace udts
