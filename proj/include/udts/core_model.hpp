#pragma once

// Byte-granular memory with unknown cells, a protected-bit overlay and the
// reserve-bit indirection used by external-state encodings.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

namespace udts {

using Byte = std::uint8_t;
using Address = std::size_t;
using ByteList = std::vector<Byte>;

class ByteSpace {
  public:
    explicit ByteSpace(unsigned radix = 256);

    [[nodiscard]] unsigned radix() const noexcept { return radix_; }
    [[nodiscard]] unsigned bits_per_byte() const noexcept { return bits_; }
    [[nodiscard]] bool power_of_two() const noexcept { return (radix_ & (radix_ - 1)) == 0; }
    [[nodiscard]] bool contains(unsigned value) const noexcept { return value < radix_; }

    // radix^length; throws BoundExceeded past `limit`.
    [[nodiscard]] std::size_t list_count(std::size_t length, std::size_t limit = std::size_t{1} << 24) const;

    // Byte lists of `length` in lexicographic order.
    [[nodiscard]] ByteList nth_list(std::size_t index, std::size_t length) const;
    void for_each_list(std::size_t length, const std::function<bool(const ByteList&)>& fn) const;

    // Byte list read as a little-endian base-radix number, and back.
    [[nodiscard]] std::size_t to_number(std::span<const Byte> bytes) const;
    [[nodiscard]] ByteList from_number(std::size_t number, std::size_t length) const;

    friend bool operator==(const ByteSpace&, const ByteSpace&) = default;

  private:
    unsigned radix_;
    unsigned bits_;
};

// Concrete byte or Unknown. Unknown ranges over all of [0, radix).
class Cell {
  public:
    Cell() = default;
    static Cell unknown() { return Cell{}; }
    static Cell concrete(Byte b) {
        Cell c;
        c.value_ = b;
        return c;
    }

    [[nodiscard]] bool is_unknown() const noexcept { return !value_; }
    [[nodiscard]] Byte value() const { return *value_; }
    [[nodiscard]] const std::optional<Byte>& get() const noexcept { return value_; }

    friend bool operator==(const Cell&, const Cell&) = default;

  private:
    std::optional<Byte> value_;
};

std::vector<Cell> to_cells(std::span<const Byte> bytes);

struct BitAddress {
    Address byte_addr = 0;
    unsigned bit_index = 0;

    friend auto operator<=>(const BitAddress&, const BitAddress&) = default;
};

// nullopt is an unknown bit.
using BitValue = std::optional<bool>;

class Memory {
  public:
    Memory(ByteSpace space, std::size_t size);
    Memory(ByteSpace space, std::vector<Cell> cells);

    // AF and r. `reserve` must belong to `free_bits`.
    [[nodiscard]] Memory with_free_bits(std::set<BitAddress> free_bits, BitAddress reserve) const;

    [[nodiscard]] const ByteSpace& space() const noexcept { return space_; }
    [[nodiscard]] std::size_t size() const noexcept { return cells_.size(); }
    [[nodiscard]] const std::vector<Cell>& cells() const noexcept { return cells_; }
    [[nodiscard]] const std::map<BitAddress, bool>& overlay() const noexcept { return overlay_; }
    [[nodiscard]] const std::set<BitAddress>& free_bits() const noexcept { return free_bits_; }
    [[nodiscard]] const std::optional<BitAddress>& reserve_bit() const noexcept { return reserve_; }
    [[nodiscard]] const std::map<BitAddress, BitAddress>& redirects() const noexcept { return redirect_; }

    [[nodiscard]] Cell at(Address a) const;
    [[nodiscard]] std::vector<Cell> read(Address a, std::size_t n) const;
    [[nodiscard]] Memory write(Address a, std::span<const Cell> cells) const;
    [[nodiscard]] Memory write_bytes(Address a, std::span<const Byte> bytes) const;

    // Reads and optionally writes one bit. Overlaid bits take precedence over
    // the underlying cell; writing a bit of an Unknown cell overlays it.
    [[nodiscard]] std::pair<BitValue, Memory> bit_rw(BitAddress b, std::optional<bool> value = {}) const;
    [[nodiscard]] BitValue read_bit(BitAddress b) const { return bit_rw(b).first; }

    // Returns where `requested` lives physically. Outside AF the reserve bit
    // is used and an indirection is installed so that clients keep using
    // `requested`.
    [[nodiscard]] std::pair<BitAddress, Memory> resolve_protected_bit(BitAddress requested) const;

    // Protected-bit storage: always in the overlay, so byte-level writes never
    // touch it.
    [[nodiscard]] Memory with_overlay_bit(BitAddress b, bool value) const;

    [[nodiscard]] BitAddress physical(BitAddress b) const;

    friend bool operator==(const Memory&, const Memory&) = default;

  private:
    void check_range(Address a, std::size_t n) const;
    void check_bit(BitAddress b) const;

    ByteSpace space_;
    std::vector<Cell> cells_;
    std::map<BitAddress, bool> overlay_;
    std::set<BitAddress> free_bits_;
    std::optional<BitAddress> reserve_;
    std::map<BitAddress, BitAddress> redirect_;
};

// True unless both cells at `a` are Concrete and equal.
bool modified_at(const Memory& m, const Memory& m2, Address a);

nlohmann::json to_json(const Memory& m);
Memory memory_from_json(const nlohmann::json& j);

} // namespace udts
