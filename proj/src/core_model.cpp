#include "udts/core_model.hpp"

#include <string>

#include "udts/error.hpp"

namespace udts {

ByteSpace::ByteSpace(const unsigned radix) : radix_(radix), bits_(0) {
    if (radix < 2 || radix > 256) {
        throw Error(Errc::invalid_argument, "radix must lie in [2, 256], got " + std::to_string(radix));
    }
    while ((1U << bits_) < radix) {
        ++bits_;
    }
}

std::size_t ByteSpace::list_count(const std::size_t length, const std::size_t limit) const {
    std::size_t count = 1;
    for (std::size_t i = 0; i < length; ++i) {
        if (count > limit / radix_) {
            throw Error(Errc::bound_exceeded, "radix^" + std::to_string(length) + " exceeds enumeration limit");
        }
        count *= radix_;
    }
    if (count > limit) {
        throw Error(Errc::bound_exceeded, "radix^" + std::to_string(length) + " exceeds enumeration limit");
    }
    return count;
}

ByteList ByteSpace::nth_list(std::size_t index, const std::size_t length) const {
    ByteList out(length, 0);
    for (std::size_t i = length; i-- > 0;) {
        out[i] = static_cast<Byte>(index % radix_);
        index /= radix_;
    }
    return out;
}

void ByteSpace::for_each_list(const std::size_t length, const std::function<bool(const ByteList&)>& fn) const {
    const std::size_t n = list_count(length);
    for (std::size_t i = 0; i < n; ++i) {
        if (!fn(nth_list(i, length))) {
            return;
        }
    }
}

std::size_t ByteSpace::to_number(const std::span<const Byte> bytes) const {
    std::size_t n = 0;
    for (std::size_t i = bytes.size(); i-- > 0;) {
        n = n * radix_ + bytes[i];
    }
    return n;
}

ByteList ByteSpace::from_number(std::size_t number, const std::size_t length) const {
    ByteList out(length, 0);
    for (std::size_t i = 0; i < length; ++i) {
        out[i] = static_cast<Byte>(number % radix_);
        number /= radix_;
    }
    return out;
}

std::vector<Cell> to_cells(const std::span<const Byte> bytes) {
    std::vector<Cell> out;
    out.reserve(bytes.size());
    for (const Byte b : bytes) {
        out.push_back(Cell::concrete(b));
    }
    return out;
}

Memory::Memory(ByteSpace space, const std::size_t size) : space_(space), cells_(size, Cell::unknown()) {
    if (size == 0) {
        throw Error(Errc::invalid_argument, "memory size must be positive");
    }
}

Memory::Memory(ByteSpace space, std::vector<Cell> cells) : space_(space), cells_(std::move(cells)) {
    if (cells_.empty()) {
        throw Error(Errc::invalid_argument, "memory size must be positive");
    }
    for (const Cell& c : cells_) {
        if (!c.is_unknown() && !space_.contains(c.value())) {
            throw Error(Errc::invalid_argument, "cell value " + std::to_string(c.value()) + " outside radix");
        }
    }
}

Memory Memory::with_free_bits(std::set<BitAddress> free_bits, const BitAddress reserve) const {
    if (!free_bits.contains(reserve)) {
        throw Error(Errc::invalid_argument, "reserve bit must be a free bit");
    }
    for (const BitAddress& b : free_bits) {
        if (b.bit_index >= space_.bits_per_byte()) {
            throw Error(Errc::out_of_range, "free bit index out of range");
        }
    }
    Memory m = *this;
    m.free_bits_ = std::move(free_bits);
    m.reserve_ = reserve;
    m.redirect_.clear();
    return m;
}

void Memory::check_range(const Address a, const std::size_t n) const {
    if (a > cells_.size() || n > cells_.size() - a) {
        throw Error(Errc::out_of_range,
                    "range [" + std::to_string(a) + ", " + std::to_string(a + n) + ") outside memory of size " +
                        std::to_string(cells_.size()));
    }
}

void Memory::check_bit(const BitAddress b) const {
    if (b.bit_index >= space_.bits_per_byte()) {
        throw Error(Errc::out_of_range, "bit index " + std::to_string(b.bit_index) + " out of range");
    }
}

Cell Memory::at(const Address a) const {
    check_range(a, 1);
    return cells_[a];
}

std::vector<Cell> Memory::read(const Address a, const std::size_t n) const {
    check_range(a, n);
    return {cells_.begin() + static_cast<std::ptrdiff_t>(a), cells_.begin() + static_cast<std::ptrdiff_t>(a + n)};
}

Memory Memory::write(const Address a, const std::span<const Cell> cells) const {
    check_range(a, cells.size());
    Memory m = *this;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (!cells[i].is_unknown() && !space_.contains(cells[i].value())) {
            throw Error(Errc::invalid_argument, "byte value outside radix");
        }
        m.cells_[a + i] = cells[i];
    }
    return m;
}

Memory Memory::write_bytes(const Address a, const std::span<const Byte> bytes) const {
    const auto cells = to_cells(bytes);
    return write(a, cells);
}

BitAddress Memory::physical(const BitAddress b) const {
    if (const auto it = redirect_.find(b); it != redirect_.end()) {
        return it->second;
    }
    return b;
}

std::pair<BitValue, Memory> Memory::bit_rw(const BitAddress requested, const std::optional<bool> value) const {
    check_bit(requested);
    const BitAddress b = physical(requested);
    if (const auto it = overlay_.find(b); it != overlay_.end()) {
        const BitValue old = it->second;
        if (!value) {
            return {old, *this};
        }
        Memory m = *this;
        m.overlay_[b] = *value;
        return {old, m};
    }
    if (b.byte_addr >= cells_.size()) {
        throw Error(Errc::out_of_range, "bit address outside memory and overlay");
    }
    const Cell& cell = cells_[b.byte_addr];
    const BitValue old = cell.is_unknown() ? BitValue{} : BitValue{((cell.value() >> b.bit_index) & 1U) != 0};
    if (!value) {
        return {old, *this};
    }
    Memory m = *this;
    if (cell.is_unknown()) {
        m.overlay_[b] = *value;
        return {old, m};
    }
    const unsigned mask = 1U << b.bit_index;
    const unsigned updated = *value ? (cell.value() | mask) : (cell.value() & ~mask);
    if (!space_.contains(updated)) {
        throw Error(Errc::out_of_range, "bit write leaves the byte space");
    }
    m.cells_[b.byte_addr] = Cell::concrete(static_cast<Byte>(updated));
    return {old, m};
}

std::pair<BitAddress, Memory> Memory::resolve_protected_bit(const BitAddress requested) const {
    check_bit(requested);
    if (free_bits_.empty() || !reserve_) {
        throw Error(Errc::no_free_bits, "no free bit addresses configured");
    }
    if (free_bits_.contains(requested)) {
        return {requested, *this};
    }
    const BitAddress r = *reserve_;
    if (const auto it = redirect_.find(requested); it != redirect_.end()) {
        return {it->second, *this};
    }
    if (redirect_.contains(r)) {
        throw Error(Errc::no_free_bits, "reserve bit already swapped with another bit");
    }
    Memory m = *this;
    m.redirect_[requested] = r;
    m.redirect_[r] = requested;
    return {r, m};
}

Memory Memory::with_overlay_bit(const BitAddress b, const bool value) const {
    check_bit(b);
    Memory m = *this;
    m.overlay_[physical(b)] = value;
    return m;
}

bool modified_at(const Memory& m, const Memory& m2, const Address a) {
    if (m.size() != m2.size()) {
        throw Error(Errc::invalid_argument, "memories differ in size");
    }
    const Cell x = m.at(a);
    const Cell y = m2.at(a);
    return x.is_unknown() || y.is_unknown() || x.value() != y.value();
}

namespace {

nlohmann::json bit_json(const BitAddress& b) { return nlohmann::json::array({b.byte_addr, b.bit_index}); }

BitAddress bit_from_json(const nlohmann::json& j) {
    return BitAddress{j.at(0).get<Address>(), j.at(1).get<unsigned>()};
}

} // namespace

nlohmann::json to_json(const Memory& m) {
    nlohmann::json cells = nlohmann::json::array();
    for (const Cell& c : m.cells()) {
        if (c.is_unknown()) {
            cells.push_back("U");
        } else {
            cells.push_back(static_cast<int>(c.value()));
        }
    }
    nlohmann::json overlay = nlohmann::json::array();
    for (const auto& [b, bit] : m.overlay()) {
        overlay.push_back(nlohmann::json::array({b.byte_addr, b.bit_index, bit ? 1 : 0}));
    }
    nlohmann::json free_bits = nlohmann::json::array();
    for (const BitAddress& b : m.free_bits()) {
        free_bits.push_back(bit_json(b));
    }
    nlohmann::json j{
        {"radix", m.space().radix()},
        {"size", m.size()},
        {"cells", cells},
        {"overlay", overlay},
        {"reserve", m.reserve_bit() ? bit_json(*m.reserve_bit()) : nlohmann::json(nullptr)},
        {"free_bits", free_bits},
    };
    if (!m.redirects().empty()) {
        nlohmann::json swaps = nlohmann::json::array();
        for (const auto& [from, to] : m.redirects()) {
            if (from < to) {
                swaps.push_back(nlohmann::json::array({bit_json(from), bit_json(to)}));
            }
        }
        j["swap"] = swaps;
    }
    return j;
}

Memory memory_from_json(const nlohmann::json& j) {
    const ByteSpace space(j.at("radix").get<unsigned>());
    std::vector<Cell> cells;
    for (const auto& c : j.at("cells")) {
        if (c.is_string()) {
            if (c.get<std::string>() != "U") {
                throw Error(Errc::parse_error, "cell must be an integer or \"U\"");
            }
            cells.push_back(Cell::unknown());
        } else {
            cells.push_back(Cell::concrete(static_cast<Byte>(c.get<unsigned>())));
        }
    }
    if (j.contains("size") && j.at("size").get<std::size_t>() != cells.size()) {
        throw Error(Errc::parse_error, "size does not match number of cells");
    }
    Memory m(space, std::move(cells));
    if (j.contains("free_bits") && !j.at("free_bits").empty()) {
        std::set<BitAddress> free_bits;
        for (const auto& b : j.at("free_bits")) {
            free_bits.insert(bit_from_json(b));
        }
        if (!j.contains("reserve") || j.at("reserve").is_null()) {
            throw Error(Errc::parse_error, "free_bits without reserve bit");
        }
        m = m.with_free_bits(std::move(free_bits), bit_from_json(j.at("reserve")));
    }
    if (j.contains("swap")) {
        for (const auto& pair : j.at("swap")) {
            const BitAddress from = bit_from_json(pair.at(0));
            const BitAddress to = bit_from_json(pair.at(1));
            const BitAddress requested = m.free_bits().contains(from) ? to : from;
            m = m.resolve_protected_bit(requested).second;
        }
    }
    if (j.contains("overlay")) {
        for (const auto& e : j.at("overlay")) {
            // Overlay keys are physical; install without indirection.
            const BitAddress b{e.at(0).get<Address>(), e.at(1).get<unsigned>()};
            const bool bit = e.at(2).get<int>() != 0;
            m = m.with_overlay_bit(m.physical(b), bit);
        }
    }
    return m;
}

} // namespace udts
