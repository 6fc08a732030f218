#include "udts/semantics.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include "udts/error.hpp"

namespace udts {

namespace {

std::string bytes_str(const std::span<const Byte> bytes) {
    std::string out = "[";
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        if (i != 0) {
            out += ",";
        }
        out += std::to_string(bytes[i]);
    }
    return out + "]";
}

} // namespace

const char* variant_name(const Variant v) noexcept {
    switch (v) {
    case Variant::plain: return "plain";
    case Variant::address_dependent: return "address_dependent";
    case Variant::external_state: return "external_state";
    }
    return "plain";
}

Variant variant_from_name(const std::string& name) {
    if (name == "plain") {
        return Variant::plain;
    }
    if (name == "address_dependent") {
        return Variant::address_dependent;
    }
    if (name == "external_state") {
        return Variant::external_state;
    }
    throw Error(Errc::parse_error, "unknown variant '" + name + "'");
}

SemanticStructure::SemanticStructure(std::string id, ByteSpace space, std::vector<Value> values,
                                     std::set<Address> addresses, const std::size_t size, const Variant variant,
                                     EncodeFn encode, DecodeFn decode, std::optional<ProtectedBit> protected_bit)
    : id_(std::move(id)), space_(space), values_(std::move(values)), addresses_(std::move(addresses)), size_(size),
      variant_(variant), encode_(std::move(encode)), decode_(std::move(decode)),
      protected_bit_(std::move(protected_bit)) {}

bool SemanticStructure::has_value(const Value& v) const {
    return std::find(values_.begin(), values_.end(), v) != values_.end();
}

Encoded SemanticStructure::encode(const Value& v, const std::optional<Address> a) const {
    if (!has_value(v)) {
        throw Error(Errc::value_not_in_v, "value '" + v.tag + "' not in V of " + id_);
    }
    if (variant_ != Variant::plain && (!a || !aligned(*a))) {
        throw Error(Errc::address_not_aligned,
                    (a ? "address " + std::to_string(*a) : std::string("missing address")) + " for " + id_);
    }
    const Address addr = a.value_or(0);
    Encoded out{encode_(v, addr), false};
    if (uses_bit_at(addr)) {
        out.bit = protected_bit_->set_values.contains(v);
    }
    return out;
}

std::optional<Value> SemanticStructure::decode(const std::span<const Byte> bytes, const std::optional<Address> a,
                                               const std::optional<bool> bit) const {
    if (bytes.size() != size_) {
        throw Error(Errc::length_mismatch,
                    "decode of " + std::to_string(bytes.size()) + " bytes with " + id_ + " of size " +
                        std::to_string(size_));
    }
    if (variant_ != Variant::plain) {
        if (!a) {
            throw Error(Errc::invalid_argument, "address required to decode with " + id_);
        }
        if (!aligned(*a)) {
            return std::nullopt;
        }
    }
    const Address addr = a.value_or(0);
    auto v = decode_(bytes, addr);
    if (!v) {
        return std::nullopt;
    }
    if (uses_bit_at(addr)) {
        if (!bit) {
            throw Error(Errc::invalid_argument, "protected bit required to decode with " + id_);
        }
        if (*bit != protected_bit_->set_values.contains(*v)) {
            return std::nullopt;
        }
    }
    return v;
}

std::optional<Value> SemanticStructure::decode_bytes(const std::span<const Byte> bytes, const Address a) const {
    if (bytes.size() != size_) {
        throw Error(Errc::length_mismatch, "decode_bytes length mismatch for " + id_);
    }
    if (variant_ != Variant::plain && !aligned(a)) {
        return std::nullopt;
    }
    return decode_(bytes, a);
}

WellformedReport check_wellformed(const SemanticStructure& s) {
    WellformedReport report;
    auto violate = [&](std::string rule, std::string detail) {
        report.violations.push_back(Violation{std::move(rule), std::move(detail)});
    };
    if (s.size() < 1) {
        violate("size", "size must be a positive integer");
    }
    if (s.values().empty()) {
        violate("values", "value set is empty");
    }
    if (const auto& pb = s.protected_bit()) {
        if (s.variant() != Variant::external_state) {
            violate("protected_bit", "only external-state structures may define a protected bit");
        }
        if (!s.aligned(pb->address)) {
            violate("protected_bit", "protected address " + std::to_string(pb->address) + " not in A");
        }
        if (pb->target.bit_index >= s.space().bits_per_byte()) {
            violate("protected_bit", "bit index outside byte");
        }
    }
    std::vector<Address> addrs;
    if (s.variant() == Variant::plain) {
        addrs.push_back(0);
    } else {
        addrs.assign(s.addresses().begin(), s.addresses().end());
    }
    for (const Address a : addrs) {
        for (const Value& v : s.values()) {
            const std::string where =
                "'" + v.tag + "'" + (s.variant() == Variant::plain ? "" : " at " + std::to_string(a));
            const ByteList bytes = s.raw_encode(v, a);
            if (bytes.size() != s.size()) {
                violate("length", "encoding of " + where + " has length " + std::to_string(bytes.size()));
                continue;
            }
            if (std::any_of(bytes.begin(), bytes.end(), [&](Byte b) { return !s.space().contains(b); })) {
                violate("byte-range", "encoding of " + where + " leaves the byte space");
                continue;
            }
            const bool bit = s.uses_bit_at(a) && s.protected_bit()->set_values.contains(v);
            const auto back = s.decode(bytes, a, bit);
            if (!back || *back != v) {
                violate("left-inverse", "decode(encode(" + where + ")) = " + (back ? "'" + back->tag + "'" : "Undefined"));
            }
        }
    }
    return report;
}

ReadResult decode_cells(const SemanticStructure& s, const std::span<const Cell> window, const Address a,
                        const BitValue bit, const std::size_t limit) {
    if (window.size() != s.size()) {
        throw Error(Errc::length_mismatch, "window length differs from structure size");
    }
    std::vector<std::size_t> unknown;
    ByteList bytes(window.size(), 0);
    for (std::size_t i = 0; i < window.size(); ++i) {
        if (window[i].is_unknown()) {
            unknown.push_back(i);
        } else {
            bytes[i] = window[i].value();
        }
    }
    const bool bit_unknown = s.uses_bit_at(a) && !bit;
    const std::size_t byte_completions = s.space().list_count(unknown.size(), limit);
    const std::size_t bit_completions = bit_unknown ? 2 : 1;
    if (byte_completions > limit / bit_completions) {
        throw Error(Errc::bound_exceeded, "too many completions of unknown cells");
    }
    const std::optional<Address> addr = s.variant() == Variant::plain ? std::optional<Address>{} : a;
    std::optional<Value> first;
    bool disagree = false;
    for (std::size_t i = 0; i < byte_completions; ++i) {
        const ByteList fill = s.space().nth_list(i, unknown.size());
        for (std::size_t k = 0; k < unknown.size(); ++k) {
            bytes[unknown[k]] = fill[k];
        }
        for (std::size_t b = 0; b < bit_completions; ++b) {
            const std::optional<bool> bv = bit_unknown ? std::optional<bool>(b != 0) : (bit ? *bit : false);
            const auto v = s.decode(bytes, addr, bv);
            if (!v) {
                return ReadResult{ReadStatus::undefined, std::nullopt};
            }
            if (!first) {
                first = v;
            } else if (*first != *v) {
                disagree = true;
            }
        }
    }
    if (disagree) {
        return ReadResult{ReadStatus::unknown_value, std::nullopt};
    }
    return ReadResult{ReadStatus::value, first};
}

bool equivalent(const SemanticStructure& s1, const SemanticStructure& s2) {
    const std::set<Value> v1(s1.values().begin(), s1.values().end());
    const std::set<Value> v2(s2.values().begin(), s2.values().end());
    return v1 == v2 && s1.addresses() == s2.addresses() && s1.size() == s2.size() && s1.variant() == s2.variant();
}

StructureFamily::StructureFamily(std::string type_name, std::vector<StructurePtr> members,
                                 std::vector<Value> common_values)
    : type_name_(std::move(type_name)), members_(std::move(members)), common_values_(std::move(common_values)) {
    if (members_.empty()) {
        throw Error(Errc::empty_input, "family '" + type_name_ + "' has no members");
    }
    std::sort(members_.begin(), members_.end(), [](const StructurePtr& a, const StructurePtr& b) { return a->id() < b->id(); });
    for (std::size_t i = 0; i < members_.size(); ++i) {
        if (i > 0 && members_[i]->id() == members_[i - 1]->id()) {
            throw Error(Errc::invalid_argument, "duplicate member id '" + members_[i]->id() + "'");
        }
        if (!(members_[i]->space() == members_.front()->space())) {
            throw Error(Errc::invalid_argument, "members of one family must share the byte space");
        }
        const auto report = check_wellformed(*members_[i]);
        if (!report.ok()) {
            throw Error(Errc::invalid_argument, "member '" + members_[i]->id() + "' is ill-formed: " +
                                                    report.violations.front().rule + ": " +
                                                    report.violations.front().detail);
        }
    }
    if (common_values_.empty()) {
        for (const Value& v : members_.front()->values()) {
            if (std::all_of(members_.begin(), members_.end(), [&](const StructurePtr& m) { return m->has_value(v); })) {
                common_values_.push_back(v);
            }
        }
    } else {
        for (const Value& v : common_values_) {
            for (const StructurePtr& m : members_) {
                if (!m->has_value(v)) {
                    throw Error(Errc::invalid_argument,
                                "common value '" + v.tag + "' not representable by '" + m->id() + "'");
                }
            }
        }
    }
}

StructurePtr StructureFamily::find(const std::string& id) const {
    for (const StructurePtr& m : members_) {
        if (m->id() == id) {
            return m;
        }
    }
    return nullptr;
}

StructureChoice::StructureChoice(std::map<std::string, StructurePtr> assignment) : assignment_(std::move(assignment)) {
    if (!admissible(assignment_)) {
        throw Error(Errc::invalid_argument, "at most one chosen structure may define a protected bit");
    }
}

StructurePtr StructureChoice::find(const std::string& type_name) const {
    const auto it = assignment_.find(type_name);
    return it == assignment_.end() ? nullptr : it->second;
}

bool StructureChoice::admissible(const std::map<std::string, StructurePtr>& assignment) {
    std::size_t with_bit = 0;
    for (const auto& [type, s] : assignment) {
        if (s && s->protected_bit()) {
            ++with_bit;
        }
    }
    return with_bit <= 1;
}

StructurePtr make_table_structure(std::string id, ByteSpace space, std::vector<Value> values,
                                  std::set<Address> addresses, const std::size_t size, const Variant variant,
                                  EncodeTable encode, DecodeTable decode, std::optional<ProtectedBit> protected_bit) {
    const bool plain = variant == Variant::plain;
    auto enc = [table = std::move(encode), plain](const Value& v, const Address a) -> ByteList {
        const auto it = table.find({plain ? 0 : a, v});
        return it == table.end() ? ByteList{} : it->second;
    };
    auto dec = [table = std::move(decode), plain](const std::span<const Byte> bytes,
                                                  const Address a) -> std::optional<Value> {
        const auto it = table.find({plain ? 0 : a, ByteList(bytes.begin(), bytes.end())});
        return it == table.end() ? std::nullopt : std::optional<Value>(it->second);
    };
    return std::make_shared<const SemanticStructure>(std::move(id), space, std::move(values), std::move(addresses),
                                                     size, variant, std::move(enc), std::move(dec),
                                                     std::move(protected_bit));
}

DecodeTable decode_table(const SemanticStructure& s, const std::size_t limit) {
    DecodeTable table;
    std::vector<Address> addrs;
    if (s.variant() == Variant::plain) {
        addrs.push_back(0);
    } else {
        addrs.assign(s.addresses().begin(), s.addresses().end());
    }
    const std::size_t n = s.space().list_count(s.size(), limit);
    for (const Address a : addrs) {
        for (std::size_t i = 0; i < n; ++i) {
            ByteList bl = s.space().nth_list(i, s.size());
            if (auto v = s.decode_bytes(bl, a)) {
                table.emplace(std::make_pair(a, std::move(bl)), *v);
            }
        }
    }
    return table;
}

StructurePtr make_bool_total(ByteSpace space, std::set<Address> addresses) {
    auto enc = [](const Value& v, Address) -> ByteList { return {static_cast<Byte>(v.tag == "true" ? 1 : 0)}; };
    auto dec = [](const std::span<const Byte> bytes, Address) -> std::optional<Value> {
        return Value{bytes[0] == 0 ? "false" : "true"};
    };
    return std::make_shared<const SemanticStructure>("bool_gcc", space, std::vector<Value>{"false"_v, "true"_v},
                                                     std::move(addresses), 1, Variant::plain, enc, dec);
}

StructurePtr make_bool_pair(const Byte true_byte, const Byte false_byte, ByteSpace space, std::set<Address> addresses,
                            std::string id) {
    if (true_byte == false_byte) {
        throw Error(Errc::equal_pair, "true and false need distinct representations");
    }
    if (!space.contains(true_byte) || !space.contains(false_byte)) {
        throw Error(Errc::invalid_argument, "byte outside radix");
    }
    if (id.empty()) {
        id = "bool_t" + std::to_string(true_byte) + "_f" + std::to_string(false_byte);
    }
    auto enc = [=](const Value& v, Address) -> ByteList { return {v.tag == "true" ? true_byte : false_byte}; };
    auto dec = [=](const std::span<const Byte> bytes, Address) -> std::optional<Value> {
        if (bytes[0] == true_byte) {
            return "true"_v;
        }
        if (bytes[0] == false_byte) {
            return "false"_v;
        }
        return std::nullopt;
    };
    return std::make_shared<const SemanticStructure>(std::move(id), space, std::vector<Value>{"false"_v, "true"_v},
                                                     std::move(addresses), 1, Variant::plain, enc, dec);
}

StructurePtr make_total_uint(ByteSpace space, const std::size_t size, std::set<Address> addresses, std::string id) {
    const std::size_t n = space.list_count(size);
    std::vector<Value> values;
    values.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        values.push_back(Value{std::to_string(i)});
    }
    auto enc = [space, size](const Value& v, Address) -> ByteList {
        return space.from_number(std::stoull(v.tag), size);
    };
    auto dec = [space](const std::span<const Byte> bytes, Address) -> std::optional<Value> {
        return Value{std::to_string(space.to_number(bytes))};
    };
    return std::make_shared<const SemanticStructure>(std::move(id), space, std::move(values), std::move(addresses),
                                                     size, Variant::plain, enc, dec);
}

StructureFamily permutation_closure(const StructurePtr& s, const std::size_t universe_bound,
                                    const std::string& type_name) {
    if (s->variant() != Variant::plain) {
        throw Error(Errc::invalid_argument, "permutation closure needs a plain structure");
    }
    if (const auto report = check_wellformed(*s); !report.ok()) {
        throw Error(Errc::invalid_argument, "permutation closure of an ill-formed structure");
    }
    const std::size_t n = s->space().list_count(s->size(), std::max<std::size_t>(universe_bound, 1));
    if (n > universe_bound) {
        throw Error(Errc::bound_exceeded, "radix^size exceeds universe bound");
    }
    std::vector<ByteList> undefined;
    std::vector<ByteList> defined;
    for (std::size_t i = 0; i < n; ++i) {
        ByteList bl = s->space().nth_list(i, s->size());
        (s->decode_bytes(bl, 0) ? defined : undefined).push_back(std::move(bl));
    }
    if (undefined.empty()) {
        throw Error(Errc::no_undefined_rep, "decoder of '" + s->id() + "' is total");
    }
    std::vector<StructurePtr> members{s};
    // Swapping two undefined lists reproduces s itself, so only defined
    // partners yield new members.
    for (const ByteList& bl : undefined) {
        for (const ByteList& other : defined) {
            auto swap = [bl, other](const std::span<const Byte> x) -> ByteList {
                if (std::equal(x.begin(), x.end(), bl.begin(), bl.end())) {
                    return other;
                }
                if (std::equal(x.begin(), x.end(), other.begin(), other.end())) {
                    return bl;
                }
                return ByteList(x.begin(), x.end());
            };
            auto enc = [s, swap](const Value& v, const Address a) { return swap(s->raw_encode(v, a)); };
            auto dec = [s, swap](const std::span<const Byte> x, const Address a) {
                const ByteList y = swap(x);
                return s->decode_bytes(y, a);
            };
            members.push_back(std::make_shared<const SemanticStructure>(
                s->id() + "~swap" + bytes_str(bl) + bytes_str(other), s->space(), s->values(), s->addresses(),
                s->size(), Variant::plain, enc, dec));
        }
    }
    return StructureFamily(type_name, std::move(members));
}

StructureFamily make_address_family(const StructurePtr& base, const std::uint64_t scramble_seed,
                                    const std::size_t max_members, const std::string& type_name) {
    if (base->variant() != Variant::plain) {
        throw Error(Errc::invalid_argument, "address family needs a plain base structure");
    }
    if (const auto report = check_wellformed(*base); !report.ok()) {
        throw Error(Errc::invalid_argument, "address family of an ill-formed structure");
    }
    if (base->addresses().empty()) {
        throw Error(Errc::empty_input, "base structure has no addresses");
    }
    const std::vector<Address> addrs(base->addresses().begin(), base->addresses().end());
    const std::size_t universe = base->space().list_count(base->size());
    std::mt19937_64 rng(scramble_seed);

    // One offset per address.
    std::vector<std::vector<std::size_t>> assignments;
    std::size_t total = 1;
    bool enumerable = true;
    for (std::size_t i = 0; i < addrs.size(); ++i) {
        if (total > 4096 / universe) {
            enumerable = false;
            break;
        }
        total *= universe;
    }
    auto distinct = [&](const std::vector<std::size_t>& offs) {
        return addrs.size() == 1 || std::any_of(offs.begin(), offs.end(), [&](std::size_t k) { return k != offs.front(); });
    };
    if (enumerable) {
        for (std::size_t idx = 0; idx < total; ++idx) {
            std::vector<std::size_t> offs(addrs.size());
            std::size_t rest = idx;
            for (std::size_t i = addrs.size(); i-- > 0;) {
                offs[i] = rest % universe;
                rest /= universe;
            }
            if (distinct(offs)) {
                assignments.push_back(std::move(offs));
            }
        }
        std::shuffle(assignments.begin(), assignments.end(), rng);
    } else {
        const std::size_t want = max_members == 0 ? 64 : max_members;
        std::uniform_int_distribution<std::size_t> pick(0, universe - 1);
        std::set<std::vector<std::size_t>> seen;
        while (assignments.size() < want) {
            std::vector<std::size_t> offs(addrs.size());
            for (auto& k : offs) {
                k = pick(rng);
            }
            if (distinct(offs) && seen.insert(offs).second) {
                assignments.push_back(std::move(offs));
            }
        }
    }
    if (max_members != 0 && assignments.size() > max_members) {
        assignments.resize(max_members);
    }

    std::vector<StructurePtr> members;
    const ByteSpace space = base->space();
    const std::size_t size = base->size();
    for (const auto& offs : assignments) {
        std::map<Address, std::size_t> offset;
        std::string id = base->id() + "@{";
        for (std::size_t i = 0; i < addrs.size(); ++i) {
            offset[addrs[i]] = offs[i];
            id += (i ? "," : "") + std::to_string(addrs[i]) + ":+" + std::to_string(offs[i]);
        }
        id += "}";
        auto enc = [base, offset, space, size, universe](const Value& v, const Address a) -> ByteList {
            const auto it = offset.find(a);
            if (it == offset.end()) {
                return {};
            }
            return space.from_number((space.to_number(base->raw_encode(v, 0)) + it->second) % universe, size);
        };
        auto dec = [base, offset, space, size, universe](const std::span<const Byte> bytes,
                                                         const Address a) -> std::optional<Value> {
            const auto it = offset.find(a);
            if (it == offset.end()) {
                return std::nullopt;
            }
            const ByteList y = space.from_number((space.to_number(bytes) + universe - it->second) % universe, size);
            return base->decode_bytes(y, 0);
        };
        members.push_back(std::make_shared<const SemanticStructure>(id, space, base->values(), base->addresses(), size,
                                                                    Variant::address_dependent, enc, dec));
    }
    return StructureFamily(type_name, std::move(members));
}

StructureFamily make_protected_family(ByteSpace space, const std::vector<Value>& values,
                                      const std::set<Address>& addresses, const std::set<BitAddress>& bit_targets,
                                      const std::string& type_name) {
    if (values.empty() || addresses.empty() || bit_targets.empty()) {
        throw Error(Errc::empty_input, "protected family needs values, addresses and bit targets");
    }
    std::size_t size = 1;
    while (space.list_count(size) < values.size()) {
        ++size;
    }
    // Shared byte encoding: value index as a base-radix number.
    std::map<Value, std::size_t> index;
    for (std::size_t i = 0; i < values.size(); ++i) {
        index.emplace(values[i], i);
    }
    auto enc = [index, space, size](const Value& v, Address) -> ByteList {
        const auto it = index.find(v);
        return it == index.end() ? ByteList{} : space.from_number(it->second, size);
    };
    auto dec = [values, space](const std::span<const Byte> bytes, Address) -> std::optional<Value> {
        const std::size_t n = space.to_number(bytes);
        return n < values.size() ? std::optional<Value>(values[n]) : std::nullopt;
    };
    std::vector<StructurePtr> members;
    for (const BitAddress& b : bit_targets) {
        for (const Address a : addresses) {
            for (const Value& v : values) {
                const std::string id = "prot@" + std::to_string(a) + ":" + v.tag + ":b" + std::to_string(b.byte_addr) +
                                       "." + std::to_string(b.bit_index);
                members.push_back(std::make_shared<const SemanticStructure>(
                    id, space, values, addresses, size, Variant::external_state, enc, dec,
                    ProtectedBit{a, b, {v}}));
            }
        }
    }
    return StructureFamily(type_name, std::move(members), values);
}

StructureFamily random_plain_family(ByteSpace space, const std::string& type_name, const std::vector<Value>& values,
                                    const std::uint64_t seed, const RandomFamilyOptions& options) {
    if (values.empty() || options.address_pool.empty() || options.min_members == 0 ||
        options.max_members < options.min_members) {
        throw Error(Errc::empty_input, "random family needs values, addresses and a member range");
    }
    const std::size_t universe = space.list_count(options.size);
    if (universe < values.size()) {
        throw Error(Errc::invalid_argument, "byte space too small for the value set");
    }
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> count_dist(options.min_members, options.max_members);
    std::bernoulli_distribution extra(options.extra_domain_probability);
    std::uniform_int_distribution<std::size_t> value_dist(0, values.size() - 1);
    const std::vector<Address> pool(options.address_pool.begin(), options.address_pool.end());

    const std::size_t n = count_dist(rng);
    std::vector<StructurePtr> members;
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<std::size_t> lists(universe);
        for (std::size_t i = 0; i < universe; ++i) {
            lists[i] = i;
        }
        std::shuffle(lists.begin(), lists.end(), rng);
        EncodeTable encode;
        DecodeTable decode;
        for (std::size_t i = 0; i < values.size(); ++i) {
            const ByteList bl = space.nth_list(lists[i], options.size);
            encode[{0, values[i]}] = bl;
            decode[{0, bl}] = values[i];
        }
        for (std::size_t i = values.size(); i < universe; ++i) {
            if (extra(rng)) {
                decode[{0, space.nth_list(lists[i], options.size)}] = values[value_dist(rng)];
            }
        }
        std::set<Address> addrs;
        for (const Address a : pool) {
            if (std::bernoulli_distribution(0.5)(rng)) {
                addrs.insert(a);
            }
        }
        if (addrs.empty()) {
            addrs.insert(pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)]);
        }
        members.push_back(make_table_structure(type_name + "_r" + std::to_string(seed) + "_" + std::to_string(j), space,
                                               values, std::move(addrs), options.size, Variant::plain,
                                               std::move(encode), std::move(decode)));
    }
    return StructureFamily(type_name, std::move(members), values);
}

// ---------------------------------------------------------------------------
// JSON

namespace {

nlohmann::json values_json(const std::vector<Value>& values) {
    nlohmann::json out = nlohmann::json::array();
    for (const Value& v : values) {
        out.push_back(v.tag);
    }
    return out;
}

std::vector<Value> values_from_json(const nlohmann::json& j) {
    std::vector<Value> out;
    for (const auto& v : j) {
        out.push_back(Value{v.get<std::string>()});
    }
    return out;
}

ByteList bytes_from_json(const nlohmann::json& j) {
    ByteList out;
    for (const auto& b : j) {
        const auto x = b.get<unsigned>();
        if (x > 255) {
            throw Error(Errc::parse_error, "byte value " + std::to_string(x) + " out of range");
        }
        out.push_back(static_cast<Byte>(x));
    }
    return out;
}

const nlohmann::json& field(const nlohmann::json& member, const nlohmann::json& defaults, const char* key) {
    if (member.contains(key)) {
        return member.at(key);
    }
    if (defaults.contains(key)) {
        return defaults.at(key);
    }
    throw Error(Errc::parse_error, std::string("missing field '") + key + "'");
}

} // namespace

nlohmann::json structure_to_json(const SemanticStructure& s) {
    nlohmann::json j{
        {"id", s.id()},
        {"variant", variant_name(s.variant())},
        {"radix", s.space().radix()},
        {"size", s.size()},
        {"values", values_json(s.values())},
        {"addresses", std::vector<Address>(s.addresses().begin(), s.addresses().end())},
    };
    const bool plain = s.variant() == Variant::plain;
    std::vector<Address> addrs;
    if (plain) {
        addrs.push_back(0);
    } else {
        addrs.assign(s.addresses().begin(), s.addresses().end());
    }
    nlohmann::json encode = nlohmann::json::object();
    for (const Address a : addrs) {
        for (const Value& v : s.values()) {
            const std::string key = plain ? v.tag : std::to_string(a) + ":" + v.tag;
            encode[key] = s.raw_encode(v, a);
        }
    }
    j["encode"] = encode;
    nlohmann::json domain = nlohmann::json::array();
    for (const auto& [key, v] : decode_table(s)) {
        nlohmann::json e{{"bytes", key.second}, {"value", v.tag}};
        if (!plain) {
            e["addr"] = key.first;
        }
        domain.push_back(e);
    }
    j["decode_domain"] = domain;
    if (const auto& pb = s.protected_bit()) {
        j["protected_bit"] = {
            {"addr", pb->address},
            {"bit", {pb->target.byte_addr, pb->target.bit_index}},
            {"set_values", values_json(std::vector<Value>(pb->set_values.begin(), pb->set_values.end()))},
        };
    }
    return j;
}

nlohmann::json family_to_json(const StructureFamily& f) {
    const SemanticStructure& first = *f.members().front();
    nlohmann::json members = nlohmann::json::array();
    for (const StructurePtr& m : f.members()) {
        members.push_back(structure_to_json(*m));
    }
    return nlohmann::json{
        {"type", f.type_name()},
        {"radix", first.space().radix()},
        {"size", first.size()},
        {"values", values_json(f.common_values())},
        {"addresses", std::vector<Address>(first.addresses().begin(), first.addresses().end())},
        {"variant", variant_name(first.variant())},
        {"members", members},
    };
}

StructurePtr structure_from_json(const nlohmann::json& member, const nlohmann::json& defaults) {
    const std::string id = member.at("id").get<std::string>();
    const ByteSpace space(field(member, defaults, "radix").get<unsigned>());
    const auto size = field(member, defaults, "size").get<std::size_t>();
    const auto values = values_from_json(field(member, defaults, "values"));
    const auto addr_list = field(member, defaults, "addresses").get<std::vector<Address>>();
    const std::set<Address> addresses(addr_list.begin(), addr_list.end());
    const Variant variant = variant_from_name(field(member, defaults, "variant").get<std::string>());
    const bool plain = variant == Variant::plain;

    EncodeTable encode;
    for (const auto& [key, bytes] : member.at("encode").items()) {
        Address a = 0;
        std::string tag = key;
        if (!plain) {
            const auto colon = key.find(':');
            if (colon == std::string::npos) {
                throw Error(Errc::parse_error, "encode key '" + key + "' must be \"addr:value\"");
            }
            a = std::stoull(key.substr(0, colon));
            tag = key.substr(colon + 1);
        }
        encode[{a, Value{tag}}] = bytes_from_json(bytes);
    }
    DecodeTable decode;
    if (member.contains("decode_domain")) {
        for (const auto& e : member.at("decode_domain")) {
            const Address a = plain ? 0 : e.at("addr").get<Address>();
            decode[{a, bytes_from_json(e.at("bytes"))}] = Value{e.at("value").get<std::string>()};
        }
    } else {
        for (const auto& [key, bytes] : encode) {
            decode[{key.first, bytes}] = key.second;
        }
    }
    std::optional<ProtectedBit> pb;
    if (member.contains("protected_bit")) {
        const auto& p = member.at("protected_bit");
        ProtectedBit bit;
        bit.address = p.at("addr").get<Address>();
        bit.target = BitAddress{p.at("bit").at(0).get<Address>(), p.at("bit").at(1).get<unsigned>()};
        if (p.contains("set_values")) {
            for (const Value& v : values_from_json(p.at("set_values"))) {
                bit.set_values.insert(v);
            }
        }
        pb = bit;
    }
    return make_table_structure(id, space, values, addresses, size, variant, std::move(encode), std::move(decode),
                                std::move(pb));
}

FamilyDescription family_from_json(const nlohmann::json& j) {
    FamilyDescription out;
    try {
        out.type_name = j.at("type").get<std::string>();
        if (j.contains("values")) {
            out.values = values_from_json(j.at("values"));
        }
        for (const auto& m : j.at("members")) {
            out.members.push_back(structure_from_json(m, j));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::parse_error, e.what());
    }
    return out;
}

StructureFamily FamilyDescription::to_family() const { return StructureFamily(type_name, members, values); }

} // namespace udts
