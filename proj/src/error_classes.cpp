#include "udts/error_classes.hpp"

#include <algorithm>
#include <functional>

#include "udts/error.hpp"

namespace udts {

namespace {

void check_context(const ClassContext& ctx) {
    if (!ctx.reader) {
        throw Error(Errc::invalid_argument, "class context has no reader structure");
    }
    if (!ctx.reader->aligned(ctx.read_address)) {
        throw Error(Errc::address_not_aligned,
                    "read address " + std::to_string(ctx.read_address) + " not in A of " + ctx.reader->id());
    }
}

class Collector {
  public:
    explicit Collector(const std::size_t bound) : bound_(bound) {}

    void push(MemoryModification mod) {
        if (out_.size() >= bound_) {
            throw Error(Errc::bound_exceeded, "more than " + std::to_string(bound_) + " modifications");
        }
        out_.push_back(std::move(mod));
    }

    std::vector<MemoryModification> take() { return std::move(out_); }

  private:
    std::size_t bound_;
    std::vector<MemoryModification> out_;
};

ByteList encode_at(const SemanticStructure& s, const Value& v, const Address a) {
    return s.variant() == Variant::plain ? s.encode(v).bytes : s.encode(v, a).bytes;
}

} // namespace

std::vector<RepresentationWrite> foreign_representations(const std::vector<StructureFamily>& families,
                                                         const std::string& exclude_type,
                                                         const std::optional<Address> placed_at) {
    std::vector<RepresentationWrite> out;
    for (const StructureFamily& f : families) {
        if (f.type_name() == exclude_type) {
            continue;
        }
        for (const StructurePtr& m : f.members()) {
            const bool plain = m->variant() == Variant::plain;
            if (!plain && (!placed_at || !m->aligned(*placed_at))) {
                continue;
            }
            const Address a = placed_at.value_or(0);
            for (const Value& v : m->values()) {
                out.push_back(RepresentationWrite{f.type_name(), m->id(), v, a, encode_at(*m, v, a)});
            }
        }
    }
    return out;
}

std::vector<SliceWrite> foreign_slices(const std::vector<StructureFamily>& families, const std::string& exclude_type,
                                       const Address slice_at, const std::size_t length,
                                       const std::size_t max_fragments, const std::size_t bound) {
    std::vector<SliceWrite> out;
    if (length == 0 || max_fragments == 0) {
        return out;
    }
    std::size_t longest = 0;
    for (const StructureFamily& f : families) {
        if (f.type_name() != exclude_type) {
            for (const StructurePtr& m : f.members()) {
                longest = std::max(longest, m->size());
            }
        }
    }
    // Fragment k starts at slice_at - offset + (bytes before it).
    auto placement = [&](const std::size_t offset, const std::size_t before) -> std::optional<Address> {
        if (slice_at + before < offset) {
            return std::nullopt;
        }
        return slice_at + before - offset;
    };
    std::vector<RepresentationWrite> chain;
    std::function<void(std::size_t, std::size_t)> extend = [&](const std::size_t offset, const std::size_t filled) {
        if (filled >= offset + length) {
            ByteList concat;
            for (const auto& frag : chain) {
                concat.insert(concat.end(), frag.bytes.begin(), frag.bytes.end());
            }
            if (out.size() >= bound) {
                throw Error(Errc::bound_exceeded, "more than " + std::to_string(bound) + " slices");
            }
            out.push_back(SliceWrite{chain, offset,
                                     ByteList(concat.begin() + static_cast<std::ptrdiff_t>(offset),
                                              concat.begin() + static_cast<std::ptrdiff_t>(offset + length))});
            return;
        }
        if (chain.size() == max_fragments) {
            return;
        }
        for (RepresentationWrite& rep : foreign_representations(families, exclude_type, placement(offset, filled))) {
            // The first fragment must reach past the offset to meet the slice.
            if (chain.empty() && rep.bytes.size() <= offset) {
                continue;
            }
            const std::size_t len = rep.bytes.size();
            chain.push_back(std::move(rep));
            extend(offset, filled + len);
            chain.pop_back();
        }
    };
    for (std::size_t offset = 0; offset < longest; ++offset) {
        extend(offset, 0);
    }
    return out;
}

std::vector<MemoryModification> gen_modifications(const ClassId cls, const ClassContext& ctx, const std::size_t bound) {
    check_context(ctx);
    const SemanticStructure& reader = *ctx.reader;
    const Address a = ctx.read_address;
    const std::size_t size = reader.size();
    Collector out(bound);
    switch (cls) {
    case 1:
        out.push(MemoryModification{a, a + size, UnknownFill{}, 1});
        break;
    case 2:
        for (unsigned b = 0; b < reader.space().radix(); ++b) {
            out.push(MemoryModification{a, a + size, ConstantFill{static_cast<Byte>(b)}, 2});
        }
        break;
    case 3:
        for (RepresentationWrite& rep : foreign_representations(ctx.foreign_families, ctx.type_name, a)) {
            if (rep.bytes.size() == size) {
                out.push(MemoryModification{a, a + size, std::move(rep), 3});
            }
        }
        break;
    case 4:
        for (SliceWrite& slice : foreign_slices(ctx.foreign_families, ctx.type_name, a, size, ctx.slice_bound, bound)) {
            out.push(MemoryModification{a, a + size, std::move(slice), 4});
        }
        break;
    case 5: {
        if (!reader.space().power_of_two()) {
            throw Error(Errc::invalid_argument, "bit copies need a power-of-two radix");
        }
        std::vector<Address> sources = ctx.copy_sources;
        if (sources.empty()) {
            sources.assign(reader.addresses().begin(), reader.addresses().end());
        }
        const std::size_t nbits = size * reader.space().bits_per_byte();
        if (nbits >= 20) {
            throw Error(Errc::bound_exceeded, "too many bit subsets");
        }
        const std::size_t full = (std::size_t{1} << nbits) - 1;
        for (const Address src : sources) {
            if (reader.variant() != Variant::plain && !reader.aligned(src)) {
                continue;
            }
            for (const Value& v : reader.values()) {
                const ByteList source = encode_at(reader, v, src);
                for (std::size_t mask = full; mask >= 1; --mask) {
                    std::vector<unsigned> bits;
                    for (unsigned i = 0; i < nbits; ++i) {
                        if ((mask >> i) & 1U) {
                            bits.push_back(i);
                        }
                    }
                    out.push(MemoryModification{a, a + size,
                                                BitCopy{ctx.type_name, reader.id(), v, src, std::move(bits), source},
                                                5});
                }
            }
        }
        break;
    }
    default:
        throw Error(Errc::invalid_argument, "error class must lie in 1..5, got " + std::to_string(cls));
    }
    return out.take();
}

std::set<ClassId> classify(const MemoryModification& mod, const ClassContext& ctx) {
    check_context(ctx);
    const std::size_t size = ctx.reader->size();
    const bool exact = mod.begin == ctx.read_address && mod.length() == size;
    return std::visit(
        [&](const auto& p) -> std::set<ClassId> {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, UnknownFill>) {
                return {1};
            } else if constexpr (std::is_same_v<P, ConstantFill>) {
                return {2};
            } else if constexpr (std::is_same_v<P, RepresentationWrite>) {
                if (p.type_name == ctx.type_name) {
                    return {5};
                }
                if (exact && p.bytes.size() == size) {
                    return {3, 4};
                }
                return {4};
            } else if constexpr (std::is_same_v<P, SliceWrite>) {
                if (p.fragments.size() == 1 && p.offset == 0 && p.fragments.front().bytes.size() == size && exact) {
                    return {3, 4};
                }
                return {4};
            } else {
                return {5};
            }
        },
        mod.payload);
}

Memory apply_modification(const Memory& m, const MemoryModification& mod) {
    if (mod.end < mod.begin || mod.end > m.size()) {
        throw Error(Errc::out_of_range, "modification range [" + std::to_string(mod.begin) + ", " +
                                            std::to_string(mod.end) + ") outside memory");
    }
    const std::size_t n = mod.length();
    auto need_length = [&](const ByteList& bytes) {
        if (bytes.size() != n) {
            throw Error(Errc::length_mismatch, "payload length differs from modification range");
        }
    };
    return std::visit(
        [&](const auto& p) -> Memory {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, UnknownFill>) {
                return m.write(mod.begin, std::vector<Cell>(n, Cell::unknown()));
            } else if constexpr (std::is_same_v<P, ConstantFill>) {
                return m.write(mod.begin, std::vector<Cell>(n, Cell::concrete(p.value)));
            } else if constexpr (std::is_same_v<P, RepresentationWrite> || std::is_same_v<P, SliceWrite>) {
                need_length(p.bytes);
                return m.write_bytes(mod.begin, p.bytes);
            } else {
                need_length(p.source_bytes);
                if (!m.space().power_of_two()) {
                    throw Error(Errc::invalid_argument, "bit copies need a power-of-two radix");
                }
                const unsigned bpb = m.space().bits_per_byte();
                const unsigned full = (1U << bpb) - 1;
                std::vector<unsigned> masks(n, 0);
                for (const unsigned bit : p.bits) {
                    if (bit >= n * bpb) {
                        throw Error(Errc::out_of_range, "copied bit position outside the range");
                    }
                    masks[bit / bpb] |= 1U << (bit % bpb);
                }
                std::vector<Cell> cells = m.read(mod.begin, n);
                for (std::size_t i = 0; i < n; ++i) {
                    if (masks[i] == 0) {
                        continue;
                    }
                    const unsigned src = p.source_bytes[i];
                    if (cells[i].is_unknown()) {
                        // Only a full-byte copy pins down an Unknown cell.
                        if (masks[i] == full) {
                            cells[i] = Cell::concrete(static_cast<Byte>(src));
                        }
                    } else {
                        const unsigned t = cells[i].value();
                        cells[i] = Cell::concrete(static_cast<Byte>((t & ~masks[i]) | (src & masks[i])));
                    }
                }
                return m.write(mod.begin, cells);
            }
        },
        mod.payload);
}

std::optional<MemoryModification> rebind_copy(const MemoryModification& mod, const SemanticStructure& s) {
    const auto* copy = std::get_if<BitCopy>(&mod.payload);
    if (copy == nullptr) {
        return mod;
    }
    if (!s.has_value(copy->value) || (s.variant() != Variant::plain && !s.aligned(copy->source_address)) ||
        s.size() != mod.length()) {
        return std::nullopt;
    }
    BitCopy rebound = *copy;
    rebound.structure_id = s.id();
    rebound.source_bytes = encode_at(s, copy->value, copy->source_address);
    MemoryModification out = mod;
    out.payload = std::move(rebound);
    return out;
}

const char* payload_kind(const Payload& p) noexcept {
    switch (p.index()) {
    case 0: return "unknown_fill";
    case 1: return "constant_fill";
    case 2: return "representation_write";
    case 3: return "slice_write";
    default: return "bit_copy";
    }
}

namespace {

nlohmann::json rep_json(const RepresentationWrite& r) {
    return nlohmann::json{{"type", r.type_name},
                          {"structure", r.structure_id},
                          {"value", r.value.tag},
                          {"source_address", r.source_address},
                          {"bytes", r.bytes}};
}

RepresentationWrite rep_from_json(const nlohmann::json& j) {
    return RepresentationWrite{j.at("type").get<std::string>(), j.at("structure").get<std::string>(),
                               Value{j.at("value").get<std::string>()}, j.at("source_address").get<Address>(),
                               j.at("bytes").get<ByteList>()};
}

} // namespace

nlohmann::json to_json(const MemoryModification& mod) {
    nlohmann::json payload = std::visit(
        [](const auto& p) -> nlohmann::json {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, UnknownFill>) {
                return nlohmann::json::object();
            } else if constexpr (std::is_same_v<P, ConstantFill>) {
                return {{"value", p.value}};
            } else if constexpr (std::is_same_v<P, RepresentationWrite>) {
                return rep_json(p);
            } else if constexpr (std::is_same_v<P, SliceWrite>) {
                nlohmann::json frags = nlohmann::json::array();
                for (const auto& f : p.fragments) {
                    frags.push_back(rep_json(f));
                }
                return {{"fragments", frags}, {"offset", p.offset}, {"bytes", p.bytes}};
            } else {
                return {{"type", p.type_name},         {"structure", p.structure_id}, {"value", p.value.tag},
                        {"source_address", p.source_address}, {"bits", p.bits},   {"source_bytes", p.source_bytes}};
            }
        },
        mod.payload);
    payload["kind"] = payload_kind(mod.payload);
    return nlohmann::json{{"class", mod.cls}, {"range", {mod.begin, mod.end}}, {"payload", payload}};
}

MemoryModification modification_from_json(const nlohmann::json& j) {
    try {
        MemoryModification mod;
        mod.cls = j.at("class").get<ClassId>();
        if (mod.cls < kFirstClass || mod.cls > kLastClass) {
            throw Error(Errc::parse_error, "class must lie in 1..5");
        }
        mod.begin = j.at("range").at(0).get<Address>();
        mod.end = j.at("range").at(1).get<Address>();
        if (mod.end < mod.begin) {
            throw Error(Errc::parse_error, "empty or reversed modification range");
        }
        const auto& p = j.at("payload");
        const auto kind = p.at("kind").get<std::string>();
        if (kind == "unknown_fill") {
            mod.payload = UnknownFill{};
        } else if (kind == "constant_fill") {
            mod.payload = ConstantFill{p.at("value").get<Byte>()};
        } else if (kind == "representation_write") {
            mod.payload = rep_from_json(p);
        } else if (kind == "slice_write") {
            SliceWrite s;
            for (const auto& f : p.at("fragments")) {
                s.fragments.push_back(rep_from_json(f));
            }
            s.offset = p.at("offset").get<std::size_t>();
            s.bytes = p.at("bytes").get<ByteList>();
            mod.payload = std::move(s);
        } else if (kind == "bit_copy") {
            mod.payload = BitCopy{p.at("type").get<std::string>(),         p.at("structure").get<std::string>(),
                                  Value{p.at("value").get<std::string>()}, p.at("source_address").get<Address>(),
                                  p.at("bits").get<std::vector<unsigned>>(), p.at("source_bytes").get<ByteList>()};
        } else {
            throw Error(Errc::parse_error, "unknown payload kind '" + kind + "'");
        }
        return mod;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::parse_error, e.what());
    }
}

} // namespace udts
