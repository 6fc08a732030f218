#include "udts/sensitivity.hpp"

#include <algorithm>

#include "udts/error.hpp"
#include "udts/parallel.hpp"

namespace udts {

bool visible(const Address a, const SemanticStructure& s) {
    return std::any_of(s.addresses().begin(), s.addresses().end(),
                       [&](const Address base) { return base <= a && a < base + s.size(); });
}

bool visible_in_family(const Address a, const StructureFamily& f) {
    return std::any_of(f.members().begin(), f.members().end(), [&](const StructurePtr& s) { return visible(a, *s); });
}

namespace {

constexpr std::size_t kSurroundLimit = std::size_t{1} << 20;

// Byte positions of a window, some pinned, the rest enumerated.
struct Window {
    std::size_t size = 0;
    std::map<std::size_t, Byte> pinned;
};

// Calls fn(bytes, bit) for every completion of the free positions and, when
// `with_bit`, both protected-bit values. Stops early when fn returns false.
template <typename Fn>
bool for_each_completion(const ByteSpace& space, const Window& w, const bool with_bit, Fn&& fn) {
    std::vector<std::size_t> free;
    for (std::size_t i = 0; i < w.size; ++i) {
        if (!w.pinned.contains(i)) {
            free.push_back(i);
        }
    }
    const std::size_t n = space.list_count(free.size(), kSurroundLimit);
    ByteList bytes(w.size, 0);
    for (const auto& [i, b] : w.pinned) {
        bytes[i] = b;
    }
    for (std::size_t k = 0; k < n; ++k) {
        const ByteList fill = space.nth_list(k, free.size());
        for (std::size_t j = 0; j < free.size(); ++j) {
            bytes[free[j]] = fill[j];
        }
        for (int bit = 0; bit < (with_bit ? 2 : 1); ++bit) {
            if (!fn(bytes, bit != 0)) {
                return false;
            }
        }
    }
    return true;
}

std::optional<Value> decode_at(const SemanticStructure& s, const ByteList& bytes, const Address a, const bool bit) {
    return s.decode(bytes, a, s.uses_bit_at(a) ? std::optional<bool>(bit) : std::nullopt);
}

// Decoder of s at base rejects the window for every completion.
bool rejects_all(const SemanticStructure& s, const Address base, const Window& w) {
    return for_each_completion(s.space(), w, s.uses_bit_at(base),
                               [&](const ByteList& bytes, const bool bit) { return !decode_at(s, bytes, base, bit); });
}

// Placement of bytes `u` at address `at` inside the window of s at `base`.
Window pin(const SemanticStructure& s, const Address base, const Address at, const ByteList& u) {
    Window w{s.size(), {}};
    for (std::size_t i = 0; i < u.size(); ++i) {
        const Address x = at + i;
        if (x >= base && x < base + s.size()) {
            w.pinned[x - base] = u[i];
        }
    }
    return w;
}

bool overlaps(const Address a, const std::size_t n, const Address b, const std::size_t m) {
    return a < b + m && b < a + n;
}

LemmaReport fail(const int lemma, Counterexample c) { return LemmaReport{lemma, false, std::move(c)}; }

} // namespace

LemmaReport check_lemma1(const StructureFamily& f, const Address addr_bound) {
    for (Address a = 0; a < addr_bound; ++a) {
        if (!visible_in_family(a, f)) {
            continue;
        }
        bool found = false;
        for (const StructurePtr& s : f.members()) {
            for (const Address base : s->addresses()) {
                if (a < base || a >= base + s->size()) {
                    continue;
                }
                // For every surrounding, some byte at a is rejected.
                Window surround{s->size(), {{a - base, 0}}};
                const bool ok = for_each_completion(
                    s->space(), surround, s->uses_bit_at(base), [&](const ByteList& bytes, const bool bit) {
                        ByteList probe = bytes;
                        for (unsigned b = 0; b < s->space().radix(); ++b) {
                            probe[a - base] = static_cast<Byte>(b);
                            if (!decode_at(*s, probe, base, bit)) {
                                return true;
                            }
                        }
                        return false;
                    });
                if (ok) {
                    found = true;
                    break;
                }
            }
            if (found) {
                break;
            }
        }
        if (!found) {
            return fail(1, Counterexample{a, std::nullopt, {}, {},
                                          "no member rejects some byte at this address for every surrounding"});
        }
    }
    return LemmaReport{1, true, std::nullopt};
}

LemmaReport check_lemma2(const StructureFamily& f, const Address addr_bound) {
    const unsigned radix = f.space().radix();
    for (Address a = 0; a < addr_bound; ++a) {
        if (!visible_in_family(a, f)) {
            continue;
        }
        for (unsigned b = 0; b < radix; ++b) {
            bool found = false;
            for (const StructurePtr& s : f.members()) {
                for (const Address base : s->addresses()) {
                    if (a >= base && a < base + s->size() &&
                        rejects_all(*s, base, pin(*s, base, a, ByteList{static_cast<Byte>(b)}))) {
                        found = true;
                        break;
                    }
                }
                if (found) {
                    break;
                }
            }
            if (!found) {
                return fail(2, Counterexample{a, static_cast<Byte>(b), {}, {},
                                              "byte accepted by some surrounding in every covering member"});
            }
        }
    }
    return LemmaReport{2, true, std::nullopt};
}

LemmaReport check_lemma3(const StructureFamily& ft, const StructureFamily& fu, const Address addr_bound,
                         const Lemma3Options& options) {
    if (ft.type_name() == fu.type_name()) {
        throw Error(Errc::invalid_argument, "foreign family must have a different type");
    }
    if (!options.slices) {
        for (const StructurePtr& t : ft.members()) {
            for (const StructurePtr& u : fu.members()) {
                if (t->size() != u->size()) {
                    throw Error(Errc::size_mismatch, "'" + t->id() + "' and '" + u->id() + "' differ in size");
                }
            }
        }
    }
    const std::vector<StructureFamily> foreign{fu};
    for (const StructurePtr& st : ft.members()) {
        for (const Address a : st->addresses()) {
            if (a >= addr_bound) {
                continue;
            }
            std::vector<RepresentationWrite> reps;
            if (options.slices) {
                for (SliceWrite& sl : foreign_slices(foreign, ft.type_name(), a, st->size(), options.slice_bound)) {
                    RepresentationWrite r = sl.fragments.front();
                    r.bytes = std::move(sl.bytes);
                    r.structure_id.clear();
                    for (std::size_t k = 0; k < sl.fragments.size(); ++k) {
                        r.structure_id += (k ? "+" : "") + sl.fragments[k].structure_id + ":" +
                                          sl.fragments[k].value.tag;
                    }
                    r.structure_id += "@" + std::to_string(sl.offset);
                    reps.push_back(std::move(r));
                }
            } else {
                reps = foreign_representations(foreign, ft.type_name(), a);
            }
            for (const RepresentationWrite& u : reps) {
                bool found = false;
                for (const StructurePtr& s : ft.members()) {
                    for (const Address base : s->addresses()) {
                        if (overlaps(base, s->size(), a, u.bytes.size()) &&
                            rejects_all(*s, base, pin(*s, base, a, u.bytes))) {
                            found = true;
                            break;
                        }
                    }
                    if (found) {
                        break;
                    }
                }
                if (!found) {
                    return fail(3, Counterexample{a, std::nullopt, u.bytes, u.structure_id,
                                                  "foreign representation of '" + u.value.tag + "' read by " +
                                                      st->id() + " is accepted"});
                }
            }
        }
    }
    return LemmaReport{3, true, std::nullopt};
}

LemmaReport check_lemma4(const StructureFamily& f, const Address addr_bound) {
    const ByteSpace& space = f.space();
    if (!space.power_of_two()) {
        throw Error(Errc::invalid_argument, "bit copies need a power-of-two radix");
    }
    const unsigned bpb = space.bits_per_byte();
    for (const StructurePtr& s : f.members()) {
        std::vector<StructurePtr> peers;
        for (const StructurePtr& p : f.members()) {
            if (equivalent(*s, *p)) {
                peers.push_back(p);
            }
        }
        const std::size_t nbits = s->size() * bpb;
        if (nbits >= 20) {
            throw Error(Errc::bound_exceeded, "too many bit subsets");
        }
        const std::size_t targets = space.list_count(s->size(), kSurroundLimit);
        for (const Address a : s->addresses()) {
            if (a >= addr_bound) {
                continue;
            }
            // Protected-bit locations any peer consults at a.
            std::vector<BitAddress> bit_locs;
            for (const StructurePtr& p : peers) {
                if (p->uses_bit_at(a)) {
                    const BitAddress t = p->protected_bit()->target;
                    if (std::find(bit_locs.begin(), bit_locs.end(), t) == bit_locs.end()) {
                        bit_locs.push_back(t);
                    }
                }
            }
            if (bit_locs.size() >= 16) {
                throw Error(Errc::bound_exceeded, "too many protected-bit locations");
            }
            for (const Address src : s->addresses()) {
                for (const Value& v : s->values()) {
                    for (std::size_t mask = (std::size_t{1} << nbits) - 1; mask >= 1; --mask) {
                        for (std::size_t ti = 0; ti < targets; ++ti) {
                            const ByteList prior = space.nth_list(ti, s->size());
                            for (std::size_t beta = 0; beta < (std::size_t{1} << bit_locs.size()); ++beta) {
                                bool found = false;
                                for (const StructurePtr& p : peers) {
                                    const ByteList source = p->variant() == Variant::plain
                                                                ? p->encode(v).bytes
                                                                : p->encode(v, src).bytes;
                                    ByteList mixed = prior;
                                    for (std::size_t i = 0; i < mixed.size(); ++i) {
                                        const unsigned m = static_cast<unsigned>((mask >> (i * bpb)) & ((1U << bpb) - 1));
                                        mixed[i] = static_cast<Byte>((prior[i] & ~m) | (source[i] & m));
                                    }
                                    bool bit = false;
                                    if (p->uses_bit_at(a)) {
                                        const auto it = std::find(bit_locs.begin(), bit_locs.end(),
                                                                  p->protected_bit()->target);
                                        bit = ((beta >> (it - bit_locs.begin())) & 1U) != 0;
                                    }
                                    if (!decode_at(*p, mixed, a, bit)) {
                                        found = true;
                                        break;
                                    }
                                }
                                if (!found) {
                                    return fail(4, Counterexample{
                                                       a, std::nullopt, prior, s->id(),
                                                       "copy of '" + v.tag + "' from " + std::to_string(src) +
                                                           " with bit mask " + std::to_string(mask) +
                                                           " and protected-bit state " + std::to_string(beta) +
                                                           " is accepted by every equivalent member"});
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    return LemmaReport{4, true, std::nullopt};
}

namespace {

struct Execution {
    StructurePtr s;
    Address r = 0;
};

struct ModResult {
    std::size_t executions = 0;
    std::optional<SensitivityWitness> witness;
};

} // namespace

SensitivityVerdict type_sensitive_bruteforce(const std::vector<StructureFamily>& families, const ClassId cls,
                                             const ClassContext& ctx, const std::size_t bound) {
    const StructureFamily* tf = nullptr;
    for (const StructureFamily& f : families) {
        if (f.type_name() == ctx.type_name) {
            tf = &f;
        }
    }
    if (tf == nullptr) {
        throw Error(Errc::invalid_argument, "no family for type '" + ctx.type_name + "'");
    }
    ClassContext gctx = ctx;
    for (const StructureFamily& f : families) {
        const bool known = std::any_of(gctx.foreign_families.begin(), gctx.foreign_families.end(),
                                       [&](const StructureFamily& g) { return g.type_name() == f.type_name(); });
        if (f.type_name() != ctx.type_name && !known) {
            gctx.foreign_families.push_back(f);
        }
    }
    const std::vector<MemoryModification> mods = gen_modifications(cls, gctx, bound);

    std::vector<Execution> execs;
    std::size_t mem_size = ctx.read_address + ctx.reader->size();
    for (const StructurePtr& s : tf->members()) {
        for (const Address r : s->addresses()) {
            execs.push_back(Execution{s, r});
            mem_size = std::max(mem_size, r + s->size());
        }
        if (const auto& pb = s->protected_bit()) {
            mem_size = std::max(mem_size, pb->target.byte_addr + 1);
        }
    }
    for (const MemoryModification& mod : mods) {
        mem_size = std::max(mem_size, mod.end);
    }
    std::vector<std::optional<Value>> histories{std::nullopt};
    for (const Value& v : tf->common_values()) {
        histories.emplace_back(v);
    }
    const Memory fresh(tf->space(), mem_size);

    const auto results = parallel_map<ModResult>(mods.size(), [&](const std::size_t mi) {
        const MemoryModification& mod = mods[mi];
        ModResult res;
        for (const auto& h : histories) {
            bool detected = false;
            std::optional<SensitivityWitness> candidate;
            for (const Execution& e : execs) {
                const SemanticStructure& s = *e.s;
                if (!overlaps(e.r, s.size(), mod.begin, mod.length())) {
                    continue;
                }
                const auto bound_mod = rebind_copy(mod, s);
                if (!bound_mod) {
                    continue;
                }
                ++res.executions;
                Memory before = fresh;
                if (h) {
                    const Encoded enc = s.variant() == Variant::plain ? s.encode(*h) : s.encode(*h, e.r);
                    before = before.write_bytes(e.r, enc.bytes);
                    if (s.uses_bit_at(e.r)) {
                        before = before.with_overlay_bit(s.protected_bit()->target, enc.bit);
                    }
                }
                const Memory after = apply_modification(before, *bound_mod);
                bool changed = false;
                for (Address x = e.r; x < e.r + s.size(); ++x) {
                    changed = changed || modified_at(before, after, x);
                }
                const BitValue bit = s.uses_bit_at(e.r) ? after.read_bit(s.protected_bit()->target) : BitValue{};
                const ReadResult read = decode_cells(s, after.read(e.r, s.size()), e.r, bit);
                if (read.status == ReadStatus::undefined) {
                    detected = true;
                    break;
                }
                if (changed && !candidate) {
                    candidate = SensitivityWitness{mi, *bound_mod, h, e.s, e.r, read};
                }
            }
            if (!detected && candidate) {
                res.witness = std::move(candidate);
                break;
            }
        }
        return res;
    });

    SensitivityVerdict verdict;
    verdict.cls = cls;
    verdict.type_name = ctx.type_name;
    verdict.modifications = mods.size();
    for (const ModResult& r : results) {
        verdict.executions += r.executions;
        if (r.witness && !verdict.witness) {
            verdict.witness = r.witness;
        }
    }
    verdict.sensitive = !verdict.witness;
    return verdict;
}

const char* read_status_name(const ReadStatus s) noexcept {
    switch (s) {
    case ReadStatus::value: return "value";
    case ReadStatus::undefined: return "undefined";
    case ReadStatus::unknown_value: return "unknown_value";
    }
    return "undefined";
}

nlohmann::json to_json(const Counterexample& c) {
    nlohmann::json j{{"address", c.address}, {"detail", c.detail}};
    if (c.byte) {
        j["byte"] = *c.byte;
    }
    if (!c.bytes.empty()) {
        j["bytes"] = c.bytes;
    }
    if (!c.structure_id.empty()) {
        j["structure"] = c.structure_id;
    }
    return j;
}

nlohmann::json to_json(const LemmaReport& r) {
    nlohmann::json j{{"lemma", r.lemma}, {"holds", r.holds}};
    j["counterexample"] = r.counterexample ? to_json(*r.counterexample) : nlohmann::json(nullptr);
    return j;
}

nlohmann::json to_json(const SensitivityVerdict& v) {
    nlohmann::json j{{"verdict", v.sensitive ? "Sensitive" : "NotSensitive"},
                     {"class", v.cls},
                     {"type", v.type_name},
                     {"modifications", v.modifications},
                     {"executions", v.executions}};
    if (v.witness) {
        const SensitivityWitness& w = *v.witness;
        nlohmann::json read{{"status", read_status_name(w.read.status)}};
        if (w.read.value) {
            read["value"] = w.read.value->tag;
        }
        j["witness"] = {
            {"modification_index", w.modification_index},
            {"modification", to_json(w.modification)},
            {"history", w.history ? nlohmann::json(w.history->tag) : nlohmann::json(nullptr)},
            {"choice", {{v.type_name, w.structure->id()}}},
            {"structure", structure_to_json(*w.structure)},
            {"read_address", w.read_address},
            {"read", read},
        };
    } else {
        j["witness"] = nullptr;
    }
    return j;
}

} // namespace udts
