#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "udts/error.hpp"
#include "udts/error_classes.hpp"

using namespace udts;

namespace {

const ByteSpace r4(4);

ClassContext bool_context(std::vector<StructureFamily> foreign = {}) {
    return ClassContext{"bool", make_bool_pair(1, 0, r4, {0, 1}, "bool_0_1"), 0, std::move(foreign), {}, 2};
}

StructureFamily uint2_family() {
    return StructureFamily("uint2", {make_total_uint(r4, 1, {0, 1}, "u_id"),
                                     make_table_structure("u_rev", r4, {"0"_v, "1"_v, "2"_v, "3"_v}, {0, 1}, 1,
                                                          Variant::plain,
                                                          {{{0, "0"_v}, {3}}, {{0, "1"_v}, {2}}, {{0, "2"_v}, {1}},
                                                           {{0, "3"_v}, {0}}},
                                                          {{{0, {3}}, "0"_v}, {{0, {2}}, "1"_v}, {{0, {1}}, "2"_v},
                                                           {{0, {0}}, "3"_v}})});
}

} // namespace

TEST_CASE("class 1 and 2 generators") {
    const auto ctx = bool_context();
    const auto c1 = gen_modifications(1, ctx);
    REQUIRE(c1.size() == 1);
    CHECK(std::holds_alternative<UnknownFill>(c1.front().payload));
    CHECK(c1.front().begin == 0);
    CHECK(c1.front().end == 1);
    const auto c2 = gen_modifications(2, ctx);
    REQUIRE(c2.size() == 4);
    for (unsigned b = 0; b < 4; ++b) {
        CHECK(std::get<ConstantFill>(c2[b].payload).value == b);
    }
    CHECK_THROWS_AS((void)gen_modifications(2, ctx, 3), Error);
    CHECK_THROWS_AS((void)gen_modifications(6, ctx), Error);
}

TEST_CASE("class 3 writes one representation per member and value") {
    const StructureFamily u = uint2_family();
    const auto mods = gen_modifications(3, bool_context({u}));
    CHECK(mods.size() == u.size() * 4);
    // The reader's own type never appears as a foreign family.
    const auto none = gen_modifications(3, bool_context({StructureFamily("bool", {make_bool_total(r4)})}));
    CHECK(none.empty());
    // Different sizes are not representation writes for this read.
    const auto wide = gen_modifications(3, bool_context({StructureFamily("u16", {make_total_uint(r4, 2)})}));
    CHECK(wide.empty());
}

TEST_CASE("class 4 slices") {
    const auto u16 = StructureFamily("u16", {make_total_uint(r4, 2, {0}, "u16")});
    const auto mods = gen_modifications(4, bool_context({u16}));
    // Each byte of every two-byte representation, one fragment per slice.
    CHECK(mods.size() == 16 * 2);
    for (const auto& m : mods) {
        const auto& s = std::get<SliceWrite>(m.payload);
        CHECK(s.fragments.size() == 1);
        CHECK(s.bytes.size() == 1);
        CHECK(s.bytes.front() == s.fragments.front().bytes[s.offset]);
    }
    // Two-byte reads spanning two one-byte representations.
    const ClassContext wide{"pair", make_total_uint(r4, 2, {0}, "pair"), 0, {uint2_family()}, {}, 2};
    const auto spans = gen_modifications(4, wide);
    CHECK(spans.size() == 8 * 8);
    for (const auto& m : spans) {
        CHECK(std::get<SliceWrite>(m.payload).fragments.size() == 2);
    }
}

TEST_CASE("class 3 is contained in class 4") {
    const auto ctx = bool_context({uint2_family()});
    const auto c3 = gen_modifications(3, ctx);
    const auto c4 = gen_modifications(4, ctx);
    for (const auto& m3 : c3) {
        const auto& rep = std::get<RepresentationWrite>(m3.payload);
        CHECK(std::any_of(c4.begin(), c4.end(), [&](const MemoryModification& m4) {
            return m4.begin == m3.begin && m4.end == m3.end && std::get<SliceWrite>(m4.payload).bytes == rep.bytes;
        }));
    }
}

TEST_CASE("class 5 bit copies") {
    const auto ctx = bool_context();
    const auto mods = gen_modifications(5, ctx);
    // Two sources, two values, three nonempty bit sets of a radix-4 byte.
    CHECK(mods.size() == 2 * 2 * 3);
    for (const auto& m : mods) {
        CHECK_FALSE(std::get<BitCopy>(m.payload).bits.empty());
    }
    // The first copy of each source is the exact representation.
    const auto& exact = std::get<BitCopy>(mods.front().payload);
    CHECK(exact.source_address == 0);
    const Memory after = apply_modification(Memory(r4, 2).write_bytes(0, ByteList{3}), mods.front());
    const auto bytes = after.read(0, 1);
    CHECK(ctx.reader->decode(ByteList{bytes[0].value()}) == exact.value);
    CHECK_THROWS_AS((void)gen_modifications(5, ClassContext{"t", make_bool_pair(1, 0, ByteSpace(3)), 0, {}, {}, 2}),
                    Error);
}

TEST_CASE("applying bit copies") {
    const MemoryModification low{0, 1, BitCopy{"bool", "s", "true"_v, 0, {0}, {1}}, 5};
    CHECK(apply_modification(Memory(r4, to_cells(ByteList{2})), low).at(0) == Cell::concrete(3));
    // A partial copy into an Unknown cell leaves it Unknown; a full one pins it.
    CHECK(apply_modification(Memory(r4, 1), low).at(0).is_unknown());
    const MemoryModification full{0, 1, BitCopy{"bool", "s", "true"_v, 0, {0, 1}, {1}}, 5};
    CHECK(apply_modification(Memory(r4, 1), full).at(0) == Cell::concrete(1));
    const MemoryModification outside{3, 5, UnknownFill{}, 1};
    CHECK_THROWS_AS((void)apply_modification(Memory(r4, 4), outside), Error);
}

TEST_CASE("rebind_copy") {
    const auto fam = make_address_family(make_bool_pair(1, 0, r4, {0, 1}, "b"), 1, 2);
    const auto s = fam.members().front();
    const MemoryModification mod{0, 1, BitCopy{"bool", "other", "true"_v, 1, {0, 1}, {0}}, 5};
    const auto r = rebind_copy(mod, *s);
    REQUIRE(r);
    CHECK(std::get<BitCopy>(r->payload).source_bytes == s->encode("true"_v, 1).bytes);
    CHECK(std::get<BitCopy>(r->payload).structure_id == s->id());
    const MemoryModification far{0, 1, BitCopy{"bool", "other", "true"_v, 3, {0}, {0}}, 5};
    CHECK_FALSE(rebind_copy(far, *s));
    const MemoryModification fill{0, 1, ConstantFill{2}, 2};
    CHECK(rebind_copy(fill, *s) == fill);
}

TEST_CASE("classify examples") {
    const auto ctx = bool_context({uint2_family()});
    CHECK(classify(MemoryModification{0, 1, UnknownFill{}, 1}, ctx) == std::set<ClassId>{1});
    CHECK(classify(MemoryModification{0, 1, ConstantFill{0}, 2}, ctx) == std::set<ClassId>{2});
    const MemoryModification full{0, 1, RepresentationWrite{"uint2", "u_id", "3"_v, 0, {3}}, 3};
    CHECK(classify(full, ctx) == std::set<ClassId>{3, 4});
}

TEST_CASE("every generated modification classifies into its class") {
    const auto u16 = StructureFamily("u16", {make_total_uint(r4, 2, {0}, "u16")});
    const std::vector<ClassContext> contexts{
        bool_context({uint2_family(), u16}),
        ClassContext{"pair", make_total_uint(r4, 2, {0, 2}, "pair"), 2, {uint2_family()}, {}, 3},
    };
    for (const auto& ctx : contexts) {
        for (ClassId c = kFirstClass; c <= kLastClass; ++c) {
            for (const auto& m : gen_modifications(c, ctx)) {
                CHECK(m.cls == c);
                CHECK(classify(m, ctx).contains(c));
            }
        }
    }
}

TEST_CASE("modification JSON round trip") {
    const auto ctx = bool_context({uint2_family(), StructureFamily("u16", {make_total_uint(r4, 2, {0}, "u16")})});
    for (ClassId c = kFirstClass; c <= kLastClass; ++c) {
        for (const auto& m : gen_modifications(c, ctx)) {
            const auto j = to_json(m);
            CHECK(j.at("class") == c);
            CHECK(modification_from_json(j) == m);
        }
    }
    CHECK_THROWS_AS((void)modification_from_json(nlohmann::json{{"class", 9}}), Error);
}
