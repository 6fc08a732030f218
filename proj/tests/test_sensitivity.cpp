#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "udts/error.hpp"
#include "udts/sensitivity.hpp"

using namespace udts;

namespace {

const ByteSpace r4(4);
const ByteSpace r256(256);

StructurePtr s01(std::set<Address> a = {0}, const std::string& id = "bool_0_1", const ByteSpace& sp = r4) {
    return make_bool_pair(1, 0, sp, std::move(a), id);
}

StructurePtr with_addresses(const std::string& id, std::size_t size, std::set<Address> a) {
    return make_total_uint(r4, size, std::move(a), id);
}

StructureFamily uint_family() { return StructureFamily("uint", {make_total_uint(r4, 1, {0, 1})}); }

} // namespace

TEST_CASE("visible") {
    const auto s = with_addresses("s", 4, {0, 4});
    CHECK(visible(3, *s));
    CHECK_FALSE(visible(8, *s));
    // Three structures: a lies in the windows of the first two only.
    const auto sa = with_addresses("sa", 4, {0});
    const auto sb = with_addresses("sb", 2, {2});
    const auto sc = with_addresses("sc", 2, {6});
    CHECK(visible(3, *sa));
    CHECK(visible(3, *sb));
    CHECK_FALSE(visible(3, *sc));
}

TEST_CASE("visible_in_family") {
    CHECK(visible_in_family(0, StructureFamily("bool", {s01()})));
    CHECK_FALSE(visible_in_family(0, StructureFamily("bool", {s01({})})));
    const StructureFamily three("u", {with_addresses("a", 1, {0}), with_addresses("b", 1, {2}),
                                      with_addresses("c", 1, {4})});
    CHECK(visible_in_family(2, three));
    CHECK_FALSE(visible_in_family(3, three));
}

TEST_CASE("lemma 1") {
    CHECK(check_lemma1(StructureFamily("bool", {s01({0}, "bool_0_1", r256)}), 4).holds);
    const auto gcc = check_lemma1(StructureFamily("bool", {make_bool_total(r256)}), 4);
    CHECK_FALSE(gcc.holds);
    REQUIRE(gcc.counterexample);
    CHECK(gcc.counterexample->address == 0);
    CHECK(check_lemma1(StructureFamily("bool", {s01({})}), 8).holds);
}

TEST_CASE("lemma 2") {
    const StructureFamily pairs("bool", {s01(), make_bool_pair(2, 3, r4, {0}, "bool_2_3")});
    CHECK(check_lemma2(pairs, 8).holds);
    const auto single = check_lemma2(StructureFamily("bool", {s01()}), 8);
    CHECK_FALSE(single.holds);
    REQUIRE(single.counterexample);
    CHECK(single.counterexample->byte == Byte{0});
    // Lemma 2 implies lemma 1.
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        RandomFamilyOptions o;
        o.address_pool = {0, 1, 2};
        const auto f = random_plain_family(r4, "bool", {"false"_v, "true"_v}, seed, o);
        if (check_lemma2(f, 4).holds) {
            CHECK(check_lemma1(f, 4).holds);
        }
    }
}

TEST_CASE("lemma 2 with two-byte windows needs rejection for every surrounding") {
    // Decoder accepts [0, x] for all x: byte 0 at offset 0 is never rejected.
    EncodeTable enc{{{0, "a"_v}, {0, 0}}};
    DecodeTable dec;
    for (Byte x = 0; x < 4; ++x) {
        dec[{0, ByteList{0, x}}] = "a"_v;
    }
    const auto s = make_table_structure("wide", r4, {"a"_v}, {0}, 2, Variant::plain, enc, dec);
    // At address 0 some byte is always rejected, at address 1 none is.
    CHECK_FALSE(check_lemma2(StructureFamily("w", {s}), 1).holds);
    CHECK(check_lemma1(StructureFamily("w", {s}), 1).holds);
    const auto r = check_lemma1(StructureFamily("w", {s}), 2);
    CHECK_FALSE(r.holds);
    REQUIRE(r.counterexample);
    CHECK(r.counterexample->address == 1);
}

TEST_CASE("lemma 3") {
    const StructureFamily closure = permutation_closure(s01(), 256);
    const StructureFamily disjoint("ptr", {make_bool_pair(2, 3, r4, {0}, "ptr_2_3")});
    CHECK(check_lemma3(closure, disjoint, 8).holds);
    CHECK_FALSE(check_lemma3(StructureFamily("bool", {make_bool_total(r4)}), disjoint, 8).holds);
    const StructureFamily alias("alias", {s01({0}, "alias_0_1")});
    const auto r = check_lemma3(StructureFamily("bool", {s01()}), alias, 8);
    CHECK_FALSE(r.holds);
    REQUIRE(r.counterexample);
    CHECK(r.counterexample->structure_id == "alias_0_1");
    CHECK_THROWS_AS((void)check_lemma3(closure, closure, 8), Error);
    const StructureFamily wide("u16", {make_total_uint(r4, 2)});
    try {
        (void)check_lemma3(closure, wide, 8);
        FAIL("expected SizeMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::size_mismatch);
    }
    // Slices of two-byte values at a one-byte read. The closure has a member
    // rejecting each byte; a single member does not.
    CHECK(check_lemma3(closure, wide, 8, Lemma3Options{true, 2}).holds);
    const StructureFamily single("bool", {s01()});
    CHECK_FALSE(check_lemma3(single, wide, 8, Lemma3Options{true, 2}).holds);
    const StructureFamily wide_disjoint(
        "u16d", {make_table_structure("d", r4, {"p"_v, "q"_v}, {0}, 2, Variant::plain,
                                      {{{0, "p"_v}, {2, 3}}, {{0, "q"_v}, {3, 2}}},
                                      {{{0, {2, 3}}, "p"_v}, {{0, {3, 2}}, "q"_v}})});
    CHECK(check_lemma3(closure, wide_disjoint, 8, Lemma3Options{true, 2}).holds);
    CHECK(check_lemma3(single, wide_disjoint, 8, Lemma3Options{true, 2}).holds);
}

TEST_CASE("lemma 4") {
    const auto prot = make_protected_family(r4, {"x"_v, "y"_v}, {0, 1}, {BitAddress{3, 0}});
    CHECK(check_lemma4(prot, 8).holds);
    const auto plain = check_lemma4(permutation_closure(s01(), 256), 8);
    CHECK_FALSE(plain.holds);
    const auto addr = check_lemma4(make_address_family(s01({0, 1}), 7), 8);
    CHECK_FALSE(addr.holds);
    REQUIRE(addr.counterexample);
    CHECK(addr.counterexample->detail.find("from " + std::to_string(addr.counterexample->address)) !=
          std::string::npos);
}

TEST_CASE("oracle: plain family passing lemma 2 is sensitive to constants") {
    const StructureFamily pairs("bool", {s01(), make_bool_pair(2, 3, r4, {0}, "bool_2_3")});
    REQUIRE(check_lemma2(pairs, 8).holds);
    const ClassContext ctx{"bool", pairs.members().front(), 0, {}, {}, 2};
    CHECK(type_sensitive_bruteforce({pairs}, 2, ctx).sensitive);
    CHECK(type_sensitive_bruteforce({pairs}, 1, ctx).sensitive);
    CHECK_FALSE(type_sensitive_bruteforce({StructureFamily("bool", {s01()})}, 2, ctx).sensitive);
}

TEST_CASE("oracle: plain encodings miss exact same-address copies") {
    const StructureFamily closure = permutation_closure(s01(), 256);
    const ClassContext ctx{"bool", closure.members().front(), 0, {}, {}, 2};
    const auto v = type_sensitive_bruteforce({closure}, 5, ctx);
    REQUIRE_FALSE(v.sensitive);
    REQUIRE(v.witness);
    const auto& copy = std::get<BitCopy>(v.witness->modification.payload);
    CHECK(copy.bits.size() == 2);
    CHECK(copy.source_address == v.witness->read_address);
}

TEST_CASE("oracle: address-dependent encodings and copy distance") {
    const auto fam = make_address_family(s01({0, 1}), 7);
    const ClassContext different{"bool", fam.members().front(), 0, {}, {1}, 2};
    CHECK(type_sensitive_bruteforce({fam}, 5, different).sensitive);
    const ClassContext same{"bool", fam.members().front(), 0, {}, {0}, 2};
    const auto v = type_sensitive_bruteforce({fam}, 5, same);
    CHECK_FALSE(v.sensitive);
    REQUIRE(v.witness);
    CHECK(std::get<BitCopy>(v.witness->modification.payload).source_address == 0);
}

TEST_CASE("oracle: protected-bit family detects every class") {
    const auto prot = make_protected_family(r4, {"x"_v, "y"_v}, {0, 1}, {BitAddress{3, 0}});
    const ClassContext ctx{"T", prot.members().front(), 0, {uint_family()}, {}, 2};
    for (ClassId c = kFirstClass; c <= kLastClass; ++c) {
        CAPTURE(c);
        CHECK(type_sensitive_bruteforce({prot, uint_family()}, c, ctx).sensitive);
    }
}

TEST_CASE("lemma/oracle agreement on fixed examples") {
    const StructureFamily closure = permutation_closure(s01(), 256);
    const StructureFamily disjoint("ptr", {make_bool_pair(2, 3, r4, {0, 1}, "ptr_2_3")});
    const ClassContext ctx{"bool", closure.members().front(), 0, {disjoint}, {}, 2};
    if (check_lemma1(closure, 8).holds) {
        CHECK(type_sensitive_bruteforce({closure}, 1, ctx).sensitive);
    }
    if (check_lemma2(closure, 8).holds) {
        CHECK(type_sensitive_bruteforce({closure}, 2, ctx).sensitive);
    }
    REQUIRE(check_lemma3(closure, disjoint, 8).holds);
    CHECK(type_sensitive_bruteforce({closure, disjoint}, 3, ctx).sensitive);
    CHECK(type_sensitive_bruteforce({closure, disjoint}, 4, ctx).sensitive);
}

TEST_CASE("non-monotonicity under relaxed alignment") {
    const StructureFamily f("bool", {s01({0})});
    const StructureFamily relaxed("bool", {s01({0}), s01({0, 1}, "bool_0_1_relaxed")});
    const ClassContext ctx{"bool", relaxed.find("bool_0_1_relaxed"), 1, {}, {}, 2};
    CHECK(type_sensitive_bruteforce({f}, 2, ctx).sensitive);
    const auto v = type_sensitive_bruteforce({relaxed}, 2, ctx);
    CHECK_FALSE(v.sensitive);
    REQUIRE(v.witness);
    CHECK(v.witness->read_address == 1);
}

TEST_CASE("reports serialize") {
    const auto j = to_json(check_lemma2(StructureFamily("bool", {s01()}), 4));
    CHECK(j.at("holds") == false);
    CHECK(j.at("counterexample").at("byte") == 0);
    const StructureFamily closure = permutation_closure(s01(), 256);
    const ClassContext ctx{"bool", closure.members().front(), 0, {}, {}, 2};
    const auto v = to_json(type_sensitive_bruteforce({closure}, 5, ctx));
    CHECK(v.at("verdict") == "NotSensitive");
    CHECK(v.at("witness").at("structure").at("id").is_string());
    CHECK(v.at("witness").at("modification").at("class") == 5);
}
