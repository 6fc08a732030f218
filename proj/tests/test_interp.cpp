#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>

#include "udts/error.hpp"
#include "udts/interp.hpp"
#include "udts/parallel.hpp"

using namespace udts;

namespace {

const ByteSpace r4(4);

StructurePtr s01() { return make_bool_pair(1, 0, r4, {0, 1}, "bool_0_1"); }
StructurePtr s23() { return make_bool_pair(3, 2, r4, {0, 1}, "bool_2_3"); }

StructureChoice choose(StructurePtr s) { return StructureChoice({{"bool", std::move(s)}}); }

Program single_read(std::vector<Statement> before) {
    Program p{{Decl{"x", "bool", 0}}, std::move(before)};
    p.stmts.emplace_back(ReadTyped{"x"});
    return p;
}

} // namespace

TEST_CASE("write then read terminates with the written value") {
    const Program p = single_read({WriteTyped{"x", "true"_v}});
    const RunResult r = run(p, choose(s01()), Memory(r4, 2));
    CHECK(r.outcome.kind == OutcomeKind::terminated);
    REQUIRE(r.outcome.reads.size() == 1);
    CHECK(r.outcome.reads.front().result.value == "true"_v);
    CHECK_FALSE(r.outcome.reads.front().tainted);
    CHECK(r.memory.at(0) == Cell::concrete(1));
}

TEST_CASE("uninitialized reads") {
    const Program p = single_read({});
    const RunResult r = run(p, choose(s01()), Memory(r4, 2));
    CHECK(r.outcome.kind == OutcomeKind::stuck);
    CHECK(r.outcome.reason == StuckReason::undefined_decode);
    CHECK(r.outcome.step == 0);
    // A total decoder cannot detect it; the read yields an unknown value.
    const RunResult g = run(p, choose(make_bool_total(r4, {0, 1})), Memory(r4, 2));
    CHECK(g.outcome.kind == OutcomeKind::terminated);
    REQUIRE(g.outcome.reads.size() == 1);
    CHECK(g.outcome.reads.front().result.status == ReadStatus::unknown_value);
    CHECK(g.outcome.reads.front().tainted);
    // Asserting on it gets stuck.
    Program q = p;
    q.stmts.emplace_back(AssertValue{"x", "true"_v});
    const RunResult a = run(q, choose(make_bool_total(r4, {0, 1})), Memory(r4, 2));
    CHECK(a.outcome.kind == OutcomeKind::stuck);
    CHECK(a.outcome.reason == StuckReason::unknown_value_used);
}

TEST_CASE("ill-formed programs") {
    const Program p{{Decl{"x", "bool", 0}}, {ReadTyped{"y"}}};
    CHECK_THROWS_AS((void)run(p, choose(s01()), Memory(r4, 2)), Error);
    const Program q{{Decl{"x", "char", 0}}, {ReadTyped{"x"}}};
    CHECK_THROWS_AS((void)run(q, choose(s01()), Memory(r4, 2)), Error);
}

TEST_CASE("unaligned declarations are inadmissible") {
    const Program p{{Decl{"x", "bool", 1}}, {WriteTyped{"x", "true"_v}}};
    const RunResult r = run(p, choose(make_bool_pair(1, 0, r4, {0}, "b")), Memory(r4, 2));
    CHECK(r.outcome.kind == OutcomeKind::inadmissible);
}

TEST_CASE("verify: uninitialized read fails") {
    const Verdict v = verify(single_read({}), {StructureFamily("bool", {s01(), s23()})}, Memory(r4, 2), 64);
    CHECK_FALSE(v.verified);
    REQUIRE(v.outcome);
    CHECK(v.outcome->kind == OutcomeKind::stuck);
    CHECK(v.choices == 2);
}

TEST_CASE("verify: constant fill over a bool is caught by some choice") {
    const MemoryModification zero{0, 1, ConstantFill{0}, 2};
    const Program p = single_read({WriteTyped{"x", "false"_v}, HardwareEffect{zero}});
    const Verdict v = verify(p, {StructureFamily("bool", {s01(), s23()})}, Memory(r4, 2), 64);
    CHECK_FALSE(v.verified);
    REQUIRE(v.choice);
    CHECK(v.choice->find("bool")->id() == "bool_2_3");
    CHECK(v.outcome->cause_step == 1);
    // With s01 alone the fill looks like `false`.
    const Verdict alone = verify(p, {StructureFamily("bool", {s01()})}, Memory(r4, 2), 64);
    CHECK(alone.verified);
    REQUIRE(alone.tainted_read);
    CHECK(alone.tainted_read->result.value == "false"_v);
}

TEST_CASE("verify: caps and missing families") {
    const Program p = single_read({WriteTyped{"x", "true"_v}});
    try {
        (void)verify(p, {StructureFamily("bool", {s01(), s23()})}, Memory(r4, 2), 1);
        FAIL("expected CapExceeded");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::cap_exceeded);
    }
    try {
        (void)verify(p, {StructureFamily("char", {s01()})}, Memory(r4, 2), 8);
        FAIL("expected IllFormedProgram");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::ill_formed_program);
    }
}

TEST_CASE("ByteCopy moves cells but never the overlay") {
    const Memory m0 = Memory(r4, to_cells(ByteList{1, 2, 3, 0})).with_free_bits({{3, 0}, {3, 1}}, {3, 1});
    const Memory marked = m0.with_overlay_bit({0, 0}, true);
    const Program p{{}, {ByteCopy{2, 0, 2}}};
    const RunResult r = run(p, StructureChoice{}, marked);
    CHECK(r.outcome.kind == OutcomeKind::terminated);
    CHECK(r.memory.at(2) == Cell::concrete(1));
    CHECK(r.memory.at(3) == Cell::concrete(2));
    CHECK(r.memory.overlay() == marked.overlay());
    CHECK(r.memory.read_bit({0, 0}) == true);
    CHECK(r.memory.read_bit({2, 1}) == false);
}

TEST_CASE("case study") {
    const auto families = case_study_families();
    const Memory m0 = case_study_memory();

    const Verdict fixed = verify(build_case_study(CaseStudyVariant::fixed), families, m0, 4096);
    CHECK(fixed.verified);

    const Verdict buggy = verify(build_case_study(CaseStudyVariant::buggy), families, m0, 4096);
    REQUIRE_FALSE(buggy.verified);
    CHECK(buggy.outcome->kind == OutcomeKind::stuck);
    CHECK(buggy.outcome->reason == StuckReason::undefined_decode);
    CHECK(buggy.outcome->step == 12);
    CHECK(buggy.outcome->cause_step == 6);

    // The failing choice replays to the same stuck step.
    const RunResult replay = run(build_case_study(true), *buggy.choice, m0);
    CHECK(replay.outcome.kind == OutcomeKind::stuck);
    CHECK(replay.outcome.step == buggy.outcome->step);

    const Verdict same = verify(build_case_study(CaseStudyVariant::buggy_same_address), families, m0, 4096);
    REQUIRE_FALSE(same.verified);
    CHECK(same.outcome->step == 13);
    CHECK(same.outcome->cause_step == 7);

    // Plain TCB encodings miss the bug; the read is only reported as tainted.
    const auto plain = case_study_families(true);
    const Verdict missed = verify(build_case_study(true), plain, m0, 4096);
    CHECK(missed.verified);
    CHECK(missed.tainted_read);
}

TEST_CASE("verification is deterministic across worker counts") {
    const auto families = case_study_families();
    const Memory m0 = case_study_memory();
    const Program p = build_case_study(true);
    const std::string first = to_json(verify(p, families, m0, 4096)).dump();
    for (const char* workers : {"1", "3", "8"}) {
        ::setenv("UDTS_WORKERS", workers, 1);
        CHECK(worker_count() == static_cast<std::size_t>(std::atoi(workers)));
        CHECK(to_json(verify(p, families, m0, 4096)).dump() == first);
    }
    ::unsetenv("UDTS_WORKERS");
}

TEST_CASE("program JSON round trip") {
    for (const auto variant : {CaseStudyVariant::fixed, CaseStudyVariant::buggy, CaseStudyVariant::buggy_same_address}) {
        const Program p = build_case_study(variant);
        const auto j = to_json(p);
        CHECK(to_json(program_from_json(j)) == j);
    }
    Program p = single_read({HardwareEffect{MemoryModification{0, 1, UnknownFill{}, 1}}, ReadAs{"x", "uchar"}});
    CHECK(to_json(program_from_json(to_json(p))) == to_json(p));
    CHECK_THROWS_AS((void)program_from_json(nlohmann::json{{"decls", 3}}), Error);
}

TEST_CASE("witness programs replay") {
    const StructureFamily closure = permutation_closure(make_bool_pair(1, 0, r4, {0}, "bool_0_1"), 256);
    const ClassContext ctx{"bool", closure.members().front(), 0, {}, {}, 2};
    const auto v = type_sensitive_bruteforce({closure}, 5, ctx);
    REQUIRE(v.witness);
    const Program p = program_from_witness(*v.witness, "bool");
    const Verdict verdict = verify(p, {closure}, Memory(r4, 2), 4096);
    CHECK(verdict.verified);
    const RunResult r = run(p, StructureChoice({{"bool", v.witness->structure}}), Memory(r4, 2));
    CHECK(r.outcome.kind == OutcomeKind::terminated);
}
