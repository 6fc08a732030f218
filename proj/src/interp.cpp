#include "udts/interp.hpp"

#include <algorithm>

#include "udts/error.hpp"
#include "udts/parallel.hpp"

namespace udts {

const Decl* Program::find(const std::string& var) const {
    for (const Decl& d : decls) {
        if (d.var == var) {
            return &d;
        }
    }
    return nullptr;
}

std::vector<std::string> Program::types() const {
    std::set<std::string> out;
    for (const Decl& d : decls) {
        out.insert(d.type);
    }
    for (const Statement& st : stmts) {
        if (const auto* r = std::get_if<ReadAs>(&st)) {
            out.insert(r->type);
        }
    }
    return {out.begin(), out.end()};
}

const char* outcome_name(const OutcomeKind k) noexcept {
    switch (k) {
    case OutcomeKind::terminated: return "terminated";
    case OutcomeKind::stuck: return "stuck";
    case OutcomeKind::inadmissible: return "inadmissible";
    }
    return "terminated";
}

const char* stuck_reason_name(const StuckReason r) noexcept {
    switch (r) {
    case StuckReason::undefined_decode: return "UndefinedDecode";
    case StuckReason::assert_failed: return "AssertFailed";
    case StuckReason::unknown_value_used: return "UnknownValueUsed";
    }
    return "UndefinedDecode";
}

namespace {

// Who last wrote a cell.
struct Provenance {
    bool typed = false;
    std::string type;
    Address base = 0;
    std::optional<std::size_t> step;
};

[[noreturn]] void ill_formed(const std::string& what) { throw Error(Errc::ill_formed_program, what); }

class Machine {
  public:
    Machine(const Program& p, const StructureChoice& choice, const Memory& m0)
        : p_(p), choice_(choice), m_(m0), prov_(m0.size()) {}

    RunResult execute() {
        for (const Decl& d : p_.decls) {
            const SemanticStructure& s = structure(d.type);
            if (d.addr + s.size() > m_.size()) {
                ill_formed("window of '" + d.var + "' lies outside memory");
            }
            if (!s.aligned(d.addr)) {
                out_.kind = OutcomeKind::inadmissible;
                out_.detail = "'" + d.var + "' at " + std::to_string(d.addr) + " is not aligned for " + s.id();
                return finish();
            }
        }
        if (!m_.free_bits().empty()) {
            for (const auto& [type, s] : choice_.assignment()) {
                if (s && s->protected_bit()) {
                    m_ = m_.resolve_protected_bit(s->protected_bit()->target).second;
                }
            }
        }
        for (std::size_t i = 0; i < p_.stmts.size(); ++i) {
            step_ = i;
            const bool go_on = std::visit([this](const auto& st) { return exec(st); }, p_.stmts[i]);
            if (!go_on) {
                return finish();
            }
        }
        out_.kind = OutcomeKind::terminated;
        return finish();
    }

  private:
    RunResult finish() { return RunResult{std::move(out_), std::move(m_)}; }

    const SemanticStructure& structure(const std::string& type) const {
        const StructurePtr s = choice_.find(type);
        if (!s) {
            ill_formed("no structure chosen for type '" + type + "'");
        }
        return *s;
    }

    const Decl& decl(const std::string& var) const {
        const Decl* d = p_.find(var);
        if (d == nullptr) {
            ill_formed("unbound variable '" + var + "'");
        }
        return *d;
    }

    void mark(const Address a, const std::size_t n, const Provenance& pv) {
        for (std::size_t i = 0; i < n; ++i) {
            prov_[a + i] = pv;
        }
    }

    bool stuck(const StuckReason reason, std::string detail, const std::optional<std::size_t> cause = {}) {
        out_.kind = OutcomeKind::stuck;
        out_.step = step_;
        out_.reason = reason;
        out_.cause_step = cause;
        out_.detail = std::move(detail);
        return false;
    }

    bool inadmissible(std::string detail) {
        out_.kind = OutcomeKind::inadmissible;
        out_.step = step_;
        out_.detail = std::move(detail);
        return false;
    }

    bool exec(const WriteTyped& w) {
        const Decl& d = decl(w.var);
        const SemanticStructure& s = structure(d.type);
        if (!s.has_value(w.value)) {
            ill_formed("value '" + w.value.tag + "' not representable by " + s.id());
        }
        const Encoded enc = s.variant() == Variant::plain ? s.encode(w.value) : s.encode(w.value, d.addr);
        m_ = m_.write_bytes(d.addr, enc.bytes);
        if (s.uses_bit_at(d.addr)) {
            m_ = m_.with_overlay_bit(s.protected_bit()->target, enc.bit);
        }
        mark(d.addr, s.size(), Provenance{true, d.type, d.addr, step_});
        return true;
    }

    // Decodes the window of `d` with the structure for `as_type`.
    std::optional<ReadRecord> read(const Decl& d, const std::string& as_type) {
        const SemanticStructure& s = structure(as_type);
        if (d.addr + s.size() > m_.size()) {
            ill_formed("read of '" + d.var + "' as " + as_type + " leaves memory");
        }
        const BitValue bit = s.uses_bit_at(d.addr) ? m_.read_bit(s.protected_bit()->target) : BitValue{};
        ReadRecord rec{step_, d.var, decode_cells(s, m_.read(d.addr, s.size()), d.addr, bit), as_type != d.type};
        std::optional<std::size_t> cause;
        for (Address x = d.addr; x < d.addr + s.size(); ++x) {
            const Provenance& pv = prov_[x];
            rec.tainted = rec.tainted || !pv.typed || pv.type != d.type || pv.base != d.addr;
            if (pv.step && (!cause || *pv.step > *cause)) {
                cause = pv.step;
            }
        }
        out_.reads.push_back(rec);
        if (rec.result.status == ReadStatus::undefined) {
            stuck(StuckReason::undefined_decode, "decoding '" + d.var + "' with " + s.id() + " is undefined", cause);
            return std::nullopt;
        }
        return rec;
    }

    bool exec(const ReadTyped& r) {
        const Decl& d = decl(r.var);
        return read(d, d.type).has_value();
    }

    bool exec(const ReadAs& r) { return read(decl(r.var), r.type).has_value(); }

    bool exec(const AssertValue& av) {
        const Decl& d = decl(av.var);
        const auto rec = read(d, d.type);
        if (!rec) {
            return false;
        }
        if (rec->result.status == ReadStatus::unknown_value) {
            return stuck(StuckReason::unknown_value_used, "'" + av.var + "' holds an unknown value");
        }
        if (rec->result.value != av.value) {
            return stuck(StuckReason::assert_failed,
                         "'" + av.var + "' is '" + rec->result.value->tag + "', expected '" + av.value.tag + "'");
        }
        return true;
    }

    bool exec(const ByteCopy& c) {
        if (c.src + c.n > m_.size() || c.dst + c.n > m_.size()) {
            ill_formed("byte copy outside memory");
        }
        const std::vector<Cell> cells = m_.read(c.src, c.n);
        m_ = m_.write(c.dst, cells);
        mark(c.dst, c.n, Provenance{false, {}, 0, step_});
        return true;
    }

    bool exec(const HardwareEffect& h) {
        MemoryModification mod = h.mod;
        if (const auto* copy = std::get_if<BitCopy>(&mod.payload)) {
            const auto rebound = rebind_copy(mod, structure(copy->type_name));
            if (!rebound) {
                return inadmissible("bit-copy source cannot be encoded by the chosen " + copy->type_name +
                                    " structure");
            }
            mod = *rebound;
        }
        if (mod.end > m_.size()) {
            ill_formed("hardware effect outside memory");
        }
        m_ = apply_modification(m_, mod);
        mark(mod.begin, mod.length(), Provenance{false, {}, 0, step_});
        return true;
    }

    const Program& p_;
    const StructureChoice& choice_;
    Memory m_;
    std::vector<Provenance> prov_;
    Outcome out_;
    std::size_t step_ = 0;
};

} // namespace

RunResult run(const Program& p, const StructureChoice& choice, const Memory& m0) {
    return Machine(p, choice, m0).execute();
}

Verdict verify(const Program& p, const std::vector<StructureFamily>& families, const Memory& m0, const std::size_t cap) {
    std::vector<const StructureFamily*> fams;
    for (const StructureFamily& f : families) {
        fams.push_back(&f);
    }
    std::sort(fams.begin(), fams.end(),
              [](const StructureFamily* a, const StructureFamily* b) { return a->type_name() < b->type_name(); });
    for (std::size_t i = 1; i < fams.size(); ++i) {
        if (fams[i]->type_name() == fams[i - 1]->type_name()) {
            throw Error(Errc::invalid_argument, "two families for type '" + fams[i]->type_name() + "'");
        }
    }
    for (const std::string& t : p.types()) {
        if (std::none_of(fams.begin(), fams.end(), [&](const StructureFamily* f) { return f->type_name() == t; })) {
            throw Error(Errc::ill_formed_program, "no family for type '" + t + "'");
        }
    }
    std::size_t total = 1;
    for (const StructureFamily* f : fams) {
        if (f->size() > cap / total) {
            throw Error(Errc::cap_exceeded, "more than " + std::to_string(cap) + " structure choices");
        }
        total *= f->size();
    }

    auto choice_at = [&](std::size_t index) {
        std::map<std::string, StructurePtr> assignment;
        for (std::size_t k = fams.size(); k-- > 0;) {
            assignment[fams[k]->type_name()] = fams[k]->members()[index % fams[k]->size()];
            index /= fams[k]->size();
        }
        return assignment;
    };

    const auto outcomes = parallel_map<std::optional<Outcome>>(total, [&](const std::size_t i) -> std::optional<Outcome> {
        const auto assignment = choice_at(i);
        if (!StructureChoice::admissible(assignment)) {
            return std::nullopt;
        }
        return run(p, StructureChoice(assignment), m0).outcome;
    });

    Verdict v;
    v.choices = total;
    for (std::size_t i = 0; i < total; ++i) {
        const auto& o = outcomes[i];
        if (!o || o->kind == OutcomeKind::inadmissible) {
            ++v.inadmissible;
            continue;
        }
        if (o->kind == OutcomeKind::stuck) {
            v.verified = false;
            v.choice = StructureChoice(choice_at(i));
            v.outcome = *o;
            break;
        }
        if (!v.tainted_read) {
            for (const ReadRecord& r : o->reads) {
                if (r.tainted) {
                    v.tainted_choice = StructureChoice(choice_at(i));
                    v.tainted_read = r;
                    break;
                }
            }
        }
    }
    return v;
}

// ---------------------------------------------------------------------------
// Case study

Program build_case_study(const CaseStudyVariant variant) {
    Program p;
    p.decls = {
        {"current", "TCB*", 0},     {"sender_tcb", "TCB", 1}, {"sender_priority", "uchar", 2},
        {"sender_mr", "uchar", 3},  {"receiver_tcb", "TCB", 4}, {"receiver_mr", "uchar", 5},
        {"prio_tail", "TCB*", 6},
    };
    auto& s = p.stmts;
    s.emplace_back(WriteTyped{"current", "sender"_v});
    s.emplace_back(WriteTyped{"sender_tcb", "ready"_v});
    s.emplace_back(WriteTyped{"sender_priority", "2"_v});
    if (variant == CaseStudyVariant::buggy_same_address) {
        s.emplace_back(WriteTyped{"receiver_tcb", "ready"_v});
        s.emplace_back(WriteTyped{"prio_tail", "null"_v});
        // The receiver's bytes are saved, the object changes state, and the
        // stale bytes are copied back over it.
        s.emplace_back(ByteCopy{5, 4, 1});
        s.emplace_back(WriteTyped{"receiver_tcb", "queued"_v});
        s.emplace_back(ByteCopy{4, 5, 1});
    } else {
        s.emplace_back(WriteTyped{"sender_mr", "1"_v});
        s.emplace_back(WriteTyped{"receiver_tcb", "queued"_v});
        s.emplace_back(WriteTyped{"prio_tail", "null"_v});
        // memcpy of the message: from the sender's message register, or in
        // the buggy version from the sender's TCB.
        if (variant == CaseStudyVariant::fixed) {
            s.emplace_back(ByteCopy{5, 3, 1});
        } else {
            s.emplace_back(ByteCopy{4, 1, 1});
        }
    }
    // Enqueue the sender at the tail of its priority list.
    s.emplace_back(ReadTyped{"current"});
    s.emplace_back(ReadTyped{"sender_priority"});
    s.emplace_back(ReadTyped{"prio_tail"});
    s.emplace_back(WriteTyped{"prio_tail", "sender"_v});
    s.emplace_back(WriteTyped{"sender_tcb", "queued"_v});
    s.emplace_back(ReadTyped{"receiver_tcb"});
    if (variant == CaseStudyVariant::fixed) {
        s.emplace_back(AssertValue{"receiver_mr", "1"_v});
    }
    return p;
}

Program build_case_study(const bool buggy) {
    return build_case_study(buggy ? CaseStudyVariant::buggy : CaseStudyVariant::fixed);
}

namespace {

StructurePtr pair_structure(const std::string& id, const ByteSpace& space, const Value& a, const Byte ba,
                            const Value& b, const Byte bb, const std::set<Address>& addrs) {
    EncodeTable enc{{{0, a}, {ba}}, {{0, b}, {bb}}};
    DecodeTable dec{{{0, {ba}}, a}, {{0, {bb}}, b}};
    return make_table_structure(id, space, {a, b}, addrs, 1, Variant::plain, enc, dec);
}

} // namespace

std::vector<StructureFamily> case_study_families(const bool plain_tcb) {
    const ByteSpace space(4);
    std::vector<StructureFamily> out;
    if (plain_tcb) {
        out.emplace_back("TCB", std::vector<StructurePtr>{
                                    pair_structure("tcb_0_1", space, "ready"_v, 0, "queued"_v, 1, {1, 4}),
                                    pair_structure("tcb_2_3", space, "ready"_v, 2, "queued"_v, 3, {1, 4}),
                                });
    } else {
        out.push_back(make_protected_family(space, {"ready"_v, "queued"_v}, {1, 4},
                                            {BitAddress{6, 1}, BitAddress{7, 0}}, "TCB"));
    }
    out.emplace_back("TCB*", std::vector<StructurePtr>{
                                 pair_structure("ptr_0_1", space, "null"_v, 0, "sender"_v, 1, {0, 6}),
                                 pair_structure("ptr_2_3", space, "null"_v, 2, "sender"_v, 3, {0, 6}),
                             });
    out.emplace_back("uchar", std::vector<StructurePtr>{make_total_uint(space, 1, {2, 3, 5}, "uchar_binary")});
    return out;
}

Memory case_study_memory() {
    return Memory(ByteSpace(4), 8).with_free_bits({BitAddress{7, 0}, BitAddress{7, 1}}, BitAddress{7, 1});
}

Program program_from_witness(const SensitivityWitness& w, const std::string& type_name) {
    Program p;
    p.decls.push_back(Decl{"x", type_name, w.read_address});
    if (w.history) {
        p.stmts.emplace_back(WriteTyped{"x", *w.history});
    }
    p.stmts.emplace_back(HardwareEffect{w.modification});
    p.stmts.emplace_back(ReadTyped{"x"});
    return p;
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json to_json(const Program& p) {
    nlohmann::json decls = nlohmann::json::array();
    for (const Decl& d : p.decls) {
        decls.push_back({{"var", d.var}, {"type", d.type}, {"addr", d.addr}});
    }
    nlohmann::json stmts = nlohmann::json::array();
    for (const Statement& st : p.stmts) {
        stmts.push_back(std::visit(
            [](const auto& s) -> nlohmann::json {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, WriteTyped>) {
                    return {{"op", "write"}, {"var", s.var}, {"value", s.value.tag}};
                } else if constexpr (std::is_same_v<S, ReadTyped>) {
                    return {{"op", "read"}, {"var", s.var}};
                } else if constexpr (std::is_same_v<S, ReadAs>) {
                    return {{"op", "read_as"}, {"var", s.var}, {"type", s.type}};
                } else if constexpr (std::is_same_v<S, ByteCopy>) {
                    return {{"op", "bytecopy"}, {"dst", s.dst}, {"src", s.src}, {"n", s.n}};
                } else if constexpr (std::is_same_v<S, HardwareEffect>) {
                    return {{"op", "hw"}, {"mod", to_json(s.mod)}};
                } else {
                    return {{"op", "assert"}, {"var", s.var}, {"value", s.value.tag}};
                }
            },
            st));
    }
    return {{"decls", decls}, {"stmts", stmts}};
}

Program program_from_json(const nlohmann::json& j) {
    try {
        Program p;
        for (const auto& d : j.at("decls")) {
            p.decls.push_back(Decl{d.at("var").get<std::string>(), d.at("type").get<std::string>(),
                                   d.at("addr").get<Address>()});
        }
        for (const auto& s : j.at("stmts")) {
            const auto op = s.at("op").get<std::string>();
            if (op == "write") {
                p.stmts.emplace_back(WriteTyped{s.at("var").get<std::string>(), Value{s.at("value").get<std::string>()}});
            } else if (op == "read") {
                p.stmts.emplace_back(ReadTyped{s.at("var").get<std::string>()});
            } else if (op == "read_as") {
                p.stmts.emplace_back(ReadAs{s.at("var").get<std::string>(), s.at("type").get<std::string>()});
            } else if (op == "bytecopy") {
                p.stmts.emplace_back(
                    ByteCopy{s.at("dst").get<Address>(), s.at("src").get<Address>(), s.at("n").get<std::size_t>()});
            } else if (op == "hw") {
                p.stmts.emplace_back(HardwareEffect{modification_from_json(s.at("mod"))});
            } else if (op == "assert") {
                p.stmts.emplace_back(AssertValue{s.at("var").get<std::string>(), Value{s.at("value").get<std::string>()}});
            } else {
                throw Error(Errc::ill_formed_program, "unknown statement op '" + op + "'");
            }
        }
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::parse_error, e.what());
    }
}

nlohmann::json to_json(const StructureChoice& c) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [type, s] : c.assignment()) {
        j[type] = s->id();
    }
    return j;
}

namespace {

nlohmann::json read_json(const ReadRecord& r) {
    nlohmann::json j{{"step", r.step}, {"var", r.var}, {"status", read_status_name(r.result.status)},
                     {"tainted", r.tainted}};
    if (r.result.value) {
        j["value"] = r.result.value->tag;
    }
    return j;
}

} // namespace

nlohmann::json to_json(const Outcome& o) {
    nlohmann::json j{{"kind", outcome_name(o.kind)}, {"detail", o.detail}};
    if (o.kind != OutcomeKind::terminated) {
        j["step"] = o.step;
    }
    if (o.reason) {
        j["reason"] = stuck_reason_name(*o.reason);
    }
    if (o.cause_step) {
        j["cause_step"] = *o.cause_step;
    }
    nlohmann::json reads = nlohmann::json::array();
    for (const ReadRecord& r : o.reads) {
        reads.push_back(read_json(r));
    }
    j["reads"] = reads;
    return j;
}

nlohmann::json to_json(const Verdict& v) {
    nlohmann::json j{{"verdict", v.verified ? "Verified" : "Fails"},
                     {"choices", v.choices},
                     {"inadmissible", v.inadmissible}};
    if (v.choice) {
        j["choice"] = to_json(*v.choice);
    }
    if (v.outcome) {
        j["outcome"] = to_json(*v.outcome);
    }
    if (v.tainted_choice && v.tainted_read) {
        j["tainted_read"] = {{"choice", to_json(*v.tainted_choice)}, {"read", read_json(*v.tainted_read)}};
    }
    return j;
}

} // namespace udts
