#include "udts/cli.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "udts/error.hpp"
#include "udts/interp.hpp"
#include "udts/sensitivity.hpp"

namespace udts {

std::vector<std::string> builtin_family_names() {
    return {"gcc-bool", "bool01", "bool-pairs", "plain-closure", "address", "protected", "uint", "tcb"};
}

StructureFamily builtin_family(const std::string& name, const unsigned radix, const std::uint64_t seed,
                               const std::size_t mem_size) {
    const ByteSpace space(radix);
    const auto s01 = [&](std::set<Address> addrs) { return make_bool_pair(1, 0, space, std::move(addrs), "bool_0_1"); };
    if (name == "gcc-bool") {
        return StructureFamily("bool", {make_bool_total(space)});
    }
    if (name == "bool01") {
        return StructureFamily("bool", {s01({0})});
    }
    if (name == "bool-pairs") {
        return StructureFamily("bool", {s01({0}), make_bool_pair(2, 3, space, {0}, "bool_2_3")});
    }
    if (name == "plain-closure") {
        return permutation_closure(s01({0}), 1U << 16, "bool");
    }
    if (name == "address") {
        return make_address_family(s01({0, 1}), seed, 0, "bool");
    }
    if (name == "protected") {
        if (mem_size < 3) {
            throw Error(Errc::invalid_argument, "the protected family needs at least 3 memory cells");
        }
        return make_protected_family(space, {"false"_v, "true"_v}, {0, 1}, {BitAddress{mem_size - 1, 0}}, "bool");
    }
    if (name == "uint") {
        return StructureFamily("uint", {make_total_uint(space, 1, {0, 1})});
    }
    if (name == "tcb") {
        return case_study_families(false).front();
    }
    throw Error(Errc::invalid_argument, "unknown builtin family '" + name + "'");
}

namespace {

struct Common {
    unsigned radix = 4;
    std::size_t mem = 8;
    std::size_t cap = 4096;
    std::size_t addr_bound = 8;
    std::uint64_t seed = 1;
    std::string json_out;
};

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(Errc::parse_error, "cannot open '" + path + "'");
    }
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::parse_error, "'" + path + "': " + e.what());
    }
}

StructureFamily load_family(const std::string& builtin, const std::string& file, const Common& c) {
    if (!file.empty()) {
        return family_from_json(read_json_file(file)).to_family();
    }
    return builtin_family(builtin, c.radix, c.seed, c.mem);
}

nlohmann::json families_json(const std::vector<StructureFamily>& fams) {
    nlohmann::json out = nlohmann::json::array();
    for (const StructureFamily& f : fams) {
        out.push_back(family_to_json(f));
    }
    return out;
}

std::vector<StructureFamily> families_from_json(const nlohmann::json& j) {
    std::vector<StructureFamily> out;
    for (const auto& f : j) {
        out.push_back(family_from_json(f).to_family());
    }
    return out;
}

void emit(const nlohmann::json& report, const Common& c, std::ostream& out) {
    const std::string text = report.dump(2);
    out << text << "\n";
    if (!c.json_out.empty()) {
        std::ofstream f(c.json_out);
        if (!f) {
            throw Error(Errc::parse_error, "cannot write '" + c.json_out + "'");
        }
        f << text << "\n";
    }
}

StructureChoice choice_from_json(const nlohmann::json& j, const std::vector<StructureFamily>& fams) {
    std::map<std::string, StructurePtr> assignment;
    for (const auto& [type, id] : j.items()) {
        const auto it = std::find_if(fams.begin(), fams.end(),
                                     [&](const StructureFamily& f) { return f.type_name() == type; });
        if (it == fams.end() || !it->find(id.get<std::string>())) {
            throw Error(Errc::parse_error, "choice names unknown structure '" + id.get<std::string>() + "'");
        }
        assignment[type] = it->find(id.get<std::string>());
    }
    // Types the recorded choice leaves open take their first member.
    for (const StructureFamily& f : fams) {
        assignment.try_emplace(f.type_name(), f.members().front());
    }
    return StructureChoice(assignment);
}

int cmd_family(const std::string& builtin, const std::string& file, const Common& c, std::ostream& out) {
    FamilyDescription desc;
    if (!file.empty()) {
        desc = family_from_json(read_json_file(file));
    } else {
        const StructureFamily f = builtin_family(builtin.empty() ? "bool-pairs" : builtin, c.radix, c.seed, c.mem);
        desc = FamilyDescription{f.type_name(), f.members(), f.common_values()};
    }
    nlohmann::json members = nlohmann::json::array();
    bool ok = !desc.members.empty();
    for (const StructurePtr& m : desc.members) {
        const WellformedReport r = check_wellformed(*m);
        nlohmann::json violations = nlohmann::json::array();
        for (const Violation& v : r.violations) {
            violations.push_back({{"rule", v.rule}, {"detail", v.detail}});
        }
        members.push_back({{"id", m->id()}, {"ok", r.ok()}, {"violations", violations}});
        ok = ok && r.ok();
    }
    nlohmann::json report{{"command", "family"}, {"type", desc.type_name}, {"ok", ok}, {"members", members}};
    if (ok) {
        report["family"] = family_to_json(desc.to_family());
    }
    emit(report, c, out);
    return ok ? kExitPass : kExitViolation;
}

struct SensitivityArgs {
    std::string family = "bool-pairs";
    std::string family_file;
    std::string foreign = "uint";
    std::string foreign_file;
    std::vector<int> lemmas;
    std::vector<int> classes;
    std::optional<Address> read_addr;
    std::vector<Address> sources;
    std::size_t slice_bound = 2;
    bool slices = false;
};

int cmd_sensitivity(const SensitivityArgs& a, const Common& c, std::ostream& out) {
    const StructureFamily f = load_family(a.family, a.family_file, c);
    const StructureFamily fu = load_family(a.foreign, a.foreign_file, c);
    if (fu.type_name() == f.type_name()) {
        throw Error(Errc::invalid_argument, "the foreign family must have a different type");
    }
    nlohmann::json report{{"command", "sensitivity"},
                          {"config",
                           {{"radix", c.radix}, {"mem", c.mem}, {"addr_bound", c.addr_bound}, {"seed", c.seed},
                            {"slice_bound", a.slice_bound}}},
                          {"family", family_to_json(f)},
                          {"foreign", family_to_json(fu)}};
    bool pass = true;
    nlohmann::json lemmas = nlohmann::json::array();
    for (const int n : a.lemmas) {
        LemmaReport r;
        switch (n) {
        case 1: r = check_lemma1(f, c.addr_bound); break;
        case 2: r = check_lemma2(f, c.addr_bound); break;
        case 3: r = check_lemma3(f, fu, c.addr_bound, Lemma3Options{a.slices, a.slice_bound}); break;
        case 4: r = check_lemma4(f, c.addr_bound); break;
        default: throw Error(Errc::invalid_argument, "lemma must lie in 1..4");
        }
        pass = pass && r.holds;
        lemmas.push_back(to_json(r));
    }
    report["lemmas"] = lemmas;

    nlohmann::json oracle = nlohmann::json::array();
    for (const int cls : a.classes) {
        const StructurePtr reader = f.members().front();
        ClassContext ctx{f.type_name(), reader, a.read_addr.value_or(*reader->addresses().begin()), {fu},
                         a.sources, a.slice_bound};
        const SensitivityVerdict v = type_sensitive_bruteforce({f, fu}, cls, ctx, c.cap * 16);
        nlohmann::json j = to_json(v);
        if (v.witness) {
            const Program p = program_from_witness(*v.witness, f.type_name());
            std::size_t size = v.witness->read_address + v.witness->structure->size();
            size = std::max(size, v.witness->modification.end);
            for (const StructurePtr& m : f.members()) {
                if (m->protected_bit()) {
                    size = std::max(size, m->protected_bit()->target.byte_addr + 1);
                }
                for (const Address x : m->addresses()) {
                    size = std::max(size, x + m->size());
                }
            }
            j["replay"] = {{"program", to_json(p)},
                           {"families", families_json({f, fu})},
                           {"memory", to_json(Memory(f.space(), size))},
                           {"choice", {{f.type_name(), v.witness->structure->id()}}}};
        }
        pass = pass && v.sensitive;
        oracle.push_back(j);
    }
    report["oracle"] = oracle;
    report["pass"] = pass;
    emit(report, c, out);
    return pass ? kExitPass : kExitViolation;
}

struct VerifyArgs {
    std::string program_file;
    std::string memory_file;
    std::vector<std::string> builtins;
    std::vector<std::string> family_files;
    bool case_study = false;
    bool buggy = false;
    bool same_address = false;
    bool plain_tcb = false;
    std::string replay;
};

int cmd_replay(const std::string& path, const Common& c, std::ostream& out) {
    const nlohmann::json rep = read_json_file(path);
    // Sensitivity reports hold one replay record per oracle entry; use the first.
    nlohmann::json r;
    if (rep.contains("replay")) {
        r = rep.at("replay");
    } else if (rep.contains("oracle")) {
        for (const auto& o : rep.at("oracle")) {
            if (o.contains("replay")) {
                r = o.at("replay");
                break;
            }
        }
    }
    if (r.is_null()) {
        throw Error(Errc::parse_error, "'" + path + "' holds no replay record");
    }
    const Program p = program_from_json(r.at("program"));
    const std::vector<StructureFamily> fams = families_from_json(r.at("families"));
    const Memory m0 = memory_from_json(r.at("memory"));
    const StructureChoice choice = choice_from_json(r.value("choice", nlohmann::json::object()), fams);
    const RunResult res = run(p, choice, m0);
    const Verdict all = verify(p, fams, m0, c.cap);
    nlohmann::json report{{"command", "replay"},
                          {"choice", to_json(choice)},
                          {"outcome", to_json(res.outcome)},
                          {"verify", to_json(all)}};
    emit(report, c, out);
    return res.outcome.kind == OutcomeKind::stuck ? kExitViolation : kExitPass;
}

int cmd_verify(const VerifyArgs& a, const Common& c, std::ostream& out) {
    if (!a.replay.empty()) {
        return cmd_replay(a.replay, c, out);
    }
    Program p;
    std::vector<StructureFamily> fams;
    Memory m0(ByteSpace(c.radix), c.mem);
    if (a.case_study) {
        const CaseStudyVariant variant = !a.buggy          ? CaseStudyVariant::fixed
                                         : a.same_address ? CaseStudyVariant::buggy_same_address
                                                          : CaseStudyVariant::buggy;
        p = build_case_study(variant);
        fams = case_study_families(a.plain_tcb);
        m0 = case_study_memory();
    } else {
        if (a.program_file.empty()) {
            throw Error(Errc::invalid_argument, "verify needs --program FILE, --case-study or --replay FILE");
        }
        p = program_from_json(read_json_file(a.program_file));
        for (const std::string& b : a.builtins) {
            fams.push_back(builtin_family(b, c.radix, c.seed, c.mem));
        }
        for (const std::string& f : a.family_files) {
            fams.push_back(family_from_json(read_json_file(f)).to_family());
        }
        if (!a.memory_file.empty()) {
            m0 = memory_from_json(read_json_file(a.memory_file));
        }
    }
    const Verdict v = verify(p, fams, m0, c.cap);
    nlohmann::json report = to_json(v);
    report["command"] = "verify";
    nlohmann::json replay{{"program", to_json(p)}, {"families", families_json(fams)}, {"memory", to_json(m0)}};
    if (v.choice) {
        replay["choice"] = to_json(*v.choice);
    } else if (v.tainted_choice) {
        replay["choice"] = to_json(*v.tainted_choice);
    }
    report["replay"] = replay;
    emit(report, c, out);
    return v.verified ? kExitPass : kExitViolation;
}

int exit_code_for(const Errc code) {
    switch (code) {
    case Errc::cap_exceeded:
    case Errc::bound_exceeded: return kExitCap;
    default: return kExitInput;
    }
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Underspecified data-type semantics: families, sensitivity checks and verification"};
    app.require_subcommand(1);
    Common c;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--radix", c.radix, "Number of distinct byte values")->check(CLI::Range(2, 256));
        sub->add_option("--mem", c.mem, "Memory size in cells")->check(CLI::PositiveNumber);
        sub->add_option("--cap", c.cap, "Maximum number of structure choices")->check(CLI::PositiveNumber);
        sub->add_option("--addr-bound", c.addr_bound, "Addresses checked by the lemma checks");
        sub->add_option("--seed", c.seed, "Seed for generated families");
        sub->add_option("--json", c.json_out, "Also write the report to this file");
    };

    std::string fam_builtin;
    std::string fam_file;
    auto* family = app.add_subcommand("family", "Check a family for well-formedness");
    add_common(family);
    family->add_option("--builtin", fam_builtin, "Built-in family name");
    family->add_option("--family-file", fam_file, "Family description file");

    SensitivityArgs sa;
    auto* sens = app.add_subcommand("sensitivity", "Run lemma checks and the sensitivity oracle");
    add_common(sens);
    sens->add_option("--family,--builtin", sa.family, "Built-in family under test");
    sens->add_option("--family-file", sa.family_file, "Family description file under test");
    sens->add_option("--foreign", sa.foreign, "Built-in family of a different type");
    sens->add_option("--foreign-file", sa.foreign_file, "Family file of a different type");
    sens->add_option("--lemma", sa.lemmas, "Lemma check to run (1-4), repeatable")->check(CLI::Range(1, 4));
    sens->add_option("--class", sa.classes, "Error class for the oracle (1-5), repeatable")->check(CLI::Range(1, 5));
    sens->add_option("--read-addr", sa.read_addr, "Address of the typed read");
    sens->add_option("--source-addr", sa.sources, "Class-5 source address, repeatable");
    sens->add_option("--slice-bound", sa.slice_bound, "Representations concatenated for class 4");
    sens->add_flag("--slices", sa.slices, "Lemma 3 over slices of foreign representations");

    VerifyArgs va;
    auto* ver = app.add_subcommand("verify", "Verify a program under every structure choice");
    add_common(ver);
    ver->add_option("--program", va.program_file, "Program file");
    ver->add_option("--memory", va.memory_file, "Initial memory file");
    ver->add_option("--builtin", va.builtins, "Built-in family, repeatable");
    ver->add_option("--family-file", va.family_files, "Family description file, repeatable");
    ver->add_flag("--case-study", va.case_study, "Use the scheduler case study");
    ver->add_flag("--buggy", va.buggy, "Case study with the erroneous memcpy");
    ver->add_flag("--same-address", va.same_address, "Buggy case study copying stale bytes back in place");
    ver->add_flag("--plain-tcb", va.plain_tcb, "Case study with plain TCB encodings");
    ver->add_option("--replay", va.replay, "Re-run the witness recorded in a report");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitPass : kExitInput;
    }
    try {
        if (family->parsed()) {
            if (sens->parsed() || ver->parsed()) {
                return kExitInput;
            }
            return cmd_family(fam_builtin, fam_file, c, out);
        }
        if (sens->parsed()) {
            if (sa.lemmas.empty() && sa.classes.empty()) {
                err << "sensitivity: give at least one --lemma or --class\n";
                return kExitInput;
            }
            return cmd_sensitivity(sa, c, out);
        }
        return cmd_verify(va, c, out);
    } catch (const Error& e) {
        err << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        err << e.what() << "\n";
        return kExitInput;
    }
}

} // namespace udts
