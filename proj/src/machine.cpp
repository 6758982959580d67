#include "rml/machine.hpp"

#include "rml/errors.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace rml {

namespace {

struct InstructionScan {
    int max_index_reg = -1;
    int max_z = 0;
    bool oracle = false;
};

void scan_instruction(const Instruction& ins, InstructionScan& s) {
    std::visit(
        [&](const auto& i) {
            using T = std::decay_t<decltype(i)>;
            if constexpr (std::is_same_v<T, AssignConst>) {
                s.max_z = std::max(s.max_z, i.dst);
            } else if constexpr (std::is_same_v<T, AssignFun>) {
                s.max_z = std::max(s.max_z, i.dst);
                for (int a : i.args) s.max_z = std::max(s.max_z, a);
            } else if constexpr (std::is_same_v<T, BranchEqZ>) {
                s.max_z = std::max({s.max_z, i.a, i.b});
            } else if constexpr (std::is_same_v<T, BranchRel>) {
                for (int a : i.args) s.max_z = std::max(s.max_z, a);
            } else if constexpr (std::is_same_v<T, CopyIndirect>) {
                s.max_index_reg = std::max({s.max_index_reg, i.dst_index_reg, i.src_index_reg});
            } else if constexpr (std::is_same_v<T, IncIndex>) {
                s.max_index_reg = std::max(s.max_index_reg, i.reg);
            } else if constexpr (std::is_same_v<T, DecIndex>) {
                s.max_index_reg = std::max(s.max_index_reg, i.reg);
            } else if constexpr (std::is_same_v<T, BranchEqI>) {
                s.max_index_reg = std::max({s.max_index_reg, i.a, i.b});
            } else if constexpr (std::is_same_v<T, QueryOracle>) {
                s.oracle = true;
            }
        },
        ins);
}

void check_target(int target, int last_label) {
    if (target < 0 || target > last_label)
        throw Error("dangling branch target " + std::to_string(target));
}

} // namespace

Program Program::from_instructions(std::vector<Instruction> instructions) {
    if (instructions.empty()) throw Error("program must end with stop");
    Program p;
    int last = static_cast<int>(instructions.size()) - 1;
    for (int i = 0; i < static_cast<int>(instructions.size()); ++i) {
        bool is_stop = std::holds_alternative<Stop>(instructions[i]);
        if (is_stop != (i == last))
            throw Error("stop must occur exactly once, as the last instruction");
    }
    InstructionScan scan;
    for (const auto& ins : instructions) {
        scan_instruction(ins, scan);
        std::visit(
            [&](const auto& i) {
                using T = std::decay_t<decltype(i)>;
                if constexpr (std::is_same_v<T, BranchEqZ> || std::is_same_v<T, BranchRel> ||
                              std::is_same_v<T, BranchEqI> || std::is_same_v<T, QueryOracle>) {
                    check_target(i.if_true, last);
                    check_target(i.if_false, last);
                }
            },
            ins);
    }
    p.instructions_ = std::move(instructions);
    p.k_p_ = std::max(1, scan.max_index_reg + 1);
    p.max_z_ = scan.max_z;
    p.uses_oracle_ = scan.oracle;
    return p;
}

namespace {

// One instruction per line: "<label>: <form>". Blank lines and '#' comments
// are skipped; labels must be dense from 0 and in order.
struct ProgParser {
    const Vocabulary& voc;
    size_t lineno = 0;

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(msg, lineno, 1);
    }

    int number(std::istringstream& in, const char* what) const {
        int v;
        in >> v;
        if (in.fail() || v < 0) fail(std::string("expected ") + what);
        return v;
    }

    // Reads "Z[<j>]" or "I[<j>]" or "Z[I[<j>]]" style operands from a token.
    static bool strip(std::string& s, const std::string& prefix, const std::string& suffix) {
        if (s.size() < prefix.size() + suffix.size()) return false;
        if (s.compare(0, prefix.size(), prefix) != 0) return false;
        if (s.compare(s.size() - suffix.size(), suffix.size(), suffix) != 0) return false;
        s = s.substr(prefix.size(), s.size() - prefix.size() - suffix.size());
        return true;
    }

    int reg_of(std::string tok, const std::string& prefix) const {
        if (!strip(tok, prefix + "[", "]")) fail("expected " + prefix + "[<j>]");
        try {
            int v = std::stoi(tok);
            if (v < 0) fail("negative register index");
            return v;
        } catch (const ParseError&) {
            throw;
        } catch (...) {
            fail("bad register index '" + tok + "'");
        }
    }

    Instruction parse_line(const std::string& body) const {
        std::istringstream in(body);
        std::string first;
        in >> first;
        if (first == "stop") return Stop{};
        if (first == "if") {
            std::string t1;
            in >> t1;
            if (t1 == "query") {
                std::string kw;
                int l1, l2;
                in >> kw >> l1;
                if (kw != "goto") fail("expected 'goto'");
                in >> kw >> l2;
                if (kw != "else") fail("expected 'else'");
                return QueryOracle{l1, l2};
            }
            if (t1.rfind("Z[", 0) == 0 || t1.rfind("I[", 0) == 0) {
                bool zreg = t1[0] == 'Z';
                int a = reg_of(t1, zreg ? "Z" : "I");
                std::string eq, t2;
                in >> eq >> t2;
                if (eq != "=") fail("expected '='");
                int b = reg_of(t2, zreg ? "Z" : "I");
                std::string kw;
                int l1, l2;
                in >> kw >> l1;
                if (kw != "goto") fail("expected 'goto'");
                in >> kw >> l2;
                if (kw != "else") fail("expected 'else'");
                if (zreg) return BranchEqZ{a, b, l1, l2};
                return BranchEqI{a, b, l1, l2};
            }
            // Relation branch: <P>(Z[i],...) goto l1 else l2
            size_t open = t1.find('(');
            std::string rest = t1;
            if (open == std::string::npos) {
                std::string more;
                in >> more;
                rest += more;
                open = rest.find('(');
                if (open == std::string::npos) fail("expected relation application");
            }
            // The argument list may contain spaces; gather until ')'.
            while (rest.find(')') == std::string::npos) {
                std::string more;
                if (!(in >> more)) fail("unbalanced relation application");
                rest += more;
            }
            std::string name = rest.substr(0, rest.find('('));
            auto arity = voc.relation_arity(name);
            if (!arity) fail("unknown relation symbol '" + name + "'");
            std::string argstr = rest.substr(rest.find('(') + 1, rest.find(')') - rest.find('(') - 1);
            std::vector<int> args;
            std::istringstream as(argstr);
            std::string item;
            while (std::getline(as, item, ',')) {
                std::string tok = item;
                args.push_back(reg_of(tok, "Z"));
            }
            if (static_cast<int>(args.size()) != *arity) fail("arity mismatch for relation " + name);
            std::string kw;
            int l1, l2;
            in >> kw >> l1;
            if (kw != "goto") fail("expected 'goto'");
            in >> kw >> l2;
            if (kw != "else") fail("expected 'else'");
            return BranchRel{name, std::move(args), l1, l2};
        }
        if (first.rfind("Z[I[", 0) == 0) {
            std::string tok = first;
            if (!strip(tok, "Z[I[", "]]")) fail("expected Z[I[<j>]]");
            int dst;
            try {
                dst = std::stoi(tok);
            } catch (...) {
                fail("bad register index");
            }
            std::string assign, src;
            in >> assign >> src;
            if (assign != ":=") fail("expected ':='");
            std::string stok = src;
            if (!strip(stok, "Z[I[", "]]")) fail("expected Z[I[<j>]] source");
            int s;
            try {
                s = std::stoi(stok);
            } catch (...) {
                fail("bad register index");
            }
            return CopyIndirect{dst, s};
        }
        if (first.rfind("Z[", 0) == 0) {
            int dst = reg_of(first, "Z");
            std::string assign;
            in >> assign;
            if (assign != ":=") fail("expected ':='");
            std::string rhs;
            std::getline(in, rhs);
            size_t b = rhs.find_first_not_of(" \t");
            if (b == std::string::npos) fail("missing right-hand side");
            rhs = rhs.substr(b, rhs.find_last_not_of(" \t") - b + 1);
            size_t open = rhs.find('(');
            if (open != std::string::npos && rhs.back() == ')' &&
                voc.function_arity(rhs.substr(0, open))) {
                std::string name = rhs.substr(0, open);
                int arity = *voc.function_arity(name);
                std::string argstr = rhs.substr(open + 1, rhs.size() - open - 2);
                std::vector<int> args;
                std::istringstream as(argstr);
                std::string item;
                while (std::getline(as, item, ',')) {
                    // trim
                    size_t s0 = item.find_first_not_of(" \t");
                    size_t s1 = item.find_last_not_of(" \t");
                    std::string tok = item.substr(s0, s1 - s0 + 1);
                    args.push_back(reg_of(tok, "Z"));
                }
                if (static_cast<int>(args.size()) != arity) fail("arity mismatch for function " + name);
                return AssignFun{dst, name, std::move(args)};
            }
            if (!voc.has_constant(rhs)) fail("unknown constant symbol '" + rhs + "'");
            // Normalize rational literals so constant scans compare cleanly.
            if (auto q = Rational::parse(rhs)) rhs = q->str();
            return AssignConst{dst, rhs};
        }
        if (first.rfind("I[", 0) == 0) {
            int reg = reg_of(first, "I");
            std::string assign, same, op, one;
            in >> assign >> same >> op >> one;
            if (assign != ":=") fail("expected ':='");
            std::string stok = same;
            if (!strip(stok, "I[", "]") || std::stoi(stok) != reg)
                fail("index update must be I[j] := I[j] +/- 1");
            if (one != "1") fail("index update must add or subtract 1");
            if (op == "+") return IncIndex{reg};
            if (op == "-") return DecIndex{reg};
            fail("expected '+' or '-'");
        }
        fail("unrecognized instruction '" + first + "'");
    }
};

} // namespace

Program Program::parse(const std::string& text, const Vocabulary& voc) {
    ProgParser pp{voc};
    std::istringstream in(text);
    std::string line;
    std::vector<Instruction> instructions;
    int expected_label = 0;
    while (std::getline(in, line)) {
        ++pp.lineno;
        size_t h = line.find('#');
        if (h != std::string::npos) line.erase(h);
        size_t b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        size_t colon = line.find(':', b);
        if (colon == std::string::npos) pp.fail("missing label");
        int label;
        try {
            label = std::stoi(line.substr(b, colon - b));
        } catch (...) {
            throw ParseError("bad label", pp.lineno, 1);
        }
        if (label != expected_label)
            throw ParseError("labels must be dense from 0; expected " + std::to_string(expected_label),
                             pp.lineno, 1);
        ++expected_label;
        instructions.push_back(pp.parse_line(line.substr(colon + 1)));
    }
    return from_instructions(std::move(instructions));
}

std::string Program::print() const {
    std::ostringstream out;
    for (size_t i = 0; i < instructions_.size(); ++i) {
        out << i << ": ";
        std::visit(
            [&](const auto& ins) {
                using T = std::decay_t<decltype(ins)>;
                if constexpr (std::is_same_v<T, AssignConst>) {
                    out << "Z[" << ins.dst << "] := " << ins.constant;
                } else if constexpr (std::is_same_v<T, AssignFun>) {
                    out << "Z[" << ins.dst << "] := " << ins.fn << "(";
                    for (size_t j = 0; j < ins.args.size(); ++j)
                        out << (j ? "," : "") << "Z[" << ins.args[j] << "]";
                    out << ")";
                } else if constexpr (std::is_same_v<T, BranchEqZ>) {
                    out << "if Z[" << ins.a << "] = Z[" << ins.b << "] goto " << ins.if_true
                        << " else " << ins.if_false;
                } else if constexpr (std::is_same_v<T, BranchRel>) {
                    out << "if " << ins.rel << "(";
                    for (size_t j = 0; j < ins.args.size(); ++j)
                        out << (j ? "," : "") << "Z[" << ins.args[j] << "]";
                    out << ") goto " << ins.if_true << " else " << ins.if_false;
                } else if constexpr (std::is_same_v<T, CopyIndirect>) {
                    out << "Z[I[" << ins.dst_index_reg << "]] := Z[I[" << ins.src_index_reg << "]]";
                } else if constexpr (std::is_same_v<T, IncIndex>) {
                    out << "I[" << ins.reg << "] := I[" << ins.reg << "] + 1";
                } else if constexpr (std::is_same_v<T, DecIndex>) {
                    out << "I[" << ins.reg << "] := I[" << ins.reg << "] - 1";
                } else if constexpr (std::is_same_v<T, BranchEqI>) {
                    out << "if I[" << ins.a << "] = I[" << ins.b << "] goto " << ins.if_true
                        << " else " << ins.if_false;
                } else if constexpr (std::is_same_v<T, Stop>) {
                    out << "stop";
                } else if constexpr (std::is_same_v<T, QueryOracle>) {
                    out << "if query goto " << ins.if_true << " else " << ins.if_false;
                }
            },
            instructions_[i]);
        out << "\n";
    }
    return out.str();
}

Machine::Machine(Program p, Structure s, std::optional<OracleFn> o)
    : program(std::move(p)), structure(std::move(s)), oracle(std::move(o)) {
    // Every symbol in the program must resolve in the structure's vocabulary.
    const Vocabulary& voc = structure.vocabulary();
    for (const auto& ins : program.instructions()) {
        std::visit(
            [&](const auto& i) {
                using T = std::decay_t<decltype(i)>;
                if constexpr (std::is_same_v<T, AssignConst>) {
                    if (!voc.has_constant(i.constant))
                        throw Error("program constant not in vocabulary: " + i.constant);
                } else if constexpr (std::is_same_v<T, AssignFun>) {
                    auto a = voc.function_arity(i.fn);
                    if (!a || *a != static_cast<int>(i.args.size()))
                        throw Error("program function not in vocabulary: " + i.fn);
                } else if constexpr (std::is_same_v<T, BranchRel>) {
                    auto a = voc.relation_arity(i.rel);
                    if (!a || *a != static_cast<int>(i.args.size()))
                        throw Error("program relation not in vocabulary: " + i.rel);
                }
            },
            ins);
    }
}

Element Configuration::z(long long i, const Structure& s) const {
    auto it = z_registers.find(i);
    if (it != z_registers.end()) return it->second;
    return s.zero();
}

Configuration initial_configuration(const ElementString& v, const Machine& m) {
    for (const auto& e : v)
        if (!m.structure.contains(e))
            throw Error("input element " + to_string(e) + " not in universe of " + m.structure.name());
    Configuration c;
    c.label = 0;
    c.index_registers.assign(m.program.index_registers(), 0);
    c.index_registers[0] = static_cast<long long>(v.size());
    for (size_t i = 0; i < v.size(); ++i) c.z_registers[static_cast<long long>(i)] = v[i];
    return c;
}

std::optional<Configuration> step(const Configuration& c, const Machine& m) {
    const Program& p = m.program;
    if (c.is_stop(p)) return std::nullopt;
    const Structure& s = m.structure;
    Configuration n = c;
    const Instruction& ins = p.instructions()[c.label];
    std::visit(
        [&](const auto& i) {
            using T = std::decay_t<decltype(i)>;
            if constexpr (std::is_same_v<T, AssignConst>) {
                n.z_registers[i.dst] = s.constant(i.constant);
                n.label = c.label + 1;
            } else if constexpr (std::is_same_v<T, AssignFun>) {
                std::vector<Element> args;
                args.reserve(i.args.size());
                for (int a : i.args) args.push_back(c.z(a, s));
                n.z_registers[i.dst] = s.apply(i.fn, args);
                n.label = c.label + 1;
            } else if constexpr (std::is_same_v<T, BranchEqZ>) {
                n.label = (c.z(i.a, s) == c.z(i.b, s)) ? i.if_true : i.if_false;
            } else if constexpr (std::is_same_v<T, BranchRel>) {
                std::vector<Element> args;
                args.reserve(i.args.size());
                for (int a : i.args) args.push_back(c.z(a, s));
                n.label = s.holds(i.rel, args) ? i.if_true : i.if_false;
            } else if constexpr (std::is_same_v<T, CopyIndirect>) {
                long long dst = c.index_registers[i.dst_index_reg];
                long long src = c.index_registers[i.src_index_reg];
                n.z_registers[dst] = c.z(src, s);
                n.label = c.label + 1;
            } else if constexpr (std::is_same_v<T, IncIndex>) {
                n.index_registers[i.reg]++;
                n.label = c.label + 1;
            } else if constexpr (std::is_same_v<T, DecIndex>) {
                if (n.index_registers[i.reg] > 0) n.index_registers[i.reg]--;
                n.label = c.label + 1;
            } else if constexpr (std::is_same_v<T, BranchEqI>) {
                n.label = (c.index_registers[i.a] == c.index_registers[i.b]) ? i.if_true : i.if_false;
            } else if constexpr (std::is_same_v<T, Stop>) {
                // unreachable: handled above
            } else if constexpr (std::is_same_v<T, QueryOracle>) {
                if (!m.oracle) throw Error("query instruction with no oracle attached");
                // The query string runs through index I[0] inclusive; note the
                // asymmetry with the output convention, which stops at
                // I[0]-1. Both follow their definitions literally.
                ElementString query;
                long long hi = c.index_registers[0];
                query.reserve(hi + 1);
                for (long long z = 0; z <= hi; ++z) query.push_back(c.z(z, s));
                n.label = (*m.oracle)(query) ? i.if_true : i.if_false;
            }
        },
        ins);
    return n;
}

RunResult run(const ElementString& v, const Machine& m, long long budget) {
    if (budget < 0) throw Error("negative budget");
    RunResult r;
    Configuration c = initial_configuration(v, m);
    r.trace.configurations.push_back(c);
    for (long long t = 0; t < budget; ++t) {
        auto next = step(c, m);
        if (!next) break;
        c = *next;
        r.trace.configurations.push_back(c);
    }
    r.trace.steps = static_cast<long long>(r.trace.configurations.size()) - 1;
    r.trace.halted = c.is_stop(m.program);
    if (r.trace.halted) {
        ElementString out;
        long long len = c.index_registers[0];
        out.reserve(len);
        for (long long i = 0; i < len; ++i) out.push_back(c.z(i, m.structure));
        r.output = std::move(out);
    }
    return r;
}

bool accepts(const ElementString& v, const Machine& m, long long budget) {
    RunResult r = run(v, m, budget);
    if (!r.output)
        throw BudgetError("machine exceeded budget " + std::to_string(budget) + " on " + to_string(v));
    return r.output->size() == 1 && (*r.output)[0] == m.structure.one();
}

ElementString pair_encode(const std::vector<ElementString>& parts, const Structure& s) {
    if (!s.classify().bipointed) throw Error("pairing needs a bipointed structure");
    Element zero = s.zero(), one = s.one();
    ElementString out;
    size_t total = 0;
    for (const auto& p : parts) total += p.size();
    out.reserve(2 * total);
    for (size_t j = 0; j < parts.size(); ++j) {
        if (j > 0 && parts[j].empty())
            throw Error("pair_encode: only the first part may be empty");
        for (size_t i = 0; i < parts[j].size(); ++i) {
            out.push_back(j > 0 && i == 0 ? one : zero);
            out.push_back(parts[j][i]);
        }
    }
    return out;
}

std::vector<ElementString> pair_decode(const ElementString& w, int count, const Structure& s) {
    if (count < 1) throw Error("pair_decode: part count must be positive");
    Element zero = s.zero(), one = s.one();
    if (w.size() % 2 != 0) throw Error("pair_decode: malformed separators (odd length)");
    std::vector<ElementString> parts(1);
    for (size_t i = 0; i < w.size(); i += 2) {
        const Element& sep = w[i];
        if (sep == one) {
            parts.emplace_back();
        } else if (!(sep == zero)) {
            throw Error("pair_decode: malformed separator " + to_string(sep));
        }
        parts.back().push_back(w[i + 1]);
    }
    if (static_cast<int>(parts.size()) != count)
        throw Error("pair_decode: wrong part count (found " + std::to_string(parts.size()) +
                    ", expected " + std::to_string(count) + ")");
    return parts;
}

namespace {

bool verify_rec(const ElementString& v, const Machine& m, int q, int k, bool existential,
                std::vector<ElementString>& parts, long long budget) {
    if (k == 0) {
        ElementString input = parts.size() == 1 ? v : pair_encode(parts, m.structure);
        return accepts(input, m, budget);
    }
    const auto& universe = m.structure.universe();
    // Enumerate witness strings in R^q lexicographically.
    std::vector<int> idx(q, 0);
    for (;;) {
        ElementString w;
        w.reserve(q);
        for (int i = 0; i < q; ++i) w.push_back(universe[idx[i]]);
        parts.push_back(std::move(w));
        bool r = verify_rec(v, m, q, k - 1, !existential, parts, budget);
        parts.pop_back();
        if (existential && r) return true;
        if (!existential && !r) return false;
        int i = q - 1;
        while (i >= 0 && ++idx[i] == static_cast<int>(universe.size())) idx[i--] = 0;
        if (i < 0) break;
    }
    return !existential;
}

} // namespace

bool verify_quantified(const ElementString& v, const Machine& m, int q, int k,
                       bool first_existential, long long budget) {
    if (!m.structure.is_finite())
        throw BackendError("witness search needs a finite universe, got " + m.structure.name());
    if (k > 0 && q < 1) throw Error("witness length must be positive");
    std::vector<ElementString> parts{v};
    return verify_rec(v, m, q, k, first_existential, parts, budget);
}

bool verify_sigma_k(const ElementString& v, const Machine& m, int q, int k, long long budget) {
    return verify_quantified(v, m, q, k, true, budget);
}

ConstantAnalysis analyze_constants(const Machine& m) {
    ConstantAnalysis out;
    std::set<std::string> seen;
    for (const auto& ins : m.program.instructions()) {
        if (const auto* a = std::get_if<AssignConst>(&ins)) {
            if (a->constant != "0" && a->constant != "1" && seen.insert(a->constant).second)
                out.machine_constants.push_back(a->constant);
        }
    }
    out.constant_free = out.machine_constants.empty();
    return out;
}

} // namespace rml
