#include "rml/machine.hpp"

#include "rml/errors.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace rml {

TuringMachine TuringMachine::parse(const std::string& text) {
    TuringMachine tm;
    std::istringstream in(text);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t h = line.find('#');
        if (h != std::string::npos) line.erase(h);
        size_t b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        size_t e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);
        if (line.rfind("states:", 0) == 0) {
            std::istringstream ls(line.substr(7));
            std::string s;
            while (ls >> s) tm.states.push_back(s);
        } else if (line.rfind("start:", 0) == 0) {
            std::istringstream ls(line.substr(6));
            ls >> tm.start;
        } else if (line.rfind("halt:", 0) == 0) {
            std::istringstream ls(line.substr(5));
            std::string s;
            while (ls >> s) tm.halt_states.push_back(s);
        } else if (line[0] == '(') {
            // (<state>,<bit>) -> (<state'>,<bit'>,<L|R>)
            size_t arrow = line.find("->");
            if (arrow == std::string::npos) throw ParseError("expected '->'", lineno, 1);
            auto inner = [&](const std::string& part) {
                size_t open = part.find('(');
                size_t close = part.find(')');
                if (open == std::string::npos || close == std::string::npos)
                    throw ParseError("expected parenthesized tuple", lineno, 1);
                std::vector<std::string> items;
                std::istringstream ps(part.substr(open + 1, close - open - 1));
                std::string item;
                while (std::getline(ps, item, ',')) {
                    size_t s0 = item.find_first_not_of(" \t");
                    size_t s1 = item.find_last_not_of(" \t");
                    items.push_back(item.substr(s0, s1 - s0 + 1));
                }
                return items;
            };
            auto lhs = inner(line.substr(0, arrow));
            auto rhs = inner(line.substr(arrow + 2));
            if (lhs.size() != 2 || rhs.size() != 3) throw ParseError("bad transition row", lineno, 1);
            if (lhs[1] != "0" && lhs[1] != "1") throw ParseError("bad read bit", lineno, 1);
            if (rhs[1] != "0" && rhs[1] != "1") throw ParseError("bad write bit", lineno, 1);
            if (rhs[2] != "L" && rhs[2] != "R") throw ParseError("bad direction", lineno, 1);
            Action a{rhs[0], rhs[1] == "1" ? 1u : 0u, rhs[2] == "R"};
            tm.delta[{lhs[0], lhs[1] == "1" ? 1u : 0u}] = a;
        } else {
            throw ParseError("unrecognized line '" + line + "'", lineno, 1);
        }
    }
    if (tm.start.empty()) throw ParseError("missing start state");
    if (tm.states.empty()) {
        // Derive the state list from the rows when not declared.
        std::set<std::string> seen;
        seen.insert(tm.start);
        for (const auto& h2 : tm.halt_states) seen.insert(h2);
        for (const auto& [k, a] : tm.delta) {
            seen.insert(k.first);
            seen.insert(a.next_state);
        }
        tm.states.assign(seen.begin(), seen.end());
    }
    tm.validate();
    return tm;
}

void TuringMachine::validate() const {
    auto is_halt = [&](const std::string& s) {
        return std::find(halt_states.begin(), halt_states.end(), s) != halt_states.end();
    };
    if (std::find(states.begin(), states.end(), start) == states.end())
        throw Error("start state not in state list");
    for (const auto& s : states) {
        if (is_halt(s)) continue;
        for (unsigned b = 0; b <= 1; ++b)
            if (!delta.count({s, b}))
                throw Error("missing transition entry for (" + s + "," + std::to_string(b) + ")");
    }
    for (const auto& [k, a] : delta) {
        if (std::find(states.begin(), states.end(), k.first) == states.end() ||
            std::find(states.begin(), states.end(), a.next_state) == states.end())
            throw Error("transition row uses undeclared state");
        if (is_halt(k.first)) throw Error("halt state has outgoing transition: " + k.first);
    }
}

TmRun simulate_turing(const TuringMachine& tm, const std::vector<unsigned>& input, long long max_steps) {
    auto is_halt = [&](const std::string& s) {
        return std::find(tm.halt_states.begin(), tm.halt_states.end(), s) != tm.halt_states.end();
    };
    std::vector<unsigned> tape = input;
    std::string state = tm.start;
    size_t head = 0;
    TmRun r;
    while (!is_halt(state)) {
        if (r.steps >= max_steps) return r; // output absent
        if (head >= tape.size()) tape.resize(head + 1, 0);
        unsigned bit = tape[head];
        const auto& a = tm.delta.at({state, bit});
        tape[head] = a.write;
        if (a.move_right) {
            ++head;
        } else if (head > 0) {
            --head; // moving left at cell 0 stays
        }
        state = a.next_state;
        ++r.steps;
    }
    if (tape.size() < input.size()) tape.resize(input.size(), 0);
    r.output = std::vector<unsigned>(tape.begin(), tape.begin() + input.size());
    return r;
}

namespace {

// Tiny assembler: instructions with symbolic branch targets patched at the
// end. Target "@next" means fall-through (label + 1).
struct Asm {
    std::vector<Instruction> code;
    std::map<std::string, int> labels;
    std::vector<std::tuple<int, std::string, bool>> fixups; // (pc, label, true=if_true)

    int pc() const { return static_cast<int>(code.size()); }
    void mark(const std::string& name) { labels[name] = pc(); }

    void emit(Instruction ins) { code.push_back(std::move(ins)); }

    void branch_i(int a, int b, const std::string& t, const std::string& f) {
        fixups.emplace_back(pc(), t, true);
        fixups.emplace_back(pc(), f, false);
        code.push_back(BranchEqI{a, b, -1, -1});
    }
    void branch_z(int a, int b, const std::string& t, const std::string& f) {
        fixups.emplace_back(pc(), t, true);
        fixups.emplace_back(pc(), f, false);
        code.push_back(BranchEqZ{a, b, -1, -1});
    }
    void jump(const std::string& t) { branch_i(0, 0, t, t); }

    std::vector<Instruction> link() {
        for (auto& [at, label, is_true] : fixups) {
            auto it = labels.find(label);
            if (it == labels.end()) throw Error("assembler: unknown label " + label);
            std::visit(
                [&](auto& ins) {
                    using T = std::decay_t<decltype(ins)>;
                    if constexpr (std::is_same_v<T, BranchEqI> || std::is_same_v<T, BranchEqZ>) {
                        if (is_true) ins.if_true = it->second;
                        else ins.if_false = it->second;
                    }
                },
                code[at]);
        }
        return std::move(code);
    }
};

} // namespace

// Register plan: I[0] input length (preserved; doubles as output length),
// I[1] head pointer / shift destination, I[2] shift source, I[3] constant 0,
// I[4] constant 1 (points at Z[1]), I[5] constant 2 (points at Z[2]),
// I[6] constant 3 (leftmost tape cell). Z[0] read scratch, Z[1] = 1,
// Z[2] = 0, tape cell i in Z[i+3].
Program compile_turing(const TuringMachine& tm) {
    tm.validate();
    auto is_halt = [&](const std::string& s) {
        return std::find(tm.halt_states.begin(), tm.halt_states.end(), s) != tm.halt_states.end();
    };
    auto next_label = [&](const std::string& state) {
        return is_halt(state) ? std::string("epilogue") : "state_" + state;
    };

    Asm a;
    // Prologue: shift the input right by 3 cells, highest cell first.
    a.mark("start");
    a.branch_i(0, 3, "no_shift", "shift_setup");
    a.mark("shift_setup");
    // I[2] := n-1 : increment to n then decrement once.
    a.mark("src_up");
    a.branch_i(2, 0, "src_done", "src_inc");
    a.mark("src_inc");
    a.emit(IncIndex{2});
    a.jump("src_up");
    a.mark("src_done");
    a.emit(DecIndex{2});
    // I[1] := n+2 : increment to n, then two more.
    a.mark("dst_up");
    a.branch_i(1, 0, "dst_done", "dst_inc");
    a.mark("dst_inc");
    a.emit(IncIndex{1});
    a.jump("dst_up");
    a.mark("dst_done");
    a.emit(IncIndex{1});
    a.emit(IncIndex{1});
    a.mark("copy");
    a.emit(CopyIndirect{1, 2}); // Z[I[1]] := Z[I[2]]
    a.branch_i(2, 3, "shift_done", "copy_next");
    a.mark("copy_next");
    a.emit(DecIndex{2});
    a.emit(DecIndex{1});
    a.jump("copy");
    a.mark("no_shift");
    // Empty input: head must still start at cell 0 = Z[3].
    a.emit(IncIndex{1});
    a.emit(IncIndex{1});
    a.emit(IncIndex{1});
    a.jump("init");
    a.mark("shift_done");
    // After the copy loop the destination pointer sits at 3 already.
    a.mark("init");
    a.emit(AssignConst{1, "1"});
    a.emit(AssignConst{2, "0"});
    a.emit(IncIndex{4});                       // I[4] = 1
    a.emit(IncIndex{5});
    a.emit(IncIndex{5});                       // I[5] = 2
    a.emit(IncIndex{6});
    a.emit(IncIndex{6});
    a.emit(IncIndex{6});                       // I[6] = 3
    a.jump(next_label(tm.start));

    for (const auto& s : tm.states) {
        if (is_halt(s)) continue;
        a.mark("state_" + s);
        a.emit(CopyIndirect{3, 1}); // Z[I[3]] = Z[0] := tape[head]
        a.branch_z(0, 1, "s1_" + s, "s0_" + s);
        for (unsigned bit = 0; bit <= 1; ++bit) {
            a.mark((bit ? "s1_" : "s0_") + s);
            const auto& act = tm.delta.at({s, bit});
            a.emit(CopyIndirect{1, act.write ? 4 : 5}); // write bit via Z[1]/Z[2]
            if (act.move_right) {
                a.emit(IncIndex{1});
                a.jump(next_label(act.next_state));
            } else {
                // Move left, staying put at the leftmost cell.
                a.branch_i(1, 6, (bit ? "mv1_" : "mv0_") + s + "_stay",
                           (bit ? "mv1_" : "mv0_") + s + "_dec");
                a.mark((bit ? "mv1_" : "mv0_") + s + "_dec");
                a.emit(DecIndex{1});
                a.jump(next_label(act.next_state));
                a.mark((bit ? "mv1_" : "mv0_") + s + "_stay");
                a.jump(next_label(act.next_state));
            }
        }
    }

    // Epilogue: shift tape cells [3, 3+n) back down to [0, n).
    a.mark("epilogue");
    a.mark("ep_reset");
    a.branch_i(1, 3, "ep_src", "ep_dec");
    a.mark("ep_dec");
    a.emit(DecIndex{1});
    a.jump("ep_reset");
    a.mark("ep_src");
    // I[1] = 3 is the copy source; I[2] counts the destination from 0.
    a.mark("ep_reset2");
    a.branch_i(2, 3, "ep_copy", "ep_dec2");
    a.mark("ep_dec2");
    a.emit(DecIndex{2});
    a.jump("ep_reset2");
    a.mark("ep_copy");
    a.branch_i(2, 0, "ep_done", "ep_c2");
    a.mark("ep_c2");
    a.emit(CopyIndirect{2, 1}); // Z[I[2]] := Z[I[1]]
    a.emit(IncIndex{1});
    a.emit(IncIndex{2});
    a.jump("ep_copy");
    a.mark("ep_done");
    a.emit(Stop{});

    return Program::from_instructions(a.link());
}

long long compiled_turing_budget(long long tm_steps, long long input_len) {
    return kTuringOverhead * tm_steps + 16 * input_len + 80;
}

} // namespace rml
