#pragma once

#include "rml/structure.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace rml {

// The ten instruction forms. Register indices are fixed nonnegative integers;
// branch targets are labels of the containing program.
struct AssignConst { int dst; std::string constant; };
struct AssignFun { int dst; std::string fn; std::vector<int> args; };
struct BranchEqZ { int a, b; int if_true, if_false; };
struct BranchRel { std::string rel; std::vector<int> args; int if_true, if_false; };
struct CopyIndirect { int dst_index_reg, src_index_reg; };     // Z[I[dst]] := Z[I[src]]
struct IncIndex { int reg; };
struct DecIndex { int reg; };                                   // monus
struct BranchEqI { int a, b; int if_true, if_false; };
struct Stop {};
struct QueryOracle { int if_true, if_false; };                  // (Z[0..I[0]]) in Q?

using Instruction = std::variant<AssignConst, AssignFun, BranchEqZ, BranchRel, CopyIndirect,
                                 IncIndex, DecIndex, BranchEqI, Stop, QueryOracle>;

// A labeled instruction sequence 0..l_P whose single stop instruction is
// last. k_P is the number of index registers: 1 + the largest index-register
// index used, and at least 1 so the input length always has a home.
class Program {
public:
    static Program from_instructions(std::vector<Instruction> instructions);
    static Program parse(const std::string& text, const Vocabulary& voc);

    const std::vector<Instruction>& instructions() const { return instructions_; }
    int last_label() const { return static_cast<int>(instructions_.size()) - 1; }
    int index_registers() const { return k_p_; }
    bool uses_oracle() const { return uses_oracle_; }

    // The largest fixed Z-register index occurring in any instruction.
    int max_z_register() const { return max_z_; }

    std::string print() const;

private:
    Program() = default;
    std::vector<Instruction> instructions_;
    int k_p_ = 1;
    int max_z_ = 0;
    bool uses_oracle_ = false;
};

// Oracle decision callback on element strings; must be pure.
using OracleFn = std::function<bool(const ElementString&)>;

// A program paired with the structure interpreting its symbols and an
// optional oracle for query instructions.
struct Machine {
    Program program;
    Structure structure;
    std::optional<OracleFn> oracle;

    Machine(Program p, Structure s, std::optional<OracleFn> o = std::nullopt);
};

// Machine state snapshot. R-registers (`z`) are sparse and default to the
// interpretation of the constant 0; only cells that have been touched or
// loaded appear in the map.
struct Configuration {
    int label = 0;
    std::vector<long long> index_registers;
    std::map<long long, Element> z_registers;

    Element z(long long i, const Structure& s) const;
    bool is_stop(const Program& p) const { return label == p.last_label(); }
};

struct Trace {
    std::vector<Configuration> configurations;
    bool halted = false;
    long long steps = 0;
};

struct RunResult {
    std::optional<ElementString> output; // absent when the budget ran out
    Trace trace;
};

Configuration initial_configuration(const ElementString& v, const Machine& m);

// Single transition; absent on a stop configuration. Throws on a query
// instruction when no oracle is attached.
std::optional<Configuration> step(const Configuration& c, const Machine& m);

// Runs up to `budget` steps from the initial configuration on v. On halt the
// output is (Z[0], ..., Z[I[0]-1]).
RunResult run(const ElementString& v, const Machine& m, long long budget);

// Acceptance: output is exactly (1).
bool accepts(const ElementString& v, const Machine& m, long long budget);

// Pairing codec: (v, w_1, ..., w_k) becomes one string in which every payload
// element is preceded by a separator slot, 0 within an entry and 1 at an
// entry boundary. Parts after the first must be nonempty.
ElementString pair_encode(const std::vector<ElementString>& parts, const Structure& s);
std::vector<ElementString> pair_decode(const ElementString& w, int count, const Structure& s);

// Decides (Q_1 w_1 in R^q) ... (Q_k w_k in R^q) M(pair_encode(v, w...)) = 1 by
// nested exhaustive search; the prefix starts existentially. k = 0 is plain
// acceptance of v. Budget exhaustion on any branch raises BudgetError.
bool verify_sigma_k(const ElementString& v, const Machine& m, int q, int k, long long budget);

// Same with a caller-chosen leading quantifier (used by the oracle module for
// Pi-style predicates).
bool verify_quantified(const ElementString& v, const Machine& m, int q, int k,
                       bool first_existential, long long budget);

struct ConstantAnalysis {
    std::vector<std::string> machine_constants; // constants other than 0 and 1
    bool constant_free;
};

ConstantAnalysis analyze_constants(const Machine& m);

// ---------------------------------------------------------------------------
// Turing-machine front end

// Single one-directional tape, alphabet {0,1} with 0 as the blank symbol.
// Moving left at cell 0 stays in place. The output of a run is the first |v|
// tape cells after halting.
struct TuringMachine {
    struct Action {
        std::string next_state;
        unsigned write; // 0 or 1
        bool move_right;
    };
    std::vector<std::string> states;
    std::string start;
    std::vector<std::string> halt_states;
    std::map<std::pair<std::string, unsigned>, Action> delta;

    static TuringMachine parse(const std::string& text);
    void validate() const; // every (non-halt state, bit) needs a row
};

struct TmRun {
    std::optional<std::vector<unsigned>> output; // first |v| cells; absent if step cap hit
    long long steps = 0;
};

// Reference simulator for the Turing machine itself.
TmRun simulate_turing(const TuringMachine& tm, const std::vector<unsigned>& input, long long max_steps);

// Compiles the machine to a program over any bipointed vocabulary: tape cell
// i lives in Z[i+3], Z[0] is a read scratch cell, Z[1]/Z[2] hold the
// constants 1/0, and each simulated step costs at most kTuringOverhead
// program steps after an O(|v|) prologue/epilogue that shifts the tape.
Program compile_turing(const TuringMachine& tm);

inline constexpr long long kTuringOverhead = 8;

// Step bound sufficient for a compiled run: overhead per TM step plus the
// shift prologue/epilogue, both linear in the input length.
long long compiled_turing_budget(long long tm_steps, long long input_len);

} // namespace rml
