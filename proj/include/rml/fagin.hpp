#pragma once

#include "rml/machine.hpp"
#include "rml/metafinite.hpp"

namespace rml {

// Second-order variable plan of one compiled sentence. Tuples from A^m act
// as times, labels, and cell indices; C and the I_i are Boolean-valued
// weight variables of arity 2m, Z carries register contents (arity 2m), and
// E, S, P (arities 2, 3m, 3m) encode the linear order and the graphs of
// saturating addition and multiplication on A^m.
struct FaginLayout {
    int m = 1;
    int k_p = 0;
    int q = 0;
    int k = 0;
    std::vector<std::string> witness_names; // Y1..Yk
    std::string c_name = "C";
    std::vector<std::string> i_names;       // I0..I{k_p-1}
    std::string z_name = "Z";
    std::string e_name = "E";
    std::string s_name = "S";
    std::string p_name = "P";
};

struct ArithmeticFragments {
    SOFormulaPtr ordering;  // E encodes a linear order
    SOFormulaPtr summation; // S is the graph of saturating + on A^m under E
    SOFormulaPtr product;   // P is the graph of saturating x on A^m under E
};

// First-order fragments over the free second-order variables E, S, P.
ArithmeticFragments build_arithmetic(const MetafiniteVocabulary& mvoc, int m);

// input(E,S,P,Z): arithmetic plus the per-weight range/offset clauses and the
// trailing-zeros clause; satisfied exactly when Z : A^m -> R spells
// code(D) followed by zeros (whenever n^m exceeds the code length).
SOFormulaPtr build_input_formula(const MetafiniteVocabulary& mvoc, int m);

struct FaginOutput {
    SOFormulaPtr sentence;
    FaginLayout layout;
    TableauForm form;
    std::string quantifier_prefix;        // human-readable block description
    std::vector<SOFormulaPtr> updates;    // per-label update fragments
    SOFormulaPtr start;
    SOFormulaPtr accept;
};

// Emits the sentence whose models over the metafinite vocabulary are exactly
// the structures the machine accepts with the quantified witness weights,
// provided n^mm exceeds the machine's running time, every index-register
// value, every fixed register index, and the program length on the inputs
// considered.
FaginOutput compile_fagin(const Machine& m, const MetafiniteVocabulary& mvoc, int q, int k,
                          int mm, TableauForm form);

// Minimal admissible tuple width: the sum of the arities of all primary and
// weight symbols, witnesses included, and at least 1.
int fagin_min_width(const MetafiniteVocabulary& mvoc, int q, int k);

// Checks the construction's premises for one structure size and set of runs:
// every run halts in fewer than n^mm steps and no index register reaches
// n^mm. Budget errors propagate.
bool fagin_premises_ok(const Machine& m, const MetafiniteVocabulary& mvoc,
                       const MetafiniteStructure& d, int q, int k, int mm, long long budget);

// Structural audit: every update fragment carries the persistence clauses
// for untouched registers and the label-successor clause for non-branching
// instructions.
bool frame_conditions_check(const FaginOutput& out, const Machine& m);

// The honest interpretations (C, I_i, E, S, P, Z) read off an accepting or
// rejecting run of m on code(d, extra witness tables); evaluating the
// compiled matrix with them equals acceptance of that run.
std::map<std::string, WeightTable> trace_to_weights(const Machine& m,
                                                    const MetafiniteStructure& d,
                                                    const std::vector<WeightTable>& witnesses,
                                                    const FaginLayout& layout, long long budget);

bool so_structurally_equal(const SOFormula& a, const SOFormula& b);

} // namespace rml
