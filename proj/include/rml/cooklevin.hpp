#pragma once

#include "rml/logic.hpp"
#include "rml/machine.hpp"

namespace rml {

// Cell-to-variable map of one tableau. Rows are times 0..T; W is the bit
// width of encoded labels and index-register values. Variable ids are
// assigned S-bits first, then I-bits grouped by (j,p,t), then Z cells
// row-major by (t,i); witness slots are the odd row-0 cells starting at
// a(j) = 2(n+(j-1)q).
struct TableauLayout {
    long long T = 0;
    int W = 0;
    int k_p = 0;
    long long n = 0; // input length
    int q = 0;
    int k = 0;

    int s_var(int p, long long t) const;                 // p in 1..W, t in 0..T
    int i_var(int j, int p, long long t) const;          // j in 0..k_p-1
    int z_var(long long i, long long t) const;           // i in 0..T-1
    int total_vars() const;
    long long witness_base(int j) const;                 // a(j), j in 1..k
};

enum class TableauForm { Conjunctive, Implicative };

struct CookLevinOutput {
    FormulaPtr phi;                         // quantifier-free matrix
    std::vector<std::vector<int>> witness_vars; // k blocks of q variable ids
    std::vector<int> aux_vars;              // all remaining variable ids
    TableauLayout layout;
    TableauForm form;
    size_t atoms = 0;                       // atom count of phi
    // Closed-form polynomial bound on the atom count, asserted in tests.
    static size_t atom_bound(const TableauLayout& layout, const Program& p);
};

// Emits the quantifier-free tableau formula for runs of m on inputs
// pair(v, w_1..w_k) within T steps: start ∧ update ∧ accept, or the
// implication (start ∧ update) -> accept. Witness cells of row 0 are left
// free; everything else in row 0 is pinned. For k = 0 the input is v itself
// with no pairing prefix.
CookLevinOutput compile_tableau(const Machine& m, const ElementString& v, int q, int k,
                                long long T, TableauForm form);

// Alternating prenex closure: exists-block over witnesses 1, forall over 2,
// ..., with the auxiliary variables absorbed into the final block. Requires
// the conjunctive form when k is odd or zero and the implicative form when k
// is even and positive.
FormulaPtr assemble_sigma_k(const CookLevinOutput& out);

// Tight step bound for the tableau: the exact runtime over all witness
// tuples, raised so that every index-register value, every fixed register
// index, the input cells, and the program labels fit.
long long tableau_bound(const Machine& m, const ElementString& v, int q, int k, long long budget);

// Assignment extracted from an actual trace (padded with its stop frame up
// to row T): evaluating the conjunctive matrix on it yields acceptance.
ElementString trace_to_assignment(const Trace& trace, const TableauLayout& layout,
                                  const Structure& s);

// True iff v is Boolean and the machine is constant-free, in which case the
// compiled formula's constants all lie in {0,1} (checked by AST scan).
bool boolean_fragment_check(const CookLevinOutput& out, const Machine& m, const ElementString& v);

} // namespace rml
