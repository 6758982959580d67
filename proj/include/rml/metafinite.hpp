#pragma once

#include "rml/formula.hpp"
#include "rml/logic.hpp"
#include "rml/soformula.hpp"

#include <map>

namespace rml {

// Total weight table A^k -> R with values on lexicographically ordered
// tuples of the canonical primary order.
struct WeightTable {
    int arity = 0;
    std::vector<Element> values; // size n^arity

    const Element& at(std::span<const long long> tuple, long long n) const;
};

// A finite primary structure (universe presented as 1..n, stored as indices
// 0..n-1), a secondary structure, and weight-function tables bridging them.
class MetafiniteStructure {
public:
    MetafiniteStructure(MetafiniteVocabulary voc, Structure primary, Structure secondary,
                        std::map<std::string, WeightTable> weights);

    const MetafiniteVocabulary& vocabulary() const { return voc_; }
    const Structure& primary() const { return primary_; }
    const Structure& secondary() const { return secondary_; }
    long long size() const { return primary_.universe_size(); }

    const WeightTable& weight(const std::string& name) const;
    const std::map<std::string, WeightTable>& weights() const { return weights_; }

    // True iff every weight value is the secondary 0 or 1.
    bool is_boolean() const;

    // Parses the metafinite-structure text format.
    static MetafiniteStructure load(const std::string& text);

private:
    MetafiniteVocabulary voc_;
    Structure primary_;
    Structure secondary_;
    std::map<std::string, WeightTable> weights_;
};

// The weight functions of the metafinite algebra obtained by converting
// primary constants, functions, and relations into characteristic functions
// (equality excluded), followed by the declared weights, in canonical order.
struct AlgebraWeight {
    std::string name;
    int arity;
};
std::vector<AlgebraWeight> algebra_weights(const MetafiniteVocabulary& voc);

// Canonical string encoding: code(W_1) ... code(W_N) over the algebra's
// weights, each listing values on lexicographically ordered tuples.
ElementString encode_metafinite(const MetafiniteStructure& d);

// Encoding of d expanded with extra weight tables appended at the end (the
// (D, Y) expansions of witness search).
ElementString encode_metafinite_with(const MetafiniteStructure& d,
                                     const std::vector<WeightTable>& extra);

// First-order metafinite evaluation: exhaustive quantification over the
// primary universe, direct computation of weight and secondary terms. All
// second-order variables of phi must be interpreted by fixed_weights.
bool eval_fo_metafinite(const SOFormula& phi, const MetafiniteStructure& d,
                        const std::map<std::string, WeightTable>& fixed_weights = {});

// Second-order truth over a finite secondary universe: the leading
// second-order blocks are decided by exhaustive search over weight tables
// (cell by cell with pruning), the first-order matrix by grounding over the
// primary universe. The formula must be a sentence with all second-order
// quantifiers in front.
bool eval_so_finite(const SOFormula& phi, const MetafiniteStructure& d);

// Reference route: flat enumeration of entire weight tables per quantifier.
// Exponential; test use only.
bool eval_so_flat(const SOFormula& phi, const MetafiniteStructure& d);

struct SOClass {
    PrenexKind kind; // Sigma/Pi by the leading second-order block
    int k;           // second-order alternations; 0 when no SO quantifier
    bool boolean_fragment;
};

SOClass classify_so(const SOFormula& phi);

// Syntax-tree encoding of a quantifier-free formula as a metafinite
// structure: one primary element per distinct variable and per occurrence of
// every other term and subformula, relations Var/Con/Term/Subform/Form,
// F_f/Q_P per symbol, Equal/Not/And/Or, and the weight C carrying constants.
MetafiniteStructure formula_to_metafinite(const Formula& phi, const Structure& secondary);

// The vocabulary of such encodings for a given object vocabulary.
MetafiniteVocabulary syntax_tree_vocabulary(const Vocabulary& object_voc, const Structure& secondary);

// The fixed existential second-order sentence whose models are exactly the
// syntax trees of satisfiable quantifier-free formulas (well-formedness
// clauses plus the valuation clauses over one unary weight variable X).
SOFormulaPtr sat_describing_sentence(const Vocabulary& object_voc, const Structure& secondary);

} // namespace rml
