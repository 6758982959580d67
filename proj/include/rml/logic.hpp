#pragma once

#include "rml/formula.hpp"

#include <optional>

namespace rml {

// Quantifier-free evaluation against an assignment: the five-case recursion
// over atomic equality, atomic relation, negation, conjunction, disjunction.
// The assignment gives variable x_i the value assignment[i-1] and must cover
// the largest variable index occurring in the formula.
bool evaluate(const Formula& phi, std::span<const Element> assignment, const Structure& s);
Element eval_term(const Term& t, std::span<const Element> assignment, const Structure& s);

// Sentence truth over a finite structure by exhaustive quantifier expansion.
// This is the simple reference route; the prenex search in satsearch.hpp is
// cross-checked against it.
bool eval_sentence_finite(const Formula& phi, const Structure& s);

enum class PrenexKind { Sigma, Pi, NotPrenex };

struct PrenexClass {
    PrenexKind kind;
    int k;                 // 1 + number of quantifier alternations; 0 when quantifier-free
    bool boolean_fragment; // every constant in the formula is 0 or 1
};

PrenexClass classify_prenex(const Formula& phi);

// Logically equivalent prenex form: leftmost-outermost pull-out, renaming a
// pulled variable past the current maximum index whenever it would collide.
FormulaPtr to_prenex(const Formula& phi);

struct PrefixEntry {
    bool existential;
    int var;
};

// The quantifier prefix and matrix of a prenex formula (empty prefix when
// quantifier-free). Throws Error when the formula is not prenex.
std::pair<std::vector<PrefixEntry>, FormulaPtr> split_prenex(const Formula& phi);

} // namespace rml
