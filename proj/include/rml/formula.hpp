#pragma once

#include "rml/structure.hpp"

#include <memory>
#include <set>
#include <string>
#include <vector>

namespace rml {

class Term;
using TermPtr = std::shared_ptr<const Term>;

// First-order terms: variables x1, x2, ... (1-indexed), constant symbols, and
// function applications. Immutable and freely shared.
class Term {
public:
    enum class Kind { Variable, Constant, Apply };

    static TermPtr var(int index);
    static TermPtr constant(std::string name);
    static TermPtr apply(std::string fn, std::vector<TermPtr> args);

    Kind kind() const { return kind_; }
    int var_index() const { return var_index_; }
    const std::string& symbol() const { return symbol_; }
    const std::vector<TermPtr>& args() const { return args_; }

    void free_vars(std::set<int>& out) const;
    int max_var() const;

private:
    Term() = default;
    Kind kind_ = Kind::Variable;
    int var_index_ = 0;
    std::string symbol_;
    std::vector<TermPtr> args_;
};

class Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

// First-order formulas with equality. -> and <-> are surface sugar and never
// appear in the AST.
class Formula {
public:
    enum class Kind { Eq, Rel, Not, And, Or, Forall, Exists };

    static FormulaPtr eq(TermPtr a, TermPtr b);
    static FormulaPtr rel(std::string name, std::vector<TermPtr> args);
    static FormulaPtr negate(FormulaPtr f);
    static FormulaPtr conj(FormulaPtr a, FormulaPtr b);
    static FormulaPtr disj(FormulaPtr a, FormulaPtr b);
    static FormulaPtr implies(FormulaPtr a, FormulaPtr b); // desugars to ~a | b
    static FormulaPtr iff(FormulaPtr a, FormulaPtr b);     // desugars to (a->b) & (b->a)
    static FormulaPtr forall(int var, FormulaPtr f);
    static FormulaPtr exists(int var, FormulaPtr f);

    // Balanced n-ary conjunction/disjunction; the vector must be nonempty.
    static FormulaPtr conj_all(std::vector<FormulaPtr> fs);
    static FormulaPtr disj_all(std::vector<FormulaPtr> fs);

    Kind kind() const { return kind_; }
    const std::string& symbol() const { return symbol_; }
    const std::vector<TermPtr>& terms() const { return terms_; }
    const FormulaPtr& left() const { return left_; }
    const FormulaPtr& right() const { return right_; }
    int quant_var() const { return quant_var_; }

    void free_vars(std::set<int>& out) const;
    std::set<int> free_vars() const;
    bool is_sentence() const { return free_vars().empty(); }
    bool quantifier_free() const;
    int max_var() const;

    // All constant symbol names occurring in the formula.
    void constants(std::set<std::string>& out) const;

    size_t node_count() const; // formula nodes plus term nodes
    size_t atom_count() const;

private:
    Formula() = default;
    Kind kind_ = Kind::Eq;
    std::string symbol_;
    std::vector<TermPtr> terms_;
    FormulaPtr left_;
    FormulaPtr right_;
    int quant_var_ = 0;
};

bool structurally_equal(const Term& a, const Term& b);
bool structurally_equal(const Formula& a, const Formula& b);

std::string print_term(const Term& t);
std::string print_formula(const Formula& f);

// Text grammar of the external interface. Throws ParseError with position on
// lexical or syntactic errors, unknown symbols, and arity mismatches.
FormulaPtr parse_formula(const std::string& text, const Vocabulary& voc);
TermPtr parse_term(const std::string& text, const Vocabulary& voc);

} // namespace rml
