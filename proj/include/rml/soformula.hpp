#pragma once

#include "rml/structure.hpp"

#include <memory>
#include <set>
#include <string>
#include <vector>

namespace rml {

// Vocabulary of metafinite logic: a finite primary vocabulary, a secondary
// vocabulary, and weight function symbols with arities >= 0 (an arity-0
// weight is essentially a secondary element). The three namespaces are
// disjoint.
struct MetafiniteVocabulary {
    Vocabulary primary;
    Vocabulary secondary;
    std::vector<std::pair<std::string, int>> weights;

    MetafiniteVocabulary() = default;
    MetafiniteVocabulary(Vocabulary prim, Vocabulary sec,
                         std::vector<std::pair<std::string, int>> w);

    std::optional<int> weight_arity(const std::string& name) const;
};

class PointTerm;
using PointTermPtr = std::shared_ptr<const PointTerm>;

// Terms of the primary sort. First-order variables range only over the
// primary part.
class PointTerm {
public:
    enum class Kind { Var, Const, App };

    static PointTermPtr var(int index);
    static PointTermPtr constant(std::string name);
    static PointTermPtr apply(std::string fn, std::vector<PointTermPtr> args);

    Kind kind() const { return kind_; }
    int var_index() const { return var_; }
    const std::string& symbol() const { return symbol_; }
    const std::vector<PointTermPtr>& args() const { return args_; }

    void vars(std::set<int>& out) const;

private:
    PointTerm() = default;
    Kind kind_ = Kind::Var;
    int var_ = 0;
    std::string symbol_;
    std::vector<PointTermPtr> args_;
};

class WeightTerm;
using WeightTermPtr = std::shared_ptr<const WeightTerm>;

// Terms of the secondary sort: secondary constants, weight-symbol or
// second-order-variable applications to point terms, and secondary function
// applications to weight terms.
class WeightTerm {
public:
    enum class Kind { SecConst, WeightApp, SOApp, SecApp };

    static WeightTermPtr sec_const(std::string name);
    static WeightTermPtr weight_app(std::string weight, std::vector<PointTermPtr> args);
    static WeightTermPtr so_app(std::string so_var, std::vector<PointTermPtr> args);
    static WeightTermPtr sec_app(std::string fn, std::vector<WeightTermPtr> args);

    Kind kind() const { return kind_; }
    const std::string& symbol() const { return symbol_; }
    const std::vector<PointTermPtr>& point_args() const { return point_args_; }
    const std::vector<WeightTermPtr>& weight_args() const { return weight_args_; }

    void point_vars(std::set<int>& out) const;
    void so_vars(std::set<std::string>& out) const;
    void sec_constants(std::set<std::string>& out) const;

private:
    WeightTerm() = default;
    Kind kind_ = Kind::SecConst;
    std::string symbol_;
    std::vector<PointTermPtr> point_args_;
    std::vector<WeightTermPtr> weight_args_;
};

class SOFormula;
using SOFormulaPtr = std::shared_ptr<const SOFormula>;

// Second-order metafinite formulas. Well-sortedness is by construction:
// point terms feed primary relations and point equality, weight terms feed
// secondary relations and weight equality.
class SOFormula {
public:
    enum class Kind {
        PointEq, PrimRel, WeightEq, SecRel, Not, And, Or,
        ForallPoint, ExistsPoint, ForallSO, ExistsSO
    };

    static SOFormulaPtr point_eq(PointTermPtr a, PointTermPtr b);
    static SOFormulaPtr prim_rel(std::string name, std::vector<PointTermPtr> args);
    static SOFormulaPtr weight_eq(WeightTermPtr a, WeightTermPtr b);
    static SOFormulaPtr sec_rel(std::string name, std::vector<WeightTermPtr> args);
    static SOFormulaPtr negate(SOFormulaPtr f);
    static SOFormulaPtr conj(SOFormulaPtr a, SOFormulaPtr b);
    static SOFormulaPtr disj(SOFormulaPtr a, SOFormulaPtr b);
    static SOFormulaPtr implies(SOFormulaPtr a, SOFormulaPtr b);
    static SOFormulaPtr iff(SOFormulaPtr a, SOFormulaPtr b);
    static SOFormulaPtr conj_all(std::vector<SOFormulaPtr> fs);
    static SOFormulaPtr disj_all(std::vector<SOFormulaPtr> fs);
    static SOFormulaPtr forall_point(int var, SOFormulaPtr f);
    static SOFormulaPtr exists_point(int var, SOFormulaPtr f);
    static SOFormulaPtr forall_so(std::string var, int arity, SOFormulaPtr f);
    static SOFormulaPtr exists_so(std::string var, int arity, SOFormulaPtr f);

    Kind kind() const { return kind_; }
    const std::vector<PointTermPtr>& point_terms() const { return point_terms_; }
    const std::vector<WeightTermPtr>& weight_terms() const { return weight_terms_; }
    const std::string& symbol() const { return symbol_; }
    const SOFormulaPtr& left() const { return left_; }
    const SOFormulaPtr& right() const { return right_; }
    int point_var() const { return point_var_; }
    const std::string& so_var() const { return symbol_; }
    int so_arity() const { return so_arity_; }

    bool so_quantifier_free() const;
    void free_so_vars(std::set<std::string>& out) const;
    void free_point_vars(std::set<int>& out) const;
    void sec_constants(std::set<std::string>& out) const;
    int max_point_var() const;

private:
    SOFormula() = default;
    Kind kind_ = Kind::PointEq;
    std::string symbol_; // relation name or SO variable
    int so_arity_ = 0;
    int point_var_ = 0;
    std::vector<PointTermPtr> point_terms_;
    std::vector<WeightTermPtr> weight_terms_;
    SOFormulaPtr left_;
    SOFormulaPtr right_;
};

std::string print_so(const SOFormula& f);
std::string print_point_term(const PointTerm& t);
std::string print_weight_term(const WeightTerm& t);

// Parses the extended grammar: second-order quantifiers `EXISTS X^<k> .` /
// `FORALL X^<k> .`, first-order quantifiers as in the base grammar, weight
// and relation applications by name. Sorts are inferred from the vocabulary
// and the bound second-order variables.
SOFormulaPtr parse_so(const std::string& text, const MetafiniteVocabulary& voc);

} // namespace rml
