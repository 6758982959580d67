#include "rml/logic.hpp"

#include "rml/errors.hpp"

#include <algorithm>

namespace rml {

Element eval_term(const Term& t, std::span<const Element> assignment, const Structure& s) {
    switch (t.kind()) {
    case Term::Kind::Variable: {
        int i = t.var_index();
        if (i > static_cast<int>(assignment.size()))
            throw Error("assignment too short for x" + std::to_string(i));
        return assignment[i - 1];
    }
    case Term::Kind::Constant:
        return s.constant(t.symbol());
    case Term::Kind::Apply: {
        std::vector<Element> vals;
        vals.reserve(t.args().size());
        for (const auto& a : t.args()) vals.push_back(eval_term(*a, assignment, s));
        return s.apply(t.symbol(), vals);
    }
    }
    throw Error("unreachable");
}

bool evaluate(const Formula& phi, std::span<const Element> assignment, const Structure& s) {
    switch (phi.kind()) {
    case Formula::Kind::Eq:
        return eval_term(*phi.terms()[0], assignment, s) == eval_term(*phi.terms()[1], assignment, s);
    case Formula::Kind::Rel: {
        std::vector<Element> vals;
        vals.reserve(phi.terms().size());
        for (const auto& t : phi.terms()) vals.push_back(eval_term(*t, assignment, s));
        return s.holds(phi.symbol(), vals);
    }
    case Formula::Kind::Not:
        return !evaluate(*phi.left(), assignment, s);
    case Formula::Kind::And:
        return evaluate(*phi.left(), assignment, s) && evaluate(*phi.right(), assignment, s);
    case Formula::Kind::Or:
        return evaluate(*phi.left(), assignment, s) || evaluate(*phi.right(), assignment, s);
    case Formula::Kind::Forall:
    case Formula::Kind::Exists:
        throw Error("evaluate: quantifier encountered in quantifier-free evaluation");
    }
    throw Error("unreachable");
}

namespace {

bool eval_rec(const Formula& phi, std::vector<Element>& env, const Structure& s) {
    switch (phi.kind()) {
    case Formula::Kind::Eq:
    case Formula::Kind::Rel:
        return evaluate(phi, env, s);
    case Formula::Kind::Not:
        return !eval_rec(*phi.left(), env, s);
    case Formula::Kind::And:
        return eval_rec(*phi.left(), env, s) && eval_rec(*phi.right(), env, s);
    case Formula::Kind::Or:
        return eval_rec(*phi.left(), env, s) || eval_rec(*phi.right(), env, s);
    case Formula::Kind::Forall: {
        int v = phi.quant_var();
        if (static_cast<int>(env.size()) < v) env.resize(v, s.universe()[0]);
        Element saved = env[v - 1];
        for (const auto& r : s.universe()) {
            env[v - 1] = r;
            if (!eval_rec(*phi.left(), env, s)) {
                env[v - 1] = saved;
                return false;
            }
        }
        env[v - 1] = saved;
        return true;
    }
    case Formula::Kind::Exists: {
        int v = phi.quant_var();
        if (static_cast<int>(env.size()) < v) env.resize(v, s.universe()[0]);
        Element saved = env[v - 1];
        for (const auto& r : s.universe()) {
            env[v - 1] = r;
            if (eval_rec(*phi.left(), env, s)) {
                env[v - 1] = saved;
                return true;
            }
        }
        env[v - 1] = saved;
        return false;
    }
    }
    throw Error("unreachable");
}

} // namespace

bool eval_sentence_finite(const Formula& phi, const Structure& s) {
    if (!s.is_finite())
        throw BackendError("eval_sentence_finite needs a finite universe, got " + s.name());
    if (!phi.is_sentence()) throw Error("eval_sentence_finite: free variables present");
    std::vector<Element> env(phi.max_var(), s.universe()[0]);
    return eval_rec(phi, env, s);
}

PrenexClass classify_prenex(const Formula& phi) {
    PrenexClass out{PrenexKind::Sigma, 0, true};

    std::set<std::string> consts;
    phi.constants(consts);
    for (const auto& c : consts)
        if (c != "0" && c != "1") out.boolean_fragment = false;

    const Formula* p = &phi;
    int blocks = 0;
    bool last_existential = false;
    bool first_existential = false;
    while (p->kind() == Formula::Kind::Forall || p->kind() == Formula::Kind::Exists) {
        bool ex = p->kind() == Formula::Kind::Exists;
        if (blocks == 0) {
            first_existential = ex;
            blocks = 1;
        } else if (ex != last_existential) {
            ++blocks;
        }
        last_existential = ex;
        p = p->left().get();
    }
    if (!p->quantifier_free()) {
        out.kind = PrenexKind::NotPrenex;
        out.k = 0;
        return out;
    }
    if (blocks == 0) {
        out.kind = PrenexKind::Sigma; // quantifier-free: Sigma_0 = Pi_0
        out.k = 0;
        return out;
    }
    out.kind = first_existential ? PrenexKind::Sigma : PrenexKind::Pi;
    out.k = blocks;
    return out;
}

std::pair<std::vector<PrefixEntry>, FormulaPtr> split_prenex(const Formula& phi) {
    std::vector<PrefixEntry> prefix;
    const Formula* p = &phi;
    FormulaPtr matrix;
    while (p->kind() == Formula::Kind::Forall || p->kind() == Formula::Kind::Exists) {
        prefix.push_back({p->kind() == Formula::Kind::Exists, p->quant_var()});
        matrix = p->left();
        p = p->left().get();
    }
    if (!p->quantifier_free()) throw Error("formula is not in prenex form");
    if (prefix.empty()) throw Error("split_prenex on quantifier-free formula needs no split");
    return {std::move(prefix), std::move(matrix)};
}

// ---------------------------------------------------------------------------
// Prenex transformation

namespace {

TermPtr rename_term(const Term& t, int from, int to) {
    switch (t.kind()) {
    case Term::Kind::Variable:
        return t.var_index() == from ? Term::var(to) : Term::var(t.var_index());
    case Term::Kind::Constant:
        return Term::constant(t.symbol());
    case Term::Kind::Apply: {
        std::vector<TermPtr> args;
        args.reserve(t.args().size());
        for (const auto& a : t.args()) args.push_back(rename_term(*a, from, to));
        return Term::apply(t.symbol(), std::move(args));
    }
    }
    throw Error("unreachable");
}

// Renames free occurrences of `from` to `to`; `to` is globally fresh.
FormulaPtr rename_free(const Formula& f, int from, int to) {
    switch (f.kind()) {
    case Formula::Kind::Eq:
        return Formula::eq(rename_term(*f.terms()[0], from, to), rename_term(*f.terms()[1], from, to));
    case Formula::Kind::Rel: {
        std::vector<TermPtr> ts;
        ts.reserve(f.terms().size());
        for (const auto& t : f.terms()) ts.push_back(rename_term(*t, from, to));
        return Formula::rel(f.symbol(), std::move(ts));
    }
    case Formula::Kind::Not:
        return Formula::negate(rename_free(*f.left(), from, to));
    case Formula::Kind::And:
        return Formula::conj(rename_free(*f.left(), from, to), rename_free(*f.right(), from, to));
    case Formula::Kind::Or:
        return Formula::disj(rename_free(*f.left(), from, to), rename_free(*f.right(), from, to));
    case Formula::Kind::Forall:
        if (f.quant_var() == from) return Formula::forall(f.quant_var(), f.left());
        return Formula::forall(f.quant_var(), rename_free(*f.left(), from, to));
    case Formula::Kind::Exists:
        if (f.quant_var() == from) return Formula::exists(f.quant_var(), f.left());
        return Formula::exists(f.quant_var(), rename_free(*f.left(), from, to));
    }
    throw Error("unreachable");
}

struct Prenexer {
    int next_fresh;

    struct Result {
        std::vector<PrefixEntry> prefix;
        FormulaPtr matrix;
    };

    Result run(const Formula& f) {
        switch (f.kind()) {
        case Formula::Kind::Eq:
        case Formula::Kind::Rel:
            return {{}, std::make_shared<const Formula>(f)};
        case Formula::Kind::Not: {
            Result r = run(*f.left());
            for (auto& e : r.prefix) e.existential = !e.existential;
            r.matrix = Formula::negate(r.matrix);
            return r;
        }
        case Formula::Kind::And:
        case Formula::Kind::Or: {
            Result l = run(*f.left());
            Result r = run(*f.right());
            // Left prefix first, then right. A pulled variable is renamed
            // past the maximum index when it would collide with a variable
            // free on the other side or already claimed by another binder.
            std::set<int> avoid_l = f.right()->free_vars();
            fix_side(l, avoid_l);
            std::set<int> avoid_r = f.left()->free_vars();
            for (const auto& e : l.prefix) avoid_r.insert(e.var);
            fix_side(r, avoid_r);
            std::vector<PrefixEntry> prefix = l.prefix;
            prefix.insert(prefix.end(), r.prefix.begin(), r.prefix.end());
            FormulaPtr matrix = f.kind() == Formula::Kind::And ? Formula::conj(l.matrix, r.matrix)
                                                               : Formula::disj(l.matrix, r.matrix);
            return {std::move(prefix), std::move(matrix)};
        }
        case Formula::Kind::Forall:
        case Formula::Kind::Exists: {
            Result r = run(*f.left());
            PrefixEntry e{f.kind() == Formula::Kind::Exists, f.quant_var()};
            r.prefix.insert(r.prefix.begin(), e);
            return r;
        }
        }
        throw Error("unreachable");
    }

    // Renames one side's prefix so its binders avoid `avoid` and each other.
    // Walks innermost to outermost: the innermost binder of a variable owns
    // the matrix occurrences; outer duplicates are vacuous and get a fresh
    // name without touching the matrix.
    void fix_side(Result& side, const std::set<int>& avoid) {
        std::set<int> claimed;
        for (auto it = side.prefix.rbegin(); it != side.prefix.rend(); ++it) {
            if (claimed.count(it->var)) {
                it->var = ++next_fresh; // vacuous outer binder
                continue;
            }
            claimed.insert(it->var);
            if (avoid.count(it->var)) {
                int nv = ++next_fresh;
                side.matrix = rename_free(*side.matrix, it->var, nv);
                it->var = nv;
            }
        }
    }
};

} // namespace

FormulaPtr to_prenex(const Formula& phi) {
    Prenexer p{phi.max_var()};
    auto r = p.run(phi);
    FormulaPtr out = r.matrix;
    for (auto it = r.prefix.rbegin(); it != r.prefix.rend(); ++it)
        out = it->existential ? Formula::exists(it->var, out) : Formula::forall(it->var, out);
    return out;
}

} // namespace rml
