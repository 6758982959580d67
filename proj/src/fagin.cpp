#include "rml/fagin.hpp"

#include "rml/errors.hpp"

#include <algorithm>

namespace rml {

namespace {

using F = SOFormulaPtr;
using PT = PointTermPtr;

// Formula factory over tuple variables. Tuples are vectors of point-variable
// indices; a fresh-variable counter hands out quantified tuples.
struct TupleBuilder {
    const FaginLayout& L;
    int next_var = 0;

    std::vector<int> fresh_tuple(int width) {
        std::vector<int> t(width);
        for (int i = 0; i < width; ++i) t[i] = ++next_var;
        return t;
    }
    std::vector<int> fresh() { return fresh_tuple(L.m); }

    static PT pv(int v) { return PointTerm::var(v); }

    F forall(const std::vector<int>& t, F body) {
        for (auto it = t.rbegin(); it != t.rend(); ++it)
            body = SOFormula::forall_point(*it, body);
        return body;
    }
    F exists(const std::vector<int>& t, F body) {
        for (auto it = t.rbegin(); it != t.rend(); ++it)
            body = SOFormula::exists_point(*it, body);
        return body;
    }

    WeightTermPtr app(const std::string& so_name, const std::vector<int>& vars) {
        std::vector<PT> args;
        args.reserve(vars.size());
        for (int v : vars) args.push_back(pv(v));
        return WeightTerm::so_app(so_name, std::move(args));
    }
    WeightTermPtr app2(const std::string& so_name, const std::vector<int>& a,
                       const std::vector<int>& b) {
        std::vector<PT> args;
        args.reserve(a.size() + b.size());
        for (int v : a) args.push_back(pv(v));
        for (int v : b) args.push_back(pv(v));
        return WeightTerm::so_app(so_name, std::move(args));
    }

    F truthy(WeightTermPtr w) { return SOFormula::weight_eq(std::move(w), WeightTerm::sec_const("1")); }

    // E(x,y) = 1 on single elements.
    F e(int x, int y) { return truthy(app(L.e_name, {x, y})); }
    F strict(int x, int y) {
        return SOFormula::conj(e(x, y), SOFormula::negate(SOFormula::point_eq(pv(x), pv(y))));
    }
    F zero1(int x) {
        std::vector<int> u = fresh_tuple(1);
        return forall(u, e(x, u[0]));
    }
    F max1(int x) {
        std::vector<int> u = fresh_tuple(1);
        return forall(u, e(u[0], x));
    }
    // y is the least element strictly above x.
    F succ1(int x, int y) {
        std::vector<int> u = fresh_tuple(1);
        return SOFormula::conj(strict(x, y),
                               forall(u, SOFormula::implies(strict(x, u[0]), e(y, u[0]))));
    }

    F eq_tuple(const std::vector<int>& a, const std::vector<int>& b) {
        std::vector<F> eqs;
        for (size_t i = 0; i < a.size(); ++i) eqs.push_back(SOFormula::point_eq(pv(a[i]), pv(b[i])));
        return SOFormula::conj_all(std::move(eqs));
    }
    F zero_m(const std::vector<int>& t) {
        std::vector<F> cs;
        for (int v : t) cs.push_back(zero1(v));
        return SOFormula::conj_all(std::move(cs));
    }
    F max_m(const std::vector<int>& t) {
        std::vector<F> cs;
        for (int v : t) cs.push_back(max1(v));
        return SOFormula::conj_all(std::move(cs));
    }
    // Lexicographic non-strict order on tuples.
    F lex_le(const std::vector<int>& a, const std::vector<int>& b) {
        std::vector<F> cases;
        for (size_t i = 0; i < a.size(); ++i) {
            std::vector<F> parts;
            for (size_t j = 0; j < i; ++j) parts.push_back(SOFormula::point_eq(pv(a[j]), pv(b[j])));
            parts.push_back(strict(a[i], b[i]));
            cases.push_back(SOFormula::conj_all(std::move(parts)));
        }
        cases.push_back(eq_tuple(a, b));
        return SOFormula::disj_all(std::move(cases));
    }
    // Saturating lexicographic successor: the maximum is its own successor.
    F succ_m(const std::vector<int>& a, const std::vector<int>& b) {
        std::vector<F> cases;
        cases.push_back(SOFormula::conj(max_m(a), eq_tuple(a, b)));
        int m = static_cast<int>(a.size());
        for (int i = 0; i < m; ++i) {
            std::vector<F> parts;
            for (int j = 0; j < i; ++j) parts.push_back(SOFormula::point_eq(pv(a[j]), pv(b[j])));
            parts.push_back(SOFormula::negate(max1(a[i])));
            parts.push_back(succ1(a[i], b[i]));
            for (int j = i + 1; j < m; ++j) {
                parts.push_back(max1(a[j]));
                parts.push_back(zero1(b[j]));
            }
            cases.push_back(SOFormula::conj_all(std::move(parts)));
        }
        return SOFormula::disj_all(std::move(cases));
    }
    // b = a monus 1.
    F monus1_m(const std::vector<int>& a, const std::vector<int>& b) {
        return SOFormula::disj(
            SOFormula::conj(zero_m(a), eq_tuple(a, b)),
            SOFormula::conj(succ_m(b, a), SOFormula::negate(eq_tuple(b, a))));
    }

    F s_graph(const std::vector<int>& x, const std::vector<int>& y, const std::vector<int>& z) {
        std::vector<PT> args;
        for (int v : x) args.push_back(pv(v));
        for (int v : y) args.push_back(pv(v));
        for (int v : z) args.push_back(pv(v));
        return truthy(WeightTerm::so_app(L.s_name, std::move(args)));
    }
    F p_graph(const std::vector<int>& x, const std::vector<int>& y, const std::vector<int>& z) {
        std::vector<PT> args;
        for (int v : x) args.push_back(pv(v));
        for (int v : y) args.push_back(pv(v));
        for (int v : z) args.push_back(pv(v));
        return truthy(WeightTerm::so_app(L.p_name, std::move(args)));
    }

    // Saturating numeral: value v as the v-fold successor of zero.
    std::map<long long, F> numeral_cache; // per (value); formulas share a tuple-naming scheme
    F numeral(long long v, const std::vector<int>& t) {
        // Formulas are built per call (they mention t) but small values keep
        // this cheap; the grounder memoizes by node identity anyway.
        if (v == 0) return zero_m(t);
        std::vector<int> prev = fresh();
        return exists(prev, SOFormula::conj(numeral(v - 1, prev), succ_m(prev, t)));
    }

    // Digit tuple of n^k: a one in position m-k, zeros elsewhere. For k >= m
    // the value is out of range and the formula is unsatisfiable.
    F power_numeral(int k, const std::vector<int>& t) {
        int m = static_cast<int>(t.size());
        if (k >= m) return SOFormula::conj(zero1(t[0]), SOFormula::negate(zero1(t[0])));
        std::vector<F> parts;
        for (int j = 0; j < m; ++j) {
            if (j == m - k - 1) {
                std::vector<int> u = fresh_tuple(1);
                parts.push_back(
                    exists(u, SOFormula::conj(zero1(u[0]),
                                              SOFormula::disj(SOFormula::conj(max1(u[0]),
                                                                              SOFormula::point_eq(pv(u[0]), pv(t[j]))),
                                                              succ1(u[0], t[j])))));
            } else {
                parts.push_back(zero1(t[j]));
            }
        }
        return SOFormula::conj_all(std::move(parts));
    }

    // t holds the sum of n^{k} over the given arities (saturating).
    F power_sum(const std::vector<int>& arities, const std::vector<int>& t) {
        if (arities.empty()) return zero_m(t);
        if (arities.size() == 1) return power_numeral(arities[0], t);
        std::vector<int> head = fresh();
        std::vector<int> tail = fresh();
        std::vector<int> rest(arities.begin() + 1, arities.end());
        return exists(head,
                      SOFormula::conj(power_numeral(arities[0], head),
                                      exists(tail, SOFormula::conj(power_sum(rest, tail),
                                                                   s_graph(head, tail, t)))));
    }
};

} // namespace

int fagin_min_width(const MetafiniteVocabulary& mvoc, int q, int k) {
    int total = 0;
    for (const auto& c : mvoc.primary.constants()) {
        (void)c;
        total += 1;
    }
    for (const auto& [f, a] : mvoc.primary.functions()) total += a + 1;
    for (const auto& [p, a] : mvoc.primary.relations()) total += a;
    for (const auto& [w, a] : mvoc.weights) total += a;
    total += k * q;
    return std::max(1, total);
}

ArithmeticFragments build_arithmetic(const MetafiniteVocabulary& mvoc, int m) {
    (void)mvoc;
    if (m < 1) throw Error("tuple width must be positive");
    FaginLayout L;
    L.m = m;
    TupleBuilder b{L, 0};

    // ordering(E): reflexive, antisymmetric, transitive, total.
    ArithmeticFragments out;
    {
        auto x = b.fresh_tuple(1), y = b.fresh_tuple(1), z = b.fresh_tuple(1);
        std::vector<F> cs;
        cs.push_back(b.forall(x, b.e(x[0], x[0])));
        cs.push_back(b.forall(x, b.forall(y, SOFormula::implies(
            SOFormula::conj(b.e(x[0], y[0]), b.e(y[0], x[0])),
            SOFormula::point_eq(TupleBuilder::pv(x[0]), TupleBuilder::pv(y[0]))))));
        cs.push_back(b.forall(x, b.forall(y, b.forall(z, SOFormula::implies(
            SOFormula::conj(b.e(x[0], y[0]), b.e(y[0], z[0])), b.e(x[0], z[0]))))));
        cs.push_back(b.forall(x, b.forall(y, SOFormula::disj(b.e(x[0], y[0]), b.e(y[0], x[0])))));
        out.ordering = SOFormula::conj_all(std::move(cs));
    }

    // summation_m(E,S): base, recursion along the saturating successor,
    // functionality, and totality; together these pin the graph uniquely
    // once E is a linear order.
    {
        auto x = b.fresh(), y = b.fresh(), z = b.fresh(), y2 = b.fresh(), z2 = b.fresh();
        std::vector<F> cs;
        cs.push_back(b.forall(x, b.forall(z, SOFormula::implies(b.zero_m(z), b.s_graph(x, z, x)))));
        cs.push_back(b.forall(x, b.forall(y, b.forall(z, b.forall(y2, b.forall(z2,
            SOFormula::implies(SOFormula::conj_all({b.s_graph(x, y, z), b.succ_m(y, y2), b.succ_m(z, z2)}),
                               b.s_graph(x, y2, z2))))))));
        cs.push_back(b.forall(x, b.forall(y, b.forall(z, b.forall(z2,
            SOFormula::implies(SOFormula::conj(b.s_graph(x, y, z), b.s_graph(x, y, z2)),
                               b.eq_tuple(z, z2)))))));
        cs.push_back(b.forall(x, b.forall(y, b.exists(z, b.s_graph(x, y, z)))));
        out.summation = SOFormula::conj_all(std::move(cs));
    }

    // product_m(E,S,P): x*0 = 0 and x*(y+1) = x*y + x, saturating.
    {
        auto x = b.fresh(), y = b.fresh(), z = b.fresh(), y2 = b.fresh(), z2 = b.fresh();
        std::vector<F> cs;
        cs.push_back(b.forall(x, b.forall(z, SOFormula::implies(b.zero_m(z), b.p_graph(x, z, z)))));
        cs.push_back(b.forall(x, b.forall(y, b.forall(z, b.forall(y2, b.forall(z2,
            SOFormula::implies(SOFormula::conj_all({b.p_graph(x, y, z), b.succ_m(y, y2), b.s_graph(z, x, z2)}),
                               b.p_graph(x, y2, z2))))))));
        cs.push_back(b.forall(x, b.forall(y, b.forall(z, b.forall(z2,
            SOFormula::implies(SOFormula::conj(b.p_graph(x, y, z), b.p_graph(x, y, z2)),
                               b.eq_tuple(z, z2)))))));
        cs.push_back(b.forall(x, b.forall(y, b.exists(z, b.p_graph(x, y, z)))));
        out.product = SOFormula::conj_all(std::move(cs));
    }
    return out;
}

namespace {

// One entry of the code of (D, Y...): how a cell equality is expressed.
struct CodePiece {
    enum class Kind { PrimConst, PrimFun, PrimRel, Weight, SOVar } kind;
    std::string symbol;
    int arity; // of the characteristic function (tuple width of the piece)
};

std::vector<CodePiece> code_pieces(const MetafiniteVocabulary& mvoc, const FaginLayout& L) {
    std::vector<CodePiece> out;
    for (const auto& c : mvoc.primary.constants()) out.push_back({CodePiece::Kind::PrimConst, c, 1});
    for (const auto& [f, a] : mvoc.primary.functions())
        out.push_back({CodePiece::Kind::PrimFun, f, a + 1});
    for (const auto& [p, a] : mvoc.primary.relations())
        out.push_back({CodePiece::Kind::PrimRel, p, a});
    for (const auto& [w, a] : mvoc.weights) out.push_back({CodePiece::Kind::Weight, w, a});
    for (const auto& y : L.witness_names) out.push_back({CodePiece::Kind::SOVar, y, L.q});
    return out;
}

// cell = piece(q-tuple), expressed by the piece's kind.
F piece_equation(TupleBuilder& b, const CodePiece& piece, const std::vector<int>& q,
                 WeightTermPtr cell) {
    auto one = [] { return WeightTerm::sec_const("1"); };
    auto zero = [] { return WeightTerm::sec_const("0"); };
    switch (piece.kind) {
    case CodePiece::Kind::Weight:
    case CodePiece::Kind::SOVar: {
        std::vector<PT> args;
        for (int v : q) args.push_back(TupleBuilder::pv(v));
        WeightTermPtr w = piece.kind == CodePiece::Kind::Weight
                              ? WeightTerm::weight_app(piece.symbol, std::move(args))
                              : WeightTerm::so_app(piece.symbol, std::move(args));
        return SOFormula::weight_eq(std::move(cell), std::move(w));
    }
    case CodePiece::Kind::PrimConst: {
        F is = SOFormula::point_eq(TupleBuilder::pv(q[0]), PointTerm::constant(piece.symbol));
        return SOFormula::conj(
            SOFormula::implies(is, SOFormula::weight_eq(cell, one())),
            SOFormula::implies(SOFormula::negate(is), SOFormula::weight_eq(cell, zero())));
    }
    case CodePiece::Kind::PrimRel: {
        std::vector<PT> args;
        for (int v : q) args.push_back(TupleBuilder::pv(v));
        F is = SOFormula::prim_rel(piece.symbol, std::move(args));
        return SOFormula::conj(
            SOFormula::implies(is, SOFormula::weight_eq(cell, one())),
            SOFormula::implies(SOFormula::negate(is), SOFormula::weight_eq(cell, zero())));
    }
    case CodePiece::Kind::PrimFun: {
        std::vector<PT> args;
        for (size_t i = 0; i + 1 < q.size(); ++i) args.push_back(TupleBuilder::pv(q[i]));
        F is = SOFormula::point_eq(PointTerm::apply(piece.symbol, std::move(args)),
                                   TupleBuilder::pv(q.back()));
        return SOFormula::conj(
            SOFormula::implies(is, SOFormula::weight_eq(cell, one())),
            SOFormula::implies(SOFormula::negate(is), SOFormula::weight_eq(cell, zero())));
    }
    }
    throw Error("unreachable");
}

// input over a caller-chosen cell constructor (arity-m tuples).
F build_input_with(TupleBuilder& b, const MetafiniteVocabulary& mvoc, const FaginLayout& L,
                   const std::function<WeightTermPtr(const std::vector<int>&)>& cell) {
    auto pieces = code_pieces(mvoc, L);
    std::vector<F> parts;

    // Offsets o_j = sum_{i<j} n^{k_i} as arity lists for the power sums.
    std::vector<int> arities;
    for (size_t j = 0; j < pieces.size(); ++j) {
        std::vector<int> p = b.fresh();
        std::vector<int> lo = b.fresh();
        std::vector<int> hi = b.fresh();
        // range_j: o_j <= p and not o_{j+1} <= p.
        std::vector<int> next_arities = arities;
        next_arities.push_back(pieces[j].arity);
        F in_range = b.exists(lo, SOFormula::conj(b.power_sum(arities, lo), b.lex_le(lo, p)));

        // offset_j: p = o_j + q (saturating; exact under the premises).
        std::vector<int> qv = b.fresh_tuple(pieces[j].arity);
        std::vector<int> base = b.fresh();
        std::vector<int> emb = b.fresh();
        std::vector<F> offset_parts;
        offset_parts.push_back(b.power_sum(arities, base));
        // emb = q embedded into A^m with leading zeros.
        {
            std::vector<F> embp;
            int lead = L.m - pieces[j].arity;
            for (int i = 0; i < lead; ++i) embp.push_back(b.zero1(emb[i]));
            for (int i = 0; i < pieces[j].arity; ++i)
                embp.push_back(SOFormula::point_eq(TupleBuilder::pv(emb[lead + i]),
                                                   TupleBuilder::pv(qv[i])));
            if (embp.empty()) embp.push_back(SOFormula::point_eq(TupleBuilder::pv(p[0]), TupleBuilder::pv(p[0])));
            offset_parts.push_back(SOFormula::conj_all(std::move(embp)));
        }
        offset_parts.push_back(b.s_graph(base, emb, p));
        F offset = b.exists(base, b.exists(emb, SOFormula::conj_all(std::move(offset_parts))));

        F hi_le_p = b.exists(hi, SOFormula::conj(b.power_sum(next_arities, hi), b.lex_le(hi, p)));
        F range_j = SOFormula::conj(in_range, SOFormula::negate(hi_le_p));

        F body = SOFormula::implies(range_j,
                                    b.exists(qv, SOFormula::conj(offset, piece_equation(b, pieces[j], qv, cell(p)))));
        parts.push_back(b.forall(p, body));
        arities = std::move(next_arities);
    }
    // Trailing zeros beyond the code.
    {
        std::vector<int> p = b.fresh();
        std::vector<int> hi = b.fresh();
        F past = b.exists(hi, SOFormula::conj(b.power_sum(arities, hi), b.lex_le(hi, p)));
        parts.push_back(b.forall(p, SOFormula::implies(
            past, SOFormula::weight_eq(cell(p), WeightTerm::sec_const("0")))));
    }
    return SOFormula::conj_all(std::move(parts));
}

} // namespace

SOFormulaPtr build_input_formula(const MetafiniteVocabulary& mvoc, int m) {
    if (m < fagin_min_width(mvoc, 0, 0))
        throw Error("tuple width below the sum of symbol arities");
    FaginLayout L;
    L.m = m;
    TupleBuilder b{L, 0};
    ArithmeticFragments ar = build_arithmetic(mvoc, m);
    F input = build_input_with(b, mvoc, L, [&](const std::vector<int>& p) {
        std::vector<PT> args;
        for (int v : p) args.push_back(TupleBuilder::pv(v));
        return WeightTerm::so_app(L.z_name, std::move(args));
    });
    return SOFormula::conj_all({ar.ordering, ar.summation, ar.product, input});
}

} // namespace rml
