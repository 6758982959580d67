#include "rml/metafinite.hpp"

#include "rml/errors.hpp"
#include "rml/satsearch.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace rml {

const Element& WeightTable::at(std::span<const long long> tuple, long long n) const {
    long long idx = 0;
    for (long long t : tuple) idx = idx * n + t;
    return values[idx];
}

MetafiniteStructure::MetafiniteStructure(MetafiniteVocabulary voc, Structure primary,
                                         Structure secondary,
                                         std::map<std::string, WeightTable> weights)
    : voc_(std::move(voc)), primary_(std::move(primary)), secondary_(std::move(secondary)),
      weights_(std::move(weights)) {
    if (!primary_.is_finite()) throw Error("primary part must be finite");
    long long n = primary_.universe_size();
    for (const auto& [name, arity] : voc_.weights) {
        auto it = weights_.find(name);
        if (it == weights_.end()) throw Error("missing weight table: " + name);
        if (it->second.arity != arity) throw Error("weight arity mismatch: " + name);
        long long expect = 1;
        for (int i = 0; i < arity; ++i) expect *= n;
        if (static_cast<long long>(it->second.values.size()) != expect)
            throw Error("weight table not total: " + name);
        for (const auto& e : it->second.values)
            if (!secondary_.contains(e))
                throw Error("weight value outside the secondary universe: " + to_string(e));
    }
    if (weights_.size() != voc_.weights.size()) throw Error("undeclared weight table present");
}

const WeightTable& MetafiniteStructure::weight(const std::string& name) const {
    auto it = weights_.find(name);
    if (it == weights_.end()) throw Error("unknown weight function: " + name);
    return it->second;
}

bool MetafiniteStructure::is_boolean() const {
    Element zero = secondary_.zero(), one = secondary_.one();
    for (const auto& [name, table] : weights_)
        for (const auto& e : table.values)
            if (!(e == zero) && !(e == one)) return false;
    return true;
}

std::vector<AlgebraWeight> algebra_weights(const MetafiniteVocabulary& voc) {
    std::vector<AlgebraWeight> out;
    for (const auto& c : voc.primary.constants()) out.push_back({"const " + c, 1});
    for (const auto& [f, k] : voc.primary.functions()) out.push_back({"fun " + f, k + 1});
    for (const auto& [p, k] : voc.primary.relations()) out.push_back({"rel " + p, k});
    for (const auto& [w, k] : voc.weights) out.push_back({w, k});
    return out;
}

namespace {

// Iterates tuples of A^k in lexicographic order.
struct TupleIter {
    std::vector<long long> t;
    long long n;
    bool done;
    TupleIter(int k, long long n) : t(k, 0), n(n), done(n == 0 && k > 0) {}
    bool next() {
        int i = static_cast<int>(t.size()) - 1;
        while (i >= 0 && ++t[i] == n) t[i--] = 0;
        return i >= 0 || t.empty() ? i >= 0 : false;
    }
};

void for_each_tuple(int k, long long n, const std::function<void(std::span<const long long>)>& fn) {
    std::vector<long long> t(k, 0);
    for (;;) {
        fn(t);
        int i = k - 1;
        while (i >= 0 && ++t[i] == n) t[i--] = 0;
        if (i < 0) break;
    }
}

} // namespace

ElementString encode_metafinite(const MetafiniteStructure& d) {
    return encode_metafinite_with(d, {});
}

ElementString encode_metafinite_with(const MetafiniteStructure& d,
                                     const std::vector<WeightTable>& extra) {
    const Structure& prim = d.primary();
    const Structure& sec = d.secondary();
    long long n = d.size();
    Element zero = sec.zero(), one = sec.one();
    ElementString out;

    auto emit_char = [&](int arity, const std::function<bool(std::span<const long long>)>& member) {
        for_each_tuple(arity, n, [&](std::span<const long long> t) {
            out.push_back(member(t) ? one : zero);
        });
    };

    const auto& voc = d.vocabulary();
    for (const auto& c : voc.primary.constants()) {
        long long val = prim.index_of(prim.constant(c));
        emit_char(1, [&](std::span<const long long> t) { return t[0] == val; });
    }
    for (const auto& [f, k] : voc.primary.functions()) {
        emit_char(k + 1, [&](std::span<const long long> t) {
            std::vector<Element> args;
            args.reserve(k);
            for (int i = 0; i < k; ++i) args.push_back(prim.universe()[t[i]]);
            return prim.index_of(prim.apply(f, args)) == t[k];
        });
    }
    for (const auto& [p, k] : voc.primary.relations()) {
        emit_char(k, [&](std::span<const long long> t) {
            std::vector<Element> args;
            args.reserve(k);
            for (long long i : t) args.push_back(prim.universe()[i]);
            return prim.holds(p, args);
        });
    }
    for (const auto& [w, k] : voc.weights) {
        const WeightTable& table = d.weight(w);
        out.insert(out.end(), table.values.begin(), table.values.end());
    }
    for (const auto& table : extra)
        out.insert(out.end(), table.values.begin(), table.values.end());
    return out;
}

// ---------------------------------------------------------------------------
// First-order evaluation

namespace {

struct FoEval {
    const MetafiniteStructure& d;
    const std::map<std::string, WeightTable>& fixed;
    std::vector<long long> env; // point variable values, 0-based universe indices

    long long point(const PointTerm& t) {
        switch (t.kind()) {
        case PointTerm::Kind::Var: {
            if (t.var_index() > static_cast<int>(env.size()))
                throw Error("unbound point variable x" + std::to_string(t.var_index()));
            return env[t.var_index() - 1];
        }
        case PointTerm::Kind::Const:
            return d.primary().index_of(d.primary().constant(t.symbol()));
        case PointTerm::Kind::App: {
            std::vector<Element> args;
            args.reserve(t.args().size());
            for (const auto& a : t.args()) args.push_back(d.primary().universe()[point(*a)]);
            return d.primary().index_of(d.primary().apply(t.symbol(), args));
        }
        }
        throw Error("unreachable");
    }

    const WeightTable& table(const std::string& name) const {
        auto it = fixed.find(name);
        if (it != fixed.end()) return it->second;
        auto jt = d.weights().find(name);
        if (jt != d.weights().end()) return jt->second;
        throw Error("missing weight interpretation: " + name);
    }

    Element weight(const WeightTerm& t) {
        switch (t.kind()) {
        case WeightTerm::Kind::SecConst:
            return d.secondary().constant(t.symbol());
        case WeightTerm::Kind::WeightApp:
        case WeightTerm::Kind::SOApp: {
            std::vector<long long> tuple;
            tuple.reserve(t.point_args().size());
            for (const auto& p : t.point_args()) tuple.push_back(point(*p));
            return table(t.symbol()).at(tuple, d.size());
        }
        case WeightTerm::Kind::SecApp: {
            std::vector<Element> args;
            args.reserve(t.weight_args().size());
            for (const auto& w : t.weight_args()) args.push_back(weight(*w));
            return d.secondary().apply(t.symbol(), args);
        }
        }
        throw Error("unreachable");
    }

    bool eval(const SOFormula& f) {
        switch (f.kind()) {
        case SOFormula::Kind::PointEq:
            return point(*f.point_terms()[0]) == point(*f.point_terms()[1]);
        case SOFormula::Kind::PrimRel: {
            std::vector<Element> args;
            args.reserve(f.point_terms().size());
            for (const auto& p : f.point_terms())
                args.push_back(d.primary().universe()[point(*p)]);
            return d.primary().holds(f.symbol(), args);
        }
        case SOFormula::Kind::WeightEq:
            return weight(*f.weight_terms()[0]) == weight(*f.weight_terms()[1]);
        case SOFormula::Kind::SecRel: {
            std::vector<Element> args;
            args.reserve(f.weight_terms().size());
            for (const auto& w : f.weight_terms()) args.push_back(weight(*w));
            return d.secondary().holds(f.symbol(), args);
        }
        case SOFormula::Kind::Not:
            return !eval(*f.left());
        case SOFormula::Kind::And:
            return eval(*f.left()) && eval(*f.right());
        case SOFormula::Kind::Or:
            return eval(*f.left()) || eval(*f.right());
        case SOFormula::Kind::ForallPoint: {
            int v = f.point_var();
            if (static_cast<int>(env.size()) < v) env.resize(v, 0);
            long long saved = env[v - 1];
            for (long long a = 0; a < d.size(); ++a) {
                env[v - 1] = a;
                if (!eval(*f.left())) {
                    env[v - 1] = saved;
                    return false;
                }
            }
            env[v - 1] = saved;
            return true;
        }
        case SOFormula::Kind::ExistsPoint: {
            int v = f.point_var();
            if (static_cast<int>(env.size()) < v) env.resize(v, 0);
            long long saved = env[v - 1];
            for (long long a = 0; a < d.size(); ++a) {
                env[v - 1] = a;
                if (eval(*f.left())) {
                    env[v - 1] = saved;
                    return true;
                }
            }
            env[v - 1] = saved;
            return false;
        }
        case SOFormula::Kind::ForallSO:
        case SOFormula::Kind::ExistsSO:
            throw Error("second-order quantifier in first-order evaluation");
        }
        throw Error("unreachable");
    }
};

} // namespace

bool eval_fo_metafinite(const SOFormula& phi, const MetafiniteStructure& d,
                        const std::map<std::string, WeightTable>& fixed_weights) {
    std::set<std::string> so;
    phi.free_so_vars(so);
    for (const auto& v : so)
        if (!fixed_weights.count(v)) throw Error("missing weight interpretation: " + v);
    FoEval ev{d, fixed_weights, std::vector<long long>(phi.max_point_var(), 0)};
    return ev.eval(phi);
}

// ---------------------------------------------------------------------------
// Second-order evaluation by grounding

namespace {

struct SOPrefixEntry {
    bool existential;
    std::string name;
    int arity;
};

std::pair<std::vector<SOPrefixEntry>, const SOFormula*> split_so_prefix(const SOFormula& phi) {
    std::vector<SOPrefixEntry> prefix;
    const SOFormula* p = &phi;
    while (p->kind() == SOFormula::Kind::ForallSO || p->kind() == SOFormula::Kind::ExistsSO) {
        prefix.push_back({p->kind() == SOFormula::Kind::ExistsSO, p->so_var(), p->so_arity()});
        p = p->left().get();
    }
    if (!p->so_quantifier_free())
        throw Error("second-order quantifiers must precede the first-order matrix");
    return {std::move(prefix), p};
}

// Ground weight term over table cells.
struct GTerm {
    enum class Kind { Const, Cell, App } kind;
    Element cval{Bit{0}};
    int slot = -1;
    std::string fn;
    std::vector<GTerm> args;
};

struct Grounder {
    const MetafiniteStructure& d;
    SearchSpace& sp;
    // slot base per quantified SO variable (innermost binding).
    std::map<std::string, std::pair<int, int>> so_slots; // name -> (base slot, arity)
    std::map<const SOFormula*, std::vector<int>> fv_cache;
    std::map<std::pair<const SOFormula*, std::vector<long long>>, int> memo;
    std::vector<long long> env;
    long long n;

    const std::vector<int>& free_vars(const SOFormula* f) {
        auto it = fv_cache.find(f);
        if (it != fv_cache.end()) return it->second;
        std::set<int> s;
        f->free_point_vars(s);
        auto [jt, _] = fv_cache.emplace(f, std::vector<int>(s.begin(), s.end()));
        return jt->second;
    }

    long long point(const PointTerm& t) {
        switch (t.kind()) {
        case PointTerm::Kind::Var:
            return env[t.var_index() - 1];
        case PointTerm::Kind::Const:
            return d.primary().index_of(d.primary().constant(t.symbol()));
        case PointTerm::Kind::App: {
            std::vector<Element> args;
            args.reserve(t.args().size());
            for (const auto& a : t.args()) args.push_back(d.primary().universe()[point(*a)]);
            return d.primary().index_of(d.primary().apply(t.symbol(), args));
        }
        }
        throw Error("unreachable");
    }

    GTerm gweight(const WeightTerm& t) {
        switch (t.kind()) {
        case WeightTerm::Kind::SecConst:
            return {GTerm::Kind::Const, d.secondary().constant(t.symbol()), -1, {}, {}};
        case WeightTerm::Kind::WeightApp:
        case WeightTerm::Kind::SOApp: {
            std::vector<long long> tuple;
            tuple.reserve(t.point_args().size());
            for (const auto& p : t.point_args()) tuple.push_back(point(*p));
            auto it = so_slots.find(t.symbol());
            if (it != so_slots.end()) {
                long long idx = 0;
                for (long long v : tuple) idx = idx * n + v;
                return {GTerm::Kind::Cell, Element(Bit{0}), it->second.first + static_cast<int>(idx), {}, {}};
            }
            // Fixed weight of d: evaluate now.
            return {GTerm::Kind::Const, d.weight(t.symbol()).at(tuple, n), -1, {}, {}};
        }
        case WeightTerm::Kind::SecApp: {
            std::vector<GTerm> args;
            args.reserve(t.weight_args().size());
            bool all_const = true;
            for (const auto& w : t.weight_args()) {
                args.push_back(gweight(*w));
                all_const = all_const && args.back().kind == GTerm::Kind::Const;
            }
            if (all_const) {
                std::vector<Element> vals;
                vals.reserve(args.size());
                for (const auto& a : args) vals.push_back(a.cval);
                return {GTerm::Kind::Const, d.secondary().apply(t.symbol(), vals), -1, {}, {}};
            }
            return {GTerm::Kind::App, Element(Bit{0}), -1, t.symbol(), std::move(args)};
        }
        }
        throw Error("unreachable");
    }

    static void collect_cells(const GTerm& g, std::vector<int>& out) {
        if (g.kind == GTerm::Kind::Cell) out.push_back(g.slot);
        for (const auto& a : g.args) collect_cells(a, out);
    }

    Element eval_gterm(const GTerm& g, const std::map<int, Element>& cell_vals) const {
        switch (g.kind) {
        case GTerm::Kind::Const: return g.cval;
        case GTerm::Kind::Cell: return cell_vals.at(g.slot);
        case GTerm::Kind::App: {
            std::vector<Element> args;
            args.reserve(g.args.size());
            for (const auto& a : g.args) args.push_back(eval_gterm(a, cell_vals));
            return d.secondary().apply(g.fn, args);
        }
        }
        throw Error("unreachable");
    }

    int atom_from(std::vector<GTerm> gterms, std::function<bool(std::span<const Element>)> test) {
        std::vector<int> cells;
        for (const auto& g : gterms) collect_cells(g, cells);
        std::sort(cells.begin(), cells.end());
        cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
        if (cells.empty()) {
            std::vector<Element> vals;
            vals.reserve(gterms.size());
            std::map<int, Element> none;
            for (const auto& g : gterms) vals.push_back(eval_gterm(g, none));
            return sp.const_node(test(vals));
        }
        const auto& universe = d.secondary().universe();
        auto self = this;
        auto fn = [self, gterms = std::move(gterms), cells, test = std::move(test),
                   &universe](std::span<const int> slot_vals) {
            std::map<int, Element> cv;
            for (size_t i = 0; i < cells.size(); ++i) cv.emplace(cells[i], universe[slot_vals[i]]);
            std::vector<Element> vals;
            vals.reserve(gterms.size());
            for (const auto& g : gterms) vals.push_back(self->eval_gterm(g, cv));
            return test(vals);
        };
        return sp.atom(cells, std::move(fn));
    }

    int ground(const SOFormula& f) {
        // Memo key: node plus the values of its free point variables.
        const auto& fv = free_vars(&f);
        std::vector<long long> key;
        key.reserve(fv.size());
        for (int v : fv) key.push_back(env[v - 1]);
        auto mk = std::make_pair(&f, std::move(key));
        auto it = memo.find(mk);
        if (it != memo.end()) return it->second;
        int node = ground_uncached(f);
        memo.emplace(std::move(mk), node);
        return node;
    }

    int ground_uncached(const SOFormula& f) {
        switch (f.kind()) {
        case SOFormula::Kind::PointEq:
            return sp.const_node(point(*f.point_terms()[0]) == point(*f.point_terms()[1]));
        case SOFormula::Kind::PrimRel: {
            std::vector<Element> args;
            args.reserve(f.point_terms().size());
            for (const auto& p : f.point_terms())
                args.push_back(d.primary().universe()[point(*p)]);
            return sp.const_node(d.primary().holds(f.symbol(), args));
        }
        case SOFormula::Kind::WeightEq: {
            GTerm a = gweight(*f.weight_terms()[0]);
            GTerm b = gweight(*f.weight_terms()[1]);
            // Fast path: cell against constant or cell.
            if (a.kind == GTerm::Kind::Cell && b.kind == GTerm::Kind::Const)
                return sp.atom_slot_eq_const(a.slot, static_cast<int>(d.secondary().index_of(b.cval)));
            if (b.kind == GTerm::Kind::Cell && a.kind == GTerm::Kind::Const)
                return sp.atom_slot_eq_const(b.slot, static_cast<int>(d.secondary().index_of(a.cval)));
            if (a.kind == GTerm::Kind::Cell && b.kind == GTerm::Kind::Cell)
                return sp.atom_slot_eq_slot(a.slot, b.slot);
            return atom_from({std::move(a), std::move(b)},
                             [](std::span<const Element> v) { return v[0] == v[1]; });
        }
        case SOFormula::Kind::SecRel: {
            std::vector<GTerm> gs;
            gs.reserve(f.weight_terms().size());
            for (const auto& w : f.weight_terms()) gs.push_back(gweight(*w));
            const Structure* sec = &d.secondary();
            std::string rel = f.symbol();
            return atom_from(std::move(gs), [sec, rel](std::span<const Element> v) {
                return sec->holds(rel, v);
            });
        }
        case SOFormula::Kind::Not:
            return sp.not_node(ground(*f.left()));
        case SOFormula::Kind::And: {
            std::vector<int> kids{ground(*f.left()), ground(*f.right())};
            return sp.and_node(kids);
        }
        case SOFormula::Kind::Or: {
            std::vector<int> kids{ground(*f.left()), ground(*f.right())};
            return sp.or_node(kids);
        }
        case SOFormula::Kind::ForallPoint:
        case SOFormula::Kind::ExistsPoint: {
            int v = f.point_var();
            if (static_cast<int>(env.size()) < v) env.resize(v, 0);
            long long saved = env[v - 1];
            std::vector<int> kids;
            kids.reserve(n);
            for (long long a = 0; a < n; ++a) {
                env[v - 1] = a;
                kids.push_back(ground(*f.left()));
            }
            env[v - 1] = saved;
            return f.kind() == SOFormula::Kind::ForallPoint ? sp.and_node(kids) : sp.or_node(kids);
        }
        case SOFormula::Kind::ForallSO:
        case SOFormula::Kind::ExistsSO:
            throw Error("second-order quantifiers must precede the first-order matrix");
        }
        throw Error("unreachable");
    }
};

} // namespace

bool eval_so_finite(const SOFormula& phi, const MetafiniteStructure& d) {
    if (!d.secondary().is_finite())
        throw BackendError("second-order search needs a finite secondary universe, got " +
                           d.secondary().name());
    {
        std::set<std::string> so;
        phi.free_so_vars(so);
        if (!so.empty()) throw Error("free second-order variable: " + *so.begin());
        std::set<int> pv;
        phi.free_point_vars(pv);
        if (!pv.empty()) throw Error("free point variable in sentence");
    }
    auto [prefix, matrix] = split_so_prefix(phi);

    long long n = d.size();
    int domain = static_cast<int>(d.secondary().universe().size());
    SearchSpace sp;
    Grounder g{d, sp, {}, {}, {}, std::vector<long long>(phi.max_point_var(), 0), n};

    // Slots for every prefix entry in order; the innermost binding of a name
    // wins for lookups in the matrix.
    std::vector<std::pair<int, int>> entry_slots; // (base, count)
    for (const auto& e : prefix) {
        long long cells = 1;
        for (int i = 0; i < e.arity; ++i) cells *= n;
        int base = -1;
        for (long long c = 0; c < cells; ++c) {
            int s = sp.add_slot(domain);
            if (c == 0) base = s;
        }
        entry_slots.emplace_back(base, static_cast<int>(cells));
        g.so_slots[e.name] = {base, e.arity};
    }

    int root = g.ground(*matrix);

    std::vector<SearchSpace::Block> blocks;
    for (size_t i = 0; i < prefix.size(); ++i) {
        if (blocks.empty() || blocks.back().existential != prefix[i].existential)
            blocks.push_back({prefix[i].existential, {}, false});
        for (int c = 0; c < entry_slots[i].second; ++c)
            blocks.back().slots.push_back(entry_slots[i].first + c);
    }
    if (blocks.empty()) {
        // Purely first-order sentence.
        return eval_fo_metafinite(*matrix, d);
    }
    return sp.solve(root, blocks);
}

namespace {

bool so_flat_rec(const std::vector<SOPrefixEntry>& prefix, size_t i, const SOFormula& matrix,
                 const MetafiniteStructure& d, std::map<std::string, WeightTable>& fixed) {
    if (i == prefix.size()) return eval_fo_metafinite(matrix, d, fixed);
    const auto& e = prefix[i];
    long long cells = 1;
    for (int a = 0; a < e.arity; ++a) cells *= d.size();
    const auto& universe = d.secondary().universe();
    std::vector<int> idx(cells, 0);
    bool saved_present = fixed.count(e.name) > 0;
    WeightTable saved;
    if (saved_present) saved = fixed[e.name];
    for (;;) {
        WeightTable table;
        table.arity = e.arity;
        table.values.reserve(cells);
        for (long long c = 0; c < cells; ++c) table.values.push_back(universe[idx[c]]);
        fixed[e.name] = std::move(table);
        bool r = so_flat_rec(prefix, i + 1, matrix, d, fixed);
        if (e.existential && r) {
            if (saved_present) fixed[e.name] = saved; else fixed.erase(e.name);
            return true;
        }
        if (!e.existential && !r) {
            if (saved_present) fixed[e.name] = saved; else fixed.erase(e.name);
            return false;
        }
        long long c = cells - 1;
        while (c >= 0 && ++idx[c] == static_cast<int>(universe.size())) idx[c--] = 0;
        if (c < 0) break;
    }
    if (saved_present) fixed[e.name] = saved; else fixed.erase(e.name);
    return !e.existential;
}

} // namespace

bool eval_so_flat(const SOFormula& phi, const MetafiniteStructure& d) {
    if (!d.secondary().is_finite())
        throw BackendError("second-order search needs a finite secondary universe");
    auto [prefix, matrix] = split_so_prefix(phi);
    std::map<std::string, WeightTable> fixed;
    return so_flat_rec(prefix, 0, *matrix, d, fixed);
}

// ---------------------------------------------------------------------------
// Syntax-tree encodings and the satisfiability-describing sentence

namespace {

std::string f_rel_name(const Vocabulary& voc, const std::string& f) {
    bool word = !f.empty() && (std::isalpha(static_cast<unsigned char>(f[0])) || f[0] == '_') &&
                std::all_of(f.begin(), f.end(), [](char c) {
                    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
                });
    if (word) return "F_" + f;
    return "F" + std::to_string(*voc.function_index(f));
}

std::string q_rel_name(const Vocabulary& voc, const std::string& p) {
    bool word = !p.empty() && (std::isalpha(static_cast<unsigned char>(p[0])) || p[0] == '_') &&
                std::all_of(p.begin(), p.end(), [](char c) {
                    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
                });
    if (word) return "Q_" + p;
    return "Q" + std::to_string(*voc.relation_index(p));
}

struct TreeBuilder {
    const Structure& sec;
    const Vocabulary& ovoc;

    std::map<int, int> var_node; // variable index -> node id
    int next_const = 0, next_comp = 0, next_sub = 0;
    int const_base = 0, comp_base = 0, sub_base = 0;
    int n_vars = 0, n_consts = 0, n_comps = 0, n_subs = 0;

    std::vector<std::vector<std::vector<long long>>> frel; // per object function
    std::vector<std::vector<std::vector<long long>>> qrel; // per object relation
    std::vector<std::vector<long long>> equal_t, not_t, and_t, or_t;
    std::vector<long long> var_ids, con_ids, term_ids, sub_ids;
    std::vector<std::pair<long long, Element>> const_values;

    // First pass: counts.
    void count_term(const Term& t, std::set<int>& vars) {
        switch (t.kind()) {
        case Term::Kind::Variable: vars.insert(t.var_index()); break;
        case Term::Kind::Constant: ++n_consts; break;
        case Term::Kind::Apply:
            for (const auto& a : t.args()) count_term(*a, vars);
            ++n_comps;
            break;
        }
    }

    void count(const Formula& f, std::set<int>& vars) {
        switch (f.kind()) {
        case Formula::Kind::Eq:
        case Formula::Kind::Rel:
            for (const auto& t : f.terms()) count_term(*t, vars);
            ++n_subs;
            break;
        case Formula::Kind::Not:
            count(*f.left(), vars);
            ++n_subs;
            break;
        case Formula::Kind::And:
        case Formula::Kind::Or:
            count(*f.left(), vars);
            count(*f.right(), vars);
            ++n_subs;
            break;
        default:
            throw Error("syntax-tree encoding needs a quantifier-free formula");
        }
    }

    // Second pass: node ids in the canonical numbering.
    int term_node(const Term& t) {
        switch (t.kind()) {
        case Term::Kind::Variable: {
            int id = var_node.at(t.var_index());
            term_ids.push_back(id);
            return id;
        }
        case Term::Kind::Constant: {
            int id = const_base + next_const++;
            con_ids.push_back(id);
            term_ids.push_back(id);
            const_values.emplace_back(id, sec.constant(t.symbol()));
            return id;
        }
        case Term::Kind::Apply: {
            std::vector<long long> args;
            args.reserve(t.args().size());
            for (const auto& a : t.args()) args.push_back(term_node(*a));
            int id = comp_base + next_comp++;
            term_ids.push_back(id);
            args.push_back(id);
            frel[*ovoc.function_index(t.symbol())].push_back(std::move(args));
            return id;
        }
        }
        throw Error("unreachable");
    }

    int formula_node(const Formula& f) {
        switch (f.kind()) {
        case Formula::Kind::Eq: {
            long long a = term_node(*f.terms()[0]);
            long long b = term_node(*f.terms()[1]);
            int id = sub_base + next_sub++;
            sub_ids.push_back(id);
            equal_t.push_back({a, b, id});
            return id;
        }
        case Formula::Kind::Rel: {
            std::vector<long long> args;
            for (const auto& t : f.terms()) args.push_back(term_node(*t));
            int id = sub_base + next_sub++;
            sub_ids.push_back(id);
            args.push_back(id);
            qrel[*ovoc.relation_index(f.symbol())].push_back(std::move(args));
            return id;
        }
        case Formula::Kind::Not: {
            long long a = formula_node(*f.left());
            int id = sub_base + next_sub++;
            sub_ids.push_back(id);
            not_t.push_back({a, id});
            return id;
        }
        case Formula::Kind::And:
        case Formula::Kind::Or: {
            long long a = formula_node(*f.left());
            long long b = formula_node(*f.right());
            int id = sub_base + next_sub++;
            sub_ids.push_back(id);
            if (f.kind() == Formula::Kind::And) and_t.push_back({a, b, id});
            else or_t.push_back({a, b, id});
            return id;
        }
        default:
            throw Error("syntax-tree encoding needs a quantifier-free formula");
        }
    }
};

} // namespace

MetafiniteVocabulary syntax_tree_vocabulary(const Vocabulary& object_voc, const Structure& secondary) {
    std::vector<std::pair<std::string, int>> rels = {
        {"Var", 1}, {"Con", 1}, {"Term", 1}, {"Subform", 1}, {"Form", 1},
    };
    for (const auto& [f, k] : object_voc.functions()) rels.emplace_back(f_rel_name(object_voc, f), k + 1);
    for (const auto& [p, k] : object_voc.relations()) rels.emplace_back(q_rel_name(object_voc, p), k + 1);
    rels.emplace_back("Equal", 3);
    rels.emplace_back("Not", 2);
    rels.emplace_back("And", 3);
    rels.emplace_back("Or", 3);
    Vocabulary primary({}, {}, std::move(rels));
    return MetafiniteVocabulary(std::move(primary), secondary.vocabulary(), {{"C", 1}});
}

MetafiniteStructure formula_to_metafinite(const Formula& phi, const Structure& secondary) {
    if (!phi.quantifier_free()) throw Error("syntax-tree encoding needs a quantifier-free formula");
    const Vocabulary& ovoc_ref = secondary.vocabulary();

    TreeBuilder tb{secondary, ovoc_ref, {}, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, {}, {}, {}, {}, {}, {}, {}, {}, {}, {}, {}};
    tb.frel.resize(ovoc_ref.functions().size());
    tb.qrel.resize(ovoc_ref.relations().size());

    std::set<int> vars;
    tb.count(phi, vars);
    tb.n_vars = static_cast<int>(vars.size());
    int id = 1;
    for (int v : vars) tb.var_node[v] = id++;
    tb.const_base = id;
    tb.comp_base = tb.const_base + tb.n_consts;
    tb.sub_base = tb.comp_base + tb.n_comps;
    for (const auto& [v, node] : tb.var_node) tb.var_ids.push_back(node);

    int root = tb.formula_node(phi);
    long long n = tb.sub_base + tb.n_subs - 1;

    // Deduplicate term ids (variable nodes recur per occurrence).
    std::sort(tb.term_ids.begin(), tb.term_ids.end());
    tb.term_ids.erase(std::unique(tb.term_ids.begin(), tb.term_ids.end()), tb.term_ids.end());

    MetafiniteVocabulary mvoc = syntax_tree_vocabulary(ovoc_ref, secondary);

    auto unary = [&](const std::vector<long long>& ids) {
        std::vector<std::vector<long long>> out;
        out.reserve(ids.size());
        for (long long i : ids) out.push_back({i - 1}); // store 0-based
        return out;
    };
    auto shift = [&](const std::vector<std::vector<long long>>& tuples) {
        std::vector<std::vector<long long>> out;
        out.reserve(tuples.size());
        for (const auto& t : tuples) {
            std::vector<long long> s;
            s.reserve(t.size());
            for (long long v : t) s.push_back(v - 1);
            out.push_back(std::move(s));
        }
        return out;
    };

    std::vector<std::tuple<std::string, int, std::vector<std::vector<long long>>>> rels;
    rels.emplace_back("Var", 1, unary(tb.var_ids));
    rels.emplace_back("Con", 1, unary(tb.con_ids));
    rels.emplace_back("Term", 1, unary(tb.term_ids));
    rels.emplace_back("Subform", 1, unary(tb.sub_ids));
    rels.emplace_back("Form", 1, unary({root}));
    for (size_t i = 0; i < ovoc_ref.functions().size(); ++i)
        rels.emplace_back(f_rel_name(ovoc_ref, ovoc_ref.functions()[i].first),
                          ovoc_ref.functions()[i].second + 1, shift(tb.frel[i]));
    for (size_t i = 0; i < ovoc_ref.relations().size(); ++i)
        rels.emplace_back(q_rel_name(ovoc_ref, ovoc_ref.relations()[i].first),
                          ovoc_ref.relations()[i].second + 1, shift(tb.qrel[i]));
    rels.emplace_back("Equal", 3, shift(tb.equal_t));
    rels.emplace_back("Not", 2, shift(tb.not_t));
    rels.emplace_back("And", 3, shift(tb.and_t));
    rels.emplace_back("Or", 3, shift(tb.or_t));

    Structure primary = Structure::finite(n, {}, {}, std::move(rels));

    WeightTable c_table;
    c_table.arity = 1;
    c_table.values.assign(n, secondary.zero());
    for (const auto& [node, val] : tb.const_values) c_table.values[node - 1] = val;

    return MetafiniteStructure(std::move(mvoc), std::move(primary), secondary,
                               {{"C", std::move(c_table)}});
}

SOFormulaPtr sat_describing_sentence(const Vocabulary& object_voc, const Structure& secondary) {
    int max_arity = 0;
    for (const auto& [f, k] : object_voc.functions()) max_arity = std::max(max_arity, k);
    for (const auto& [p, k] : object_voc.relations()) max_arity = std::max(max_arity, k);
    int K = std::max(2, max_arity);
    int vi = K + 1, vj = K + 2, vt = K + 3;

    auto pv = [](int v) { return PointTerm::var(v); };
    auto rel1 = [&](const char* r, int v) {
        return SOFormula::prim_rel(r, {pv(v)});
    };
    auto X = [&](int v) { return WeightTerm::so_app("X", {pv(v)}); };
    auto Cw = [&](int v) { return WeightTerm::weight_app("C", {pv(v)}); };
    auto secc = [&](const char* c) { return WeightTerm::sec_const(c); };
    auto weq = [&](WeightTermPtr a, WeightTermPtr b) {
        return SOFormula::weight_eq(std::move(a), std::move(b));
    };

    std::vector<SOFormulaPtr> valid;
    valid.push_back(SOFormula::implies(SOFormula::disj(rel1("Var", vi), rel1("Con", vi)),
                                       rel1("Term", vi)));
    valid.push_back(SOFormula::iff(rel1("Term", vi), SOFormula::negate(rel1("Subform", vi))));
    valid.push_back(SOFormula::implies(rel1("Form", vi), rel1("Subform", vi)));
    valid.push_back(rel1("Form", vt));
    valid.push_back(SOFormula::implies(SOFormula::conj(rel1("Form", 1), rel1("Form", 2)),
                                       SOFormula::point_eq(pv(1), pv(2))));
    for (const auto& [f, k] : object_voc.functions()) {
        std::vector<PointTermPtr> args;
        for (int i = 1; i <= k; ++i) args.push_back(pv(i));
        args.push_back(pv(vj));
        std::vector<SOFormulaPtr> heads;
        for (int i = 1; i <= k; ++i) heads.push_back(rel1("Term", i));
        heads.push_back(rel1("Term", vj));
        valid.push_back(SOFormula::implies(
            SOFormula::prim_rel(f_rel_name(object_voc, f), std::move(args)),
            SOFormula::conj_all(std::move(heads))));
    }
    for (const auto& [p, k] : object_voc.relations()) {
        std::vector<PointTermPtr> args;
        for (int i = 1; i <= k; ++i) args.push_back(pv(i));
        args.push_back(pv(vj));
        std::vector<SOFormulaPtr> heads;
        for (int i = 1; i <= k; ++i) heads.push_back(rel1("Term", i));
        heads.push_back(rel1("Subform", vj));
        valid.push_back(SOFormula::implies(
            SOFormula::prim_rel(q_rel_name(object_voc, p), std::move(args)),
            SOFormula::conj_all(std::move(heads))));
    }
    valid.push_back(SOFormula::implies(
        SOFormula::prim_rel("Equal", {pv(1), pv(2), pv(vj)}),
        SOFormula::conj_all({rel1("Term", 1), rel1("Term", 2), rel1("Subform", vj)})));
    valid.push_back(SOFormula::implies(SOFormula::prim_rel("Not", {pv(vi), pv(vj)}),
                                       SOFormula::conj(rel1("Subform", vi), rel1("Subform", vj))));
    valid.push_back(SOFormula::implies(
        SOFormula::prim_rel("And", {pv(1), pv(2), pv(vj)}),
        SOFormula::conj_all({rel1("Subform", 1), rel1("Subform", 2), rel1("Subform", vj)})));
    valid.push_back(SOFormula::implies(
        SOFormula::prim_rel("Or", {pv(1), pv(2), pv(vj)}),
        SOFormula::conj_all({rel1("Subform", 1), rel1("Subform", 2), rel1("Subform", vj)})));

    SOFormulaPtr valid_f = SOFormula::conj_all(std::move(valid));
    valid_f = SOFormula::exists_point(vt, valid_f);
    for (int v = vj; v >= 1; --v) valid_f = SOFormula::forall_point(v, valid_f);

    std::vector<SOFormulaPtr> sat;
    sat.push_back(SOFormula::implies(rel1("Con", vi), weq(X(vi), Cw(vi))));
    for (const auto& [f, k] : object_voc.functions()) {
        std::vector<PointTermPtr> args;
        for (int i = 1; i <= k; ++i) args.push_back(pv(i));
        args.push_back(pv(vj));
        std::vector<WeightTermPtr> wargs;
        for (int i = 1; i <= k; ++i) wargs.push_back(X(i));
        sat.push_back(SOFormula::implies(
            SOFormula::prim_rel(f_rel_name(object_voc, f), std::move(args)),
            weq(X(vj), WeightTerm::sec_app(f, std::move(wargs)))));
    }
    sat.push_back(SOFormula::implies(rel1("Subform", vi),
                                     SOFormula::disj(weq(X(vi), secc("0")), weq(X(vi), secc("1")))));
    for (const auto& [p, k] : object_voc.relations()) {
        std::vector<PointTermPtr> args;
        for (int i = 1; i <= k; ++i) args.push_back(pv(i));
        args.push_back(pv(vj));
        std::vector<WeightTermPtr> wargs;
        for (int i = 1; i <= k; ++i) wargs.push_back(X(i));
        sat.push_back(SOFormula::implies(
            SOFormula::prim_rel(q_rel_name(object_voc, p), std::move(args)),
            SOFormula::iff(weq(X(vj), secc("1")), SOFormula::sec_rel(p, std::move(wargs)))));
    }
    sat.push_back(SOFormula::implies(
        SOFormula::prim_rel("Equal", {pv(1), pv(2), pv(vj)}),
        SOFormula::iff(weq(X(vj), secc("1")), weq(X(1), X(2)))));
    sat.push_back(SOFormula::implies(
        SOFormula::prim_rel("Not", {pv(vi), pv(vj)}),
        SOFormula::iff(weq(X(vj), secc("1")), weq(X(vi), secc("0")))));
    sat.push_back(SOFormula::implies(
        SOFormula::prim_rel("And", {pv(1), pv(2), pv(vj)}),
        SOFormula::iff(weq(X(vj), secc("1")),
                       SOFormula::conj(weq(X(1), secc("1")), weq(X(2), secc("1"))))));
    sat.push_back(SOFormula::implies(
        SOFormula::prim_rel("Or", {pv(1), pv(2), pv(vj)}),
        SOFormula::iff(weq(X(vj), secc("1")),
                       SOFormula::disj(weq(X(1), secc("1")), weq(X(2), secc("1"))))));
    // The root subformula is satisfied. Without this clause the sentence only
    // says that X computes some valuation.
    sat.push_back(SOFormula::implies(rel1("Form", vi), weq(X(vi), secc("1"))));

    SOFormulaPtr sat_f = SOFormula::conj_all(std::move(sat));
    for (int v = vj; v >= 1; --v) sat_f = SOFormula::forall_point(v, sat_f);

    (void)secondary;
    return SOFormula::exists_so("X", 1, SOFormula::conj(valid_f, sat_f));
}

// ---------------------------------------------------------------------------
// Text format

MetafiniteStructure MetafiniteStructure::load(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    size_t lineno = 0;
    long long n = -1;
    std::string secondary_name;
    std::string primary_doc; // structure-format lines, 0-based after shifting
    std::vector<std::pair<std::string, int>> weight_decls;
    std::map<std::string, WeightTable> tables;
    std::map<std::string, std::vector<char>> row_seen;
    std::string current_weight;
    int current_arity = 0;
    std::vector<std::tuple<std::string, long long, std::string>> pending_literals;

    auto shift_tuple = [&](const std::string& s, size_t ln) {
        size_t open = s.find('(');
        size_t close = s.find(')', open);
        if (open == std::string::npos || close == std::string::npos)
            throw ParseError("expected tuple", ln, 1);
        std::vector<long long> out;
        std::string body = s.substr(open + 1, close - open - 1);
        if (body.find_first_not_of(" \t") != std::string::npos) {
            std::istringstream bs(body);
            std::string item;
            while (std::getline(bs, item, ',')) out.push_back(std::stoll(item) - 1);
        }
        return out;
    };

    while (std::getline(in, line)) {
        ++lineno;
        size_t h = line.find('#');
        if (h != std::string::npos) line.erase(h);
        size_t b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        size_t e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);
        std::istringstream ls(line);
        std::string kw;
        ls >> kw;
        if (kw == "primary") {
            ls >> n;
            if (ls.fail() || n < 1) throw ParseError("expected 'primary <n>'", lineno, 1);
            primary_doc = "universe " + std::to_string(n) + "\n";
        } else if (kw == "secondary") {
            ls >> secondary_name;
        } else if (kw == "weight") {
            std::string tok;
            ls >> tok;
            if (!tok.empty() && tok.back() == ':') tok.pop_back();
            size_t slash = tok.find('/');
            if (slash == std::string::npos) throw ParseError("expected weight <name>/<k>:", lineno, 1);
            current_weight = tok.substr(0, slash);
            current_arity = std::stoi(tok.substr(slash + 1));
            weight_decls.emplace_back(current_weight, current_arity);
            tables[current_weight].arity = current_arity;
        } else if (kw == "rel" || kw == "fun" || kw == "const") {
            if (n < 1) throw ParseError("'primary <n>' must come first", lineno, 1);
            // Shift the 1-based indices of the metafinite format down to the
            // 0-based structure format.
            if (kw == "const") {
                std::string name, eq;
                long long idx;
                ls >> name >> eq >> idx;
                primary_doc += "const " + name + " = " + std::to_string(idx - 1) + "\n";
            } else if (kw == "rel") {
                std::string tok, rest;
                ls >> tok;
                std::getline(ls, rest);
                auto t = shift_tuple(rest, lineno);
                std::string row = "rel " + tok + " (";
                for (size_t i = 0; i < t.size(); ++i) row += (i ? "," : "") + std::to_string(t[i]);
                row += ")\n";
                primary_doc += row;
            } else {
                std::string tok, rest;
                ls >> tok;
                std::getline(ls, rest);
                size_t arrow = rest.find("->");
                if (arrow == std::string::npos) throw ParseError("expected '->'", lineno, 1);
                auto t = shift_tuple(rest.substr(0, arrow), lineno);
                long long val = std::stoll(rest.substr(arrow + 2)) - 1;
                std::string row = "fun " + tok + " (";
                for (size_t i = 0; i < t.size(); ++i) row += (i ? "," : "") + std::to_string(t[i]);
                row += ") -> " + std::to_string(val) + "\n";
                primary_doc += row;
            }
        } else if (kw[0] == '(') {
            if (current_weight.empty()) throw ParseError("weight row outside a weight block", lineno, 1);
            if (n < 1) throw ParseError("'primary <n>' must come first", lineno, 1);
            size_t arrow = line.find("->");
            if (arrow == std::string::npos) throw ParseError("expected '->'", lineno, 1);
            auto t = shift_tuple(line.substr(0, arrow), lineno);
            if (static_cast<int>(t.size()) != current_arity)
                throw ParseError("weight tuple arity mismatch", lineno, 1);
            std::string lit = line.substr(arrow + 2);
            size_t lb = lit.find_first_not_of(" \t");
            lit = lit.substr(lb);
            long long idx = 0;
            for (long long v : t) {
                if (v < 0 || v >= n) throw ParseError("weight tuple entry out of range", lineno, 1);
                idx = idx * n + v;
            }
            auto& tab = tables[current_weight];
            if (tab.values.empty()) {
                long long cells = 1;
                for (int i = 0; i < current_arity; ++i) cells *= n;
                tab.values.assign(cells, Element(Bit{0}));
                row_seen[current_weight].assign(cells, 0);
            }
            if (row_seen[current_weight][idx])
                throw ParseError("duplicate weight row", lineno, 1);
            row_seen[current_weight][idx] = 1;
            // Secondary literals are parsed once the backend is known.
            pending_literals.emplace_back(current_weight, idx, lit);
        } else {
            throw ParseError("unrecognized directive '" + kw + "'", lineno, 1);
        }
    }
    if (n < 1) throw ParseError("missing 'primary <n>'");
    if (secondary_name.empty()) throw ParseError("missing 'secondary <backend>'");

    Structure secondary = Structure::by_name(secondary_name);
    for (const auto& [wname, idx, lit] : pending_literals)
        tables[wname].values[idx] = secondary.parse_element(lit);
    for (const auto& [wname, seen] : row_seen)
        for (char c : seen)
            if (!c) throw ParseError("weight table not total: " + wname);

    Structure primary = Structure::load(primary_doc);
    MetafiniteVocabulary voc(primary.vocabulary(), secondary.vocabulary(), weight_decls);
    return MetafiniteStructure(std::move(voc), std::move(primary), std::move(secondary),
                               std::move(tables));
}

SOClass classify_so(const SOFormula& phi) {
    SOClass out{PrenexKind::Sigma, 0, true};
    std::set<std::string> consts;
    phi.sec_constants(consts);
    for (const auto& c : consts)
        if (c != "0" && c != "1") out.boolean_fragment = false;

    const SOFormula* p = &phi;
    int blocks = 0;
    bool last = false, first = false;
    while (p->kind() == SOFormula::Kind::ForallSO || p->kind() == SOFormula::Kind::ExistsSO) {
        bool ex = p->kind() == SOFormula::Kind::ExistsSO;
        if (blocks == 0) {
            first = ex;
            blocks = 1;
        } else if (ex != last) {
            ++blocks;
        }
        last = ex;
        p = p->left().get();
    }
    if (!p->so_quantifier_free())
        throw Error("classify_so: second-order quantifier under the first-order matrix");
    out.kind = blocks == 0 ? PrenexKind::Sigma : (first ? PrenexKind::Sigma : PrenexKind::Pi);
    out.k = blocks;
    return out;
}

} // namespace rml
