#include "rml/cooklevin.hpp"

#include "rml/errors.hpp"

#include <algorithm>
#include <map>

namespace rml {

int TableauLayout::s_var(int p, long long t) const {
    return static_cast<int>((p - 1) * (T + 1) + t) + 1;
}

int TableauLayout::i_var(int j, int p, long long t) const {
    long long base = static_cast<long long>(W) * (T + 1);
    return static_cast<int>(base + (static_cast<long long>(j) * W + (p - 1)) * (T + 1) + t) + 1;
}

int TableauLayout::z_var(long long i, long long t) const {
    long long base = static_cast<long long>(W) * (T + 1) * (1 + k_p);
    return static_cast<int>(base + t * T + i) + 1;
}

int TableauLayout::total_vars() const {
    return static_cast<int>(static_cast<long long>(W) * (T + 1) * (1 + k_p) + T * (T + 1));
}

long long TableauLayout::witness_base(int j) const { return 2 * (n + static_cast<long long>(j - 1) * q); }

namespace {

// Shared builder state: formulas for repeated fragments are constructed once
// and shared; the matrix is a DAG.
struct Builder {
    const Machine& m;
    const TableauLayout& L;
    TermPtr zero_term;
    TermPtr one_term;
    std::vector<TermPtr> var_terms; // 1-based cache

    Builder(const Machine& mm, const TableauLayout& layout)
        : m(mm), L(layout), zero_term(Term::constant("0")), one_term(Term::constant("1")) {
        var_terms.resize(L.total_vars() + 1);
        for (int i = 1; i <= L.total_vars(); ++i) var_terms[i] = Term::var(i);
    }

    const TermPtr& var(int id) { return var_terms[id]; }
    const TermPtr& bit_term(int b) { return b ? one_term : zero_term; }

    FormulaPtr bit_eq(int var_id, int b) { return Formula::eq(var(var_id), bit_term(b)); }
    FormulaPtr var_eq(int a, int b) { return Formula::eq(var(a), var(b)); }

    // instruction(l, t): the W label bits of row t, most significant first.
    std::map<std::pair<int, long long>, FormulaPtr> instr_cache;
    FormulaPtr instruction(int label, long long t) {
        auto key = std::make_pair(label, t);
        auto it = instr_cache.find(key);
        if (it != instr_cache.end()) return it->second;
        std::vector<FormulaPtr> bits;
        bits.reserve(L.W);
        for (int p = 1; p <= L.W; ++p) {
            int b = (label >> (L.W - p)) & 1;
            bits.push_back(bit_eq(L.s_var(p, t), b));
        }
        FormulaPtr f = Formula::conj_all(std::move(bits));
        instr_cache.emplace(key, f);
        return f;
    }

    // index_j(value, t).
    std::map<std::tuple<int, long long, long long>, FormulaPtr> index_cache;
    FormulaPtr index(int j, long long value, long long t) {
        auto key = std::make_tuple(j, value, t);
        auto it = index_cache.find(key);
        if (it != index_cache.end()) return it->second;
        std::vector<FormulaPtr> bits;
        bits.reserve(L.W);
        for (int p = 1; p <= L.W; ++p) {
            int b = static_cast<int>((value >> (L.W - p)) & 1);
            bits.push_back(bit_eq(L.i_var(j, p, t), b));
        }
        FormulaPtr f = Formula::conj_all(std::move(bits));
        index_cache.emplace(key, f);
        return f;
    }

    // Z-persistence from row t to t+1, skipping one cell (or none: skip = -1).
    std::map<std::pair<long long, long long>, FormulaPtr> zpersist_cache;
    FormulaPtr z_persist(long long t, long long skip) {
        auto key = std::make_pair(t, skip);
        auto it = zpersist_cache.find(key);
        if (it != zpersist_cache.end()) return it->second;
        std::vector<FormulaPtr> eqs;
        eqs.reserve(L.T);
        for (long long i = 0; i < L.T; ++i) {
            if (i == skip) continue;
            eqs.push_back(var_eq(L.z_var(i, t + 1), L.z_var(i, t)));
        }
        FormulaPtr f = eqs.empty() ? Formula::eq(zero_term, zero_term) : Formula::conj_all(std::move(eqs));
        zpersist_cache.emplace(key, f);
        return f;
    }

    // I-persistence from row t to t+1, skipping one register (or none).
    std::map<std::pair<long long, int>, FormulaPtr> ipersist_cache;
    FormulaPtr i_persist(long long t, int skip) {
        auto key = std::make_pair(t, skip);
        auto it = ipersist_cache.find(key);
        if (it != ipersist_cache.end()) return it->second;
        std::vector<FormulaPtr> eqs;
        for (int j = 0; j < L.k_p; ++j) {
            if (j == skip) continue;
            for (int p = 1; p <= L.W; ++p)
                eqs.push_back(var_eq(L.i_var(j, p, t + 1), L.i_var(j, p, t)));
        }
        FormulaPtr f = eqs.empty() ? Formula::eq(zero_term, zero_term) : Formula::conj_all(std::move(eqs));
        ipersist_cache.emplace(key, f);
        return f;
    }

    TermPtr z_term(long long i, long long t) { return var(L.z_var(i, t)); }
};

} // namespace

size_t CookLevinOutput::atom_bound(const TableauLayout& L, const Program& p) {
    // start: W + k_p*W + T; accept: W + 1. Per update(l,t): guard W plus a
    // body of at most T^2 guarded blocks, each at most 2W + T + k_p*W + W + a
    // atoms where a is the largest instruction arity.
    size_t a = 2;
    for (const auto& ins : p.instructions())
        if (const auto* f = std::get_if<AssignFun>(&ins)) a = std::max(a, f->args.size() + 1);
    size_t T = static_cast<size_t>(L.T);
    size_t W = static_cast<size_t>(L.W);
    size_t per_block = 2 * W + T + static_cast<size_t>(L.k_p) * W + 2 * W + a;
    size_t per_update = W + (T * T + 1) * per_block;
    return (W + static_cast<size_t>(L.k_p) * W + T) + (W + 1) +
           static_cast<size_t>(p.last_label() + 1) * T * per_update;
}

CookLevinOutput compile_tableau(const Machine& m, const ElementString& v, int q, int k,
                                long long T, TableauForm form) {
    const Structure& s = m.structure;
    if (!s.classify().bipointed) throw Error("tableau compilation needs a bipointed structure");
    if (m.program.uses_oracle()) throw Error("tableau compilation does not support oracle instructions");
    if (T < 1) throw Error("step bound must be at least 1");
    if (k < 0 || q < 0 || (k > 0 && q < 1)) throw Error("bad witness parameters");

    TableauLayout L;
    L.T = T;
    L.k_p = m.program.index_registers();
    L.n = static_cast<long long>(v.size());
    L.q = q;
    L.k = k;
    int W = 1;
    while ((1LL << W) <= T) ++W; // W = floor(log2 T) + 1
    L.W = W;

    if (m.program.last_label() >= (1LL << W))
        throw Error("step bound too small to index the program: l_P >= 2^W");
    long long input_len = k == 0 ? L.n : 2 * (L.n + static_cast<long long>(k) * q);
    if (input_len > T)
        throw Error("step bound too small for the input cells: need " + std::to_string(input_len));
    if (m.program.max_z_register() >= T)
        throw Error("step bound too small for the program's fixed registers");

    Builder b(m, L);

    // start: instruction 0 at time 0, index registers, and the input row.
    std::vector<FormulaPtr> start;
    start.push_back(b.instruction(0, 0));
    start.push_back(b.index(0, input_len, 0));
    for (int j = 1; j < L.k_p; ++j) start.push_back(b.index(j, 0, 0));

    auto input_const = [&](const Element& e) -> TermPtr {
        auto name = s.constant_name_for(e);
        if (!name)
            throw Error("input element " + to_string(e) + " has no constant symbol in " + s.name());
        return Term::constant(*name);
    };

    if (k == 0) {
        for (long long i = 0; i < L.n; ++i)
            start.push_back(Formula::eq(b.z_term(i, 0), input_const(v[i])));
        for (long long i = L.n; i < T; ++i)
            start.push_back(Formula::eq(b.z_term(i, 0), b.zero_term));
    } else {
        // Code layout (0,v_1,...,0,v_n,1,w_11,...): payload at odd cells,
        // separators at even cells, boundary 1 before each witness block.
        std::set<long long> boundaries;
        for (int j = 0; j < k; ++j) boundaries.insert(2 * (L.n + static_cast<long long>(j) * q));
        for (long long i = 1; i <= L.n; ++i)
            start.push_back(Formula::eq(b.z_term(2 * i - 1, 0), input_const(v[i - 1])));
        for (long long e = 0; e < T; e += 2)
            start.push_back(Formula::eq(b.z_term(e, 0), boundaries.count(e) ? b.one_term : b.zero_term));
        // Odd cells beyond the code stay free, as do the witness cells.
    }
    FormulaPtr start_f = Formula::conj_all(std::move(start));

    // update(l, t) for every instruction and time, guarded by instruction(l,t).
    std::vector<FormulaPtr> updates;
    const auto& instructions = m.program.instructions();
    for (int l = 0; l <= m.program.last_label(); ++l) {
        for (long long t = 0; t < T; ++t) {
            FormulaPtr guard = b.instruction(l, t);
            std::vector<FormulaPtr> body;
            std::visit(
                [&](const auto& ins) {
                    using Ty = std::decay_t<decltype(ins)>;
                    if constexpr (std::is_same_v<Ty, AssignConst>) {
                        body.push_back(b.instruction(l + 1, t + 1));
                        body.push_back(Formula::eq(b.z_term(ins.dst, t + 1), Term::constant(ins.constant)));
                        body.push_back(b.z_persist(t, ins.dst));
                        body.push_back(b.i_persist(t, -1));
                    } else if constexpr (std::is_same_v<Ty, AssignFun>) {
                        body.push_back(b.instruction(l + 1, t + 1));
                        std::vector<TermPtr> args;
                        args.reserve(ins.args.size());
                        for (int r : ins.args) args.push_back(b.z_term(r, t));
                        body.push_back(Formula::eq(b.z_term(ins.dst, t + 1),
                                                   Term::apply(ins.fn, std::move(args))));
                        body.push_back(b.z_persist(t, ins.dst));
                        body.push_back(b.i_persist(t, -1));
                    } else if constexpr (std::is_same_v<Ty, BranchEqZ>) {
                        FormulaPtr cond = Formula::eq(b.z_term(ins.a, t), b.z_term(ins.b, t));
                        body.push_back(Formula::implies(cond, b.instruction(ins.if_true, t + 1)));
                        body.push_back(Formula::implies(Formula::negate(cond),
                                                        b.instruction(ins.if_false, t + 1)));
                        body.push_back(b.z_persist(t, -1));
                        body.push_back(b.i_persist(t, -1));
                    } else if constexpr (std::is_same_v<Ty, BranchRel>) {
                        std::vector<TermPtr> args;
                        args.reserve(ins.args.size());
                        for (int r : ins.args) args.push_back(b.z_term(r, t));
                        FormulaPtr cond = Formula::rel(ins.rel, std::move(args));
                        body.push_back(Formula::implies(cond, b.instruction(ins.if_true, t + 1)));
                        body.push_back(Formula::implies(Formula::negate(cond),
                                                        b.instruction(ins.if_false, t + 1)));
                        body.push_back(b.z_persist(t, -1));
                        body.push_back(b.i_persist(t, -1));
                    } else if constexpr (std::is_same_v<Ty, CopyIndirect>) {
                        body.push_back(b.instruction(l + 1, t + 1));
                        // The guard conjunction over all (n_j, n_j') pairs is
                        // expanded literally; the consequent pieces are shared.
                        FormulaPtr ip = b.i_persist(t, -1);
                        for (long long nj = 0; nj < T; ++nj) {
                            FormulaPtr frame = Formula::conj(b.z_persist(t, nj), ip);
                            for (long long nj2 = 0; nj2 < T; ++nj2) {
                                FormulaPtr conseq = Formula::conj(
                                    Formula::eq(b.z_term(nj, t + 1), b.z_term(nj2, t)), frame);
                                body.push_back(Formula::implies(
                                    Formula::conj(b.index(ins.dst_index_reg, nj, t),
                                                  b.index(ins.src_index_reg, nj2, t)),
                                    conseq));
                            }
                        }
                    } else if constexpr (std::is_same_v<Ty, IncIndex>) {
                        body.push_back(b.instruction(l + 1, t + 1));
                        for (long long nv = 0; nv + 1 < T; ++nv)
                            body.push_back(Formula::implies(b.index(ins.reg, nv, t),
                                                            b.index(ins.reg, nv + 1, t + 1)));
                        body.push_back(b.z_persist(t, -1));
                        body.push_back(b.i_persist(t, ins.reg));
                    } else if constexpr (std::is_same_v<Ty, DecIndex>) {
                        body.push_back(b.instruction(l + 1, t + 1));
                        for (long long nv = 0; nv < T; ++nv)
                            body.push_back(Formula::implies(b.index(ins.reg, nv, t),
                                                            b.index(ins.reg, nv > 0 ? nv - 1 : 0, t + 1)));
                        body.push_back(b.z_persist(t, -1));
                        body.push_back(b.i_persist(t, ins.reg));
                    } else if constexpr (std::is_same_v<Ty, BranchEqI>) {
                        std::vector<FormulaPtr> bits;
                        for (int p = 1; p <= L.W; ++p)
                            bits.push_back(b.var_eq(L.i_var(ins.a, p, t), L.i_var(ins.b, p, t)));
                        FormulaPtr bits_eq = Formula::conj_all(std::move(bits));
                        FormulaPtr inner = Formula::conj(
                            Formula::implies(bits_eq, b.instruction(ins.if_true, t + 1)),
                            Formula::implies(Formula::negate(bits_eq),
                                             b.instruction(ins.if_false, t + 1)));
                        for (long long nj = 0; nj < T; ++nj)
                            for (long long nj2 = 0; nj2 < T; ++nj2)
                                body.push_back(Formula::implies(
                                    Formula::conj(b.index(ins.a, nj, t), b.index(ins.b, nj2, t)),
                                    inner));
                        body.push_back(b.z_persist(t, -1));
                        body.push_back(b.i_persist(t, -1));
                    } else if constexpr (std::is_same_v<Ty, Stop>) {
                        body.push_back(b.instruction(m.program.last_label(), t + 1));
                        body.push_back(b.z_persist(t, -1));
                        body.push_back(b.i_persist(t, -1));
                    } else if constexpr (std::is_same_v<Ty, QueryOracle>) {
                        throw Error("tableau compilation does not support oracle instructions");
                    }
                },
                instructions[l]);
            updates.push_back(Formula::implies(guard, Formula::conj_all(std::move(body))));
        }
    }
    FormulaPtr update_f = Formula::conj_all(std::move(updates));

    // accept: output length 1 and Z[0] = 1 in the last row.
    FormulaPtr accept_f = Formula::conj(b.index(0, 1, T),
                                        Formula::eq(b.z_term(0, T), b.one_term));

    CookLevinOutput out;
    out.layout = L;
    out.form = form;
    FormulaPtr start_update = Formula::conj(start_f, update_f);
    out.phi = form == TableauForm::Conjunctive
                  ? Formula::conj(start_update, accept_f)
                  : Formula::implies(start_update, accept_f);
    out.atoms = out.phi->atom_count();

    std::set<int> witness_ids;
    for (int j = 1; j <= k; ++j) {
        std::vector<int> block;
        long long base = L.witness_base(j);
        for (int i = 1; i <= q; ++i) {
            int id = L.z_var(base + 2 * i - 1, 0);
            block.push_back(id);
            witness_ids.insert(id);
        }
        out.witness_vars.push_back(std::move(block));
    }
    for (int id = 1; id <= L.total_vars(); ++id)
        if (!witness_ids.count(id)) out.aux_vars.push_back(id);
    return out;
}

FormulaPtr assemble_sigma_k(const CookLevinOutput& out) {
    int k = out.layout.k;
    bool even = k % 2 == 0;
    if (k == 0 || !even) {
        if (out.form != TableauForm::Conjunctive)
            throw Error("odd (or zero) witness count pairs with the conjunctive form");
    } else if (out.form != TableauForm::Implicative) {
        throw Error("even witness count pairs with the implicative form");
    }

    // Innermost first: auxiliary block with the final block's quantifier.
    bool last_existential = k == 0 || k % 2 == 1;
    FormulaPtr f = out.phi;
    for (auto it = out.aux_vars.rbegin(); it != out.aux_vars.rend(); ++it)
        f = last_existential ? Formula::exists(*it, f) : Formula::forall(*it, f);
    for (int j = k; j >= 1; --j) {
        bool existential = j % 2 == 1;
        const auto& block = out.witness_vars[j - 1];
        for (auto it = block.rbegin(); it != block.rend(); ++it)
            f = existential ? Formula::exists(*it, f) : Formula::forall(*it, f);
    }
    return f;
}

long long tableau_bound(const Machine& m, const ElementString& v, int q, int k, long long budget) {
    if (!m.structure.is_finite())
        throw BackendError("tight bound computation needs a finite universe");
    const auto& universe = m.structure.universe();
    long long max_steps = 1;
    long long max_index = 0;

    auto consider = [&](const ElementString& input) {
        RunResult r = run(input, m, budget);
        if (!r.output)
            throw BudgetError("machine exceeded budget while computing the step bound");
        max_steps = std::max(max_steps, r.trace.steps);
        for (const auto& c : r.trace.configurations)
            for (long long x : c.index_registers) max_index = std::max(max_index, x);
    };

    if (k == 0) {
        consider(v);
    } else {
        std::vector<ElementString> parts(k + 1);
        parts[0] = v;
        std::vector<int> idx(static_cast<size_t>(k) * q, 0);
        for (;;) {
            for (int j = 0; j < k; ++j) {
                parts[j + 1].clear();
                for (int i = 0; i < q; ++i) parts[j + 1].push_back(universe[idx[j * q + i]]);
            }
            consider(pair_encode(parts, m.structure));
            int i = static_cast<int>(idx.size()) - 1;
            while (i >= 0 && ++idx[i] == static_cast<int>(universe.size())) idx[i--] = 0;
            if (i < 0) break;
        }
    }

    long long input_len = k == 0 ? static_cast<long long>(v.size())
                                 : 2 * (static_cast<long long>(v.size()) + static_cast<long long>(k) * q);
    long long T = std::max({max_steps, max_index + 1, input_len,
                            static_cast<long long>(m.program.max_z_register()) + 1, 1LL});
    auto width = [](long long t) {
        int w = 1;
        while ((1LL << w) <= t) ++w;
        return w;
    };
    while (m.program.last_label() >= (1LL << width(T))) ++T;
    return T;
}

ElementString trace_to_assignment(const Trace& trace, const TableauLayout& layout,
                                  const Structure& s) {
    if (trace.configurations.empty()) throw Error("empty trace");
    if (static_cast<long long>(trace.configurations.size()) > layout.T + 1)
        throw Error("trace exceeds the layout's step bound");
    const Configuration& first = trace.configurations.front();
    if (static_cast<int>(first.index_registers.size()) != layout.k_p)
        throw Error("trace does not match the layout's machine shape");

    ElementString assignment(layout.total_vars(), s.zero());
    for (long long t = 0; t <= layout.T; ++t) {
        const Configuration& c =
            trace.configurations[std::min<size_t>(t, trace.configurations.size() - 1)];
        for (int p = 1; p <= layout.W; ++p) {
            int bit = (c.label >> (layout.W - p)) & 1;
            assignment[layout.s_var(p, t) - 1] = bit ? s.one() : s.zero();
        }
        for (int j = 0; j < layout.k_p; ++j) {
            long long val = c.index_registers[j];
            for (int p = 1; p <= layout.W; ++p) {
                int bit = static_cast<int>((val >> (layout.W - p)) & 1);
                assignment[layout.i_var(j, p, t) - 1] = bit ? s.one() : s.zero();
            }
        }
        for (long long i = 0; i < layout.T; ++i) assignment[layout.z_var(i, t) - 1] = c.z(i, s);
    }
    return assignment;
}

bool boolean_fragment_check(const CookLevinOutput& out, const Machine& m, const ElementString& v) {
    bool vb = true;
    for (const auto& e : v)
        if (!(e == m.structure.zero()) && !(e == m.structure.one())) vb = false;
    bool expected = vb && analyze_constants(m).constant_free;
    std::set<std::string> consts;
    out.phi->constants(consts);
    bool scanned = true;
    for (const auto& c : consts)
        if (c != "0" && c != "1") scanned = false;
    if (expected && !scanned)
        throw Error("boolean fragment violated by the compiled formula"); // construction bug
    return expected;
}

} // namespace rml
