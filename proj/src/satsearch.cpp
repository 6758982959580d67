#include "rml/satsearch.hpp"

#include "rml/errors.hpp"

#include <algorithm>
#include <map>

namespace rml {

int SearchSpace::add_slot(int domain_size) {
    if (finalized_) throw Error("search space already finalized");
    if (domain_size < 1) throw Error("slot domain must be nonempty");
    slot_domain_.push_back(domain_size);
    slot_atoms_.emplace_back();
    return static_cast<int>(slot_domain_.size()) - 1;
}

int SearchSpace::new_node(Kind k, int8_t initial_value) {
    kind_.push_back(k);
    children_tmp_.emplace_back();
    atom_of_node_.push_back(-1);
    value_.push_back(initial_value);
    cnt_a_.push_back(0);
    cnt_b_.push_back(0);
    return static_cast<int>(kind_.size()) - 1;
}

int SearchSpace::const_node(bool v) { return new_node(Kind::Const, v ? kTrue : kFalse); }

int SearchSpace::atom(std::vector<int> slots, AtomFn fn) {
    if (slots.empty()) return const_node(fn({})); // no dependencies: decide now
    int n = new_node(Kind::Atom, kUnknown);
    AtomInfo info;
    info.slots = std::move(slots);
    info.fn = std::move(fn);
    atom_of_node_[n] = static_cast<int>(atoms_.size());
    for (int s : info.slots) slot_atoms_[s].push_back(n);
    cnt_a_[n] = static_cast<int>(info.slots.size());
    atoms_.push_back(std::move(info));
    return n;
}

int SearchSpace::atom_slot_eq_const(int slot, int value) {
    int n = new_node(Kind::Atom, kUnknown);
    AtomInfo info;
    info.slots = {slot};
    info.kind = 1;
    info.a = slot;
    info.b = value;
    atom_of_node_[n] = static_cast<int>(atoms_.size());
    slot_atoms_[slot].push_back(n);
    cnt_a_[n] = 1;
    atoms_.push_back(std::move(info));
    return n;
}

int SearchSpace::atom_slot_eq_slot(int a, int b) {
    if (a == b) return const_node(true);
    int n = new_node(Kind::Atom, kUnknown);
    AtomInfo info;
    info.slots = {a, b};
    info.kind = 2;
    info.a = a;
    info.b = b;
    atom_of_node_[n] = static_cast<int>(atoms_.size());
    slot_atoms_[a].push_back(n);
    slot_atoms_[b].push_back(n);
    cnt_a_[n] = 2;
    atoms_.push_back(std::move(info));
    return n;
}

int SearchSpace::not_node(int child) {
    // Fold constants eagerly; Not nodes otherwise.
    if (kind_[child] == Kind::Const) return const_node(value_[child] == kFalse);
    int n = new_node(Kind::Not, kUnknown);
    children_tmp_[n] = {child};
    return n;
}

int SearchSpace::and_node(const std::vector<int>& children) {
    std::vector<int32_t> kept;
    kept.reserve(children.size());
    for (int c : children) {
        if (kind_[c] == Kind::Const) {
            if (value_[c] == kFalse) return const_node(false);
            continue; // drop constant true
        }
        kept.push_back(c);
    }
    if (kept.empty()) return const_node(true);
    if (kept.size() == 1) return kept[0];
    int n = new_node(Kind::And, kUnknown);
    cnt_b_[n] = static_cast<int>(kept.size());
    children_tmp_[n] = std::move(kept);
    return n;
}

int SearchSpace::or_node(const std::vector<int>& children) {
    std::vector<int32_t> kept;
    kept.reserve(children.size());
    for (int c : children) {
        if (kind_[c] == Kind::Const) {
            if (value_[c] == kTrue) return const_node(true);
            continue;
        }
        kept.push_back(c);
    }
    if (kept.empty()) return const_node(false);
    if (kept.size() == 1) return kept[0];
    int n = new_node(Kind::Or, kUnknown);
    cnt_b_[n] = static_cast<int>(kept.size());
    children_tmp_[n] = std::move(kept);
    return n;
}

void SearchSpace::finalize(int root) {
    root_ = root;
    size_t n = kind_.size();
    // Children CSR.
    child_begin_.assign(n + 1, 0);
    for (size_t i = 0; i < n; ++i) child_begin_[i + 1] = child_begin_[i] + static_cast<int32_t>(children_tmp_[i].size());
    children_flat_.resize(child_begin_[n]);
    for (size_t i = 0; i < n; ++i)
        std::copy(children_tmp_[i].begin(), children_tmp_[i].end(), children_flat_.begin() + child_begin_[i]);
    // Parents CSR.
    parent_begin_.assign(n + 1, 0);
    for (int32_t c : children_flat_) parent_begin_[c + 1]++;
    for (size_t i = 0; i < n; ++i) parent_begin_[i + 1] += parent_begin_[i];
    parents_flat_.resize(children_flat_.size());
    std::vector<int32_t> fill(parent_begin_.begin(), parent_begin_.end() - 1);
    for (size_t p = 0; p < n; ++p)
        for (int32_t i = child_begin_[p]; i < child_begin_[p + 1]; ++i)
            parents_flat_[fill[children_flat_[i]]++] = static_cast<int32_t>(p);
    children_tmp_.clear();
    children_tmp_.shrink_to_fit();

    node_epoch_.assign(n, 0);
    slot_value_.assign(slot_domain_.size(), -1);
    in_queue_.assign(slot_domain_.size(), 0);
    slot_block_.assign(slot_domain_.size(), -1);
    finalized_ = true;
}

bool SearchSpace::eval_atom(int node) const {
    const AtomInfo& a = atoms_[atom_of_node_[node]];
    switch (a.kind) {
    case 1: return slot_value_[a.a] == a.b;
    case 2: return slot_value_[a.a] == slot_value_[a.b];
    default: break;
    }
    // Generic atom: hand it the values of its slots.
    scratch_vals_.clear();
    for (int s : a.slots) scratch_vals_.push_back(slot_value_[s]);
    return a.fn(scratch_vals_);
}

void SearchSpace::touch(int node) {
    if (node_epoch_[node] == epoch_) return;
    node_epoch_[node] = epoch_;
    trail_.push_back({static_cast<int32_t>(node), cnt_a_[node], cnt_b_[node], value_[node]});
}

int8_t SearchSpace::compute_value(int node) const {
    switch (kind_[node]) {
    case Kind::Const: return value_[node];
    case Kind::Atom: return value_[node];
    case Kind::Not: {
        int8_t c = value_[children_flat_[child_begin_[node]]];
        return c == kUnknown ? kUnknown : (c == kTrue ? kFalse : kTrue);
    }
    case Kind::And:
        if (cnt_a_[node] > 0) return kFalse;
        return cnt_b_[node] == 0 ? kTrue : kUnknown;
    case Kind::Or:
        if (cnt_a_[node] > 0) return kTrue;
        return cnt_b_[node] == 0 ? kFalse : kUnknown;
    }
    return kUnknown;
}

void SearchSpace::set_node_value(int node, int8_t v) {
    touch(node);
    int8_t old = value_[node];
    if (old == v) return;
    value_[node] = v;
    for (int32_t i = parent_begin_[node]; i < parent_begin_[node + 1]; ++i) {
        int32_t p = parents_flat_[i];
        touch(p);
        switch (kind_[p]) {
        case Kind::And:
            if (old == kUnknown) {
                cnt_b_[p]--;
                if (v == kFalse) cnt_a_[p]++;
            }
            break;
        case Kind::Or:
            if (old == kUnknown) {
                cnt_b_[p]--;
                if (v == kTrue) cnt_a_[p]++;
            }
            break;
        default:
            break;
        }
        int8_t pv = compute_value(p);
        if (pv != value_[p]) set_node_value(p, pv);
    }
}

void SearchSpace::assign(int slot, int value) {
    slot_value_[slot] = value;
    assigned_slots_.push_back(slot);
    // Unlink from its block's free list.
    int b = slot_block_[slot];
    if (b >= 0) {
        int p = free_prev_[slot], n = free_next_[slot];
        if (p >= 0) free_next_[p] = n; else free_head_[b] = n;
        if (n >= 0) free_prev_[n] = p;
    }
    for (int32_t node : slot_atoms_[slot]) {
        touch(node);
        if (--cnt_a_[node] == 0) {
            int8_t v = eval_atom(node) ? kTrue : kFalse;
            set_node_value(node, v);
        } else if (cnt_a_[node] == 1 && value_[node] == kUnknown) {
            // One slot left: queue it for unit-first ordering.
            const AtomInfo& a = atoms_[atom_of_node_[node]];
            for (int s : a.slots) {
                if (slot_value_[s] < 0 && !in_queue_[s]) {
                    in_queue_[s] = 1;
                    unit_queue_.push_back(s);
                }
            }
        }
    }
}

void SearchSpace::unassign_to(size_t trail_mark, size_t assigned_mark) {
    while (trail_.size() > trail_mark) {
        const TrailEntry& e = trail_.back();
        cnt_a_[e.node] = e.cnt_a;
        cnt_b_[e.node] = e.cnt_b;
        value_[e.node] = e.value;
        trail_.pop_back();
    }
    while (assigned_slots_.size() > assigned_mark) {
        int slot = assigned_slots_.back();
        slot_value_[slot] = -1;
        assigned_slots_.pop_back();
        // Relink in reverse order of unlinking; stored neighbours are valid.
        int b = slot_block_[slot];
        if (b >= 0) {
            int p = free_prev_[slot], n = free_next_[slot];
            if (p >= 0) free_next_[p] = slot; else free_head_[b] = slot;
            if (n >= 0) free_prev_[n] = slot;
        }
    }
}

int SearchSpace::pick_dynamic(const Block& blk, int block_idx) {
    (void)blk;
    while (!unit_queue_.empty()) {
        int s = unit_queue_.front();
        unit_queue_.pop_front();
        in_queue_[s] = 0;
        if (slot_value_[s] < 0 && slot_block_[s] == block_idx) return s;
        // Wrong block or already assigned: drop; only an ordering hint.
    }
    return free_head_[block_idx];
}

int8_t SearchSpace::search(int block_idx, std::vector<Block>& blocks, std::vector<int>* witness) {
    int8_t rv = value_[root_];
    if (rv != kUnknown) return rv; // decided regardless of remaining slots
    // Find the block we are currently filling.
    while (block_idx < static_cast<int>(blocks.size()) && free_head_[block_idx] < 0) ++block_idx;
    if (block_idx >= static_cast<int>(blocks.size()))
        return value_[root_]; // fully assigned: atoms decided the root

    Block& blk = blocks[block_idx];
    int slot = blk.static_order ? free_head_[block_idx] : pick_dynamic(blk, block_idx);

    for (int v = 0; v < slot_domain_[slot]; ++v) {
        ++epoch_;
        size_t tmark = trail_.size();
        size_t amark = assigned_slots_.size();
        assign(slot, v);
        int8_t r = search(block_idx, blocks, witness);
        unassign_to(tmark, amark);
        if (blk.existential && r == kTrue) {
            if (witness && block_idx == 0) (*witness)[std::distance(blocks[0].slots.begin(), std::find(blocks[0].slots.begin(), blocks[0].slots.end(), slot))] = v;
            return kTrue;
        }
        if (!blk.existential && r == kFalse) return kFalse;
    }
    return blk.existential ? kFalse : kTrue;
}

bool SearchSpace::solve(int root, std::vector<Block> blocks, std::vector<int>* witness) {
    if (finalized_) throw Error("solve may run once per search space");
    finalize(root);
    for (size_t b = 0; b < blocks.size(); ++b)
        for (int s : blocks[b].slots) slot_block_[s] = static_cast<int>(b);
    // Free lists in block order.
    free_next_.assign(slot_domain_.size(), -1);
    free_prev_.assign(slot_domain_.size(), -1);
    free_head_.assign(blocks.size(), -1);
    for (size_t b = 0; b < blocks.size(); ++b) {
        int prev = -1;
        for (int s : blocks[b].slots) {
            if (prev < 0) free_head_[b] = s;
            else free_next_[prev] = s;
            free_prev_[s] = prev;
            prev = s;
        }
    }
    if (!blocks.empty()) blocks[0].static_order = true;
    if (witness && !blocks.empty()) witness->assign(blocks[0].slots.size(), 0);
    ++epoch_;
    trail_.clear();
    assigned_slots_.clear();
    unit_queue_.clear();
    std::fill(in_queue_.begin(), in_queue_.end(), 0);
    // Seed unit ordering with atoms that start out one slot from decided.
    for (size_t n = 0; n < kind_.size(); ++n) {
        if (kind_[n] != Kind::Atom || cnt_a_[n] != 1) continue;
        const AtomInfo& a = atoms_[atom_of_node_[n]];
        for (int s : a.slots) {
            if (slot_value_[s] < 0 && !in_queue_[s]) {
                in_queue_[s] = 1;
                unit_queue_.push_back(s);
            }
        }
    }
    int8_t r = search(0, blocks, witness);
    if (r == kUnknown) throw Error("search ended undecided"); // cannot happen: full assignment decides atoms
    return r == kTrue;
}

// ---------------------------------------------------------------------------
// First-order front end

namespace {

using Memo = std::map<const Formula*, int>;

// Compiles a quantifier-free matrix over variables mapped to slots. Shared
// subformulas (the matrix may be a DAG) compile once.
int compile_matrix(SearchSpace& sp, const Formula& f, const std::vector<int>& var_slot,
                   const Structure& s, Memo& memo);

int compile_matrix_uncached(SearchSpace& sp, const Formula& f, const std::vector<int>& var_slot,
                            const Structure& s, Memo& memo) {
    switch (f.kind()) {
    case Formula::Kind::Eq: {
        const Term& a = *f.terms()[0];
        const Term& b = *f.terms()[1];
        auto slot_of = [&](const Term& t) -> std::optional<int> {
            if (t.kind() == Term::Kind::Variable) return var_slot[t.var_index()];
            return std::nullopt;
        };
        auto const_idx = [&](const Term& t) -> std::optional<int> {
            if (t.kind() == Term::Kind::Constant)
                return static_cast<int>(s.index_of(s.constant(t.symbol())));
            return std::nullopt;
        };
        auto sa = slot_of(a), sb = slot_of(b);
        auto ca = const_idx(a), cb = const_idx(b);
        if (sa && sb) return sp.atom_slot_eq_slot(*sa, *sb);
        if (sa && cb) return sp.atom_slot_eq_const(*sa, *cb);
        if (ca && sb) return sp.atom_slot_eq_const(*sb, *ca);
        if (ca && cb) return sp.const_node(*ca == *cb);
        break; // general term: fall through to the generic atom
    }
    default:
        break;
    }

    switch (f.kind()) {
    case Formula::Kind::Eq:
    case Formula::Kind::Rel: {
        // Generic atom over the variables of the atom.
        std::set<int> vars;
        f.free_vars(vars);
        std::vector<int> slots;
        std::vector<int> var_list;
        for (int v : vars) {
            slots.push_back(var_slot[v]);
            var_list.push_back(v);
        }
        const auto& universe = s.universe();
        int maxv = f.max_var();
        auto phi = std::make_shared<const Formula>(f);
        auto assignment = std::make_shared<std::vector<Element>>(maxv, universe.empty() ? Element(Bit{0}) : universe[0]);
        auto fn = [phi, assignment, var_list, &s, &universe](std::span<const int> vals) {
            for (size_t i = 0; i < var_list.size(); ++i)
                (*assignment)[var_list[i] - 1] = universe[vals[i]];
            return evaluate(*phi, *assignment, s);
        };
        return sp.atom(std::move(slots), std::move(fn));
    }
    case Formula::Kind::Not:
        return sp.not_node(compile_matrix(sp, *f.left(), var_slot, s, memo));
    case Formula::Kind::And: {
        // Flatten conjunction chains into one n-ary node.
        std::vector<const Formula*> stack{&f};
        std::vector<int> kids;
        while (!stack.empty()) {
            const Formula* g = stack.back();
            stack.pop_back();
            if (g->kind() == Formula::Kind::And && !memo.count(g)) {
                stack.push_back(g->right().get());
                stack.push_back(g->left().get());
            } else {
                kids.push_back(compile_matrix(sp, *g, var_slot, s, memo));
            }
        }
        return sp.and_node(kids);
    }
    case Formula::Kind::Or: {
        std::vector<const Formula*> stack{&f};
        std::vector<int> kids;
        while (!stack.empty()) {
            const Formula* g = stack.back();
            stack.pop_back();
            if (g->kind() == Formula::Kind::Or && !memo.count(g)) {
                stack.push_back(g->right().get());
                stack.push_back(g->left().get());
            } else {
                kids.push_back(compile_matrix(sp, *g, var_slot, s, memo));
            }
        }
        return sp.or_node(kids);
    }
    default:
        throw Error("matrix is not quantifier-free");
    }
}

int compile_matrix(SearchSpace& sp, const Formula& f, const std::vector<int>& var_slot,
                   const Structure& s, Memo& memo) {
    auto it = memo.find(&f);
    if (it != memo.end()) return it->second;
    int node = compile_matrix_uncached(sp, f, var_slot, s, memo);
    memo.emplace(&f, node);
    return node;
}

} // namespace

SatResult sat_sigma_k_finite(const Formula& phi, const Structure& s) {
    if (!s.is_finite())
        throw BackendError("satisfiability search needs a finite universe, got " + s.name());
    if (!phi.is_sentence()) throw Error("sat_sigma_k_finite: free variables present");
    PrenexClass cls = classify_prenex(phi);
    if (cls.kind == PrenexKind::NotPrenex) throw Error("sat_sigma_k_finite: formula is not prenex");

    if (phi.quantifier_free()) {
        bool h = evaluate(phi, {}, s);
        return {h, std::nullopt};
    }

    auto [prefix, matrix] = split_prenex(phi);
    const auto& universe = s.universe();
    int domain = static_cast<int>(universe.size());

    SearchSpace sp;
    // One slot per prefix entry; a matrix variable reads the innermost
    // (latest) binder of its index.
    std::vector<int> entry_slot(prefix.size());
    std::vector<int> var_slot(phi.max_var() + 1, -1);
    for (size_t i = 0; i < prefix.size(); ++i) {
        entry_slot[i] = sp.add_slot(domain);
        var_slot[prefix[i].var] = entry_slot[i];
    }

    Memo memo;
    int root = compile_matrix(sp, *matrix, var_slot, s, memo);

    // Group consecutive same-quantifier entries into blocks.
    std::vector<SearchSpace::Block> blocks;
    for (size_t i = 0; i < prefix.size(); ++i) {
        if (blocks.empty() || blocks.back().existential != prefix[i].existential) {
            blocks.push_back({prefix[i].existential, {}, false});
        }
        blocks.back().slots.push_back(entry_slot[i]);
    }

    bool leading_existential = blocks[0].existential;
    std::vector<int> wit;
    bool holds = sp.solve(root, blocks, leading_existential ? &wit : nullptr);

    SatResult out{holds, std::nullopt};
    if (holds && leading_existential) {
        ElementString w;
        w.reserve(wit.size());
        for (int v : wit) w.push_back(universe[v]);
        out.witness = std::move(w);
    }
    return out;
}

namespace {

bool flat_rec(const std::vector<PrefixEntry>& prefix, size_t i, const Formula& matrix,
              std::vector<Element>& env, const Structure& s) {
    if (i == prefix.size()) return evaluate(matrix, env, s);
    const auto& universe = s.universe();
    if (prefix[i].existential) {
        for (const auto& r : universe) {
            env[prefix[i].var - 1] = r;
            if (flat_rec(prefix, i + 1, matrix, env, s)) return true;
        }
        return false;
    }
    for (const auto& r : universe) {
        env[prefix[i].var - 1] = r;
        if (!flat_rec(prefix, i + 1, matrix, env, s)) return false;
    }
    return true;
}

} // namespace

bool sat_prenex_flat(const Formula& phi, const Structure& s) {
    if (!s.is_finite()) throw BackendError("flat search needs a finite universe");
    if (phi.quantifier_free()) return evaluate(phi, {}, s);
    auto [prefix, matrix] = split_prenex(phi);
    std::vector<Element> env(phi.max_var(), s.universe()[0]);
    return flat_rec(prefix, 0, *matrix, env, s);
}

} // namespace rml
