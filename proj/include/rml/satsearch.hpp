#pragma once

#include "rml/logic.hpp"

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>

namespace rml {

// Backtracking decision engine for prenex sentences over finite domains.
//
// The matrix is compiled into a ground boolean DAG whose leaves are atoms
// over "slots" (quantified positions with a finite value domain). During the
// search the DAG is evaluated incrementally in three-valued logic: as soon as
// the root is decided under a partial assignment, the remaining quantifiers
// cannot change it and the branch is cut. Inside a quantifier block the
// engine prefers slots that complete an atom (unit-first ordering); the
// leading block keeps its given order so reported witnesses are the
// lexicographically least. Ordering choices never affect results, only how
// fast the exhaustive search converges; tests cross-check against a flat
// enumeration.
class SearchSpace {
public:
    using AtomFn = std::function<bool(std::span<const int>)>;

    static constexpr int8_t kFalse = 0;
    static constexpr int8_t kTrue = 1;
    static constexpr int8_t kUnknown = 2;

    int add_slot(int domain_size);
    int slot_count() const { return static_cast<int>(slot_domain_.size()); }

    int const_node(bool v);
    // `slots` lists the slots the atom reads; `fn` receives their assigned
    // values in the same order.
    int atom(std::vector<int> slots, AtomFn fn);
    int atom_slot_eq_const(int slot, int value);
    int atom_slot_eq_slot(int a, int b);
    int not_node(int child);
    int and_node(const std::vector<int>& children);
    int or_node(const std::vector<int>& children);

    struct Block {
        bool existential;
        std::vector<int> slots;
        bool static_order = false;
    };

    // Decides the quantified sentence. When the first block is existential
    // and the sentence holds, `witness` receives the lexicographically least
    // satisfying values for that block's slots.
    bool solve(int root, std::vector<Block> blocks, std::vector<int>* witness = nullptr);

    size_t node_count() const { return kind_.size(); }

private:
    enum class Kind : uint8_t { Const, Atom, Not, And, Or };

    struct AtomInfo {
        std::vector<int> slots;
        AtomFn fn;
        int kind = 0; // 0 generic, 1 slot==const, 2 slot==slot
        int a = 0, b = 0;
    };

    int new_node(Kind k, int8_t initial_value);
    void finalize(int root);
    void assign(int slot, int value);
    void unassign_to(size_t trail_mark, size_t assigned_mark);
    void set_node_value(int node, int8_t v);
    void touch(int node);
    int8_t compute_value(int node) const;
    bool eval_atom(int a) const;
    int8_t search(int block_idx, std::vector<Block>& blocks, std::vector<int>* witness);
    int pick_dynamic(const Block& blk, int block_idx);

    // structure
    std::vector<Kind> kind_;
    std::vector<int32_t> child_begin_;
    std::vector<int32_t> children_flat_;
    std::vector<std::vector<int32_t>> children_tmp_;
    std::vector<int32_t> parent_begin_;
    std::vector<int32_t> parents_flat_;
    std::vector<int32_t> atom_of_node_;
    std::vector<AtomInfo> atoms_;
    std::vector<int> slot_domain_;
    std::vector<std::vector<int32_t>> slot_atoms_; // atoms watching a slot
    bool finalized_ = false;
    int root_ = -1;

    // runtime state
    std::vector<int8_t> value_;
    std::vector<int32_t> cnt_a_; // And: false children; Or: true children; Atom: unassigned slots
    std::vector<int32_t> cnt_b_; // And/Or: unknown children
    std::vector<int> slot_value_; // -1 when unassigned
    std::vector<uint32_t> node_epoch_;
    uint32_t epoch_ = 0;
    struct TrailEntry {
        int32_t node;
        int32_t cnt_a, cnt_b;
        int8_t value;
    };
    std::vector<TrailEntry> trail_;
    std::vector<int> assigned_slots_;
    std::deque<int> unit_queue_;
    std::vector<uint8_t> in_queue_;
    std::vector<int> slot_block_;
    mutable std::vector<int> scratch_vals_;

    // Unassigned slots per block as doubly-linked lists in block order.
    // Unlinks happen on assignment and relinks strictly in reverse, so the
    // stored neighbour pointers stay valid.
    std::vector<int> free_next_, free_prev_, free_head_;
};

struct SatResult {
    bool holds;
    std::optional<ElementString> witness; // leading existential block only
};

// Decides membership of a prenex sentence in Sigma_k/Pi_k SAT of a finite
// structure by nested exhaustive search. When the outermost block is
// existential and the sentence holds, reports the lexicographically least
// witness tuple under the canonical universe order.
SatResult sat_sigma_k_finite(const Formula& phi, const Structure& s);

// Reference route: plain nested enumeration driven by `evaluate`, no DAG, no
// pruning. Exponential; test use only.
bool sat_prenex_flat(const Formula& phi, const Structure& s);

} // namespace rml
