#pragma once

#include "rml/element.hpp"
#include "rml/errors.hpp"

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rml {

// Symbol table of a first-order language: constant symbols plus function and
// relation symbols with positive arities. Names must be pairwise distinct
// across all three lists. A vocabulary may additionally treat every rational
// literal as a constant symbol (the all-constants rationals); such a
// vocabulary still has finitely many function and relation symbols and so
// remains of finite type.
class Vocabulary {
public:
    Vocabulary() = default;
    Vocabulary(std::vector<std::string> constants,
               std::vector<std::pair<std::string, int>> functions,
               std::vector<std::pair<std::string, int>> relations,
               bool lazy_rational_constants = false);

    const std::vector<std::string>& constants() const { return constants_; }
    const std::vector<std::pair<std::string, int>>& functions() const { return functions_; }
    const std::vector<std::pair<std::string, int>>& relations() const { return relations_; }

    bool lazy_rational_constants() const { return lazy_rational_constants_; }

    bool has_constant(const std::string& name) const;
    std::optional<int> function_arity(const std::string& name) const;
    std::optional<int> relation_arity(const std::string& name) const;

    // Index of a declared symbol within its list; lazy rational constants
    // have no index.
    std::optional<int> constant_index(const std::string& name) const;
    std::optional<int> function_index(const std::string& name) const;
    std::optional<int> relation_index(const std::string& name) const;

private:
    std::vector<std::string> constants_;
    std::vector<std::pair<std::string, int>> functions_;
    std::vector<std::pair<std::string, int>> relations_;
    bool lazy_rational_constants_ = false;
};

enum class Backend { Booleans, ZMod, Rationals, RationalsAllConstants, FiniteTable };

struct Classification {
    bool bipointed;
    bool finite_type;
    bool has_all_constants;
};

// A first-order structure: a vocabulary together with interpretations over
// one of the built-in backends. Immutable after construction; all queries are
// const and safe for concurrent use.
class Structure {
public:
    using FunctionImpl = std::function<Element(std::span<const Element>)>;
    using RelationImpl = std::function<bool(std::span<const Element>)>;

    static Structure make_builtin(Backend kind, long long modulus = 0);
    static Structure booleans() { return make_builtin(Backend::Booleans); }
    static Structure zmod(long long m) { return make_builtin(Backend::ZMod, m); }
    static Structure rationals() { return make_builtin(Backend::Rationals); }
    static Structure rationals_all_constants() { return make_builtin(Backend::RationalsAllConstants); }

    // Built-ins addressed by name: "bool", "zmod:<m>", "rat", "rat-all".
    static Structure by_name(const std::string& name);

    // Finite structure from the structure-description text format.
    static Structure load(const std::string& text);

    // Finite structure with universe indices 0..n-1 and explicit tables.
    static Structure finite(long long universe_size,
                            std::vector<std::pair<std::string, long long>> constants,
                            std::vector<std::tuple<std::string, int, std::map<std::vector<long long>, long long>>> functions,
                            std::vector<std::tuple<std::string, int, std::vector<std::vector<long long>>>> relations);

    Backend backend() const { return backend_; }
    const Vocabulary& vocabulary() const { return voc_; }

    bool is_finite() const;
    // Enumerated universe in canonical order; throws BackendError when infinite.
    const std::vector<Element>& universe() const;
    long long universe_size() const { return static_cast<long long>(universe().size()); }

    // Interpretation lookups. Throw Error on unknown symbols or arity
    // mismatches.
    Element constant(const std::string& name) const;
    Element apply(const std::string& fn, std::span<const Element> args) const;
    bool holds(const std::string& rel, std::span<const Element> args) const;

    // True when the element is a value of this structure's universe.
    bool contains(const Element& e) const;
    // Canonical position of an element in a finite universe.
    long long index_of(const Element& e) const;

    // Name of a constant symbol interpreting exactly this element, when one
    // exists (always on all-constants backends; 0/1 on bipointed ones).
    std::optional<std::string> constant_name_for(const Element& e) const;

    Classification classify() const;

    Element zero() const { return constant("0"); }
    Element one() const { return constant("1"); }

    // Parses an element literal as it appears in input strings: 0/1 for
    // booleans, an integer residue for zmod, a rational literal, or a
    // universe index.
    Element parse_element(const std::string& text) const;

    // A short name for error messages ("bool", "zmod:3", ...).
    std::string name() const;

private:
    Structure() = default;

    Backend backend_ = Backend::Booleans;
    long long modulus_ = 0;
    Vocabulary voc_;
    std::map<std::string, Element> constants_;
    std::map<std::string, std::pair<int, FunctionImpl>> functions_;
    std::map<std::string, std::pair<int, RelationImpl>> relations_;
    std::vector<Element> universe_;
    bool finite_table_all_constants_ = false;
};

} // namespace rml
