#include "rml/structure.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace rml {

Vocabulary::Vocabulary(std::vector<std::string> constants,
                       std::vector<std::pair<std::string, int>> functions,
                       std::vector<std::pair<std::string, int>> relations,
                       bool lazy_rational_constants)
    : constants_(std::move(constants)),
      functions_(std::move(functions)),
      relations_(std::move(relations)),
      lazy_rational_constants_(lazy_rational_constants) {
    std::set<std::string> seen;
    for (const auto& c : constants_)
        if (!seen.insert(c).second) throw Error("duplicate symbol: " + c);
    for (const auto& [f, k] : functions_) {
        if (k < 1) throw Error("function arity must be >= 1: " + f);
        if (!seen.insert(f).second) throw Error("duplicate symbol: " + f);
    }
    for (const auto& [p, k] : relations_) {
        if (k < 1) throw Error("relation arity must be >= 1: " + p);
        if (!seen.insert(p).second) throw Error("duplicate symbol: " + p);
    }
}

bool Vocabulary::has_constant(const std::string& name) const {
    if (std::find(constants_.begin(), constants_.end(), name) != constants_.end()) return true;
    if (lazy_rational_constants_ && Rational::parse(name)) return true;
    return false;
}

std::optional<int> Vocabulary::function_arity(const std::string& name) const {
    for (const auto& [f, k] : functions_)
        if (f == name) return k;
    return std::nullopt;
}

std::optional<int> Vocabulary::relation_arity(const std::string& name) const {
    for (const auto& [p, k] : relations_)
        if (p == name) return k;
    return std::nullopt;
}

std::optional<int> Vocabulary::constant_index(const std::string& name) const {
    for (size_t i = 0; i < constants_.size(); ++i)
        if (constants_[i] == name) return static_cast<int>(i);
    return std::nullopt;
}

std::optional<int> Vocabulary::function_index(const std::string& name) const {
    for (size_t i = 0; i < functions_.size(); ++i)
        if (functions_[i].first == name) return static_cast<int>(i);
    return std::nullopt;
}

std::optional<int> Vocabulary::relation_index(const std::string& name) const {
    for (size_t i = 0; i < relations_.size(); ++i)
        if (relations_[i].first == name) return static_cast<int>(i);
    return std::nullopt;
}

namespace {

long long residue_of(const Element& e, long long m, const char* who) {
    if (const auto* r = std::get_if<Residue>(&e); r && r->m == m) return r->v;
    throw Error(std::string(who) + ": element outside Z mod " + std::to_string(m));
}

Rational rational_of(const Element& e, const char* who) {
    if (const auto* q = std::get_if<Rational>(&e)) return *q;
    throw Error(std::string(who) + ": element is not a rational");
}

} // namespace

Structure Structure::make_builtin(Backend kind, long long modulus) {
    Structure s;
    s.backend_ = kind;
    switch (kind) {
    case Backend::Booleans: {
        s.voc_ = Vocabulary({"0", "1"}, {}, {});
        s.constants_ = {{"0", Bit{0}}, {"1", Bit{1}}};
        s.universe_ = {Bit{0}, Bit{1}};
        break;
    }
    case Backend::ZMod: {
        if (modulus < 2) throw Error("zmod modulus must be >= 2");
        s.modulus_ = modulus;
        s.voc_ = Vocabulary({"0", "1"}, {{"-", 1}, {"+", 2}, {"*", 2}}, {});
        s.constants_ = {{"0", Residue{0, modulus}}, {"1", Residue{1, modulus}}};
        long long m = modulus;
        s.functions_["-"] = {1, [m](std::span<const Element> a) -> Element {
            long long x = residue_of(a[0], m, "-");
            return Residue{(m - x) % m, m};
        }};
        s.functions_["+"] = {2, [m](std::span<const Element> a) -> Element {
            return Residue{(residue_of(a[0], m, "+") + residue_of(a[1], m, "+")) % m, m};
        }};
        s.functions_["*"] = {2, [m](std::span<const Element> a) -> Element {
            return Residue{(residue_of(a[0], m, "*") * residue_of(a[1], m, "*")) % m, m};
        }};
        s.universe_.reserve(modulus);
        for (long long v = 0; v < modulus; ++v) s.universe_.push_back(Residue{v, modulus});
        break;
    }
    case Backend::Rationals:
    case Backend::RationalsAllConstants: {
        s.voc_ = Vocabulary({"0", "1"}, {{"-", 1}, {"+", 2}, {"*", 2}}, {{"<=", 2}},
                            kind == Backend::RationalsAllConstants);
        s.constants_ = {{"0", Rational(0)}, {"1", Rational(1)}};
        s.functions_["-"] = {1, [](std::span<const Element> a) -> Element {
            return -rational_of(a[0], "-");
        }};
        s.functions_["+"] = {2, [](std::span<const Element> a) -> Element {
            return rational_of(a[0], "+") + rational_of(a[1], "+");
        }};
        s.functions_["*"] = {2, [](std::span<const Element> a) -> Element {
            return rational_of(a[0], "*") * rational_of(a[1], "*");
        }};
        s.relations_["<="] = {2, [](std::span<const Element> a) {
            return rational_of(a[0], "<=") <= rational_of(a[1], "<=");
        }};
        break;
    }
    case Backend::FiniteTable:
        throw Error("finite-table structures are built from a description document");
    }
    return s;
}

Structure Structure::by_name(const std::string& name) {
    if (name == "bool") return booleans();
    if (name == "rat") return rationals();
    if (name == "rat-all") return rationals_all_constants();
    if (name.rfind("zmod:", 0) == 0) {
        long long m = 0;
        try {
            m = std::stoll(name.substr(5));
        } catch (...) {
            throw Error("bad zmod modulus in structure name: " + name);
        }
        return zmod(m);
    }
    throw Error("unknown built-in structure: " + name);
}

Structure Structure::finite(
    long long universe_size,
    std::vector<std::pair<std::string, long long>> constants,
    std::vector<std::tuple<std::string, int, std::map<std::vector<long long>, long long>>> functions,
    std::vector<std::tuple<std::string, int, std::vector<std::vector<long long>>>> relations) {
    if (universe_size < 1) throw Error("universe must be nonempty");
    Structure s;
    s.backend_ = Backend::FiniteTable;
    s.universe_.reserve(universe_size);
    for (long long v = 0; v < universe_size; ++v) s.universe_.push_back(FiniteIndex{v});

    auto check_idx = [&](long long i) {
        if (i < 0 || i >= universe_size)
            throw Error("universe index out of range: " + std::to_string(i));
    };

    std::vector<std::string> cnames;
    std::vector<std::pair<std::string, int>> fnames, rnames;
    for (auto& [name, idx] : constants) {
        check_idx(idx);
        cnames.push_back(name);
        s.constants_[name] = FiniteIndex{idx};
    }
    for (auto& [name, arity, table] : functions) {
        fnames.emplace_back(name, arity);
        // Totality: one row per tuple of the enumerated universe.
        long long expect = 1;
        for (int i = 0; i < arity; ++i) expect *= universe_size;
        if (static_cast<long long>(table.size()) != expect)
            throw Error("non-total function: " + name);
        for (const auto& [args, val] : table) {
            if (static_cast<int>(args.size()) != arity) throw Error("arity mismatch in table of " + name);
            for (long long a : args) check_idx(a);
            check_idx(val);
        }
        auto tbl = std::make_shared<std::map<std::vector<long long>, long long>>(std::move(table));
        s.functions_[name] = {arity, [tbl, name](std::span<const Element> a) -> Element {
            std::vector<long long> key;
            key.reserve(a.size());
            for (const auto& e : a) key.push_back(std::get<FiniteIndex>(e).v);
            auto it = tbl->find(key);
            if (it == tbl->end()) throw Error("function table miss: " + name);
            return FiniteIndex{it->second};
        }};
    }
    for (auto& [name, arity, tuples] : relations) {
        rnames.emplace_back(name, arity);
        auto set = std::make_shared<std::set<std::vector<long long>>>();
        for (const auto& t : tuples) {
            if (static_cast<int>(t.size()) != arity) throw Error("arity mismatch in relation " + name);
            for (long long a : t) check_idx(a);
            set->insert(t);
        }
        s.relations_[name] = {arity, [set](std::span<const Element> a) {
            std::vector<long long> key;
            key.reserve(a.size());
            for (const auto& e : a) key.push_back(std::get<FiniteIndex>(e).v);
            return set->count(key) > 0;
        }};
    }
    s.voc_ = Vocabulary(cnames, fnames, rnames);

    // All-constants flag: one constant per universe element.
    std::set<long long> named;
    for (const auto& [name, e] : s.constants_) named.insert(std::get<FiniteIndex>(e).v);
    s.finite_table_all_constants_ = static_cast<long long>(named.size()) == universe_size &&
                                    static_cast<long long>(s.constants_.size()) == universe_size;
    return s;
}

namespace {

// Minimal line-oriented reader for the structure-description format.
struct LineParser {
    std::istringstream in;
    size_t lineno = 0;
    explicit LineParser(const std::string& text) : in(text) {}
    bool next(std::string& out) {
        while (std::getline(in, out)) {
            ++lineno;
            size_t h = out.find('#');
            if (h != std::string::npos) out.erase(h);
            size_t b = out.find_first_not_of(" \t\r");
            if (b == std::string::npos) continue;
            size_t e = out.find_last_not_of(" \t\r");
            out = out.substr(b, e - b + 1);
            return true;
        }
        return false;
    }
};

std::vector<long long> parse_tuple(const std::string& s, size_t lineno) {
    size_t open = s.find('(');
    size_t close = s.find(')', open);
    if (open == std::string::npos || close == std::string::npos)
        throw ParseError("expected tuple", lineno, 1);
    std::vector<long long> out;
    std::string body = s.substr(open + 1, close - open - 1);
    if (body.find_first_not_of(" \t") == std::string::npos) return out;
    std::istringstream bs(body);
    std::string item;
    while (std::getline(bs, item, ',')) {
        try {
            out.push_back(std::stoll(item));
        } catch (...) {
            throw ParseError("bad tuple entry '" + item + "'", lineno, 1);
        }
    }
    return out;
}

} // namespace

Structure Structure::load(const std::string& text) {
    LineParser lp(text);
    std::string line;
    if (!lp.next(line)) throw ParseError("empty structure description", 1, 1);
    long long n = 0;
    {
        std::istringstream ls(line);
        std::string kw;
        ls >> kw >> n;
        if (kw != "universe" || ls.fail() || n < 1)
            throw ParseError("expected 'universe <n>'", lp.lineno, 1);
    }
    std::vector<std::pair<std::string, long long>> constants;
    std::map<std::string, std::tuple<int, std::map<std::vector<long long>, long long>>> funs;
    std::vector<std::string> fun_order;
    std::map<std::string, std::tuple<int, std::vector<std::vector<long long>>>> rels;
    std::vector<std::string> rel_order;

    auto parse_sym_arity = [&](const std::string& tok) -> std::pair<std::string, int> {
        size_t slash = tok.find('/');
        if (slash == std::string::npos) throw ParseError("expected <name>/<arity>", lp.lineno, 1);
        int k = 0;
        try {
            k = std::stoi(tok.substr(slash + 1));
        } catch (...) {
            throw ParseError("bad arity in '" + tok + "'", lp.lineno, 1);
        }
        return {tok.substr(0, slash), k};
    };

    while (lp.next(line)) {
        std::istringstream ls(line);
        std::string kw;
        ls >> kw;
        if (kw == "const") {
            std::string name, eq;
            long long idx;
            ls >> name >> eq >> idx;
            if (ls.fail() || eq != "=") throw ParseError("expected 'const <name> = <idx>'", lp.lineno, 1);
            constants.emplace_back(name, idx);
        } else if (kw == "fun") {
            std::string tok;
            ls >> tok;
            if (!tok.empty() && tok.back() == ':') tok.pop_back();
            auto [name, k] = parse_sym_arity(tok);
            std::string rest;
            std::getline(ls, rest);
            size_t arrow = rest.find("->");
            if (arrow == std::string::npos) throw ParseError("expected '-> <idx>'", lp.lineno, 1);
            auto args = parse_tuple(rest.substr(0, arrow), lp.lineno);
            long long val;
            try {
                val = std::stoll(rest.substr(arrow + 2));
            } catch (...) {
                throw ParseError("bad function value", lp.lineno, 1);
            }
            if (static_cast<int>(args.size()) != k)
                throw ParseError("arity mismatch for " + name, lp.lineno, 1);
            auto& [arity, table] = funs[name];
            if (table.empty()) {
                arity = k;
                fun_order.push_back(name);
            } else if (arity != k) {
                throw ParseError("arity mismatch for " + name, lp.lineno, 1);
            }
            if (!table.emplace(args, val).second)
                throw ParseError("duplicate function row for " + name, lp.lineno, 1);
        } else if (kw == "rel") {
            std::string tok;
            ls >> tok;
            if (!tok.empty() && tok.back() == ':') tok.pop_back();
            auto [name, k] = parse_sym_arity(tok);
            std::string rest;
            std::getline(ls, rest);
            auto args = parse_tuple(rest, lp.lineno);
            if (static_cast<int>(args.size()) != k)
                throw ParseError("arity mismatch for " + name, lp.lineno, 1);
            auto& [arity, tuples] = rels[name];
            if (tuples.empty() && arity == 0) {
                arity = k;
                rel_order.push_back(name);
            } else if (arity != k) {
                throw ParseError("arity mismatch for " + name, lp.lineno, 1);
            }
            tuples.push_back(args);
        } else {
            throw ParseError("unknown directive '" + kw + "'", lp.lineno, 1);
        }
    }

    std::vector<std::tuple<std::string, int, std::map<std::vector<long long>, long long>>> functions;
    for (const auto& name : fun_order) {
        auto& [arity, table] = funs[name];
        functions.emplace_back(name, arity, std::move(table));
    }
    std::vector<std::tuple<std::string, int, std::vector<std::vector<long long>>>> relations;
    for (const auto& name : rel_order) {
        auto& [arity, tuples] = rels[name];
        relations.emplace_back(name, arity, std::move(tuples));
    }
    return finite(n, std::move(constants), std::move(functions), std::move(relations));
}

bool Structure::is_finite() const {
    return backend_ == Backend::Booleans || backend_ == Backend::ZMod ||
           backend_ == Backend::FiniteTable;
}

const std::vector<Element>& Structure::universe() const {
    if (!is_finite()) throw BackendError("structure " + name() + " has no finite universe enumeration");
    return universe_;
}

Element Structure::constant(const std::string& name) const {
    auto it = constants_.find(name);
    if (it != constants_.end()) return it->second;
    if (voc_.lazy_rational_constants()) {
        if (auto q = Rational::parse(name)) return *q;
    }
    throw Error("unknown constant symbol: " + name);
}

Element Structure::apply(const std::string& fn, std::span<const Element> args) const {
    auto it = functions_.find(fn);
    if (it == functions_.end()) throw Error("unknown function symbol: " + fn);
    if (static_cast<int>(args.size()) != it->second.first)
        throw Error("arity mismatch applying " + fn);
    return it->second.second(args);
}

bool Structure::holds(const std::string& rel, std::span<const Element> args) const {
    auto it = relations_.find(rel);
    if (it == relations_.end()) throw Error("unknown relation symbol: " + rel);
    if (static_cast<int>(args.size()) != it->second.first)
        throw Error("arity mismatch testing " + rel);
    return it->second.second(args);
}

bool Structure::contains(const Element& e) const {
    switch (backend_) {
    case Backend::Booleans: {
        const auto* b = std::get_if<Bit>(&e);
        return b && b->v <= 1;
    }
    case Backend::ZMod: {
        const auto* r = std::get_if<Residue>(&e);
        return r && r->m == modulus_ && r->v >= 0 && r->v < modulus_;
    }
    case Backend::Rationals:
    case Backend::RationalsAllConstants:
        return std::holds_alternative<Rational>(e);
    case Backend::FiniteTable: {
        const auto* f = std::get_if<FiniteIndex>(&e);
        return f && f->v >= 0 && f->v < static_cast<long long>(universe_.size());
    }
    }
    return false;
}

long long Structure::index_of(const Element& e) const {
    if (!contains(e)) throw Error("element " + to_string(e) + " not in universe of " + name());
    switch (backend_) {
    case Backend::Booleans: return std::get<Bit>(e).v;
    case Backend::ZMod: return std::get<Residue>(e).v;
    case Backend::FiniteTable: return std::get<FiniteIndex>(e).v;
    default: throw BackendError("no canonical index on infinite backend " + name());
    }
}

std::optional<std::string> Structure::constant_name_for(const Element& e) const {
    for (const auto& [name, val] : constants_)
        if (val == e) return name;
    if (voc_.lazy_rational_constants())
        if (const auto* q = std::get_if<Rational>(&e)) return q->str();
    return std::nullopt;
}

Classification Structure::classify() const {
    Classification c{};
    bool have0 = constants_.count("0") > 0;
    bool have1 = constants_.count("1") > 0;
    c.bipointed = have0 && have1 && !(constants_.at("0") == constants_.at("1"));
    c.finite_type = true; // function and relation lists are always finite here
    switch (backend_) {
    case Backend::RationalsAllConstants: c.has_all_constants = true; break;
    case Backend::FiniteTable: c.has_all_constants = finite_table_all_constants_; break;
    default: c.has_all_constants = false; break;
    }
    return c;
}

Element Structure::parse_element(const std::string& text) const {
    switch (backend_) {
    case Backend::Booleans: {
        if (text == "0") return Bit{0};
        if (text == "1") return Bit{1};
        throw Error("bad boolean element: " + text);
    }
    case Backend::ZMod: {
        try {
            long long v = std::stoll(text);
            if (v < 0 || v >= modulus_) throw Error("");
            return Residue{v, modulus_};
        } catch (const Error&) {
            throw Error("element " + text + " outside Z mod " + std::to_string(modulus_));
        } catch (...) {
            throw Error("bad residue element: " + text);
        }
    }
    case Backend::Rationals:
    case Backend::RationalsAllConstants: {
        if (auto q = Rational::parse(text)) return *q;
        throw Error("bad rational element: " + text);
    }
    case Backend::FiniteTable: {
        try {
            long long v = std::stoll(text);
            Element e = FiniteIndex{v};
            if (!contains(e)) throw Error("");
            return e;
        } catch (...) {
            throw Error("bad universe index: " + text);
        }
    }
    }
    throw Error("unreachable");
}

std::string Structure::name() const {
    switch (backend_) {
    case Backend::Booleans: return "bool";
    case Backend::ZMod: return "zmod:" + std::to_string(modulus_);
    case Backend::Rationals: return "rat";
    case Backend::RationalsAllConstants: return "rat-all";
    case Backend::FiniteTable: return "finite[" + std::to_string(universe_.size()) + "]";
    }
    return "?";
}

} // namespace rml
