#pragma once

#include "rml/rational.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace rml {

// Universe elements of the built-in backends. Equality is decidable and only
// meaningful between elements of the same backend.
struct Bit {
    unsigned v; // 0 or 1
    bool operator==(const Bit& o) const { return v == o.v; }
};

struct Residue {
    long long v; // in [0, m)
    long long m; // modulus, >= 2
    bool operator==(const Residue& o) const { return v == o.v && m == o.m; }
};

struct FiniteIndex {
    long long v; // index into an enumerated universe
    bool operator==(const FiniteIndex& o) const { return v == o.v; }
};

using Element = std::variant<Bit, Residue, Rational, FiniteIndex>;

using ElementString = std::vector<Element>;

bool operator==(const Element& a, const Element& b);

std::string to_string(const Element& e);
std::string to_string(const ElementString& v); // "(a,b,c)"

std::ostream& operator<<(std::ostream& os, const Element& e);

} // namespace rml
