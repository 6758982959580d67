#pragma once

#include "rml/formula.hpp"

namespace rml {

// Self-delimiting code for formulas over a finite-type vocabulary, as a
// string of universe elements. Structural tokens are the structure's 0/1
// elements; a constant other than 0 or 1 stands as a code for itself, so the
// code is a pure bit string exactly when every constant in the formula is 0
// or 1.
//
// Layout per node: a fixed 4-bit kind tag, then payload. Numbers (variable
// indices, symbol indices) use a unary length header followed by that many
// binary digits, most significant first.
ElementString encode_formula(const Formula& phi, const Structure& s);

FormulaPtr decode_formula(const ElementString& code, const Structure& s);

bool is_pure_bit_string(const ElementString& code, const Structure& s);

} // namespace rml
