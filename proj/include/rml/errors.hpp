#pragma once

#include <stdexcept>
#include <string>

namespace rml {

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Lexical or syntactic errors in any of the text formats; carries a position.
struct ParseError : Error {
    ParseError(const std::string& what, size_t line, size_t col)
        : Error(what + " at " + std::to_string(line) + ":" + std::to_string(col)),
          line(line), col(col) {}
    explicit ParseError(const std::string& what) : Error(what), line(0), col(0) {}
    size_t line;
    size_t col;
};

// A search or run exceeded its explicit step budget. Distinguished from
// rejection everywhere.
struct BudgetError : Error {
    explicit BudgetError(const std::string& what) : Error(what) {}
};

// Operation applied to a backend it does not support (e.g. satisfiability
// search over the rationals).
struct BackendError : Error {
    explicit BackendError(const std::string& what) : Error(what) {}
};

} // namespace rml
