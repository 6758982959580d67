#include "rml/element.hpp"

#include <ostream>
#include <sstream>

namespace rml {

bool operator==(const Element& a, const Element& b) {
    if (a.index() != b.index()) return false;
    return std::visit(
        [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            return x == std::get<T>(b);
        },
        a);
}

std::string to_string(const Element& e) {
    return std::visit(
        [](const auto& x) -> std::string {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Bit>) return std::to_string(x.v);
            else if constexpr (std::is_same_v<T, Residue>) return std::to_string(x.v);
            else if constexpr (std::is_same_v<T, Rational>) return x.str();
            else return std::to_string(x.v);
        },
        e);
}

std::string to_string(const ElementString& v) {
    std::string out = "(";
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += to_string(v[i]);
    }
    out += ")";
    return out;
}

std::ostream& operator<<(std::ostream& os, const Element& e) { return os << to_string(e); }

} // namespace rml
