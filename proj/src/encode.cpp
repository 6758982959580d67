#include "rml/encode.hpp"

#include "rml/errors.hpp"

namespace rml {

namespace {

enum Tag : unsigned {
    TagVar = 0,
    TagConstBit = 1,
    TagConstSelf = 2,
    TagApply = 3,
    TagEq = 4,
    TagRel = 5,
    TagNot = 6,
    TagAnd = 7,
    TagOr = 8,
    TagForall = 9,
    TagExists = 10,
};

struct Writer {
    const Structure& s;
    Element e0, e1;
    ElementString out;

    explicit Writer(const Structure& s) : s(s), e0(s.zero()), e1(s.one()) {}

    void bit(unsigned b) { out.push_back(b ? e1 : e0); }

    void tag(Tag t) {
        for (int i = 3; i >= 0; --i) bit((t >> i) & 1u);
    }

    void number(long long n) {
        int len = 0;
        for (long long v = n; v > 0; v >>= 1) ++len;
        for (int i = 0; i < len; ++i) bit(1);
        bit(0);
        for (int i = len - 1; i >= 0; --i) bit((n >> i) & 1);
    }

    void term(const Term& t) {
        switch (t.kind()) {
        case Term::Kind::Variable:
            tag(TagVar);
            number(t.var_index());
            break;
        case Term::Kind::Constant: {
            if (t.symbol() == "0") {
                tag(TagConstBit);
                bit(0);
            } else if (t.symbol() == "1") {
                tag(TagConstBit);
                bit(1);
            } else {
                tag(TagConstSelf);
                out.push_back(s.constant(t.symbol()));
            }
            break;
        }
        case Term::Kind::Apply: {
            auto idx = s.vocabulary().function_index(t.symbol());
            if (!idx) throw Error("encode: unknown function " + t.symbol());
            tag(TagApply);
            number(*idx);
            for (const auto& a : t.args()) term(*a);
            break;
        }
        }
    }

    void formula(const Formula& f) {
        switch (f.kind()) {
        case Formula::Kind::Eq:
            tag(TagEq);
            term(*f.terms()[0]);
            term(*f.terms()[1]);
            break;
        case Formula::Kind::Rel: {
            auto idx = s.vocabulary().relation_index(f.symbol());
            if (!idx) throw Error("encode: unknown relation " + f.symbol());
            tag(TagRel);
            number(*idx);
            for (const auto& t : f.terms()) term(*t);
            break;
        }
        case Formula::Kind::Not:
            tag(TagNot);
            formula(*f.left());
            break;
        case Formula::Kind::And:
            tag(TagAnd);
            formula(*f.left());
            formula(*f.right());
            break;
        case Formula::Kind::Or:
            tag(TagOr);
            formula(*f.left());
            formula(*f.right());
            break;
        case Formula::Kind::Forall:
            tag(TagForall);
            number(f.quant_var());
            formula(*f.left());
            break;
        case Formula::Kind::Exists:
            tag(TagExists);
            number(f.quant_var());
            formula(*f.left());
            break;
        }
    }
};

struct Reader {
    const Structure& s;
    Element e0, e1;
    const ElementString& code;
    size_t pos = 0;

    Reader(const Structure& s, const ElementString& code)
        : s(s), e0(s.zero()), e1(s.one()), code(code) {}

    Element next() {
        if (pos >= code.size()) throw Error("decode: malformed prefix code (truncated)");
        return code[pos++];
    }

    unsigned bit() {
        Element e = next();
        if (e == e0) return 0;
        if (e == e1) return 1;
        throw Error("decode: expected a bit, found " + to_string(e));
    }

    unsigned tag() {
        unsigned t = 0;
        for (int i = 0; i < 4; ++i) t = (t << 1) | bit();
        return t;
    }

    long long number() {
        int len = 0;
        while (bit() == 1) ++len;
        long long n = 0;
        for (int i = 0; i < len; ++i) n = (n << 1) | bit();
        return n;
    }

    TermPtr term() {
        unsigned t = tag();
        switch (t) {
        case TagVar: {
            long long v = number();
            if (v < 1) throw Error("decode: bad variable index");
            return Term::var(static_cast<int>(v));
        }
        case TagConstBit:
            return Term::constant(bit() ? "1" : "0");
        case TagConstSelf: {
            Element e = next();
            auto name = s.constant_name_for(e);
            if (!name) throw Error("decode: no constant symbol for element " + to_string(e));
            return Term::constant(*name);
        }
        case TagApply: {
            long long idx = number();
            const auto& fns = s.vocabulary().functions();
            if (idx < 0 || idx >= static_cast<long long>(fns.size()))
                throw Error("decode: function index out of range");
            const auto& [name, arity] = fns[idx];
            std::vector<TermPtr> args;
            args.reserve(arity);
            for (int i = 0; i < arity; ++i) args.push_back(term());
            return Term::apply(name, std::move(args));
        }
        default:
            throw Error("decode: malformed prefix code (bad term tag)");
        }
    }

    FormulaPtr formula() {
        unsigned t = tag();
        switch (t) {
        case TagEq: {
            TermPtr a = term();
            TermPtr b = term();
            return Formula::eq(std::move(a), std::move(b));
        }
        case TagRel: {
            long long idx = number();
            const auto& rels = s.vocabulary().relations();
            if (idx < 0 || idx >= static_cast<long long>(rels.size()))
                throw Error("decode: relation index out of range");
            const auto& [name, arity] = rels[idx];
            std::vector<TermPtr> args;
            args.reserve(arity);
            for (int i = 0; i < arity; ++i) args.push_back(term());
            return Formula::rel(name, std::move(args));
        }
        case TagNot:
            return Formula::negate(formula());
        case TagAnd: {
            FormulaPtr a = formula();
            FormulaPtr b = formula();
            return Formula::conj(std::move(a), std::move(b));
        }
        case TagOr: {
            FormulaPtr a = formula();
            FormulaPtr b = formula();
            return Formula::disj(std::move(a), std::move(b));
        }
        case TagForall: {
            long long v = number();
            return Formula::forall(static_cast<int>(v), formula());
        }
        case TagExists: {
            long long v = number();
            return Formula::exists(static_cast<int>(v), formula());
        }
        default:
            throw Error("decode: malformed prefix code (bad formula tag)");
        }
    }
};

} // namespace

ElementString encode_formula(const Formula& phi, const Structure& s) {
    Writer w(s);
    w.formula(phi);
    return std::move(w.out);
}

FormulaPtr decode_formula(const ElementString& code, const Structure& s) {
    if (code.empty()) throw Error("decode: empty input");
    Reader r(s, code);
    FormulaPtr f = r.formula();
    if (r.pos != code.size()) throw Error("decode: trailing elements after formula");
    return f;
}

bool is_pure_bit_string(const ElementString& code, const Structure& s) {
    Element e0 = s.zero(), e1 = s.one();
    for (const auto& e : code)
        if (!(e == e0) && !(e == e1)) return false;
    return true;
}

} // namespace rml
