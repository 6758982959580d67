#include "rml/formula.hpp"

#include "rml/errors.hpp"

#include <algorithm>
#include <cctype>

namespace rml {

TermPtr Term::var(int index) {
    if (index < 1) throw Error("variable indices are 1-based");
    auto t = std::shared_ptr<Term>(new Term());
    t->kind_ = Kind::Variable;
    t->var_index_ = index;
    return t;
}

TermPtr Term::constant(std::string name) {
    auto t = std::shared_ptr<Term>(new Term());
    t->kind_ = Kind::Constant;
    t->symbol_ = std::move(name);
    return t;
}

TermPtr Term::apply(std::string fn, std::vector<TermPtr> args) {
    auto t = std::shared_ptr<Term>(new Term());
    t->kind_ = Kind::Apply;
    t->symbol_ = std::move(fn);
    t->args_ = std::move(args);
    return t;
}

void Term::free_vars(std::set<int>& out) const {
    switch (kind_) {
    case Kind::Variable: out.insert(var_index_); break;
    case Kind::Constant: break;
    case Kind::Apply:
        for (const auto& a : args_) a->free_vars(out);
        break;
    }
}

int Term::max_var() const {
    switch (kind_) {
    case Kind::Variable: return var_index_;
    case Kind::Constant: return 0;
    case Kind::Apply: {
        int m = 0;
        for (const auto& a : args_) m = std::max(m, a->max_var());
        return m;
    }
    }
    return 0;
}

namespace {
FormulaPtr mk(Formula&& f) { return std::make_shared<const Formula>(std::move(f)); }
} // namespace

FormulaPtr Formula::eq(TermPtr a, TermPtr b) {
    Formula f;
    f.kind_ = Kind::Eq;
    f.terms_ = {std::move(a), std::move(b)};
    return mk(std::move(f));
}

FormulaPtr Formula::rel(std::string name, std::vector<TermPtr> args) {
    Formula f;
    f.kind_ = Kind::Rel;
    f.symbol_ = std::move(name);
    f.terms_ = std::move(args);
    return mk(std::move(f));
}

FormulaPtr Formula::negate(FormulaPtr g) {
    Formula f;
    f.kind_ = Kind::Not;
    f.left_ = std::move(g);
    return mk(std::move(f));
}

FormulaPtr Formula::conj(FormulaPtr a, FormulaPtr b) {
    Formula f;
    f.kind_ = Kind::And;
    f.left_ = std::move(a);
    f.right_ = std::move(b);
    return mk(std::move(f));
}

FormulaPtr Formula::disj(FormulaPtr a, FormulaPtr b) {
    Formula f;
    f.kind_ = Kind::Or;
    f.left_ = std::move(a);
    f.right_ = std::move(b);
    return mk(std::move(f));
}

FormulaPtr Formula::implies(FormulaPtr a, FormulaPtr b) {
    return disj(negate(std::move(a)), std::move(b));
}

FormulaPtr Formula::iff(FormulaPtr a, FormulaPtr b) {
    return conj(implies(a, b), implies(b, a));
}

FormulaPtr Formula::forall(int var, FormulaPtr g) {
    Formula f;
    f.kind_ = Kind::Forall;
    f.quant_var_ = var;
    f.left_ = std::move(g);
    return mk(std::move(f));
}

FormulaPtr Formula::exists(int var, FormulaPtr g) {
    Formula f;
    f.kind_ = Kind::Exists;
    f.quant_var_ = var;
    f.left_ = std::move(g);
    return mk(std::move(f));
}

FormulaPtr Formula::conj_all(std::vector<FormulaPtr> fs) {
    if (fs.empty()) throw Error("empty conjunction");
    // Balanced fold keeps the tree depth logarithmic.
    while (fs.size() > 1) {
        std::vector<FormulaPtr> next;
        next.reserve((fs.size() + 1) / 2);
        for (size_t i = 0; i + 1 < fs.size(); i += 2) next.push_back(conj(fs[i], fs[i + 1]));
        if (fs.size() % 2) next.push_back(fs.back());
        fs = std::move(next);
    }
    return fs[0];
}

FormulaPtr Formula::disj_all(std::vector<FormulaPtr> fs) {
    if (fs.empty()) throw Error("empty disjunction");
    while (fs.size() > 1) {
        std::vector<FormulaPtr> next;
        next.reserve((fs.size() + 1) / 2);
        for (size_t i = 0; i + 1 < fs.size(); i += 2) next.push_back(disj(fs[i], fs[i + 1]));
        if (fs.size() % 2) next.push_back(fs.back());
        fs = std::move(next);
    }
    return fs[0];
}

void Formula::free_vars(std::set<int>& out) const {
    switch (kind_) {
    case Kind::Eq:
    case Kind::Rel:
        for (const auto& t : terms_) t->free_vars(out);
        break;
    case Kind::Not:
        left_->free_vars(out);
        break;
    case Kind::And:
    case Kind::Or:
        left_->free_vars(out);
        right_->free_vars(out);
        break;
    case Kind::Forall:
    case Kind::Exists: {
        std::set<int> inner;
        left_->free_vars(inner);
        inner.erase(quant_var_);
        out.insert(inner.begin(), inner.end());
        break;
    }
    }
}

std::set<int> Formula::free_vars() const {
    std::set<int> out;
    free_vars(out);
    return out;
}

bool Formula::quantifier_free() const {
    switch (kind_) {
    case Kind::Eq:
    case Kind::Rel: return true;
    case Kind::Not: return left_->quantifier_free();
    case Kind::And:
    case Kind::Or: return left_->quantifier_free() && right_->quantifier_free();
    default: return false;
    }
}

int Formula::max_var() const {
    switch (kind_) {
    case Kind::Eq:
    case Kind::Rel: {
        int m = 0;
        for (const auto& t : terms_) m = std::max(m, t->max_var());
        return m;
    }
    case Kind::Not: return left_->max_var();
    case Kind::And:
    case Kind::Or: return std::max(left_->max_var(), right_->max_var());
    case Kind::Forall:
    case Kind::Exists: return std::max(quant_var_, left_->max_var());
    }
    return 0;
}

namespace {
void term_constants(const Term& t, std::set<std::string>& out) {
    switch (t.kind()) {
    case Term::Kind::Variable: break;
    case Term::Kind::Constant: out.insert(t.symbol()); break;
    case Term::Kind::Apply:
        for (const auto& a : t.args()) term_constants(*a, out);
        break;
    }
}
} // namespace

void Formula::constants(std::set<std::string>& out) const {
    switch (kind_) {
    case Kind::Eq:
    case Kind::Rel:
        for (const auto& t : terms_) term_constants(*t, out);
        break;
    case Kind::Not:
    case Kind::Forall:
    case Kind::Exists:
        left_->constants(out);
        break;
    case Kind::And:
    case Kind::Or:
        left_->constants(out);
        right_->constants(out);
        break;
    }
}

namespace {
size_t term_nodes(const Term& t) {
    if (t.kind() != Term::Kind::Apply) return 1;
    size_t n = 1;
    for (const auto& a : t.args()) n += term_nodes(*a);
    return n;
}
} // namespace

size_t Formula::node_count() const {
    size_t n = 1;
    switch (kind_) {
    case Kind::Eq:
    case Kind::Rel:
        for (const auto& t : terms_) n += term_nodes(*t);
        return n;
    case Kind::Not:
    case Kind::Forall:
    case Kind::Exists:
        return n + left_->node_count();
    case Kind::And:
    case Kind::Or:
        return n + left_->node_count() + right_->node_count();
    }
    return n;
}

size_t Formula::atom_count() const {
    switch (kind_) {
    case Kind::Eq:
    case Kind::Rel: return 1;
    case Kind::Not:
    case Kind::Forall:
    case Kind::Exists: return left_->atom_count();
    case Kind::And:
    case Kind::Or: return left_->atom_count() + right_->atom_count();
    }
    return 0;
}

bool structurally_equal(const Term& a, const Term& b) {
    if (a.kind() != b.kind()) return false;
    switch (a.kind()) {
    case Term::Kind::Variable: return a.var_index() == b.var_index();
    case Term::Kind::Constant: return a.symbol() == b.symbol();
    case Term::Kind::Apply: {
        if (a.symbol() != b.symbol() || a.args().size() != b.args().size()) return false;
        for (size_t i = 0; i < a.args().size(); ++i)
            if (!structurally_equal(*a.args()[i], *b.args()[i])) return false;
        return true;
    }
    }
    return false;
}

bool structurally_equal(const Formula& a, const Formula& b) {
    if (a.kind() != b.kind()) return false;
    switch (a.kind()) {
    case Formula::Kind::Eq:
    case Formula::Kind::Rel: {
        if (a.symbol() != b.symbol() || a.terms().size() != b.terms().size()) return false;
        for (size_t i = 0; i < a.terms().size(); ++i)
            if (!structurally_equal(*a.terms()[i], *b.terms()[i])) return false;
        return true;
    }
    case Formula::Kind::Not:
        return structurally_equal(*a.left(), *b.left());
    case Formula::Kind::And:
    case Formula::Kind::Or:
        return structurally_equal(*a.left(), *b.left()) && structurally_equal(*a.right(), *b.right());
    case Formula::Kind::Forall:
    case Formula::Kind::Exists:
        return a.quant_var() == b.quant_var() && structurally_equal(*a.left(), *b.left());
    }
    return false;
}

std::string print_term(const Term& t) {
    switch (t.kind()) {
    case Term::Kind::Variable: return "x" + std::to_string(t.var_index());
    case Term::Kind::Constant: return t.symbol();
    case Term::Kind::Apply: {
        std::string s = t.symbol() + "(";
        for (size_t i = 0; i < t.args().size(); ++i) {
            if (i) s += ",";
            s += print_term(*t.args()[i]);
        }
        return s + ")";
    }
    }
    return "?";
}

std::string print_formula(const Formula& f) {
    switch (f.kind()) {
    case Formula::Kind::Eq:
        return "(" + print_term(*f.terms()[0]) + " = " + print_term(*f.terms()[1]) + ")";
    case Formula::Kind::Rel: {
        std::string s = f.symbol() + "(";
        for (size_t i = 0; i < f.terms().size(); ++i) {
            if (i) s += ",";
            s += print_term(*f.terms()[i]);
        }
        return s + ")";
    }
    case Formula::Kind::Not: return "~" + print_formula(*f.left());
    case Formula::Kind::And:
        return "(" + print_formula(*f.left()) + " & " + print_formula(*f.right()) + ")";
    case Formula::Kind::Or:
        return "(" + print_formula(*f.left()) + " | " + print_formula(*f.right()) + ")";
    case Formula::Kind::Forall:
        return "forall x" + std::to_string(f.quant_var()) + " . " + print_formula(*f.left());
    case Formula::Kind::Exists:
        return "exists x" + std::to_string(f.quant_var()) + " . " + print_formula(*f.left());
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Parser

namespace {

struct Token {
    enum class Kind { Symbol, Variable, Number, LParen, RParen, Comma, Eq, Tilde, Amp, Pipe, Arrow, Iff, Exists, Forall, Dot, End };
    Kind kind;
    std::string text;
    int var_index = 0;
    size_t line = 1, col = 1;
};

class Lexer {
public:
    explicit Lexer(const std::string& text) : text_(text) { advance(); }

    const Token& peek() const { return tok_; }
    Token take() {
        Token t = tok_;
        advance();
        return t;
    }

private:
    void advance() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) bump();
        tok_.line = line_;
        tok_.col = col_;
        if (pos_ >= text_.size()) {
            tok_.kind = Token::Kind::End;
            tok_.text = "<end of input>";
            return;
        }
        char c = text_[pos_];
        auto two = text_.substr(pos_, 2);
        auto three = text_.substr(pos_, 3);
        if (three == "<->") {
            tok_ = {Token::Kind::Iff, "<->", 0, line_, col_};
            bump(); bump(); bump();
            return;
        }
        if (two == "->") {
            tok_ = {Token::Kind::Arrow, "->", 0, line_, col_};
            bump(); bump();
            return;
        }
        if (two == "<=") {
            tok_ = {Token::Kind::Symbol, "<=", 0, line_, col_};
            bump(); bump();
            return;
        }
        switch (c) {
        case '(': tok_ = {Token::Kind::LParen, "(", 0, line_, col_}; bump(); return;
        case ')': tok_ = {Token::Kind::RParen, ")", 0, line_, col_}; bump(); return;
        case ',': tok_ = {Token::Kind::Comma, ",", 0, line_, col_}; bump(); return;
        case '=': tok_ = {Token::Kind::Eq, "=", 0, line_, col_}; bump(); return;
        case '~': tok_ = {Token::Kind::Tilde, "~", 0, line_, col_}; bump(); return;
        case '&': tok_ = {Token::Kind::Amp, "&", 0, line_, col_}; bump(); return;
        case '|': tok_ = {Token::Kind::Pipe, "|", 0, line_, col_}; bump(); return;
        case '.': tok_ = {Token::Kind::Dot, ".", 0, line_, col_}; bump(); return;
        case '+': case '*': tok_ = {Token::Kind::Symbol, std::string(1, c), 0, line_, col_}; bump(); return;
        case '-': {
            // '-' followed by a digit lexes as a (negative) rational literal.
            if (pos_ + 1 < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_ + 1]))) break;
            tok_ = {Token::Kind::Symbol, "-", 0, line_, col_};
            bump();
            return;
        }
        default: break;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '-') {
            size_t start = pos_;
            if (c == '-') bump();
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) bump();
            if (pos_ < text_.size() && text_[pos_] == '/' && pos_ + 1 < text_.size() &&
                std::isdigit(static_cast<unsigned char>(text_[pos_ + 1]))) {
                bump();
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) bump();
            }
            tok_ = {Token::Kind::Number, text_.substr(start, pos_ - start), 0, tok_.line, tok_.col};
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                bump();
            std::string word = text_.substr(start, pos_ - start);
            if (word == "exists") {
                tok_ = {Token::Kind::Exists, word, 0, tok_.line, tok_.col};
            } else if (word == "forall") {
                tok_ = {Token::Kind::Forall, word, 0, tok_.line, tok_.col};
            } else if (word.size() > 1 && word[0] == 'x' &&
                       std::all_of(word.begin() + 1, word.end(),
                                   [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
                tok_ = {Token::Kind::Variable, word, std::stoi(word.substr(1)), tok_.line, tok_.col};
            } else {
                tok_ = {Token::Kind::Symbol, word, 0, tok_.line, tok_.col};
            }
            return;
        }
        throw ParseError("unexpected character '" + std::string(1, c) + "'", line_, col_);
    }

    void bump() {
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    const std::string& text_;
    size_t pos_ = 0;
    size_t line_ = 1, col_ = 1;
    Token tok_;
};

class FormulaParser {
public:
    FormulaParser(const std::string& text, const Vocabulary& voc) : lex_(text), voc_(voc) {}

    FormulaPtr parse_sentence() {
        FormulaPtr f = formula();
        expect(Token::Kind::End);
        return f;
    }

    TermPtr parse_single_term() {
        TermPtr t = term();
        expect(Token::Kind::End);
        return t;
    }

private:
    [[noreturn]] void fail(const std::string& msg, const Token& t) {
        throw ParseError(msg + " (found '" + t.text + "')", t.line, t.col);
    }

    Token expect(Token::Kind k) {
        Token t = lex_.take();
        if (t.kind != k) fail("unexpected token", t);
        return t;
    }

    FormulaPtr formula() {
        const Token& t = lex_.peek();
        if (t.kind == Token::Kind::Exists || t.kind == Token::Kind::Forall) {
            bool ex = t.kind == Token::Kind::Exists;
            lex_.take();
            Token v = lex_.take();
            if (v.kind != Token::Kind::Variable) fail("expected variable after quantifier", v);
            expect(Token::Kind::Dot);
            FormulaPtr body = formula();
            return ex ? Formula::exists(v.var_index, body) : Formula::forall(v.var_index, body);
        }
        if (t.kind == Token::Kind::Tilde) {
            lex_.take();
            return Formula::negate(formula());
        }
        if (t.kind == Token::Kind::LParen) {
            Token open = lex_.take();
            FormulaPtr lhs_formula;
            // Inside parentheses we may find either a grouped/binary formula
            // or a bare equality atom.
            if (starts_term() && !starts_relation()) {
                TermPtr a = term();
                expect(Token::Kind::Eq);
                TermPtr b = term();
                lhs_formula = Formula::eq(std::move(a), std::move(b));
            } else {
                lhs_formula = formula();
            }
            const Token& nxt = lex_.peek();
            switch (nxt.kind) {
            case Token::Kind::RParen:
                lex_.take();
                return lhs_formula;
            case Token::Kind::Amp: {
                lex_.take();
                FormulaPtr rhs = formula();
                expect(Token::Kind::RParen);
                return Formula::conj(lhs_formula, rhs);
            }
            case Token::Kind::Pipe: {
                lex_.take();
                FormulaPtr rhs = formula();
                expect(Token::Kind::RParen);
                return Formula::disj(lhs_formula, rhs);
            }
            case Token::Kind::Arrow: {
                lex_.take();
                FormulaPtr rhs = formula();
                expect(Token::Kind::RParen);
                return Formula::implies(lhs_formula, rhs);
            }
            case Token::Kind::Iff: {
                lex_.take();
                FormulaPtr rhs = formula();
                expect(Token::Kind::RParen);
                return Formula::iff(lhs_formula, rhs);
            }
            default:
                fail("expected ')' or a connective", nxt);
            }
            (void)open;
        }
        return atom();
    }

    bool starts_term() {
        const Token& t = lex_.peek();
        if (t.kind == Token::Kind::Variable || t.kind == Token::Kind::Number) return true;
        if (t.kind == Token::Kind::Symbol)
            return voc_.has_constant(t.text) || voc_.function_arity(t.text).has_value();
        return false;
    }

    bool starts_relation() {
        const Token& t = lex_.peek();
        return t.kind == Token::Kind::Symbol && voc_.relation_arity(t.text).has_value();
    }

    FormulaPtr atom() {
        const Token& t = lex_.peek();
        if (starts_relation()) {
            Token name = lex_.take();
            int arity = *voc_.relation_arity(name.text);
            std::vector<TermPtr> args = argument_list();
            if (static_cast<int>(args.size()) != arity)
                throw ParseError("arity mismatch for relation " + name.text, name.line, name.col);
            return Formula::rel(name.text, std::move(args));
        }
        if (starts_term()) {
            TermPtr a = term();
            expect(Token::Kind::Eq);
            TermPtr b = term();
            return Formula::eq(std::move(a), std::move(b));
        }
        fail("expected a formula", t);
    }

    std::vector<TermPtr> argument_list() {
        expect(Token::Kind::LParen);
        std::vector<TermPtr> args;
        args.push_back(term());
        while (lex_.peek().kind == Token::Kind::Comma) {
            lex_.take();
            args.push_back(term());
        }
        expect(Token::Kind::RParen);
        return args;
    }

    TermPtr term() {
        Token t = lex_.take();
        switch (t.kind) {
        case Token::Kind::Variable:
            return Term::var(t.var_index);
        case Token::Kind::Number: {
            if (!voc_.has_constant(t.text))
                throw ParseError("unknown symbol '" + t.text + "'", t.line, t.col);
            // Rational literals are kept in lowest terms so that printing and
            // the formula code round-trip.
            if (auto q = Rational::parse(t.text)) return Term::constant(q->str());
            return Term::constant(t.text);
        }
        case Token::Kind::Symbol: {
            if (auto arity = voc_.function_arity(t.text)) {
                std::vector<TermPtr> args = argument_list();
                if (static_cast<int>(args.size()) != *arity)
                    throw ParseError("arity mismatch for function " + t.text, t.line, t.col);
                return Term::apply(t.text, std::move(args));
            }
            if (voc_.has_constant(t.text)) return Term::constant(t.text);
            throw ParseError("unknown symbol '" + t.text + "'", t.line, t.col);
        }
        default:
            fail("expected a term", t);
        }
    }

    Lexer lex_;
    const Vocabulary& voc_;
};

} // namespace

FormulaPtr parse_formula(const std::string& text, const Vocabulary& voc) {
    return FormulaParser(text, voc).parse_sentence();
}

TermPtr parse_term(const std::string& text, const Vocabulary& voc) {
    return FormulaParser(text, voc).parse_single_term();
}

} // namespace rml
