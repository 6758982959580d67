#include "rml/soformula.hpp"

#include "rml/errors.hpp"

#include <algorithm>
#include <cctype>
#include <map>

namespace rml {

MetafiniteVocabulary::MetafiniteVocabulary(Vocabulary prim, Vocabulary sec,
                                           std::vector<std::pair<std::string, int>> w)
    : primary(std::move(prim)), secondary(std::move(sec)), weights(std::move(w)) {
    std::set<std::string> names;
    auto add = [&](const std::string& n) {
        if (!names.insert(n).second)
            throw Error("metafinite vocabulary namespaces must be disjoint: " + n);
    };
    for (const auto& c : primary.constants()) add(c);
    for (const auto& [f, k] : primary.functions()) add(f);
    for (const auto& [p, k] : primary.relations()) add(p);
    for (const auto& c : secondary.constants()) add(c);
    for (const auto& [f, k] : secondary.functions()) add(f);
    for (const auto& [p, k] : secondary.relations()) add(p);
    for (const auto& [wn, k] : weights) {
        if (k < 0) throw Error("weight arity must be >= 0: " + wn);
        add(wn);
    }
}

std::optional<int> MetafiniteVocabulary::weight_arity(const std::string& name) const {
    for (const auto& [w, k] : weights)
        if (w == name) return k;
    return std::nullopt;
}

// --- PointTerm -------------------------------------------------------------

PointTermPtr PointTerm::var(int index) {
    if (index < 1) throw Error("point variables are 1-based");
    auto t = std::shared_ptr<PointTerm>(new PointTerm());
    t->kind_ = Kind::Var;
    t->var_ = index;
    return t;
}

PointTermPtr PointTerm::constant(std::string name) {
    auto t = std::shared_ptr<PointTerm>(new PointTerm());
    t->kind_ = Kind::Const;
    t->symbol_ = std::move(name);
    return t;
}

PointTermPtr PointTerm::apply(std::string fn, std::vector<PointTermPtr> args) {
    auto t = std::shared_ptr<PointTerm>(new PointTerm());
    t->kind_ = Kind::App;
    t->symbol_ = std::move(fn);
    t->args_ = std::move(args);
    return t;
}

void PointTerm::vars(std::set<int>& out) const {
    if (kind_ == Kind::Var) out.insert(var_);
    for (const auto& a : args_) a->vars(out);
}

// --- WeightTerm ------------------------------------------------------------

WeightTermPtr WeightTerm::sec_const(std::string name) {
    auto t = std::shared_ptr<WeightTerm>(new WeightTerm());
    t->kind_ = Kind::SecConst;
    t->symbol_ = std::move(name);
    return t;
}

WeightTermPtr WeightTerm::weight_app(std::string weight, std::vector<PointTermPtr> args) {
    auto t = std::shared_ptr<WeightTerm>(new WeightTerm());
    t->kind_ = Kind::WeightApp;
    t->symbol_ = std::move(weight);
    t->point_args_ = std::move(args);
    return t;
}

WeightTermPtr WeightTerm::so_app(std::string so_var, std::vector<PointTermPtr> args) {
    auto t = std::shared_ptr<WeightTerm>(new WeightTerm());
    t->kind_ = Kind::SOApp;
    t->symbol_ = std::move(so_var);
    t->point_args_ = std::move(args);
    return t;
}

WeightTermPtr WeightTerm::sec_app(std::string fn, std::vector<WeightTermPtr> args) {
    auto t = std::shared_ptr<WeightTerm>(new WeightTerm());
    t->kind_ = Kind::SecApp;
    t->symbol_ = std::move(fn);
    t->weight_args_ = std::move(args);
    return t;
}

void WeightTerm::point_vars(std::set<int>& out) const {
    for (const auto& p : point_args_) p->vars(out);
    for (const auto& w : weight_args_) w->point_vars(out);
}

void WeightTerm::so_vars(std::set<std::string>& out) const {
    if (kind_ == Kind::SOApp) out.insert(symbol_);
    for (const auto& w : weight_args_) w->so_vars(out);
}

void WeightTerm::sec_constants(std::set<std::string>& out) const {
    if (kind_ == Kind::SecConst) out.insert(symbol_);
    for (const auto& w : weight_args_) w->sec_constants(out);
}

// --- SOFormula ---------------------------------------------------------------

namespace {
SOFormulaPtr mk(SOFormula&& f) { return std::make_shared<const SOFormula>(std::move(f)); }
} // namespace

SOFormulaPtr SOFormula::point_eq(PointTermPtr a, PointTermPtr b) {
    SOFormula f;
    f.kind_ = Kind::PointEq;
    f.point_terms_ = {std::move(a), std::move(b)};
    return mk(std::move(f));
}

SOFormulaPtr SOFormula::prim_rel(std::string name, std::vector<PointTermPtr> args) {
    SOFormula f;
    f.kind_ = Kind::PrimRel;
    f.symbol_ = std::move(name);
    f.point_terms_ = std::move(args);
    return mk(std::move(f));
}

SOFormulaPtr SOFormula::weight_eq(WeightTermPtr a, WeightTermPtr b) {
    SOFormula f;
    f.kind_ = Kind::WeightEq;
    f.weight_terms_ = {std::move(a), std::move(b)};
    return mk(std::move(f));
}

SOFormulaPtr SOFormula::sec_rel(std::string name, std::vector<WeightTermPtr> args) {
    SOFormula f;
    f.kind_ = Kind::SecRel;
    f.symbol_ = std::move(name);
    f.weight_terms_ = std::move(args);
    return mk(std::move(f));
}

SOFormulaPtr SOFormula::negate(SOFormulaPtr g) {
    SOFormula f;
    f.kind_ = Kind::Not;
    f.left_ = std::move(g);
    return mk(std::move(f));
}

SOFormulaPtr SOFormula::conj(SOFormulaPtr a, SOFormulaPtr b) {
    SOFormula f;
    f.kind_ = Kind::And;
    f.left_ = std::move(a);
    f.right_ = std::move(b);
    return mk(std::move(f));
}

SOFormulaPtr SOFormula::disj(SOFormulaPtr a, SOFormulaPtr b) {
    SOFormula f;
    f.kind_ = Kind::Or;
    f.left_ = std::move(a);
    f.right_ = std::move(b);
    return mk(std::move(f));
}

SOFormulaPtr SOFormula::implies(SOFormulaPtr a, SOFormulaPtr b) {
    return disj(negate(std::move(a)), std::move(b));
}

SOFormulaPtr SOFormula::iff(SOFormulaPtr a, SOFormulaPtr b) {
    return conj(implies(a, b), implies(b, a));
}

SOFormulaPtr SOFormula::conj_all(std::vector<SOFormulaPtr> fs) {
    if (fs.empty()) throw Error("empty conjunction");
    while (fs.size() > 1) {
        std::vector<SOFormulaPtr> next;
        next.reserve((fs.size() + 1) / 2);
        for (size_t i = 0; i + 1 < fs.size(); i += 2) next.push_back(conj(fs[i], fs[i + 1]));
        if (fs.size() % 2) next.push_back(fs.back());
        fs = std::move(next);
    }
    return fs[0];
}

SOFormulaPtr SOFormula::disj_all(std::vector<SOFormulaPtr> fs) {
    if (fs.empty()) throw Error("empty disjunction");
    while (fs.size() > 1) {
        std::vector<SOFormulaPtr> next;
        next.reserve((fs.size() + 1) / 2);
        for (size_t i = 0; i + 1 < fs.size(); i += 2) next.push_back(disj(fs[i], fs[i + 1]));
        if (fs.size() % 2) next.push_back(fs.back());
        fs = std::move(next);
    }
    return fs[0];
}

SOFormulaPtr SOFormula::forall_point(int var, SOFormulaPtr g) {
    SOFormula f;
    f.kind_ = Kind::ForallPoint;
    f.point_var_ = var;
    f.left_ = std::move(g);
    return mk(std::move(f));
}

SOFormulaPtr SOFormula::exists_point(int var, SOFormulaPtr g) {
    SOFormula f;
    f.kind_ = Kind::ExistsPoint;
    f.point_var_ = var;
    f.left_ = std::move(g);
    return mk(std::move(f));
}

SOFormulaPtr SOFormula::forall_so(std::string var, int arity, SOFormulaPtr g) {
    SOFormula f;
    f.kind_ = Kind::ForallSO;
    f.symbol_ = std::move(var);
    f.so_arity_ = arity;
    f.left_ = std::move(g);
    return mk(std::move(f));
}

SOFormulaPtr SOFormula::exists_so(std::string var, int arity, SOFormulaPtr g) {
    SOFormula f;
    f.kind_ = Kind::ExistsSO;
    f.symbol_ = std::move(var);
    f.so_arity_ = arity;
    f.left_ = std::move(g);
    return mk(std::move(f));
}

bool SOFormula::so_quantifier_free() const {
    switch (kind_) {
    case Kind::ForallSO:
    case Kind::ExistsSO: return false;
    case Kind::Not:
    case Kind::ForallPoint:
    case Kind::ExistsPoint: return left_->so_quantifier_free();
    case Kind::And:
    case Kind::Or: return left_->so_quantifier_free() && right_->so_quantifier_free();
    default: return true;
    }
}

void SOFormula::free_so_vars(std::set<std::string>& out) const {
    switch (kind_) {
    case Kind::PointEq:
    case Kind::PrimRel:
        break;
    case Kind::WeightEq:
    case Kind::SecRel:
        for (const auto& w : weight_terms_) w->so_vars(out);
        break;
    case Kind::Not:
    case Kind::ForallPoint:
    case Kind::ExistsPoint:
        left_->free_so_vars(out);
        break;
    case Kind::And:
    case Kind::Or:
        left_->free_so_vars(out);
        right_->free_so_vars(out);
        break;
    case Kind::ForallSO:
    case Kind::ExistsSO: {
        std::set<std::string> inner;
        left_->free_so_vars(inner);
        inner.erase(symbol_);
        out.insert(inner.begin(), inner.end());
        break;
    }
    }
}

void SOFormula::free_point_vars(std::set<int>& out) const {
    switch (kind_) {
    case Kind::PointEq:
    case Kind::PrimRel:
        for (const auto& p : point_terms_) p->vars(out);
        break;
    case Kind::WeightEq:
    case Kind::SecRel:
        for (const auto& w : weight_terms_) w->point_vars(out);
        break;
    case Kind::Not:
    case Kind::ForallSO:
    case Kind::ExistsSO:
        left_->free_point_vars(out);
        break;
    case Kind::And:
    case Kind::Or:
        left_->free_point_vars(out);
        right_->free_point_vars(out);
        break;
    case Kind::ForallPoint:
    case Kind::ExistsPoint: {
        std::set<int> inner;
        left_->free_point_vars(inner);
        inner.erase(point_var_);
        out.insert(inner.begin(), inner.end());
        break;
    }
    }
}

void SOFormula::sec_constants(std::set<std::string>& out) const {
    switch (kind_) {
    case Kind::PointEq:
    case Kind::PrimRel:
        break;
    case Kind::WeightEq:
    case Kind::SecRel:
        for (const auto& w : weight_terms_) w->sec_constants(out);
        break;
    case Kind::Not:
    case Kind::ForallPoint:
    case Kind::ExistsPoint:
    case Kind::ForallSO:
    case Kind::ExistsSO:
        left_->sec_constants(out);
        break;
    case Kind::And:
    case Kind::Or:
        left_->sec_constants(out);
        right_->sec_constants(out);
        break;
    }
}

int SOFormula::max_point_var() const {
    std::set<int> vars;
    // Bound variables count too; walk everything.
    std::vector<const SOFormula*> stack{this};
    int m = 0;
    while (!stack.empty()) {
        const SOFormula* f = stack.back();
        stack.pop_back();
        switch (f->kind_) {
        case Kind::PointEq:
        case Kind::PrimRel:
            for (const auto& p : f->point_terms_) p->vars(vars);
            break;
        case Kind::WeightEq:
        case Kind::SecRel:
            for (const auto& w : f->weight_terms_) w->point_vars(vars);
            break;
        case Kind::ForallPoint:
        case Kind::ExistsPoint:
            m = std::max(m, f->point_var_);
            stack.push_back(f->left_.get());
            break;
        case Kind::Not:
        case Kind::ForallSO:
        case Kind::ExistsSO:
            stack.push_back(f->left_.get());
            break;
        case Kind::And:
        case Kind::Or:
            stack.push_back(f->left_.get());
            stack.push_back(f->right_.get());
            break;
        }
    }
    for (int v : vars) m = std::max(m, v);
    return m;
}

// --- printing ----------------------------------------------------------------

std::string print_point_term(const PointTerm& t) {
    switch (t.kind()) {
    case PointTerm::Kind::Var: return "x" + std::to_string(t.var_index());
    case PointTerm::Kind::Const: return t.symbol();
    case PointTerm::Kind::App: {
        std::string s = t.symbol() + "(";
        for (size_t i = 0; i < t.args().size(); ++i) {
            if (i) s += ",";
            s += print_point_term(*t.args()[i]);
        }
        return s + ")";
    }
    }
    return "?";
}

std::string print_weight_term(const WeightTerm& t) {
    switch (t.kind()) {
    case WeightTerm::Kind::SecConst: return t.symbol();
    case WeightTerm::Kind::WeightApp:
    case WeightTerm::Kind::SOApp: {
        if (t.point_args().empty()) return t.symbol() + "()";
        std::string s = t.symbol() + "(";
        for (size_t i = 0; i < t.point_args().size(); ++i) {
            if (i) s += ",";
            s += print_point_term(*t.point_args()[i]);
        }
        return s + ")";
    }
    case WeightTerm::Kind::SecApp: {
        std::string s = t.symbol() + "(";
        for (size_t i = 0; i < t.weight_args().size(); ++i) {
            if (i) s += ",";
            s += print_weight_term(*t.weight_args()[i]);
        }
        return s + ")";
    }
    }
    return "?";
}

std::string print_so(const SOFormula& f) {
    switch (f.kind()) {
    case SOFormula::Kind::PointEq:
        return "(" + print_point_term(*f.point_terms()[0]) + " = " +
               print_point_term(*f.point_terms()[1]) + ")";
    case SOFormula::Kind::PrimRel: {
        std::string s = f.symbol() + "(";
        for (size_t i = 0; i < f.point_terms().size(); ++i) {
            if (i) s += ",";
            s += print_point_term(*f.point_terms()[i]);
        }
        return s + ")";
    }
    case SOFormula::Kind::WeightEq:
        return "(" + print_weight_term(*f.weight_terms()[0]) + " = " +
               print_weight_term(*f.weight_terms()[1]) + ")";
    case SOFormula::Kind::SecRel: {
        std::string s = f.symbol() + "(";
        for (size_t i = 0; i < f.weight_terms().size(); ++i) {
            if (i) s += ",";
            s += print_weight_term(*f.weight_terms()[i]);
        }
        return s + ")";
    }
    case SOFormula::Kind::Not: return "~" + print_so(*f.left());
    case SOFormula::Kind::And:
        return "(" + print_so(*f.left()) + " & " + print_so(*f.right()) + ")";
    case SOFormula::Kind::Or:
        return "(" + print_so(*f.left()) + " | " + print_so(*f.right()) + ")";
    case SOFormula::Kind::ForallPoint:
        return "forall x" + std::to_string(f.point_var()) + " . " + print_so(*f.left());
    case SOFormula::Kind::ExistsPoint:
        return "exists x" + std::to_string(f.point_var()) + " . " + print_so(*f.left());
    case SOFormula::Kind::ForallSO:
        return "FORALL " + f.so_var() + "^" + std::to_string(f.so_arity()) + " . " + print_so(*f.left());
    case SOFormula::Kind::ExistsSO:
        return "EXISTS " + f.so_var() + "^" + std::to_string(f.so_arity()) + " . " + print_so(*f.left());
    }
    return "?";
}

// --- parsing ----------------------------------------------------------------

namespace {

struct SOTok {
    enum class Kind { Word, Variable, Number, LParen, RParen, Comma, Eq, Tilde, Amp, Pipe, Arrow, Iff, Dot, Caret, End };
    Kind kind;
    std::string text;
    int var_index = 0;
    size_t line = 1, col = 1;
};

class SOLexer {
public:
    explicit SOLexer(const std::string& text) : text_(text) { advance(); }
    const SOTok& peek() const { return tok_; }
    SOTok take() {
        SOTok t = tok_;
        advance();
        return t;
    }

private:
    void bump() {
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void advance() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) bump();
        tok_.line = line_;
        tok_.col = col_;
        if (pos_ >= text_.size()) {
            tok_.kind = SOTok::Kind::End;
            tok_.text = "<end of input>";
            return;
        }
        char c = text_[pos_];
        if (text_.compare(pos_, 3, "<->") == 0) {
            tok_ = {SOTok::Kind::Iff, "<->", 0, line_, col_};
            bump(); bump(); bump();
            return;
        }
        if (text_.compare(pos_, 2, "->") == 0) {
            tok_ = {SOTok::Kind::Arrow, "->", 0, line_, col_};
            bump(); bump();
            return;
        }
        if (text_.compare(pos_, 2, "<=") == 0) {
            tok_ = {SOTok::Kind::Word, "<=", 0, line_, col_};
            bump(); bump();
            return;
        }
        switch (c) {
        case '(': tok_ = {SOTok::Kind::LParen, "(", 0, line_, col_}; bump(); return;
        case ')': tok_ = {SOTok::Kind::RParen, ")", 0, line_, col_}; bump(); return;
        case ',': tok_ = {SOTok::Kind::Comma, ",", 0, line_, col_}; bump(); return;
        case '=': tok_ = {SOTok::Kind::Eq, "=", 0, line_, col_}; bump(); return;
        case '~': tok_ = {SOTok::Kind::Tilde, "~", 0, line_, col_}; bump(); return;
        case '&': tok_ = {SOTok::Kind::Amp, "&", 0, line_, col_}; bump(); return;
        case '|': tok_ = {SOTok::Kind::Pipe, "|", 0, line_, col_}; bump(); return;
        case '.': tok_ = {SOTok::Kind::Dot, ".", 0, line_, col_}; bump(); return;
        case '^': tok_ = {SOTok::Kind::Caret, "^", 0, line_, col_}; bump(); return;
        case '+': case '*': tok_ = {SOTok::Kind::Word, std::string(1, c), 0, line_, col_}; bump(); return;
        case '-':
            if (pos_ + 1 < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_ + 1]))) break;
            tok_ = {SOTok::Kind::Word, "-", 0, line_, col_};
            bump();
            return;
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
            tok_ = {SOTok::Kind::Number, text_.substr(start, pos_ - start), 0, tok_.line, tok_.col};
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                bump();
            std::string word = text_.substr(start, pos_ - start);
            if (word.size() > 1 && word[0] == 'x' &&
                std::all_of(word.begin() + 1, word.end(),
                            [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
                tok_ = {SOTok::Kind::Variable, word, std::stoi(word.substr(1)), tok_.line, tok_.col};
            } else {
                tok_ = {SOTok::Kind::Word, word, 0, tok_.line, tok_.col};
            }
            return;
        }
        throw ParseError("unexpected character '" + std::string(1, c) + "'", line_, col_);
    }

    const std::string& text_;
    size_t pos_ = 0;
    size_t line_ = 1, col_ = 1;
    SOTok tok_;
};

// Either sort of term, resolved during parsing.
struct AnyTerm {
    PointTermPtr point;
    WeightTermPtr weight;
    bool is_point() const { return point != nullptr; }
};

class SOParser {
public:
    SOParser(const std::string& text, const MetafiniteVocabulary& voc) : lex_(text), voc_(voc) {}

    SOFormulaPtr parse() {
        SOFormulaPtr f = formula();
        if (lex_.peek().kind != SOTok::Kind::End) fail("trailing input", lex_.peek());
        return f;
    }

private:
    [[noreturn]] void fail(const std::string& msg, const SOTok& t) {
        throw ParseError(msg + " (found '" + t.text + "')", t.line, t.col);
    }

    SOTok expect(SOTok::Kind k, const char* what) {
        SOTok t = lex_.take();
        if (t.kind != k) fail(std::string("expected ") + what, t);
        return t;
    }

    SOFormulaPtr formula() {
        const SOTok& t = lex_.peek();
        if (t.kind == SOTok::Kind::Word && (t.text == "exists" || t.text == "forall")) {
            bool ex = t.text == "exists";
            lex_.take();
            SOTok v = lex_.take();
            if (v.kind != SOTok::Kind::Variable) fail("expected point variable", v);
            expect(SOTok::Kind::Dot, "'.'");
            SOFormulaPtr body = formula();
            return ex ? SOFormula::exists_point(v.var_index, body)
                      : SOFormula::forall_point(v.var_index, body);
        }
        if (t.kind == SOTok::Kind::Word && (t.text == "EXISTS" || t.text == "FORALL")) {
            bool ex = t.text == "EXISTS";
            lex_.take();
            SOTok v = lex_.take();
            if (v.kind != SOTok::Kind::Word) fail("expected second-order variable", v);
            expect(SOTok::Kind::Caret, "'^'");
            SOTok a = lex_.take();
            if (a.kind != SOTok::Kind::Number) fail("expected arity", a);
            int arity = std::stoi(a.text);
            expect(SOTok::Kind::Dot, "'.'");
            so_vars_.emplace_back(v.text, arity);
            SOFormulaPtr body = formula();
            so_vars_.pop_back();
            return ex ? SOFormula::exists_so(v.text, arity, body)
                      : SOFormula::forall_so(v.text, arity, body);
        }
        if (t.kind == SOTok::Kind::Tilde) {
            lex_.take();
            return SOFormula::negate(formula());
        }
        if (t.kind == SOTok::Kind::LParen) {
            lex_.take();
            SOFormulaPtr lhs;
            if (starts_atom_term()) {
                AnyTerm a = term();
                expect(SOTok::Kind::Eq, "'='");
                AnyTerm b = term();
                lhs = equality(a, b);
            } else {
                lhs = formula();
            }
            const SOTok& nxt = lex_.peek();
            switch (nxt.kind) {
            case SOTok::Kind::RParen: lex_.take(); return lhs;
            case SOTok::Kind::Amp: {
                lex_.take();
                SOFormulaPtr rhs = formula();
                expect(SOTok::Kind::RParen, "')'");
                return SOFormula::conj(lhs, rhs);
            }
            case SOTok::Kind::Pipe: {
                lex_.take();
                SOFormulaPtr rhs = formula();
                expect(SOTok::Kind::RParen, "')'");
                return SOFormula::disj(lhs, rhs);
            }
            case SOTok::Kind::Arrow: {
                lex_.take();
                SOFormulaPtr rhs = formula();
                expect(SOTok::Kind::RParen, "')'");
                return SOFormula::implies(lhs, rhs);
            }
            case SOTok::Kind::Iff: {
                lex_.take();
                SOFormulaPtr rhs = formula();
                expect(SOTok::Kind::RParen, "')'");
                return SOFormula::iff(lhs, rhs);
            }
            default: fail("expected ')' or a connective", nxt);
            }
        }
        return atom();
    }

    bool is_so_var(const std::string& name, int* arity = nullptr) const {
        for (auto it = so_vars_.rbegin(); it != so_vars_.rend(); ++it) {
            if (it->first == name) {
                if (arity) *arity = it->second;
                return true;
            }
        }
        return false;
    }

    bool starts_atom_term() {
        const SOTok& t = lex_.peek();
        if (t.kind == SOTok::Kind::Variable || t.kind == SOTok::Kind::Number) return true;
        if (t.kind != SOTok::Kind::Word) return false;
        if (voc_.primary.relation_arity(t.text) || voc_.secondary.relation_arity(t.text)) return false;
        return voc_.primary.has_constant(t.text) || voc_.primary.function_arity(t.text).has_value() ||
               voc_.secondary.has_constant(t.text) || voc_.secondary.function_arity(t.text).has_value() ||
               voc_.weight_arity(t.text).has_value() || is_so_var(t.text);
    }

    SOFormulaPtr atom() {
        const SOTok& t = lex_.peek();
        if (t.kind == SOTok::Kind::Word) {
            if (auto pa = voc_.primary.relation_arity(t.text)) {
                SOTok name = lex_.take();
                auto args = point_args(*pa, name);
                return SOFormula::prim_rel(name.text, std::move(args));
            }
            if (auto sa = voc_.secondary.relation_arity(t.text)) {
                SOTok name = lex_.take();
                auto args = weight_args(*sa, name);
                return SOFormula::sec_rel(name.text, std::move(args));
            }
        }
        if (starts_atom_term()) {
            AnyTerm a = term();
            expect(SOTok::Kind::Eq, "'='");
            AnyTerm b = term();
            return equality(a, b);
        }
        fail("expected a formula", t);
    }

    SOFormulaPtr equality(const AnyTerm& a, const AnyTerm& b) {
        if (a.is_point() && b.is_point()) return SOFormula::point_eq(a.point, b.point);
        if (!a.is_point() && !b.is_point()) return SOFormula::weight_eq(a.weight, b.weight);
        throw ParseError("equality between a point term and a weight term");
    }

    std::vector<PointTermPtr> point_args(int arity, const SOTok& name) {
        expect(SOTok::Kind::LParen, "'('");
        std::vector<PointTermPtr> out;
        if (lex_.peek().kind == SOTok::Kind::RParen) {
            lex_.take();
        } else {
            out.push_back(point_term());
            while (lex_.peek().kind == SOTok::Kind::Comma) {
                lex_.take();
                out.push_back(point_term());
            }
            expect(SOTok::Kind::RParen, "')'");
        }
        if (static_cast<int>(out.size()) != arity)
            throw ParseError("arity mismatch for " + name.text, name.line, name.col);
        return out;
    }

    std::vector<WeightTermPtr> weight_args(int arity, const SOTok& name) {
        expect(SOTok::Kind::LParen, "'('");
        std::vector<WeightTermPtr> out;
        out.push_back(weight_term());
        while (lex_.peek().kind == SOTok::Kind::Comma) {
            lex_.take();
            out.push_back(weight_term());
        }
        expect(SOTok::Kind::RParen, "')'");
        if (static_cast<int>(out.size()) != arity)
            throw ParseError("arity mismatch for " + name.text, name.line, name.col);
        return out;
    }

    PointTermPtr point_term() {
        AnyTerm t = term();
        if (!t.is_point()) throw ParseError("expected a point term");
        return t.point;
    }

    WeightTermPtr weight_term() {
        AnyTerm t = term();
        if (t.is_point()) throw ParseError("expected a weight term");
        return t.weight;
    }

    AnyTerm term() {
        SOTok t = lex_.take();
        if (t.kind == SOTok::Kind::Variable) return {PointTerm::var(t.var_index), nullptr};
        if (t.kind == SOTok::Kind::Number) {
            if (voc_.secondary.has_constant(t.text)) {
                std::string name = t.text;
                if (auto q = Rational::parse(name)) name = q->str();
                return {nullptr, WeightTerm::sec_const(name)};
            }
            if (voc_.primary.has_constant(t.text)) return {PointTerm::constant(t.text), nullptr};
            fail("unknown constant", t);
        }
        if (t.kind != SOTok::Kind::Word) fail("expected a term", t);
        int arity;
        if (is_so_var(t.text, &arity)) {
            auto args = point_args(arity, t);
            return {nullptr, WeightTerm::so_app(t.text, std::move(args))};
        }
        if (auto wa = voc_.weight_arity(t.text)) {
            auto args = point_args(*wa, t);
            return {nullptr, WeightTerm::weight_app(t.text, std::move(args))};
        }
        if (auto pf = voc_.primary.function_arity(t.text)) {
            auto args = point_args(*pf, t);
            return {PointTerm::apply(t.text, std::move(args)), nullptr};
        }
        if (auto sf = voc_.secondary.function_arity(t.text)) {
            expect(SOTok::Kind::LParen, "'('");
            std::vector<WeightTermPtr> args;
            args.push_back(weight_term());
            while (lex_.peek().kind == SOTok::Kind::Comma) {
                lex_.take();
                args.push_back(weight_term());
            }
            expect(SOTok::Kind::RParen, "')'");
            if (static_cast<int>(args.size()) != *sf)
                throw ParseError("arity mismatch for " + t.text, t.line, t.col);
            return {nullptr, WeightTerm::sec_app(t.text, std::move(args))};
        }
        if (voc_.primary.has_constant(t.text)) return {PointTerm::constant(t.text), nullptr};
        if (voc_.secondary.has_constant(t.text)) return {nullptr, WeightTerm::sec_const(t.text)};
        fail("unknown symbol", t);
    }

    SOLexer lex_;
    const MetafiniteVocabulary& voc_;
    std::vector<std::pair<std::string, int>> so_vars_;
};

} // namespace

SOFormulaPtr parse_so(const std::string& text, const MetafiniteVocabulary& voc) {
    return SOParser(text, voc).parse();
}

} // namespace rml
