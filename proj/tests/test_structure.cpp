#include "rml/structure.hpp"

#include <doctest.h>

using namespace rml;

TEST_CASE("booleans have two distinct named points") {
    Structure b = Structure::booleans();
    CHECK(b.universe_size() == 2);
    CHECK_FALSE(b.zero() == b.one());
    auto c = b.classify();
    CHECK(c.bipointed);
    CHECK(c.finite_type);
    CHECK(c.has_all_constants);
}

TEST_CASE("zmod arithmetic wraps") {
    Structure z2 = Structure::zmod(2);
    Element one = z2.one();
    std::vector<Element> args{one, one};
    CHECK(z2.apply("+", args) == z2.zero());
    CHECK_THROWS_AS(Structure::zmod(1), Error);
    CHECK_THROWS_AS(Structure::make_builtin(Backend::ZMod, 0), Error);
}

TEST_CASE("rational order holds on 1/3 <= 1/2") {
    Structure q = Structure::rationals();
    std::vector<Element> args{Element(Rational(1, 3)), Element(Rational(1, 2))};
    CHECK(q.holds("<=", args));
    std::vector<Element> rev{args[1], args[0]};
    CHECK_FALSE(q.holds("<=", rev));
    auto c = q.classify();
    CHECK(c.bipointed);
    CHECK(c.finite_type);
    CHECK_FALSE(c.has_all_constants);
}

TEST_CASE("all-constants rationals resolve literals lazily") {
    Structure q = Structure::rationals_all_constants();
    CHECK(q.constant("1/2") == Element(Rational(1, 2)));
    CHECK(q.classify().has_all_constants);
    CHECK(q.classify().finite_type);
}

TEST_CASE("K2 graph document loads") {
    Structure k2 = Structure::load(
        "universe 2\n"
        "rel E/2: (0,1)\n"
        "rel E/2: (1,0)\n");
    std::vector<Element> e01{Element(FiniteIndex{0}), Element(FiniteIndex{1})};
    std::vector<Element> e00{Element(FiniteIndex{0}), Element(FiniteIndex{0})};
    CHECK(k2.holds("E", e01));
    CHECK_FALSE(k2.holds("E", e00));
    CHECK_FALSE(k2.classify().bipointed);
}

TEST_CASE("non-total function table is rejected") {
    CHECK_THROWS_WITH_AS(Structure::load(
                             "universe 2\n"
                             "fun f/1: (0) -> 1\n"),
                         doctest::Contains("non-total"), Error);
}

TEST_CASE("single point structure loads and is not bipointed") {
    Structure s = Structure::load(
        "universe 1\n"
        "const 0 = 0\n");
    CHECK(s.universe_size() == 1);
    CHECK_FALSE(s.classify().bipointed);
    CHECK(s.classify().has_all_constants);
}

TEST_CASE("element equality is an equivalence on small universes") {
    for (long long m = 2; m <= 5; ++m) {
        Structure s = Structure::zmod(m);
        const auto& u = s.universe();
        for (const auto& a : u) CHECK(a == a);
        for (const auto& a : u)
            for (const auto& b : u) CHECK((a == b) == (b == a));
        for (const auto& a : u)
            for (const auto& b : u)
                for (const auto& c : u)
                    if (a == b && b == c) CHECK(a == c);
    }
}

TEST_CASE("builtin functions are closed over small samples") {
    for (const char* name : {"bool", "zmod:2", "zmod:3"}) {
        Structure s = Structure::by_name(name);
        for (const auto& [fname, arity] : s.vocabulary().functions()) {
            std::vector<size_t> idx(arity, 0);
            size_t n = s.universe().size();
            for (;;) {
                std::vector<Element> args;
                for (size_t i : idx) args.push_back(s.universe()[i]);
                Element r1 = s.apply(fname, args);
                Element r2 = s.apply(fname, args);
                CHECK(r1 == r2);
                CHECK(s.contains(r1));
                int i = static_cast<int>(arity) - 1;
                while (i >= 0 && ++idx[i] == n) idx[i--] = 0;
                if (i < 0) break;
            }
        }
    }
}

TEST_CASE("duplicate symbols and out-of-range entries are rejected") {
    CHECK_THROWS_AS(Structure::load("universe 2\nconst a = 0\nconst a = 1\n"), Error);
    CHECK_THROWS_AS(Structure::load("universe 2\nconst a = 5\n"), Error);
    CHECK_THROWS_AS(Structure::load("nonsense 2\n"), ParseError);
}

TEST_CASE("structures are addressable by name") {
    CHECK(Structure::by_name("bool").backend() == Backend::Booleans);
    CHECK(Structure::by_name("zmod:3").backend() == Backend::ZMod);
    CHECK(Structure::by_name("rat").backend() == Backend::Rationals);
    CHECK(Structure::by_name("rat-all").backend() == Backend::RationalsAllConstants);
    CHECK_THROWS_AS(Structure::by_name("florps"), Error);
}
