#include "doctest.h"
#include "generators.hpp"

#include "qlab/errors.hpp"
#include "qlab/sets.hpp"

#include <functional>

using namespace qlab;
using qlab::testing::probe_points;
using qlab::testing::random_set;

namespace {

IntervalSet S(const char* text) { return parse_set_expr(text); }

// Membership predicate built straight from raw bounds, without any
// canonical form. Used as the independent oracle for the parser.
using Pred = std::function<bool(const Rational&)>;

Pred raw_open(Rational a, Rational b) {
    return [=](const Rational& q) { return a < q && q < b; };
}

}  // namespace

TEST_CASE("parse: direct denotation") {
    auto s = S("(0,1) | [2,3)");
    REQUIRE(s.components().size() == 2);
    CHECK(s.components()[0] == Interval::open(0, 1));
    CHECK(s.components()[1] == Interval(Rational(2), true, Rational(3), false));

    CHECK(S("(0,1) & (1/2,2)") == IntervalSet::of(Interval::open(Rational(1, 2), 1)));
    CHECK(S("R") == IntervalSet::real_line());
    CHECK(S("empty").is_empty());
    CHECK(S("{3, 1, 2}") == IntervalSet::points({1, 2, 3}));
    CHECK(S("[0.25, 0.5]") == IntervalSet::of(Interval::closed(Rational(1, 4), Rational(1, 2))));
    CHECK(S("(-inf, -1/2)") == IntervalSet::of(Interval(Extended::neg_infinity(), false, Rational(-1, 2), false)));
    CHECK(S("(1,1)").is_empty());
    CHECK(S("[1,1]") == IntervalSet::points({1}));
}

TEST_CASE("parse: grouping vs interval disambiguation") {
    CHECK(S("((0,1))") == S("(0,1)"));
    CHECK(S("((0,2) \\ [1,2)) | {5}") == S("(0,1) | {5}"));
    CHECK(S("~((0,1) | (2,3))") == S("(-inf,0] | [1,2] | [3,inf)"));
    // left associative, equal precedence
    CHECK(S("(0,3) & (1,4) | (10,11)") == S("(1,3) | (10,11)"));
    CHECK(S("(0,3) & ((1,4) | (10,11))") == S("(1,3)"));
}

TEST_CASE("parse: symmetric difference matches a brute-force membership oracle") {
    auto s = S("(0,2) ^ (1,3)");
    CHECK(s == IntervalSet::from_intervals({Interval(Rational(0), false, Rational(1), true),
                                            Interval(Rational(2), true, Rational(3), false)}));

    Pred a = raw_open(0, 2), b = raw_open(1, 3);
    Pred naive = [&](const Rational& q) { return a(q) != b(q); };
    // 10^4 grid points on [-1, 4) with step 1/2000 plus exact endpoints.
    int mismatches = 0;
    for (int i = 0; i < 10000; ++i) {
        Rational q(i - 2000, 2000);
        q.canonicalize();
        if (s.contains(q) != naive(q)) ++mismatches;
    }
    for (int e : {0, 1, 2, 3})
        if (s.contains(Rational(e)) != naive(Rational(e))) ++mismatches;
    CHECK(mismatches == 0);
}

TEST_CASE("parse: errors carry positions") {
    auto position_of = [](const char* text) -> long {
        try {
            parse_set_expr(text);
        } catch (const ParseError& e) {
            return static_cast<long>(e.position());
        }
        return -1;
    };
    CHECK(position_of("(0,1) | ") == 8);
    CHECK(position_of("[2,1]") == 0);       // lo > hi
    CHECK(position_of("(0,1) % (2,3)") == 6);
    CHECK(position_of("[-inf,0)") == 0);    // infinite bound must be open
    CHECK(position_of("(0,1") == 4);
    CHECK(position_of("{1,}") == 3);
    CHECK(position_of("(1/0,2)") >= 0);
    CHECK_THROWS_AS(parse_set_expr("[3,2)"), ParseError);
}

TEST_CASE("combine and complement examples") {
    CHECK((S("(0,1)") | S("(1,2)")) == S("(0,1) | (1,2)"));
    CHECK((S("(0,1)") | S("(1,2)")).components().size() == 2);
    CHECK((S("(0,1)") | S("[1,2]")) == S("(0,2]"));
    auto x = S("[0,1) | {4} | (5,inf)");
    CHECK((x ^ x).is_empty());
    CHECK((S("(0,3)") - S("[1,2]")) == S("(0,1) | (2,3)"));

    CHECK(complement(IntervalSet::empty()) == IntervalSet::real_line());
    CHECK(complement(S("(0,1)")) == S("(-inf,0] | [1,inf)"));
    CHECK(complement(S("{0}")) == S("(-inf,0) | (0,inf)"));
}

TEST_CASE("measure and membership") {
    CHECK(measure(S("(0,1) | [2,3)")) == Extended(2));
    CHECK(measure(S("{1,2,3}")) == Extended(0));
    CHECK(measure(complement(S("(0,1)"))).is_pos_inf());
    CHECK(measure(S("(0, 1/1099511627776)")) == Extended(pow2(-40)));

    CHECK(membership(Rational(1, 2), S("(0,1)")));
    CHECK_FALSE(membership(Rational(1), S("(0,1)")));
    CHECK(membership(Rational(1), S("[1,2]")));
}

TEST_CASE("to_string round-trips through the parser") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 2000; ++i) {
        auto s = random_set(rng);
        CHECK(parse_set_expr(to_string(s)) == s);
    }
}

TEST_CASE("property: operations agree with pointwise membership; canonical forms are fixed points") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 2000; ++trial) {
        auto a = random_set(rng), b = random_set(rng);
        auto probes = probe_points({a, b});
        auto u = a | b, n = a & b, d = a - b, x = a ^ b, c = ~a;
        for (const auto& q : probes) {
            const bool ia = a.contains(q), ib = b.contains(q);
            REQUIRE(u.contains(q) == (ia || ib));
            REQUIRE(n.contains(q) == (ia && ib));
            REQUIRE(d.contains(q) == (ia && !ib));
            REQUIRE(x.contains(q) == (ia != ib));
            REQUIRE(c.contains(q) == !ia);
        }
        for (const auto* s : {&u, &n, &d, &x, &c}) REQUIRE(canonicalize(*s) == *s);
        REQUIRE(~~a == a);
    }
}

TEST_CASE("property: measure is finitely additive on disjoint pairs") {
    std::mt19937_64 rng(7);
    int checked = 0;
    for (int trial = 0; trial < 3000; ++trial) {
        auto a = random_set(rng), b = random_set(rng) - a;
        REQUIRE((a & b).is_empty());
        auto ma = measure(a), mb = measure(b), mu = measure(a | b);
        if (ma.finite() && mb.finite()) {
            REQUIRE(mu == Extended(Rational(ma.value() + mb.value())));
            ++checked;
        } else {
            REQUIRE(mu.is_pos_inf());
        }
    }
    CHECK(checked > 100);
}

TEST_CASE("property: Boolean-algebra laws hold exactly") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 2000; ++trial) {
        auto a = random_set(rng), b = random_set(rng), c = random_set(rng);
        REQUIRE((a | b) == (b | a));
        REQUIRE((a & b) == (b & a));
        REQUIRE(((a | b) | c) == (a | (b | c)));
        REQUIRE(((a & b) & c) == (a & (b & c)));
        REQUIRE((a & (b | c)) == ((a & b) | (a & c)));
        REQUIRE((a | (b & c)) == ((a | b) & (a | c)));
        REQUIRE(~(a | b) == (~a & ~b));
        REQUIRE(~(a & b) == (~a | ~b));
        REQUIRE((a | (a & b)) == a);
        REQUIRE((a & (a | b)) == a);
    }
}
