#include "doctest.h"

#include "generators.hpp"
#include "qlab/errors.hpp"
#include "qlab/states.hpp"

#include <cmath>

using namespace qlab;
using qlab::testing::random_rational;
using qlab::testing::random_set;

namespace {

IntervalSet S(const char* text) { return parse_set_expr(text); }
QuotientClass P(const char* text) { return project(parse_set_expr(text)); }
DensityModel D(const char* text) { return parse_density_model(text); }

Rational R(long p, long q = 1) {
    Rational r(p, q);
    r.canonicalize();
    return r;
}

constexpr std::uint64_t kDeep = std::uint64_t{1} << 40;

FilterBase right_base(const Rational& lambda) {
    auto x = project(IntervalSet::of(Interval(lambda, false, Extended::pos_infinity(), false)));
    return adjoin(neighborhood_base(lambda, kDeep), x, 2);
}

FilterBase left_base(const Rational& lambda) {
    auto x = project(IntervalSet::of(Interval(Extended::neg_infinity(), false, lambda, false)));
    return adjoin(neighborhood_base(lambda, kDeep), x, 2);
}

FilterBase escaping_base(long count) {
    std::vector<BaseElement> els;
    for (long n = 1; n <= count; ++n)
        els.emplace_back(project(IntervalSet::of(Interval(Rational(n), false, Extended::pos_infinity(), false))));
    return FilterBase::from_classes(els);
}

/// Composite trapezoid with Richardson extrapolation (Romberg), used only as
/// an independent check of the library's quadratures.
double romberg(const std::function<double(double)>& f, double a, double b, int levels = 20) {
    // one-sided end values: the integrands here may jump at the ends
    std::vector<double> prev(1, (b - a) / 2 * (f(std::nextafter(a, b)) + f(std::nextafter(b, a))));
    for (int n = 1; n < levels; ++n) {
        const long m = 1L << (n - 1);
        const double h = (b - a) / static_cast<double>(2 * m);
        double sum = 0;
        for (long i = 0; i < m; ++i) sum += f(a + (2 * i + 1) * h);
        std::vector<double> cur{prev[0] / 2 + h * sum};
        double p4 = 4;
        for (int k = 1; k <= n; ++k, p4 *= 4) cur.push_back(cur[k - 1] + (cur[k - 1] - prev[k - 1]) / (p4 - 1));
        if (n > 6 && std::abs(cur.back() - prev.back()) < 1e-14) return cur.back();
        prev = std::move(cur);
    }
    return prev.back();
}

std::vector<Effect> effect_suite() {
    std::vector<Effect> out;
    const char* exprs[] = {
        "const(0)",
        "const(1)",
        "const(3/7)",
        "smear((-1,1); gaussian(1/5))",
        "smear((0,1); box(1/5))",
        "smear((-inf,0); gaussian(1/2))",
        "smear((0,inf); triangle(1/3))",
        "smear((-2,-1) | (1/2,3); box(1))",
        "~smear((0,1/3); gaussian(1/10))",
        "scale(1/2, smear((-1,2); triangle(1)))",
        "scale(3/4, smear((0,1) | [2,3]; gaussian(1/4)))",
        "smear((-1/2,1/2); box(1/5)) + smear((1,2); box(1/5))",
        "scale(3/4, smear((-inf,-1); gaussian(1/3))) + const(1/4)",
        "~smear((-1,0) | (1/4,1/2); triangle(1/8))",
        "smear({0} | (1/3,2/3); gaussian(1/20))",
        "scale(731/1000, smear((-3,3); gaussian(1)))",
        "smear((-1/10,1/10); triangle(1/20))",
        "smear((5,6); box(1/2))",
        "~(smear((-1,0); box(1/3)) + smear((0,1); box(1/3)))",
        "scale(1/2, smear((-inf,1/3); box(1/4))) + scale(1/2, smear((1,2); gaussian(1/2)))",
    };
    for (auto e : exprs) out.push_back(parse_effect_expr(e));
    return out;
}

}  // namespace

TEST_CASE("density models") {
    auto u = D("uniform(0,1)");
    CHECK(u.cdf(0.25) == 0.25);
    CHECK(u.quantile(0.25) == 0.25);
    auto g = D("gaussian(2,3)");
    CHECK(g.quantile(0.5) == 2.0);
    // quantile against a bisection of erfc
    for (double p : {1e-12, 1e-6, 0.01, 0.3, 0.5, 0.77, 0.999, 1 - 1e-9}) {
        double lo = -50, hi = 50;
        for (int i = 0; i < 200; ++i) {
            double mid = (lo + hi) / 2;
            // compare in the smaller tail to keep the oracle accurate
            const bool below = p < 0.5 ? 0.5 * std::erfc(-mid / std::sqrt(2.0)) < p : 0.5 * std::erfc(mid / std::sqrt(2.0)) > 1 - p;
            (below ? lo : hi) = mid;
        }
        CHECK(D("gaussian(0,1)").quantile(p) == doctest::Approx(lo).epsilon(1e-12));
    }
    auto m = D("mixture(1/4: uniform(0,1), 3/4: gaussian(5, 1/2))");
    CHECK(m.components().size() == 2);
    auto mpdf = [&](double q) { return m.pdf(q); };
    CHECK(romberg(mpdf, -1, 0, 22) + romberg(mpdf, 0, 1, 22) + romberg(mpdf, 1, 12, 22) ==
          doctest::Approx(1.0).epsilon(1e-9));
    for (double p : {0.1, 0.25, 0.5, 0.9}) CHECK(m.cdf(m.quantile(p)) == doctest::Approx(p).epsilon(1e-11));
    CHECK(*D("mixture(1/2: uniform(0,1), 1/2: uniform(2,3))").cdf_exact(R(5, 2)) == R(3, 4));
    CHECK_THROWS_AS(D("mixture(1/2: uniform(0,1), 1/3: uniform(2,3))"), ParseError);
    CHECK_THROWS_AS(D("uniform(1,0)"), ParseError);
    CHECK_THROWS_AS(D("gaussian(0,1"), ParseError);
    CHECK(D(m.to_string().c_str()).to_string() == m.to_string());
}

TEST_CASE("eval_point") {
    auto f = Effect::smear(S("(-1,1)"), ConfidenceDensity::box(R(1)));
    CHECK(eval_point(R(0), f) == 1.0);
    CHECK(eval_point(R(1), f) == 0.5);
    auto g = Effect::smear(S("(0,2)"), ConfidenceDensity::gaussian(R(1, 3)));
    for (long i = -10; i <= 10; ++i) CHECK(eval_point(R(i, 3), neg(g)) == doctest::Approx(1 - eval_point(R(i, 3), g)).epsilon(1e-15));
}

TEST_CASE("eval_density examples") {
    CHECK(eval_density(D("uniform(0,1)"), Effect::constant(R(2, 7)), 1e-12) == doctest::Approx(2.0 / 7).epsilon(1e-12));
    for (auto sigma : {R(1, 10), R(1), R(3)})
        CHECK(std::abs(eval_density(D("gaussian(0,1)"), Effect::smear(S("(-inf,0)"), ConfidenceDensity::gaussian(sigma)), 1e-10) - 0.5) <= 1e-10);

    // ramp of half-width w/2 at each end of (0,1): 1 - w/4 in total
    auto ramp = [](double w) {
        return [w](double q) { return std::clamp((q + w / 2) / w, 0.0, 1.0) - std::clamp((q - 1 + w / 2) / w, 0.0, 1.0); };
    };
    for (auto [w, expect] : {std::pair{R(1, 5), 0.95}, std::pair{R(2, 5), 0.9}}) {
        const double wd = to_double(w);
        const double oracle = romberg(ramp(wd), 0, wd / 2) + romberg(ramp(wd), wd / 2, 1 - wd / 2) + romberg(ramp(wd), 1 - wd / 2, 1);
        CHECK(oracle == doctest::Approx(expect).epsilon(1e-13));
        CHECK(std::abs(eval_density(D("uniform(0,1)"), Effect::smear(S("(0,1)"), ConfidenceDensity::box(w)), 1e-12) - oracle) <= 1e-12);
    }
    CHECK_THROWS(eval_density(D("uniform(0,1)"), Effect::constant(R(1)), 0));
}

TEST_CASE("sharp_probability") {
    CHECK(sharp_probability(D("uniform(0,1)"), S("(0,1/2)")) == 0.5);
    CHECK(sharp_probability(D("gaussian(0,1)"), S("(-inf,0)")) == 0.5);
    for (auto d : {D("uniform(0,1)"), D("gaussian(0,1)"), D("mixture(1/2: uniform(-1,1), 1/2: gaussian(3,1/4))")}) {
        CHECK(sharp_probability(d, S("{0, 1/2, 3}")) == 0.0);
        CHECK(sharp_probability(d, IntervalSet::real_line()) == 1.0);
    }
    CHECK(*sharp_probability_exact(D("mixture(1/3: uniform(0,1), 2/3: uniform(2,5))"), S("(1/2,3] | {4}")) == R(1, 6) + R(2, 9));
    CHECK_FALSE(sharp_probability_exact(D("gaussian(0,1)"), S("(0,1)")));
}

TEST_CASE("eval_sharp") {
    auto s1 = adjoin(neighborhood_base(0, 20), P("(0,inf)"), 21);
    CHECK(eval_sharp(s1, P("(0,inf)"), 21) == SharpValue::one);
    CHECK(eval_sharp(s1, P("(5,6)"), 21) == SharpValue::zero);
    CHECK(eval_sharp(s1, P("(-inf,0)"), 21) == SharpValue::zero);
    CHECK(eval_sharp(neighborhood_base(0, 20), P("(0,inf)"), 20) == SharpValue::undetermined);
    CHECK(eval_sharp(neighborhood_base(0, 20), P("(-1/10,1/10)"), 20) == SharpValue::one);
    // each chain element is itself a base element, so depth 1 already sees the deepest
    CHECK(eval_sharp(neighborhood_base(0, 20), P("(-1/10,1/10)"), 1) == SharpValue::one);

    auto s2 = left_base(R(0));
    CHECK(eval_sharp(s2, P("(0,inf)"), 3) == SharpValue::zero);
    CHECK(eval_sharp(right_base(R(0)), P("(0,inf)"), 3) == SharpValue::one);

    auto bm = adjoin(neighborhood_base(0, 64), disjoint_family(0, 3), 64);
    // components past the truncation keep the meet off both sides
    CHECK(eval_sharp(bm, project(disjoint_family(0, 3).truncation(64)), 64) == SharpValue::undetermined);
    CHECK(eval_sharp(bm, P("(0,inf)"), 64) == SharpValue::one);
    // B_3 and B_5 are disjoint
    CHECK(eval_sharp(bm, project(disjoint_family(0, 5).truncation(64)), 64) == SharpValue::zero);
}

TEST_CASE("filter_effect_value") {
    auto f = Effect::smear(S("(-1,1)"), ConfidenceDensity::gaussian(R(1, 5)));
    const double exact = std::erf(5 / std::sqrt(2.0));
    auto v1 = filter_effect_value(right_base(R(0)), f, kDeep, 1e-10);
    auto v2 = filter_effect_value(left_base(R(0)), f, kDeep, 1e-10);
    REQUIRE(v1);
    REQUIRE(v2);
    CHECK(std::abs(*v1 - exact) <= 1e-9);
    CHECK(std::abs(*v2 - exact) <= 1e-9);
    CHECK(std::abs(*v1 - eval_point(R(0), f)) <= 1e-9);

    auto esc = escaping_base(40);
    auto z = filter_effect_value(esc, Effect::smear(S("(0,1)"), ConfidenceDensity::box(R(1))), 40, 1e-6);
    REQUIRE(z);
    CHECK(std::abs(*z) <= 1e-6);
    CHECK(filter_effect_value(esc, Effect::constant(R(1, 3)), 40, 1e-6) == doctest::Approx(1.0 / 3));
    // a non-vanishing effect has no limit along a neighbourhood-free escape
    CHECK_FALSE(filter_effect_value(esc, Effect::smear(S("(-inf,0) | (1,2) | (3,4) | (5,6)"), ConfidenceDensity::box(R(1, 2))), 4, 1e-6));
    // too shallow a depth to squeeze
    CHECK_FALSE(filter_effect_value(right_base(R(0)), f, 4, 1e-10));
}

TEST_CASE("set_value") {
    CHECK(set_value(D("uniform(0,1)")) == S("[0,1]"));
    CHECK(set_value(D("gaussian(1,2)")) == IntervalSet::real_line());
    CHECK(set_value(D("mixture(1/2: uniform(0,1), 1/2: uniform(2,3))")) == S("[0,1] | [2,3]"));
    CHECK(set_value(D("mixture(1: uniform(0,1), 0: gaussian(0,1))")) == S("[0,1]"));
    for (auto d : {D("uniform(0,1)"), D("mixture(1/2: uniform(0,1), 1/2: uniform(1,3))")})
        CHECK(*sharp_probability_exact(d, set_value(d)) == 1);
}

TEST_CASE("mixture_expectation agrees with eval_density") {
    const double tol = 1e-9;
    const auto effects = effect_suite();
    for (const char* spec : {"uniform(0,1)", "gaussian(0,1)", "mixture(1/2: uniform(-1,1), 1/2: gaussian(2,1/3))",
                             "gaussian(1/3,1/10)", "mixture(1/5: uniform(0,1/10), 4/5: uniform(-3,3))"}) {
        const auto d = D(spec);
        for (const auto& f : effects) {
            const double a = eval_density(d, f, tol), b = mixture_expectation(d, f, tol);
            CHECK_MESSAGE(std::abs(a - b) <= 2 * tol, spec, " ", f.to_string());
        }
    }
    CHECK(mixture_expectation(D("uniform(0,1)"), Effect::constant(R(5, 8)), 1e-12) == doctest::Approx(0.625).epsilon(1e-12));
    auto f = effects[3];
    CHECK(mixture_expectation(D("mixture(1: gaussian(0,1), 0: uniform(5,6))"), f, 1e-10) ==
          doctest::Approx(mixture_expectation(D("gaussian(0,1)"), f, 1e-10)).epsilon(1e-14));
}

TEST_CASE("state laws") {
    const auto effects = effect_suite();
    std::vector<StateHandle> states{PointState{R(0)}, PointState{R(1, 3)}, PointState{R(141421356, 100000000)},
                                    DensityState{D("gaussian(0,1)")},
                                    DensityState{D("mixture(1/2: uniform(0,1), 1/2: gaussian(-1,1/2))")},
                                    SharpState{right_base(R(1, 3)), kDeep}, SharpState{left_base(R(0)), kDeep},
                                    EscapingState{+1}, EscapingState{-1}};
    for (const auto& st : states) {
        for (std::size_t i = 0; i < effects.size(); ++i) {
            const auto& f = effects[i];
            auto v = evaluate(st, f);
            auto nv = evaluate(st, neg(f));
            // every state in this list is determined on the suite
            REQUIRE(v);
            if (v && nv) CHECK(std::abs(*v + *nv - 1) <= 1e-10);
            for (const auto& a : {R(1, 2), R(3, 8), R(731, 1000)}) {
                auto sv = evaluate(st, scale(a, f));
                if (v && sv) CHECK(std::abs(*sv - to_double(a) * *v) <= 1e-10);
            }
            const auto& g = effects[(i * 7 + 3) % effects.size()];
            auto fh = scale(R(1, 2), f), gh = scale(R(1, 2), g);
            auto sum = evaluate(st, oplus(fh, gh));
            auto a = evaluate(st, fh), b = evaluate(st, gh);
            if (sum && a && b) CHECK(std::abs(*sum - *a - *b) <= 1e-10);
            auto le = leq(fh, oplus(fh, gh));
            REQUIRE(le.holds);
            auto c = evaluate(st, *le.witness);
            if (sum && a && c) CHECK(std::abs(*sum - *a - *c) <= 1e-10);
        }
        CHECK(evaluate(st, Effect::constant(R(1))) == doctest::Approx(1.0));
    }
}

TEST_CASE("point and density states are total") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        auto f = Effect::smear(random_set(rng), ConfidenceDensity::gaussian(random_rational(rng, 1, 4, 4)));
        CHECK(evaluate(PointState{random_rational(rng, -8, 8)}, f));
        CHECK(evaluate(DensityState{D("gaussian(0,2)")}, f));
    }
}

TEST_CASE("normality failure at the witness level") {
    auto w = normality_witness(R(1, 2), 12);
    auto base = FilterBase::from_classes(std::vector<BaseElement>(w.classes.begin(), w.classes.end()), R(1, 2));
    REQUIRE(has_fmp(base, 12).holds);
    for (const auto& c : w.classes) CHECK(eval_sharp(base, c, 12) == SharpValue::one);
    CHECK(eval_sharp(base, w.limit_class, 12) == SharpValue::zero);
    // the complements of the shrinking classes all get 0, yet their join is
    // everything but a null set
    QuotientClass join = QuotientClass::zero();
    for (const auto& c : w.classes) {
        CHECK(eval_sharp(base, q_not(c), 12) == SharpValue::zero);
        join = q_combine(ClassOp::join, join, q_not(c));
    }
    CHECK(eval_sharp(base, join, 12) == SharpValue::zero);
}
