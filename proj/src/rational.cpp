#include "qlab/rational.hpp"

#include <cctype>
#include <cmath>
#include <limits>

namespace qlab {

namespace {

bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    return true;
}

}  // namespace

std::optional<Rational> parse_rational(std::string_view text) {
    bool negative = false;
    if (!text.empty() && (text.front() == '-' || text.front() == '+')) {
        negative = text.front() == '-';
        text.remove_prefix(1);
    }
    if (text.empty()) return std::nullopt;

    Rational result;
    if (auto slash = text.find('/'); slash != std::string_view::npos) {
        auto num = text.substr(0, slash);
        auto den = text.substr(slash + 1);
        if (!all_digits(num) || !all_digits(den)) return std::nullopt;
        mpz_class d(std::string(den), 10);
        if (d == 0) return std::nullopt;
        result = Rational(mpz_class(std::string(num), 10), d);
    } else if (auto dot = text.find('.'); dot != std::string_view::npos) {
        auto whole = text.substr(0, dot);
        auto frac = text.substr(dot + 1);
        if (!all_digits(whole) || !all_digits(frac)) return std::nullopt;
        mpz_class scale;
        mpz_ui_pow_ui(scale.get_mpz_t(), 10, frac.size());
        result = Rational(mpz_class(std::string(whole) + std::string(frac), 10), scale);
    } else {
        if (!all_digits(text)) return std::nullopt;
        result = Rational(mpz_class(std::string(text), 10));
    }
    result.canonicalize();
    if (negative) result = -result;
    return result;
}

std::string to_string(const Rational& r) { return r.get_str(10); }

double to_double(const Rational& r) { return r.get_d(); }

Rational from_double(double x) {
    Rational r(x);
    r.canonicalize();
    return r;
}

Rational pow2(long e) {
    mpz_class p(1);
    unsigned long magnitude = e < 0 ? static_cast<unsigned long>(-e) : static_cast<unsigned long>(e);
    mpz_mul_2exp(p.get_mpz_t(), p.get_mpz_t(), magnitude);
    return e < 0 ? Rational(mpz_class(1), p) : Rational(p);
}

double Extended::to_double() const {
    switch (kind_) {
        case Kind::neg_inf: return -std::numeric_limits<double>::infinity();
        case Kind::pos_inf: return std::numeric_limits<double>::infinity();
        case Kind::finite: break;
    }
    return value_.get_d();
}

bool operator==(const Extended& a, const Extended& b) {
    if (a.kind_ != b.kind_) return false;
    return !a.finite() || a.value_ == b.value_;
}

std::strong_ordering operator<=>(const Extended& a, const Extended& b) {
    if (a.kind_ != b.kind_) return static_cast<int>(a.kind_) <=> static_cast<int>(b.kind_);
    if (!a.finite()) return std::strong_ordering::equal;
    int c = cmp(a.value_, b.value_);
    return c < 0 ? std::strong_ordering::less : c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal;
}

std::string to_string(const Extended& x) {
    if (x.is_neg_inf()) return "-inf";
    if (x.is_pos_inf()) return "inf";
    return to_string(x.value());
}

}  // namespace qlab
