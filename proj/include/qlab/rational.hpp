#pragma once

#include <gmpxx.h>

#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace qlab {

/// Arbitrary precision rational, always kept in lowest terms.
using Rational = mpq_class;

/// Reads "7", "-3", "0.25", "-1.5", "3/8". Decimals are read exactly.
/// Returns nullopt if the text is not a number.
std::optional<Rational> parse_rational(std::string_view text);

/// "p/q" for non-integers, "p" for integers.
std::string to_string(const Rational& r);

double to_double(const Rational& r);

/// Exact rational value of a finite double.
Rational from_double(double x);

/// 2^e for any integer e.
Rational pow2(long e);

/// A rational or one of the two infinities.
class Extended {
public:
    enum class Kind { neg_inf, finite, pos_inf };

    Extended() : kind_(Kind::finite) {}
    Extended(Rational v) : kind_(Kind::finite), value_(std::move(v)) {}  // NOLINT: implicit by design of the algebra
    Extended(long v) : kind_(Kind::finite), value_(v) {}                  // NOLINT

    static Extended neg_infinity() { return Extended(Kind::neg_inf); }
    static Extended pos_infinity() { return Extended(Kind::pos_inf); }

    Kind kind() const noexcept { return kind_; }
    bool finite() const noexcept { return kind_ == Kind::finite; }
    bool is_pos_inf() const noexcept { return kind_ == Kind::pos_inf; }
    bool is_neg_inf() const noexcept { return kind_ == Kind::neg_inf; }

    /// Only valid for finite values.
    const Rational& value() const { return value_; }

    double to_double() const;

    friend bool operator==(const Extended& a, const Extended& b);
    friend std::strong_ordering operator<=>(const Extended& a, const Extended& b);

private:
    explicit Extended(Kind k) : kind_(k) {}

    Kind kind_;
    Rational value_;
};

std::string to_string(const Extended& x);

}  // namespace qlab
