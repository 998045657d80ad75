#pragma once

#include "qlab/rational.hpp"

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qlab {

/// A nonempty interval of the extended real line with rational endpoints.
/// Infinite endpoints are always open; lo == hi only for a closed singleton.
class Interval {
public:
    /// Throws std::invalid_argument if the arguments describe an empty or
    /// malformed interval. Use make() when emptiness is acceptable.
    Interval(Extended lo, bool lo_closed, Extended hi, bool hi_closed);

    /// nullopt when the bounds denote the empty set (e.g. (1,1) or [2,1)).
    static std::optional<Interval> make(Extended lo, bool lo_closed, Extended hi, bool hi_closed);

    static Interval open(Rational lo, Rational hi) { return {std::move(lo), false, std::move(hi), false}; }
    static Interval closed(Rational lo, Rational hi) { return {std::move(lo), true, std::move(hi), true}; }
    static Interval point(const Rational& x) { return {x, true, x, true}; }
    static Interval real_line() { return {Extended::neg_infinity(), false, Extended::pos_infinity(), false}; }

    const Extended& lo() const noexcept { return lo_; }
    const Extended& hi() const noexcept { return hi_; }
    bool lo_closed() const noexcept { return lo_closed_; }
    bool hi_closed() const noexcept { return hi_closed_; }

    bool bounded() const noexcept { return lo_.finite() && hi_.finite(); }
    bool is_point() const noexcept { return lo_ == hi_; }
    bool contains(const Rational& q) const;

    /// hi - lo, or +inf when unbounded.
    Extended length() const;

    friend bool operator==(const Interval&, const Interval&) = default;

private:
    Extended lo_;
    Extended hi_;
    bool lo_closed_;
    bool hi_closed_;
};

std::string to_string(const Interval& i);

enum class SetOp { union_, intersect, diff, symmdiff };

/// Finite union of intervals in canonical form: components sorted, pairwise
/// disjoint and never mergeable. Two sets are equal as point sets iff their
/// component lists are identical.
class IntervalSet {
public:
    IntervalSet() = default;

    /// Canonicalizes an arbitrary list of intervals (overlaps allowed).
    static IntervalSet from_intervals(const std::vector<Interval>& parts);
    static IntervalSet of(const Interval& i) { return from_intervals({i}); }
    static IntervalSet points(const std::vector<Rational>& xs);
    static IntervalSet real_line() { return of(Interval::real_line()); }
    static IntervalSet empty() { return {}; }

    /// Builds the canonical set on which `inside` holds, given that `inside`
    /// is constant on each open gap between consecutive `breaks` (which must
    /// be sorted and distinct).
    static IntervalSet from_predicate(const std::vector<Rational>& breaks,
                                      const std::function<bool(const Rational&)>& inside);

    const std::vector<Interval>& components() const noexcept { return components_; }
    bool is_empty() const noexcept { return components_.empty(); }

    /// Sorted distinct finite endpoints of all components.
    std::vector<Rational> endpoints() const;

    bool contains(const Rational& q) const;

    friend bool operator==(const IntervalSet&, const IntervalSet&) = default;

private:
    std::vector<Interval> components_;
};

IntervalSet combine(SetOp op, const IntervalSet& a, const IntervalSet& b);
IntervalSet complement(const IntervalSet& a);

inline IntervalSet operator|(const IntervalSet& a, const IntervalSet& b) { return combine(SetOp::union_, a, b); }
inline IntervalSet operator&(const IntervalSet& a, const IntervalSet& b) { return combine(SetOp::intersect, a, b); }
inline IntervalSet operator-(const IntervalSet& a, const IntervalSet& b) { return combine(SetOp::diff, a, b); }
inline IntervalSet operator^(const IntervalSet& a, const IntervalSet& b) { return combine(SetOp::symmdiff, a, b); }
inline IntervalSet operator~(const IntervalSet& a) { return complement(a); }

/// Lebesgue measure; +inf when some component is unbounded.
Extended measure(const IntervalSet& a);

inline bool membership(const Rational& q, const IntervalSet& a) { return a.contains(q); }

/// Re-runs canonicalization on the component list; identity on any output
/// of this module.
IntervalSet canonicalize(const IntervalSet& a);

/// Renders in the expression grammar, so parse_set_expr(to_string(s)) == s.
std::string to_string(const IntervalSet& s);

/// Parses the set-expression grammar:
///
///   expr     := atom { ("|" | "&" | "\" | "^") atom }     left-assoc, equal precedence
///   atom     := "~" atom | interval | pointset | "R" | "empty" | "(" expr ")"
///   interval := ("(" | "[") bound "," bound (")" | "]")
///   pointset := "{" number { "," number } "}"
///   bound    := number | "inf" | "-inf"
///   number   := integer | decimal | integer "/" positive-integer
///
/// Throws ParseError carrying the offending character offset.
IntervalSet parse_set_expr(std::string_view text);

}  // namespace qlab
