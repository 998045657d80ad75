#pragma once

#include "qlab/sets.hpp"

#include <string>
#include <utility>

namespace qlab {

/// An element of the Borel algebra modulo Lebesgue-null sets, restricted to
/// finite unions of intervals. The representative is kept in open-canonical
/// form (open components separated by gaps of positive length), so class
/// equality is representative equality.
class QuotientClass {
public:
    QuotientClass() = default;

    static QuotientClass zero() { return {}; }
    static QuotientClass unit();

    const IntervalSet& rep() const noexcept { return rep_; }
    bool is_zero() const noexcept { return rep_.is_empty(); }

    friend bool operator==(const QuotientClass&, const QuotientClass&) = default;

private:
    friend QuotientClass project(const IntervalSet& s);
    explicit QuotientClass(IntervalSet rep) : rep_(std::move(rep)) {}

    IntervalSet rep_;
};

enum class ClassOp { join, meet, diff, symmdiff };

QuotientClass project(const IntervalSet& s);
QuotientClass q_combine(ClassOp op, const QuotientClass& x, const QuotientClass& y);
QuotientClass q_not(const QuotientClass& x);

inline bool is_zero(const QuotientClass& x) { return x.is_zero(); }

/// x <= y in the quotient order, i.e. x meet (not y) is zero.
bool q_leq(const QuotientClass& x, const QuotientClass& y);

/// Two disjoint nonzero classes whose join is x. Multi-component classes
/// split off their leftmost component; a single bounded component is
/// bisected; a single unbounded one has a unit interval carved off its
/// finite end ((0,1) for the whole line). Throws ZeroClass on the zero class.
std::pair<QuotientClass, QuotientClass> split(const QuotientClass& x);

/// The two-valued state of the unquotiented algebra concentrated at lambda.
int point_membership_state(const Rational& lambda, const IntervalSet& s);

std::string to_string(const QuotientClass& x);

}  // namespace qlab
