#include "qlab/quotient.hpp"

#include "qlab/errors.hpp"

namespace qlab {

QuotientClass QuotientClass::unit() { return project(IntervalSet::real_line()); }

QuotientClass project(const IntervalSet& s) {
    // Drop singletons, open every component, then fuse neighbours whose
    // closures touch (they differ from the union only at the shared point).
    std::vector<Interval> parts;
    for (const auto& c : s.components()) {
        if (c.is_point()) continue;
        if (!parts.empty() && parts.back().hi() == c.lo()) {
            parts.back() = Interval(parts.back().lo(), false, c.hi(), false);
            continue;
        }
        parts.emplace_back(c.lo(), false, c.hi(), false);
    }
    // The parts are already sorted, disjoint and separated by positive gaps,
    // so from_intervals only confirms the canonical layout.
    return QuotientClass(IntervalSet::from_intervals(parts));
}

QuotientClass q_combine(ClassOp op, const QuotientClass& x, const QuotientClass& y) {
    SetOp set_op = SetOp::union_;
    switch (op) {
        case ClassOp::join: set_op = SetOp::union_; break;
        case ClassOp::meet: set_op = SetOp::intersect; break;
        case ClassOp::diff: set_op = SetOp::diff; break;
        case ClassOp::symmdiff: set_op = SetOp::symmdiff; break;
    }
    return project(combine(set_op, x.rep(), y.rep()));
}

QuotientClass q_not(const QuotientClass& x) { return project(complement(x.rep())); }

bool q_leq(const QuotientClass& x, const QuotientClass& y) {
    return q_combine(ClassOp::diff, x, y).is_zero();
}

std::pair<QuotientClass, QuotientClass> split(const QuotientClass& x) {
    if (x.is_zero()) throw ZeroClass();
    const auto& comps = x.rep().components();
    const Interval& first = comps.front();

    QuotientClass part;
    if (comps.size() > 1) {
        part = project(IntervalSet::of(first));
    } else if (first.bounded()) {
        Rational mid = (first.lo().value() + first.hi().value()) / 2;
        part = project(IntervalSet::of(Interval::open(first.lo().value(), mid)));
    } else if (first.lo().finite()) {
        const Rational& c = first.lo().value();
        part = project(IntervalSet::of(Interval::open(c, c + 1)));
    } else if (first.hi().finite()) {
        const Rational& c = first.hi().value();
        part = project(IntervalSet::of(Interval::open(c - 1, c)));
    } else {
        part = project(IntervalSet::of(Interval::open(0, 1)));
    }
    return {part, q_combine(ClassOp::diff, x, part)};
}

int point_membership_state(const Rational& lambda, const IntervalSet& s) { return s.contains(lambda) ? 1 : 0; }

std::string to_string(const QuotientClass& x) { return "pi(" + to_string(x.rep()) + ")"; }

}  // namespace qlab
