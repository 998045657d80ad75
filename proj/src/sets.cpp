#include "qlab/sets.hpp"

#include "qlab/errors.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace qlab {

// ---------------------------------------------------------------------------
// Interval

Interval::Interval(Extended lo, bool lo_closed, Extended hi, bool hi_closed)
    : lo_(std::move(lo)), hi_(std::move(hi)), lo_closed_(lo_closed), hi_closed_(hi_closed) {
    if ((!lo_.finite() && lo_closed_) || (!hi_.finite() && hi_closed_))
        throw std::invalid_argument("infinite interval bounds must be open");
    if (lo_ > hi_ || (lo_ == hi_ && !(lo_closed_ && hi_closed_)))
        throw std::invalid_argument("empty or malformed interval");
}

std::optional<Interval> Interval::make(Extended lo, bool lo_closed, Extended hi, bool hi_closed) {
    if (!lo.finite()) lo_closed = false;
    if (!hi.finite()) hi_closed = false;
    if (lo > hi || (lo == hi && !(lo_closed && hi_closed))) return std::nullopt;
    return Interval(std::move(lo), lo_closed, std::move(hi), hi_closed);
}

bool Interval::contains(const Rational& q) const {
    Extended x(q);
    if (lo_closed_ ? x < lo_ : x <= lo_) return false;
    if (hi_closed_ ? x > hi_ : x >= hi_) return false;
    return true;
}

Extended Interval::length() const {
    if (!bounded()) return Extended::pos_infinity();
    return Rational(hi_.value() - lo_.value());
}

std::string to_string(const Interval& i) {
    if (i.is_point()) return "{" + to_string(i.lo()) + "}";
    std::string s;
    s += i.lo_closed() ? '[' : '(';
    s += to_string(i.lo());
    s += ',';
    s += to_string(i.hi());
    s += i.hi_closed() ? ']' : ')';
    return s;
}

// ---------------------------------------------------------------------------
// IntervalSet

namespace {

Rational gap_representative(const std::vector<Rational>& breaks, std::size_t gap) {
    if (breaks.empty()) return Rational(0);
    if (gap == 0) return breaks.front() - 1;
    if (gap == breaks.size()) return breaks.back() + 1;
    return (breaks[gap - 1] + breaks[gap]) / 2;
}

std::vector<Rational> merged_breaks(const IntervalSet& a, const IntervalSet& b) {
    auto ea = a.endpoints();
    auto eb = b.endpoints();
    std::vector<Rational> out;
    out.reserve(ea.size() + eb.size());
    std::merge(ea.begin(), ea.end(), eb.begin(), eb.end(), std::back_inserter(out));
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace

IntervalSet IntervalSet::from_predicate(const std::vector<Rational>& breaks,
                                        const std::function<bool(const Rational&)>& inside) {
    // Pieces in order: gap 0, point 0, gap 1, ..., point k-1, gap k.
    IntervalSet out;
    const std::size_t k = breaks.size();

    bool running = false;
    Extended start;
    bool start_closed = false;
    Extended last_hi;
    bool last_hi_closed = false;

    auto close_run = [&] {
        out.components_.emplace_back(start, start_closed, last_hi, last_hi_closed);
        running = false;
    };

    for (std::size_t piece = 0; piece <= 2 * k; ++piece) {
        const bool is_gap = piece % 2 == 0;
        const std::size_t idx = piece / 2;
        bool in;
        Extended lo, hi;
        bool lo_closed, hi_closed;
        if (is_gap) {
            in = inside(gap_representative(breaks, idx));
            lo = idx == 0 ? Extended::neg_infinity() : Extended(breaks[idx - 1]);
            hi = idx == k ? Extended::pos_infinity() : Extended(breaks[idx]);
            lo_closed = hi_closed = false;
        } else {
            in = inside(breaks[idx]);
            lo = hi = breaks[idx];
            lo_closed = hi_closed = true;
        }
        if (in) {
            if (!running) {
                running = true;
                start = lo;
                start_closed = lo_closed;
            }
            last_hi = hi;
            last_hi_closed = hi_closed;
        } else if (running) {
            close_run();
        }
    }
    if (running) close_run();
    return out;
}

IntervalSet IntervalSet::from_intervals(const std::vector<Interval>& parts) {
    std::vector<Interval> sorted = parts;
    // By lower end; a closed lower end sorts before an open one at the same point.
    std::sort(sorted.begin(), sorted.end(), [](const Interval& a, const Interval& b) {
        if (a.lo() != b.lo()) return a.lo() < b.lo();
        return a.lo_closed() && !b.lo_closed();
    });
    IntervalSet out;
    for (const auto& p : sorted) {
        if (out.components_.empty()) {
            out.components_.push_back(p);
            continue;
        }
        const Interval& cur = out.components_.back();
        const bool connected = p.lo() < cur.hi() || (p.lo() == cur.hi() && (cur.hi_closed() || p.lo_closed()));
        if (!connected) {
            out.components_.push_back(p);
            continue;
        }
        if (p.hi() > cur.hi() || (p.hi() == cur.hi() && p.hi_closed() && !cur.hi_closed()))
            out.components_.back() = Interval(cur.lo(), cur.lo_closed(), p.hi(), p.hi_closed());
    }
    return out;
}

IntervalSet IntervalSet::points(const std::vector<Rational>& xs) {
    std::vector<Interval> parts;
    parts.reserve(xs.size());
    for (const auto& x : xs) parts.push_back(Interval::point(x));
    return from_intervals(parts);
}

std::vector<Rational> IntervalSet::endpoints() const {
    std::vector<Rational> out;
    for (const auto& c : components_) {
        if (c.lo().finite() && (out.empty() || out.back() != c.lo().value())) out.push_back(c.lo().value());
        if (c.hi().finite() && (out.empty() || out.back() != c.hi().value())) out.push_back(c.hi().value());
    }
    return out;
}

bool IntervalSet::contains(const Rational& q) const {
    Extended x(q);
    // First component whose upper end is not left of q.
    auto it = std::lower_bound(components_.begin(), components_.end(), x,
                               [](const Interval& c, const Extended& v) { return c.hi() < v; });
    return it != components_.end() && it->contains(q);
}

IntervalSet combine(SetOp op, const IntervalSet& a, const IntervalSet& b) {
    auto breaks = merged_breaks(a, b);
    return IntervalSet::from_predicate(breaks, [&](const Rational& q) {
        const bool in_a = a.contains(q);
        const bool in_b = b.contains(q);
        switch (op) {
            case SetOp::union_: return in_a || in_b;
            case SetOp::intersect: return in_a && in_b;
            case SetOp::diff: return in_a && !in_b;
            case SetOp::symmdiff: return in_a != in_b;
        }
        return false;
    });
}

IntervalSet complement(const IntervalSet& a) {
    return IntervalSet::from_predicate(a.endpoints(), [&](const Rational& q) { return !a.contains(q); });
}

Extended measure(const IntervalSet& a) {
    Rational total(0);
    for (const auto& c : a.components()) {
        if (!c.bounded()) return Extended::pos_infinity();
        total += c.hi().value() - c.lo().value();
    }
    return total;
}

IntervalSet canonicalize(const IntervalSet& a) { return IntervalSet::from_intervals(a.components()); }

std::string to_string(const IntervalSet& s) {
    if (s.is_empty()) return "empty";
    std::string out;
    for (const auto& c : s.components()) {
        if (!out.empty()) out += " | ";
        out += to_string(c);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

class SetParser {
public:
    explicit SetParser(std::string_view text) : text_(text) {}

    IntervalSet parse() {
        auto result = expr();
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected trailing input");
        return result;
    }

private:
    struct Backtrack {
        std::size_t position;
        std::string message;
    };

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    bool keyword(std::string_view word) {
        skip_ws();
        if (text_.substr(pos_, word.size()) != word) return false;
        std::size_t end = pos_ + word.size();
        if (end < text_.size() && std::isalnum(static_cast<unsigned char>(text_[end]))) return false;
        pos_ = end;
        return true;
    }

    IntervalSet expr() {
        auto lhs = atom();
        for (;;) {
            char c = peek();
            SetOp op;
            if (c == '|') op = SetOp::union_;
            else if (c == '&') op = SetOp::intersect;
            else if (c == '\\') op = SetOp::diff;
            else if (c == '^') op = SetOp::symmdiff;
            else break;
            ++pos_;
            auto rhs = atom();
            lhs = combine(op, lhs, rhs);
        }
        return lhs;
    }

    IntervalSet atom() {
        char c = peek();
        if (c == '~') {
            ++pos_;
            return complement(atom());
        }
        if (c == '[') return interval();
        if (c == '{') return pointset();
        if (c == '(') {
            const std::size_t start = pos_;
            std::optional<Backtrack> interval_error;
            try {
                return interval();
            } catch (const Backtrack& b) {
                interval_error = b;
            }
            pos_ = start + 1;
            try {
                auto inner = expr();
                if (peek() != ')') fail("expected ')'");
                ++pos_;
                return inner;
            } catch (const ParseError& e) {
                // Report whichever reading got further into the input.
                if (interval_error->position > e.position())
                    throw ParseError(interval_error->message, interval_error->position);
                throw;
            }
        }
        if (keyword("R")) return IntervalSet::real_line();
        if (keyword("empty")) return IntervalSet::empty();
        if (c == '\0') fail("unexpected end of input");
        fail(std::string("unexpected character '") + c + "'");
    }

    // Structural failures inside "(" are signalled with Backtrack so the caller
    // can retry the text as a grouping; semantic failures are final.
    IntervalSet interval() {
        const std::size_t start = pos_;
        const bool lo_closed = text_[pos_] == '[';
        const bool may_backtrack = !lo_closed;
        ++pos_;
        auto structural = [&](const std::string& msg) -> Extended {
            if (may_backtrack) throw Backtrack{pos_, msg};
            fail(msg);
        };
        auto lo_opt = bound();
        Extended lo = lo_opt ? *lo_opt : structural("expected interval bound");
        if (peek() != ',') structural("expected ','");
        ++pos_;
        auto hi_opt = bound();
        Extended hi = hi_opt ? *hi_opt : structural("expected interval bound");
        char closer = peek();
        if (closer != ')' && closer != ']') structural("expected ')' or ']'");
        ++pos_;
        const bool hi_closed = closer == ']';

        if ((!lo.finite() && lo_closed) || (!hi.finite() && hi_closed))
            throw ParseError("infinite bounds must be open", start);
        if (lo > hi) throw ParseError("malformed interval (lo > hi)", start);
        auto iv = Interval::make(lo, lo_closed, hi, hi_closed);
        return iv ? IntervalSet::of(*iv) : IntervalSet::empty();
    }

    IntervalSet pointset() {
        ++pos_;
        std::vector<Rational> xs;
        for (;;) {
            auto x = number();
            if (!x) fail("expected number");
            xs.push_back(*x);
            char c = peek();
            if (c == ',') {
                ++pos_;
                continue;
            }
            if (c == '}') {
                ++pos_;
                break;
            }
            fail("expected ',' or '}'");
        }
        return IntervalSet::points(xs);
    }

    std::optional<Extended> bound() {
        skip_ws();
        if (keyword("inf")) return Extended::pos_infinity();
        if (text_.substr(pos_, 4) == "-inf") {
            std::size_t save = pos_;
            ++pos_;
            if (keyword("inf")) return Extended::neg_infinity();
            pos_ = save;
        }
        auto x = number();
        if (!x) return std::nullopt;
        return Extended(*x);
    }

    std::optional<Rational> number() {
        skip_ws();
        std::size_t end = pos_;
        if (end < text_.size() && text_[end] == '-') ++end;
        auto digits = [&] {
            std::size_t from = end;
            while (end < text_.size() && std::isdigit(static_cast<unsigned char>(text_[end]))) ++end;
            return end > from;
        };
        if (!digits()) return std::nullopt;
        if (end < text_.size() && (text_[end] == '.' || text_[end] == '/')) {
            std::size_t save = end;
            ++end;
            if (!digits()) end = save;
        }
        auto value = parse_rational(text_.substr(pos_, end - pos_));
        if (!value) fail("malformed number");  // e.g. zero denominator
        pos_ = end;
        return value;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

}  // namespace

IntervalSet parse_set_expr(std::string_view text) { return SetParser(text).parse(); }

}  // namespace qlab
