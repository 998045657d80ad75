#include "qlab/effects.hpp"

#include "qlab/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace qlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Rational gap_rep(const std::vector<Rational>& breaks, std::size_t gap) {
    if (breaks.empty()) return Rational(0);
    if (gap == 0) return breaks.front() - 1;
    if (gap == breaks.size()) return breaks.back() + 1;
    return (breaks[gap - 1] + breaks[gap]) / 2;
}

}  // namespace

// ---------------------------------------------------------------------------
// ConfidenceDensity

ConfidenceDensity ConfidenceDensity::box(Rational width) {
    if (width <= 0) throw std::invalid_argument("box width must be positive");
    double d = to_double(width);
    return {Shape::box, std::move(width), d};
}

ConfidenceDensity ConfidenceDensity::triangle(Rational half_width) {
    if (half_width <= 0) throw std::invalid_argument("triangle half-width must be positive");
    double d = to_double(half_width);
    return {Shape::triangle, std::move(half_width), d};
}

ConfidenceDensity ConfidenceDensity::gaussian(Rational sigma) {
    if (sigma <= 0) throw std::invalid_argument("gaussian sigma must be positive");
    double d = to_double(sigma);
    return {Shape::gaussian, std::move(sigma), d};
}

double ConfidenceDensity::pdf(double t) const {
    switch (shape_) {
        case Shape::box: return std::abs(t) < param_d_ / 2 ? 1.0 / param_d_ : 0.0;
        case Shape::triangle: {
            double a = std::abs(t);
            return a < param_d_ ? (param_d_ - a) / (param_d_ * param_d_) : 0.0;
        }
        case Shape::gaussian:
            return std::exp(-0.5 * (t / param_d_) * (t / param_d_)) / (param_d_ * std::sqrt(2 * std::numbers::pi));
    }
    return 0.0;
}

double ConfidenceDensity::cdf(double t) const {
    switch (shape_) {
        case Shape::box: return std::clamp(t / param_d_ + 0.5, 0.0, 1.0);
        case Shape::triangle: {
            const double h = param_d_;
            if (t <= -h) return 0.0;
            if (t >= h) return 1.0;
            if (t <= 0) return (t + h) * (t + h) / (2 * h * h);
            return 1.0 - (h - t) * (h - t) / (2 * h * h);
        }
        case Shape::gaussian: return 0.5 * std::erfc(-t / (param_d_ * std::numbers::sqrt2));
    }
    return 0.0;
}

std::optional<Rational> ConfidenceDensity::cdf_exact(const Rational& t) const {
    switch (shape_) {
        case Shape::box: {
            Rational v = t / param_ + Rational(1, 2);
            if (v < 0) return Rational(0);
            if (v > 1) return Rational(1);
            return v;
        }
        case Shape::triangle: {
            const Rational& h = param_;
            if (t <= -h) return Rational(0);
            if (t >= h) return Rational(1);
            Rational two_h2 = 2 * h * h;
            if (t <= 0) return Rational((t + h) * (t + h) / two_h2);
            return Rational(1 - (h - t) * (h - t) / two_h2);
        }
        case Shape::gaussian: return std::nullopt;
    }
    return std::nullopt;
}

double ConfidenceDensity::sup_density() const {
    switch (shape_) {
        case Shape::box: return 1.0 / param_d_;
        case Shape::triangle: return 1.0 / param_d_;
        case Shape::gaussian: return 1.0 / (param_d_ * std::sqrt(2 * std::numbers::pi));
    }
    return kInf;
}

double ConfidenceDensity::support_radius() const {
    switch (shape_) {
        case Shape::box: return param_d_ / 2;
        case Shape::triangle: return param_d_;
        case Shape::gaussian: return kInf;
    }
    return kInf;
}

double ConfidenceDensity::tail_mass(double r) const {
    if (r <= 0) return 1.0;
    if (shape_ == Shape::gaussian) return std::erfc(r / (param_d_ * std::numbers::sqrt2));
    return r >= support_radius() ? 0.0 : 1.0 - (cdf(r) - cdf(-r));
}

std::string to_string(const ConfidenceDensity& e) {
    switch (e.shape()) {
        case ConfidenceDensity::Shape::box: return "box(" + to_string(e.param()) + ")";
        case ConfidenceDensity::Shape::triangle: return "triangle(" + to_string(e.param()) + ")";
        case ConfidenceDensity::Shape::gaussian: return "gaussian(" + to_string(e.param()) + ")";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// StepFunction

StepFunction StepFunction::indicator(const IntervalSet& s) {
    StepFunction f;
    f.breaks_ = s.endpoints();
    f.values_.clear();
    for (std::size_t i = 0; i <= f.breaks_.size(); ++i) f.values_.emplace_back(s.contains(gap_rep(f.breaks_, i)) ? 1 : 0);
    f.drop_redundant_breaks();
    return f;
}

const Rational& StepFunction::value_near(const Rational& x) const {
    auto idx = std::upper_bound(breaks_.begin(), breaks_.end(), x) - breaks_.begin();
    return values_[static_cast<std::size_t>(idx)];
}

void StepFunction::drop_redundant_breaks() {
    std::vector<Rational> b;
    std::vector<Rational> v{values_.front()};
    for (std::size_t i = 0; i < breaks_.size(); ++i) {
        if (values_[i + 1] == v.back()) continue;
        b.push_back(breaks_[i]);
        v.push_back(values_[i + 1]);
    }
    breaks_ = std::move(b);
    values_ = std::move(v);
}

StepFunction StepFunction::operator+(const StepFunction& other) const {
    StepFunction out;
    std::merge(breaks_.begin(), breaks_.end(), other.breaks_.begin(), other.breaks_.end(), std::back_inserter(out.breaks_));
    out.breaks_.erase(std::unique(out.breaks_.begin(), out.breaks_.end()), out.breaks_.end());
    out.values_.clear();
    for (std::size_t i = 0; i <= out.breaks_.size(); ++i) {
        Rational r = gap_rep(out.breaks_, i);
        out.values_.push_back(value_near(r) + other.value_near(r));
    }
    out.drop_redundant_breaks();
    return out;
}

StepFunction StepFunction::scaled(const Rational& a) const {
    StepFunction out = *this;
    for (auto& v : out.values_) v *= a;
    out.drop_redundant_breaks();
    return out;
}

Rational StepFunction::max() const { return *std::max_element(values_.begin(), values_.end()); }
Rational StepFunction::min() const { return *std::min_element(values_.begin(), values_.end()); }

Rational StepFunction::total_variation() const {
    Rational tv(0);
    for (std::size_t i = 1; i < values_.size(); ++i) tv += abs(values_[i] - values_[i - 1]);
    return tv;
}

std::pair<Rational, Rational> StepFunction::min_max_over(double a, double b) const {
    auto slack = [](double x) { return 1e-12 * (1.0 + std::abs(x)); };
    // gap i spans (breaks[i-1], breaks[i]); it meets (a, b) iff lower < b and upper > a
    std::size_t first = 0, last = breaks_.size();
    if (std::isfinite(a)) {
        const double lim = a - slack(a);
        while (first < breaks_.size() && to_double(breaks_[first]) <= lim) ++first;
    }
    if (std::isfinite(b)) {
        const double lim = b + slack(b);
        last = 0;
        while (last < breaks_.size() && to_double(breaks_[last]) < lim) ++last;
    }
    if (last < first) last = first;
    Rational lo = values_[first], hi = values_[first];
    for (std::size_t i = first + 1; i <= last; ++i) {
        if (values_[i] < lo) lo = values_[i];
        if (values_[i] > hi) hi = values_[i];
    }
    return {lo, hi};
}

// ---------------------------------------------------------------------------
// AffineForm

namespace {

AffineForm normalized(AffineForm f) {
    std::vector<std::pair<ConfidenceDensity, StepFunction>> kept;
    for (auto& [e, step] : f.groups) {
        if (step.breaks().empty()) {
            f.constant += step.values().front();  // constant * e = constant
            continue;
        }
        kept.emplace_back(e, std::move(step));
    }
    f.groups = std::move(kept);
    return f;
}

}  // namespace

AffineForm AffineForm::operator+(const AffineForm& other) const {
    AffineForm out = *this;
    out.constant += other.constant;
    for (const auto& [e, step] : other.groups) {
        auto it = std::find_if(out.groups.begin(), out.groups.end(), [&](const auto& g) { return g.first == e; });
        if (it == out.groups.end()) out.groups.emplace_back(e, step);
        else it->second = it->second + step;
    }
    return normalized(std::move(out));
}

AffineForm AffineForm::scaled(const Rational& a) const {
    AffineForm out;
    out.constant = constant * a;
    for (const auto& [e, step] : groups) out.groups.emplace_back(e, step.scaled(a));
    return normalized(std::move(out));
}

AffineForm AffineForm::operator-(const AffineForm& other) const { return *this + other.scaled(Rational(-1)); }

Rational AffineForm::lower_bound() const {
    Rational v = constant;
    for (const auto& g : groups) v += g.second.min();
    return v;
}

Rational AffineForm::upper_bound() const {
    Rational v = constant;
    for (const auto& g : groups) v += g.second.max();
    return v;
}

Rational AffineForm::left_asymptote() const {
    Rational v = constant;
    for (const auto& g : groups) v += g.second.values().front();
    return v;
}

Rational AffineForm::right_asymptote() const {
    Rational v = constant;
    for (const auto& g : groups) v += g.second.values().back();
    return v;
}

double AffineForm::lipschitz() const {
    // d/dq (step * e) = sum of jumps times shifted densities
    double l = 0;
    for (const auto& [e, step] : groups) l += e.sup_density() * to_double(step.total_variation());
    return l;
}

namespace {

/// Enclosure of q -> form(q) over q in [a, b], from the step extremes seen
/// within reach of the density plus the mass that can fall outside reach.
Bounds affine_enclosure(const AffineForm& form, double a, double b) {
    double lo = to_double(form.constant), hi = lo;
    for (const auto& [e, step] : form.groups) {
        std::vector<double> radii;
        if (e.shape() == ConfidenceDensity::Shape::gaussian) {
            const double s = to_double(e.param());
            for (double k : {0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 16.0, 20.0, 30.0, 40.0}) radii.push_back(k * s);
        } else {
            radii.push_back(e.support_radius());
        }
        const double all_lo = to_double(step.min()), all_hi = to_double(step.max());
        double best_lo = -kInf, best_hi = kInf;
        for (double r : radii) {
            const double tau = e.tail_mass(r);
            auto [in_lo_q, in_hi_q] = step.min_max_over(a - r, b + r);
            const double in_lo = to_double(in_lo_q), in_hi = to_double(in_hi_q);
            best_hi = std::min(best_hi, in_hi + tau * (all_hi - in_hi));
            best_lo = std::max(best_lo, in_lo - tau * (in_lo - all_lo));
        }
        lo += best_lo;
        hi += best_hi;
    }
    return {lo, hi};
}

}  // namespace

// ---------------------------------------------------------------------------
// Effect

struct Effect::Node {
    enum class Kind { constant, smear, sum, scale, complement, difference };

    Kind kind;
    Rational value;                                   // constant c, or scale factor a
    IntervalSet set;                                  // smear
    std::optional<ConfidenceDensity> density;         // smear
    std::vector<std::pair<double, double>> endpoints; // smear components as doubles
    std::vector<Effect> children;

    AffineForm affine;
    double lipschitz = 0;
    std::pair<Rational, Rational> range;
    double range_lo = 0, range_hi = 1;

    double eval(double q) const {
        double v = 0;
        switch (kind) {
            case Kind::constant: v = range_lo; break;
            case Kind::smear:
                for (const auto& [a, b] : endpoints) v += density->cdf(q - a) - density->cdf(q - b);
                break;
            case Kind::sum: v = children[0](q) + children[1](q); break;
            case Kind::scale: v = to_double(value) * children[0](q); break;
            case Kind::complement: v = 1.0 - children[0](q); break;
            case Kind::difference: v = children[0](q) - children[1](q); break;
        }
        return std::clamp(v, range_lo, range_hi);
    }
};

namespace {

std::shared_ptr<Effect::Node> finish(std::shared_ptr<Effect::Node> n, std::optional<Rational> certified_hi = std::nullopt,
                                     std::optional<Rational> certified_lo = std::nullopt) {
    n->lipschitz = n->affine.lipschitz();
    Rational lo = n->affine.lower_bound(), hi = n->affine.upper_bound();
    if (lo < 0) lo = 0;
    if (hi > 1) hi = 1;
    if (certified_lo && *certified_lo > lo) lo = *certified_lo;
    if (certified_hi && *certified_hi < hi) hi = *certified_hi;
    n->range = {lo, hi};
    n->range_lo = to_double(lo);
    n->range_hi = to_double(hi);
    return n;
}

}  // namespace

Effect Effect::constant(const Rational& c) {
    if (c < 0 || c > 1) throw std::invalid_argument("constant effect must lie in [0,1]");
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::constant;
    n->value = c;
    n->affine.constant = c;
    return Effect(finish(std::move(n)));
}

Effect Effect::smear(const IntervalSet& s, const ConfidenceDensity& e) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::smear;
    n->set = s;
    n->density = e;
    for (const auto& c : s.components()) {
        if (c.is_point()) continue;
        n->endpoints.emplace_back(c.lo().to_double(), c.hi().to_double());
    }
    n->affine = normalized(AffineForm{Rational(0), {{e, StepFunction::indicator(s)}}});
    return Effect(finish(std::move(n)));
}

double Effect::operator()(double q) const { return node_->eval(q); }
double Effect::lipschitz() const { return node_->lipschitz; }
const std::pair<Rational, Rational>& Effect::range() const { return node_->range; }
const AffineForm& Effect::affine() const { return node_->affine; }

std::vector<double> Effect::kinks() const {
    std::vector<double> out;
    for (const auto& [e, step] : node_->affine.groups) {
        const double r = e.support_radius();
        for (const auto& b : step.breaks()) {
            const double p = to_double(b);
            out.push_back(p);
            if (std::isfinite(r)) {
                out.push_back(p - r);
                out.push_back(p + r);
            }
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

Bounds Effect::enclose(double a, double b) const {
    Bounds bd = affine_enclosure(node_->affine, a, b);
    if (std::isfinite(a) && std::isfinite(b)) {
        constexpr int kPoints = 33;
        const double h = (b - a) / (kPoints - 1);
        double mn = kInf, mx = -kInf;
        for (int i = 0; i < kPoints; ++i) {
            double v = (*this)(i + 1 == kPoints ? b : a + i * h);
            mn = std::min(mn, v);
            mx = std::max(mx, v);
        }
        const double margin = node_->lipschitz * h / 2 + 1e-15;
        bd.lo = std::max(bd.lo, mn - margin);
        bd.hi = std::min(bd.hi, mx + margin);
    }
    bd.lo = std::max(bd.lo, node_->range_lo);
    bd.hi = std::min(bd.hi, node_->range_hi);
    if (bd.lo > bd.hi) bd.lo = bd.hi;
    return bd;
}

std::string Effect::to_string() const {
    const Node& n = *node_;
    switch (n.kind) {
        case Node::Kind::constant: return "const(" + qlab::to_string(n.value) + ")";
        case Node::Kind::smear: return "smear(" + qlab::to_string(n.set) + "; " + qlab::to_string(*n.density) + ")";
        case Node::Kind::sum: return "(" + n.children[0].to_string() + " + " + n.children[1].to_string() + ")";
        case Node::Kind::scale: return "scale(" + qlab::to_string(n.value) + ", " + n.children[0].to_string() + ")";
        case Node::Kind::complement: return "~" + n.children[0].to_string();
        case Node::Kind::difference: return "(" + n.children[0].to_string() + " - " + n.children[1].to_string() + ")";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Certification of sup h <= limit

namespace {

enum class GridVerdict { certified, violated, inconclusive };

struct GridResult {
    GridVerdict verdict;
    double q = 0;
    double value = 0;
};

/// Certifies sup_q h(q) <= limit for h with the given affine form and
/// Lipschitz constant: exact bound first, then tails plus a refining grid
/// with Lipschitz margin. Never certifies a false bound (up to rounding of
/// the evaluation, which the 1e-14 slack absorbs).
template <class H>
GridResult certify_at_most(const H& h, const AffineForm& form, double lipschitz, const Rational& limit) {
    if (form.upper_bound() <= limit) return {GridVerdict::certified};
    if (form.groups.empty()) return {GridVerdict::violated, 0.0, h(0.0)};
    const double lim = to_double(limit);

    // Past the window the density no longer reaches any break.
    double left = kInf, right = -kInf;
    for (const auto& [e, step] : form.groups) {
        double r = e.shape() == ConfidenceDensity::Shape::gaussian ? 40 * to_double(e.param()) : 1.25 * e.support_radius();
        left = std::min(left, to_double(step.breaks().front()) - r);
        right = std::max(right, to_double(step.breaks().back()) + r);
    }

    // Tails beyond the grid window.
    for (bool right_tail : {false, true}) {
        const Rational asym = right_tail ? form.right_asymptote() : form.left_asymptote();
        if (asym > limit) {
            double q = right_tail ? right + 1 : left - 1;
            return {GridVerdict::violated, q, h(q)};
        }
        Bounds tb = right_tail ? affine_enclosure(form, right, kInf) : affine_enclosure(form, -kInf, left);
        if (tb.hi > lim + 1e-14) return {GridVerdict::inconclusive};
    }

    constexpr int kMaxLog2 = 20;
    for (int j = 6; j <= kMaxLog2; ++j) {
        const std::size_t n = (std::size_t{1} << j) + 1;
        const double step = (right - left) / static_cast<double>(n - 1);
        double best = -kInf, best_q = left;
        for (std::size_t i = 0; i < n; ++i) {
            const double q = i + 1 == n ? right : left + static_cast<double>(i) * step;
            const double v = h(q);
            if (v > best) {
                best = v;
                best_q = q;
            }
        }
        if (best > lim + 1e-12) return {GridVerdict::violated, best_q, best};
        if (best + lipschitz * step <= lim + 1e-14) return {GridVerdict::certified};
    }
    return {GridVerdict::inconclusive};
}

std::shared_ptr<Effect::Node> unary(Effect::Node::Kind kind, const Effect& f) {
    auto n = std::make_shared<Effect::Node>();
    n->kind = kind;
    n->children = {f};
    return n;
}

}  // namespace

Effect oplus(const Effect& f, const Effect& g) {
    AffineForm sum = f.affine() + g.affine();
    const double lip = f.lipschitz() + g.lipschitz();
    auto h = [&](double q) { return f(q) + g(q); };
    auto res = certify_at_most(h, sum, lip, Rational(1));
    if (res.verdict == GridVerdict::violated) throw NotOrthogonal(res.q, res.value);
    if (res.verdict == GridVerdict::inconclusive)
        throw CannotCertify("cannot certify " + f.to_string() + " + " + g.to_string() + " <= 1");

    auto n = std::make_shared<Effect::Node>();
    n->kind = Effect::Node::Kind::sum;
    n->children = {f, g};
    n->affine = sum;
    return Effect(finish(std::move(n), Rational(1)));
}

Effect neg(const Effect& f) {
    auto n = unary(Effect::Node::Kind::complement, f);
    n->affine = AffineForm{Rational(1), {}} - f.affine();
    return Effect(finish(std::move(n)));
}

Effect scale(const Rational& a, const Effect& f) {
    if (a <= 0 || a > 1) throw std::invalid_argument("scale factor must lie in (0,1]");
    auto n = unary(Effect::Node::Kind::scale, f);
    n->value = a;
    n->affine = f.affine().scaled(a);
    return Effect(finish(std::move(n)));
}

LeqResult leq(const Effect& f, const Effect& g) {
    AffineForm diff = f.affine() - g.affine();
    const double lip = f.lipschitz() + g.lipschitz();
    auto h = [&](double q) { return f(q) - g(q); };
    auto res = certify_at_most(h, diff, lip, Rational(0));
    if (res.verdict == GridVerdict::violated) return {false, std::nullopt, res.q};
    if (res.verdict == GridVerdict::inconclusive)
        throw CannotCertify("cannot decide " + f.to_string() + " <= " + g.to_string());

    AffineForm witness = g.affine() - f.affine();
    if (witness.groups.empty()) return {true, Effect::constant(witness.constant), std::nullopt};
    auto n = std::make_shared<Effect::Node>();
    n->kind = Effect::Node::Kind::difference;
    n->children = {g, f};
    n->affine = std::move(witness);
    return {true, Effect(finish(std::move(n), std::nullopt, Rational(0))), std::nullopt};
}

bool vanishes_at_infinity(const Effect& f, double tol, double horizon) {
    if (!(horizon > 0)) throw std::invalid_argument("horizon must be positive");
    const Bounds right = f.enclose(horizon, kInf);
    const Bounds left = f.enclose(-kInf, -horizon);
    if (std::max(right.hi, left.hi) <= tol) return true;

    const auto& form = f.affine();
    if (to_double(form.right_asymptote()) > tol || to_double(form.left_asymptote()) > tol) return false;

    double reach = horizon;
    for (const auto& [e, step] : form.groups) {
        double r = e.shape() == ConfidenceDensity::Shape::gaussian ? 40 * to_double(e.param()) : e.support_radius();
        reach = std::max({reach, std::abs(to_double(step.breaks().front())) + r, std::abs(to_double(step.breaks().back())) + r});
    }
    constexpr int kSamples = 1 << 14;
    for (int i = 0; i <= kSamples; ++i) {
        const double q = horizon + (reach - horizon) * i / kSamples;
        if (f(q) > tol || f(-q) > tol) return false;
    }
    throw CannotCertify("cannot certify decay of " + f.to_string() + " outside the horizon");
}

std::optional<NonMultiplicativity> non_multiplicativity_witness(const IntervalSet& s1, const IntervalSet& s2,
                                                                const ConfidenceDensity& e) {
    const Effect f1 = Effect::smear(s1, e), f2 = Effect::smear(s2, e), f12 = Effect::smear(s1 & s2, e);
    auto ends = (s1 | s2).endpoints();
    const double reach = e.shape() == ConfidenceDensity::Shape::gaussian ? 6 * to_double(e.param()) : e.support_radius();
    const double a = ends.empty() ? -1.0 : to_double(ends.front()) - reach;
    const double b = ends.empty() ? 1.0 : to_double(ends.back()) + reach;
    std::optional<NonMultiplicativity> best;
    double best_gap = 1e-6;
    constexpr int kPoints = 4096;
    for (int i = 0; i <= kPoints; ++i) {
        const double q = a + (b - a) * i / kPoints;
        const double meet = f12(q), product = f1(q) * f2(q);
        if (std::abs(meet - product) > best_gap) {
            best_gap = std::abs(meet - product);
            best = NonMultiplicativity{q, meet, product};
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

class EffectParser {
public:
    explicit EffectParser(std::string_view text) : text_(text) {}

    Effect parse() {
        auto f = effect();
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected trailing input");
        return f;
    }

    ConfidenceDensity parse_density_only() {
        auto e = density();
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected trailing input");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(std::string_view token) {
        skip_ws();
        if (text_.substr(pos_, token.size()) != token) return false;
        pos_ += token.size();
        return true;
    }

    void expect(std::string_view token) {
        if (!accept(token)) fail("expected '" + std::string(token) + "'");
    }

    Rational number() {
        skip_ws();
        std::size_t end = pos_;
        while (end < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[end])) || text_[end] == '-' ||
                                      text_[end] == '.' || text_[end] == '/'))
            ++end;
        auto v = parse_rational(text_.substr(pos_, end - pos_));
        if (!v) fail("expected number");
        pos_ = end;
        return *v;
    }

    Effect effect() {
        auto f = unary();
        while (accept("+")) f = oplus(f, unary());
        return f;
    }

    Effect unary() {
        if (accept("~")) return neg(unary());
        return primary();
    }

    Effect primary() {
        if (accept("const(")) {
            auto c = number();
            expect(")");
            if (c < 0 || c > 1) fail("constant must lie in [0,1]");
            return Effect::constant(c);
        }
        if (accept("scale(")) {
            auto a = number();
            expect(",");
            auto f = effect();
            expect(")");
            if (a <= 0 || a > 1) fail("scale factor must lie in (0,1]");
            return scale(a, f);
        }
        if (accept("smear(")) {
            const std::size_t start = pos_;
            const std::size_t semi = text_.find(';', pos_);
            if (semi == std::string_view::npos) fail("expected ';' after set expression");
            IntervalSet s;
            try {
                s = parse_set_expr(text_.substr(start, semi - start));
            } catch (const ParseError& e) {
                throw ParseError("in set expression: " + std::string(e.what()), start + e.position());
            }
            pos_ = semi + 1;
            auto e = density();
            expect(")");
            return Effect::smear(s, e);
        }
        if (accept("(")) {
            auto f = effect();
            expect(")");
            return f;
        }
        fail("expected effect");
    }

    ConfidenceDensity density() {
        for (auto [name, shape] : {std::pair{"box", ConfidenceDensity::Shape::box},
                                   std::pair{"triangle", ConfidenceDensity::Shape::triangle},
                                   std::pair{"gaussian", ConfidenceDensity::Shape::gaussian}}) {
            if (!accept(name)) continue;
            expect("(");
            auto p = number();
            expect(")");
            if (p <= 0) fail("density parameter must be positive");
            switch (shape) {
                case ConfidenceDensity::Shape::box: return ConfidenceDensity::box(p);
                case ConfidenceDensity::Shape::triangle: return ConfidenceDensity::triangle(p);
                case ConfidenceDensity::Shape::gaussian: return ConfidenceDensity::gaussian(p);
            }
        }
        fail("expected density box(w), triangle(h) or gaussian(sigma)");
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

}  // namespace

Effect parse_effect_expr(std::string_view text) { return EffectParser(text).parse(); }

ConfidenceDensity parse_confidence_density(std::string_view text) { return EffectParser(text).parse_density_only(); }

}  // namespace qlab
