#pragma once

#include "qlab/sets.hpp"

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qlab {

/// Probability density modelling a detector's imprecision. Parameters are
/// exact; box and triangle CDFs are exact piecewise polynomials, the Gaussian
/// CDF is evaluated through erfc at double precision.
class ConfidenceDensity {
public:
    enum class Shape { box, triangle, gaussian };

    /// Uniform on (-width/2, width/2).
    static ConfidenceDensity box(Rational width);
    /// Tent on (-half_width, half_width).
    static ConfidenceDensity triangle(Rational half_width);
    static ConfidenceDensity gaussian(Rational sigma);

    Shape shape() const noexcept { return shape_; }
    const Rational& param() const noexcept { return param_; }

    double pdf(double t) const;
    double cdf(double t) const;
    /// Exact CDF for box and triangle; nullopt for the Gaussian.
    std::optional<Rational> cdf_exact(const Rational& t) const;
    double sup_density() const;
    /// Radius of the support; +inf for the Gaussian.
    double support_radius() const;
    /// P(|X| > r).
    double tail_mass(double r) const;

    friend bool operator==(const ConfidenceDensity&, const ConfidenceDensity&) = default;

private:
    ConfidenceDensity(Shape s, Rational p, double d) : shape_(s), param_(std::move(p)), param_d_(d) {}

    Shape shape_;
    Rational param_;
    double param_d_;
};

std::string to_string(const ConfidenceDensity& e);

/// Piecewise-constant function with rational values, defined up to a null
/// set: values_[i] holds on the open gap between breaks_[i-1] and breaks_[i].
class StepFunction {
public:
    StepFunction() : values_{Rational(0)} {}

    static StepFunction indicator(const IntervalSet& s);

    const std::vector<Rational>& breaks() const noexcept { return breaks_; }
    const std::vector<Rational>& values() const noexcept { return values_; }

    StepFunction operator+(const StepFunction& other) const;
    StepFunction scaled(const Rational& a) const;
    bool is_zero() const { return breaks_.empty() && values_.front() == 0; }

    Rational max() const;
    Rational min() const;
    /// Sum of absolute jumps.
    Rational total_variation() const;
    /// Extremes over the gaps that meet (a, b); either end may be infinite.
    /// Errs towards including neighbouring gaps when a break lies within
    /// rounding distance of a or b.
    std::pair<Rational, Rational> min_max_over(double a, double b) const;

private:
    void drop_redundant_breaks();
    const Rational& value_near(const Rational& x) const;

    std::vector<Rational> breaks_;
    std::vector<Rational> values_;
};

/// f = constant + sum over densities e of (step_e * e). Every Effect has one.
struct AffineForm {
    Rational constant;
    std::vector<std::pair<ConfidenceDensity, StepFunction>> groups;

    AffineForm operator+(const AffineForm& other) const;
    AffineForm operator-(const AffineForm& other) const;
    AffineForm scaled(const Rational& a) const;

    /// Exact bounds on the range: each group's convolution stays inside the
    /// step function's extremes because the density has mass one.
    Rational lower_bound() const;
    Rational upper_bound() const;
    /// Limits as q -> -inf / +inf.
    Rational left_asymptote() const;
    Rational right_asymptote() const;
    double lipschitz() const;
};

struct Bounds {
    double lo;
    double hi;
    double width() const { return hi - lo; }
};

struct LeqResult;

/// Position effect q -> f(q) in [0,1]: an immutable expression tree over
/// smeared indicators and constants, with cached Lipschitz constant, certified
/// range and affine form.
class Effect {
public:
    static Effect constant(const Rational& c);
    static Effect smear(const IntervalSet& s, const ConfidenceDensity& e);

    double operator()(double q) const;

    double lipschitz() const;
    /// Certified range [lo, hi] within [0,1].
    const std::pair<Rational, Rational>& range() const;
    const AffineForm& affine() const;

    /// Points where the effect may fail to be smooth; splitting integrals there
    /// keeps quadrature accurate.
    std::vector<double> kinks() const;

    /// Sound enclosure of {f(q) : q in [a, b]}; a or b may be infinite.
    Bounds enclose(double a, double b) const;

    std::string to_string() const;

    struct Node;

private:
    explicit Effect(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    friend Effect oplus(const Effect&, const Effect&);
    friend Effect neg(const Effect&);
    friend Effect scale(const Rational&, const Effect&);
    friend LeqResult leq(const Effect&, const Effect&);

    std::shared_ptr<const Node> node_;
};

inline double eval(const Effect& f, double q) { return f(q); }

inline Effect smear(const IntervalSet& s, const ConfidenceDensity& e) { return Effect::smear(s, e); }

/// f + g, defined only when f + g <= 1 can be certified. Throws NotOrthogonal
/// (with a point where f + g > 1) or CannotCertify.
Effect oplus(const Effect& f, const Effect& g);

/// 1 - f.
Effect neg(const Effect& f);

/// a * f for a in (0, 1].
Effect scale(const Rational& a, const Effect& f);

struct LeqResult {
    bool holds = false;
    std::optional<Effect> witness;      ///< C with f + C = g when holds
    std::optional<double> violation;    ///< q with f(q) > g(q) otherwise
};

/// f <= g. Throws CannotCertify when neither inequality nor violation can be
/// established.
LeqResult leq(const Effect& f, const Effect& g);

/// Whether sup of f outside [-horizon, horizon] is at most tol.
bool vanishes_at_infinity(const Effect& f, double tol, double horizon);

struct NonMultiplicativity {
    double q;
    double meet_value;      ///< smear(s1 & s2, e)(q)
    double product_value;   ///< smear(s1, e)(q) * smear(s2, e)(q)
};

/// A point where smearing the intersection differs from the product of the
/// smeared sets by more than 1e-6, if one exists on a scan grid.
std::optional<NonMultiplicativity> non_multiplicativity_witness(const IntervalSet& s1, const IntervalSet& s2,
                                                                const ConfidenceDensity& e);

/// Effect expressions for the command line:
///   effect  := unary { "+" unary }                    "+" is the orthosum
///   unary   := "~" unary | primary
///   primary := "const(" number ")" | "scale(" number "," effect ")"
///            | "smear(" set-expr ";" density ")" | "(" effect ")"
///   density := ("box" | "triangle" | "gaussian") "(" number ")"
Effect parse_effect_expr(std::string_view text);
ConfidenceDensity parse_confidence_density(std::string_view text);

}  // namespace qlab
