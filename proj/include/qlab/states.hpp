#pragma once

#include "qlab/effects.hpp"
#include "qlab/filters.hpp"

#include <optional>
#include <string_view>
#include <variant>

namespace qlab {

/// Position density |psi|^2: a finite mixture of uniform(a, b) and
/// gaussian(mu, sigma) components with exact weights summing to one.
class DensityModel {
public:
    struct Component {
        enum class Kind { uniform, gaussian };
        Kind kind;
        Rational p1;  ///< a, or mu
        Rational p2;  ///< b, or sigma
        Rational weight;
        double d1, d2;

        double pdf(double q) const;
        double cdf(double q) const;
        double quantile(double u) const;
    };

    static DensityModel uniform(const Rational& a, const Rational& b);
    static DensityModel gaussian(const Rational& mu, const Rational& sigma);
    /// Flattens nested mixtures; weights must be nonnegative and sum to 1.
    static DensityModel mixture(const std::vector<std::pair<Rational, DensityModel>>& parts);

    const std::vector<Component>& components() const noexcept { return components_; }

    double pdf(double q) const;
    double cdf(double q) const;
    /// Exact CDF when every weighted component is uniform.
    std::optional<Rational> cdf_exact(const Rational& q) const;
    /// Inverse CDF: closed form for a single component, monotone bisection
    /// to 1e-12 otherwise.
    double quantile(double u) const;

    /// Points where w or its derivatives jump or peak.
    std::vector<double> kinks() const;
    /// Smallest scale on which w changes shape.
    double feature_scale() const;
    /// [lo, hi] outside of which the total mass is at most `budget`.
    std::pair<double, double> core(double budget) const;

    std::string to_string() const;

private:
    std::vector<Component> components_;
};

/// density := "uniform(" a "," b ")" | "gaussian(" mu "," sigma ")"
///          | "mixture(" weight ":" density { "," weight ":" density } ")"
DensityModel parse_density_model(std::string_view text);

/// nullopt stands for "undetermined".
using StateValue = std::optional<double>;

enum class SharpValue { zero, one, undetermined };

std::string to_string(SharpValue v);

double eval_point(const Rational& lambda, const Effect& f);

/// Integral of f * w with error at most tol (adaptive Simpson, split at the
/// kinks of f and w, tails beyond tol/10 of mass dropped).
double eval_density(const DensityModel& d, const Effect& f, double tol);

/// Probability that the sharp position lies in s.
double sharp_probability(const DensityModel& d, const IntervalSet& s);
/// Exact when every weighted component is uniform.
std::optional<Rational> sharp_probability_exact(const DensityModel& d, const IntervalSet& s);

/// 1 if some meet of at most depth base elements lies below x, 0 if one lies
/// below the complement of x, undetermined otherwise.
SharpValue eval_sharp(const FilterBase& base, const QuotientClass& x, std::uint64_t depth);

/// Squeezes f over the truncated meets M_k, k = 1, 2, 4, ..., depth; returns
/// the midpoint of the enclosure once it is narrower than tol.
StateValue filter_effect_value(const FilterBase& base, const Effect& f, std::uint64_t depth, double tol);

/// Fine's set value read as essential support: closure of {w > 0}.
IntervalSet set_value(const DensityModel& d);

/// Integral of f(lambda) over the distribution of lambda, taken per component
/// in quantile space with Gauss-Kronrod; shares no mesh with eval_density.
double mixture_expectation(const DensityModel& d, const Effect& f, double tol);

struct PointState {
    Rational lambda;
};
struct DensityState {
    DensityModel model;
    double tol = 1e-10;
};
struct SharpState {
    FilterBase base;
    std::uint64_t depth;
    double tol = 1e-10;
};
/// Singular state escaping to +inf (direction +1) or -inf (direction -1):
/// it gives f the limit of f in that direction.
struct EscapingState {
    int direction = 1;
};

using StateHandle = std::variant<PointState, DensityState, SharpState, EscapingState>;

StateValue evaluate(const StateHandle& state, const Effect& f);

}  // namespace qlab
