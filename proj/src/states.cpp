#include "qlab/states.hpp"

#include "qlab/errors.hpp"
#include "qlab/quadrature.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>

namespace qlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2 * std::numbers::pi); }

/// Inverse of the standard normal CDF: rational starting point (Acklam) and
/// two Halley steps against erfc.
double normal_quantile(double u) {
    if (u <= 0) return -kInf;
    if (u >= 1) return kInf;
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01,  -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    const double lo = 0.02425;
    double z;
    if (u < lo) {
        const double q = std::sqrt(-2 * std::log(u));
        z = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    } else if (u <= 1 - lo) {
        const double q = u - 0.5, r = q * q;
        z = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
    } else {
        const double q = std::sqrt(-2 * std::log1p(-u));
        z = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    for (int i = 0; i < 2; ++i) {
        // work with the smaller tail so the residual keeps its precision
        const double e = u < 0.5 ? normal_cdf(z) - u : (1 - u) - normal_cdf(-z);
        const double step = e / normal_pdf(z);
        z -= step / (1 + z * step / 2);
    }
    return z;
}

}  // namespace

// ---------------------------------------------------------------------------
// DensityModel

double DensityModel::Component::pdf(double q) const {
    if (kind == Kind::uniform) return q > d1 && q < d2 ? 1.0 / (d2 - d1) : 0.0;
    return normal_pdf((q - d1) / d2) / d2;
}

double DensityModel::Component::cdf(double q) const {
    if (kind == Kind::uniform) return std::clamp((q - d1) / (d2 - d1), 0.0, 1.0);
    return normal_cdf((q - d1) / d2);
}

double DensityModel::Component::quantile(double u) const {
    if (kind == Kind::uniform) return d1 + u * (d2 - d1);
    return d1 + d2 * normal_quantile(u);
}

DensityModel DensityModel::uniform(const Rational& a, const Rational& b) {
    if (!(a < b)) throw std::invalid_argument("uniform density needs a < b");
    DensityModel d;
    d.components_.push_back({Component::Kind::uniform, a, b, Rational(1), to_double(a), to_double(b)});
    return d;
}

DensityModel DensityModel::gaussian(const Rational& mu, const Rational& sigma) {
    if (!(sigma > 0)) throw std::invalid_argument("gaussian density needs sigma > 0");
    DensityModel d;
    d.components_.push_back({Component::Kind::gaussian, mu, sigma, Rational(1), to_double(mu), to_double(sigma)});
    return d;
}

DensityModel DensityModel::mixture(const std::vector<std::pair<Rational, DensityModel>>& parts) {
    if (parts.empty()) throw std::invalid_argument("mixture needs at least one component");
    DensityModel d;
    Rational total(0);
    for (const auto& [w, model] : parts) {
        if (w < 0) throw std::invalid_argument("mixture weights must be nonnegative");
        total += w;
        for (auto c : model.components_) {
            c.weight *= w;
            d.components_.push_back(std::move(c));
        }
    }
    if (total != 1) throw std::invalid_argument("mixture weights must sum to 1, got " + qlab::to_string(total));
    return d;
}

double DensityModel::pdf(double q) const {
    double v = 0;
    for (const auto& c : components_)
        if (c.weight != 0) v += to_double(c.weight) * c.pdf(q);
    return v;
}

double DensityModel::cdf(double q) const {
    double v = 0;
    for (const auto& c : components_)
        if (c.weight != 0) v += to_double(c.weight) * c.cdf(q);
    return std::clamp(v, 0.0, 1.0);
}

std::optional<Rational> DensityModel::cdf_exact(const Rational& q) const {
    Rational v(0);
    for (const auto& c : components_) {
        if (c.weight == 0) continue;
        if (c.kind != Component::Kind::uniform) return std::nullopt;
        if (q <= c.p1) continue;
        if (q >= c.p2) v += c.weight;
        else v += c.weight * (q - c.p1) / (c.p2 - c.p1);
    }
    return v;
}

double DensityModel::quantile(double u) const {
    if (u <= 0 || u >= 1) {
        double ext = u <= 0 ? kInf : -kInf;
        for (const auto& c : components_) {
            if (c.weight == 0) continue;
            const double e = c.quantile(u <= 0 ? 0.0 : 1.0);
            ext = u <= 0 ? std::min(ext, e) : std::max(ext, e);
        }
        return ext;
    }
    std::vector<const Component*> live;
    for (const auto& c : components_)
        if (c.weight != 0) live.push_back(&c);
    if (live.size() == 1) return live.front()->quantile(u);
    // The mixture quantile lies between the smallest and largest component quantile.
    double lo = kInf, hi = -kInf;
    for (const auto* c : live) {
        const double x = c->quantile(u);
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    while (hi - lo > 1e-12) {
        const double mid = lo + (hi - lo) / 2;
        if (mid <= lo || mid >= hi) break;
        (cdf(mid) < u ? lo : hi) = mid;
    }
    return lo + (hi - lo) / 2;
}

std::vector<double> DensityModel::kinks() const {
    std::vector<double> out;
    for (const auto& c : components_) {
        if (c.weight == 0) continue;
        out.push_back(c.d1);
        if (c.kind == Component::Kind::uniform) out.push_back(c.d2);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

double DensityModel::feature_scale() const {
    double s = kInf;
    for (const auto& c : components_) {
        if (c.weight == 0) continue;
        s = std::min(s, c.kind == Component::Kind::uniform ? c.d2 - c.d1 : c.d2);
    }
    return s;
}

std::pair<double, double> DensityModel::core(double budget) const {
    // Each Gaussian loses erfc(z / sqrt 2) outside mu +- z sigma; weights sum to 1.
    const double z = budget > 0 ? std::min(40.0, -normal_quantile(budget / 2) * (1 + 1e-9) + 1e-9) : 40.0;
    double lo = kInf, hi = -kInf;
    for (const auto& c : components_) {
        if (c.weight == 0) continue;
        if (c.kind == Component::Kind::uniform) {
            lo = std::min(lo, c.d1);
            hi = std::max(hi, c.d2);
        } else {
            lo = std::min(lo, c.d1 - z * c.d2);
            hi = std::max(hi, c.d1 + z * c.d2);
        }
    }
    return {lo, hi};
}

std::string DensityModel::to_string() const {
    auto one = [](const Component& c) {
        return std::string(c.kind == Component::Kind::uniform ? "uniform(" : "gaussian(") + qlab::to_string(c.p1) + "," +
               qlab::to_string(c.p2) + ")";
    };
    if (components_.size() == 1) return one(components_.front());
    std::string out = "mixture(";
    for (std::size_t i = 0; i < components_.size(); ++i) {
        if (i) out += ", ";
        out += qlab::to_string(components_[i].weight) + ": " + one(components_[i]);
    }
    return out + ")";
}

namespace {

class DensityParser {
public:
    explicit DensityParser(std::string_view t) : text_(t) {}

    DensityModel parse() {
        auto d = density();
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected trailing input");
        return d;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(std::string_view tok) {
        skip_ws();
        if (text_.substr(pos_, tok.size()) != tok) return false;
        pos_ += tok.size();
        return true;
    }

    void expect(std::string_view tok) {
        if (!accept(tok)) fail("expected '" + std::string(tok) + "'");
    }

    Rational number() {
        skip_ws();
        std::size_t end = pos_;
        while (end < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[end])) || text_[end] == '-' ||
                                      text_[end] == '.' || text_[end] == '/' || text_[end] == '+'))
            ++end;
        auto v = parse_rational(text_.substr(pos_, end - pos_));
        if (!v) fail("expected number");
        pos_ = end;
        return *v;
    }

    DensityModel density() {
        const std::size_t start = pos_;
        try {
            if (accept("uniform(")) {
                auto a = number();
                expect(",");
                auto b = number();
                expect(")");
                return DensityModel::uniform(a, b);
            }
            if (accept("gaussian(")) {
                auto mu = number();
                expect(",");
                auto sigma = number();
                expect(")");
                return DensityModel::gaussian(mu, sigma);
            }
            if (accept("mixture(")) {
                std::vector<std::pair<Rational, DensityModel>> parts;
                do {
                    auto w = number();
                    expect(":");
                    parts.emplace_back(w, density());
                } while (accept(","));
                expect(")");
                return DensityModel::mixture(parts);
            }
        } catch (const std::invalid_argument& e) {
            throw ParseError(e.what(), start);
        }
        fail("expected uniform(a,b), gaussian(mu,sigma) or mixture(w: density, ...)");
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

}  // namespace

DensityModel parse_density_model(std::string_view text) { return DensityParser(text).parse(); }

std::string to_string(SharpValue v) {
    switch (v) {
        case SharpValue::zero: return "0";
        case SharpValue::one: return "1";
        case SharpValue::undetermined: return "undetermined";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Evaluation

double eval_point(const Rational& lambda, const Effect& f) { return f(to_double(lambda)); }

namespace {

double effect_scale(const Effect& f) {
    double s = kInf;
    for (const auto& [e, step] : f.affine().groups) s = std::min(s, to_double(e.param()));
    return s;
}

}  // namespace

double eval_density(const DensityModel& d, const Effect& f, double tol) {
    if (!(tol > 0)) throw std::invalid_argument("tol must be positive");
    const auto [lo, hi] = d.core(tol / 10);
    std::vector<double> breaks = d.kinks();
    for (double k : f.kinks()) breaks.push_back(k);
    const double piece = std::min(d.feature_scale(), effect_scale(f)) / 2;
    auto integrand = [&](double q) { return f(q) * d.pdf(q); };
    return integrate_piecewise(integrand, lo, hi, std::move(breaks), piece, tol * 0.9);
}

double sharp_probability(const DensityModel& d, const IntervalSet& s) {
    double p = 0;
    for (const auto& c : s.components()) {
        if (c.is_point()) continue;
        p += d.cdf(c.hi().to_double()) - d.cdf(c.lo().to_double());
    }
    return std::clamp(p, 0.0, 1.0);
}

std::optional<Rational> sharp_probability_exact(const DensityModel& d, const IntervalSet& s) {
    Rational p(0);
    for (const auto& c : s.components()) {
        if (c.is_point()) continue;
        auto at = [&](const Extended& x) -> std::optional<Rational> {
            if (x.is_neg_inf()) return Rational(0);
            if (x.is_pos_inf()) return Rational(1);
            return d.cdf_exact(x.value());
        };
        auto hi = at(c.hi()), lo = at(c.lo());
        if (!hi || !lo) return std::nullopt;
        p += *hi - *lo;
    }
    return p;
}

SharpValue eval_sharp(const FilterBase& base, const QuotientClass& x, std::uint64_t depth) {
    const QuotientClass not_x = q_not(x);
    SharpValue result = SharpValue::undetermined;
    try {
        for_each_minimal_meet(base, depth, [&](const auto&, const auto& ops) {
            for (std::uint64_t trunc : {8u, 64u, 512u}) {
                const auto outer = project(enclose_meet(ops, trunc).outer);
                if (q_combine(ClassOp::meet, outer, not_x).is_zero()) {
                    result = SharpValue::one;
                    return false;
                }
                if (q_combine(ClassOp::meet, outer, x).is_zero()) {
                    result = SharpValue::zero;
                    return false;
                }
            }
            return true;
        });
    } catch (const CannotCertify&) {
        return SharpValue::undetermined;
    }
    return result;
}

StateValue filter_effect_value(const FilterBase& base, const Effect& f, std::uint64_t depth, double tol) {
    std::vector<std::uint64_t> schedule;
    for (std::uint64_t k = 1; k < depth; k *= 2) schedule.push_back(k);
    schedule.push_back(std::max<std::uint64_t>(depth, 1));
    for (auto k : schedule) {
        const auto outer = project(truncated_meet(base, k).outer);
        if (outer.is_zero()) return std::nullopt;
        double lo = kInf, hi = -kInf;
        for (const auto& c : outer.rep().components()) {
            const Bounds b = f.enclose(c.lo().to_double(), c.hi().to_double());
            lo = std::min(lo, b.lo);
            hi = std::max(hi, b.hi);
        }
        if (hi - lo < tol) return lo + (hi - lo) / 2;
    }
    return std::nullopt;
}

IntervalSet set_value(const DensityModel& d) {
    std::vector<Interval> parts;
    for (const auto& c : d.components()) {
        if (c.weight == 0) continue;
        if (c.kind == DensityModel::Component::Kind::gaussian) return IntervalSet::real_line();
        parts.push_back(Interval::closed(c.p1, c.p2));
    }
    return IntervalSet::from_intervals(parts);
}

double mixture_expectation(const DensityModel& d, const Effect& f, double tol) {
    if (!(tol > 0)) throw std::invalid_argument("tol must be positive");
    const auto kinks = f.kinks();
    const double s = effect_scale(f);
    double total = 0;
    for (const auto& c : d.components()) {
        if (c.weight == 0) continue;
        const double w = to_double(c.weight);
        const bool gauss = c.kind == DensityModel::Component::Kind::gaussian;
        const double tau = gauss ? tol / 20 : 0.0;
        std::vector<double> ubreaks;
        // the effect changes on a scale of s around each kink; pin those
        // q-points in u-space too so narrow features are not stepped over
        for (double k : kinks) {
            ubreaks.push_back(c.cdf(k));
            if (std::isfinite(s))
                for (double j : {0.5, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0, 24.0, 40.0}) {
                    ubreaks.push_back(c.cdf(k - j * s));
                    ubreaks.push_back(c.cdf(k + j * s));
                }
        }
        if (gauss) ubreaks.push_back(0.5);
        auto integrand = [&](double u) { return f(c.quantile(u)); };
        total += w * integrate_piecewise(integrand, tau, 1 - tau, std::move(ubreaks), 1.0 / 16, tol * 0.8,
                                           /*gauss_kronrod=*/true);
    }
    return total;
}

StateValue evaluate(const StateHandle& state, const Effect& f) {
    return std::visit(
        [&](const auto& s) -> StateValue {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, PointState>) return eval_point(s.lambda, f);
            else if constexpr (std::is_same_v<T, DensityState>) return eval_density(s.model, f, s.tol);
            else if constexpr (std::is_same_v<T, SharpState>) return filter_effect_value(s.base, f, s.depth, s.tol);
            else {
                const auto& form = f.affine();
                return to_double(s.direction > 0 ? form.right_asymptote() : form.left_asymptote());
            }
        },
        state);
}

}  // namespace qlab
