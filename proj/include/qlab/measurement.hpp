#pragma once

#include "qlab/states.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

namespace qlab {

/// Seed used whenever none is given; QLAB_SEED overrides it in the CLI.
inline constexpr std::uint64_t kDefaultSeed = 12345;

/// Philox4x32-10 (Salmon, Moraes, Dror, Shaw 2011). Counter-based: the
/// output for (counter, key) needs no state, so any index range can be drawn
/// independently and in parallel.
struct Philox4x32 {
    using Block = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;
    static Block generate(Block counter, Key key);
};

/// Uniform draw in (0, 1) for (seed, index, stream), 53 bits.
double uniform_draw(std::uint64_t seed, std::uint64_t index, std::uint32_t stream = 0);

/// The i with i 2^-n <= q < (i+1) 2^-n.
std::int64_t dyadic_cell(double q, unsigned n);

/// N inverse-CDF draws; element i only depends on (seed, i), so the result
/// does not depend on `threads`.
std::vector<double> sample(const DensityModel& d, std::size_t N, std::uint64_t seed, unsigned threads = 1);

struct MeasurementRecord {
    std::uint64_t seed = 0;
    unsigned level = 0;
    std::map<std::int64_t, std::uint64_t> counts;
    std::uint64_t total = 0;
};

MeasurementRecord run_protocol(const DensityModel& d, unsigned n, std::size_t N, std::uint64_t seed,
                               unsigned threads = 1);

/// The level n-1 histogram obtained by merging sibling cells.
MeasurementRecord coarsen(const MeasurementRecord& r);

/// Half-open cell [i 2^-n, (i+1) 2^-n) as an exact interval set.
IntervalSet dyadic_interval(std::int64_t i, unsigned n);

struct CellReport {
    std::int64_t index;
    Rational lo, hi;
    std::uint64_t count;
    double freq;
    double p;
    double deviation;  ///< |freq - p| / sqrt(p (1 - p) / N); infinite when p = 0 < count
};

/// Every cell carrying a count or probability above 1e-15, in index order.
std::vector<CellReport> frequency_report(const DensityModel& d, const MeasurementRecord& r);

struct ScoreSheet {
    std::uint64_t y_count = 0;
    std::uint64_t n_count = 0;
    std::vector<std::pair<double, char>> log;
};

/// Records 'y' for throw q with probability smear(s, e)(q), or iff q is in s
/// for the perfect detector (e empty). Stream 1 of the seed decides.
ScoreSheet scorekeeper(const IntervalSet& s, const std::optional<ConfidenceDensity>& e,
                       const std::vector<double>& throws, std::uint64_t seed);

/// Gaussian width for which the mean response over the throws equals target.
ConfidenceDensity tune_detector(const IntervalSet& s, const std::vector<double>& throws, double target);

struct EffectAgreement {
    std::string effect;
    double point_value;
    StateValue right_value;  ///< on F_lambda + pi((lambda, inf))
    StateValue left_value;   ///< on F_lambda + pi((-inf, lambda))
    bool agree;
};

struct IndistinguishabilityReport {
    Rational lambda;
    QuotientClass probe;  ///< pi((lambda, inf))
    SharpValue right_sharp;
    SharpValue left_sharp;
    std::vector<EffectAgreement> effects;

    bool sharp_split() const {
        return right_sharp != SharpValue::undetermined && left_sharp != SharpValue::undetermined &&
               right_sharp != left_sharp;
    }
    bool unsharp_agree() const;
};

IndistinguishabilityReport indistinguishability_experiment(const Rational& lambda, const std::vector<Effect>& effects,
                                                           std::uint64_t depth, double tol);

}  // namespace qlab
