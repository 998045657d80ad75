#include "qlab/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace qlab {

Philox4x32::Block Philox4x32::generate(Block ctr, Key key) {
    constexpr std::uint32_t kM0 = 0xD2511F53, kM1 = 0xCD9E8D57;
    constexpr std::uint32_t kW0 = 0x9E3779B9, kW1 = 0xBB67AE85;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = std::uint64_t{kM0} * ctr[0];
        const std::uint64_t p1 = std::uint64_t{kM1} * ctr[2];
        ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
               static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
        key[0] += kW0;
        key[1] += kW1;
    }
    return ctr;
}

double uniform_draw(std::uint64_t seed, std::uint64_t index, std::uint32_t stream) {
    const auto out = Philox4x32::generate(
        {static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), stream, 0},
        {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
    const std::uint64_t bits = (std::uint64_t{out[0]} << 32 | out[1]) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

std::int64_t dyadic_cell(double q, unsigned n) {
    return static_cast<std::int64_t>(std::floor(std::ldexp(q, static_cast<int>(n))));
}

std::vector<double> sample(const DensityModel& d, std::size_t N, std::uint64_t seed, unsigned threads) {
    if (N == 0) throw std::invalid_argument("sample size must be at least 1");
    std::vector<double> out(N);
    auto fill = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) out[i] = d.quantile(uniform_draw(seed, i));
    };
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::min<std::size_t>(N, 64))));
    if (threads == 1) {
        fill(0, N);
        return out;
    }
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(fill, N * t / threads, N * (t + 1) / threads);
    for (auto& th : pool) th.join();
    return out;
}

MeasurementRecord run_protocol(const DensityModel& d, unsigned n, std::size_t N, std::uint64_t seed,
                               unsigned threads) {
    MeasurementRecord r{seed, n, {}, 0};
    for (double q : sample(d, N, seed, threads)) ++r.counts[dyadic_cell(q, n)];
    r.total = N;
    return r;
}

MeasurementRecord coarsen(const MeasurementRecord& r) {
    if (r.level == 0) throw std::invalid_argument("level 0 has no coarser level");
    MeasurementRecord out{r.seed, r.level - 1, {}, r.total};
    for (const auto& [i, c] : r.counts) {
        const std::int64_t parent = i >= 0 ? i / 2 : -((-i + 1) / 2);
        out.counts[parent] += c;
    }
    return out;
}

IntervalSet dyadic_interval(std::int64_t i, unsigned n) {
    const Rational w = pow2(-static_cast<long>(n));
    const Rational lo = Rational(static_cast<long>(i)) * w, hi = lo + w;
    return IntervalSet::of(Interval(lo, true, hi, false));
}

std::vector<CellReport> frequency_report(const DensityModel& d, const MeasurementRecord& r) {
    std::map<std::int64_t, std::uint64_t> cells = r.counts;
    const auto [lo, hi] = d.core(1e-15);
    if (std::isfinite(lo) && std::isfinite(hi)) {
        const auto first = dyadic_cell(lo, r.level), last = dyadic_cell(hi, r.level);
        if (last - first < 1 << 22)
            for (auto i = first; i <= last; ++i) cells.emplace(i, 0);
    }
    std::vector<CellReport> out;
    const double N = static_cast<double>(r.total);
    for (const auto& [i, count] : cells) {
        const IntervalSet cell = dyadic_interval(i, r.level);
        const double p = sharp_probability(d, cell);
        if (count == 0 && p <= 1e-15) continue;
        const double freq = static_cast<double>(count) / N;
        const double sd = std::sqrt(p * (1 - p) / N);
        const double dev = sd > 0 ? std::abs(freq - p) / sd : (freq == p ? 0.0 : std::numeric_limits<double>::infinity());
        out.push_back({i, cell.components().front().lo().value(), cell.components().front().hi().value(), count, freq, p, dev});
    }
    return out;
}

ScoreSheet scorekeeper(const IntervalSet& s, const std::optional<ConfidenceDensity>& e,
                       const std::vector<double>& throws, std::uint64_t seed) {
    ScoreSheet sheet;
    std::optional<Effect> f;
    if (e) f = Effect::smear(s, *e);
    for (std::size_t i = 0; i < throws.size(); ++i) {
        const double q = throws[i];
        const bool yes = f ? uniform_draw(seed, i, 1) < (*f)(q) : s.contains(from_double(q));
        sheet.log.emplace_back(q, yes ? 'y' : 'n');
        ++(yes ? sheet.y_count : sheet.n_count);
    }
    return sheet;
}

ConfidenceDensity tune_detector(const IntervalSet& s, const std::vector<double>& throws, double target) {
    if (throws.empty()) throw std::invalid_argument("no throws to tune against");
    auto mean = [&](double sigma) {
        const Effect f = Effect::smear(s, ConfidenceDensity::gaussian(from_double(sigma)));
        double m = 0;
        for (double q : throws) m += f(q);
        return m / static_cast<double>(throws.size());
    };
    double lo = 1e-9, hi = 1.0;
    while (mean(hi) > target && hi < 1e9) hi *= 2;
    if (!(mean(lo) >= target && mean(hi) <= target)) throw std::invalid_argument("target response not reachable");
    for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
        const double mid = (lo + hi) / 2;
        (mean(mid) > target ? lo : hi) = mid;
    }
    return ConfidenceDensity::gaussian(from_double((lo + hi) / 2));
}

bool IndistinguishabilityReport::unsharp_agree() const {
    return std::all_of(effects.begin(), effects.end(), [](const EffectAgreement& a) { return a.agree; });
}

IndistinguishabilityReport indistinguishability_experiment(const Rational& lambda, const std::vector<Effect>& effects,
                                                           std::uint64_t depth, double tol) {
    if (effects.empty()) throw std::invalid_argument("no effects given");
    const auto right = project(IntervalSet::of(Interval(lambda, false, Extended::pos_infinity(), false)));
    const auto left = project(IntervalSet::of(Interval(Extended::neg_infinity(), false, lambda, false)));
    const FilterBase f0 = neighborhood_base(lambda, depth);
    const FilterBase s1 = adjoin(f0, right, 2), s2 = adjoin(f0, left, 2);

    IndistinguishabilityReport rep{lambda, right, eval_sharp(s1, right, 2), eval_sharp(s2, right, 2), {}};
    for (const auto& f : effects) {
        EffectAgreement a{f.to_string(), eval_point(lambda, f), filter_effect_value(s1, f, depth, tol),
                          filter_effect_value(s2, f, depth, tol), false};
        a.agree = a.right_value && a.left_value && std::abs(*a.right_value - a.point_value) <= tol &&
                  std::abs(*a.left_value - a.point_value) <= tol;
        rep.effects.push_back(std::move(a));
    }
    return rep;
}

}  // namespace qlab
