#include "qlab/filters.hpp"

#include <algorithm>

namespace qlab {

IntervalSet GeneratedClass::truncation(std::uint64_t count) const {
    std::vector<Interval> parts;
    parts.reserve(count);
    for (std::uint64_t n = 1; n <= count; ++n) parts.push_back(component(n));
    return IntervalSet::from_intervals(parts);
}

std::string describe(const BaseElement& e) {
    if (const auto* q = std::get_if<QuotientClass>(&e)) return to_string(*q);
    return std::get<GeneratedClass>(e).label();
}

QuotientClass NeighborhoodChain::element(std::uint64_t n) const {
    Rational r(1, n);
    return project(IntervalSet::of(Interval::open(center - r, center + r)));
}

BaseElement FilterBase::element(std::uint64_t index) const {
    const std::uint64_t chain_len = chain_ ? chain_->length : 0;
    if (index < chain_len) return chain_->element(index + 1);
    return adjoined_.at(index - chain_len);
}

FilterBase FilterBase::from_classes(std::vector<BaseElement> elements, std::optional<Rational> tag) {
    FilterBase b;
    b.adjoined_ = std::move(elements);
    b.tag_ = std::move(tag);
    return b;
}

// ---------------------------------------------------------------------------
// Meets

MeetEnclosure enclose_meet(const std::vector<const BaseElement*>& operands, std::uint64_t truncation) {
    MeetEnclosure enc{IntervalSet::real_line(), IntervalSet::real_line()};
    for (const auto* op : operands) {
        if (const auto* q = std::get_if<QuotientClass>(op)) {
            enc.inner = enc.inner & q->rep();
            enc.outer = enc.outer & q->rep();
        } else {
            const auto& g = std::get<GeneratedClass>(*op);
            auto head = g.truncation(truncation);
            enc.inner = enc.inner & head;
            enc.outer = enc.outer & (head | IntervalSet::of(g.tail_hull(truncation + 1)));
        }
    }
    return enc;
}

MeetVerdict decide_meet(const std::vector<const BaseElement*>& operands, std::uint64_t max_index) {
    const bool generated = std::any_of(operands.begin(), operands.end(),
                                       [](const BaseElement* e) { return std::holds_alternative<GeneratedClass>(*e); });
    std::uint64_t truncation = generated ? 8 : 0;
    for (;;) {
        auto enc = enclose_meet(operands, truncation);
        auto inner = project(enc.inner);
        if (!inner.is_zero()) return {MeetStatus::nonzero, inner.rep().components().front()};
        if (project(enc.outer).is_zero()) return {MeetStatus::zero, std::nullopt};
        if (!generated || truncation >= max_index) return {MeetStatus::unresolved, std::nullopt};
        truncation *= 2;
    }
}

namespace {

/// Visits all size-r index combinations of {0..n-1} in lexicographic order.
bool for_each_combination(std::size_t n, std::size_t r, const std::function<bool(const std::vector<std::size_t>&)>& fn) {
    std::vector<std::size_t> idx(r);
    for (std::size_t i = 0; i < r; ++i) idx[i] = i;
    for (;;) {
        if (!fn(idx)) return false;
        std::size_t i = r;
        while (i > 0 && idx[i - 1] == n - r + (i - 1)) --i;
        if (i == 0) return true;
        ++idx[i - 1];
        for (std::size_t j = i; j < r; ++j) idx[j] = idx[j - 1] + 1;
    }
}

constexpr std::uint64_t kMaxMeets = 200000;

std::uint64_t binomial(std::uint64_t n, std::uint64_t r) {
    r = std::min(r, n - r);
    long double acc = 1;
    for (std::uint64_t i = 1; i <= r; ++i) acc = acc * static_cast<long double>(n - r + i) / static_cast<long double>(i);
    return acc > 1e18L ? UINT64_MAX : static_cast<std::uint64_t>(acc + 0.5L);
}

}  // namespace

bool for_each_minimal_meet(const FilterBase& base, std::uint64_t k,
                           const std::function<bool(const std::vector<std::uint64_t>& indices,
                                                    const std::vector<const BaseElement*>& operands)>& visit) {
    const auto& adjoined = base.adjoined();
    const std::uint64_t chain_len = base.chain() ? base.chain()->length : 0;
    const std::size_t m = adjoined.size();
    if (k == 0 || base.size() == 0) return true;

    std::optional<BaseElement> deepest;
    if (chain_len > 0) deepest = base.chain()->element(chain_len);

    auto run = [&](bool with_chain, std::size_t r) {
        if (binomial(m, r) > kMaxMeets) throw CannotCertify("too many meets to enumerate at this depth");
        return for_each_combination(m, r, [&](const std::vector<std::size_t>& pick) {
            std::vector<std::uint64_t> indices;
            std::vector<const BaseElement*> ops;
            if (with_chain) {
                indices.push_back(chain_len - 1);
                ops.push_back(&*deepest);
            }
            for (auto i : pick) {
                indices.push_back(chain_len + i);
                ops.push_back(&adjoined[i]);
            }
            return visit(indices, ops);
        });
    };

    if (k >= base.size()) return run(chain_len > 0, m);
    if (chain_len > 0 && !run(true, std::min<std::uint64_t>(k - 1, m))) return false;
    if (m >= k) return run(false, k);
    return true;
}

// ---------------------------------------------------------------------------
// Finite meet property

FmpCertificate has_fmp(const FilterBase& base, std::uint64_t k) {
    FmpCertificate cert;
    const std::uint64_t chain_len = base.chain() ? base.chain()->length : 0;

    for (std::size_t i = 0; i < base.adjoined().size(); ++i) {
        CheckedMeet single{{chain_len + i}, decide_meet({&base.adjoined()[i]})};
        if (single.verdict.status != MeetStatus::nonzero) {
            cert.offending = single;
            return cert;
        }
    }

    // If everything meets nonzero, every sub-meet does too.
    std::optional<CheckedMeet> full;
    for_each_minimal_meet(base, base.size(), [&](const auto& indices, const auto& ops) {
        full = CheckedMeet{indices, decide_meet(ops)};
        return false;
    });
    if (!full || full->verdict.status == MeetStatus::nonzero) {
        cert.holds = true;
        cert.full_meet_certified = true;
        if (full) cert.checked.push_back(*full);
        return cert;
    }
    if (k >= base.size()) {
        cert.offending = full;
        return cert;
    }

    bool ok = for_each_minimal_meet(base, k, [&](const auto& indices, const auto& ops) {
        CheckedMeet m{indices, decide_meet(ops)};
        if (m.verdict.status != MeetStatus::nonzero) {
            cert.offending = m;
            return false;
        }
        cert.checked.push_back(std::move(m));
        return true;
    });
    cert.holds = ok;
    return cert;
}

FilterBase neighborhood_base(const Rational& lambda, std::uint64_t depth) {
    if (depth == 0) throw std::invalid_argument("neighborhood_base: depth must be >= 1");
    FilterBase b;
    b.chain_ = NeighborhoodChain{lambda, depth};
    b.certified_depth_ = depth;
    b.tag_ = lambda;
    return b;
}

FilterBase adjoin(const FilterBase& base, const BaseElement& x, std::uint64_t k) {
    FilterBase next = base;
    next.adjoined_.push_back(x);
    auto cert = has_fmp(next, k);
    if (!cert.holds) {
        std::string what = "adjoining " + describe(x) + " breaks the finite meet property: meet of elements {";
        for (std::size_t i = 0; i < cert.offending->indices.size(); ++i) {
            if (i) what += ",";
            what += std::to_string(cert.offending->indices[i]);
        }
        what += cert.offending->verdict.status == MeetStatus::zero ? "} is zero" : "} is unresolved";
        throw FmpViolation(*cert.offending, what);
    }
    next.certified_depth_ = k;
    return next;
}

// ---------------------------------------------------------------------------
// Constructions

void for_each_normality_step(const Rational& lambda, std::uint64_t depth,
                             const std::function<bool(std::uint64_t, const QuotientClass&, const Rational&)>& visit) {
    QuotientClass running = QuotientClass::unit();
    NeighborhoodChain chain{lambda, depth};
    for (std::uint64_t n = 1; n <= depth; ++n) {
        auto cls = chain.element(n);
        running = q_combine(ClassOp::meet, running, cls);
        if (!visit(n, cls, measure(running.rep()).value())) return;
    }
}

NormalityWitness normality_witness(const Rational& lambda, std::uint64_t depth) {
    if (depth == 0) throw std::invalid_argument("normality_witness: depth must be >= 1");
    NormalityWitness w;
    for_each_normality_step(lambda, depth, [&](std::uint64_t, const QuotientClass& cls, const Rational& m) {
        w.classes.push_back(cls);
        w.running_meet_measures.push_back(m);
        return true;
    });
    w.limit_class = project(IntervalSet::points({lambda}));
    return w;
}

Interval disjoint_family_component(const Rational& lambda, std::uint64_t m, std::uint64_t n) {
    const Rational a = pow2(-static_cast<long>(n));
    const Rational lo = lambda + a * (1 + pow2(-static_cast<long>(m) - 1));
    const Rational hi = lambda + a * (1 + pow2(-static_cast<long>(m)));
    return Interval::open(lo, hi);
}

GeneratedClass disjoint_family(const Rational& lambda, std::uint64_t m) {
    if (m == 0) throw std::invalid_argument("disjoint_family: m must be >= 1");
    // Components of index >= n sit inside (lambda + 2^-n', lambda + 2^-n'+1)
    // for some n' >= n, hence inside (lambda, lambda + 2^-(n-1)).
    return GeneratedClass(
        "B_" + std::to_string(m) + "(" + to_string(lambda) + ")",
        [lambda, m](std::uint64_t n) { return disjoint_family_component(lambda, m, n); },
        [lambda](std::uint64_t n) { return Interval::open(lambda, lambda + pow2(1 - static_cast<long>(n))); });
}

// ---------------------------------------------------------------------------
// Convergence

MeetEnclosure truncated_meet(const FilterBase& base, std::uint64_t k, std::uint64_t truncation) {
    std::vector<BaseElement> owned;
    std::vector<const BaseElement*> ops;
    if (base.chain() && base.chain()->length > 0) {
        owned.emplace_back(base.chain()->element(std::min(k, base.chain()->length)));
        ops.push_back(&owned.back());
    }
    const auto& adjoined = base.adjoined();
    for (std::size_t i = 0; i < adjoined.size() && i < k; ++i) ops.push_back(&adjoined[i]);
    return enclose_meet(ops, truncation);
}

ConvergenceVerdict converges_to(const FilterBase& base, std::uint64_t depth, const Rational& tol,
                                const Rational& escape_bound) {
    std::vector<std::uint64_t> schedule;
    for (std::uint64_t k = 1; k < depth; k *= 2) schedule.push_back(k);
    schedule.push_back(std::max<std::uint64_t>(depth, 1));

    std::vector<Extended> lows, highs;
    IntervalSet last;
    for (auto k : schedule) {
        auto outer = project(truncated_meet(base, k).outer);
        if (outer.is_zero()) return {};
        const auto& comps = outer.rep().components();
        Extended lo = comps.front().lo(), hi = comps.back().hi();
        if (lo.finite() && hi.finite() && hi.value() - lo.value() < tol) {
            ConvergenceVerdict v{ConvergenceVerdict::Kind::converges, std::nullopt, 0};
            const auto& tag = base.tag();
            if (tag && lo.value() <= *tag && *tag <= hi.value()) v.point = *tag;
            else v.point = Rational((lo.value() + hi.value()) / 2);
            return v;
        }
        lows.push_back(lo);
        highs.push_back(hi);
    }

    auto escapes = [&](const std::vector<Extended>& ends, const std::vector<Extended>& other, bool up) {
        if (!(up ? other.back().is_pos_inf() : other.back().is_neg_inf())) return false;
        if (!ends.back().finite()) return false;
        for (std::size_t i = 1; i < ends.size(); ++i)
            if (up ? ends[i] < ends[i - 1] : ends[i] > ends[i - 1]) return false;
        if (ends.front() == ends.back() && ends.size() > 1) return false;
        return up ? ends.back().value() > escape_bound : ends.back().value() < -escape_bound;
    };
    if (escapes(lows, highs, true)) return {ConvergenceVerdict::Kind::divergent, std::nullopt, +1};
    if (escapes(highs, lows, false)) return {ConvergenceVerdict::Kind::divergent, std::nullopt, -1};
    return {};
}

}  // namespace qlab
