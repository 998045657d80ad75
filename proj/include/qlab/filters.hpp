#pragma once

#include "qlab/errors.hpp"
#include "qlab/quotient.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace qlab {

/// A class given by a countable disjoint union of open intervals, produced
/// lazily by index n = 1, 2, .... `tail_hull(n)` is an open interval that
/// contains every component with index >= n; it is what lets a meet be
/// proven zero without materializing the infinite union.
class GeneratedClass {
public:
    using IndexFn = std::function<Interval(std::uint64_t)>;

    GeneratedClass(std::string label, IndexFn component, IndexFn tail_hull)
        : label_(std::move(label)), component_(std::move(component)), tail_hull_(std::move(tail_hull)) {}

    const std::string& label() const noexcept { return label_; }
    Interval component(std::uint64_t n) const { return component_(n); }
    Interval tail_hull(std::uint64_t n) const { return tail_hull_(n); }

    /// Union of components 1..count.
    IntervalSet truncation(std::uint64_t count) const;

private:
    std::string label_;
    IndexFn component_;
    IndexFn tail_hull_;
};

using BaseElement = std::variant<QuotientClass, GeneratedClass>;

std::string describe(const BaseElement& e);

/// The nested neighbourhood classes pi((c - 1/n, c + 1/n)), n = 1..length,
/// generated on demand. A prefix meet is its last element.
struct NeighborhoodChain {
    Rational center;
    std::uint64_t length = 0;

    QuotientClass element(std::uint64_t n) const;
};

/// A family of nonzero classes with the finite meet property certified up to
/// `certified_depth`. Never totalized: a base is a partial two-valued state.
///
/// Elements are numbered with the chain first (indices 0..length-1 for
/// n = 1..length), then the adjoined elements in insertion order.
class FilterBase {
public:
    FilterBase() = default;

    const std::optional<NeighborhoodChain>& chain() const noexcept { return chain_; }
    const std::vector<BaseElement>& adjoined() const noexcept { return adjoined_; }
    std::uint64_t certified_depth() const noexcept { return certified_depth_; }
    const std::optional<Rational>& tag() const noexcept { return tag_; }

    std::uint64_t size() const noexcept { return (chain_ ? chain_->length : 0) + adjoined_.size(); }

    /// Element by global index; chain elements are materialized on the fly.
    BaseElement element(std::uint64_t index) const;

    /// An uncertified base (certified_depth 0); run has_fmp before relying on it.
    static FilterBase from_classes(std::vector<BaseElement> elements, std::optional<Rational> tag = std::nullopt);

    friend FilterBase neighborhood_base(const Rational& lambda, std::uint64_t depth);
    friend FilterBase adjoin(const FilterBase& base, const BaseElement& x, std::uint64_t k);

private:
    std::optional<NeighborhoodChain> chain_;
    std::vector<BaseElement> adjoined_;
    std::uint64_t certified_depth_ = 0;
    std::optional<Rational> tag_;
};

// ---------------------------------------------------------------------------
// Meets

/// inner <= meet <= outer, both exact finite unions.
struct MeetEnclosure {
    IntervalSet inner;
    IntervalSet outer;
};

/// Encloses the meet using components 1..truncation of every generated operand.
MeetEnclosure enclose_meet(const std::vector<const BaseElement*>& operands, std::uint64_t truncation);

enum class MeetStatus { nonzero, zero, unresolved };

struct MeetVerdict {
    MeetStatus status = MeetStatus::unresolved;
    std::optional<Interval> witness;  ///< nonempty open interval inside the meet
};

/// Searches generated operands at truncations 8, 16, ... up to max_index until
/// a witness appears or the tail hulls prove the meet zero.
MeetVerdict decide_meet(const std::vector<const BaseElement*>& operands, std::uint64_t max_index = 4096);

/// Calls `visit` once per meet of at most k elements that is minimal under
/// inclusion (every other <=k-fold meet contains one of these). Uses the
/// nesting of the chain. Returns false if visit asked to stop.
bool for_each_minimal_meet(const FilterBase& base, std::uint64_t k,
                           const std::function<bool(const std::vector<std::uint64_t>& indices,
                                                    const std::vector<const BaseElement*>& operands)>& visit);

// ---------------------------------------------------------------------------
// Finite meet property

struct CheckedMeet {
    std::vector<std::uint64_t> indices;
    MeetVerdict verdict;
};

struct FmpCertificate {
    bool holds = false;
    /// True when the meet of every element was nonzero, which settles all k.
    bool full_meet_certified = false;
    std::vector<CheckedMeet> checked;
    std::optional<CheckedMeet> offending;
};

FmpCertificate has_fmp(const FilterBase& base, std::uint64_t k);

class FmpViolation : public Error {
public:
    explicit FmpViolation(CheckedMeet meet, const std::string& what) : Error(what), meet_(std::move(meet)) {}
    const CheckedMeet& meet() const noexcept { return meet_; }

private:
    CheckedMeet meet_;
};

FilterBase neighborhood_base(const Rational& lambda, std::uint64_t depth);

/// base + {x}, certified to depth k. Throws FmpViolation with the offending meet.
FilterBase adjoin(const FilterBase& base, const BaseElement& x, std::uint64_t k);

// ---------------------------------------------------------------------------
// Constructions

/// Shrinking neighbourhoods of lambda: each class is nonzero and the running
/// meet after n steps has measure exactly 2/n, yet the limit is pi({lambda}).
struct NormalityWitness {
    std::vector<QuotientClass> classes;
    std::vector<Rational> running_meet_measures;
    QuotientClass limit_class;
};

NormalityWitness normality_witness(const Rational& lambda, std::uint64_t depth);

/// Streaming form for very large depth: visit(n, class_n, measure of the
/// running meet of classes 1..n). Stops early if visit returns false.
void for_each_normality_step(const Rational& lambda, std::uint64_t depth,
                             const std::function<bool(std::uint64_t, const QuotientClass&, const Rational&)>& visit);

/// Components of B_m translated by lambda:
///   (lambda + 2^-n (1 + 2^-(m+1)), lambda + 2^-n (1 + 2^-m)),  n >= 1.
/// Different m give disjoint open sets, all with lambda in their closure.
Interval disjoint_family_component(const Rational& lambda, std::uint64_t m, std::uint64_t n);
GeneratedClass disjoint_family(const Rational& lambda, std::uint64_t m);

// ---------------------------------------------------------------------------
// Convergence

struct ConvergenceVerdict {
    enum class Kind { converges, divergent, undetermined };
    Kind kind = Kind::undetermined;
    std::optional<Rational> point;  ///< limit when converges
    int direction = 0;              ///< +1 / -1 when divergent
};

/// Meet of the first k chain elements and the first k adjoined elements,
/// i.e. the k-th truncated meet M_k.
MeetEnclosure truncated_meet(const FilterBase& base, std::uint64_t k, std::uint64_t truncation = 64);

/// Inspects M_k on the schedule k = 1, 2, 4, ..., depth. Converges when the
/// hull of M_k is narrower than tol (the limit is the tag if the hull's
/// closure holds it, else the hull midpoint); divergent when M_k is a
/// half-line whose finite end moves past +-escape_bound monotonically.
ConvergenceVerdict converges_to(const FilterBase& base, std::uint64_t depth, const Rational& tol,
                                const Rational& escape_bound = Rational(10));

}  // namespace qlab
