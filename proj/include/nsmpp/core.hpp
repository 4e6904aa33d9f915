#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace nsmpp {

/// Observation window [0, T) x M, where M is an axis-aligned box of marks.
/// mark_dim() == 0 describes a pure temporal process; mark_volume() is then 1
/// so all |M| factors degrade gracefully.
struct Domain {
    double horizon_T{0.0};
    Eigen::VectorXd mark_lo;
    Eigen::VectorXd mark_hi;

    int mark_dim() const { return static_cast<int>(mark_lo.size()); }

    double mark_volume() const {
        double v = 1.0;
        for (int i = 0; i < mark_dim(); ++i) v *= mark_hi[i] - mark_lo[i];
        return v;
    }

    /// Total measure of the observation window, T * |M|.
    double measure() const { return horizon_T * mark_volume(); }

    bool operator==(const Domain& other) const {
        return horizon_T == other.horizon_T && mark_lo == other.mark_lo &&
               mark_hi == other.mark_hi;
    }
};

/// Throws std::invalid_argument if the domain invariants are violated.
void validate_domain(const Domain& domain);

/// Pure temporal window [0, T).
Domain temporal_domain(double horizon_T);

/// Window [0, T) x prod_i [lo_i, hi_i].
Domain marked_domain(double horizon_T, Eigen::VectorXd mark_lo, Eigen::VectorXd mark_hi);

/// One event x = (t, m): time in [0, T) plus a mark vector of length mark_dim.
struct EventPoint {
    double t{0.0};
    Eigen::VectorXd mark;
};

/// Time-ordered trajectory together with its observation window. The event
/// list realizes the counting measure: integrals against it are sums over
/// events.
struct EventSequence {
    std::vector<EventPoint> events;
    Domain domain;

    std::size_t size() const { return events.size(); }
    bool empty() const { return events.empty(); }
};

struct SequenceViolation {
    std::size_t index{0};
    std::string reason;
};

/// Checks strict time ordering and domain membership of every event.
/// Returns the first violation found, or nullopt when the sequence is valid.
/// An empty sequence is valid.
std::optional<SequenceViolation> validate_sequence(const EventSequence& seq);

/// Integral of f against the counting measure restricted to events where
/// `select` holds: sum of f over the selected events.
template <typename Select, typename Fn>
double counting_measure_integral(const EventSequence& seq, Select&& select, Fn&& f) {
    double sum = 0.0;
    for (const EventPoint& x : seq.events) {
        if (select(x)) sum += f(x);
    }
    return sum;
}

/// Per-axis affine map raw -> normalized, axis 0 is time: x' = scale*x + offset.
struct AffineRecord {
    Eigen::VectorXd scale;
    Eigen::VectorXd offset;

    double apply(int axis, double v) const { return scale[axis] * v + offset[axis]; }
    double invert(int axis, double v) const { return (v - offset[axis]) / scale[axis]; }
};

/// A collection of sequences sharing one Domain, with the optional affine
/// record mapping raw coordinates to the normalized domain.
struct Dataset {
    std::vector<EventSequence> sequences;
    Domain domain;
    std::optional<AffineRecord> normalization;

    std::size_t size() const { return sequences.size(); }
};

/// Validates the shared-domain invariant and every sequence; throws
/// std::invalid_argument naming the first offending sequence.
void validate_dataset(const Dataset& ds);

/// Rescales the dataset so the domain becomes [0, target_hi) in time and
/// [0, target_hi] per mark axis. The affine record is stored (composed with
/// any existing record) so the inverse recovers raw coordinates.
/// Throws std::invalid_argument on an empty dataset or a degenerate axis.
Dataset normalize_dataset(const Dataset& ds, double target_hi = 100.0);

/// Applies the inverse of the stored affine record, restoring raw
/// coordinates. A dataset without a record is returned unchanged.
Dataset denormalize_dataset(const Dataset& ds);

}  // namespace nsmpp
