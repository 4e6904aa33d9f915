#pragma once

// Internal batched conditional-intensity evaluation. One forward sweep over
// the merged stream of events and time-sorted query points computes lambda at
// every event and every query in O(events + queries) family-specific work,
// instead of O(queries * history). Queries at exactly an event time are
// processed before that event enters the history (strict exclusion).

#include <Eigen/Dense>
#include <vector>

#include "nsmpp/core.hpp"
#include "nsmpp/kernel.hpp"

namespace nsmpp::detail {

struct SeqLambda {
    Eigen::VectorXd at_events;   // lambda(x_i) in event order
    Eigen::VectorXd at_queries;  // lambda(q_j) in query order
};

/// queries must be sorted ascending by time and lie inside the domain.
SeqLambda lambda_over(const KernelModel& model, const EventSequence& seq,
                      const std::vector<EventPoint>& sorted_queries);

/// Warn (rate-limited, process-wide) when the model carries Assumption-style
/// bounds and a lambda value escapes [c1, c2].
void maybe_warn_bounds(const KernelModel& model, double lambda);

}  // namespace nsmpp::detail
