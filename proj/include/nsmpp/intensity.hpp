#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <vector>

#include "nsmpp/core.hpp"
#include "nsmpp/kernel.hpp"

namespace nsmpp {

/// Conditional intensity lambda(x) = mu + sum over history events strictly
/// before t(x) of k(x_i, x). A query exactly at an event time excludes that
/// event. Throws if x lies outside the sequence domain.
double lambda_at(const KernelModel& model, const EventSequence& seq, const EventPoint& x);

/// Cell-centered time nodes (i + 1/2) T / n, i < n; offset from grid-aligned
/// event times and with unit-sum quadrature weights T / n.
std::vector<double> time_grid_nodes(const Domain& domain, int n);

/// Cartesian product of cell-centered nodes per mark axis. For mark_dim 0
/// this is the single empty mark.
std::vector<Eigen::VectorXd> mark_grid_nodes(const Domain& domain, int per_axis);

/// lambda on the product grid time x mark, conditioning every node on the
/// full sequence (events before the node time). Row i corresponds to
/// time_grid[i], column j to mark_grid[j].
Eigen::MatrixXd lambda_trace(const KernelModel& model, const EventSequence& seq,
                             const std::vector<double>& time_grid,
                             const std::vector<Eigen::VectorXd>& mark_grid);

/// CSV export `t,m...,lambda`, one row per grid node (time-major).
void write_lambda_trace_csv(const std::vector<double>& time_grid,
                            const std::vector<Eigen::VectorXd>& mark_grid,
                            const Eigen::MatrixXd& values, const std::filesystem::path& path);

/// Assumption-style runtime validation of c1 <= lambda <= c2 at the given
/// query points. Reports violations; never clamps.
struct BoundsReport {
    std::size_t checked{0};
    std::size_t below_c1{0};
    std::size_t above_c2{0};
    double min_lambda{0.0};
    double max_lambda{0.0};
};

BoundsReport check_intensity_bounds(const KernelModel& model, const EventSequence& seq,
                                    const std::vector<EventPoint>& queries);

}  // namespace nsmpp
