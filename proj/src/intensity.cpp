#include "nsmpp/intensity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "lambda_sweep.hpp"
#include "nsmpp/dataset_io.hpp"

namespace nsmpp {

namespace {

void require_in_domain(const Domain& dom, const EventPoint& x) {
    if (!(x.t >= 0.0 && x.t < dom.horizon_T)) {
        throw std::invalid_argument("intensity: query time outside [0, T)");
    }
    if (x.mark.size() != dom.mark_lo.size()) {
        throw std::invalid_argument("intensity: query mark dimension mismatch");
    }
    for (int a = 0; a < dom.mark_dim(); ++a) {
        if (!(x.mark[a] >= dom.mark_lo[a] && x.mark[a] <= dom.mark_hi[a])) {
            throw std::invalid_argument("intensity: query mark outside the mark box");
        }
    }
}

}  // namespace

double lambda_at(const KernelModel& model, const EventSequence& seq, const EventPoint& x) {
    require_in_domain(seq.domain, x);
    // History = events strictly before t(x); events are sorted, so binary
    // search gives the history end.
    const auto end = std::lower_bound(
        seq.events.begin(), seq.events.end(), x.t,
        [](const EventPoint& e, double t) { return e.t < t; });
    double lambda = model.mu;
    for (auto it = seq.events.begin(); it != end; ++it) {
        lambda += kernel_eval(model, *it, x);
    }
    detail::maybe_warn_bounds(model, lambda);
    return lambda;
}

std::vector<double> time_grid_nodes(const Domain& domain, int n) {
    if (n < 1) throw std::invalid_argument("time_grid_nodes: need at least one node");
    std::vector<double> nodes(n);
    const double h = domain.horizon_T / n;
    for (int i = 0; i < n; ++i) nodes[i] = (i + 0.5) * h;
    return nodes;
}

std::vector<Eigen::VectorXd> mark_grid_nodes(const Domain& domain, int per_axis) {
    const int d = domain.mark_dim();
    if (d == 0) return {Eigen::VectorXd(0)};
    if (per_axis < 1) throw std::invalid_argument("mark_grid_nodes: need at least one node");
    std::vector<std::vector<double>> axis_nodes(d);
    for (int a = 0; a < d; ++a) {
        const double h = (domain.mark_hi[a] - domain.mark_lo[a]) / per_axis;
        axis_nodes[a].resize(per_axis);
        for (int i = 0; i < per_axis; ++i) {
            axis_nodes[a][i] = domain.mark_lo[a] + (i + 0.5) * h;
        }
    }
    std::vector<Eigen::VectorXd> nodes;
    std::vector<int> idx(d, 0);
    while (true) {
        Eigen::VectorXd m(d);
        for (int a = 0; a < d; ++a) m[a] = axis_nodes[a][idx[a]];
        nodes.push_back(std::move(m));
        int a = d - 1;
        while (a >= 0 && ++idx[a] == per_axis) {
            idx[a] = 0;
            --a;
        }
        if (a < 0) break;
    }
    return nodes;
}

Eigen::MatrixXd lambda_trace(const KernelModel& model, const EventSequence& seq,
                             const std::vector<double>& time_grid,
                             const std::vector<Eigen::VectorXd>& mark_grid) {
    const std::size_t nt = time_grid.size();
    const std::size_t nm = mark_grid.size();
    std::vector<EventPoint> queries;
    queries.reserve(nt * nm);
    for (std::size_t i = 0; i < nt; ++i) {
        for (std::size_t j = 0; j < nm; ++j) {
            queries.push_back(EventPoint{time_grid[i], mark_grid[j]});
        }
    }
    for (std::size_t i = 1; i < nt; ++i) {
        if (!(time_grid[i] > time_grid[i - 1])) {
            throw std::invalid_argument("lambda_trace: time grid must be increasing");
        }
    }
    for (const EventPoint& q : queries) require_in_domain(seq.domain, q);

    const detail::SeqLambda values = detail::lambda_over(model, seq, queries);
    Eigen::MatrixXd out(nt, nm);
    for (std::size_t i = 0; i < nt; ++i) {
        for (std::size_t j = 0; j < nm; ++j) {
            out(i, j) = values.at_queries[i * nm + j];
        }
    }
    return out;
}

void write_lambda_trace_csv(const std::vector<double>& time_grid,
                            const std::vector<Eigen::VectorXd>& mark_grid,
                            const Eigen::MatrixXd& values, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    const int d = mark_grid.empty() ? 0 : static_cast<int>(mark_grid.front().size());
    out << "t";
    for (int a = 0; a < d; ++a) out << ",m" << (a + 1);
    out << ",lambda\n";
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            out << format_double(time_grid[i]);
            for (int a = 0; a < d; ++a) out << ',' << format_double(mark_grid[j][a]);
            out << ',' << format_double(values(i, j)) << "\n";
        }
    }
    if (!out) throw DataError("write failed for " + path.string());
}

BoundsReport check_intensity_bounds(const KernelModel& model, const EventSequence& seq,
                                    const std::vector<EventPoint>& queries) {
    BoundsReport report;
    if (queries.empty()) return report;
    report.min_lambda = std::numeric_limits<double>::infinity();
    report.max_lambda = -std::numeric_limits<double>::infinity();
    const IntensityBounds bounds = model.bounds.value_or(IntensityBounds{0.0, 0.0});
    for (const EventPoint& q : queries) {
        const double l = lambda_at(model, seq, q);
        ++report.checked;
        report.min_lambda = std::min(report.min_lambda, l);
        report.max_lambda = std::max(report.max_lambda, l);
        if (model.bounds) {
            if (l < bounds.c1) ++report.below_c1;
            if (l > bounds.c2) ++report.above_c2;
        }
    }
    return report;
}

}  // namespace nsmpp
