#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nsmpp/core.hpp"
#include "nsmpp/kernel.hpp"
#include "nsmpp/likelihood.hpp"

namespace nsmpp {

/// Evaluation grid over the observation window; cell-centered nodes with
/// unit-sum quadrature weights (exact for constant integrands, nodes offset
/// from event times by half a cell).
struct EvalGrid {
    int time_nodes{1000};
    int mark_nodes_per_axis{50};
};

/// Mean absolute intensity error between two models over the grid,
/// conditioning both on the same test history, averaged over sequences.
/// Throws if the models or sequences disagree on the Domain.
double intensity_mae(const KernelModel& true_model, const KernelModel& fitted_model,
                     const std::vector<EventSequence>& test_sequences, const EvalGrid& grid,
                     int threads = 1);

/// Out-of-sample predictive log-likelihood: log_likelihood of the fitted
/// model on the test split.
double predictive_loglik(const KernelModel& fitted_model, const Dataset& test,
                         const MCIntegralConfig& cfg, int threads = 1);

struct EvalReport {
    std::optional<double> mae;  // absent when no true model is supplied
    double predictive_ll{0.0};
    std::vector<double> per_sequence_ll;
    std::vector<double> per_sequence_mae;
    std::size_t floored_evaluations{0};
};

EvalReport evaluate(const KernelModel* true_model, const KernelModel& fitted_model,
                    const Dataset& test, const EvalGrid& grid, const MCIntegralConfig& cfg,
                    int threads = 1);

void write_eval_report_json(const EvalReport& report, const std::filesystem::path& path);

/// Figure-data export: kernel grids (true vs fitted), per-sequence intensity
/// traces, and fixed-point kernel slices for marked models, plus a JSON
/// manifest of everything written.
struct FigureExportOptions {
    int kernel_grid_nodes{100};
    int trace_time_nodes{1000};
    int trace_mark_nodes{50};
    std::vector<EventPoint> slice_points;          // fixed x' per slice; defaults if empty
    std::vector<std::size_t> sequence_indices{0};  // test sequences to trace
};

std::vector<std::string> export_figure_data(const KernelModel* true_model,
                                            const KernelModel& fitted_model,
                                            const Dataset& test,
                                            const FigureExportOptions& options,
                                            const std::filesystem::path& out_dir);

}  // namespace nsmpp
