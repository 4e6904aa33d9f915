#include "nsmpp/evaluator.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "lambda_sweep.hpp"
#include "nsmpp/dataset_io.hpp"
#include "nsmpp/intensity.hpp"
#include "parallel.hpp"

namespace nsmpp {

namespace {

using nlohmann::json;

std::vector<EventPoint> grid_queries(const Domain& domain, int time_nodes, int mark_nodes) {
    const auto times = time_grid_nodes(domain, time_nodes);
    const auto marks = mark_grid_nodes(domain, mark_nodes);
    std::vector<EventPoint> queries;
    queries.reserve(times.size() * marks.size());
    for (double t : times) {
        for (const auto& m : marks) queries.push_back(EventPoint{t, m});
    }
    return queries;
}

double sequence_mae(const KernelModel& true_model, const KernelModel& fitted_model,
                    const EventSequence& seq, const std::vector<EventPoint>& queries,
                    double cell_weight) {
    const detail::SeqLambda lt = detail::lambda_over(true_model, seq, queries);
    const detail::SeqLambda lf = detail::lambda_over(fitted_model, seq, queries);
    return cell_weight * (lt.at_queries - lf.at_queries).cwiseAbs().sum();
}

}  // namespace

double intensity_mae(const KernelModel& true_model, const KernelModel& fitted_model,
                     const std::vector<EventSequence>& test_sequences, const EvalGrid& grid,
                     int threads) {
    if (test_sequences.empty()) {
        throw std::invalid_argument("intensity_mae: no test sequences");
    }
    if (!(true_model.domain == fitted_model.domain)) {
        throw std::invalid_argument("intensity_mae: models live on different domains");
    }
    const Domain& domain = true_model.domain;
    for (const auto& seq : test_sequences) {
        if (!(seq.domain == domain)) {
            throw std::invalid_argument("intensity_mae: sequence domain differs from models");
        }
    }
    if (grid.time_nodes < 2 || (domain.mark_dim() > 0 && grid.mark_nodes_per_axis < 2)) {
        throw std::invalid_argument("intensity_mae: need at least two nodes per active axis");
    }

    const auto queries = grid_queries(domain, grid.time_nodes, grid.mark_nodes_per_axis);
    const double cell_weight = domain.measure() / static_cast<double>(queries.size());

    std::vector<double> per_seq(test_sequences.size());
    detail::parallel_for(test_sequences.size(), threads, [&](std::size_t j) {
        per_seq[j] = sequence_mae(true_model, fitted_model, test_sequences[j], queries,
                                  cell_weight);
    });
    double sum = 0.0;
    for (double v : per_seq) sum += v;
    return sum / static_cast<double>(per_seq.size());
}

double predictive_loglik(const KernelModel& fitted_model, const Dataset& test,
                         const MCIntegralConfig& cfg, int threads) {
    return log_likelihood(fitted_model, test, cfg, threads).average;
}

EvalReport evaluate(const KernelModel* true_model, const KernelModel& fitted_model,
                    const Dataset& test, const EvalGrid& grid, const MCIntegralConfig& cfg,
                    int threads) {
    EvalReport report;
    const LogLikResult ll = log_likelihood(fitted_model, test, cfg, threads);
    report.predictive_ll = ll.average;
    report.per_sequence_ll = ll.per_sequence;
    report.floored_evaluations = ll.floored_evaluations;

    if (true_model != nullptr) {
        if (!(true_model->domain == fitted_model.domain)) {
            throw std::invalid_argument("evaluate: models live on different domains");
        }
        const auto queries = grid_queries(test.domain, grid.time_nodes, grid.mark_nodes_per_axis);
        const double cell_weight = test.domain.measure() / static_cast<double>(queries.size());
        report.per_sequence_mae.resize(test.sequences.size());
        detail::parallel_for(test.sequences.size(), threads, [&](std::size_t j) {
            report.per_sequence_mae[j] = sequence_mae(*true_model, fitted_model,
                                                      test.sequences[j], queries, cell_weight);
        });
        double sum = 0.0;
        for (double v : report.per_sequence_mae) sum += v;
        report.mae = sum / static_cast<double>(test.sequences.size());
    }
    return report;
}

void write_eval_report_json(const EvalReport& report, const std::filesystem::path& path) {
    json j;
    j["predictive_ll"] = report.predictive_ll;
    j["per_sequence_ll"] = report.per_sequence_ll;
    j["floored_evaluations"] = report.floored_evaluations;
    if (report.mae) {
        j["mae"] = *report.mae;
        j["per_sequence_mae"] = report.per_sequence_mae;
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << "\n";
    if (!out) throw DataError("write failed for " + path.string());
}

std::vector<std::string> export_figure_data(const KernelModel* true_model,
                                            const KernelModel& fitted_model,
                                            const Dataset& test,
                                            const FigureExportOptions& options,
                                            const std::filesystem::path& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const Domain& domain = fitted_model.domain;
    std::vector<std::string> files;
    json manifest;
    manifest["files"] = json::array();

    auto record = [&](const std::string& name, const std::string& kind,
                      const std::string& model_tag, const json& params = json::object()) {
        files.push_back(name);
        json entry;
        entry["file"] = name;
        entry["kind"] = kind;
        entry["model"] = model_tag;
        entry["params"] = params;
        manifest["files"].push_back(entry);
    };

    std::vector<std::pair<std::string, const KernelModel*>> models;
    models.emplace_back("fitted", &fitted_model);
    if (true_model != nullptr) models.emplace_back("true", true_model);

    // Kernel grids over (t', t) at the mark-box center.
    const auto grid_times = time_grid_nodes(domain, options.kernel_grid_nodes);
    Eigen::VectorXd center(domain.mark_dim());
    for (int a = 0; a < domain.mark_dim(); ++a) {
        center[a] = 0.5 * (domain.mark_lo[a] + domain.mark_hi[a]);
    }
    std::vector<EventPoint> grid_points;
    grid_points.reserve(grid_times.size());
    for (double t : grid_times) grid_points.push_back(EventPoint{t, center});

    for (const auto& [tag, model] : models) {
        const std::string name = "kernel_grid_" + tag + ".csv";
        const Eigen::MatrixXd values = kernel_grid(*model, grid_points, grid_points);
        write_kernel_grid_csv(grid_points, grid_points, values, out_dir / name);
        record(name, "kernel_grid", tag,
               json{{"nodes", options.kernel_grid_nodes}, {"mark", "box center"}});
    }

    // Fixed-slice snapshots for marked models: hold x' fixed, vary (t, m).
    if (domain.mark_dim() > 0) {
        std::vector<EventPoint> slices = options.slice_points;
        if (slices.empty()) {
            for (double frac : {0.25, 0.5, 0.75}) {
                slices.push_back(EventPoint{frac * domain.horizon_T, center});
            }
        }
        const auto slice_queries =
            grid_queries(domain, options.kernel_grid_nodes, options.kernel_grid_nodes);
        for (std::size_t s = 0; s < slices.size(); ++s) {
            for (const auto& [tag, model] : models) {
                const std::string name =
                    "kernel_slice_" + std::to_string(s) + "_" + tag + ".csv";
                const std::vector<EventPoint> prev{slices[s]};
                const Eigen::MatrixXd values = kernel_grid(*model, prev, slice_queries);
                write_kernel_grid_csv(prev, slice_queries, values, out_dir / name);
                json params;
                params["t_prev"] = slices[s].t;
                params["m_prev"] = std::vector<double>(
                    slices[s].mark.data(), slices[s].mark.data() + slices[s].mark.size());
                record(name, "kernel_slice", tag, params);
            }
        }
    }

    // Intensity traces on selected test sequences.
    const auto trace_times = time_grid_nodes(domain, options.trace_time_nodes);
    const auto trace_marks = mark_grid_nodes(domain, options.trace_mark_nodes);
    for (std::size_t idx : options.sequence_indices) {
        if (idx >= test.sequences.size()) continue;
        for (const auto& [tag, model] : models) {
            const std::string name =
                "lambda_trace_seq" + std::to_string(idx) + "_" + tag + ".csv";
            const Eigen::MatrixXd values =
                lambda_trace(*model, test.sequences[idx], trace_times, trace_marks);
            write_lambda_trace_csv(trace_times, trace_marks, values, out_dir / name);
            record(name, "lambda_trace", tag, json{{"sequence", idx}});
        }
    }

    std::ofstream mf(out_dir / "figure_manifest.json");
    if (!mf) throw DataError("cannot write " + (out_dir / "figure_manifest.json").string());
    mf << manifest.dump(2) << "\n";
    files.push_back("figure_manifest.json");
    return files;
}

}  // namespace nsmpp
