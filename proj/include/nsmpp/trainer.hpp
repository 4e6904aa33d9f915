#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <vector>

#include "nsmpp/checkpoint.hpp"
#include "nsmpp/core.hpp"
#include "nsmpp/kernel.hpp"
#include "nsmpp/likelihood.hpp"

namespace nsmpp {

/// Minibatch stochastic-gradient maximum likelihood with Adam ascent steps.
struct TrainConfig {
    double learning_rate{1e-2};
    int batch_size{32};
    int iterations{1000};
    MCIntegralConfig mc{};
    std::uint64_t seed{0};
    int checkpoint_every{50};       // holdout-evaluation period (iterations)
    double holdout_fraction{0.2};
    double clip_norm{100.0};        // gradient-norm clipping threshold
    int threads{1};
    double adam_beta1{0.9};
    double adam_beta2{0.999};
    double adam_eps{1e-8};
};

struct TrainTrace {
    struct Entry {
        int iteration{0};
        double batch_ll{0.0};
        double grad_norm{0.0};  // before clipping
        std::optional<double> holdout_ll;
        double secs{0.0};
        Eigen::VectorXd spectrum;  // nu_r after the step; empty for non-spectral models
    };
    std::vector<Entry> entries;
};

struct TrainResult {
    KernelModel model;  // parameters with the best periodic holdout ll
    TrainTrace trace;
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> holdout_indices;
    double best_holdout_ll{0.0};
    int best_iteration{0};
    AdamState final_opt_state;
};

/// Non-finite loss or gradient aborts the run; the exception carries the
/// offending iteration and the last finite model so callers can checkpoint.
class TrainAbortError : public std::runtime_error {
  public:
    TrainAbortError(int iteration, KernelModel last_finite, const std::string& what)
        : std::runtime_error(what), iteration_(iteration), last_finite_(std::move(last_finite)) {}
    int iteration() const { return iteration_; }
    const KernelModel& last_finite_model() const { return last_finite_; }

  private:
    int iteration_;
    KernelModel last_finite_;
};

/// Splits the dataset by cfg.holdout_fraction (seeded permutation), then runs
/// cfg.iterations Adam ascent steps on minibatches drawn without replacement
/// per epoch and reshuffled each epoch. Holdout log-likelihood is evaluated
/// every checkpoint_every iterations with a fixed MC stream; the returned
/// model is the best-holdout iterate (the last one when there is no holdout).
TrainResult train(const KernelModel& init, const Dataset& dataset, const TrainConfig& cfg);

/// CSV export `iter,batch_ll,grad_norm,holdout_ll,secs`; holdout_ll is empty
/// on iterations without a holdout evaluation.
void write_trace_csv(const TrainTrace& trace, const std::filesystem::path& path);

}  // namespace nsmpp
