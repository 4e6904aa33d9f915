#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "nsmpp/core.hpp"
#include "nsmpp/kernel.hpp"

namespace nsmpp {

/// Monte-Carlo estimation of the intensity integral: n_samples points drawn
/// uniformly on [0,T) x M per sequence, each conditioned on the history
/// before its time. Sample streams are derived from (seed, sequence index),
/// so a fixed config gives bit-identical results across calls.
/// resample_each_step tells the trainer to derive a fresh seed per iteration;
/// the likelihood functions themselves are pure in the config.
struct MCIntegralConfig {
    int n_samples{1000};
    std::uint64_t seed{0};
    bool resample_each_step{true};
};

/// Intensities are floored at this value inside the log (and the matching
/// gradient is zeroed) to keep the likelihood finite for kernel families
/// that can produce nonpositive intensities.
constexpr double kLogFloor = 1e-8;

struct LogLikResult {
    std::vector<double> per_sequence;    // l_j = event_terms[j] - integral_terms[j]
    std::vector<double> event_terms;     // sum_i ln lambda_j(x_i)
    std::vector<double> integral_terms;  // MC estimate of int lambda_j dx
    double average{0.0};                 // (1/M) sum_j l_j
    std::size_t floored_evaluations{0};
};

/// Unbiased MC estimate |X| * mean_n lambda(x_n) of the compensator of one
/// sequence. Uses the sample stream of sequence index 0.
double mc_integral(const KernelModel& model, const EventSequence& seq,
                   const MCIntegralConfig& cfg);

/// Average log-likelihood of the dataset:
/// (1/M) sum_j [ sum_i ln lambda_j(x_i) - int lambda_j dx ].
LogLikResult log_likelihood(const KernelModel& model, const Dataset& dataset,
                            const MCIntegralConfig& cfg, int threads = 1);

/// Gradient of the MC-estimated average log-likelihood with respect to the
/// flat trainable parameters (see kernel.hpp for the packing). The same MC
/// samples back the value and the gradient.
Eigen::VectorXd log_likelihood_grad(const KernelModel& model, const Dataset& batch,
                                    const MCIntegralConfig& cfg, int threads = 1);

/// Value and gradient from one pass over the batch; used by the trainer.
struct LogLikWithGrad {
    LogLikResult value;
    Eigen::VectorXd grad;
};

LogLikWithGrad log_likelihood_with_grad(const KernelModel& model, const Dataset& batch,
                                        const MCIntegralConfig& cfg, int threads = 1);

/// The MC sample points of one sequence (sorted by time); exposed so tests
/// and independent oracle implementations can share the exact sample stream.
std::vector<EventPoint> mc_sample_points(const Domain& domain, const MCIntegralConfig& cfg,
                                         std::size_t sequence_index);

}  // namespace nsmpp
