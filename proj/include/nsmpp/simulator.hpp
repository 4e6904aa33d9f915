#pragma once

#include <cstdint>
#include <vector>

#include "nsmpp/core.hpp"
#include "nsmpp/kernel.hpp"

namespace nsmpp {

/// Thinning simulation config. The dominating rate is the global bound
/// lambda_bar = mu + B * |history| with B = kernel_sup_bound(model),
/// recomputed after each accepted event; it upper-bounds the intensity
/// pointwise for every kernel family, decaying or not.
///
/// printed_accept_rule switches to the as-printed reference variant of the
/// pseudocode this sampler was derived from (bound taken from the intensity
/// at the current time and previous mark, acceptance when D * bound exceeds
/// the candidate intensity). That variant is neither a valid dominating
/// scheme nor the standard accept direction; it exists for documentation
/// and comparison only and is never used by the toolkit itself.
struct SimConfig {
    KernelModel model;
    Domain domain;
    std::uint64_t seed{0};
    std::size_t max_events{100000};
    bool printed_accept_rule{false};
};

struct SimResult {
    EventSequence sequence;
    bool hit_max_events{false};  // explosive regime: generation stopped early
    std::size_t candidates{0};
};

/// Simulates one trajectory on [0, T) x M by thinning: candidate gaps are
/// exponential with rate lambda_bar * |M|, marks uniform on M, and a
/// candidate is accepted with probability lambda(candidate) / lambda_bar.
/// Throws std::logic_error if the certified bound is ever violated.
SimResult simulate(const SimConfig& cfg);

struct SimDatasetResult {
    Dataset dataset;
    std::vector<std::uint8_t> truncated;  // per-sequence hit_max_events flags
    std::size_t total_candidates{0};
};

/// n independent sequences; sequence i uses the derived seed
/// derive_seed(cfg.seed, "sim-seq", i) so it is reproducible in isolation.
SimDatasetResult simulate_dataset(const SimConfig& cfg, std::size_t n_sequences,
                                  int threads = 1);

/// Rescales a spectral model's spectrum so its mean offspring count per event
/// (MC estimate of the branching ratio over the model domain) hits `target`.
/// Keeps randomly initialized generator models subcritical. Deterministic in
/// the seed; the raw pre-scaling estimate is returned through `estimated`.
KernelModel calibrate_spectral_branching(const KernelModel& model, double target,
                                         std::uint64_t seed, double* estimated = nullptr);

}  // namespace nsmpp
