#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>

#include "nsmpp/kernel.hpp"

namespace nsmpp {

/// Adam moment estimates; persisted with training checkpoints so a run can
/// resume exactly.
struct AdamState {
    std::uint64_t step{0};
    Eigen::VectorXd m;
    Eigen::VectorXd v;
};

/// Binary little-endian checkpoint: magic "NSMP", format version, model
/// family and domain, family payload (including the full flat parameter
/// array), and an optional optimizer-state section. A JSON sidecar
/// `<path>.json` mirrors the structural fields for human inspection.
void save_checkpoint(const KernelModel& model, const std::filesystem::path& path,
                     const AdamState* opt_state = nullptr);

struct LoadedCheckpoint {
    KernelModel model;
    std::optional<AdamState> opt_state;
};

/// Throws DataError naming reader and file versions on a format mismatch.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

/// Structural expectations a caller can assert after loading; mismatches
/// throw DataError naming both the expected and the found value.
struct ModelExpectation {
    std::optional<KernelFamily> family;
    std::optional<int> rank;       // spectral
    std::optional<NetSpec> net;    // spectral
    std::optional<int> basis_size; // basis
};

void check_expectation(const KernelModel& model, const ModelExpectation& expect);

}  // namespace nsmpp
