#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "nsmpp/core.hpp"

namespace nsmpp::testing {

inline double rel_err(double a, double b, double floor = 1e-10) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline double max_rel_err(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                          double floor = 1e-10) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        worst = std::max(worst, rel_err(a[i], b[i], floor));
    }
    return worst;
}

/// Worst violation ratio of |a_i - b_i| <= atol + rtol * max(|a_i|, |b_i|);
/// a gradient check passes when this is below 1. The absolute floor absorbs
/// finite-difference roundoff on coordinates tiny relative to the gradient
/// scale.
inline double grad_check_worst(const Eigen::VectorXd& analytic, const Eigen::VectorXd& fd,
                               double rtol, double atol) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < analytic.size(); ++i) {
        const double tol =
            atol + rtol * std::max(std::abs(analytic[i]), std::abs(fd[i]));
        worst = std::max(worst, std::abs(analytic[i] - fd[i]) / tol);
    }
    return worst;
}

/// Scratch directory unique to the current test binary run.
inline std::filesystem::path scratch_dir(const std::string& tag) {
    const auto dir = std::filesystem::temp_directory_path() /
                     ("nsmpp_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    return dir;
}

inline EventSequence make_temporal_sequence(const Domain& domain,
                                            std::initializer_list<double> times) {
    EventSequence seq;
    seq.domain = domain;
    for (double t : times) seq.events.push_back(EventPoint{t, Eigen::VectorXd(0)});
    return seq;
}

}  // namespace nsmpp::testing
