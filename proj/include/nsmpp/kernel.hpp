#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <variant>
#include <vector>

#include "nsmpp/core.hpp"
#include "nsmpp/net.hpp"

namespace nsmpp {

/// Finite-rank kernel k(x', x) = sum_r nu_r psi_r(x') phi_r(x), nu_r >= 0.
/// The nonnegative spectrum is kept by reparametrization:
/// nu_r = softplus(spectrum_raw_r).
struct SpectralKernel {
    NetSpec spec;
    ParamVector params;
    Eigen::VectorXd spectrum_raw;

    int rank() const { return static_cast<int>(spectrum_raw.size()); }
    Eigen::VectorXd spectrum() const {
        return spectrum_raw.unaryExpr([](double r) { return softplus(r); });
    }
};

/// Stationary baseline k(t', t) = alpha * beta * exp(-beta (t - t')),
/// mark-independent.
struct ExpHawkesKernel {
    double alpha{0.5};
    double beta{1.0};
};

/// Basis-matrix kernel k_A(x', x) = b(x')^T A b(x) over a tensor-product
/// cosine basis, b_J(x) = prod_axis cos(J_axis * pi * u_axis) with each
/// coordinate u rescaled to [0, 1]; multi-indices enumerated in graded order.
/// A may optionally be stored factored as Psi^T diag(nu) Phi.
struct BasisKernel {
    Domain domain;
    Eigen::MatrixXd A;  // S x S

    struct Factors {
        Eigen::VectorXd nu;   // R
        Eigen::MatrixXd Psi;  // R x S
        Eigen::MatrixXd Phi;  // R x S
    };
    std::optional<Factors> factors;

    int size() const { return static_cast<int>(A.rows()); }
};

/// Multi-index enumeration for the cosine tensor basis: graded order
/// (total degree, then lexicographic), truncated to `count` indices.
std::vector<std::vector<int>> basis_multi_indices(int axes, int count);

/// Evaluates all S basis functions at x.
Eigen::VectorXd basis_values(const BasisKernel& kernel, const EventPoint& x);

/// Rebuilds A from the stored factors: A_pq = sum_r nu_r Psi_rp Phi_rq.
Eigen::MatrixXd basis_matrix_from_factors(const BasisKernel::Factors& f);

/// Optional intensity-range validation constants; when enabled the toolkit
/// only warns about violations, it never clamps the model.
struct IntensityBounds {
    double c1{0.0};
    double c2{0.0};
};

enum class KernelFamily { Exponential, Spectral, Basis };

/// One influence-kernel model: a kernel family plus the shared background
/// rate mu. Immutable during evaluation; the trainer replaces it wholesale.
struct KernelModel {
    std::variant<ExpHawkesKernel, SpectralKernel, BasisKernel> kernel;
    double mu{1.0};
    bool mu_trainable{false};
    Domain domain;
    std::optional<IntensityBounds> bounds;

    KernelFamily family() const {
        return static_cast<KernelFamily>(kernel.index() == 0   ? 0
                                         : kernel.index() == 1 ? 1
                                                               : 2);
    }
    const ExpHawkesKernel& exp_kernel() const { return std::get<ExpHawkesKernel>(kernel); }
    const SpectralKernel& spectral_kernel() const { return std::get<SpectralKernel>(kernel); }
    const BasisKernel& basis_kernel() const { return std::get<BasisKernel>(kernel); }
};

KernelModel make_exp_model(const Domain& domain, double mu, double alpha, double beta);

/// Spectral model with seeded Glorot weights and spectrum initialized so
/// nu_r = 1/R.
KernelModel make_spectral_model(const Domain& domain, double mu, const NetSpec& spec,
                                std::uint64_t init_seed);

KernelModel make_basis_model(const Domain& domain, double mu, Eigen::MatrixXd A);

/// k(x_prev, x); requires t(x_prev) < t(x), otherwise throws.
double kernel_eval(const KernelModel& model, const EventPoint& x_prev, const EventPoint& x);

/// Certified pointwise upper bound on the kernel:
/// spectral sum_r nu_r s^2, exponential alpha*beta, basis sum |A_pq|.
double kernel_sup_bound(const KernelModel& model);

/// d(upstream * k(x_prev, x)) / dtheta over the flat trainable parameters
/// (see trainable_count for the packing). The background-rate slot, when
/// trainable, is zero since k does not depend on mu.
Eigen::VectorXd kernel_grad(const KernelModel& model, const EventPoint& x_prev,
                            const EventPoint& x, double upstream);

/// Trainable parameter packing:
///   exponential: [alpha, beta]
///   spectral:    [spectrum_raw(R), net params]
///   basis:       [vec(A) column-major]
/// followed by [mu_raw] when mu_trainable (mu = softplus(mu_raw)).
Eigen::Index trainable_count(const KernelModel& model);
Eigen::VectorXd get_trainable(const KernelModel& model);
KernelModel with_trainable(const KernelModel& model, const Eigen::VectorXd& theta);

/// Kernel evaluated on the product grid prev x query; cells with
/// t(prev) >= t(query) hold NaN (exported as an empty CSV field).
Eigen::MatrixXd kernel_grid(const KernelModel& model, const std::vector<EventPoint>& prev,
                            const std::vector<EventPoint>& query);

/// CSV export, header `t_prev,m_prev...,t,m...,k`, one row per grid cell.
void write_kernel_grid_csv(const std::vector<EventPoint>& prev,
                           const std::vector<EventPoint>& query, const Eigen::MatrixXd& values,
                           const std::filesystem::path& path);

}  // namespace nsmpp
