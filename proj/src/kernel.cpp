#include "nsmpp/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "nsmpp/dataset_io.hpp"

namespace nsmpp {

namespace {

void require_causal(const EventPoint& x_prev, const EventPoint& x) {
    if (!(x_prev.t < x.t)) {
        throw std::invalid_argument("kernel: non-causal pair, t_prev must be < t");
    }
}

}  // namespace

std::vector<std::vector<int>> basis_multi_indices(int axes, int count) {
    std::vector<std::vector<int>> out;
    out.reserve(count);
    // Graded order: total degree ascending, lexicographic within a degree.
    for (int degree = 0; static_cast<int>(out.size()) < count; ++degree) {
        std::vector<std::vector<int>> of_degree;
        std::vector<int> cur(axes, 0);
        auto rec = [&](auto&& self, int axis, int remaining) -> void {
            if (axis == axes - 1) {
                cur[axis] = remaining;
                of_degree.push_back(cur);
                return;
            }
            for (int v = 0; v <= remaining; ++v) {
                cur[axis] = v;
                self(self, axis + 1, remaining - v);
            }
        };
        rec(rec, 0, degree);
        for (auto& mi : of_degree) {
            out.push_back(std::move(mi));
            if (static_cast<int>(out.size()) == count) break;
        }
    }
    return out;
}

Eigen::VectorXd basis_values(const BasisKernel& kernel, const EventPoint& x) {
    const Domain& dom = kernel.domain;
    const int axes = 1 + dom.mark_dim();
    Eigen::VectorXd u(axes);
    u[0] = x.t / dom.horizon_T;
    for (int a = 0; a < dom.mark_dim(); ++a) {
        u[a + 1] = (x.mark[a] - dom.mark_lo[a]) / (dom.mark_hi[a] - dom.mark_lo[a]);
    }
    const auto indices = basis_multi_indices(axes, kernel.size());
    Eigen::VectorXd b(kernel.size());
    for (int i = 0; i < kernel.size(); ++i) {
        double v = 1.0;
        for (int a = 0; a < axes; ++a) {
            if (indices[i][a] != 0) v *= std::cos(indices[i][a] * M_PI * u[a]);
        }
        b[i] = v;
    }
    return b;
}

Eigen::MatrixXd basis_matrix_from_factors(const BasisKernel::Factors& f) {
    return f.Psi.transpose() * f.nu.asDiagonal() * f.Phi;
}

KernelModel make_exp_model(const Domain& domain, double mu, double alpha, double beta) {
    validate_domain(domain);
    if (!(alpha >= 0.0)) throw std::invalid_argument("ExpHawkesKernel: alpha must be >= 0");
    if (!(beta > 0.0)) throw std::invalid_argument("ExpHawkesKernel: beta must be > 0");
    if (!(mu >= 0.0)) throw std::invalid_argument("KernelModel: mu must be >= 0");
    KernelModel m;
    m.kernel = ExpHawkesKernel{alpha, beta};
    m.mu = mu;
    m.domain = domain;
    return m;
}

KernelModel make_spectral_model(const Domain& domain, double mu, const NetSpec& spec,
                                std::uint64_t init_seed) {
    validate_domain(domain);
    validate_net_spec(spec);
    if (spec.input_dim != 1 + domain.mark_dim()) {
        throw std::invalid_argument("make_spectral_model: input_dim must be 1 + mark_dim");
    }
    SpectralKernel k;
    k.spec = spec;
    k.params = init_params(spec, init_seed);
    const int rank = spec.rank();
    k.spectrum_raw =
        Eigen::VectorXd::Constant(rank, softplus_inverse(1.0 / static_cast<double>(rank)));
    KernelModel m;
    m.kernel = std::move(k);
    m.mu = mu;
    m.domain = domain;
    return m;
}

KernelModel make_basis_model(const Domain& domain, double mu, Eigen::MatrixXd A) {
    validate_domain(domain);
    if (A.rows() != A.cols() || A.rows() < 1) {
        throw std::invalid_argument("BasisKernel: A must be square and nonempty");
    }
    BasisKernel k;
    k.domain = domain;
    k.A = std::move(A);
    KernelModel m;
    m.kernel = std::move(k);
    m.mu = mu;
    m.domain = domain;
    return m;
}

double kernel_eval(const KernelModel& model, const EventPoint& x_prev, const EventPoint& x) {
    require_causal(x_prev, x);
    return std::visit(
        [&](const auto& k) -> double {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, ExpHawkesKernel>) {
                return k.alpha * k.beta * std::exp(-k.beta * (x.t - x_prev.t));
            } else if constexpr (std::is_same_v<T, SpectralKernel>) {
                const FeatureOutput prev = net_forward(k.spec, k.params, x_prev);
                const FeatureOutput cur = net_forward(k.spec, k.params, x);
                return k.spectrum().dot(prev.psi.cwiseProduct(cur.phi));
            } else {
                const Eigen::VectorXd bp = basis_values(k, x_prev);
                const Eigen::VectorXd bq = basis_values(k, x);
                return bp.dot(k.A * bq);
            }
        },
        model.kernel);
}

double kernel_sup_bound(const KernelModel& model) {
    return std::visit(
        [&](const auto& k) -> double {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, ExpHawkesKernel>) {
                return k.alpha * k.beta;
            } else if constexpr (std::is_same_v<T, SpectralKernel>) {
                const double s = k.spec.output_scale;
                return k.spectrum().sum() * s * s;
            } else {
                // |b_i| <= 1 for the cosine basis.
                return k.A.cwiseAbs().sum();
            }
        },
        model.kernel);
}

Eigen::Index trainable_count(const KernelModel& model) {
    Eigen::Index n = std::visit(
        [&](const auto& k) -> Eigen::Index {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, ExpHawkesKernel>) {
                return 2;
            } else if constexpr (std::is_same_v<T, SpectralKernel>) {
                return k.spectrum_raw.size() + k.params.size();
            } else {
                return k.A.size();
            }
        },
        model.kernel);
    if (model.mu_trainable) n += 1;
    return n;
}

Eigen::VectorXd get_trainable(const KernelModel& model) {
    Eigen::VectorXd theta(trainable_count(model));
    std::visit(
        [&](const auto& k) {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, ExpHawkesKernel>) {
                theta[0] = k.alpha;
                theta[1] = k.beta;
            } else if constexpr (std::is_same_v<T, SpectralKernel>) {
                theta.head(k.spectrum_raw.size()) = k.spectrum_raw;
                theta.segment(k.spectrum_raw.size(), k.params.size()) = k.params;
            } else {
                theta.head(k.A.size()) =
                    Eigen::Map<const Eigen::VectorXd>(k.A.data(), k.A.size());
            }
        },
        model.kernel);
    if (model.mu_trainable) theta[theta.size() - 1] = softplus_inverse(model.mu);
    return theta;
}

KernelModel with_trainable(const KernelModel& model, const Eigen::VectorXd& theta) {
    if (theta.size() != trainable_count(model)) {
        throw std::invalid_argument("with_trainable: parameter vector length mismatch");
    }
    KernelModel out = model;
    std::visit(
        [&](auto& k) {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, ExpHawkesKernel>) {
                k.alpha = theta[0];
                k.beta = theta[1];
            } else if constexpr (std::is_same_v<T, SpectralKernel>) {
                k.spectrum_raw = theta.head(k.spectrum_raw.size());
                k.params = theta.segment(k.spectrum_raw.size(), k.params.size());
            } else {
                k.A = Eigen::Map<const Eigen::MatrixXd>(theta.data(), k.A.rows(), k.A.cols());
                k.factors.reset();  // factors no longer describe A
            }
        },
        out.kernel);
    if (out.mu_trainable) out.mu = softplus(theta[theta.size() - 1]);
    return out;
}

Eigen::VectorXd kernel_grad(const KernelModel& model, const EventPoint& x_prev,
                            const EventPoint& x, double upstream) {
    require_causal(x_prev, x);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(trainable_count(model));
    if (upstream == 0.0) return grad;
    std::visit(
        [&](const auto& k) {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, ExpHawkesKernel>) {
                const double dt = x.t - x_prev.t;
                const double e = std::exp(-k.beta * dt);
                grad[0] = upstream * k.beta * e;
                grad[1] = upstream * k.alpha * e * (1.0 - k.beta * dt);
            } else if constexpr (std::is_same_v<T, SpectralKernel>) {
                const NetLayout layout = make_layout(k.spec);
                NetWorkspace ws_prev, ws_cur;
                const FeatureOutput prev =
                    net_forward(k.spec, layout, k.params, event_input(x_prev), ws_prev);
                const FeatureOutput cur =
                    net_forward(k.spec, layout, k.params, event_input(x), ws_cur);
                const Eigen::VectorXd nu = k.spectrum();
                const int R = k.rank();

                // d k / d rho_r = sigmoid(rho_r) * psi_r(x') * phi_r(x)
                for (int r = 0; r < R; ++r) {
                    grad[r] = upstream * sigmoid(k.spectrum_raw[r]) * prev.psi[r] * cur.phi[r];
                }

                Eigen::VectorXd net_grad = Eigen::VectorXd::Zero(layout.total_params);
                const Eigen::VectorXd zero = Eigen::VectorXd::Zero(R);
                // through psi(x'):
                Eigen::VectorXd up_psi = upstream * nu.cwiseProduct(cur.phi);
                net_backward(k.spec, layout, k.params, ws_prev, up_psi, zero, net_grad);
                // through phi(x):
                Eigen::VectorXd up_phi = upstream * nu.cwiseProduct(prev.psi);
                net_backward(k.spec, layout, k.params, ws_cur, zero, up_phi, net_grad);
                grad.segment(R, layout.total_params) = net_grad;
            } else {
                const Eigen::VectorXd bp = basis_values(k, x_prev);
                const Eigen::VectorXd bq = basis_values(k, x);
                Eigen::Map<Eigen::MatrixXd> G(grad.data(), k.A.rows(), k.A.cols());
                G.noalias() = upstream * bp * bq.transpose();
            }
        },
        model.kernel);
    return grad;
}

Eigen::MatrixXd kernel_grid(const KernelModel& model, const std::vector<EventPoint>& prev,
                            const std::vector<EventPoint>& query) {
    Eigen::MatrixXd values(prev.size(), query.size());
    values.setConstant(std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < prev.size(); ++i) {
        for (std::size_t j = 0; j < query.size(); ++j) {
            if (prev[i].t < query[j].t) {
                values(i, j) = kernel_eval(model, prev[i], query[j]);
            }
        }
    }
    return values;
}

void write_kernel_grid_csv(const std::vector<EventPoint>& prev,
                           const std::vector<EventPoint>& query, const Eigen::MatrixXd& values,
                           const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    const int d = prev.empty() ? 0 : static_cast<int>(prev.front().mark.size());
    out << "t_prev";
    for (int a = 0; a < d; ++a) out << ",m_prev" << (a + 1);
    out << ",t";
    for (int a = 0; a < d; ++a) out << ",m" << (a + 1);
    out << ",k\n";
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            const EventPoint& xp = prev[i];
            const EventPoint& xq = query[j];
            out << format_double(xp.t);
            for (int a = 0; a < d; ++a) out << ',' << format_double(xp.mark[a]);
            out << ',' << format_double(xq.t);
            for (int a = 0; a < d; ++a) out << ',' << format_double(xq.mark[a]);
            out << ',';
            if (!std::isnan(values(i, j))) out << format_double(values(i, j));
            out << "\n";
        }
    }
    if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace nsmpp
