#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>

#include "nsmpp/kernel.hpp"
#include "nsmpp/rng.hpp"
#include "test_util.hpp"

using namespace nsmpp;
using nsmpp::testing::grad_check_worst;

namespace {

double logit(double p) { return std::log(p / (1.0 - p)); }

EventPoint tp(double t) { return EventPoint{t, Eigen::VectorXd(0)}; }

NetSpec tiny_spec(int input_dim, int rank) {
    NetSpec spec;
    spec.input_dim = input_dim;
    spec.trunk_layers = {8, 8, 4};
    spec.branch_count = 2 * rank;
    spec.branch_hidden = {8};
    return spec;
}

KernelModel random_spectral(std::uint64_t seed, int rank = 2) {
    const Domain dom = temporal_domain(100.0);
    return make_spectral_model(dom, 1.0, tiny_spec(1, rank), seed);
}

}  // namespace

TEST_CASE("kernel_eval on the three families") {
    SUBCASE("rigged spectral kernel: nu=2, psi=3, phi=0.5 -> 3.0") {
        const Domain dom = temporal_domain(100.0);
        NetSpec spec = tiny_spec(1, 1);
        const NetLayout layout = make_layout(spec);
        SpectralKernel k;
        k.spec = spec;
        k.params = ParamVector::Zero(layout.total_params);
        // zero weights everywhere; pick head output biases so the scaled
        // sigmoids hit the target feature values
        k.params[layout.branches[0].back().b_off] = logit(3.0 / 100.0);  // psi head
        k.params[layout.branches[1].back().b_off] = logit(0.5 / 100.0);  // phi head
        k.spectrum_raw = Eigen::VectorXd::Constant(1, softplus_inverse(2.0));
        KernelModel model;
        model.kernel = k;
        model.mu = 1.0;
        model.domain = dom;
        CHECK(kernel_eval(model, tp(1.0), tp(2.0)) == doctest::Approx(3.0).epsilon(1e-12));
    }
    SUBCASE("exponential closed form") {
        const KernelModel m = make_exp_model(temporal_domain(100.0), 1.0, 0.5, 1.0);
        CHECK(kernel_eval(m, tp(0.0), tp(1.0)) ==
              doctest::Approx(0.5 * std::exp(-1.0)).epsilon(1e-14));
    }
    SUBCASE("constant basis") {
        const KernelModel m =
            make_basis_model(temporal_domain(100.0), 1.0, Eigen::MatrixXd::Constant(1, 1, 2.0));
        CHECK(kernel_eval(m, tp(7.0), tp(50.0)) == 2.0);
        CHECK(kernel_eval(m, tp(0.25), tp(99.0)) == 2.0);
    }
    SUBCASE("non-causal pairs are rejected") {
        const KernelModel m = make_exp_model(temporal_domain(100.0), 1.0, 0.5, 1.0);
        CHECK_THROWS_AS(kernel_eval(m, tp(2.0), tp(2.0)), std::invalid_argument);
        CHECK_THROWS_AS(kernel_eval(m, tp(3.0), tp(2.0)), std::invalid_argument);
    }
}

TEST_CASE("kernel_sup_bound certifies the pointwise supremum") {
    SUBCASE("spectral: sum_r nu_r s^2") {
        const Domain dom = temporal_domain(100.0);
        KernelModel m = make_spectral_model(dom, 1.0, tiny_spec(1, 5), 3);
        SpectralKernel k = m.spectral_kernel();
        k.spectrum_raw = Eigen::VectorXd::Constant(5, softplus_inverse(1.0));
        m.kernel = k;
        CHECK(kernel_sup_bound(m) == doctest::Approx(50000.0).epsilon(1e-12));
    }
    SUBCASE("exponential: alpha * beta") {
        CHECK(kernel_sup_bound(make_exp_model(temporal_domain(10.0), 1.0, 0.5, 1.0)) == 0.5);
    }
    SUBCASE("random spectral model never exceeds the bound") {
        const KernelModel m = random_spectral(8);
        const double bound = kernel_sup_bound(m);
        Rng rng(99);
        for (int i = 0; i < 100000; ++i) {
            const double a = rng.uniform(0.0, 100.0);
            const double b = rng.uniform(0.0, 100.0);
            const double t0 = std::min(a, b);
            double t1 = std::max(a, b);
            if (t1 == t0) t1 = t0 + 1e-9;
            CHECK(kernel_eval(m, tp(t0), tp(t1)) <= bound);
        }
    }
    SUBCASE("basis bound from |A| with unit basis sup") {
        Eigen::MatrixXd A(2, 2);
        A << 0.5, -0.25, 0.125, 1.0;
        const KernelModel m = make_basis_model(temporal_domain(100.0), 1.0, A);
        const double bound = kernel_sup_bound(m);
        CHECK(bound == doctest::Approx(1.875));
        Rng rng(100);
        for (int i = 0; i < 10000; ++i) {
            const double t0 = rng.uniform(0.0, 99.0);
            const double t1 = rng.uniform(t0 + 1e-9, 100.0);
            CHECK(std::abs(kernel_eval(m, tp(t0), tp(t1))) <= bound);
        }
    }
}

TEST_CASE("kernel_grad") {
    SUBCASE("zero upstream gives a zero gradient") {
        const KernelModel m = random_spectral(5);
        const Eigen::VectorXd g = kernel_grad(m, tp(1.0), tp(2.0), 0.0);
        CHECK(g.norm() == 0.0);
    }
    SUBCASE("basis gradient is the bilinear form b_p(x') b_q(x)") {
        const Domain dom = temporal_domain(100.0);
        const KernelModel m = make_basis_model(dom, 1.0, Eigen::MatrixXd::Zero(2, 2));
        const EventPoint xp = tp(25.0);
        const EventPoint xq = tp(75.0);
        const Eigen::VectorXd g = kernel_grad(m, xp, xq, 1.0);
        const Eigen::VectorXd bp = basis_values(m.basis_kernel(), xp);
        const Eigen::VectorXd bq = basis_values(m.basis_kernel(), xq);
        // column-major packing of the S x S gradient
        for (int p = 0; p < 2; ++p) {
            for (int q = 0; q < 2; ++q) {
                CHECK(g[q * 2 + p] == doctest::Approx(bp[p] * bq[q]).epsilon(1e-14));
            }
        }
        // b_0 = 1, b_1 = cos(pi t / T)
        CHECK(bp[0] == 1.0);
        CHECK(bp[1] == doctest::Approx(std::cos(M_PI * 0.25)).epsilon(1e-14));
    }
    SUBCASE("exponential gradient matches finite differences") {
        const Domain dom = temporal_domain(100.0);
        const KernelModel m = make_exp_model(dom, 1.0, 0.4, 1.3);
        const double upstream = 0.7;
        const Eigen::VectorXd g = kernel_grad(m, tp(2.0), tp(4.5), upstream);
        const double h = 1e-6;
        auto eval_at = [&](double alpha, double beta) {
            return upstream *
                   kernel_eval(make_exp_model(dom, 1.0, alpha, beta), tp(2.0), tp(4.5));
        };
        const double fd_alpha = (eval_at(0.4 + h, 1.3) - eval_at(0.4 - h, 1.3)) / (2 * h);
        const double fd_beta = (eval_at(0.4, 1.3 + h) - eval_at(0.4, 1.3 - h)) / (2 * h);
        CHECK(g[0] == doctest::Approx(fd_alpha).epsilon(1e-7));
        CHECK(g[1] == doctest::Approx(fd_beta).epsilon(1e-7));
    }
    SUBCASE("spectral gradient matches finite differences") {
        const KernelModel m = random_spectral(21);
        const EventPoint xp = tp(30.0);
        const EventPoint xq = tp(60.0);
        const double upstream = 1.3;
        const Eigen::VectorXd analytic = kernel_grad(m, xp, xq, upstream);
        const Eigen::VectorXd theta = get_trainable(m);
        Eigen::VectorXd fd(theta.size());
        const double h = 1e-5;
        for (Eigen::Index i = 0; i < theta.size(); ++i) {
            Eigen::VectorXd tplus = theta, tminus = theta;
            tplus[i] += h;
            tminus[i] -= h;
            fd[i] = upstream *
                    (kernel_eval(with_trainable(m, tplus), xp, xq) -
                     kernel_eval(with_trainable(m, tminus), xp, xq)) /
                    (2 * h);
        }
        const double atol = 1e-7 * analytic.cwiseAbs().maxCoeff();
        CHECK(grad_check_worst(analytic, fd, 1e-4, atol) < 1.0);
    }
}

TEST_CASE("kernel_grid") {
    const Domain dom = temporal_domain(10.0);
    const KernelModel m = make_exp_model(dom, 1.0, 0.5, 1.0);
    std::vector<EventPoint> nodes;
    for (int i = 0; i < 10; ++i) nodes.push_back(tp(i + 0.5));
    const Eigen::MatrixXd grid = kernel_grid(m, nodes, nodes);

    SUBCASE("non-causal cells carry the sentinel") {
        for (int i = 0; i < 10; ++i) {
            for (int j = 0; j <= i; ++j) {
                CHECK(std::isnan(grid(i, j)));
            }
        }
    }
    SUBCASE("rows decay monotonically in t for the stationary kernel") {
        for (int i = 0; i < 9; ++i) {
            for (int j = i + 2; j < 10; ++j) {
                CHECK(grid(i, j) < grid(i, j - 1));
            }
        }
    }
    SUBCASE("a single causal pair reproduces kernel_eval") {
        const Eigen::MatrixXd one = kernel_grid(m, {tp(1.0)}, {tp(2.0)});
        CHECK(one(0, 0) == kernel_eval(m, tp(1.0), tp(2.0)));
    }
    SUBCASE("CSV export writes empty fields for the sentinel") {
        const auto dir = nsmpp::testing::scratch_dir("kernel");
        const auto path = dir / "grid.csv";
        const std::vector<EventPoint> prev{tp(1.0), tp(3.0)};
        const std::vector<EventPoint> query{tp(2.0)};
        write_kernel_grid_csv(prev, query, kernel_grid(m, prev, query), path);
        std::ifstream in(path);
        std::string header, row1, row2;
        std::getline(in, header);
        std::getline(in, row1);
        std::getline(in, row2);
        CHECK(header == "t_prev,t,k");
        CHECK(row1.substr(0, 4) == "1,2,");
        CHECK(row1.size() > 4);  // causal cell has a value
        CHECK(row2 == "3,2,");   // non-causal cell is empty
    }
}

TEST_CASE("stationarity holds for the exponential family") {
    const Domain dom = temporal_domain(256.0);
    const KernelModel exp_m = make_exp_model(dom, 1.0, 0.5, 0.8);
    SUBCASE("dyadic shifts are bit-exact") {
        CHECK(kernel_eval(exp_m, tp(0.25), tp(0.75)) ==
              kernel_eval(exp_m, tp(0.25 + 16.0), tp(0.75 + 16.0)));
    }
    SUBCASE("random shifts agree to rounding") {
        Rng rng(6);
        for (int i = 0; i < 1000; ++i) {
            const double t0 = rng.uniform(0.0, 50.0);
            const double dt = rng.uniform(1e-6, 50.0);
            const double c = rng.uniform(0.0, 100.0);
            const double base = kernel_eval(exp_m, tp(t0), tp(t0 + dt));
            const double shifted = kernel_eval(exp_m, tp(t0 + c), tp(t0 + dt + c));
            CHECK(nsmpp::testing::rel_err(base, shifted) < 1e-9);
        }
    }
}

TEST_CASE("spectrum stays nonnegative and finite under any raw values") {
    SpectralKernel k;
    k.spectrum_raw = Eigen::VectorXd(5);
    k.spectrum_raw << -1e3, -30.0, 0.0, 5.0, 40.0;
    const Eigen::VectorXd nu = k.spectrum();
    for (int r = 0; r < 5; ++r) {
        CHECK(nu[r] >= 0.0);
        CHECK(std::isfinite(nu[r]));
    }
}

TEST_CASE("factored basis kernels reconstruct A") {
    Rng rng(17);
    const int S = 4, R = 2;
    BasisKernel::Factors f;
    f.nu = Eigen::VectorXd(R);
    f.Psi = Eigen::MatrixXd(R, S);
    f.Phi = Eigen::MatrixXd(R, S);
    for (int r = 0; r < R; ++r) {
        f.nu[r] = rng.uniform(0.0, 2.0);
        for (int s = 0; s < S; ++s) {
            f.Psi(r, s) = rng.uniform(-1, 1);
            f.Phi(r, s) = rng.uniform(-1, 1);
        }
    }
    const Eigen::MatrixXd A = basis_matrix_from_factors(f);
    for (int p = 0; p < S; ++p) {
        for (int q = 0; q < S; ++q) {
            double expected = 0.0;
            for (int r = 0; r < R; ++r) expected += f.nu[r] * f.Psi(r, p) * f.Phi(r, q);
            CHECK(std::abs(A(p, q) - expected) < 1e-12);
        }
    }
}

TEST_CASE("trainable packing round-trips") {
    SUBCASE("spectral") {
        const KernelModel m = random_spectral(33);
        const KernelModel back = with_trainable(m, get_trainable(m));
        CHECK(kernel_eval(back, tp(10.0), tp(20.0)) == kernel_eval(m, tp(10.0), tp(20.0)));
    }
    SUBCASE("exponential with trainable mu") {
        KernelModel m = make_exp_model(temporal_domain(10.0), 1.5, 0.3, 2.0);
        m.mu_trainable = true;
        const Eigen::VectorXd theta = get_trainable(m);
        REQUIRE(theta.size() == 3);
        CHECK(theta[0] == 0.3);
        CHECK(theta[1] == 2.0);
        const KernelModel back = with_trainable(m, theta);
        CHECK(back.mu == doctest::Approx(1.5).epsilon(1e-12));
    }
    SUBCASE("basis") {
        Eigen::MatrixXd A(2, 2);
        A << 1.0, 2.0, 3.0, 4.0;
        const KernelModel m = make_basis_model(temporal_domain(10.0), 1.0, A);
        const Eigen::VectorXd theta = get_trainable(m);
        CHECK(theta[0] == 1.0);  // column-major: (0,0)
        CHECK(theta[1] == 3.0);  // (1,0)
        const KernelModel back = with_trainable(m, theta);
        CHECK(back.basis_kernel().A == A);
    }
}

TEST_CASE("graded multi-index enumeration") {
    const auto idx1 = basis_multi_indices(1, 4);
    REQUIRE(idx1.size() == 4);
    CHECK(idx1[3] == std::vector<int>{3});
    const auto idx2 = basis_multi_indices(2, 6);
    REQUIRE(idx2.size() == 6);
    CHECK(idx2[0] == std::vector<int>{0, 0});
    CHECK(idx2[1] == std::vector<int>{0, 1});
    CHECK(idx2[2] == std::vector<int>{1, 0});
    CHECK(idx2[3] == std::vector<int>{0, 2});
    CHECK(idx2[4] == std::vector<int>{1, 1});
    CHECK(idx2[5] == std::vector<int>{2, 0});
}
