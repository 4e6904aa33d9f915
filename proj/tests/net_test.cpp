#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "nsmpp/net.hpp"
#include "nsmpp/rng.hpp"
#include "test_util.hpp"

using namespace nsmpp;
using nsmpp::testing::max_rel_err;
using nsmpp::testing::rel_err;

namespace {

NetSpec small_spec() {
    NetSpec spec;
    spec.input_dim = 2;
    spec.trunk_layers = {8, 8, 4};
    spec.branch_count = 4;  // R = 2
    spec.branch_hidden = {8};
    spec.output_scale = 100.0;
    return spec;
}

EventPoint marked_point(double t, double m) {
    return EventPoint{t, Eigen::VectorXd::Constant(1, m)};
}

// Straight-line reimplementation of the forward arithmetic with plain loops,
// tracking offsets independently of NetLayout. Used as the duplicate oracle.
std::pair<std::vector<double>, std::vector<double>> oracle_forward(
    const NetSpec& spec, const Eigen::VectorXd& params, const Eigen::VectorXd& input) {
    auto softplus_ref = [](double z) {
        if (z > 30.0) return z;
        if (z < -30.0) return std::exp(z);
        return std::log1p(std::exp(z));
    };
    auto sigmoid_ref = [](double z) {
        double s = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
        s = std::min(std::max(s, 1e-12), 1.0 - 1e-12);
        return s;
    };

    std::size_t off = 0;
    auto affine = [&](const std::vector<double>& h, int out) {
        const int in = static_cast<int>(h.size());
        std::vector<double> z(out, 0.0);
        // column-major weights: W(r, c) at off + c * out + r
        for (int c = 0; c < in; ++c) {
            for (int r = 0; r < out; ++r) {
                z[r] += params[off + static_cast<std::size_t>(c) * out + r] * h[c];
            }
        }
        off += static_cast<std::size_t>(in) * out;
        for (int r = 0; r < out; ++r) z[r] += params[off + r];
        off += out;
        return z;
    };

    std::vector<double> h(input.data(), input.data() + input.size());
    for (int width : spec.trunk_layers) {
        auto z = affine(h, width);
        for (double& v : z) v = softplus_ref(v);
        h = std::move(z);
    }

    const int rank = spec.branch_count / 2;
    std::vector<double> psi(rank), phi(rank);
    for (int b = 0; b < spec.branch_count; ++b) {
        std::vector<double> bh = h;
        for (int width : spec.branch_hidden) {
            auto z = affine(bh, width);
            for (double& v : z) v = softplus_ref(v);
            bh = std::move(z);
        }
        auto z = affine(bh, 1);
        const double value = spec.output_scale * sigmoid_ref(z[0]);
        if (b < rank) {
            psi[b] = value;
        } else {
            phi[b - rank] = value;
        }
    }
    return {psi, phi};
}

}  // namespace

TEST_CASE("zero parameters give the sigmoid midpoint on every head") {
    const NetSpec spec = small_spec();
    const NetLayout layout = make_layout(spec);
    const ParamVector params = ParamVector::Zero(layout.total_params);
    const FeatureOutput out = net_forward(spec, params, marked_point(3.0, 40.0));
    for (int r = 0; r < spec.rank(); ++r) {
        CHECK(out.psi[r] == doctest::Approx(50.0).epsilon(1e-14));
        CHECK(out.phi[r] == doctest::Approx(50.0).epsilon(1e-14));
    }
}

TEST_CASE("outputs stay strictly inside (0, s)") {
    const NetSpec spec = small_spec();
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        ParamVector params = init_params(spec, derive_seed(11, "net", trial));
        // occasionally blow up the magnitudes to press on the sigmoid tails
        if (trial % 5 == 0) params *= 50.0;
        const FeatureOutput out =
            net_forward(spec, params, marked_point(rng.uniform(0, 100), rng.uniform(0, 100)));
        for (int r = 0; r < spec.rank(); ++r) {
            CHECK(out.psi[r] > 0.0);
            CHECK(out.psi[r] < spec.output_scale);
            CHECK(out.phi[r] > 0.0);
            CHECK(out.phi[r] < spec.output_scale);
        }
    }
}

TEST_CASE("forward matches the straight-line oracle") {
    const NetSpec spec = small_spec();
    Rng rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        const ParamVector params = init_params(spec, derive_seed(23, "oracle", trial));
        const EventPoint x = marked_point(rng.uniform(0, 100), rng.uniform(0, 100));
        const FeatureOutput out = net_forward(spec, params, x);
        const auto [psi, phi] = oracle_forward(spec, params, event_input(x));
        for (int r = 0; r < spec.rank(); ++r) {
            CHECK(rel_err(out.psi[r], psi[r]) < 1e-12);
            CHECK(rel_err(out.phi[r], phi[r]) < 1e-12);
        }
    }
}

TEST_CASE("forward is bit-deterministic") {
    const NetSpec spec = small_spec();
    const ParamVector params = init_params(spec, 5);
    const EventPoint x = marked_point(17.0, 3.0);
    const FeatureOutput a = net_forward(spec, params, x);
    const FeatureOutput b = net_forward(spec, params, x);
    CHECK(a.psi == b.psi);
    CHECK(a.phi == b.phi);
}

TEST_CASE("backward is linear in the upstream") {
    const NetSpec spec = small_spec();
    const ParamVector params = init_params(spec, 9);
    const EventPoint x = marked_point(12.0, 70.0);
    const int R = spec.rank();

    SUBCASE("zero upstream gives a zero gradient") {
        const ParamVector g = net_backward(spec, params, x, Eigen::VectorXd::Zero(R),
                                           Eigen::VectorXd::Zero(R));
        CHECK(g.norm() == 0.0);
    }
    SUBCASE("upstream additivity") {
        Rng rng(3);
        Eigen::VectorXd u1(R), u2(R), v1(R), v2(R);
        for (int r = 0; r < R; ++r) {
            u1[r] = rng.uniform(-1, 1);
            u2[r] = rng.uniform(-1, 1);
            v1[r] = rng.uniform(-1, 1);
            v2[r] = rng.uniform(-1, 1);
        }
        const ParamVector sum = net_backward(spec, params, x, u1 + u2, v1 + v2);
        const ParamVector parts =
            net_backward(spec, params, x, u1, v1) + net_backward(spec, params, x, u2, v2);
        CHECK(max_rel_err(sum, parts, 1e-8) < 1e-12);
    }
}

namespace {

double loss_at(const NetSpec& spec, const NetLayout& layout, const ParamVector& params,
               const Eigen::VectorXd& input, const Eigen::VectorXd& u_psi,
               const Eigen::VectorXd& u_phi) {
    NetWorkspace ws;
    const FeatureOutput out = net_forward(spec, layout, params, input, ws);
    return u_psi.dot(out.psi) + u_phi.dot(out.phi);
}

}  // namespace

TEST_CASE("backward matches central finite differences on the small net") {
    const NetSpec spec = small_spec();
    const NetLayout layout = make_layout(spec);
    Rng rng(77);
    const ParamVector params = init_params(spec, 31);
    const EventPoint x = marked_point(42.0, 13.0);
    const int R = spec.rank();
    Eigen::VectorXd u_psi(R), u_phi(R);
    for (int r = 0; r < R; ++r) {
        u_psi[r] = rng.uniform(-1, 1);
        u_phi[r] = rng.uniform(-1, 1);
    }

    const ParamVector analytic = net_backward(spec, params, x, u_psi, u_phi);
    const double h = 1e-5;
    ParamVector fd(layout.total_params);
    for (Eigen::Index i = 0; i < layout.total_params; ++i) {
        ParamVector p = params;
        p[i] = params[i] + h;
        const double up = loss_at(spec, layout, p, event_input(x), u_psi, u_phi);
        p[i] = params[i] - h;
        const double dn = loss_at(spec, layout, p, event_input(x), u_psi, u_phi);
        fd[i] = (up - dn) / (2.0 * h);
    }
    // absolute floor scaled to the gradient magnitude absorbs FD roundoff
    const double atol = 1e-7 * analytic.cwiseAbs().maxCoeff();
    CHECK(nsmpp::testing::grad_check_worst(analytic, fd, 1e-5, atol) < 1.0);
}

TEST_CASE("gradient check across the default layer shapes") {
    // Default architecture; finite differences on coordinates sampled from
    // every layer, at random parameter points.
    NetSpec spec;  // trunk {128,128,10}, branches {32,32}, 2R = 10
    spec.input_dim = 2;
    const NetLayout layout = make_layout(spec);
    const int R = spec.rank();

    std::vector<Eigen::Index> probes;
    auto add_probes = [&](const NetLayout::Layer& layer) {
        probes.push_back(layer.w_off);
        probes.push_back(layer.w_off + layer.in * layer.out / 2);
        probes.push_back(layer.b_off + layer.out / 2);
    };
    for (const auto& layer : layout.trunk) add_probes(layer);
    for (const auto& layer : layout.branches[0]) add_probes(layer);
    for (const auto& layer : layout.branches[layout.branches.size() - 1]) add_probes(layer);

    Rng rng(123);
    double worst = 0.0;
    for (int point = 0; point < 50; ++point) {
        const ParamVector params = init_params(spec, derive_seed(123, "gc", point));
        const EventPoint x = marked_point(rng.uniform(0, 100), rng.uniform(0, 100));
        Eigen::VectorXd u_psi(R), u_phi(R);
        for (int r = 0; r < R; ++r) {
            u_psi[r] = rng.uniform(-1, 1);
            u_phi[r] = rng.uniform(-1, 1);
        }
        const ParamVector analytic = net_backward(spec, params, x, u_psi, u_phi);
        const double h = 1e-5;
        const double atol = 1e-7 * analytic.cwiseAbs().maxCoeff();
        for (Eigen::Index i : probes) {
            ParamVector p = params;
            p[i] = params[i] + h;
            const double up = loss_at(spec, layout, p, event_input(x), u_psi, u_phi);
            p[i] = params[i] - h;
            const double dn = loss_at(spec, layout, p, event_input(x), u_psi, u_phi);
            const double fd = (up - dn) / (2.0 * h);
            const double tol = atol + 1e-4 * std::max(std::abs(analytic[i]), std::abs(fd));
            worst = std::max(worst, std::abs(analytic[i] - fd) / tol);
        }
    }
    CHECK(worst < 1.0);
}

TEST_CASE("init_params contract") {
    NetSpec spec;
    spec.input_dim = 10;  // not used by the bound check below, but keeps shapes honest
    spec.trunk_layers = {10};
    spec.branch_count = 2;
    spec.branch_hidden = {32};

    SUBCASE("same seed reproduces, different seeds differ") {
        const ParamVector a = init_params(spec, 99);
        const ParamVector b = init_params(spec, 99);
        const ParamVector c = init_params(spec, 100);
        CHECK(a == b);
        CHECK(a != c);
    }
    SUBCASE("weights respect the Glorot bound, biases are zero") {
        const NetLayout layout = make_layout(spec);
        const ParamVector params = init_params(spec, 4);
        // branch hidden layer has fan_in 10, fan_out 32
        const auto& layer = layout.branches[0][0];
        REQUIRE(layer.in == 10);
        REQUIRE(layer.out == 32);
        const double bound = std::sqrt(6.0 / 42.0);
        for (Eigen::Index i = 0; i < layer.in * layer.out; ++i) {
            CHECK(std::abs(params[layer.w_off + i]) <= bound);
        }
        for (int i = 0; i < layer.out; ++i) {
            CHECK(params[layer.b_off + i] == 0.0);
        }
    }
}

TEST_CASE("dimension mismatches are rejected") {
    const NetSpec spec = small_spec();
    const NetLayout layout = make_layout(spec);
    ParamVector bad = ParamVector::Zero(layout.total_params - 1);
    NetWorkspace ws;
    CHECK_THROWS_AS(net_forward(spec, layout, bad, Eigen::VectorXd::Zero(2), ws),
                    std::invalid_argument);
    ParamVector good = ParamVector::Zero(layout.total_params);
    CHECK_THROWS_AS(net_forward(spec, layout, good, Eigen::VectorXd::Zero(3), ws),
                    std::invalid_argument);
}
