#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "nsmpp/core.hpp"

namespace nsmpp {

/// Flat trainable parameter storage; the layout below is the index map from
/// (layer, weight/bias) into this vector.
using ParamVector = Eigen::VectorXd;

/// Architecture of the multi-branch feature network: a shared trunk maps the
/// input point to an embedding, and branch_count independent heads map the
/// embedding to scalar features. Heads [0, R) produce psi, heads [R, 2R)
/// produce phi. Trunk and branch hidden layers use softplus; each head output
/// is output_scale * sigmoid, so features live in (0, output_scale).
struct NetSpec {
    int input_dim{1};
    std::vector<int> trunk_layers{128, 128, 10};
    int branch_count{10};
    std::vector<int> branch_hidden{32, 32};
    double output_scale{100.0};

    int rank() const { return branch_count / 2; }
    int embedding_dim() const { return trunk_layers.back(); }

    bool operator==(const NetSpec&) const = default;
};

void validate_net_spec(const NetSpec& spec);

/// Index map: byte offsets of every affine layer's weight block (column-major
/// out x in) and bias block inside the flat ParamVector.
struct NetLayout {
    struct Layer {
        int in{0};
        int out{0};
        Eigen::Index w_off{0};
        Eigen::Index b_off{0};
    };
    std::vector<Layer> trunk;
    std::vector<std::vector<Layer>> branches;
    Eigen::Index total_params{0};
};

NetLayout make_layout(const NetSpec& spec);

/// Feature values at one point: psi[r], phi[r] for r in [0, R).
struct FeatureOutput {
    Eigen::VectorXd psi;
    Eigen::VectorXd phi;
};

/// Cached activations from one forward pass, reused by the backward pass and
/// across calls to avoid reallocation.
struct NetWorkspace {
    std::vector<Eigen::VectorXd> trunk_z;
    std::vector<Eigen::VectorXd> trunk_h;
    std::vector<std::vector<Eigen::VectorXd>> branch_z;
    std::vector<std::vector<Eigen::VectorXd>> branch_h;
    Eigen::VectorXd head_sigmoid;  // per head, the sigmoid value in (0,1)
    Eigen::VectorXd input;
    Eigen::VectorXd scratch;
};

/// Builds the network input [t, m...] for an event point.
Eigen::VectorXd event_input(const EventPoint& x);

/// Numerically stable softplus ln(1+e^z): z for z > 30, e^z for z < -30.
double softplus(double z);
/// Logistic sigmoid, clamped to the open interval (0, 1).
double sigmoid(double z);
/// Inverse of softplus, ln(e^y - 1) for y > 0.
double softplus_inverse(double y);

/// Forward pass; deterministic, pure in (spec, params, input).
FeatureOutput net_forward(const NetSpec& spec, const NetLayout& layout,
                          const ParamVector& params, const Eigen::VectorXd& input,
                          NetWorkspace& ws);

/// Convenience forward without an external workspace.
FeatureOutput net_forward(const NetSpec& spec, const ParamVector& params,
                          const EventPoint& x);

/// Accumulates d(sum_r u_psi[r] psi_r + u_phi[r] phi_r)/dparams into grad,
/// reusing the activations cached in ws by the matching net_forward call.
/// grad must have layout.total_params entries.
void net_backward(const NetSpec& spec, const NetLayout& layout, const ParamVector& params,
                  const NetWorkspace& ws, const Eigen::VectorXd& upstream_psi,
                  const Eigen::VectorXd& upstream_phi, ParamVector& grad);

/// Fresh-gradient convenience wrapper around forward + backward.
ParamVector net_backward(const NetSpec& spec, const ParamVector& params, const EventPoint& x,
                         const Eigen::VectorXd& upstream_psi,
                         const Eigen::VectorXd& upstream_phi);

/// Glorot-uniform weights, zero biases, reproducible from the seed.
ParamVector init_params(const NetSpec& spec, std::uint64_t seed);

}  // namespace nsmpp
