#include "nsmpp/net.hpp"

#include <cmath>
#include <stdexcept>

#include "nsmpp/rng.hpp"

namespace nsmpp {

namespace {

constexpr double kSigmoidFloor = 1e-12;

using ConstMatMap = Eigen::Map<const Eigen::MatrixXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;
using MatMap = Eigen::Map<Eigen::MatrixXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;

void affine(const ParamVector& params, const NetLayout::Layer& layer,
            const Eigen::VectorXd& h, Eigen::VectorXd& z) {
    ConstMatMap W(params.data() + layer.w_off, layer.out, layer.in);
    ConstVecMap b(params.data() + layer.b_off, layer.out);
    z.noalias() = W * h;
    z += b;
}

}  // namespace

void validate_net_spec(const NetSpec& spec) {
    if (spec.input_dim < 1) throw std::invalid_argument("NetSpec: input_dim must be >= 1");
    if (spec.trunk_layers.empty()) {
        throw std::invalid_argument("NetSpec: trunk_layers must be nonempty");
    }
    for (int w : spec.trunk_layers) {
        if (w < 1) throw std::invalid_argument("NetSpec: trunk widths must be >= 1");
    }
    for (int w : spec.branch_hidden) {
        if (w < 1) throw std::invalid_argument("NetSpec: branch widths must be >= 1");
    }
    if (spec.branch_count < 2 || spec.branch_count % 2 != 0) {
        throw std::invalid_argument("NetSpec: branch_count must be even and positive");
    }
    if (!(spec.output_scale > 0.0)) {
        throw std::invalid_argument("NetSpec: output_scale must be positive");
    }
}

NetLayout make_layout(const NetSpec& spec) {
    validate_net_spec(spec);
    NetLayout layout;
    Eigen::Index off = 0;
    auto push = [&off](std::vector<NetLayout::Layer>& dst, int in, int out) {
        NetLayout::Layer l;
        l.in = in;
        l.out = out;
        l.w_off = off;
        off += static_cast<Eigen::Index>(in) * out;
        l.b_off = off;
        off += out;
        dst.push_back(l);
    };

    int in = spec.input_dim;
    for (int w : spec.trunk_layers) {
        push(layout.trunk, in, w);
        in = w;
    }
    layout.branches.resize(spec.branch_count);
    for (auto& branch : layout.branches) {
        int bin = spec.embedding_dim();
        for (int w : spec.branch_hidden) {
            push(branch, bin, w);
            bin = w;
        }
        push(branch, bin, 1);  // scalar head
    }
    layout.total_params = off;
    return layout;
}

Eigen::VectorXd event_input(const EventPoint& x) {
    Eigen::VectorXd input(1 + x.mark.size());
    input[0] = x.t;
    input.tail(x.mark.size()) = x.mark;
    return input;
}

double softplus(double z) {
    if (z > 30.0) return z;
    if (z < -30.0) return std::exp(z);
    return std::log1p(std::exp(z));
}

double sigmoid(double z) {
    double s;
    if (z >= 0.0) {
        s = 1.0 / (1.0 + std::exp(-z));
    } else {
        const double e = std::exp(z);
        s = e / (1.0 + e);
    }
    if (s < kSigmoidFloor) s = kSigmoidFloor;
    if (s > 1.0 - kSigmoidFloor) s = 1.0 - kSigmoidFloor;
    return s;
}

double softplus_inverse(double y) {
    if (y > 30.0) return y;
    return std::log(std::expm1(y));
}

FeatureOutput net_forward(const NetSpec& spec, const NetLayout& layout,
                          const ParamVector& params, const Eigen::VectorXd& input,
                          NetWorkspace& ws) {
    if (params.size() != layout.total_params) {
        throw std::invalid_argument("net_forward: parameter vector length mismatch");
    }
    if (input.size() != spec.input_dim) {
        throw std::invalid_argument("net_forward: input dimension mismatch");
    }

    const std::size_t nt = layout.trunk.size();
    ws.trunk_z.resize(nt);
    ws.trunk_h.resize(nt);
    ws.input = input;

    const Eigen::VectorXd* h = &ws.input;
    for (std::size_t l = 0; l < nt; ++l) {
        affine(params, layout.trunk[l], *h, ws.trunk_z[l]);
        ws.trunk_h[l] = ws.trunk_z[l].unaryExpr([](double z) { return softplus(z); });
        h = &ws.trunk_h[l];
    }
    const Eigen::VectorXd& embedding = *h;

    const int heads = spec.branch_count;
    ws.branch_z.resize(heads);
    ws.branch_h.resize(heads);
    ws.head_sigmoid.resize(heads);

    const int rank = spec.rank();
    FeatureOutput out;
    out.psi.resize(rank);
    out.phi.resize(rank);

    const std::size_t nh = spec.branch_hidden.size();
    for (int bidx = 0; bidx < heads; ++bidx) {
        const auto& branch = layout.branches[bidx];
        ws.branch_z[bidx].resize(nh);
        ws.branch_h[bidx].resize(nh);
        const Eigen::VectorXd* bh = &embedding;
        for (std::size_t l = 0; l < nh; ++l) {
            affine(params, branch[l], *bh, ws.branch_z[bidx][l]);
            ws.branch_h[bidx][l] =
                ws.branch_z[bidx][l].unaryExpr([](double z) { return softplus(z); });
            bh = &ws.branch_h[bidx][l];
        }
        const auto& head = branch.back();
        ConstMatMap W(params.data() + head.w_off, 1, head.in);
        const double z = W.row(0).dot(*bh) + params[head.b_off];
        const double sig = sigmoid(z);
        ws.head_sigmoid[bidx] = sig;
        const double value = spec.output_scale * sig;
        if (bidx < rank) {
            out.psi[bidx] = value;
        } else {
            out.phi[bidx - rank] = value;
        }
    }
    return out;
}

FeatureOutput net_forward(const NetSpec& spec, const ParamVector& params, const EventPoint& x) {
    NetWorkspace ws;
    return net_forward(spec, make_layout(spec), params, event_input(x), ws);
}

void net_backward(const NetSpec& spec, const NetLayout& layout, const ParamVector& params,
                  const NetWorkspace& ws, const Eigen::VectorXd& upstream_psi,
                  const Eigen::VectorXd& upstream_phi, ParamVector& grad) {
    const int rank = spec.rank();
    if (upstream_psi.size() != rank || upstream_phi.size() != rank) {
        throw std::invalid_argument("net_backward: upstream length must equal rank");
    }
    if (grad.size() != layout.total_params) {
        throw std::invalid_argument("net_backward: gradient vector length mismatch");
    }

    const std::size_t nt = layout.trunk.size();
    const std::size_t nh = spec.branch_hidden.size();
    const Eigen::VectorXd& embedding = nt > 0 ? ws.trunk_h[nt - 1] : ws.input;

    Eigen::VectorXd d_embedding = Eigen::VectorXd::Zero(embedding.size());
    Eigen::VectorXd dz, dh;

    for (int bidx = 0; bidx < spec.branch_count; ++bidx) {
        const double u = bidx < rank ? upstream_psi[bidx] : upstream_phi[bidx - rank];
        if (u == 0.0) continue;
        const auto& branch = layout.branches[bidx];

        // Head: value = s * sigmoid(z), dvalue/dz = s * sig * (1 - sig).
        const double sig = ws.head_sigmoid[bidx];
        const double dz_head = u * spec.output_scale * sig * (1.0 - sig);

        const Eigen::VectorXd& head_in = nh > 0 ? ws.branch_h[bidx][nh - 1] : embedding;
        const auto& head = branch.back();
        {
            MatMap gW(grad.data() + head.w_off, 1, head.in);
            gW.row(0) += dz_head * head_in.transpose();
            grad[head.b_off] += dz_head;
        }
        ConstMatMap Whead(params.data() + head.w_off, 1, head.in);
        dh = dz_head * Whead.row(0).transpose();

        // Branch hidden layers, in reverse.
        for (std::size_t l = nh; l-- > 0;) {
            dz = dh.cwiseProduct(
                ws.branch_z[bidx][l].unaryExpr([](double z) { return sigmoid(z); }));
            const auto& layer = branch[l];
            const Eigen::VectorXd& lin = l > 0 ? ws.branch_h[bidx][l - 1] : embedding;
            MatMap gW(grad.data() + layer.w_off, layer.out, layer.in);
            gW.noalias() += dz * lin.transpose();
            VecMap gb(grad.data() + layer.b_off, layer.out);
            gb += dz;
            ConstMatMap W(params.data() + layer.w_off, layer.out, layer.in);
            dh.noalias() = W.transpose() * dz;
        }
        d_embedding += dh;
    }

    // Trunk, in reverse, shared by all heads.
    dh = d_embedding;
    for (std::size_t l = nt; l-- > 0;) {
        dz = dh.cwiseProduct(ws.trunk_z[l].unaryExpr([](double z) { return sigmoid(z); }));
        const auto& layer = layout.trunk[l];
        const Eigen::VectorXd& lin = l > 0 ? ws.trunk_h[l - 1] : ws.input;
        MatMap gW(grad.data() + layer.w_off, layer.out, layer.in);
        gW.noalias() += dz * lin.transpose();
        VecMap gb(grad.data() + layer.b_off, layer.out);
        gb += dz;
        ConstMatMap W(params.data() + layer.w_off, layer.out, layer.in);
        dh.noalias() = W.transpose() * dz;
    }
}

ParamVector net_backward(const NetSpec& spec, const ParamVector& params, const EventPoint& x,
                         const Eigen::VectorXd& upstream_psi,
                         const Eigen::VectorXd& upstream_phi) {
    const NetLayout layout = make_layout(spec);
    NetWorkspace ws;
    net_forward(spec, layout, params, event_input(x), ws);
    ParamVector grad = ParamVector::Zero(layout.total_params);
    net_backward(spec, layout, params, ws, upstream_psi, upstream_phi, grad);
    return grad;
}

ParamVector init_params(const NetSpec& spec, std::uint64_t seed) {
    const NetLayout layout = make_layout(spec);
    ParamVector params = ParamVector::Zero(layout.total_params);
    Rng rng(seed);
    auto fill_layer = [&](const NetLayout::Layer& layer) {
        const double a = std::sqrt(6.0 / (layer.in + layer.out));
        const Eigen::Index n = static_cast<Eigen::Index>(layer.in) * layer.out;
        for (Eigen::Index i = 0; i < n; ++i) {
            params[layer.w_off + i] = rng.uniform(-a, a);
        }
        // biases stay zero
    };
    for (const auto& layer : layout.trunk) fill_layer(layer);
    for (const auto& branch : layout.branches) {
        for (const auto& layer : branch) fill_layer(layer);
    }
    return params;
}

}  // namespace nsmpp
