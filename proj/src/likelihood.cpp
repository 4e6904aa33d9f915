#include "nsmpp/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lambda_sweep.hpp"
#include "nsmpp/rng.hpp"
#include "parallel.hpp"

namespace nsmpp {

namespace {

struct SeqTerms {
    double event_term{0.0};
    double integral{0.0};
    std::size_t floored{0};
};

// Merged ascending order over events and sorted queries; queries precede an
// event at the same time (a query at t_i does not see event i).
std::vector<std::pair<bool, std::size_t>> merged_order(const EventSequence& seq,
                                                       const std::vector<EventPoint>& queries) {
    std::vector<std::pair<bool, std::size_t>> order;
    order.reserve(seq.events.size() + queries.size());
    std::size_t ei = 0, qi = 0;
    while (ei < seq.events.size() || qi < queries.size()) {
        const bool take_query = qi < queries.size() &&
                                (ei == seq.events.size() || queries[qi].t <= seq.events[ei].t);
        if (take_query) {
            order.emplace_back(false, qi++);
        } else {
            order.emplace_back(true, ei++);
        }
    }
    return order;
}

double floored_log(double lambda, std::size_t& floored) {
    if (lambda > kLogFloor) return std::log(lambda);
    ++floored;
    return std::log(kLogFloor);
}

// d ln(max(lambda, floor)) / d lambda
double event_weight(double lambda) { return lambda > kLogFloor ? 1.0 / lambda : 0.0; }

SeqTerms value_terms(const KernelModel& model, const EventSequence& seq,
                     const std::vector<EventPoint>& samples) {
    const detail::SeqLambda lam = detail::lambda_over(model, seq, samples);
    SeqTerms terms;
    for (Eigen::Index i = 0; i < lam.at_events.size(); ++i) {
        terms.event_term += floored_log(lam.at_events[i], terms.floored);
    }
    terms.integral = samples.empty()
                         ? 0.0
                         : seq.domain.measure() * lam.at_queries.mean();
    return terms;
}

// ----- gradient accumulation per kernel family ----------------------------

void exp_seq_grad(const ExpHawkesKernel& k, const KernelModel& model, const EventSequence& seq,
                  const std::vector<EventPoint>& samples, SeqTerms& terms,
                  Eigen::VectorXd& grad) {
    const double mu = model.mu;
    const double measure = seq.domain.measure();
    const double w_mc = samples.empty() ? 0.0 : -measure / static_cast<double>(samples.size());

    double e1 = 0.0;  // sum exp(-beta (t - t_i))
    double ed = 0.0;  // sum (t - t_i) exp(-beta (t - t_i))
    double pos = 0.0;
    double g_alpha = 0.0, g_beta = 0.0, sum_w = 0.0;
    double integral_sum = 0.0;

    auto advance = [&](double t) {
        if (t > pos) {
            const double dt = t - pos;
            const double decay = std::exp(-k.beta * dt);
            ed = (ed + dt * e1) * decay;
            e1 *= decay;
            pos = t;
        }
    };
    auto visit = [&](double w, double lambda) {
        (void)lambda;
        g_alpha += w * k.beta * e1;
        g_beta += w * (k.alpha * e1 - k.alpha * k.beta * ed);
        sum_w += w;
    };

    std::size_t ei = 0, qi = 0;
    while (ei < seq.events.size() || qi < samples.size()) {
        const bool take_query = qi < samples.size() &&
                                (ei == seq.events.size() || samples[qi].t <= seq.events[ei].t);
        if (take_query) {
            advance(samples[qi].t);
            const double lambda = mu + k.alpha * k.beta * e1;
            integral_sum += lambda;
            visit(w_mc, lambda);
            ++qi;
        } else {
            advance(seq.events[ei].t);
            const double lambda = mu + k.alpha * k.beta * e1;
            terms.event_term += floored_log(lambda, terms.floored);
            visit(event_weight(lambda), lambda);
            e1 += 1.0;
            ++ei;
        }
    }
    terms.integral = samples.empty()
                         ? 0.0
                         : measure * (integral_sum / static_cast<double>(samples.size()));

    grad[0] += g_alpha;
    grad[1] += g_beta;
    if (model.mu_trainable) {
        grad[grad.size() - 1] += sum_w * sigmoid(softplus_inverse(mu));
    }
}

void spectral_seq_grad(const SpectralKernel& k, const KernelModel& model,
                       const EventSequence& seq, const std::vector<EventPoint>& samples,
                       SeqTerms& terms, Eigen::VectorXd& grad) {
    const double mu = model.mu;
    const double measure = seq.domain.measure();
    const int R = k.rank();
    const std::size_t N = seq.events.size();
    const std::size_t Q = samples.size();
    const double w_mc = Q == 0 ? 0.0 : -measure / static_cast<double>(Q);

    const NetLayout layout = make_layout(k.spec);
    NetWorkspace ws;
    const Eigen::VectorXd nu = k.spectrum();
    const Eigen::VectorXd sig_rho =
        k.spectrum_raw.unaryExpr([](double r) { return sigmoid(r); });

    const auto order = merged_order(seq, samples);

    Eigen::MatrixXd phi_ev(R, N), psi_ev(R, N), cpsi_ev(R, N);
    Eigen::MatrixXd phi_mc(R, Q), cpsi_mc(R, Q);
    Eigen::VectorXd lam_ev(N), lam_mc(Q);

    // Pass A: forwards in time order, caching features and history prefixes.
    Eigen::VectorXd cpsi = Eigen::VectorXd::Zero(R);
    for (const auto& [is_event, idx] : order) {
        const EventPoint& x = is_event ? seq.events[idx] : samples[idx];
        const FeatureOutput f = net_forward(k.spec, layout, k.params, event_input(x), ws);
        const double lambda = mu + nu.dot(cpsi.cwiseProduct(f.phi));
        if (is_event) {
            phi_ev.col(idx) = f.phi;
            psi_ev.col(idx) = f.psi;
            cpsi_ev.col(idx) = cpsi;
            lam_ev[idx] = lambda;
            cpsi += f.psi;
        } else {
            phi_mc.col(idx) = f.phi;
            cpsi_mc.col(idx) = cpsi;
            lam_mc[idx] = lambda;
        }
    }

    Eigen::VectorXd w_ev(N);
    double integral_sum = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        terms.event_term += floored_log(lam_ev[i], terms.floored);
        w_ev[i] = event_weight(lam_ev[i]);
    }
    for (std::size_t q = 0; q < Q; ++q) integral_sum += lam_mc[q];
    terms.integral = Q == 0 ? 0.0 : measure * (integral_sum / static_cast<double>(Q));

    // Suffix scan: psi-side upstream of event i collects w * phi over every
    // later query (the event's own log-term query does not see itself).
    Eigen::MatrixXd upsi_ev(R, N);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(R);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const auto& [is_event, idx] = *it;
        if (is_event) {
            upsi_ev.col(idx) = acc;
            acc += w_ev[idx] * phi_ev.col(idx);
        } else {
            acc += w_mc * phi_mc.col(idx);
        }
    }

    // Backward pass; one net backward per point with both head upstreams.
    Eigen::VectorXd net_grad = Eigen::VectorXd::Zero(layout.total_params);
    Eigen::VectorXd rho_grad = Eigen::VectorXd::Zero(R);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(R);
    double sum_w = 0.0;
    Eigen::VectorXd up_psi(R), up_phi(R);
    for (const auto& [is_event, idx] : order) {
        const EventPoint& x = is_event ? seq.events[idx] : samples[idx];
        net_forward(k.spec, layout, k.params, event_input(x), ws);
        if (is_event) {
            const double w = w_ev[idx];
            up_psi = nu.cwiseProduct(upsi_ev.col(idx));
            up_phi = w * nu.cwiseProduct(cpsi_ev.col(idx));
            net_backward(k.spec, layout, k.params, ws, up_psi, up_phi, net_grad);
            rho_grad += w * sig_rho.cwiseProduct(cpsi_ev.col(idx)).cwiseProduct(phi_ev.col(idx));
            sum_w += w;
        } else {
            up_phi = w_mc * nu.cwiseProduct(cpsi_mc.col(idx));
            net_backward(k.spec, layout, k.params, ws, zero, up_phi, net_grad);
            rho_grad +=
                w_mc * sig_rho.cwiseProduct(cpsi_mc.col(idx)).cwiseProduct(phi_mc.col(idx));
            sum_w += w_mc;
        }
    }

    grad.head(R) += rho_grad;
    grad.segment(R, layout.total_params) += net_grad;
    if (model.mu_trainable) {
        grad[grad.size() - 1] += sum_w * sigmoid(softplus_inverse(mu));
    }
}

void basis_seq_grad(const BasisKernel& k, const KernelModel& model, const EventSequence& seq,
                    const std::vector<EventPoint>& samples, SeqTerms& terms,
                    Eigen::VectorXd& grad) {
    const double mu = model.mu;
    const double measure = seq.domain.measure();
    const int S = k.size();
    const std::size_t Q = samples.size();
    const double w_mc = Q == 0 ? 0.0 : -measure / static_cast<double>(Q);

    Eigen::VectorXd c = Eigen::VectorXd::Zero(S);
    Eigen::VectorXd cA = Eigen::VectorXd::Zero(S);  // A^T c
    Eigen::Map<Eigen::MatrixXd> G(grad.data(), S, S);
    double sum_w = 0.0;
    double integral_sum = 0.0;

    const auto order = merged_order(seq, samples);
    for (const auto& [is_event, idx] : order) {
        const EventPoint& x = is_event ? seq.events[idx] : samples[idx];
        const Eigen::VectorXd b = basis_values(k, x);
        const double lambda = mu + cA.dot(b);
        double w;
        if (is_event) {
            terms.event_term += floored_log(lambda, terms.floored);
            w = event_weight(lambda);
        } else {
            integral_sum += lambda;
            w = w_mc;
        }
        // d lambda / d A_pq = c_p b_q
        G.noalias() += w * c * b.transpose();
        sum_w += w;
        if (is_event) {
            c += b;
            cA.noalias() = k.A.transpose() * c;
        }
    }
    terms.integral = Q == 0 ? 0.0 : measure * (integral_sum / static_cast<double>(Q));
    if (model.mu_trainable) {
        grad[grad.size() - 1] += sum_w * sigmoid(softplus_inverse(mu));
    }
}

void require_matching_domain(const KernelModel& model, const Domain& data_domain,
                             const char* what) {
    if (!(model.domain == data_domain)) {
        throw std::invalid_argument(std::string(what) +
                                    ": model and data domains differ");
    }
}

}  // namespace

std::vector<EventPoint> mc_sample_points(const Domain& domain, const MCIntegralConfig& cfg,
                                         std::size_t sequence_index) {
    if (cfg.n_samples < 1) {
        throw std::invalid_argument("MCIntegralConfig: n_samples must be >= 1");
    }
    Rng rng(derive_seed(cfg.seed, "mc-integral", sequence_index));
    const int d = domain.mark_dim();
    std::vector<EventPoint> pts;
    pts.reserve(cfg.n_samples);
    for (int n = 0; n < cfg.n_samples; ++n) {
        EventPoint x;
        x.t = rng.uniform(0.0, domain.horizon_T);
        x.mark = Eigen::VectorXd(d);
        for (int a = 0; a < d; ++a) {
            x.mark[a] = rng.uniform(domain.mark_lo[a], domain.mark_hi[a]);
        }
        pts.push_back(std::move(x));
    }
    std::sort(pts.begin(), pts.end(),
              [](const EventPoint& a, const EventPoint& b) { return a.t < b.t; });
    return pts;
}

double mc_integral(const KernelModel& model, const EventSequence& seq,
                   const MCIntegralConfig& cfg) {
    require_matching_domain(model, seq.domain, "mc_integral");
    const auto samples = mc_sample_points(seq.domain, cfg, 0);
    const detail::SeqLambda lam = detail::lambda_over(model, seq, samples);
    return seq.domain.measure() * lam.at_queries.mean();
}

LogLikResult log_likelihood(const KernelModel& model, const Dataset& dataset,
                            const MCIntegralConfig& cfg, int threads) {
    if (dataset.sequences.empty()) {
        throw std::invalid_argument("log_likelihood: dataset is empty");
    }
    require_matching_domain(model, dataset.domain, "log_likelihood");
    const std::size_t M = dataset.sequences.size();
    std::vector<SeqTerms> terms(M);
    detail::parallel_for(M, threads, [&](std::size_t j) {
        const auto samples = mc_sample_points(dataset.domain, cfg, j);
        terms[j] = value_terms(model, dataset.sequences[j], samples);
    });

    LogLikResult result;
    result.per_sequence.resize(M);
    result.event_terms.resize(M);
    result.integral_terms.resize(M);
    double sum = 0.0;
    for (std::size_t j = 0; j < M; ++j) {
        result.event_terms[j] = terms[j].event_term;
        result.integral_terms[j] = terms[j].integral;
        result.per_sequence[j] = terms[j].event_term - terms[j].integral;
        result.floored_evaluations += terms[j].floored;
        sum += result.per_sequence[j];
    }
    result.average = sum / static_cast<double>(M);
    return result;
}

LogLikWithGrad log_likelihood_with_grad(const KernelModel& model, const Dataset& batch,
                                        const MCIntegralConfig& cfg, int threads) {
    if (batch.sequences.empty()) {
        throw std::invalid_argument("log_likelihood_grad: batch is empty");
    }
    require_matching_domain(model, batch.domain, "log_likelihood_grad");
    const std::size_t M = batch.sequences.size();
    const Eigen::Index P = trainable_count(model);

    std::vector<SeqTerms> terms(M);
    std::vector<Eigen::VectorXd> grads(M);
    detail::parallel_for(M, threads, [&](std::size_t j) {
        const auto samples = mc_sample_points(batch.domain, cfg, j);
        grads[j] = Eigen::VectorXd::Zero(P);
        std::visit(
            [&](const auto& k) {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, ExpHawkesKernel>) {
                    exp_seq_grad(k, model, batch.sequences[j], samples, terms[j], grads[j]);
                } else if constexpr (std::is_same_v<T, SpectralKernel>) {
                    spectral_seq_grad(k, model, batch.sequences[j], samples, terms[j],
                                      grads[j]);
                } else {
                    basis_seq_grad(k, model, batch.sequences[j], samples, terms[j], grads[j]);
                }
            },
            model.kernel);
    });

    LogLikWithGrad out;
    out.value.per_sequence.resize(M);
    out.value.event_terms.resize(M);
    out.value.integral_terms.resize(M);
    out.grad = Eigen::VectorXd::Zero(P);
    double sum = 0.0;
    for (std::size_t j = 0; j < M; ++j) {
        out.value.event_terms[j] = terms[j].event_term;
        out.value.integral_terms[j] = terms[j].integral;
        out.value.per_sequence[j] = terms[j].event_term - terms[j].integral;
        out.value.floored_evaluations += terms[j].floored;
        sum += out.value.per_sequence[j];
        out.grad += grads[j];
    }
    out.value.average = sum / static_cast<double>(M);
    out.grad /= static_cast<double>(M);
    return out;
}

Eigen::VectorXd log_likelihood_grad(const KernelModel& model, const Dataset& batch,
                                    const MCIntegralConfig& cfg, int threads) {
    return log_likelihood_with_grad(model, batch, cfg, threads).grad;
}

}  // namespace nsmpp
