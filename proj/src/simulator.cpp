#include "nsmpp/simulator.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <variant>

#include "nsmpp/intensity.hpp"
#include "nsmpp/rng.hpp"
#include "parallel.hpp"

namespace nsmpp {

namespace {

// Incremental per-family intensity state over a growing history. advance()
// moves the clock (only the exponential family decays); eval() computes
// lambda at a candidate without mutating history; add_event() ingests an
// accepted candidate, reusing the features computed by the last eval.
struct ExpState {
    const ExpHawkesKernel& k;
    double mu;
    double e1{0.0};
    double pos{0.0};

    void advance(double t) {
        if (t > pos) {
            e1 *= std::exp(-k.beta * (t - pos));
            pos = t;
        }
    }
    double eval(const EventPoint&) const { return mu + k.alpha * k.beta * e1; }
    void add_event(const EventPoint&) { e1 += 1.0; }
};

struct SpectralState {
    const SpectralKernel& k;
    double mu;
    NetLayout layout;
    NetWorkspace ws;
    Eigen::VectorXd nu;
    Eigen::VectorXd psi_prefix;
    Eigen::VectorXd last_psi;

    explicit SpectralState(const SpectralKernel& kernel, double mu_in)
        : k(kernel),
          mu(mu_in),
          layout(make_layout(kernel.spec)),
          nu(kernel.spectrum()),
          psi_prefix(Eigen::VectorXd::Zero(kernel.rank())) {}

    void advance(double) {}
    double eval(const EventPoint& x) {
        const FeatureOutput f = net_forward(k.spec, layout, k.params, event_input(x), ws);
        last_psi = f.psi;
        return mu + nu.dot(psi_prefix.cwiseProduct(f.phi));
    }
    void add_event(const EventPoint&) { psi_prefix += last_psi; }
};

struct BasisState {
    const BasisKernel& k;
    double mu;
    Eigen::VectorXd c;
    Eigen::VectorXd cA;
    Eigen::VectorXd last_b;

    explicit BasisState(const BasisKernel& kernel, double mu_in)
        : k(kernel),
          mu(mu_in),
          c(Eigen::VectorXd::Zero(kernel.size())),
          cA(Eigen::VectorXd::Zero(kernel.size())) {}

    void advance(double) {}
    double eval(const EventPoint& x) {
        last_b = basis_values(k, x);
        return mu + cA.dot(last_b);
    }
    void add_event(const EventPoint&) {
        c += last_b;
        cA.noalias() = k.A.transpose() * c;
    }
};

Eigen::VectorXd draw_mark(const Domain& domain, Rng& rng) {
    Eigen::VectorXd m(domain.mark_dim());
    for (int a = 0; a < domain.mark_dim(); ++a) {
        m[a] = rng.uniform(domain.mark_lo[a], domain.mark_hi[a]);
    }
    return m;
}

template <typename State>
SimResult thinning_loop(const SimConfig& cfg, State& state) {
    const Domain& dom = cfg.domain;
    const double T = dom.horizon_T;
    const double mark_volume = dom.mark_volume();
    const double B = kernel_sup_bound(cfg.model);
    Rng rng(cfg.seed);

    SimResult result;
    result.sequence.domain = dom;
    auto& events = result.sequence.events;

    double t = 0.0;
    while (true) {
        const double lambda_bar = cfg.model.mu + B * static_cast<double>(events.size());
        const double ground_rate = lambda_bar * mark_volume;
        if (!(ground_rate > 0.0)) break;

        const double dt = rng.exponential(ground_rate);
        const double t_cand = t + dt;
        if (t_cand >= T) break;
        EventPoint cand{t_cand, draw_mark(dom, rng)};
        const double u = rng.uniform01();
        ++result.candidates;

        state.advance(t_cand);
        const double lambda = state.eval(cand);
        if (lambda > lambda_bar * (1.0 + 1e-9) + 1e-12) {
            std::ostringstream msg;
            msg << "thinning bound violated: lambda=" << lambda << " > bound=" << lambda_bar
                << " at t=" << t_cand;
            throw std::logic_error(msg.str());
        }

        t = t_cand;
        if (u <= lambda / lambda_bar) {
            state.add_event(cand);
            events.push_back(std::move(cand));
            if (events.size() >= cfg.max_events) {
                result.hit_max_events = true;
                break;
            }
        }
    }
    return result;
}

// As-printed reference variant (see SimConfig::printed_accept_rule). The
// candidate gap rate is the intensity at the current time with the previous
// mark, and acceptance requires D * that rate to exceed the candidate
// intensity. Kept runnable for side-by-side comparison; not a correct
// sampler.
SimResult printed_rule_loop(const SimConfig& cfg) {
    const Domain& dom = cfg.domain;
    Rng rng(cfg.seed);

    SimResult result;
    result.sequence.domain = dom;
    auto& events = result.sequence.events;

    double t = 0.0;
    Eigen::VectorXd m_prev = draw_mark(dom, rng);
    while (t < dom.horizon_T) {
        const double u = rng.uniform01();
        const Eigen::VectorXd m = draw_mark(dom, rng);
        const double D = rng.uniform01();

        const EventPoint x_prev{t, m_prev};
        const double lambda_bar = lambda_at(cfg.model, result.sequence, x_prev);
        if (!(lambda_bar > 0.0)) break;

        t = t - std::log(u == 0.0 ? 1e-300 : u) / lambda_bar;
        if (t >= dom.horizon_T) break;
        EventPoint x{t, m};
        const double lambda_tilde = lambda_at(cfg.model, result.sequence, x);
        ++result.candidates;

        if (D * lambda_bar > lambda_tilde) {
            events.push_back(std::move(x));
            m_prev = m;
            if (events.size() >= cfg.max_events) {
                result.hit_max_events = true;
                break;
            }
        }
    }
    return result;
}

}  // namespace

SimResult simulate(const SimConfig& cfg) {
    validate_domain(cfg.domain);
    if (!(cfg.model.domain == cfg.domain)) {
        throw std::invalid_argument("simulate: model and config domains differ");
    }
    if (cfg.max_events < 1) {
        throw std::invalid_argument("simulate: max_events must be >= 1");
    }
    if (cfg.printed_accept_rule) return printed_rule_loop(cfg);
    return std::visit(
        [&](const auto& k) -> SimResult {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, ExpHawkesKernel>) {
                ExpState state{k, cfg.model.mu};
                return thinning_loop(cfg, state);
            } else if constexpr (std::is_same_v<T, SpectralKernel>) {
                SpectralState state(k, cfg.model.mu);
                return thinning_loop(cfg, state);
            } else {
                BasisState state(k, cfg.model.mu);
                return thinning_loop(cfg, state);
            }
        },
        cfg.model.kernel);
}

KernelModel calibrate_spectral_branching(const KernelModel& model, double target,
                                         std::uint64_t seed, double* estimated) {
    if (model.family() != KernelFamily::Spectral) {
        throw std::invalid_argument("calibrate_spectral_branching: spectral models only");
    }
    if (!(target > 0.0 && target < 1.0)) {
        throw std::invalid_argument("calibrate_spectral_branching: target must be in (0, 1)");
    }
    const Domain& dom = model.domain;
    Rng rng(derive_seed(seed, "calibrate-branching"));
    auto draw_point = [&](double t_lo) {
        EventPoint x;
        x.t = rng.uniform(t_lo, dom.horizon_T);
        if (x.t <= t_lo) x.t = std::nextafter(t_lo, dom.horizon_T);
        x.mark = draw_mark(dom, rng);
        return x;
    };

    const int outer = 256, inner = 256;
    double mean_offspring = 0.0;
    for (int i = 0; i < outer; ++i) {
        const EventPoint prev = draw_point(0.0);
        double mean_k = 0.0;
        for (int j = 0; j < inner; ++j) {
            mean_k += kernel_eval(model, prev, draw_point(prev.t));
        }
        mean_k /= inner;
        mean_offspring += mean_k * (dom.horizon_T - prev.t) * dom.mark_volume();
    }
    mean_offspring /= outer;
    if (estimated != nullptr) *estimated = mean_offspring;

    const double scale = target / mean_offspring;
    SpectralKernel k = model.spectral_kernel();
    const Eigen::VectorXd nu = k.spectrum();
    for (int r = 0; r < k.rank(); ++r) {
        k.spectrum_raw[r] = softplus_inverse(scale * nu[r]);
    }
    KernelModel out = model;
    out.kernel = std::move(k);
    return out;
}

SimDatasetResult simulate_dataset(const SimConfig& cfg, std::size_t n_sequences, int threads) {
    if (n_sequences < 1) {
        throw std::invalid_argument("simulate_dataset: need at least one sequence");
    }
    SimDatasetResult out;
    out.dataset.domain = cfg.domain;
    out.dataset.sequences.resize(n_sequences);
    out.truncated.assign(n_sequences, 0);

    std::vector<std::size_t> candidates(n_sequences, 0);
    detail::parallel_for(n_sequences, threads, [&](std::size_t i) {
        SimConfig per = cfg;
        per.seed = derive_seed(cfg.seed, "sim-seq", i);
        SimResult r = simulate(per);
        out.dataset.sequences[i] = std::move(r.sequence);
        out.truncated[i] = r.hit_max_events ? 1 : 0;
        candidates[i] = r.candidates;
    });
    for (std::size_t c : candidates) out.total_candidates += c;
    return out;
}

}  // namespace nsmpp
