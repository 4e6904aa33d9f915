#include "lambda_sweep.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace nsmpp::detail {

namespace {

constexpr int kMaxBoundsWarnings = 8;
std::atomic<int> g_bounds_warnings{0};

// Walks events and queries in time order, calling on_query(j, q) with the
// history state advanced to just before q, and on_event(i, x) when x enters
// the history. Ties resolve queries first.
template <typename OnQuery, typename OnEvent>
void merged_sweep(const EventSequence& seq, const std::vector<EventPoint>& queries,
                  OnQuery&& on_query, OnEvent&& on_event) {
    std::size_t ei = 0;
    std::size_t qi = 0;
    const std::size_t ne = seq.events.size();
    const std::size_t nq = queries.size();
    while (qi < nq || ei < ne) {
        const bool take_query =
            qi < nq && (ei == ne || queries[qi].t <= seq.events[ei].t);
        if (take_query) {
            on_query(qi, queries[qi]);
            ++qi;
        } else {
            on_event(ei, seq.events[ei]);
            ++ei;
        }
    }
}

}  // namespace

void maybe_warn_bounds(const KernelModel& model, double lambda) {
    if (!model.bounds) return;
    if (lambda >= model.bounds->c1 && lambda <= model.bounds->c2) return;
    const int n = g_bounds_warnings.fetch_add(1);
    if (n < kMaxBoundsWarnings) {
        std::fprintf(stderr,
                     "nsmpp: intensity %.6g outside configured bounds [%.6g, %.6g]\n", lambda,
                     model.bounds->c1, model.bounds->c2);
    } else if (n == kMaxBoundsWarnings) {
        std::fprintf(stderr, "nsmpp: further intensity-bound warnings suppressed\n");
    }
}

SeqLambda lambda_over(const KernelModel& model, const EventSequence& seq,
                      const std::vector<EventPoint>& sorted_queries) {
    for (std::size_t j = 1; j < sorted_queries.size(); ++j) {
        if (sorted_queries[j].t < sorted_queries[j - 1].t) {
            throw std::invalid_argument("lambda_over: queries must be sorted by time");
        }
    }

    SeqLambda out;
    out.at_events.resize(seq.events.size());
    out.at_queries.resize(sorted_queries.size());
    const double mu = model.mu;

    std::visit(
        [&](const auto& k) {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, ExpHawkesKernel>) {
                // Decaying sum E1 = sum_i exp(-beta (t - t_i)) over history.
                double e1 = 0.0;
                double pos = 0.0;
                auto advance = [&](double t) {
                    if (t > pos) {
                        e1 *= std::exp(-k.beta * (t - pos));
                        pos = t;
                    }
                };
                merged_sweep(
                    seq, sorted_queries,
                    [&](std::size_t j, const EventPoint& q) {
                        advance(q.t);
                        out.at_queries[j] = mu + k.alpha * k.beta * e1;
                    },
                    [&](std::size_t i, const EventPoint& x) {
                        advance(x.t);
                        out.at_events[i] = mu + k.alpha * k.beta * e1;
                        e1 += 1.0;
                    });
            } else if constexpr (std::is_same_v<T, SpectralKernel>) {
                const NetLayout layout = make_layout(k.spec);
                NetWorkspace ws;
                const Eigen::VectorXd nu = k.spectrum();
                Eigen::VectorXd psi_prefix = Eigen::VectorXd::Zero(k.rank());
                merged_sweep(
                    seq, sorted_queries,
                    [&](std::size_t j, const EventPoint& q) {
                        const FeatureOutput f =
                            net_forward(k.spec, layout, k.params, event_input(q), ws);
                        out.at_queries[j] =
                            mu + nu.dot(psi_prefix.cwiseProduct(f.phi));
                    },
                    [&](std::size_t i, const EventPoint& x) {
                        const FeatureOutput f =
                            net_forward(k.spec, layout, k.params, event_input(x), ws);
                        out.at_events[i] = mu + nu.dot(psi_prefix.cwiseProduct(f.phi));
                        psi_prefix += f.psi;
                    });
            } else {
                // lambda(x) = mu + c(t)^T A b(x), c = prefix sum of b over events.
                Eigen::VectorXd c = Eigen::VectorXd::Zero(k.size());
                Eigen::VectorXd cA = Eigen::VectorXd::Zero(k.size());  // A^T c
                merged_sweep(
                    seq, sorted_queries,
                    [&](std::size_t j, const EventPoint& q) {
                        out.at_queries[j] = mu + cA.dot(basis_values(k, q));
                    },
                    [&](std::size_t i, const EventPoint& x) {
                        const Eigen::VectorXd b = basis_values(k, x);
                        out.at_events[i] = mu + cA.dot(b);
                        c += b;
                        cA.noalias() = k.A.transpose() * c;
                    });
            }
        },
        model.kernel);

    if (model.bounds) {
        for (Eigen::Index i = 0; i < out.at_events.size(); ++i) {
            maybe_warn_bounds(model, out.at_events[i]);
        }
        for (Eigen::Index j = 0; j < out.at_queries.size(); ++j) {
            maybe_warn_bounds(model, out.at_queries[j]);
        }
    }
    return out;
}

}  // namespace nsmpp::detail
