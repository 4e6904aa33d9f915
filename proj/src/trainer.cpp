#include "nsmpp/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "nsmpp/dataset_io.hpp"
#include "nsmpp/rng.hpp"

namespace nsmpp {

namespace {

constexpr double kBetaFloor = 1e-6;

void validate_config(const TrainConfig& cfg) {
    if (!(cfg.learning_rate > 0.0)) {
        throw std::invalid_argument("TrainConfig: learning_rate must be positive");
    }
    if (cfg.batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (cfg.iterations < 1) throw std::invalid_argument("TrainConfig: iterations must be >= 1");
    if (cfg.checkpoint_every < 1) {
        throw std::invalid_argument("TrainConfig: checkpoint_every must be >= 1");
    }
    if (!(cfg.holdout_fraction >= 0.0 && cfg.holdout_fraction < 1.0)) {
        throw std::invalid_argument("TrainConfig: holdout_fraction must lie in [0, 1)");
    }
}

// Keeps the struct invariants of the exponential family after an
// unconstrained Adam step; the other families are unconstrained by
// construction (softplus spectrum, free basis matrix).
void project_feasible(const KernelModel& model, Eigen::VectorXd& theta) {
    if (model.family() == KernelFamily::Exponential) {
        theta[0] = std::max(theta[0], 0.0);
        theta[1] = std::max(theta[1], kBetaFloor);
    }
}

Dataset subset(const Dataset& ds, const std::vector<std::size_t>& indices) {
    Dataset out;
    out.domain = ds.domain;
    out.normalization = ds.normalization;
    out.sequences.reserve(indices.size());
    for (std::size_t i : indices) out.sequences.push_back(ds.sequences[i]);
    return out;
}

template <typename T>
void shuffle_indices(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.uniform01() * static_cast<double>(i));
        std::swap(v[i - 1], v[std::min(j, i - 1)]);
    }
}

}  // namespace

TrainResult train(const KernelModel& init, const Dataset& dataset, const TrainConfig& cfg) {
    validate_config(cfg);
    if (dataset.sequences.empty()) throw std::invalid_argument("train: dataset is empty");
    if (!(init.domain == dataset.domain)) {
        throw std::invalid_argument("train: model and dataset domains differ");
    }

    // Seeded 80/20-style split.
    const std::size_t n = dataset.sequences.size();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    {
        Rng split_rng(derive_seed(cfg.seed, "train-split"));
        shuffle_indices(perm, split_rng);
    }
    const std::size_t n_holdout =
        std::min(n - 1, static_cast<std::size_t>(std::llround(cfg.holdout_fraction * n)));

    TrainResult result;
    result.holdout_indices.assign(perm.begin(), perm.begin() + n_holdout);
    result.train_indices.assign(perm.begin() + n_holdout, perm.end());
    std::sort(result.holdout_indices.begin(), result.holdout_indices.end());
    std::sort(result.train_indices.begin(), result.train_indices.end());
    if (result.train_indices.empty()) throw std::invalid_argument("train: training split empty");

    const Dataset holdout = subset(dataset, result.holdout_indices);
    MCIntegralConfig holdout_mc = cfg.mc;
    holdout_mc.seed = derive_seed(cfg.seed, "holdout-mc");

    KernelModel model = init;
    Eigen::VectorXd theta = get_trainable(model);
    AdamState opt;
    opt.m = Eigen::VectorXd::Zero(theta.size());
    opt.v = Eigen::VectorXd::Zero(theta.size());

    // Epoch order: minibatches without replacement, reshuffled per epoch.
    std::vector<std::size_t> order = result.train_indices;
    std::size_t cursor = order.size();  // triggers a shuffle on first use
    std::size_t epoch = 0;

    result.best_holdout_ll = -std::numeric_limits<double>::infinity();
    result.best_iteration = 0;
    KernelModel best_model = model;

    auto evaluate_holdout = [&](const KernelModel& m) {
        return log_likelihood(m, holdout, holdout_mc, cfg.threads).average;
    };

    for (int iter = 1; iter <= cfg.iterations; ++iter) {
        const auto t0 = std::chrono::steady_clock::now();

        std::vector<std::size_t> batch_indices;
        batch_indices.reserve(cfg.batch_size);
        while (batch_indices.size() < static_cast<std::size_t>(cfg.batch_size) &&
               batch_indices.size() < order.size()) {
            if (cursor >= order.size()) {
                Rng epoch_rng(derive_seed(cfg.seed, "train-epoch", epoch++));
                shuffle_indices(order, epoch_rng);
                cursor = 0;
                if (!batch_indices.empty()) break;  // batches never straddle epochs
            }
            batch_indices.push_back(order[cursor++]);
        }
        const Dataset batch = subset(dataset, batch_indices);

        MCIntegralConfig step_mc = cfg.mc;
        if (cfg.mc.resample_each_step) {
            step_mc.seed = derive_seed(cfg.seed, "mc-step", static_cast<std::uint64_t>(iter));
        }

        const LogLikWithGrad eval = log_likelihood_with_grad(model, batch, step_mc, cfg.threads);
        const double grad_norm = eval.grad.norm();
        if (!std::isfinite(eval.value.average) || !std::isfinite(grad_norm)) {
            throw TrainAbortError(iter, model,
                                  "train: non-finite loss or gradient at iteration " +
                                      std::to_string(iter));
        }

        Eigen::VectorXd g = eval.grad;
        if (cfg.clip_norm > 0.0 && grad_norm > cfg.clip_norm) {
            g *= cfg.clip_norm / grad_norm;
        }

        // Adam ascent step.
        opt.step += 1;
        opt.m = cfg.adam_beta1 * opt.m + (1.0 - cfg.adam_beta1) * g;
        opt.v = cfg.adam_beta2 * opt.v + (1.0 - cfg.adam_beta2) * g.cwiseProduct(g);
        const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(opt.step));
        const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(opt.step));
        const Eigen::VectorXd denom =
            ((opt.v / bc2).cwiseSqrt().array() + cfg.adam_eps).matrix();
        theta += (cfg.learning_rate / bc1) * opt.m.cwiseQuotient(denom);
        project_feasible(model, theta);
        if (!theta.allFinite()) {
            throw TrainAbortError(iter, model,
                                  "train: non-finite parameters at iteration " +
                                      std::to_string(iter));
        }
        model = with_trainable(model, theta);

        TrainTrace::Entry entry;
        entry.iteration = iter;
        entry.batch_ll = eval.value.average;
        entry.grad_norm = grad_norm;
        if (model.family() == KernelFamily::Spectral) {
            entry.spectrum = model.spectral_kernel().spectrum();
        }

        if (!holdout.sequences.empty() &&
            (iter % cfg.checkpoint_every == 0 || iter == cfg.iterations)) {
            const double hll = evaluate_holdout(model);
            entry.holdout_ll = hll;
            if (hll > result.best_holdout_ll) {
                result.best_holdout_ll = hll;
                result.best_iteration = iter;
                best_model = model;
            }
        }

        entry.secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.trace.entries.push_back(std::move(entry));
    }

    if (holdout.sequences.empty()) {
        best_model = model;
        result.best_iteration = cfg.iterations;
        result.best_holdout_ll = std::numeric_limits<double>::quiet_NaN();
    }
    result.model = std::move(best_model);
    result.final_opt_state = std::move(opt);
    return result;
}

void write_trace_csv(const TrainTrace& trace, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "iter,batch_ll,grad_norm,holdout_ll,secs\n";
    for (const auto& e : trace.entries) {
        out << e.iteration << ',' << format_double(e.batch_ll) << ','
            << format_double(e.grad_norm) << ',';
        if (e.holdout_ll) out << format_double(*e.holdout_ll);
        out << ',' << format_double(e.secs) << "\n";
    }
    if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace nsmpp
