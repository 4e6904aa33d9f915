#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <set>

#include "nsmpp/dataset_io.hpp"
#include "nsmpp/rng.hpp"
#include "nsmpp/simulator.hpp"
#include "nsmpp/trainer.hpp"
#include "test_util.hpp"

using namespace nsmpp;

namespace {

Dataset hawkes_corpus(int n, std::uint64_t seed) {
    const Domain dom = temporal_domain(100.0);
    SimConfig sim;
    sim.model = make_exp_model(dom, 1.0, 0.5, 1.0);
    sim.domain = dom;
    sim.seed = seed;
    return simulate_dataset(sim, n).dataset;
}

TrainConfig quick_config() {
    TrainConfig cfg;
    cfg.iterations = 40;
    cfg.batch_size = 8;
    cfg.mc.n_samples = 200;
    cfg.checkpoint_every = 10;
    cfg.seed = 5;
    return cfg;
}

EventPoint tp(double t) { return EventPoint{t, Eigen::VectorXd(0)}; }

}  // namespace

TEST_CASE("one iteration produces a trace of length one") {
    const Dataset data = hawkes_corpus(10, 1);
    TrainConfig cfg = quick_config();
    cfg.iterations = 1;
    const KernelModel init = make_exp_model(data.domain, 1.0, 0.2, 2.0);
    const TrainResult result = train(init, data, cfg);
    CHECK(result.trace.entries.size() == 1);
    CHECK(result.trace.entries[0].iteration == 1);
}

TEST_CASE("invalid configurations are rejected") {
    const Dataset data = hawkes_corpus(4, 2);
    const KernelModel init = make_exp_model(data.domain, 1.0, 0.2, 2.0);
    TrainConfig cfg = quick_config();
    cfg.iterations = 0;
    CHECK_THROWS_AS(train(init, data, cfg), std::invalid_argument);
    cfg = quick_config();
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(train(init, data, cfg), std::invalid_argument);
}

TEST_CASE("frozen seeds give bit-identical training runs") {
    const Dataset data = hawkes_corpus(20, 3);
    const KernelModel init = make_exp_model(data.domain, 1.0, 0.2, 2.0);
    TrainConfig cfg = quick_config();

    const TrainResult a = train(init, data, cfg);
    TrainConfig cfg2 = cfg;
    cfg2.threads = 2;
    const TrainResult b = train(init, data, cfg2);

    REQUIRE(a.trace.entries.size() == b.trace.entries.size());
    for (std::size_t i = 0; i < a.trace.entries.size(); ++i) {
        CHECK(a.trace.entries[i].batch_ll == b.trace.entries[i].batch_ll);
        CHECK(a.trace.entries[i].grad_norm == b.trace.entries[i].grad_norm);
        CHECK(a.trace.entries[i].holdout_ll.has_value() ==
              b.trace.entries[i].holdout_ll.has_value());
        if (a.trace.entries[i].holdout_ll) {
            CHECK(*a.trace.entries[i].holdout_ll == *b.trace.entries[i].holdout_ll);
        }
    }
    CHECK(get_trainable(a.model) == get_trainable(b.model));
}

TEST_CASE("holdout split is disjoint and exhaustive") {
    const Dataset data = hawkes_corpus(25, 4);
    const KernelModel init = make_exp_model(data.domain, 1.0, 0.2, 2.0);
    TrainConfig cfg = quick_config();
    cfg.iterations = 2;
    const TrainResult result = train(init, data, cfg);

    std::set<std::size_t> seen;
    for (auto i : result.train_indices) seen.insert(i);
    for (auto i : result.holdout_indices) {
        CHECK(!seen.count(i));
        seen.insert(i);
    }
    CHECK(seen.size() == data.sequences.size());
    CHECK(result.holdout_indices.size() == 5);  // 20% of 25
}

TEST_CASE("best-holdout selection tracks the trace") {
    const Dataset data = hawkes_corpus(20, 6);
    const KernelModel init = make_exp_model(data.domain, 1.0, 0.2, 2.0);
    const TrainResult result = train(init, data, quick_config());
    double best = -1e300;
    for (const auto& e : result.trace.entries) {
        if (e.holdout_ll) best = std::max(best, *e.holdout_ll);
    }
    CHECK(result.best_holdout_ll == best);
    CHECK(result.best_iteration > 0);
}

TEST_CASE("ascent sanity: batch log-likelihood improves") {
    const Dataset data = hawkes_corpus(50, 7);
    const KernelModel init = make_exp_model(data.domain, 1.0, 0.1, 3.0);
    TrainConfig cfg = quick_config();
    cfg.iterations = 120;
    cfg.batch_size = 16;
    const TrainResult result = train(init, data, cfg);
    auto window_mean = [&](std::size_t lo, std::size_t hi) {
        double sum = 0.0;
        for (std::size_t i = lo; i < hi; ++i) sum += result.trace.entries[i].batch_ll;
        return sum / static_cast<double>(hi - lo);
    };
    CHECK(window_mean(100, 120) > window_mean(0, 20));
}

TEST_CASE("non-finite losses abort with the last finite state") {
    const Domain dom = temporal_domain(100.0);
    Dataset data;
    data.domain = dom;
    EventSequence seq;
    seq.domain = dom;
    for (double t : {1.0, 1.001, 1.002, 1.003}) seq.events.push_back(tp(t));
    data.sequences = {seq};

    const KernelModel init = make_exp_model(dom, 1.0, 1e308, 1.0);
    TrainConfig cfg = quick_config();
    cfg.holdout_fraction = 0.0;
    try {
        train(init, data, cfg);
        FAIL("expected TrainAbortError");
    } catch (const TrainAbortError& e) {
        CHECK(e.iteration() == 1);
        CHECK(e.last_finite_model().exp_kernel().alpha == 1e308);
    }
}

TEST_CASE("checkpoints round-trip bit-exactly") {
    const auto dir = nsmpp::testing::scratch_dir("trainer");
    const Domain dom = temporal_domain(100.0);
    NetSpec spec;
    spec.input_dim = 1;
    spec.trunk_layers = {8, 8, 4};
    spec.branch_count = 4;
    spec.branch_hidden = {8};
    const KernelModel model = make_spectral_model(dom, 1.0, spec, 17);

    const auto p1 = dir / "model.ckpt";
    const auto p2 = dir / "model2.ckpt";
    save_checkpoint(model, p1);
    const LoadedCheckpoint loaded = load_checkpoint(p1);
    save_checkpoint(loaded.model, p2);

    SUBCASE("save -> load -> save produces byte-identical files") {
        std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
        const std::string b1((std::istreambuf_iterator<char>(f1)),
                             std::istreambuf_iterator<char>());
        const std::string b2((std::istreambuf_iterator<char>(f2)),
                             std::istreambuf_iterator<char>());
        CHECK(b1 == b2);
        CHECK(!b1.empty());
    }
    SUBCASE("restored parameters evaluate identically on random pairs") {
        Rng rng(2);
        for (int i = 0; i < 100; ++i) {
            const double t0 = rng.uniform(0.0, 99.0);
            const double t1 = rng.uniform(t0 + 1e-9, 100.0);
            CHECK(kernel_eval(loaded.model, tp(t0), tp(t1)) ==
                  kernel_eval(model, tp(t0), tp(t1)));
        }
    }
    SUBCASE("sidecar JSON exists") {
        CHECK(std::filesystem::exists(p1.string() + ".json"));
    }
    SUBCASE("rank expectation mismatch is a named error") {
        ModelExpectation expect;
        expect.family = KernelFamily::Spectral;
        expect.rank = 5;
        CHECK_THROWS_WITH_AS(check_expectation(loaded.model, expect),
                             "checkpoint rank mismatch: expected R=5, found R=2", DataError);
    }
    SUBCASE("optimizer state round-trips") {
        AdamState opt;
        opt.step = 12;
        opt.m = Eigen::VectorXd::LinSpaced(trainable_count(model), 0.0, 1.0);
        opt.v = opt.m.cwiseAbs2();
        const auto p3 = dir / "with_opt.ckpt";
        save_checkpoint(model, p3, &opt);
        const LoadedCheckpoint again = load_checkpoint(p3);
        REQUIRE(again.opt_state);
        CHECK(again.opt_state->step == 12);
        CHECK(again.opt_state->m == opt.m);
        CHECK(again.opt_state->v == opt.v);
    }
}

TEST_CASE("restored models reproduce the holdout likelihood exactly") {
    const auto dir = nsmpp::testing::scratch_dir("trainer_ll");
    const Dataset data = hawkes_corpus(10, 9);
    const KernelModel init = make_exp_model(data.domain, 1.0, 0.2, 2.0);
    TrainConfig cfg = quick_config();
    cfg.iterations = 10;
    const TrainResult result = train(init, data, cfg);

    const auto path = dir / "fit.ckpt";
    save_checkpoint(result.model, path);
    const KernelModel restored = load_checkpoint(path).model;

    MCIntegralConfig mc;
    mc.n_samples = 300;
    mc.seed = 11;
    CHECK(log_likelihood(restored, data, mc).average ==
          log_likelihood(result.model, data, mc).average);
}

TEST_CASE("trace CSV has the documented shape") {
    const auto dir = nsmpp::testing::scratch_dir("trace");
    TrainTrace trace;
    TrainTrace::Entry e1;
    e1.iteration = 1;
    e1.batch_ll = -3.5;
    e1.grad_norm = 2.0;
    e1.secs = 0.25;
    TrainTrace::Entry e2 = e1;
    e2.iteration = 2;
    e2.holdout_ll = -3.25;
    trace.entries = {e1, e2};
    const auto path = dir / "trace.csv";
    write_trace_csv(trace, path);
    std::ifstream in(path);
    std::string header, r1, r2;
    std::getline(in, header);
    std::getline(in, r1);
    std::getline(in, r2);
    CHECK(header == "iter,batch_ll,grad_norm,holdout_ll,secs");
    CHECK(r1 == "1,-3.5,2,,0.25");
    CHECK(r2 == "2,-3.5,2,-3.25,0.25");
}
