// nsmpp command-line front end: simulate | train | eval | repro.
//
// Every run resolves its configuration (defaults < --config file < flags),
// writes the resolved config and a run manifest next to its outputs, and is
// reproducible bit-for-bit from that directory via the repro subcommand.
// Exit codes: 0 ok, 1 usage, 2 data error, 3 numeric failure.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "nsmpp/checkpoint.hpp"
#include "nsmpp/dataset_io.hpp"
#include "nsmpp/evaluator.hpp"
#include "nsmpp/rng.hpp"
#include "nsmpp/simulator.hpp"
#include "nsmpp/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nsmpp;

namespace {

class NumericFailure : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// config plumbing

json default_config(const std::string& command) {
    json cfg;
    cfg["command"] = command;
    cfg["seed"] = 0;
    cfg["threads"] = 0;  // 0 = auto
    cfg["domain"] = {{"T", 100.0}, {"mark_lo", json::array()}, {"mark_hi", json::array()}};
    cfg["model"] = {{"family", "exp"},
                    {"mu", 1.0},
                    {"mu_trainable", false},
                    {"alpha", command == "simulate" ? 0.5 : 0.2},
                    {"beta", command == "simulate" ? 1.0 : 2.0},
                    {"rank", 5},
                    {"trunk", std::vector<int>{128, 128, 10}},
                    {"branch_hidden", std::vector<int>{32, 32}},
                    {"output_scale", 100.0},
                    {"init_seed", 0},
                    {"target_branching", 0.4},
                    {"basis_size", 4}};
    cfg["sim"] = {{"n", 200}, {"max_events", 100000}};
    cfg["train"] = {{"lr", 1e-2},          {"batch", 32},           {"iters", 1000},
                    {"mc_samples", 1000},  {"holdout", 0.2},        {"checkpoint_every", 50},
                    {"clip_norm", 100.0}};
    cfg["eval"] = {{"time_nodes", 1000}, {"mark_nodes", 50},      {"mc_samples", 1000},
                   {"export_figures", false}, {"true_model", ""}, {"model", ""}};
    cfg["io"] = {{"data", ""}, {"normalize_to", nullptr}};
    return cfg;
}

void merge_into(json& base, const json& overlay) {
    for (auto it = overlay.begin(); it != overlay.end(); ++it) {
        if (it->is_object() && base.contains(it.key()) && base[it.key()].is_object()) {
            merge_into(base[it.key()], *it);
        } else {
            base[it.key()] = *it;
        }
    }
}

json load_config_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config " + path.string());
    try {
        json doc;
        in >> doc;
        return doc;
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

int resolve_threads(int requested) {
    if (requested < 0) {
        if (const char* env = std::getenv("NSMPP_THREADS")) {
            requested = std::atoi(env);
        } else {
            requested = 0;
        }
    }
    if (requested == 0) {
        requested = static_cast<int>(std::thread::hardware_concurrency());
    }
    return std::max(1, requested);
}

Domain domain_from_config(const json& cfg) {
    const auto& jd = cfg.at("domain");
    const auto lo = jd.at("mark_lo").get<std::vector<double>>();
    const auto hi = jd.at("mark_hi").get<std::vector<double>>();
    if (lo.size() != hi.size()) {
        throw std::invalid_argument("domain.mark_lo and domain.mark_hi differ in length");
    }
    Domain d;
    d.horizon_T = jd.at("T").get<double>();
    d.mark_lo = Eigen::Map<const Eigen::VectorXd>(lo.data(), lo.size());
    d.mark_hi = Eigen::Map<const Eigen::VectorXd>(hi.data(), hi.size());
    validate_domain(d);
    return d;
}

NetSpec net_spec_from_config(const json& model, int mark_dim) {
    NetSpec spec;
    spec.input_dim = 1 + mark_dim;
    spec.trunk_layers = model.at("trunk").get<std::vector<int>>();
    spec.branch_count = 2 * model.at("rank").get<int>();
    spec.branch_hidden = model.at("branch_hidden").get<std::vector<int>>();
    spec.output_scale = model.at("output_scale").get<double>();
    validate_net_spec(spec);
    return spec;
}

KernelModel model_from_config(const json& cfg, const Domain& domain) {
    const auto& jm = cfg.at("model");
    const std::string family = jm.at("family").get<std::string>();
    const double mu = jm.at("mu").get<double>();
    KernelModel model;
    if (family == "exp") {
        model = make_exp_model(domain, mu, jm.at("alpha").get<double>(),
                               jm.at("beta").get<double>());
    } else if (family == "spectral") {
        std::uint64_t init_seed = jm.at("init_seed").get<std::uint64_t>();
        if (init_seed == 0) {
            init_seed = derive_seed(cfg.at("seed").get<std::uint64_t>(), "net-init");
        }
        model = make_spectral_model(domain, mu, net_spec_from_config(jm, domain.mark_dim()),
                                    init_seed);
    } else if (family == "basis") {
        const int S = jm.at("basis_size").get<int>();
        model = make_basis_model(domain, mu, Eigen::MatrixXd::Zero(S, S));
    } else {
        throw std::invalid_argument("unknown model family '" + family + "'");
    }
    model.mu_trainable = jm.at("mu_trainable").get<bool>();
    return model;
}

Dataset load_dataset(const json& cfg) {
    const std::string path = cfg.at("io").at("data").get<std::string>();
    if (path.empty()) throw std::invalid_argument("--data is required");
    Dataset ds;
    if (fs::path(path).extension() == ".json") {
        ds = read_dataset_json(path);
    } else {
        ds = read_dataset_csv(path, domain_from_config(cfg));
    }
    const auto& norm = cfg.at("io").at("normalize_to");
    if (!norm.is_null()) {
        ds = normalize_dataset(ds, norm.get<double>());
    }
    return ds;
}

void write_json_file(const json& doc, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << doc.dump(2) << "\n";
}

void write_run_files(const json& cfg, const std::vector<std::string>& files,
                     const json& notes, const fs::path& out_dir) {
    write_json_file(cfg, out_dir / "resolved_config.json");
    json manifest;
    manifest["command"] = cfg.at("command");
    std::vector<std::string> all = files;
    all.push_back("resolved_config.json");
    manifest["files"] = all;
    manifest["notes"] = notes;
    write_json_file(manifest, out_dir / "run_manifest.json");
}

// ---------------------------------------------------------------------------
// subcommands

void run_simulate(const json& cfg, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    const Domain domain = domain_from_config(cfg);
    const std::string family = cfg.at("model").at("family").get<std::string>();
    if (family != "exp" && family != "spectral") {
        throw std::invalid_argument("simulate supports the exp and spectral generators");
    }
    json notes;
    KernelModel model = model_from_config(cfg, domain);
    if (family == "spectral") {
        const double target = cfg.at("model").at("target_branching").get<double>();
        double raw_estimate = 0.0;
        model = calibrate_spectral_branching(model, target,
                                             cfg.at("seed").get<std::uint64_t>(), &raw_estimate);
        notes["calibration"] = {{"raw_branching_estimate", raw_estimate},
                                {"target_branching", target}};
    }

    SimConfig sim;
    sim.model = model;
    sim.domain = domain;
    sim.seed = cfg.at("seed").get<std::uint64_t>();
    sim.max_events = cfg.at("sim").at("max_events").get<std::size_t>();
    const std::size_t n = cfg.at("sim").at("n").get<std::size_t>();
    const SimDatasetResult result =
        simulate_dataset(sim, n, resolve_threads(cfg.at("threads").get<int>()));

    write_dataset_csv(result.dataset, out_dir / "events.csv");
    write_dataset_json(result.dataset, out_dir / "events.json");
    save_checkpoint(model, out_dir / "true_model.ckpt");

    std::vector<std::size_t> truncated;
    for (std::size_t i = 0; i < result.truncated.size(); ++i) {
        if (result.truncated[i]) truncated.push_back(i);
    }
    notes["truncated_sequences"] = truncated;
    std::size_t total_events = 0;
    for (const auto& seq : result.dataset.sequences) total_events += seq.size();
    notes["total_events"] = total_events;

    write_run_files(cfg,
                    {"events.csv", "events.json", "true_model.ckpt", "true_model.ckpt.json"},
                    notes, out_dir);

    std::cout << "simulated " << n << " sequences, " << total_events << " events";
    if (!truncated.empty()) {
        std::cout << " (" << truncated.size() << " hit the max_events guard)";
    }
    std::cout << "\n";
}

void run_train(const json& cfg, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    const Dataset data = load_dataset(cfg);
    const KernelModel init = model_from_config(cfg, data.domain);

    TrainConfig tc;
    const auto& jt = cfg.at("train");
    tc.learning_rate = jt.at("lr").get<double>();
    tc.batch_size = jt.at("batch").get<int>();
    tc.iterations = jt.at("iters").get<int>();
    tc.mc.n_samples = jt.at("mc_samples").get<int>();
    tc.holdout_fraction = jt.at("holdout").get<double>();
    tc.checkpoint_every = jt.at("checkpoint_every").get<int>();
    tc.clip_norm = jt.at("clip_norm").get<double>();
    tc.seed = cfg.at("seed").get<std::uint64_t>();
    tc.mc.seed = derive_seed(tc.seed, "train-mc");
    tc.threads = resolve_threads(cfg.at("threads").get<int>());

    TrainResult result;
    try {
        result = train(init, data, tc);
    } catch (const TrainAbortError& e) {
        save_checkpoint(e.last_finite_model(), out_dir / "abort.ckpt");
        throw NumericFailure(std::string(e.what()) + " (last finite state in abort.ckpt)");
    }

    save_checkpoint(result.model, out_dir / "model.ckpt");
    write_trace_csv(result.trace, out_dir / "trace.csv");

    json holdout;
    holdout["holdout_indices"] = result.holdout_indices;
    holdout["train_indices"] = result.train_indices;
    write_json_file(holdout, out_dir / "holdout.json");

    Dataset holdout_data;
    holdout_data.domain = data.domain;
    holdout_data.normalization = data.normalization;
    for (std::size_t i : result.holdout_indices) {
        holdout_data.sequences.push_back(data.sequences[i]);
    }
    std::vector<std::string> files{"model.ckpt", "model.ckpt.json", "trace.csv",
                                   "holdout.json"};
    if (!holdout_data.sequences.empty()) {
        write_dataset_json(holdout_data, out_dir / "holdout_data.json");
        files.push_back("holdout_data.json");
    }

    json notes;
    notes["best_iteration"] = result.best_iteration;
    notes["best_holdout_ll"] = result.best_holdout_ll;
    write_run_files(cfg, files, notes, out_dir);

    std::cout << "trained " << tc.iterations << " iterations; best holdout ll "
              << result.best_holdout_ll << " at iteration " << result.best_iteration << "\n";
}

void run_eval(const json& cfg, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    const Dataset data = load_dataset(cfg);
    const std::string model_path = cfg.at("eval").at("model").get<std::string>();
    if (model_path.empty()) throw std::invalid_argument("--model checkpoint is required");
    const KernelModel fitted = load_checkpoint(model_path).model;
    if (!(fitted.domain == data.domain)) {
        throw DataError("eval: model domain does not match the dataset domain");
    }

    std::optional<KernelModel> truth;
    const std::string true_path = cfg.at("eval").at("true_model").get<std::string>();
    if (!true_path.empty()) truth = load_checkpoint(true_path).model;

    EvalGrid grid;
    grid.time_nodes = cfg.at("eval").at("time_nodes").get<int>();
    grid.mark_nodes_per_axis = cfg.at("eval").at("mark_nodes").get<int>();
    MCIntegralConfig mc;
    mc.n_samples = cfg.at("eval").at("mc_samples").get<int>();
    mc.seed = derive_seed(cfg.at("seed").get<std::uint64_t>(), "eval-mc");
    const int threads = resolve_threads(cfg.at("threads").get<int>());

    const EvalReport report =
        evaluate(truth ? &*truth : nullptr, fitted, data, grid, mc, threads);
    write_eval_report_json(report, out_dir / "eval_report.json");
    std::vector<std::string> files{"eval_report.json"};

    if (cfg.at("eval").at("export_figures").get<bool>()) {
        FigureExportOptions options;
        options.trace_time_nodes = grid.time_nodes;
        options.trace_mark_nodes = grid.mark_nodes_per_axis;
        const std::size_t traces = std::min<std::size_t>(3, data.sequences.size());
        options.sequence_indices.clear();
        for (std::size_t i = 0; i < traces; ++i) options.sequence_indices.push_back(i);
        const auto figure_files = export_figure_data(truth ? &*truth : nullptr, fitted, data,
                                                     options, out_dir / "figures");
        for (const auto& name : figure_files) files.push_back("figures/" + name);
    }

    json notes;
    notes["predictive_ll"] = report.predictive_ll;
    if (report.mae) notes["mae"] = *report.mae;
    write_run_files(cfg, files, notes, out_dir);

    std::cout << "predictive ll " << report.predictive_ll;
    if (report.mae) std::cout << ", intensity MAE " << *report.mae;
    std::cout << "\n";
}

void dispatch(const json& cfg, const fs::path& out_dir) {
    const std::string command = cfg.at("command").get<std::string>();
    if (command == "simulate") {
        run_simulate(cfg, out_dir);
    } else if (command == "train") {
        run_train(cfg, out_dir);
    } else if (command == "eval") {
        run_eval(cfg, out_dir);
    } else {
        throw std::invalid_argument("unknown command '" + command + "' in resolved config");
    }
}

// Byte comparison with one normalization: the wall-time column of trace.csv
// is inherently non-reproducible and is stripped before comparing.
std::string comparable_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("repro: missing file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string bytes = ss.str();
    if (path.filename() == "trace.csv") {
        std::istringstream lines(bytes);
        std::string line, normalized;
        while (std::getline(lines, line)) {
            const auto cut = line.rfind(',');
            normalized += line.substr(0, cut);
            normalized += '\n';
        }
        return normalized;
    }
    return bytes;
}

int run_repro(const fs::path& run_dir, bool keep) {
    const json manifest = load_config_file(run_dir / "run_manifest.json");
    const json cfg = load_config_file(run_dir / "resolved_config.json");

    const fs::path fresh = run_dir / ".repro_tmp";
    fs::remove_all(fresh);
    dispatch(cfg, fresh);

    int mismatches = 0;
    for (const auto& entry : manifest.at("files")) {
        const std::string name = entry.get<std::string>();
        const std::string original = comparable_bytes(run_dir / name);
        const std::string replayed = comparable_bytes(fresh / name);
        const bool ok = original == replayed;
        std::cout << (ok ? "  ok   " : "  DIFF ") << name << "\n";
        if (!ok) ++mismatches;
    }
    if (!keep) fs::remove_all(fresh);
    if (mismatches > 0) {
        std::cerr << "repro: " << mismatches << " file(s) differ\n";
        return 3;
    }
    std::cout << "repro: all files match\n";
    return 0;
}

// ---------------------------------------------------------------------------
// flag -> config wiring

struct FlagBinder {
    CLI::App* cmd;
    json* cfg;

    void number(const std::string& names, const char* key_path, const std::string& help) {
        json* cfg_ptr = cfg;
        const std::string path(key_path);
        cmd->add_option_function<double>(
            names, [cfg_ptr, path](double v) { set_path(*cfg_ptr, path, v); }, help);
    }
    void integer(const std::string& names, const char* key_path, const std::string& help) {
        json* cfg_ptr = cfg;
        const std::string path(key_path);
        cmd->add_option_function<long long>(
            names, [cfg_ptr, path](long long v) { set_path(*cfg_ptr, path, v); }, help);
    }
    void text(const std::string& names, const char* key_path, const std::string& help) {
        json* cfg_ptr = cfg;
        const std::string path(key_path);
        cmd->add_option_function<std::string>(
            names, [cfg_ptr, path](const std::string& v) { set_path(*cfg_ptr, path, v); },
            help);
    }
    void boolean(const std::string& names, const char* key_path, const std::string& help) {
        json* cfg_ptr = cfg;
        const std::string path(key_path);
        cmd->add_flag_function(
            names, [cfg_ptr, path](std::int64_t v) { set_path(*cfg_ptr, path, v > 0); },
            help);
    }
    void number_list(const std::string& names, const char* key_path, const std::string& help) {
        json* cfg_ptr = cfg;
        const std::string path(key_path);
        cmd->add_option_function<std::vector<double>>(
            names,
            [cfg_ptr, path](const std::vector<double>& v) { set_path(*cfg_ptr, path, v); },
            help);
    }
    void int_list(const std::string& names, const char* key_path, const std::string& help) {
        json* cfg_ptr = cfg;
        const std::string path(key_path);
        cmd->add_option_function<std::vector<int>>(
            names, [cfg_ptr, path](const std::vector<int>& v) { set_path(*cfg_ptr, path, v); },
            help);
    }

    template <typename T>
    static void set_path(json& cfg, const std::string& dotted, const T& value) {
        json* node = &cfg;
        std::size_t start = 0;
        while (true) {
            const std::size_t dot = dotted.find('.', start);
            if (dot == std::string::npos) {
                (*node)[dotted.substr(start)] = value;
                return;
            }
            node = &(*node)[dotted.substr(start, dot - start)];
            start = dot + 1;
        }
    }
};

void add_common_flags(FlagBinder& bind, std::string& config_path) {
    bind.cmd->add_option("--config", config_path, "JSON config file (flags override it)");
    bind.integer("--seed", "seed", "master seed; all randomness derives from it");
    bind.integer("--threads", "threads", "worker cap (0 = auto, env NSMPP_THREADS)");
}

void add_domain_flags(FlagBinder& bind) {
    bind.number("--domain.T,--T", "domain.T", "time horizon");
    bind.number_list("--domain.mark-lo,--mark-lo", "domain.mark_lo", "mark box lower bounds");
    bind.number_list("--domain.mark-hi,--mark-hi", "domain.mark_hi", "mark box upper bounds");
}

void add_model_flags(FlagBinder& bind) {
    bind.text("--model.family,--model", "model.family", "kernel family: exp|spectral|basis");
    bind.number("--model.mu,--mu", "model.mu", "background rate");
    bind.boolean("--model.mu-trainable", "model.mu_trainable", "train mu (softplus)");
    bind.number("--model.alpha,--alpha", "model.alpha", "exponential kernel magnitude");
    bind.number("--model.beta,--beta", "model.beta", "exponential kernel decay rate");
    bind.integer("--model.rank,--rank", "model.rank", "spectral kernel rank R");
    bind.int_list("--model.trunk,--trunk", "model.trunk", "trunk layer widths");
    bind.int_list("--model.branch-hidden,--branch-hidden", "model.branch_hidden",
                  "branch hidden widths");
    bind.number("--model.output-scale,--output-scale", "model.output_scale",
                "feature sigmoid scale s");
    bind.integer("--model.init-seed,--init-seed", "model.init_seed",
                 "net init seed (0 = derive from master seed)");
    bind.integer("--model.basis-size,--basis-size", "model.basis_size",
                 "cosine basis size S");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"nsmpp: neural spectral marked point process toolkit"};
    app.require_subcommand(1);

    // Flags write into per-command override objects; the final config is
    // defaults < --config file < flag overrides.
    json sim_cfg = json::object();
    json train_cfg = json::object();
    json eval_cfg = json::object();
    std::string sim_config_path, train_config_path, eval_config_path;
    std::string sim_out, train_out, eval_out, repro_dir;
    bool repro_keep = false;

    auto* sim = app.add_subcommand("simulate", "generate a synthetic event dataset");
    sim->add_option("--out", sim_out, "output directory")->required();
    {
        FlagBinder bind{sim, &sim_cfg};
        add_common_flags(bind, sim_config_path);
        add_domain_flags(bind);
        add_model_flags(bind);
        bind.integer("--sim.n,--n", "sim.n", "number of sequences");
        bind.integer("--sim.max-events,--max-events", "sim.max_events",
                     "per-sequence explosion guard");
        bind.number("--model.target-branching,--target-branching", "model.target_branching",
                    "spectral generator branching-ratio calibration target");
    }

    auto* tr = app.add_subcommand("train", "fit a kernel model by maximum likelihood");
    tr->add_option("--out", train_out, "output directory")->required();
    {
        FlagBinder bind{tr, &train_cfg};
        add_common_flags(bind, train_config_path);
        add_domain_flags(bind);
        add_model_flags(bind);
        bind.text("--data", "io.data", "event dataset (.json, or .csv with --domain.*)");
        bind.number("--io.normalize-to,--normalize-to", "io.normalize_to",
                    "normalize coordinates to [0, X] before fitting");
        bind.number("--train.lr,--lr", "train.lr", "learning rate");
        bind.integer("--train.batch,--batch", "train.batch", "minibatch size");
        bind.integer("--train.iters,--iters", "train.iters", "iterations");
        bind.integer("--train.mc-samples,--mc-samples", "train.mc_samples",
                     "MC samples per sequence");
        bind.number("--train.holdout,--holdout", "train.holdout", "holdout fraction");
        bind.integer("--train.checkpoint-every,--checkpoint-every", "train.checkpoint_every",
                     "holdout evaluation period");
        bind.number("--train.clip-norm,--clip-norm", "train.clip_norm",
                    "gradient norm clip (0 disables)");
    }

    auto* ev = app.add_subcommand("eval", "evaluate a fitted model on a test dataset");
    ev->add_option("--out", eval_out, "output directory")->required();
    {
        FlagBinder bind{ev, &eval_cfg};
        add_common_flags(bind, eval_config_path);
        add_domain_flags(bind);
        bind.text("--data", "io.data", "test dataset");
        bind.text("--eval.model,--model", "eval.model", "fitted model checkpoint");
        bind.text("--eval.true-model,--true-model", "eval.true_model",
                  "true model checkpoint (enables intensity MAE)");
        bind.integer("--eval.time-nodes,--time-nodes", "eval.time_nodes",
                     "evaluation grid time nodes");
        bind.integer("--eval.mark-nodes,--mark-nodes", "eval.mark_nodes",
                     "evaluation grid mark nodes per axis");
        bind.integer("--eval.mc-samples,--mc-samples", "eval.mc_samples",
                     "MC samples per sequence");
        bind.boolean("--eval.export-figures,--export-figures", "eval.export_figures",
                     "write kernel grids, slices, and intensity traces");
        bind.number("--io.normalize-to,--normalize-to", "io.normalize_to",
                    "normalize coordinates to [0, X] before evaluating");
    }

    auto* rp = app.add_subcommand("repro", "re-execute a run directory and diff outputs");
    rp->add_option("--run", repro_dir, "completed run directory")->required();
    rp->add_flag("--keep", repro_keep, "keep the replay directory on success");

    // Two-phase parse: flags must override the config file, so apply the
    // config file first and then re-parse the command line on top of it.
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        auto resolve = [](const std::string& command, const std::string& config_path,
                          const json& overrides) {
            json cfg = default_config(command);
            if (!config_path.empty()) merge_into(cfg, load_config_file(config_path));
            merge_into(cfg, overrides);
            cfg["command"] = command;
            return cfg;
        };

        if (sim->parsed()) {
            run_simulate(resolve("simulate", sim_config_path, sim_cfg), sim_out);
        } else if (tr->parsed()) {
            run_train(resolve("train", train_config_path, train_cfg), train_out);
        } else if (ev->parsed()) {
            run_eval(resolve("eval", eval_config_path, eval_cfg), eval_out);
        } else if (rp->parsed()) {
            return run_repro(repro_dir, repro_keep);
        }
        return 0;
    } catch (const NumericFailure& e) {
        std::cerr << "nsmpp: numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "nsmpp: data error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "nsmpp: usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::logic_error& e) {
        std::cerr << "nsmpp: numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "nsmpp: error: " << e.what() << "\n";
        return 2;
    }
}
