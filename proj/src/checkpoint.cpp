#include "nsmpp/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "nsmpp/dataset_io.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace nsmpp {

namespace {

constexpr char kMagic[4] = {'N', 'S', 'M', 'P'};
constexpr std::uint32_t kVersion = 1;

using nlohmann::json;

struct Writer {
    std::ofstream out;
    explicit Writer(const std::filesystem::path& path) : out(path, std::ios::binary) {
        if (!out) throw DataError("cannot write " + path.string());
    }
    void bytes(const void* p, std::size_t n) {
        out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    }
    void u8(std::uint8_t v) { bytes(&v, 1); }
    void u32(std::uint32_t v) { bytes(&v, 4); }
    void u64(std::uint64_t v) { bytes(&v, 8); }
    void f64(double v) { bytes(&v, 8); }
    void vec(const Eigen::VectorXd& v) {
        bytes(v.data(), static_cast<std::size_t>(v.size()) * sizeof(double));
    }
    void mat(const Eigen::MatrixXd& m) {  // column-major
        bytes(m.data(), static_cast<std::size_t>(m.size()) * sizeof(double));
    }
};

struct Reader {
    std::ifstream in;
    std::filesystem::path path;
    explicit Reader(const std::filesystem::path& p) : in(p, std::ios::binary), path(p) {
        if (!in) throw DataError("cannot open " + p.string());
    }
    void bytes(void* p, std::size_t n) {
        in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (!in) throw DataError("truncated checkpoint " + path.string());
    }
    std::uint8_t u8() {
        std::uint8_t v;
        bytes(&v, 1);
        return v;
    }
    std::uint32_t u32() {
        std::uint32_t v;
        bytes(&v, 4);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v;
        bytes(&v, 8);
        return v;
    }
    double f64() {
        double v;
        bytes(&v, 8);
        return v;
    }
    Eigen::VectorXd vec(Eigen::Index n) {
        Eigen::VectorXd v(n);
        bytes(v.data(), static_cast<std::size_t>(n) * sizeof(double));
        return v;
    }
    Eigen::MatrixXd mat(Eigen::Index rows, Eigen::Index cols) {
        Eigen::MatrixXd m(rows, cols);
        bytes(m.data(), static_cast<std::size_t>(m.size()) * sizeof(double));
        return m;
    }
};

void write_domain(Writer& w, const Domain& d) {
    w.f64(d.horizon_T);
    w.u32(static_cast<std::uint32_t>(d.mark_dim()));
    w.vec(d.mark_lo);
    w.vec(d.mark_hi);
}

Domain read_domain(Reader& r) {
    Domain d;
    d.horizon_T = r.f64();
    const Eigen::Index dim = static_cast<Eigen::Index>(r.u32());
    d.mark_lo = r.vec(dim);
    d.mark_hi = r.vec(dim);
    return d;
}

json spec_sidecar(const KernelModel& model) {
    json j;
    j["format_version"] = kVersion;
    j["mu"] = model.mu;
    j["mu_trainable"] = model.mu_trainable;
    j["domain"]["T"] = model.domain.horizon_T;
    j["domain"]["mark_lo"] = std::vector<double>(
        model.domain.mark_lo.data(), model.domain.mark_lo.data() + model.domain.mark_dim());
    j["domain"]["mark_hi"] = std::vector<double>(
        model.domain.mark_hi.data(), model.domain.mark_hi.data() + model.domain.mark_dim());
    switch (model.family()) {
        case KernelFamily::Exponential: {
            const auto& k = model.exp_kernel();
            j["family"] = "exponential";
            j["alpha"] = k.alpha;
            j["beta"] = k.beta;
            break;
        }
        case KernelFamily::Spectral: {
            const auto& k = model.spectral_kernel();
            j["family"] = "spectral";
            j["rank"] = k.rank();
            j["input_dim"] = k.spec.input_dim;
            j["trunk_layers"] = k.spec.trunk_layers;
            j["branch_hidden"] = k.spec.branch_hidden;
            j["output_scale"] = k.spec.output_scale;
            j["param_count"] = k.params.size();
            break;
        }
        case KernelFamily::Basis: {
            const auto& k = model.basis_kernel();
            j["family"] = "basis";
            j["basis_size"] = k.size();
            break;
        }
    }
    return j;
}

}  // namespace

void save_checkpoint(const KernelModel& model, const std::filesystem::path& path,
                     const AdamState* opt_state) {
    Writer w(path);
    w.bytes(kMagic, 4);
    w.u32(kVersion);
    w.u32(static_cast<std::uint32_t>(model.family()));
    w.u8(model.mu_trainable ? 1 : 0);
    w.f64(model.mu);
    write_domain(w, model.domain);
    w.u8(model.bounds ? 1 : 0);
    if (model.bounds) {
        w.f64(model.bounds->c1);
        w.f64(model.bounds->c2);
    }

    switch (model.family()) {
        case KernelFamily::Exponential: {
            const auto& k = model.exp_kernel();
            w.f64(k.alpha);
            w.f64(k.beta);
            break;
        }
        case KernelFamily::Spectral: {
            const auto& k = model.spectral_kernel();
            w.u32(static_cast<std::uint32_t>(k.rank()));
            w.vec(k.spectrum_raw);
            w.u32(static_cast<std::uint32_t>(k.spec.input_dim));
            w.u32(static_cast<std::uint32_t>(k.spec.trunk_layers.size()));
            for (int width : k.spec.trunk_layers) w.u32(static_cast<std::uint32_t>(width));
            w.u32(static_cast<std::uint32_t>(k.spec.branch_count));
            w.u32(static_cast<std::uint32_t>(k.spec.branch_hidden.size()));
            for (int width : k.spec.branch_hidden) w.u32(static_cast<std::uint32_t>(width));
            w.f64(k.spec.output_scale);
            w.u64(static_cast<std::uint64_t>(k.params.size()));
            w.vec(k.params);
            break;
        }
        case KernelFamily::Basis: {
            const auto& k = model.basis_kernel();
            w.u32(static_cast<std::uint32_t>(k.size()));
            w.mat(k.A);
            w.u8(k.factors ? 1 : 0);
            if (k.factors) {
                w.u32(static_cast<std::uint32_t>(k.factors->nu.size()));
                w.vec(k.factors->nu);
                w.mat(k.factors->Psi);
                w.mat(k.factors->Phi);
            }
            break;
        }
    }

    w.u8(opt_state ? 1 : 0);
    if (opt_state) {
        w.u64(opt_state->step);
        w.u64(static_cast<std::uint64_t>(opt_state->m.size()));
        w.vec(opt_state->m);
        w.vec(opt_state->v);
    }
    if (!w.out) throw DataError("write failed for " + path.string());

    std::ofstream sidecar(path.string() + ".json");
    if (!sidecar) throw DataError("cannot write " + path.string() + ".json");
    sidecar << spec_sidecar(model).dump(2) << "\n";
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
    Reader r(path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw DataError(path.string() + ": not a checkpoint (bad magic)");
    }
    const std::uint32_t version = r.u32();
    if (version != kVersion) {
        throw DataError(path.string() + ": checkpoint format version " +
                        std::to_string(version) + " unsupported (reader version " +
                        std::to_string(kVersion) + ")");
    }

    LoadedCheckpoint loaded;
    KernelModel& model = loaded.model;
    const std::uint32_t family = r.u32();
    model.mu_trainable = r.u8() != 0;
    model.mu = r.f64();
    model.domain = read_domain(r);
    if (r.u8() != 0) {
        IntensityBounds b;
        b.c1 = r.f64();
        b.c2 = r.f64();
        model.bounds = b;
    }

    switch (family) {
        case 0: {
            ExpHawkesKernel k;
            k.alpha = r.f64();
            k.beta = r.f64();
            model.kernel = k;
            break;
        }
        case 1: {
            SpectralKernel k;
            const Eigen::Index rank = static_cast<Eigen::Index>(r.u32());
            k.spectrum_raw = r.vec(rank);
            k.spec.input_dim = static_cast<int>(r.u32());
            k.spec.trunk_layers.resize(r.u32());
            for (int& width : k.spec.trunk_layers) width = static_cast<int>(r.u32());
            k.spec.branch_count = static_cast<int>(r.u32());
            k.spec.branch_hidden.resize(r.u32());
            for (int& width : k.spec.branch_hidden) width = static_cast<int>(r.u32());
            k.spec.output_scale = r.f64();
            const Eigen::Index plen = static_cast<Eigen::Index>(r.u64());
            k.params = r.vec(plen);
            if (plen != make_layout(k.spec).total_params) {
                throw DataError(path.string() + ": parameter count does not match the spec");
            }
            if (k.spec.rank() != rank) {
                throw DataError(path.string() + ": spectrum rank does not match branch count");
            }
            model.kernel = std::move(k);
            break;
        }
        case 2: {
            BasisKernel k;
            const Eigen::Index S = static_cast<Eigen::Index>(r.u32());
            k.A = r.mat(S, S);
            k.domain = model.domain;
            if (r.u8() != 0) {
                BasisKernel::Factors f;
                const Eigen::Index rank = static_cast<Eigen::Index>(r.u32());
                f.nu = r.vec(rank);
                f.Psi = r.mat(rank, S);
                f.Phi = r.mat(rank, S);
                k.factors = std::move(f);
            }
            model.kernel = std::move(k);
            break;
        }
        default:
            throw DataError(path.string() + ": unknown kernel family tag " +
                            std::to_string(family));
    }

    if (r.u8() != 0) {
        AdamState opt;
        opt.step = r.u64();
        const Eigen::Index n = static_cast<Eigen::Index>(r.u64());
        opt.m = r.vec(n);
        opt.v = r.vec(n);
        loaded.opt_state = std::move(opt);
    }
    return loaded;
}

void check_expectation(const KernelModel& model, const ModelExpectation& expect) {
    auto family_name = [](KernelFamily f) {
        switch (f) {
            case KernelFamily::Exponential: return "exponential";
            case KernelFamily::Spectral: return "spectral";
            default: return "basis";
        }
    };
    if (expect.family && *expect.family != model.family()) {
        throw DataError(std::string("checkpoint family mismatch: expected ") +
                        family_name(*expect.family) + ", found " +
                        family_name(model.family()));
    }
    if (expect.rank) {
        if (model.family() != KernelFamily::Spectral) {
            throw DataError("checkpoint mismatch: rank expectation on a non-spectral model");
        }
        const int found = model.spectral_kernel().rank();
        if (found != *expect.rank) {
            throw DataError("checkpoint rank mismatch: expected R=" +
                            std::to_string(*expect.rank) + ", found R=" +
                            std::to_string(found));
        }
    }
    if (expect.net) {
        if (model.family() != KernelFamily::Spectral ||
            !(model.spectral_kernel().spec == *expect.net)) {
            throw DataError("checkpoint net-spec mismatch: stored spec differs from expected");
        }
    }
    if (expect.basis_size) {
        if (model.family() != KernelFamily::Basis) {
            throw DataError("checkpoint mismatch: basis expectation on a non-basis model");
        }
        const int found = model.basis_kernel().size();
        if (found != *expect.basis_size) {
            throw DataError("checkpoint basis-size mismatch: expected S=" +
                            std::to_string(*expect.basis_size) + ", found S=" +
                            std::to_string(found));
        }
    }
}

}  // namespace nsmpp
