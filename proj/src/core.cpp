#include "nsmpp/core.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace nsmpp {

void validate_domain(const Domain& domain) {
    if (!(domain.horizon_T > 0.0) || !std::isfinite(domain.horizon_T)) {
        throw std::invalid_argument("Domain: horizon_T must be positive and finite");
    }
    if (domain.mark_lo.size() != domain.mark_hi.size()) {
        throw std::invalid_argument("Domain: mark_lo and mark_hi must have equal length");
    }
    for (int i = 0; i < domain.mark_dim(); ++i) {
        if (!(domain.mark_lo[i] < domain.mark_hi[i])) {
            throw std::invalid_argument("Domain: mark_lo < mark_hi violated on axis " +
                                        std::to_string(i));
        }
    }
}

Domain temporal_domain(double horizon_T) {
    Domain d{horizon_T, Eigen::VectorXd(0), Eigen::VectorXd(0)};
    validate_domain(d);
    return d;
}

Domain marked_domain(double horizon_T, Eigen::VectorXd mark_lo, Eigen::VectorXd mark_hi) {
    Domain d{horizon_T, std::move(mark_lo), std::move(mark_hi)};
    validate_domain(d);
    return d;
}

std::optional<SequenceViolation> validate_sequence(const EventSequence& seq) {
    const Domain& dom = seq.domain;
    double prev_t = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < seq.events.size(); ++i) {
        const EventPoint& x = seq.events[i];
        if (!(x.t >= 0.0 && x.t < dom.horizon_T)) {
            return SequenceViolation{i, "time out of window at index " + std::to_string(i)};
        }
        if (!(x.t > prev_t)) {
            return SequenceViolation{i, "non-increasing time at index " + std::to_string(i)};
        }
        if (x.mark.size() != dom.mark_lo.size()) {
            return SequenceViolation{i, "mark dimension mismatch at index " + std::to_string(i)};
        }
        for (int a = 0; a < dom.mark_dim(); ++a) {
            if (!(x.mark[a] >= dom.mark_lo[a] && x.mark[a] <= dom.mark_hi[a])) {
                return SequenceViolation{i, "mark out of box at index " + std::to_string(i)};
            }
        }
        prev_t = x.t;
    }
    return std::nullopt;
}

void validate_dataset(const Dataset& ds) {
    validate_domain(ds.domain);
    for (std::size_t j = 0; j < ds.sequences.size(); ++j) {
        if (!(ds.sequences[j].domain == ds.domain)) {
            throw std::invalid_argument("Dataset: sequence " + std::to_string(j) +
                                        " does not share the dataset domain");
        }
        if (auto v = validate_sequence(ds.sequences[j])) {
            throw std::invalid_argument("Dataset: sequence " + std::to_string(j) + ": " +
                                        v->reason);
        }
    }
    if (ds.normalization) {
        const int axes = 1 + ds.domain.mark_dim();
        if (ds.normalization->scale.size() != axes || ds.normalization->offset.size() != axes) {
            throw std::invalid_argument("Dataset: affine record has wrong axis count");
        }
        for (int a = 0; a < axes; ++a) {
            if (ds.normalization->scale[a] == 0.0) {
                throw std::invalid_argument("Dataset: affine record not invertible on axis " +
                                            std::to_string(a));
            }
        }
    }
}

Dataset normalize_dataset(const Dataset& ds, double target_hi) {
    if (ds.sequences.empty()) {
        throw std::invalid_argument("normalize_dataset: dataset is empty");
    }
    if (!(target_hi > 0.0)) {
        throw std::invalid_argument("normalize_dataset: target_hi must be positive");
    }
    const int d = ds.domain.mark_dim();
    const int axes = 1 + d;

    AffineRecord step;
    step.scale = Eigen::VectorXd(axes);
    step.offset = Eigen::VectorXd(axes);

    // Axis 0 is time: [0, T_raw) -> [0, target_hi).
    if (!(ds.domain.horizon_T > 0.0)) {
        throw std::invalid_argument("normalize_dataset: degenerate range on axis 0 (time)");
    }
    step.scale[0] = target_hi / ds.domain.horizon_T;
    step.offset[0] = 0.0;

    // Mark axes: [lo, hi] -> [0, target_hi].
    for (int a = 0; a < d; ++a) {
        const double range = ds.domain.mark_hi[a] - ds.domain.mark_lo[a];
        if (!(range > 0.0)) {
            throw std::invalid_argument("normalize_dataset: degenerate range on axis " +
                                        std::to_string(a + 1));
        }
        step.scale[a + 1] = target_hi / range;
        step.offset[a + 1] = -ds.domain.mark_lo[a] * target_hi / range;
    }

    Dataset out;
    out.domain.horizon_T = target_hi;
    out.domain.mark_lo = Eigen::VectorXd::Zero(d);
    out.domain.mark_hi = Eigen::VectorXd::Constant(d, target_hi);

    out.sequences.reserve(ds.sequences.size());
    for (const EventSequence& seq : ds.sequences) {
        EventSequence ns;
        ns.domain = out.domain;
        ns.events.reserve(seq.events.size());
        for (const EventPoint& x : seq.events) {
            EventPoint nx;
            nx.t = step.apply(0, x.t);
            nx.mark = Eigen::VectorXd(d);
            for (int a = 0; a < d; ++a) nx.mark[a] = step.apply(a + 1, x.mark[a]);
            ns.events.push_back(std::move(nx));
        }
        out.sequences.push_back(std::move(ns));
    }

    // Compose with an existing record so the inverse always targets the
    // original raw coordinates.
    if (ds.normalization) {
        AffineRecord composed;
        composed.scale = Eigen::VectorXd(axes);
        composed.offset = Eigen::VectorXd(axes);
        for (int a = 0; a < axes; ++a) {
            composed.scale[a] = step.scale[a] * ds.normalization->scale[a];
            composed.offset[a] = step.scale[a] * ds.normalization->offset[a] + step.offset[a];
        }
        out.normalization = composed;
    } else {
        out.normalization = step;
    }
    return out;
}

Dataset denormalize_dataset(const Dataset& ds) {
    if (!ds.normalization) return ds;
    const AffineRecord& rec = *ds.normalization;
    const int d = ds.domain.mark_dim();

    Dataset out;
    out.domain.horizon_T = rec.invert(0, ds.domain.horizon_T);
    out.domain.mark_lo = Eigen::VectorXd(d);
    out.domain.mark_hi = Eigen::VectorXd(d);
    for (int a = 0; a < d; ++a) {
        out.domain.mark_lo[a] = rec.invert(a + 1, ds.domain.mark_lo[a]);
        out.domain.mark_hi[a] = rec.invert(a + 1, ds.domain.mark_hi[a]);
    }
    out.sequences.reserve(ds.sequences.size());
    for (const EventSequence& seq : ds.sequences) {
        EventSequence rs;
        rs.domain = out.domain;
        rs.events.reserve(seq.events.size());
        for (const EventPoint& x : seq.events) {
            EventPoint rx;
            rx.t = rec.invert(0, x.t);
            rx.mark = Eigen::VectorXd(d);
            for (int a = 0; a < d; ++a) rx.mark[a] = rec.invert(a + 1, x.mark[a]);
            rs.events.push_back(std::move(rx));
        }
        out.sequences.push_back(std::move(rs));
    }
    return out;
}

}  // namespace nsmpp
