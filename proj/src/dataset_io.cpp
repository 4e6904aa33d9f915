#include "nsmpp/dataset_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

namespace nsmpp {

namespace {

using nlohmann::json;

double parse_double(const std::string& field, const std::string& where) {
    double v = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) {
        throw DataError("bad numeric field '" + field + "' in " + where);
    }
    return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

Dataset read_dataset_csv(const std::filesystem::path& path, const Domain& domain) {
    validate_domain(domain);
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());

    const int d = domain.mark_dim();
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty file " + path.string());
    const auto header = split_csv_line(line);
    if (header.size() != static_cast<std::size_t>(2 + d) || header[0] != "seq_id" ||
        header[1] != "t") {
        throw DataError("unexpected CSV header in " + path.string());
    }

    Dataset ds;
    ds.domain = domain;
    long long current_id = -1;
    bool have_current = false;
    EventSequence seq;
    seq.domain = domain;
    std::size_t lineno = 1;

    auto flush = [&]() {
        if (have_current) ds.sequences.push_back(std::move(seq));
        seq = EventSequence{};
        seq.domain = domain;
    };

    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        const std::string where = path.string() + ":" + std::to_string(lineno);
        if (fields.size() != static_cast<std::size_t>(2 + d)) {
            throw DataError("wrong field count in " + where);
        }
        const long long id = static_cast<long long>(parse_double(fields[0], where));
        EventPoint x;
        x.t = parse_double(fields[1], where);
        x.mark = Eigen::VectorXd(d);
        for (int a = 0; a < d; ++a) x.mark[a] = parse_double(fields[2 + a], where);

        if (!have_current) {
            current_id = id;
            have_current = true;
        } else if (id != current_id) {
            if (id < current_id) throw DataError("rows not sorted by seq_id at " + where);
            flush();
            have_current = true;
            current_id = id;
        }
        seq.events.push_back(std::move(x));
    }
    flush();

    try {
        validate_dataset(ds);
    } catch (const std::invalid_argument& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    return ds;
}

void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    const int d = ds.domain.mark_dim();
    out << "seq_id,t";
    for (int a = 0; a < d; ++a) out << ",m" << (a + 1);
    out << "\n";
    for (std::size_t j = 0; j < ds.sequences.size(); ++j) {
        for (const EventPoint& x : ds.sequences[j].events) {
            out << j << ',' << format_double(x.t);
            for (int a = 0; a < d; ++a) out << ',' << format_double(x.mark[a]);
            out << "\n";
        }
    }
    if (!out) throw DataError("write failed for " + path.string());
}

Dataset read_dataset_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }

    try {
        Dataset ds;
        const auto& jd = doc.at("domain");
        ds.domain.horizon_T = jd.at("T").get<double>();
        const auto lo = jd.at("mark_lo").get<std::vector<double>>();
        const auto hi = jd.at("mark_hi").get<std::vector<double>>();
        ds.domain.mark_lo = Eigen::Map<const Eigen::VectorXd>(lo.data(), lo.size());
        ds.domain.mark_hi = Eigen::Map<const Eigen::VectorXd>(hi.data(), hi.size());
        const int d = ds.domain.mark_dim();

        for (const auto& js : doc.at("sequences")) {
            EventSequence seq;
            seq.domain = ds.domain;
            for (const auto& je : js) {
                const auto row = je.get<std::vector<double>>();
                if (row.size() != static_cast<std::size_t>(1 + d)) {
                    throw DataError(path.string() + ": event row has wrong length");
                }
                EventPoint x;
                x.t = row[0];
                x.mark = Eigen::Map<const Eigen::VectorXd>(row.data() + 1, d);
                seq.events.push_back(std::move(x));
            }
            ds.sequences.push_back(std::move(seq));
        }

        if (doc.contains("normalization") && !doc["normalization"].is_null()) {
            const auto& jn = doc["normalization"];
            AffineRecord rec;
            const auto scale = jn.at("scale").get<std::vector<double>>();
            const auto offset = jn.at("offset").get<std::vector<double>>();
            rec.scale = Eigen::Map<const Eigen::VectorXd>(scale.data(), scale.size());
            rec.offset = Eigen::Map<const Eigen::VectorXd>(offset.data(), offset.size());
            ds.normalization = rec;
        }

        validate_dataset(ds);
        return ds;
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

void write_dataset_json(const Dataset& ds, const std::filesystem::path& path) {
    json doc;
    doc["domain"]["T"] = ds.domain.horizon_T;
    doc["domain"]["mark_lo"] =
        std::vector<double>(ds.domain.mark_lo.data(), ds.domain.mark_lo.data() + ds.domain.mark_dim());
    doc["domain"]["mark_hi"] =
        std::vector<double>(ds.domain.mark_hi.data(), ds.domain.mark_hi.data() + ds.domain.mark_dim());

    json seqs = json::array();
    for (const EventSequence& seq : ds.sequences) {
        json js = json::array();
        for (const EventPoint& x : seq.events) {
            json row = json::array();
            row.push_back(x.t);
            for (int a = 0; a < x.mark.size(); ++a) row.push_back(x.mark[a]);
            js.push_back(std::move(row));
        }
        seqs.push_back(std::move(js));
    }
    doc["sequences"] = std::move(seqs);

    if (ds.normalization) {
        const int axes = 1 + ds.domain.mark_dim();
        doc["normalization"]["scale"] = std::vector<double>(
            ds.normalization->scale.data(), ds.normalization->scale.data() + axes);
        doc["normalization"]["offset"] = std::vector<double>(
            ds.normalization->offset.data(), ds.normalization->offset.data() + axes);
    }

    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << doc.dump(2) << "\n";
    if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace nsmpp
