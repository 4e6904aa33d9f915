#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "nsmpp/core.hpp"

namespace nsmpp {

/// Ingestion / export failures (missing file, malformed row, domain
/// violation). The CLI maps these to its data-error exit code.
class DataError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Formats a double with the shortest representation that round-trips
/// exactly; used by every text writer so outputs are byte-reproducible.
std::string format_double(double v);

/// CSV event file: header `seq_id,t,m1,...,md`, rows sorted by (seq_id, t),
/// '.' decimal point. The format does not carry the observation window, so
/// the caller supplies the Domain. Empty sequences are not representable.
Dataset read_dataset_csv(const std::filesystem::path& path, const Domain& domain);
void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path);

/// JSON event file: top-level object with "domain" {T, mark_lo, mark_hi},
/// "sequences" as a list of lists of [t, m...], and an optional
/// "normalization" {scale, offset} record.
Dataset read_dataset_json(const std::filesystem::path& path);
void write_dataset_json(const Dataset& ds, const std::filesystem::path& path);

}  // namespace nsmpp
