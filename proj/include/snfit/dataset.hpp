#pragma once

#include <istream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "snfit/error.hpp"

namespace snfit {

enum class Status { Failure, Runout };

struct Observation {
    double stress = 0.0;  // stress or strain amplitude
    double cycles = 0.0;  // cycles to failure, or runout time
    Status status = Status::Failure;

    bool failed() const noexcept { return status == Status::Failure; }
    bool operator==(const Observation&) const = default;
};

struct ScalingMeta {
    double s_max = 1.0;
    double n_max = 1.0;
};

struct DataAnchors {
    double n_low = 0.0;        // smallest N over all observations
    double n_high = 0.0;       // largest N among failures
    double n_mid = 0.0;        // log-scale midpoint of n_low and n_high
    double s_low_fail = 0.0;   // smallest stress among failures
    double s_high_fail = 0.0;  // largest stress among failures

    bool degenerate() const noexcept { return !(n_high > n_low); }
};

/// Scaled observations (max stress = max cycles = 1) plus the scaling used.
/// Immutable once built.
class SNDataset {
public:
    SNDataset(std::vector<Observation> scaled, ScalingMeta scaling);

    std::span<const Observation> observations() const noexcept { return observations_; }
    const ScalingMeta& scaling() const noexcept { return scaling_; }
    const DataAnchors& anchors() const noexcept { return anchors_; }
    std::size_t size() const noexcept { return observations_.size(); }
    std::size_t failure_count() const noexcept;

    /// Observations back in the original units.
    std::vector<Observation> unscaled() const;

private:
    std::vector<Observation> observations_;
    ScalingMeta scaling_;
    DataAnchors anchors_;
};

/// Parse CSV with header columns `stress,cycles,status[,count]` (any order).
std::vector<Observation> load_csv(std::istream& in);
std::vector<Observation> load_csv_file(const std::string& path);

/// Divide both columns by their maxima and compute the anchors.
SNDataset scale(std::span<const Observation> raw);

DataAnchors compute_anchors(std::span<const Observation> observations);

Status parse_status(std::string_view token);
std::string to_string(Status s);

}  // namespace snfit
