#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scene/error.hpp"

namespace scene {

struct RdPoint {
    double bitrate_kbps = 0.0;
    double metric = 0.0;
    std::string label;
};

// At least 4 points (cubic fit), strictly increasing bitrate after sorting.
// Curves where the metric is not non-decreasing in bitrate carry a warning
// (real encoders occasionally invert) but are accepted.
struct RdCurve {
    std::vector<RdPoint> points;
    std::vector<std::string> warnings;

    static RdCurve from_points(std::vector<RdPoint> pts);
    double min_metric() const;
    double max_metric() const;
};

enum class BdInterp { cubic, pchip };

struct BdRateResult {
    std::optional<double> percent;  // empty <=> no overlapping metric interval
    std::string undefined_reason;
    double overlap_lo = 0.0;
    double overlap_hi = 0.0;
    std::vector<std::string> warnings;

    bool defined() const { return percent.has_value(); }
};

// Bjøntegaard delta rate: fits log10(bitrate) as a function of the metric
// for both curves (classic cubic least squares, or monotone PCHIP), averages
// the difference over the overlapping metric interval and maps back:
// (10^avg - 1) * 100. Duplicate metric values within one curve are nudged
// by the smallest representable step, with a warning.
BdRateResult bd_rate(const RdCurve& anchor, const RdCurve& test,
                     BdInterp interp = BdInterp::cubic);

}  // namespace scene
