#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "xpf/image.hpp"

namespace xpf {

struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    std::uint64_t total() const { return tp + fp + fn + tn; }
    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Throws InvalidArgument on a shape mismatch.
ConfusionCounts confusion(const Mask& pred, const Mask& gt);

/// Both masks empty scores 1; any other zero denominator scores 0.
double dice(const ConfusionCounts& c);
double precision(const ConfusionCounts& c);
double recall(const ConfusionCounts& c);

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;  ///< population standard deviation
};

/// Throws InvalidArgument for an empty list.
MeanStd aggregate(const std::vector<double>& scores);

/// One scored prediction/ground-truth pair belonging to a scan.
struct ScoredItem {
    std::string scan;
    std::string name;
    ConfusionCounts counts;
};

/// Per-item scores, per-scan means, and mean/std across scan means for
/// dice, precision and recall.
nlohmann::json evaluation_report(const std::vector<ScoredItem>& items);

} // namespace xpf
