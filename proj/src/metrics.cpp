#include "xpf/metrics.hpp"

#include <cmath>
#include <map>

#include "xpf/errors.hpp"
#include "xpf/simd/kernels.hpp"

namespace xpf {

ConfusionCounts confusion(const Mask& pred, const Mask& gt) {
    if (!pred.same_shape(gt) || pred.size() != gt.size()) {
        throw InvalidArgument("confusion: mask shapes differ");
    }
    if (pred.size() == 0) {
        return {};
    }
    const auto c = simd::active().confusion(pred.pixels.data(), gt.pixels.data(), pred.size());
    return {c.tp, c.fp, c.fn, c.tn};
}

namespace {

bool both_empty(const ConfusionCounts& c) { return c.tp == 0 && c.fp == 0 && c.fn == 0; }

double ratio(std::uint64_t num, std::uint64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

} // namespace

double dice(const ConfusionCounts& c) {
    return both_empty(c) ? 1.0 : ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
}

double precision(const ConfusionCounts& c) {
    return both_empty(c) ? 1.0 : ratio(c.tp, c.tp + c.fp);
}

double recall(const ConfusionCounts& c) {
    return both_empty(c) ? 1.0 : ratio(c.tp, c.tp + c.fn);
}

MeanStd aggregate(const std::vector<double>& scores) {
    if (scores.empty()) {
        throw InvalidArgument("aggregate: empty score list");
    }
    double mean = 0.0;
    for (double s : scores) {
        mean += s;
    }
    mean /= static_cast<double>(scores.size());
    double var = 0.0;
    for (double s : scores) {
        var += (s - mean) * (s - mean);
    }
    var /= static_cast<double>(scores.size());
    return {mean, std::sqrt(var)};
}

nlohmann::json evaluation_report(const std::vector<ScoredItem>& items) {
    if (items.empty()) {
        throw InvalidArgument("evaluation_report: no items");
    }
    using Fn = double (*)(const ConfusionCounts&);
    const std::pair<const char*, Fn> metrics[] = {{"dice", dice}, {"precision", precision}, {"recall", recall}};

    nlohmann::json report = nlohmann::json::object();
    report["n_items"] = items.size();
    for (const auto& [name, fn] : metrics) {
        std::map<std::string, std::vector<double>> per_scan;
        std::vector<double> all;
        nlohmann::json per_item = nlohmann::json::array();
        for (const auto& it : items) {
            const double s = fn(it.counts);
            per_scan[it.scan].push_back(s);
            all.push_back(s);
            per_item.push_back({{"scan", it.scan}, {"item", it.name}, {"score", s}});
        }
        std::vector<double> scan_means;
        nlohmann::json scans = nlohmann::json::object();
        for (const auto& [scan, scores] : per_scan) {
            const MeanStd ms = aggregate(scores);
            scan_means.push_back(ms.mean);
            scans[scan] = {{"mean", ms.mean}, {"std", ms.std}, {"n", scores.size()}};
        }
        const MeanStd across = aggregate(scan_means);
        const MeanStd flat = aggregate(all);
        report[name] = {{"mean", across.mean},
                        {"std", across.std},
                        {"per_scan", scans},
                        {"per_item_mean", flat.mean},
                        {"per_item_std", flat.std},
                        {"per_item", per_item}};
    }
    return report;
}

} // namespace xpf
