#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <span>
#include <vector>

#include "csiauth/core.hpp"
#include "csiauth/io.hpp"

namespace csiauth {

struct ScoredSample {
    double score = 0.0;
    int label = 0;  // 1 legitimate, 0 rogue
};

struct RocPoint {
    double threshold;
    double fpr;
    double tpr;
};

/// Points sorted by threshold descending, from (+inf, 0, 0) to (-inf, 1, 1).
/// A sample counts as positive at threshold t iff score > t.
struct RocCurve {
    std::vector<RocPoint> points;
};

struct OperatingPoint {
    double threshold;
    double fpr;
    double tpr;
};

inline RocCurve roc(std::span<const ScoredSample> scored) {
    std::size_t pos = 0, neg = 0;
    for (const auto& s : scored) {
        require(s.label == 0 || s.label == 1, "roc: labels must be 0 or 1");
        require(!std::isnan(s.score), "roc: NaN score");
        (s.label == 1 ? pos : neg) += 1;
    }
    require(pos > 0 && neg > 0, "roc: both classes must be present");

    std::vector<ScoredSample> sorted(scored.begin(), scored.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const ScoredSample& a, const ScoredSample& b) { return a.score > b.score; });

    constexpr double inf = std::numeric_limits<double>::infinity();
    RocCurve curve;
    curve.points.reserve(sorted.size() + 2);
    curve.points.push_back({inf, 0.0, 0.0});
    std::size_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        const double t = sorted[i].score;
        // at threshold t, everything strictly above t has been counted
        curve.points.push_back({t, static_cast<double>(fp) / neg, static_cast<double>(tp) / pos});
        while (i < sorted.size() && sorted[i].score == t) {
            (sorted[i].label == 1 ? tp : fp) += 1;
            ++i;
        }
    }
    curve.points.push_back({-inf, 1.0, 1.0});
    return curve;
}

/// Trapezoidal area over FPR; ties contribute one half.
inline double auc(const RocCurve& curve) {
    double area = 0.0;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const auto& a = curve.points[i - 1];
        const auto& b = curve.points[i];
        area += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
    }
    return area;
}

inline double auc(std::span<const ScoredSample> scored) { return auc(roc(scored)); }

/// Mann-Whitney U / (n_pos n_neg) via midranks.
inline double auc_mann_whitney(std::span<const ScoredSample> scored) {
    std::vector<ScoredSample> sorted(scored.begin(), scored.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const ScoredSample& a, const ScoredSample& b) { return a.score < b.score; });
    double rank_sum = 0.0;
    std::size_t pos = 0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j].score == sorted[i].score) ++j;
        const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k)
            if (sorted[k].label == 1) {
                rank_sum += midrank;
                ++pos;
            }
        i = j;
    }
    const std::size_t neg = sorted.size() - pos;
    require(pos > 0 && neg > 0, "auc_mann_whitney: both classes must be present");
    const double p = static_cast<double>(pos);
    return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

/// Smallest threshold whose empirical FPR does not exceed target_pfa.
inline OperatingPoint threshold_for_fpr(const RocCurve& curve, double target_pfa) {
    require(target_pfa >= 0.0 && target_pfa <= 1.0, "threshold_for_fpr: target must lie in [0, 1]");
    require(!curve.points.empty(), "threshold_for_fpr: empty curve");
    for (auto it = curve.points.rbegin(); it != curve.points.rend(); ++it)
        if (it->fpr <= target_pfa) return {it->threshold, it->fpr, it->tpr};
    const auto& top = curve.points.front();
    return {top.threshold, top.fpr, top.tpr};
}

inline void write_roc_csv(std::ostream& os, const RocCurve& curve) {
    os << "threshold,fpr,tpr\n";
    for (const auto& p : curve.points)
        os << io::format_double(p.threshold) << ',' << io::format_double(p.fpr) << ','
           << io::format_double(p.tpr) << '\n';
}

}  // namespace csiauth
