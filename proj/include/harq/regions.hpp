#pragma once

// MCS decision regions and the throughput result type shared by the
// analytic and Monte Carlo paths.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace harq {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Provenance { Analytic, MonteCarlo };

struct ThroughputEstimate {
    double value = 0.0;          // bits/symbol
    double ci_half_width = 0.0;  // 3-sigma half width; 0 for analytic values
    Provenance provenance = Provenance::Analytic;
    std::uint64_t blocks = 0;    // simulated blocks (Monte Carlo only)
};

/// Half-open SNR interval [lo, hi); hi may be +inf.
struct Interval {
    double lo = 0.0;
    double hi = kInf;

    bool empty() const { return !(hi > lo); }
    bool contains(double x) const { return x >= lo && x < hi; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Partition of [0, inf) into per-MCS regions D_l. Either a monotone
/// threshold vector (D_l = [g_l, g_{l+1})) or arbitrary unions of intervals.
class DecisionRegions {
public:
    enum class Kind { ThresholdVector, IntervalUnions };

    /// thresholds[0] must be 0; entries non-decreasing; +inf allowed.
    static DecisionRegions from_thresholds(std::vector<double> thresholds) {
        if (thresholds.empty()) throw std::invalid_argument("DecisionRegions: no thresholds");
        if (thresholds.front() != 0.0)
            throw std::invalid_argument("DecisionRegions: first threshold must be 0");
        for (std::size_t l = 1; l < thresholds.size(); ++l) {
            if (std::isnan(thresholds[l]) || thresholds[l] < thresholds[l - 1])
                throw std::invalid_argument("DecisionRegions: thresholds must be non-decreasing");
        }
        DecisionRegions r;
        r.kind_ = Kind::ThresholdVector;
        r.thresholds_ = std::move(thresholds);
        const std::size_t L = r.thresholds_.size();
        r.intervals_.resize(L);
        for (std::size_t l = 0; l < L; ++l) {
            Interval iv{r.thresholds_[l], l + 1 < L ? r.thresholds_[l + 1] : kInf};
            if (!iv.empty()) r.intervals_[l].push_back(iv);
        }
        r.build_index();
        return r;
    }

    /// Per-rate interval lists; together they must tile [0, inf) exactly.
    static DecisionRegions from_intervals(std::vector<std::vector<Interval>> per_rate) {
        if (per_rate.empty()) throw std::invalid_argument("DecisionRegions: no regions");
        DecisionRegions r;
        r.kind_ = Kind::IntervalUnions;
        r.intervals_.resize(per_rate.size());
        for (std::size_t l = 0; l < per_rate.size(); ++l) {
            for (const auto& iv : per_rate[l]) {
                if (std::isnan(iv.lo) || std::isnan(iv.hi) || iv.lo < 0.0)
                    throw std::invalid_argument("DecisionRegions: invalid interval");
                if (!iv.empty()) r.intervals_[l].push_back(iv);
            }
            std::sort(r.intervals_[l].begin(), r.intervals_[l].end(),
                      [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
        }
        r.build_index();
        return r;
    }

    Kind kind() const { return kind_; }
    std::size_t size() const { return intervals_.size(); }

    const std::vector<double>& thresholds() const {
        if (kind_ != Kind::ThresholdVector)
            throw std::logic_error("DecisionRegions: not a threshold vector");
        return thresholds_;
    }

    const std::vector<Interval>& intervals(std::size_t l) const { return intervals_.at(l); }
    bool is_degenerate(std::size_t l) const { return intervals_.at(l).empty(); }

    /// Index of the region containing `snr` (half-open convention).
    std::size_t classify(double snr) const {
        if (snr < 0.0) throw std::domain_error("classify: negative snr");
        auto it = std::upper_bound(starts_.begin(), starts_.end(), snr);
        return labels_[static_cast<std::size_t>(it - starts_.begin()) - 1];
    }

    /// Region boundaries in increasing order with the label that starts there.
    const std::vector<double>& piece_starts() const { return starts_; }
    const std::vector<std::size_t>& piece_labels() const { return labels_; }

private:
    void build_index() {
        struct Piece {
            Interval iv;
            std::size_t label;
        };
        std::vector<Piece> pieces;
        for (std::size_t l = 0; l < intervals_.size(); ++l)
            for (const auto& iv : intervals_[l]) pieces.push_back({iv, l});
        std::sort(pieces.begin(), pieces.end(), [](const Piece& a, const Piece& b) { return a.iv.lo < b.iv.lo; });
        if (pieces.empty() || pieces.front().iv.lo != 0.0)
            throw std::invalid_argument("DecisionRegions: regions must start at 0");
        for (std::size_t i = 1; i < pieces.size(); ++i) {
            if (pieces[i].iv.lo != pieces[i - 1].iv.hi)
                throw std::invalid_argument("DecisionRegions: regions overlap or leave a gap at " +
                                            std::to_string(pieces[i].iv.lo));
        }
        if (pieces.back().iv.hi != kInf)
            throw std::invalid_argument("DecisionRegions: regions must extend to infinity");
        starts_.clear();
        labels_.clear();
        for (const auto& p : pieces) {
            starts_.push_back(p.iv.lo);
            labels_.push_back(p.label);
        }
    }

    Kind kind_ = Kind::ThresholdVector;
    std::vector<double> thresholds_;
    std::vector<std::vector<Interval>> intervals_;
    std::vector<double> starts_;
    std::vector<std::size_t> labels_;
};

}  // namespace harq
