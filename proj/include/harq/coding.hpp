#pragma once

// Decoding-error model: parametric PER curves, mutual information, HARQ
// combining (aggregate SNR) and NACK probabilities.
//
// MCS indices are 0-based throughout the library (l = 0 is the lowest rate).

#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace harq {

enum class CombiningType { RR, IR };

inline const char* to_string(CombiningType c) { return c == CombiningType::RR ? "rr" : "ir"; }

/// I(snr) = log2(1 + snr), bits per symbol.
inline double mutual_information(double snr) {
    if (snr < 0.0) throw std::domain_error("mutual_information: snr must be >= 0");
    return std::log1p(snr) / std::numbers::ln2;
}

/// I^{-1}(bits) = 2^bits - 1.
inline double mutual_information_inverse(double bits) { return std::expm1(bits * std::numbers::ln2); }

/// Rate set with decoding thresholds I(threshold_l) = R_l and one PER decay
/// shared by every MCS. Threshold decoding (infinite decay) is a distinct mode
/// rather than a large finite number.
class McsTable {
public:
    /// `decay` may be +infinity, which selects threshold decoding.
    McsTable(std::vector<double> rates, double decay) : rates_(std::move(rates)) {
        if (rates_.empty()) throw std::invalid_argument("McsTable: rate set is empty");
        for (std::size_t l = 0; l < rates_.size(); ++l) {
            if (!(rates_[l] > 0.0) || !std::isfinite(rates_[l]))
                throw std::invalid_argument("McsTable: rates must be positive and finite");
            if (l > 0 && !(rates_[l] > rates_[l - 1]))
                throw std::invalid_argument("McsTable: rates must be strictly increasing");
        }
        if (std::isinf(decay) && decay > 0.0) {
            threshold_decoding_ = true;
            decay_ = std::numeric_limits<double>::infinity();
        } else if (decay > 0.0) {
            decay_ = decay;
        } else {
            throw std::invalid_argument("McsTable: decay must be in (0, inf]");
        }
        thresholds_.reserve(rates_.size());
        for (double r : rates_) thresholds_.push_back(mutual_information_inverse(r));
    }

    static McsTable threshold_decoding(std::vector<double> rates) {
        return McsTable(std::move(rates), std::numeric_limits<double>::infinity());
    }

    /// R_l = (l + 1) * step for l = 0..count-1.
    static std::vector<double> linear_rates(std::size_t count, double step = 0.75) {
        std::vector<double> r(count);
        for (std::size_t l = 0; l < count; ++l) r[l] = static_cast<double>(l + 1) * step;
        return r;
    }

    std::size_t size() const { return rates_.size(); }
    const std::vector<double>& rates() const { return rates_; }
    const std::vector<double>& thresholds() const { return thresholds_; }
    double rate(std::size_t l) const { return rates_.at(l); }
    double threshold(std::size_t l) const { return thresholds_.at(l); }
    double max_rate() const { return rates_.back(); }
    bool is_threshold_decoding() const { return threshold_decoding_; }
    /// +infinity in threshold-decoding mode.
    double decay() const { return decay_; }

    void check_index(std::size_t l) const {
        if (l >= rates_.size())
            throw std::out_of_range("MCS index " + std::to_string(l) + " out of range");
    }

private:
    std::vector<double> rates_;
    std::vector<double> thresholds_;
    double decay_ = 0.0;
    bool threshold_decoding_ = false;
};

/// PER_l(snr): 1 below the threshold, exponential decay above it.
inline double per(std::size_t l, double snr, const McsTable& table) {
    table.check_index(l);
    if (snr < 0.0) throw std::domain_error("per: snr must be >= 0");
    const double th = table.threshold(l);
    if (snr < th) return 1.0;
    if (table.is_threshold_decoding()) return 0.0;
    return std::exp(-table.decay() * (snr / th - 1.0));
}

/// Multiplicative SNR margin above threshold needed to reach `target_per`.
inline double snr_margin_delta(double target_per, double decay) {
    if (!(target_per > 0.0 && target_per < 1.0))
        throw std::domain_error("snr_margin_delta: target PER must be in (0, 1)");
    if (!(decay > 0.0)) throw std::domain_error("snr_margin_delta: decay must be positive");
    return std::log(1.0 / target_per) / decay + 1.0;
}

/// h(x): identity for RR, mutual information for IR.
inline double combine_forward(double snr, CombiningType c) {
    return c == CombiningType::RR ? snr : mutual_information(snr);
}

inline double combine_inverse(double v, CombiningType c) {
    return c == CombiningType::RR ? v : mutual_information_inverse(v);
}

/// h^{-1}(sum_t h(snr_t)). The IR sum is accumulated in the MI domain and
/// exponentiated once.
inline double aggregate_snr(std::span<const double> snrs, CombiningType combining) {
    if (snrs.empty()) throw std::invalid_argument("aggregate_snr: empty sequence");
    double acc = 0.0;
    for (double s : snrs) {
        if (s < 0.0) throw std::domain_error("aggregate_snr: negative snr");
        acc += combine_forward(s, combining);
    }
    return combine_inverse(acc, combining);
}

/// Aggregate SNR after k equal-length rounds at the same SNR (slow fading).
inline double aggregate_snr_repeated(double snr, std::size_t rounds, CombiningType combining) {
    if (combining == CombiningType::RR) return static_cast<double>(rounds) * snr;
    return mutual_information_inverse(static_cast<double>(rounds) * mutual_information(snr));
}

struct SubcodewordRound {
    double length;  // normalized length (fraction of a block)
    double snr;     // linear SNR seen by this subcodeword
};

/// IR aggregate with variable subcodeword lengths:
/// I^{-1}((1/first_len) sum_t len_t I(snr_t)).
inline double aggregate_snr_vl(double first_len, std::span<const SubcodewordRound> entries,
                               CombiningType combining = CombiningType::IR) {
    if (combining != CombiningType::IR)
        throw std::invalid_argument("aggregate_snr_vl: variable-length accumulation requires IR");
    if (!(first_len > 0.0)) throw std::domain_error("aggregate_snr_vl: first length must be > 0");
    double acc = 0.0;
    for (const auto& e : entries) {
        if (e.length < 0.0 || e.snr < 0.0) throw std::domain_error("aggregate_snr_vl: negative entry");
        if (e.length == 0.0) continue;
        acc += e.length * mutual_information(e.snr);
    }
    return mutual_information_inverse(acc / first_len);
}

/// Probability of k consecutive NACKs under backward error implication:
/// PER_l of the aggregate SNR.
inline double nack_probability(std::size_t l, std::span<const double> snrs, CombiningType combining,
                               const McsTable& table) {
    return per(l, aggregate_snr(snrs, combining), table);
}

/// Closed form of the tail integral  int_x^inf pdf(y) PER_l(y) dy  for the
/// exponential SNR law with mean `avg_snr`.
inline double per_tail_mass(std::size_t l, double x, double avg_snr, const McsTable& table) {
    table.check_index(l);
    const double th = table.threshold(l);
    auto above = [&](double from) {
        if (table.is_threshold_decoding()) return 0.0;
        const double a = table.decay();
        return std::exp(-from / avg_snr - a * (from / th - 1.0)) / (1.0 + a * avg_snr / th);
    };
    if (x >= th) return above(x);
    return std::exp(-x / avg_snr) - std::exp(-th / avg_snr) + above(th);
}

}  // namespace harq
