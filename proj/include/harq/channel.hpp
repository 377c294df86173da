#pragma once

// Block-fading Rayleigh channel: exponential SNR law, fast/slow correlation
// modes and reproducible per-stream sampling.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

namespace harq {

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

inline double linear_to_db(double linear) {
    if (linear <= 0.0) return -std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(linear);
}

enum class FadingMode { Fast, Slow };

struct ChannelConfig {
    double avg_snr = 1.0;  // linear mean SNR
    FadingMode fading_mode = FadingMode::Fast;
    std::uint64_t seed = 1;
    // Slow mode only: number of blocks the SNR is held before a redraw. The
    // redraw is deferred to the next HARQ cycle boundary so that every round
    // of a cycle sees the same SNR.
    std::uint64_t coherence_blocks = 100;

    void validate() const {
        if (!(avg_snr > 0.0) || !std::isfinite(avg_snr))
            throw std::domain_error("ChannelConfig: avg_snr must be positive and finite");
        if (coherence_blocks == 0)
            throw std::domain_error("ChannelConfig: coherence_blocks must be >= 1");
    }
};

/// Exponential density of the instantaneous SNR with mean `avg_snr`.
inline double snr_pdf(double snr, double avg_snr) {
    if (snr < 0.0 || !(avg_snr > 0.0))
        throw std::domain_error("snr_pdf: requires snr >= 0 and avg_snr > 0");
    return std::exp(-snr / avg_snr) / avg_snr;
}

/// Deterministic stream of uniform / exponential variates. The sequence is a
/// function of (seed, stream_id) only; mt19937_64 and seed_seq are fully
/// specified by the standard, and the variate transforms below avoid the
/// implementation-defined std distributions.
class SnrStream {
public:
    SnrStream(std::uint64_t seed, std::uint64_t stream_id) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream_id),
                          static_cast<std::uint32_t>(stream_id >> 32), 0x68617271u};
        engine_.seed(seq);
    }

    /// Uniform on [0, 1).
    double next_uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Exponential with the given mean via inverse CDF.
    double next_exponential(double mean) { return -mean * std::log1p(-next_uniform()); }

private:
    std::mt19937_64 engine_;
};

/// SNRs of the rounds of one HARQ cycle: i.i.d. in fast mode, one repeated
/// draw in slow mode.
inline std::vector<double> sample_cycle_snrs(const ChannelConfig& cfg, std::size_t rounds,
                                             std::uint64_t stream_id) {
    cfg.validate();
    if (rounds == 0) throw std::domain_error("sample_cycle_snrs: rounds must be >= 1");
    SnrStream stream(cfg.seed, stream_id);
    std::vector<double> out(rounds);
    if (cfg.fading_mode == FadingMode::Slow) {
        const double snr = stream.next_exponential(cfg.avg_snr);
        for (auto& v : out) v = snr;
    } else {
        for (auto& v : out) v = stream.next_exponential(cfg.avg_snr);
    }
    return out;
}

}  // namespace harq
