#pragma once

// Monte Carlo engines: plain AMC/HARQ cycles (oracle for the analytic
// results), packet-dropping HARQ, and variable-length HARQ with per-block
// exhaustive scheduling.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "harq/channel.hpp"
#include "harq/coding.hpp"
#include "harq/harq_analysis.hpp"
#include "harq/regions.hpp"

namespace harq {

struct SimResult {
    double throughput = 0.0;     // bits/symbol
    double ci_half_width = 0.0;  // 3 sigma, batch means
    std::uint64_t blocks = 0;
    std::uint64_t acked_packets = 0;
    std::uint64_t drops = 0;     // PD: abandoned packets; VL: discarded after K rounds
    std::uint64_t cycles = 0;

    ThroughputEstimate estimate() const { return {throughput, ci_half_width, Provenance::MonteCarlo, blocks}; }
};

namespace detail {

inline constexpr std::uint64_t kMinBlocks = 100000;
inline constexpr unsigned kBatches = 50;

/// Ratio estimator sum(reward) / sum(blocks) with batch-means confidence.
class BatchMeans {
public:
    BatchMeans(std::uint64_t total_blocks, unsigned batches = kBatches)
        : total_(total_blocks), batches_(batches), reward_(batches, 0.0), blocks_(batches, 0) {}

    void add(double reward, std::uint64_t blocks) {
        reward_[cur_] += reward;
        blocks_[cur_] += blocks;
        seen_ += blocks;
    }

    /// Call only at points where the process regenerates (cycle or
    /// coherence-period ends).
    void checkpoint() {
        while (cur_ + 1 < batches_ && seen_ * batches_ >= (cur_ + 1) * total_) ++cur_;
    }

    bool done() const { return seen_ >= total_; }
    std::uint64_t blocks() const { return seen_; }

    void finish(SimResult& r) const {
        const double reward = std::accumulate(reward_.begin(), reward_.end(), 0.0);
        r.blocks = seen_;
        r.throughput = seen_ > 0 ? reward / static_cast<double>(seen_) : 0.0;
        std::vector<double> ratios;
        for (unsigned b = 0; b < batches_; ++b)
            if (blocks_[b] > 0) ratios.push_back(reward_[b] / static_cast<double>(blocks_[b]));
        if (ratios.size() < 2) {
            r.ci_half_width = kInf;
            return;
        }
        const double n = static_cast<double>(ratios.size());
        const double mean = std::accumulate(ratios.begin(), ratios.end(), 0.0) / n;
        double ss = 0.0;
        for (double v : ratios) ss += (v - mean) * (v - mean);
        r.ci_half_width = 3.0 * std::sqrt(ss / (n - 1.0) / n);
    }

private:
    std::uint64_t total_;
    unsigned batches_;
    std::vector<double> reward_;
    std::vector<std::uint64_t> blocks_;
    unsigned cur_ = 0;
    std::uint64_t seen_ = 0;
};

inline void check_blocks(std::uint64_t blocks) {
    if (blocks < kMinBlocks) throw std::invalid_argument("simulation needs at least 100000 blocks");
}

}  // namespace detail

struct CycleOutcome {
    unsigned rounds = 0;  // transmissions used
    bool acked = false;
};

/// One HARQ cycle at MCS l. `next_snr(k)` yields the SNR of round k >= 2;
/// the round-k failure is drawn with probability f_k / f_{k-1}, where f_k is
/// PER_l of the realized aggregate SNR.
template <class NextSnr>
CycleOutcome run_harq_cycle(std::size_t l, double first_snr, unsigned K, CombiningType c, const McsTable& table,
                            NextSnr&& next_snr, SnrStream& rng) {
    double acc = combine_forward(first_snr, c);
    double f_prev = 1.0;
    for (unsigned k = 1; k <= K; ++k) {
        if (k > 1) acc += combine_forward(next_snr(k), c);
        const double fk = per(l, combine_inverse(acc, c), table);
        const double fail = f_prev > 0.0 ? fk / f_prev : 1.0;
        if (!(rng.next_uniform() < fail)) return {k, true};
        f_prev = fk;
    }
    return {K, false};
}

/// Plain AMC / HARQ. Fast mode: a fresh SNR every block. Slow mode: the SNR
/// is held for channel.coherence_blocks blocks and redrawn only at a cycle
/// boundary, so every round of a cycle sees the same SNR and the estimator
/// converges to the SNR-average of the per-SNR throughput.
inline SimResult simulate_plain(const DecisionRegions& regions, const HarqConfig& harq, const McsTable& table,
                                const ChannelConfig& channel, std::uint64_t blocks, std::uint64_t stream_id = 0) {
    harq.validate();
    channel.validate();
    detail::check_blocks(blocks);
    if (regions.size() != table.size()) throw std::invalid_argument("regions/table size mismatch");
    SnrStream rng(channel.seed, stream_id);
    detail::BatchMeans bm(blocks);
    SimResult r;
    const double avg = channel.avg_snr;
    const unsigned K = harq.max_rounds;

    if (channel.fading_mode == FadingMode::Fast) {
        auto draw = [&](unsigned) { return rng.next_exponential(avg); };
        while (!bm.done()) {
            const double x = rng.next_exponential(avg);
            const std::size_t l = regions.classify(x);
            const auto out = run_harq_cycle(l, x, K, harq.combining, table, draw, rng);
            const double reward = out.acked ? table.rate(l) : 0.0;
            bm.add(reward, out.rounds);
            r.acked_packets += out.acked;
            ++r.cycles;
            bm.checkpoint();
        }
    } else {
        while (!bm.done()) {
            const double x = rng.next_exponential(avg);
            const std::size_t l = regions.classify(x);
            auto same = [x](unsigned) { return x; };
            std::uint64_t used = 0;
            while (used < channel.coherence_blocks) {
                const auto out = run_harq_cycle(l, x, K, harq.combining, table, same, rng);
                bm.add(out.acked ? table.rate(l) : 0.0, out.rounds);
                used += out.rounds;
                r.acked_packets += out.acked;
                ++r.cycles;
            }
            bm.checkpoint();
        }
    }
    bm.finish(r);
    return r;
}

/// Packet-dropping HARQ: a cycle is abandoned as soon as the MCS observed in
/// a later round exceeds the MCS of its first round; that block then carries
/// the first round of a new packet.
inline SimResult simulate_packet_drop(const DecisionRegions& regions, const HarqConfig& harq, const McsTable& table,
                                      const ChannelConfig& channel, std::uint64_t blocks,
                                      std::uint64_t stream_id = 0) {
    if (channel.fading_mode == FadingMode::Slow) {
        // The observed MCS never changes within a cycle: identical to plain.
        auto r = simulate_plain(regions, harq, table, channel, blocks, stream_id);
        return r;
    }
    harq.validate();
    channel.validate();
    detail::check_blocks(blocks);
    if (regions.size() != table.size()) throw std::invalid_argument("regions/table size mismatch");
    SnrStream rng(channel.seed, stream_id);
    detail::BatchMeans bm(blocks);
    SimResult r;
    const double avg = channel.avg_snr;
    const unsigned K = harq.max_rounds;

    double x = rng.next_exponential(avg);
    while (!bm.done()) {
        const std::size_t l = regions.classify(x);
        double acc = combine_forward(x, harq.combining);
        double f_prev = 1.0;
        double reward = 0.0;
        unsigned rounds = 0;
        std::optional<double> restart;
        for (unsigned k = 1; k <= K; ++k) {
            if (k > 1) {
                const double y = rng.next_exponential(avg);
                if (regions.classify(y) > l) {
                    restart = y;
                    ++r.drops;
                    break;
                }
                acc += combine_forward(y, harq.combining);
            }
            ++rounds;
            const double fk = per(l, combine_inverse(acc, harq.combining), table);
            const double fail = f_prev > 0.0 ? fk / f_prev : 1.0;
            if (!(rng.next_uniform() < fail)) {
                reward = table.rate(l);
                ++r.acked_packets;
                break;
            }
            f_prev = fk;
        }
        bm.add(reward, rounds);
        ++r.cycles;
        bm.checkpoint();
        x = restart ? *restart : rng.next_exponential(avg);
    }
    bm.finish(r);
    return r;
}

// ------------------------------------------------------------ variable length

/// VL-HARQ buffer entry.
struct PacketState {
    unsigned harq_count = 0;    // transmissions so far, 0..K-1
    double first_len = 0.0;     // length of the first subcodeword (0 while fresh)
    double snr_sigma = 0.0;     // aggregate SNR so far (0 while fresh)
    double assigned_len = 0.0;  // length in the current block, 0 = not scheduled

    bool fresh() const { return harq_count == 0; }
};

namespace detail {

// Lengths are handled in integer units of 1/kVlUnits of a block; every
// supported length must be a multiple.
inline constexpr int kVlUnits = 240;

inline int vl_units(double len) {
    const double u = len * kVlUnits;
    const double r = std::round(u);
    if (std::abs(u - r) > 1e-9) throw std::invalid_argument("VL length is not a multiple of 1/240");
    return static_cast<int>(r);
}

/// MCS index whose rate equals R_1 / first_len.
inline std::size_t vl_mcs(double first_len, const McsTable& table) {
    const double rate = table.rate(0) / first_len;
    for (std::size_t l = 0; l < table.size(); ++l)
        if (std::abs(table.rate(l) - rate) < 1e-9 * rate) return l;
    throw std::invalid_argument("VL first length does not map to a rate of the table");
}

}  // namespace detail

/// SNR'(h) = I^{-1}(I(SNR_sigma) + (len / first_len) I(snr)).
inline double vl_snr_prime(const PacketState& p, double len, double snr) {
    const double l1 = p.fresh() ? len : p.first_len;
    return mutual_information_inverse(mutual_information(p.snr_sigma) + (len / l1) * mutual_information(snr));
}

/// f(h) = PER(SNR') / PER(SNR_sigma): conditional error of sending packet p
/// with the given length now.
inline double vl_error_probability(const PacketState& p, double len, double snr, const McsTable& table) {
    const double l1 = p.fresh() ? len : p.first_len;
    const std::size_t l = detail::vl_mcs(l1, table);
    const double before = p.fresh() ? 1.0 : per(l, p.snr_sigma, table);
    if (before <= 0.0) return 0.0;
    return std::min(1.0, per(l, vl_snr_prime(p, len, snr), table) / before);
}

/// Candidate lengths for a packet: first transmissions use the primary set,
/// retransmissions the primary and auxiliary sets.
inline std::vector<double> vl_options(const PacketState& p, const HarqConfig& harq) {
    std::vector<double> v = harq.lengths_primary;
    if (!p.fresh()) v.insert(v.end(), harq.lengths_aux.begin(), harq.lengths_aux.end());
    std::sort(v.begin(), v.end());
    return v;
}

inline std::size_t vl_buffer_size(const HarqConfig& harq, const McsTable& table) {
    return harq.buffer_size > 0 ? harq.buffer_size : static_cast<std::size_t>(harq.max_rounds) * table.size();
}

/// Assignment maximizing sum over scheduled packets of (1 - f(h)) subject to
/// sum len <= 1. Solved exactly as a multiple-choice knapsack on the 1/240
/// length lattice. Ties: fewer scheduled packets, then the lexicographically
/// smallest vector of lengths.
inline std::vector<double> vl_schedule(const std::vector<PacketState>& buffer, double snr, const HarqConfig& harq,
                                       const McsTable& table) {
    if (harq.combining != CombiningType::IR) throw std::invalid_argument("vl_schedule: IR combining required");
    if (buffer.size() > vl_buffer_size(harq, table)) throw std::length_error("vl_schedule: buffer overflow");
    constexpr double tie = 1e-12;
    const int cap = detail::kVlUnits;
    const std::size_t H = buffer.size();

    struct Opt {
        double len;
        int w;
        double value;
    };
    std::vector<std::vector<Opt>> opts(H);
    for (std::size_t h = 0; h < H; ++h) {
        opts[h].push_back({0.0, 0, 0.0});
        for (double len : vl_options(buffer[h], harq))
            opts[h].push_back({len, detail::vl_units(len), 1.0 - vl_error_probability(buffer[h], len, snr, table)});
    }

    struct Cell {
        double value = 0.0;
        int count = 0;
    };
    auto better = [&](const Cell& a, const Cell& b) {
        if (a.value > b.value + tie) return true;
        if (a.value < b.value - tie) return false;
        return a.count < b.count;
    };
    // best[h][c]: optimum over packets h..H-1 with c units left.
    std::vector<std::vector<Cell>> best(H + 1, std::vector<Cell>(cap + 1));
    for (std::size_t h = H; h-- > 0;) {
        for (int c = 0; c <= cap; ++c) {
            Cell b = best[h + 1][c];
            for (const auto& o : opts[h]) {
                if (o.w == 0 || o.w > c) continue;
                const Cell& rest = best[h + 1][c - o.w];
                const Cell cand{rest.value + o.value, rest.count + 1};
                if (better(cand, b)) b = cand;
            }
            best[h][c] = b;
        }
    }
    std::vector<double> out(H, 0.0);
    int c = cap;
    for (std::size_t h = 0; h < H; ++h) {
        const Cell& target = best[h][c];
        // Options are in increasing length with 0 first: the first one that
        // still reaches the optimum gives the lexicographically smallest vector.
        for (const auto& o : opts[h]) {
            if (o.w > c) continue;
            const Cell& rest = best[h + 1][c - o.w];
            const Cell cand{rest.value + o.value, rest.count + (o.w > 0 ? 1 : 0)};
            if (!better(target, cand)) {
                out[h] = o.len;
                c -= o.w;
                break;
            }
        }
    }
    return out;
}

struct VlUpdate {
    double reward = 0.0;  // R_1 per acknowledged packet
    std::uint64_t acked = 0;
    std::uint64_t discarded = 0;
};

/// Applies the outcomes of one block (outcomes[h] true = ACK; entries of
/// unscheduled packets are ignored) and refills the buffer with fresh packets.
inline VlUpdate vl_update(std::vector<PacketState>& buffer, const std::vector<double>& assignment, double snr,
                          const std::vector<bool>& outcomes, const HarqConfig& harq, const McsTable& table) {
    if (assignment.size() != buffer.size() || outcomes.size() != buffer.size())
        throw std::invalid_argument("vl_update: assignment/outcome size mismatch");
    VlUpdate u;
    std::vector<PacketState> next;
    next.reserve(buffer.size());
    for (std::size_t h = 0; h < buffer.size(); ++h) {
        PacketState p = buffer[h];
        const double len = assignment[h];
        p.assigned_len = 0.0;
        if (len <= 0.0) {
            next.push_back(p);
            continue;
        }
        if (outcomes[h]) {
            u.reward += table.rate(0);
            ++u.acked;
            continue;
        }
        const double sp = vl_snr_prime(p, len, snr);
        if (p.fresh()) p.first_len = len;
        if (p.harq_count + 1 < harq.max_rounds) {
            p.snr_sigma = sp;
            ++p.harq_count;
            next.push_back(p);
        } else {
            ++u.discarded;
        }
    }
    while (next.size() < vl_buffer_size(harq, table)) next.push_back(PacketState{});
    buffer = std::move(next);
    return u;
}

/// VL-HARQ over fast fading with IR.
inline SimResult simulate_vl(const HarqConfig& harq, const McsTable& table, const ChannelConfig& channel,
                             std::uint64_t blocks, std::uint64_t stream_id = 0) {
    harq.validate();
    channel.validate();
    detail::check_blocks(blocks);
    if (harq.variant != HarqVariant::VariableLength) throw std::invalid_argument("simulate_vl: VL variant required");
    if (channel.fading_mode != FadingMode::Fast) throw std::invalid_argument("simulate_vl: fast fading required");
    for (double len : harq.lengths_primary) detail::vl_mcs(len, table);
    SnrStream rng(channel.seed, stream_id);
    detail::BatchMeans bm(blocks);
    SimResult r;
    std::vector<PacketState> buffer(vl_buffer_size(harq, table));
    std::vector<bool> outcomes(buffer.size());
    while (!bm.done()) {
        const double x = rng.next_exponential(channel.avg_snr);
        const auto assign = vl_schedule(buffer, x, harq, table);
        double used = 0.0;
        for (std::size_t h = 0; h < buffer.size(); ++h) {
            buffer[h].assigned_len = assign[h];
            used += assign[h];
            outcomes[h] = false;
            if (assign[h] > 0.0)
                outcomes[h] = !(rng.next_uniform() < vl_error_probability(buffer[h], assign[h], x, table));
        }
        if (used > 1.0 + 1e-9) throw std::logic_error("simulate_vl: block capacity exceeded");
        const auto u = vl_update(buffer, assign, x, outcomes, harq, table);
        r.acked_packets += u.acked;
        r.drops += u.discarded;
        bm.add(u.reward, 1);
        bm.checkpoint();
    }
    r.cycles = r.acked_packets + r.drops;
    bm.finish(r);
    return r;
}

}  // namespace harq
