#pragma once

// Sweep orchestration and CSV emission behind the harqsim CLI.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "harq/amc.hpp"
#include "harq/harq_analysis.hpp"
#include "harq/optimizer.hpp"
#include "harq/simulator.hpp"

namespace harq {

/// Invalid user configuration (CLI exit code 2).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class RegionSource { AmcExact, AmcClosedForm, PerTarget, Optimized };

inline const char* to_string(RegionSource s) {
    switch (s) {
        case RegionSource::AmcExact: return "amc-exact";
        case RegionSource::AmcClosedForm: return "amc-closed-form";
        case RegionSource::PerTarget: return "per-target";
        case RegionSource::Optimized: return "optimized";
    }
    return "?";
}

inline RegionSource parse_region_source(const std::string& s) {
    if (s == "amc-exact") return RegionSource::AmcExact;
    if (s == "amc-closed-form") return RegionSource::AmcClosedForm;
    if (s == "per-target") return RegionSource::PerTarget;
    if (s == "optimized") return RegionSource::Optimized;
    throw ConfigError("unknown region source '" + s + "'");
}

inline FadingMode parse_fading(const std::string& s) {
    if (s == "fast") return FadingMode::Fast;
    if (s == "slow") return FadingMode::Slow;
    throw ConfigError("unknown fading mode '" + s + "'");
}

inline CombiningType parse_combining(const std::string& s) {
    if (s == "rr") return CombiningType::RR;
    if (s == "ir") return CombiningType::IR;
    throw ConfigError("unknown combining '" + s + "'");
}

inline const std::vector<std::string>& known_schemes() {
    static const std::vector<std::string> s = {"amc", "harq-rr", "harq-ir", "harq-2r-bound", "pd-harq", "vl-harq"};
    return s;
}

struct SweepSpec {
    double snr_lo_db = -5.0;
    double snr_step_db = 0.5;
    double snr_hi_db = 30.0;
    std::vector<std::string> schemes{"amc"};
    RegionSource region_source = RegionSource::AmcExact;
    FadingMode fading = FadingMode::Fast;
    CombiningType pd_combining = CombiningType::IR;  // pd-harq only
    double a_tilde = 4.0;                            // +inf: threshold decoding
    unsigned K = 4;
    std::vector<double> rates = McsTable::linear_rates(5);
    std::uint64_t mc_blocks = 1000000;
    std::uint64_t seed = 1;
    std::uint64_t coherence_blocks = 100;
    double p_loss = 0.01;  // per-target regions
    unsigned arq_rounds = 1;
    unsigned threads = 0;  // 0: HARQ_THREADS or hardware concurrency

    McsTable table() const { return McsTable(rates, a_tilde); }

    std::vector<double> snr_points_db() const {
        std::vector<double> v;
        const double n = std::floor((snr_hi_db - snr_lo_db) / snr_step_db + 1e-9);
        for (long i = 0; i <= static_cast<long>(n); ++i) v.push_back(snr_lo_db + static_cast<double>(i) * snr_step_db);
        return v;
    }

    bool has_monte_carlo() const {
        for (const auto& s : schemes)
            if (s == "pd-harq" || s == "vl-harq") return true;
        return false;
    }

    void validate() const {
        if (!(snr_step_db > 0.0)) throw ConfigError("snr step must be > 0");
        if (!(snr_hi_db >= snr_lo_db)) throw ConfigError("snr range is empty");
        if (schemes.empty()) throw ConfigError("no schemes selected");
        for (const auto& s : schemes)
            if (std::find(known_schemes().begin(), known_schemes().end(), s) == known_schemes().end())
                throw ConfigError("unknown scheme '" + s + "'");
        if (K < 1) throw ConfigError("K must be >= 1");
        if (has_monte_carlo() && mc_blocks < 100000) throw ConfigError("mc-blocks must be >= 100000");
        if (!(p_loss > 0.0 && p_loss < 1.0)) throw ConfigError("p-loss must be in (0, 1)");
        if (arq_rounds < 1) throw ConfigError("arq-rounds must be >= 1");
        if (coherence_blocks < 1) throw ConfigError("coherence-blocks must be >= 1");
        for (const auto& s : schemes)
            if (s == "vl-harq" && fading != FadingMode::Fast) throw ConfigError("vl-harq requires fast fading");
        try {
            (void)table();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
};

/// "lo:step:hi" in dB.
inline void parse_snr_range(const std::string& s, SweepSpec& spec) {
    double lo = 0, step = 0, hi = 0;
    char c1 = 0, c2 = 0;
    std::istringstream in(s);
    if (!(in >> lo >> c1 >> step >> c2 >> hi) || c1 != ':' || c2 != ':' || !in.eof())
        throw ConfigError("snr range must look like lo:step:hi, got '" + s + "'");
    spec.snr_lo_db = lo;
    spec.snr_step_db = step;
    spec.snr_hi_db = hi;
}

inline double parse_a_tilde(const std::string& s) {
    if (s == "inf" || s == "infinity") return kInf;
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw ConfigError("bad a-tilde '" + s + "'");
        return v;
    } catch (const std::logic_error&) {
        throw ConfigError("bad a-tilde '" + s + "'");
    }
}

/// Worker count: explicit value, else HARQ_THREADS, else hardware.
inline unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("HARQ_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 1) throw ConfigError("HARQ_THREADS must be a positive integer");
        return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

inline std::string format_number(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

struct SweepRow {
    double snr_db = 0.0;
    std::string scheme;
    std::string combining;
    unsigned K = 1;
    ThroughputEstimate estimate;
};

namespace detail {

/// Runs fn(i) for i in [0, n) on `threads` workers; the first exception is
/// rethrown after all workers finish.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex m;
    auto worker = [&] {
        for (std::size_t i; (i = next++) < n;) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lk(m);
                if (!err) err = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const unsigned t = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
    for (unsigned i = 1; i < t; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

inline DecisionRegions fixed_regions(const SweepSpec& spec, const McsTable& table) {
    switch (spec.region_source) {
        case RegionSource::AmcClosedForm: return amc_thresholds_closed_form(table);
        case RegionSource::PerTarget: return amc_thresholds_per_target(table, spec.p_loss, spec.arq_rounds);
        default: return amc_thresholds_exact(table);
    }
}

/// Regions used by a HARQ scheme at one average SNR. "optimized" means the
/// throughput-optimal regions for that scheme and fading mode.
inline DecisionRegions scheme_regions(const SweepSpec& spec, const McsTable& table, CombiningType c, double avg) {
    if (spec.region_source != RegionSource::Optimized) return fixed_regions(spec, table);
    if (spec.fading == FadingMode::Slow) return slow_optimal_regions(spec.K, c, table);
    return fast_optimize_regions(spec.K, c, table, avg).regions;
}

}  // namespace detail

/// One row per (scheme, snr point), sorted by scheme then snr.
inline std::vector<SweepRow> compute_sweep(const SweepSpec& spec) {
    spec.validate();
    const McsTable table = spec.table();
    const auto points = spec.snr_points_db();
    struct Task {
        std::size_t scheme;
        std::size_t point;
    };
    std::vector<Task> tasks;
    for (std::size_t s = 0; s < spec.schemes.size(); ++s)
        for (std::size_t p = 0; p < points.size(); ++p) tasks.push_back({s, p});
    std::vector<SweepRow> rows(tasks.size());

    detail::parallel_for(tasks.size(), resolve_threads(spec.threads), [&](std::size_t i) {
        const auto& scheme = spec.schemes[tasks[i].scheme];
        const double db = points[tasks[i].point];
        const double avg = db_to_linear(db);
        const std::uint64_t stream = (static_cast<std::uint64_t>(tasks[i].scheme) << 32) | tasks[i].point;
        SweepRow row;
        row.snr_db = db;
        row.scheme = scheme;
        row.combining = "none";
        row.K = spec.K;
        ChannelConfig ch{avg, spec.fading, spec.seed, spec.coherence_blocks};
        if (scheme == "amc") {
            row.K = 1;
            row.estimate = amc_throughput(detail::fixed_regions(spec, table), table, avg);
        } else if (scheme == "harq-rr" || scheme == "harq-ir") {
            const auto c = scheme == "harq-rr" ? CombiningType::RR : CombiningType::IR;
            row.combining = to_string(c);
            const auto reg = detail::scheme_regions(spec, table, c, avg);
            row.estimate = spec.fading == FadingMode::Fast ? fast_throughput(reg, spec.K, c, table, avg)
                                                           : slow_throughput(reg, spec.K, c, table, avg);
        } else if (scheme == "harq-2r-bound") {
            row.K = 2;
            // With optimized regions the bound is taken over the IR optimum.
            const auto reg = detail::scheme_regions(spec, table, CombiningType::IR, avg);
            row.estimate = {two_round_bound(reg, table, avg), 0.0, Provenance::Analytic, 0};
        } else if (scheme == "pd-harq") {
            row.combining = to_string(spec.pd_combining);
            HarqConfig h;
            h.combining = spec.pd_combining;
            h.max_rounds = spec.K;
            h.variant = HarqVariant::PacketDrop;
            row.estimate =
                simulate_packet_drop(detail::fixed_regions(spec, table), h, table, ch, spec.mc_blocks, stream)
                    .estimate();
        } else if (scheme == "vl-harq") {
            row.combining = "ir";
            auto h = HarqConfig::variable_length_default(spec.K);
            row.estimate = simulate_vl(h, table, ch, spec.mc_blocks, stream).estimate();
        }
        if (!std::isfinite(row.estimate.value))
            throw NumericalError("non-finite throughput for " + scheme + " at " + format_number(db) + " dB");
        rows[i] = std::move(row);
    });

    std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
        if (a.scheme != b.scheme) return a.scheme < b.scheme;
        return a.snr_db < b.snr_db;
    });
    return rows;
}

inline void write_sweep_csv(const SweepSpec& spec, const std::vector<SweepRow>& rows, std::ostream& out) {
    out << "snr_avg_db,scheme,combining,a_tilde,K,region_source,throughput,ci_half_width,blocks\n";
    for (const auto& r : rows) {
        const bool mc = r.estimate.provenance == Provenance::MonteCarlo;
        out << format_number(r.snr_db) << ',' << r.scheme << ',' << r.combining << ',' << format_number(spec.a_tilde)
            << ',' << r.K << ',' << to_string(spec.region_source) << ',' << format_number(r.estimate.value) << ','
            << (mc ? format_number(r.estimate.ci_half_width) : "") << ',' << r.estimate.blocks << '\n';
    }
}

inline void run_sweep(const SweepSpec& spec, std::ostream& out) { write_sweep_csv(spec, compute_sweep(spec), out); }

/// Per-snr decision regions for every HARQ scheme in the spec (amc and the
/// bound use the fixed AMC recipe). Threshold vectors print gamma_l in dB;
/// interval unions print `lo..hi;lo..hi` in dB.
inline void emit_thresholds(const SweepSpec& spec, std::ostream& out) {
    spec.validate();
    const McsTable table = spec.table();
    const auto points = spec.snr_points_db();
    struct Task {
        std::string scheme;
        double db;
    };
    std::vector<Task> tasks;
    std::vector<std::string> schemes;
    for (const auto& s : spec.schemes)
        if (s == "amc" || s == "harq-rr" || s == "harq-ir") schemes.push_back(s);
    if (schemes.empty()) throw ConfigError("thresholds needs at least one of amc, harq-rr, harq-ir");
    std::sort(schemes.begin(), schemes.end());
    for (const auto& s : schemes)
        for (double db : points) tasks.push_back({s, db});
    std::vector<std::string> blocks(tasks.size());

    detail::parallel_for(tasks.size(), resolve_threads(spec.threads), [&](std::size_t i) {
        const auto& t = tasks[i];
        const double avg = db_to_linear(t.db);
        const DecisionRegions reg =
            t.scheme == "amc"
                ? detail::fixed_regions(spec, table)
                : detail::scheme_regions(spec, table, t.scheme == "harq-rr" ? CombiningType::RR : CombiningType::IR,
                                         avg);
        std::ostringstream o;
        for (std::size_t l = 0; l < reg.size(); ++l) {
            o << format_number(t.db) << ',' << t.scheme << ',' << l + 1 << ',';
            if (reg.kind() == DecisionRegions::Kind::ThresholdVector) {
                o << format_number(linear_to_db(reg.thresholds()[l]));
            } else {
                const auto& ivs = reg.intervals(l);
                for (std::size_t j = 0; j < ivs.size(); ++j)
                    o << (j ? ";" : "") << format_number(linear_to_db(ivs[j].lo)) << ".."
                      << format_number(linear_to_db(ivs[j].hi));
            }
            o << ',' << (reg.is_degenerate(l) ? 1 : 0) << '\n';
        }
        blocks[i] = o.str();
    });

    out << "snr_avg_db,scheme,l,gamma_l_db,degenerate\n";
    for (const auto& b : blocks) out << b;
}

}  // namespace harq
