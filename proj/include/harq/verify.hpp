#pragma once

// Acceptance property suite, shared by `harqsim verify` and the acceptance
// test binary. Each check returns a verdict plus the numbers behind it.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "harq/amc.hpp"
#include "harq/channel.hpp"
#include "harq/coding.hpp"
#include "harq/harq_analysis.hpp"
#include "harq/optimizer.hpp"
#include "harq/simulator.hpp"

namespace harq::verify {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

struct VerifyOptions {
    std::uint64_t mc_blocks = 1000000;
    std::uint64_t seed = 20240601;
};

namespace detail {

inline std::string fmt(const char* f, auto... args) {
    const int n = std::snprintf(nullptr, 0, f, args...);
    std::string out(static_cast<std::size_t>(std::max(n, 0)), '\0');
    std::snprintf(out.data(), out.size() + 1, f, args...);
    return out;
}

inline McsTable reference_table(double decay = 4.0) { return McsTable(McsTable::linear_rates(5), decay); }

/// First downward crossing of diff(snr_db) through zero, interpolated.
inline double downward_crossing(const std::vector<double>& db, const std::vector<double>& diff) {
    for (std::size_t i = 0; i + 1 < db.size(); ++i)
        if (diff[i] >= 0.0 && diff[i + 1] < 0.0)
            return db[i] + (db[i + 1] - db[i]) * diff[i] / (diff[i] - diff[i + 1]);
    return std::nan("");
}

}  // namespace detail

inline CriterionResult snr_margin() {
    CriterionResult r{1, "snr margin delta"};
    const double d4 = linear_to_db(snr_margin_delta(1e-2, 4.0));
    const double d05 = linear_to_db(snr_margin_delta(1e-2, 0.5));
    r.passed = std::abs(d4 - 3.3) <= 0.05 && std::abs(d05 - 10.0) <= 0.15;
    r.detail = detail::fmt("delta(a=4)=%.4f dB, delta(a=0.5)=%.4f dB", d4, d05);
    return r;
}

inline CriterionResult amc_boundary_per() {
    CriterionResult r{2, "AMC boundary PERs"};
    const auto t = detail::reference_table();
    const auto g = amc_thresholds_exact(t).thresholds();
    const double want[4] = {0.5, 1.0 / 3.0, 0.25, 0.2};
    r.passed = true;
    std::string d = "PER_l(gamma_l) =";
    for (std::size_t l = 1; l < 5; ++l) {
        const double p = per(l, g[l], t);
        r.passed = r.passed && std::abs(p - want[l - 1]) <= 0.01;
        d += detail::fmt(" %.4f", p);
    }
    r.detail = d;
    return r;
}

inline CriterionResult cascade_condition() {
    CriterionResult r{3, "cascade log-concavity, eta non-decreasing in K, counterexample"};
    std::size_t violations = 0;
    std::size_t checks = 0;
    for (double decay : {0.5, 4.0}) {
        const auto t = detail::reference_table(decay);
        for (auto c : {CombiningType::RR, CombiningType::IR}) {
            for (int i = 0; i < 50; ++i) {
                const double x = db_to_linear(-20.0 + 60.0 * i / 49.0);
                for (std::size_t l = 0; l < t.size(); ++l) {
                    const auto f = slow_cascade(l, x, 6, c, t);
                    for (unsigned k = 1; k < 6; ++k) {
                        ++checks;
                        if (f[k + 1] * f[k - 1] > f[k] * f[k] * (1.0 + 1e-12) + 1e-300) ++violations;
                    }
                    for (unsigned K = 1; K < 6; ++K) {
                        ++checks;
                        const double a = slow_throughput_at(l, x, K, c, t);
                        const double b = slow_throughput_at(l, x, K + 1, c, t);
                        if (b < a - 1e-12 * std::max(1.0, a)) ++violations;
                    }
                }
            }
        }
    }
    const double f1 = 0.9;
    const ErrorCascade c2{{1.0, f1, 0.5 * f1 * f1}};
    const ErrorCascade c3{{1.0, f1, 0.5 * f1 * f1, 0.75 * f1 * f1 * f1}};
    const double e2 = renewal_throughput(1.0, c2);
    const double e3 = renewal_throughput(1.0, c3);
    r.passed = violations == 0 && e2 > e3;
    r.detail = detail::fmt("%zu checks, %zu violations; counterexample eta2=%.6f eta3=%.6f", checks, violations, e2, e3);
    return r;
}

inline CriterionResult oracle_agreement(const VerifyOptions& o) {
    CriterionResult r{4, "analytic vs Monte Carlo"};
    const auto t = detail::reference_table();
    const auto amc = amc_thresholds_exact(t);
    r.passed = true;
    std::string d;
    std::uint64_t stream = 400;
    for (double db : {-5.0, 5.0, 15.0}) {
        const double avg = db_to_linear(db);
        ChannelConfig fast{avg, FadingMode::Fast, o.seed};
        ChannelConfig slow{avg, FadingMode::Slow, o.seed};
        HarqConfig amc_cfg;
        amc_cfg.max_rounds = 1;
        HarqConfig ir;
        ir.combining = CombiningType::IR;
        HarqConfig rr;
        rr.combining = CombiningType::RR;
        struct Case {
            const char* name;
            double analytic;
            SimResult mc;
        };
        const Case cases[] = {
            {"amc", amc_throughput(amc, t, avg).value, simulate_plain(amc, amc_cfg, t, fast, o.mc_blocks, stream++)},
            {"slow-ir", slow_throughput(amc, 4, CombiningType::IR, t, avg).value,
             simulate_plain(amc, ir, t, slow, o.mc_blocks, stream++)},
            {"fast-rr", fast_throughput(amc, 4, CombiningType::RR, t, avg).value,
             simulate_plain(amc, rr, t, fast, o.mc_blocks, stream++)},
        };
        for (const auto& c : cases) {
            const double err = std::abs(c.mc.throughput - c.analytic);
            const bool ok = err <= c.mc.ci_half_width;
            r.passed = r.passed && ok;
            d += detail::fmt("%s%g dB %s: |%.5f-%.5f|=%.5f %s 3sigma=%.5f", d.empty() ? "" : "; ", db, c.name,
                             c.mc.throughput, c.analytic, err, ok ? "<=" : ">", c.mc.ci_half_width);
        }
    }
    r.detail = d;
    return r;
}

inline CriterionResult low_snr_ordering() {
    CriterionResult r{5, "low-SNR HARQ >= AMC"};
    const auto t = detail::reference_table();
    const auto amc = amc_thresholds_exact(t);
    const double avg = db_to_linear(-10.0);
    const double a = amc_throughput(amc, t, avg).value;
    const double rr = fast_throughput(amc, 4, CombiningType::RR, t, avg).value;
    const double ir = fast_throughput(amc, 4, CombiningType::IR, t, avg).value;
    r.passed = rr >= a && ir >= a;
    r.detail = detail::fmt("-10 dB: amc=%.6g rr=%.6g ir=%.6g", a, rr, ir);
    return r;
}

inline CriterionResult high_snr_ordering() {
    CriterionResult r{6, "high-SNR AMC > two-round bound >= HARQ"};
    const auto t = detail::reference_table();
    const auto amc = amc_thresholds_exact(t);
    const double avg = db_to_linear(25.0);
    const double a = amc_throughput(amc, t, avg).value;
    r.passed = true;
    std::string d = detail::fmt("25 dB amc=%.6f", a);
    for (auto c : {CombiningType::RR, CombiningType::IR}) {
        const FastFadingModel m(t, c, 4, avg);
        const auto opt = fast_optimize_regions(m);
        for (const auto* src : {"amc", "opt"}) {
            const DecisionRegions& reg = std::string(src) == "amc" ? amc : opt.regions;
            const double bound = two_round_bound(reg, t, avg);
            const double h = fast_throughput(m, reg).value;
            const bool ok = a > bound && bound >= h;
            r.passed = r.passed && ok;
            d += detail::fmt("; %s/%s: bound=%.6f harq=%.6f", to_string(c), src, bound, h);
        }
    }
    r.detail = d;
    return r;
}

inline CriterionResult crossing_points() {
    CriterionResult r{7, "HARQ/AMC crossing points (AMC regions)"};
    const auto t = detail::reference_table();
    const auto amc = amc_thresholds_exact(t);
    std::vector<double> db;
    std::vector<double> d_rr, d_ir, o_rr, o_ir;
    for (double s = -5.0; s <= 20.0 + 1e-9; s += 0.25) {
        const double avg = db_to_linear(s);
        const double a = amc_throughput(amc, t, avg).value;
        db.push_back(s);
        const FastFadingModel mr(t, CombiningType::RR, 4, avg);
        const FastFadingModel mi(t, CombiningType::IR, 4, avg);
        d_rr.push_back(fast_throughput(mr, amc).value - a);
        d_ir.push_back(fast_throughput(mi, amc).value - a);
        // Reference only: the same crossing with optimized regions.
        if (s >= -2.0 && s <= 14.0) {
            o_rr.push_back(fast_optimize_regions(mr).throughput.value - a);
            o_ir.push_back(fast_optimize_regions(mi).throughput.value - a);
        }
    }
    const double x_rr = detail::downward_crossing(db, d_rr);
    const double x_ir = detail::downward_crossing(db, d_ir);
    std::vector<double> db_o;
    for (double s : db)
        if (s >= -2.0 && s <= 14.0) db_o.push_back(s);
    const double y_rr = detail::downward_crossing(db_o, o_rr);
    const double y_ir = detail::downward_crossing(db_o, o_ir);
    r.passed = std::abs(x_rr - 3.0) <= 1.5 && std::abs(x_ir - 9.0) <= 1.5;
    r.detail = detail::fmt("AMC regions: rr=%.2f dB (3+-1.5) ir=%.2f dB (9+-1.5); "
                           "optimized regions (not graded): rr=%.2f dB ir=%.2f dB",
                           x_rr, x_ir, y_rr, y_ir);
    return r;
}

inline CriterionResult degenerate_band() {
    CriterionResult r{8, "degenerate-region band (IR, a=4, K=4)"};
    const auto t = detail::reference_table();
    auto describe = [](const DecisionRegions& reg) {
        std::string s;
        for (std::size_t l = 0; l < reg.size(); ++l) s += reg.is_degenerate(l) ? '-' : static_cast<char>('1' + l);
        return s;
    };
    const auto at5 = fast_optimize_regions(4, CombiningType::IR, t, db_to_linear(5.0));
    const auto at25 = fast_optimize_regions(4, CombiningType::IR, t, db_to_linear(25.0));
    bool only5 = true;
    for (std::size_t l = 0; l + 1 < t.size(); ++l) only5 = only5 && at5.regions.is_degenerate(l);
    only5 = only5 && !at5.regions.is_degenerate(t.size() - 1);
    bool all25 = true;
    for (std::size_t l = 0; l < t.size(); ++l) all25 = all25 && !at25.regions.is_degenerate(l);
    const double eta_only5 =
        fast_throughput(DecisionRegions::from_thresholds({0, 0, 0, 0, 0}), 4, CombiningType::IR, t, db_to_linear(5.0))
            .value;
    r.passed = only5 && all25;
    r.detail = detail::fmt("5 dB regions [%s] eta=%.6f (D5-only eta=%.6f); 25 dB regions [%s]",
                           describe(at5.regions).c_str(), at5.throughput.value, eta_only5,
                           describe(at25.regions).c_str());
    return r;
}

inline CriterionResult packet_drop_recovery(const VerifyOptions& o) {
    CriterionResult r{9, "PD-HARQ recovers AMC throughput"};
    const auto t = detail::reference_table();
    const auto amc = amc_thresholds_exact(t);
    r.passed = true;
    std::string d;
    std::uint64_t stream = 900;
    for (double db : {12.0, 16.0, 20.0, 24.0}) {
        const double avg = db_to_linear(db);
        const double a = amc_throughput(amc, t, avg).value;
        for (auto c : {CombiningType::RR, CombiningType::IR}) {
            HarqConfig h;
            h.combining = c;
            h.variant = HarqVariant::PacketDrop;
            const auto s = simulate_packet_drop(amc, h, t, {avg, FadingMode::Fast, o.seed}, o.mc_blocks, stream++);
            const bool ok = s.throughput >= a - (0.02 + s.ci_half_width);
            r.passed = r.passed && ok;
            d += detail::fmt("%s%g dB %s: pd=%.5f amc=%.5f", d.empty() ? "" : "; ", db, to_string(c), s.throughput, a);
        }
    }
    r.detail = d;
    return r;
}

inline CriterionResult vl_gain(const VerifyOptions& o) {
    CriterionResult r{10, "VL-HARQ beats AMC at 20 dB"};
    const auto t = detail::reference_table();
    const double avg = db_to_linear(20.0);
    const double a = amc_throughput(amc_thresholds_exact(t), t, avg).value;
    const auto s = simulate_vl(HarqConfig::variable_length_default(), t, {avg, FadingMode::Fast, o.seed},
                               o.mc_blocks, 1000);
    r.passed = s.throughput > a + s.ci_half_width;
    r.detail = detail::fmt("vl=%.5f amc=%.5f 3sigma=%.5f", s.throughput, a, s.ci_half_width);
    return r;
}

inline CriterionResult gap_grows_with_L() {
    CriterionResult r{11, "AMC minus two-round bound non-decreasing in L (threshold decoding)"};
    r.passed = true;
    std::string d;
    for (double db : {15.0, 20.0, 25.0}) {
        const double avg = db_to_linear(db);
        double prev = -kInf;
        d += detail::fmt("%s%g dB:", d.empty() ? "" : "; ", db);
        for (std::size_t L : {2, 3, 5}) {
            std::vector<double> rates(L);
            for (std::size_t l = 0; l < L; ++l) rates[l] = 0.75 + 3.0 * static_cast<double>(l) / (L - 1);
            const auto t = McsTable::threshold_decoding(rates);
            const auto reg = amc_thresholds_exact(t);
            const double gap = amc_throughput(reg, t, avg).value - two_round_bound(reg, t, avg);
            r.passed = r.passed && gap >= prev - 1e-12;
            prev = gap;
            d += detail::fmt(" L=%zu %.6f", L, gap);
        }
    }
    r.detail = d;
    return r;
}

inline CriterionResult slow_unions() {
    CriterionResult r{12, "slow-fading union-of-intervals regions"};
    const McsTable t({3.0, 3.75}, 4.0);
    const auto opt = slow_optimal_regions(4, CombiningType::IR, t);
    const auto amc = amc_thresholds_exact(t);
    std::size_t max_pieces = 0;
    for (std::size_t l = 0; l < t.size(); ++l) max_pieces = std::max(max_pieces, opt.intervals(l).size());
    double worst = kInf;
    for (double db = -10.0; db <= 40.0 + 1e-9; db += 0.5) {
        const double avg = db_to_linear(db);
        const double a = slow_throughput(opt, 4, CombiningType::IR, t, avg).value;
        const double b = slow_throughput(amc, 4, CombiningType::IR, t, avg).value;
        worst = std::min(worst, a - b);
    }
    r.passed = max_pieces >= 2 && worst >= -1e-9;
    std::string d = detail::fmt("max intervals per rate=%zu, min(opt-amc)=%.3g;", max_pieces, worst);
    for (std::size_t l = 0; l < t.size(); ++l) {
        d += detail::fmt(" D%zu:", l + 1);
        for (const auto& iv : opt.intervals(l)) d += detail::fmt(" [%.3f,%.3f)", iv.lo, iv.hi);
    }
    r.detail = d;
    return r;
}

/// Runs all criteria in order; `sink` sees each result as it completes.
inline std::vector<CriterionResult> run_all(const VerifyOptions& o,
                                            const std::function<void(const CriterionResult&)>& sink = {}) {
    const std::vector<std::function<CriterionResult()>> checks = {
        snr_margin,
        amc_boundary_per,
        cascade_condition,
        [&] { return oracle_agreement(o); },
        low_snr_ordering,
        high_snr_ordering,
        crossing_points,
        degenerate_band,
        [&] { return packet_drop_recovery(o); },
        [&] { return vl_gain(o); },
        gap_grows_with_L,
        slow_unions,
    };
    std::vector<CriterionResult> out;
    for (const auto& c : checks) {
        const auto t0 = std::chrono::steady_clock::now();
        CriterionResult res;
        try {
            res = c();
        } catch (const std::exception& e) {
            res.id = static_cast<int>(out.size()) + 1;
            res.name = "exception";
            res.passed = false;
            res.detail = e.what();
        }
        res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (sink) sink(res);
        out.push_back(std::move(res));
    }
    return out;
}

inline std::string format_line(const CriterionResult& r) {
    return detail::fmt("[%s] criterion %d: %s (%.1fs) | %s", r.passed ? "PASS" : "FAIL", r.id, r.name.c_str(),
                       r.seconds, r.detail.c_str());
}

}  // namespace harq::verify
