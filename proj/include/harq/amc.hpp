#pragma once

// Adaptive modulation and coding: throughput-optimal and heuristic decision
// thresholds, and the AMC throughput over an exponential SNR law.

#include <cmath>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "harq/channel.hpp"
#include "harq/coding.hpp"
#include "harq/quadrature.hpp"
#include "harq/regions.hpp"

namespace harq {

/// Instantaneous AMC throughput R_l (1 - PER_l(snr)).
inline double amc_instant_throughput(std::size_t l, double snr, const McsTable& table) {
    return table.rate(l) * (1.0 - per(l, snr, table));
}

/// Thresholds at the crossings of consecutive instantaneous throughputs.
inline DecisionRegions amc_thresholds_exact(const McsTable& table) {
    const std::size_t L = table.size();
    std::vector<double> g(L, 0.0);
    for (std::size_t l = 1; l < L; ++l) {
        if (table.is_threshold_decoding()) {
            g[l] = table.threshold(l);
            continue;
        }
        auto diff = [&](double x) {
            return amc_instant_throughput(l, x, table) - amc_instant_throughput(l - 1, x, table);
        };
        const double lo = table.threshold(l);
        const double hi = 1e4 * table.threshold(l);
        const double dlo = diff(lo);
        const double dhi = diff(hi);
        if (dlo == 0.0) {
            g[l] = lo;
            continue;
        }
        if (!(dlo < 0.0 && dhi > 0.0))
            throw NumericalError("amc_thresholds_exact: crossing of rates " + std::to_string(l - 1) + " and " +
                                 std::to_string(l) + " not bracketed (malformed rate set)");
        std::uintmax_t iters = 200;
        auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-10 * std::min(std::abs(a), std::abs(b)); };
        auto [a, b] = boost::math::tools::toms748_solve(diff, lo, hi, dlo, dhi, tol, iters);
        g[l] = 0.5 * (a + b);
    }
    for (std::size_t l = 1; l < L; ++l) {
        if (g[l] < g[l - 1])
            throw NumericalError("amc_thresholds_exact: crossings are not monotone (malformed rate set)");
    }
    return DecisionRegions::from_thresholds(std::move(g));
}

/// High-decay approximation: g_l = th_l (1 + ln(R_l / (R_l - R_{l-1})) / decay).
inline DecisionRegions amc_thresholds_closed_form(const McsTable& table) {
    std::vector<double> g(table.size(), 0.0);
    for (std::size_t l = 1; l < table.size(); ++l) {
        const double r = table.rate(l);
        const double margin =
            table.is_threshold_decoding() ? 0.0 : std::log(r / (r - table.rate(l - 1))) / table.decay();
        g[l] = table.threshold(l) * (1.0 + margin);
    }
    return DecisionRegions::from_thresholds(std::move(g));
}

/// Thresholds meeting PER_l = p_loss^(1/arq_rounds) at each boundary, never
/// below the throughput-optimal thresholds.
inline DecisionRegions amc_thresholds_per_target(const McsTable& table, double p_loss, unsigned arq_rounds) {
    if (!(p_loss > 0.0 && p_loss < 1.0))
        throw std::domain_error("amc_thresholds_per_target: p_loss must be in (0, 1)");
    if (arq_rounds < 1) throw std::domain_error("amc_thresholds_per_target: arq_rounds must be >= 1");
    const double target = std::pow(p_loss, 1.0 / static_cast<double>(arq_rounds));
    const auto optimal = amc_thresholds_exact(table).thresholds();
    std::vector<double> g(table.size(), 0.0);
    for (std::size_t l = 1; l < table.size(); ++l) {
        const double margin = table.is_threshold_decoding() ? 0.0 : std::log(1.0 / target) / table.decay();
        g[l] = std::max(table.threshold(l) * (1.0 + margin), optimal[l]);
    }
    return DecisionRegions::from_thresholds(std::move(g));
}

namespace detail {

// Exponential tail beyond u = x / avg_snr = 50 is below e^-50.
inline constexpr double kTailCutoff = 50.0;

/// int_{iv} pdf(x) g(x) dx in the scaled variable u = x / avg_snr.
template <class G>
double integrate_against_pdf(G&& g, const Interval& iv, double avg_snr, const std::vector<double>& kinks) {
    const double ulo = iv.lo / avg_snr;
    const double uhi = std::min(iv.hi / avg_snr, kTailCutoff);
    if (!(uhi > ulo)) return 0.0;
    std::vector<double> breaks;
    for (double k : kinks) {
        const double u = k / avg_snr;
        if (u > ulo && u < uhi) breaks.push_back(u);
    }
    return integrate([&](double u) { return std::exp(-u) * g(u * avg_snr); }, ulo, uhi, std::move(breaks));
}

inline double interval_probability(const Interval& iv, double avg_snr) {
    const double upper = std::isinf(iv.hi) ? 0.0 : std::exp(-iv.hi / avg_snr);
    return std::exp(-iv.lo / avg_snr) - upper;
}

}  // namespace detail

/// Per-region probability p_l and first-round conditional error f_{1,l}.
struct AmcRegionStats {
    std::vector<double> probability;
    std::vector<double> first_error;  // 0 for degenerate regions
};

inline AmcRegionStats amc_region_stats(const DecisionRegions& regions, const McsTable& table, double avg_snr) {
    if (regions.size() != table.size()) throw std::invalid_argument("regions/table size mismatch");
    if (!(avg_snr > 0.0)) throw std::domain_error("avg_snr must be positive");
    AmcRegionStats s;
    s.probability.assign(table.size(), 0.0);
    s.first_error.assign(table.size(), 0.0);
    for (std::size_t l = 0; l < table.size(); ++l) {
        double p = 0.0;
        double err = 0.0;
        for (const auto& iv : regions.intervals(l)) {
            p += detail::interval_probability(iv, avg_snr);
            err += detail::integrate_against_pdf([&](double x) { return per(l, x, table); }, iv, avg_snr,
                                                 {table.threshold(l)});
        }
        s.probability[l] = p;
        s.first_error[l] = p > 0.0 ? err / p : 0.0;
    }
    return s;
}

/// Throughput of AMC: sum_l R_l (1 - f_{1,l}) p_l. Independent of the fading
/// type because errors are block-wise memoryless.
inline ThroughputEstimate amc_throughput(const DecisionRegions& regions, const McsTable& table, double avg_snr) {
    const auto s = amc_region_stats(regions, table, avg_snr);
    double eta = 0.0;
    for (std::size_t l = 0; l < table.size(); ++l)
        eta += table.rate(l) * (1.0 - s.first_error[l]) * s.probability[l];
    return {eta, 0.0, Provenance::Analytic, 0};
}

}  // namespace harq
