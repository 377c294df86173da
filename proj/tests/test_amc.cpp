#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "harq/amc.hpp"
#include "harq/simulator.hpp"

using namespace harq;

namespace {

McsTable table5(double a = 4.0) { return McsTable(McsTable::linear_rates(5), a); }

// Composite Simpson of R_l (1 - PER_l) pdf over [lo, hi) with the kink at the
// decoding threshold handled explicitly.
double amc_oracle(const DecisionRegions& reg, const McsTable& t, double avg) {
    double total = 0.0;
    for (std::size_t l = 0; l < t.size(); ++l)
        for (const auto& iv : reg.intervals(l)) {
            const double lo = std::max(iv.lo, t.threshold(l));
            const double hi = std::isinf(iv.hi) ? lo + 80.0 * avg + 80.0 * t.threshold(l) / t.decay() : iv.hi;
            if (!(hi > lo)) continue;
            auto f = [&](double y) { return t.rate(l) * (1.0 - per(l, y, t)) * std::exp(-y / avg) / avg; };
            auto simpson = [&](double a, double b) {
                const int n = 40000;
                const double h = (b - a) / n;
                double s = f(a) + f(b);
                for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
                return s * h / 3.0;
            };
            const double mid = std::min(hi, lo + 60.0 * t.threshold(l) / t.decay());
            total += simpson(lo, mid) + (hi > mid ? simpson(mid, hi) : 0.0);
        }
    return total;
}

}  // namespace

TEST(Amc, InstantThroughput) {
    const auto t = table5();
    EXPECT_EQ(amc_instant_throughput(1, 0.5, t), 0.0);
    EXPECT_NEAR(amc_instant_throughput(1, 2.0 * t.threshold(1), t), 1.5 * (1.0 - std::exp(-4.0)), 1e-14);
}

TEST(Amc, ExactThresholdsAreThroughputCrossings) {
    const auto t = table5();
    const auto g = amc_thresholds_exact(t).thresholds();
    ASSERT_EQ(g.size(), 5u);
    EXPECT_EQ(g[0], 0.0);
    for (std::size_t l = 1; l < 5; ++l) {
        EXPECT_GT(g[l], t.threshold(l));
        EXPECT_NEAR(amc_instant_throughput(l, g[l], t), amc_instant_throughput(l - 1, g[l], t), 1e-9);
    }
    EXPECT_NEAR(g[1], 2.14518, 1e-4);
}

TEST(Amc, ClosedFormMatchesHandComputation) {
    const auto t = table5();
    const auto g = amc_thresholds_closed_form(t).thresholds();
    // th_1 (1 + ln 2 / 4) with th_1 = 2^1.5 - 1.
    EXPECT_NEAR(g[1], (std::pow(2.0, 1.5) - 1.0) * (1.0 + std::log(2.0) / 4.0), 1e-12);
    EXPECT_NEAR(g[1], 2.1454, 5e-4);
    // With threshold decoding every variant collapses to the decoding thresholds.
    const auto td = McsTable::threshold_decoding(McsTable::linear_rates(5));
    for (const auto& reg : {amc_thresholds_exact(td), amc_thresholds_closed_form(td), amc_thresholds_per_target(td, 0.01, 1)})
        for (std::size_t l = 1; l < 5; ++l) EXPECT_DOUBLE_EQ(reg.thresholds()[l], td.threshold(l));
}

TEST(Amc, PerTargetThresholds) {
    const auto t = table5();
    const auto g = amc_thresholds_per_target(t, 0.01, 2).thresholds();
    const auto opt = amc_thresholds_exact(t).thresholds();
    for (std::size_t l = 1; l < 5; ++l) {
        EXPECT_LE(per(l, g[l], t), 0.1 + 1e-12);
        EXPECT_GE(g[l], opt[l]);
    }
    EXPECT_THROW(amc_thresholds_per_target(t, 0.0, 1), std::domain_error);
    EXPECT_THROW(amc_thresholds_per_target(t, 0.1, 0), std::domain_error);
}

TEST(Amc, ThresholdDecodingThroughputClosedForm) {
    const auto td = McsTable::threshold_decoding(McsTable::linear_rates(5));
    const auto reg = amc_thresholds_exact(td);
    for (double avg : {0.1, 1.0, 10.0, 300.0}) {
        double ref = 0.0;
        for (std::size_t l = 0; l < 5; ++l) {
            const double lo = td.threshold(l);
            const double hi = l + 1 < 5 ? td.threshold(l + 1) : kInf;
            ref += td.rate(l) * (std::exp(-lo / avg) - (std::isinf(hi) ? 0.0 : std::exp(-hi / avg)));
        }
        const auto e = amc_throughput(reg, td, avg);
        EXPECT_NEAR(e.value, ref, 1e-10 * std::max(1.0, ref));
        EXPECT_EQ(e.provenance, Provenance::Analytic);
    }
}

TEST(Amc, ThroughputMatchesQuadratureOracle) {
    for (double a : {0.5, 4.0}) {
        const auto t = table5(a);
        for (const auto& reg : {amc_thresholds_exact(t), amc_thresholds_closed_form(t),
                                DecisionRegions::from_thresholds({0.0, 0.0, 3.0, 3.0, 50.0})})
            for (double db : {-10.0, 0.0, 8.0, 20.0, 35.0}) {
                const double avg = db_to_linear(db);
                EXPECT_NEAR(amc_throughput(reg, t, avg).value, amc_oracle(reg, t, avg), 1e-8) << a << ' ' << db;
            }
    }
}

TEST(Amc, RegionStatsConsistent) {
    const auto t = table5();
    const auto reg = amc_thresholds_exact(t);
    const auto s = amc_region_stats(reg, t, 4.0);
    double p = 0.0;
    for (double v : s.probability) p += v;
    EXPECT_NEAR(p, 1.0, 1e-12);
    EXPECT_NEAR(detail::interval_probability({1.0, 3.0}, 2.0), std::exp(-0.5) - std::exp(-1.5), 1e-15);
}

TEST(Amc, MonteCarloAgrees) {
    const auto t = table5();
    const auto reg = amc_thresholds_exact(t);
    HarqConfig h;
    h.max_rounds = 1;
    const double avg = db_to_linear(5.0);
    const auto r = simulate_plain(reg, h, t, {avg, FadingMode::Fast, 11}, 200000);
    EXPECT_NEAR(r.throughput, amc_throughput(reg, t, avg).value, r.ci_half_width);
}
