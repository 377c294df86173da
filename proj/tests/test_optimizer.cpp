#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "harq/amc.hpp"
#include "harq/optimizer.hpp"

using namespace harq;

namespace {

McsTable table5(double a = 4.0) { return McsTable(McsTable::linear_rates(5), a); }

// Brute-force argmax with the documented tie rule.
std::size_t argmax_oracle(double x, unsigned K, CombiningType c, const McsTable& t) {
    std::size_t best = 0;
    double bv = -1.0;
    for (std::size_t l = 0; l < t.size(); ++l) {
        const double v = slow_throughput_at(l, x, K, c, t);
        if (v >= bv) {
            bv = v;
            best = l;
        }
    }
    return bv > 0.0 ? best : 0;
}

}  // namespace

TEST(Optimizer, LogGrid) {
    const auto g = log_snr_grid();
    ASSERT_EQ(g.size(), 2001u);
    EXPECT_NEAR(linear_to_db(g.front()), -30.0, 1e-9);
    EXPECT_NEAR(linear_to_db(g.back()), 45.0, 1e-9);
    for (std::size_t i = 1; i < g.size(); ++i) EXPECT_GT(g[i], g[i - 1]);
}

TEST(Optimizer, SlowRegionsAgreeWithPointwiseArgmax) {
    for (double a : {0.5, 4.0})
        for (auto comb : {CombiningType::RR, CombiningType::IR}) {
            const auto t = table5(a);
            const auto reg = slow_optimal_regions(4, comb, t);
            EXPECT_EQ(reg.kind(), DecisionRegions::Kind::IntervalUnions);
            // Probe off-grid points, away from boundaries.
            const auto& starts = reg.piece_starts();
            for (double db = -29.9; db < 45.0; db += 0.173) {
                const double x = db_to_linear(db);
                bool near_edge = false;
                for (double s : starts) near_edge |= s > 0 && std::abs(x / s - 1.0) < 1e-5;
                if (near_edge) continue;
                EXPECT_EQ(reg.classify(x), argmax_oracle(x, 4, comb, t)) << a << ' ' << int(comb) << ' ' << db;
            }
        }
}

TEST(Optimizer, SlowRegionsWithOneRoundAreAmc) {
    const auto t = table5();
    const auto reg = slow_optimal_regions(1, CombiningType::IR, t);
    const auto amc = amc_thresholds_exact(t).thresholds();
    for (std::size_t l = 1; l < 5; ++l) {
        ASSERT_EQ(reg.intervals(l).size(), 1u);
        EXPECT_NEAR(reg.intervals(l)[0].lo, amc[l], 1e-5 * amc[l]);
    }
}

TEST(Optimizer, SlowRegionsRejectCoarseGrid) {
    EXPECT_THROW(slow_optimal_regions(2, CombiningType::RR, table5(), log_snr_grid(-30, 45, 100)), std::invalid_argument);
}

TEST(Optimizer, FastFIdentity) {
    // F(gamma, lambda) = sum_l R_l p_l (1 - f_K) - lambda sum_l p_l (1 + sum_{k<K} f_k).
    const auto t = table5();
    const double avg = db_to_linear(6.0);
    const FastFadingModel m(t, CombiningType::IR, 3, avg);
    const std::vector<double> g{0.0, 1.2, 3.0, 3.0, 11.0};
    const auto q = m.quantities(DecisionRegions::from_thresholds(g));
    for (double lambda : {0.0, 0.7, 2.1}) {
        double ref = 0.0;
        for (std::size_t l = 0; l < 5; ++l) {
            double den = q.probability[l];
            for (unsigned k = 1; k < 3; ++k) den += q.joint[l][k];
            ref += t.rate(l) * (q.probability[l] - q.joint[l][3]) - lambda * den;
        }
        EXPECT_NEAR(fast_F(m, g, lambda), ref, 1e-10);
    }
}

TEST(Optimizer, FastOptimumIsStationaryAndBeatsBaselines) {
    const auto t = table5();
    for (auto comb : {CombiningType::RR, CombiningType::IR})
        for (double db : {0.0, 12.0}) {
            const double avg = db_to_linear(db);
            const FastFadingModel m(t, comb, 4, avg);
            const auto res = fast_optimize_regions(m);
            const double eta = res.throughput.value;
            EXPECT_NEAR(eta, fast_throughput(m, res.regions).value, 1e-12);
            EXPECT_NEAR(res.lambda, eta, 1e-6 * eta);
            EXPECT_FALSE(res.kkt_warning);
            EXPECT_NEAR(fast_F(m, res.regions.thresholds(), eta), 0.0, 1e-7);

            EXPECT_GE(eta + 1e-9, fast_throughput(m, amc_thresholds_exact(t)).value);
            for (std::size_t l = 0; l < 5; ++l) {
                std::vector<double> one(5, 0.0);
                for (std::size_t j = l + 1; j < 5; ++j) one[j] = kInf;
                EXPECT_GE(eta + 1e-9, fast_throughput(m, DecisionRegions::from_thresholds(one)).value);
            }
            // Random local perturbations do not help.
            std::mt19937_64 rng(5);
            std::normal_distribution<double> n(0.0, 0.02);
            for (int trial = 0; trial < 40; ++trial) {
                auto g = res.regions.thresholds();
                for (std::size_t l = 1; l < 5; ++l)
                    if (std::isfinite(g[l])) g[l] = std::max(0.0, g[l] * std::exp(n(rng)) + 0.01 * std::abs(n(rng)));
                std::sort(g.begin() + 1, g.end());
                EXPECT_LE(fast_throughput(m, DecisionRegions::from_thresholds(g)).value, eta + 1e-7);
            }
        }
}

TEST(Optimizer, DeterministicAcrossRuns) {
    const auto t = table5();
    const auto a = fast_optimize_regions(3, CombiningType::IR, t, 4.0);
    const auto b = fast_optimize_regions(3, CombiningType::IR, t, 4.0);
    EXPECT_EQ(a.regions.thresholds(), b.regions.thresholds());
    EXPECT_EQ(a.throughput.value, b.throughput.value);
}

TEST(Optimizer, AggressiveAtLowSnrConservativeAtHighSnr) {
    const auto t = table5();
    const auto amc = amc_thresholds_exact(t).thresholds();
    for (auto comb : {CombiningType::RR, CombiningType::IR}) {
        for (double db : {-10.0, -5.0}) {
            const auto res = fast_optimize_regions(4, comb, t, db_to_linear(db));
            for (std::size_t l = 1; l < 5; ++l) EXPECT_LE(res.regions.thresholds()[l], amc[l]) << db << " l=" << l;
        }
        for (double db : {20.0, 25.0}) {
            const FastFadingModel m(t, comb, 4, db_to_linear(db));
            const auto res = fast_optimize_regions(m);
            const auto& g = res.regions.thresholds();
            for (std::size_t l = 1; l < 4; ++l) EXPECT_GE(g[l], amc[l]) << db << " l=" << l;
            // The top threshold stays below the AMC one: a failed top-rate
            // attempt is cheap once retransmissions are available.
            EXPECT_LT(g[4], amc[4]);
            auto raised = g;
            raised[4] = amc[4];
            EXPECT_LT(fast_throughput(m, DecisionRegions::from_thresholds(raised)).value, res.throughput.value);
        }
    }
}
