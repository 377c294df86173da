#include <cmath>
#include <functional>

#include <gtest/gtest.h>

#include "harq/amc.hpp"
#include "harq/harq_analysis.hpp"
#include "harq/simulator.hpp"

using namespace harq;

namespace {

McsTable table5(double a = 4.0) { return McsTable(McsTable::linear_rates(5), a); }

struct Best {
    double value = -1.0;
    int count = 0;
    std::vector<double> assign;
};

// Exhaustive enumeration with the documented tie rule.
Best brute_force(const std::vector<PacketState>& buf, double snr, const HarqConfig& h, const McsTable& t) {
    Best best;
    std::vector<double> cur(buf.size(), 0.0);
    std::function<void(std::size_t, double, double, int)> rec = [&](std::size_t i, double used, double v, int n) {
        if (i == buf.size()) {
            bool take = false;
            if (v > best.value + 1e-12) take = true;
            else if (v > best.value - 1e-12) {
                if (n < best.count) take = true;
                else if (n == best.count && cur < best.assign) take = true;
            }
            if (take) best = {v, n, cur};
            return;
        }
        std::vector<double> opts{0.0};
        for (double l : vl_options(buf[i], h)) opts.push_back(l);
        for (double len : opts) {
            if (used + len > 1.0 + 1e-12) continue;
            cur[i] = len;
            const double gain = len > 0 ? 1.0 - vl_error_probability(buf[i], len, snr, t) : 0.0;
            rec(i + 1, used + len, v + gain, n + (len > 0));
        }
        cur[i] = 0.0;
    };
    rec(0, 0.0, 0.0, 0);
    return best;
}

}  // namespace

TEST(Simulator, RejectsTooFewBlocks) {
    const auto t = table5();
    HarqConfig h;
    EXPECT_THROW(simulate_plain(amc_thresholds_exact(t), h, t, {1.0, FadingMode::Fast, 1}, 1000), std::invalid_argument);
}

TEST(Simulator, Deterministic) {
    const auto t = table5();
    const auto reg = amc_thresholds_exact(t);
    HarqConfig h;
    const ChannelConfig ch{db_to_linear(7.0), FadingMode::Fast, 99};
    const auto a = simulate_plain(reg, h, t, ch, 100000, 4);
    const auto b = simulate_plain(reg, h, t, ch, 100000, 4);
    const auto c = simulate_plain(reg, h, t, ch, 100000, 5);
    EXPECT_EQ(a.throughput, b.throughput);
    EXPECT_EQ(a.acked_packets, b.acked_packets);
    EXPECT_NE(a.throughput, c.throughput);
    EXPECT_EQ(a.blocks, 100000u);
    EXPECT_GT(a.ci_half_width, 0.0);
}

TEST(Simulator, PacketDropSlowEqualsPlain) {
    const auto t = table5();
    const auto reg = amc_thresholds_exact(t);
    HarqConfig h;
    h.variant = HarqVariant::PacketDrop;
    const ChannelConfig ch{db_to_linear(7.0), FadingMode::Slow, 3};
    const auto pd = simulate_packet_drop(reg, h, t, ch, 100000, 2);
    h.variant = HarqVariant::Plain;
    const auto pl = simulate_plain(reg, h, t, ch, 100000, 2);
    EXPECT_EQ(pd.throughput, pl.throughput);
    EXPECT_EQ(pd.drops, 0u);
}

TEST(Simulator, PacketDropWithOneRegionIsPlain) {
    // With a single used MCS nothing is ever dropped.
    const auto t = table5();
    const auto reg = DecisionRegions::from_thresholds({0.0, 0.0, kInf, kInf, kInf});
    HarqConfig h;
    h.variant = HarqVariant::PacketDrop;
    const double avg = db_to_linear(3.0);
    const auto r = simulate_packet_drop(reg, h, t, {avg, FadingMode::Fast, 8}, 300000);
    EXPECT_EQ(r.drops, 0u);
    EXPECT_NEAR(r.throughput, fast_throughput(reg, 4, CombiningType::IR, t, avg).value, r.ci_half_width);
}

TEST(VariableLength, SnrPrimeAndErrorProbability) {
    const auto t = table5();
    PacketState p;
    EXPECT_NEAR(vl_snr_prime(p, 0.5, 1.0), 1.0, 1e-14);
    p.harq_count = 1;
    p.first_len = 0.5;
    p.snr_sigma = 1.0;
    EXPECT_NEAR(vl_snr_prime(p, 0.5, 1.0), 3.0, 1e-14);
    // First length 1/2 selects rate 1.5, i.e. MCS index 1.
    EXPECT_NEAR(vl_error_probability(p, 0.5, 1.0, t), per(1, 3.0, t) / per(1, 1.0, t), 1e-14);
    PacketState fresh;
    EXPECT_NEAR(vl_error_probability(fresh, 1.0 / 3, 20.0, t), per(2, 20.0, t), 1e-14);
    EXPECT_THROW(vl_error_probability(fresh, 0.4, 20.0, t), std::invalid_argument);
}

TEST(VariableLength, ScheduleMatchesBruteForce) {
    const auto t = table5();
    auto h = HarqConfig::variable_length_default();
    std::vector<PacketState> buf(4);
    buf[1] = {1, 0.5, 1.2, 0.0};
    buf[2] = {2, 1.0 / 3, 4.0, 0.0};
    buf[3] = {1, 0.2, 0.4, 0.0};
    for (double snr : {0.05, 0.4, 1.0, 3.0, 10.0, 60.0, 500.0}) {
        const auto a = vl_schedule(buf, snr, h, t);
        const auto b = brute_force(buf, snr, h, t);
        double v = 0.0, used = 0.0;
        for (std::size_t i = 0; i < buf.size(); ++i) {
            used += a[i];
            if (a[i] > 0) v += 1.0 - vl_error_probability(buf[i], a[i], snr, t);
        }
        EXPECT_LE(used, 1.0 + 1e-12);
        EXPECT_NEAR(v, b.value, 1e-10) << snr;
        EXPECT_EQ(a, b.assign) << snr;
    }
}

TEST(VariableLength, UpdateAcksRetriesDiscardsAndRefills) {
    const auto t = table5();
    auto h = HarqConfig::variable_length_default(2);
    std::vector<PacketState> buf(vl_buffer_size(h, t));
    ASSERT_EQ(buf.size(), 10u);
    buf[1] = {1, 0.5, 1.0, 0.0};
    std::vector<double> assign(buf.size(), 0.0);
    assign[0] = 0.5;
    assign[1] = 0.25;
    assign[2] = 0.25;
    std::vector<bool> ok(buf.size(), false);
    ok[2] = true;
    const auto u = vl_update(buf, assign, 2.0, ok, h, t);
    EXPECT_EQ(u.acked, 1u);
    EXPECT_EQ(u.discarded, 1u);  // buf[1] reached K = 2
    EXPECT_NEAR(u.reward, 0.75, 1e-15);
    ASSERT_EQ(buf.size(), 10u);
    EXPECT_EQ(buf[0].harq_count, 1u);
    EXPECT_EQ(buf[0].first_len, 0.5);
    EXPECT_NEAR(buf[0].snr_sigma, 2.0, 1e-12);
    for (std::size_t i = 1; i < buf.size(); ++i) EXPECT_TRUE(buf[i].fresh());
}

TEST(VariableLength, SimulationRunsAndIsDeterministic) {
    const auto t = table5();
    const auto h = HarqConfig::variable_length_default();
    const ChannelConfig ch{db_to_linear(10.0), FadingMode::Fast, 4};
    const auto a = simulate_vl(h, t, ch, 100000, 1);
    const auto b = simulate_vl(h, t, ch, 100000, 1);
    EXPECT_EQ(a.throughput, b.throughput);
    EXPECT_GT(a.throughput, 0.0);
    EXPECT_LE(a.throughput, t.max_rate());
    EXPECT_THROW(simulate_vl(h, t, {1.0, FadingMode::Slow, 4}, 100000), std::invalid_argument);
}
