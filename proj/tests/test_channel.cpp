#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "harq/channel.hpp"

using namespace harq;

TEST(Channel, DbConversionRoundTrips) {
    EXPECT_DOUBLE_EQ(db_to_linear(0.0), 1.0);
    EXPECT_NEAR(db_to_linear(10.0), 10.0, 1e-12);
    EXPECT_NEAR(db_to_linear(-3.0), 0.501187233627, 1e-12);
    for (double db : {-30.0, -2.5, 0.0, 7.25, 45.0}) EXPECT_NEAR(linear_to_db(db_to_linear(db)), db, 1e-12);
}

TEST(Channel, PdfIsExponential) {
    EXPECT_DOUBLE_EQ(snr_pdf(0.0, 2.0), 0.5);
    EXPECT_NEAR(snr_pdf(3.0, 2.0), 0.5 * std::exp(-1.5), 1e-15);
    EXPECT_THROW(snr_pdf(-1.0, 1.0), std::domain_error);
    EXPECT_THROW(snr_pdf(1.0, 0.0), std::domain_error);
}

TEST(Channel, ConfigValidation) {
    EXPECT_NO_THROW((ChannelConfig{1.0, FadingMode::Fast, 1}).validate());
    EXPECT_THROW((ChannelConfig{0.0, FadingMode::Fast, 1}).validate(), std::domain_error);
    EXPECT_THROW((ChannelConfig{1.0, FadingMode::Slow, 1, 0}).validate(), std::domain_error);
}

TEST(Channel, StreamIsDeterministicPerSeedAndStream) {
    SnrStream a(7, 3), b(7, 3), c(7, 4), d(8, 3);
    bool differs_c = false, differs_d = false;
    for (int i = 0; i < 100; ++i) {
        const double va = a.next_uniform();
        EXPECT_EQ(va, b.next_uniform());
        differs_c |= va != c.next_uniform();
        differs_d |= va != d.next_uniform();
    }
    EXPECT_TRUE(differs_c);
    EXPECT_TRUE(differs_d);
}

// Kolmogorov-Smirnov against the exponential CDF plus a lag-1 correlation
// check; both bounds are ~4x the asymptotic 1-sigma level.
TEST(Channel, ExponentialSamplesPassKsAndAreUncorrelated) {
    constexpr int n = 50000;
    const double avg = 3.7;
    SnrStream s(2024, 0);
    std::vector<double> x(n);
    for (auto& v : x) v = s.next_exponential(avg);

    std::vector<double> sorted = x;
    std::sort(sorted.begin(), sorted.end());
    double d = 0.0;
    for (int i = 0; i < n; ++i) {
        const double F = 1.0 - std::exp(-sorted[i] / avg);
        d = std::max({d, F - double(i) / n, double(i + 1) / n - F});
    }
    EXPECT_LT(d, 1.95 / std::sqrt(double(n)));  // KS at alpha = 0.001

    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    EXPECT_NEAR(mean, avg, 5.0 * avg / std::sqrt(double(n)));
    double num = 0.0, den = 0.0;
    for (int i = 0; i < n; ++i) {
        den += (x[i] - mean) * (x[i] - mean);
        if (i + 1 < n) num += (x[i] - mean) * (x[i + 1] - mean);
    }
    EXPECT_LT(std::abs(num / den), 4.0 / std::sqrt(double(n)));
}

TEST(Channel, CycleSnrsRespectFadingMode) {
    const auto slow = sample_cycle_snrs({2.0, FadingMode::Slow, 5}, 4, 1);
    ASSERT_EQ(slow.size(), 4u);
    for (double v : slow) EXPECT_EQ(v, slow[0]);
    const auto fast = sample_cycle_snrs({2.0, FadingMode::Fast, 5}, 4, 1);
    EXPECT_NE(fast[0], fast[1]);
    EXPECT_EQ(fast, sample_cycle_snrs({2.0, FadingMode::Fast, 5}, 4, 1));
    EXPECT_THROW(sample_cycle_snrs({2.0, FadingMode::Fast, 5}, 0, 1), std::domain_error);
}
