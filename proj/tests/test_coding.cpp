#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "harq/coding.hpp"

using namespace harq;

namespace {
McsTable table5(double a = 4.0) { return McsTable(McsTable::linear_rates(5), a); }
}  // namespace

TEST(Coding, MutualInformationInverts) {
    EXPECT_DOUBLE_EQ(mutual_information(1.0), 1.0);
    EXPECT_NEAR(mutual_information(3.0), 2.0, 1e-15);
    for (double x : {0.0, 1e-8, 0.3, 5.0, 1e4}) EXPECT_NEAR(mutual_information_inverse(mutual_information(x)), x, 1e-10 * (1 + x));
}

TEST(Coding, TableThresholdsAreCapacityInverse) {
    const auto t = table5();
    ASSERT_EQ(t.size(), 5u);
    for (std::size_t l = 0; l < 5; ++l) {
        EXPECT_NEAR(t.rate(l), 0.75 * double(l + 1), 1e-15);
        EXPECT_NEAR(t.threshold(l), std::pow(2.0, t.rate(l)) - 1.0, 1e-12);
    }
    EXPECT_FALSE(t.is_threshold_decoding());
    EXPECT_TRUE(McsTable::threshold_decoding({1.0, 2.0}).is_threshold_decoding());
    EXPECT_THROW(McsTable({}, 4.0), std::invalid_argument);
    EXPECT_THROW(McsTable({2.0, 1.0}, 4.0), std::invalid_argument);
    EXPECT_THROW(McsTable({1.0, 2.0}, 0.0), std::invalid_argument);
    EXPECT_THROW(McsTable({1.0, 2.0}, -std::numeric_limits<double>::infinity()), std::invalid_argument);
}

TEST(Coding, PerModel) {
    const auto t = table5();
    const double th = t.threshold(2);
    EXPECT_EQ(per(2, 0.0, t), 1.0);
    EXPECT_EQ(per(2, th * 0.999, t), 1.0);
    EXPECT_DOUBLE_EQ(per(2, th, t), 1.0);
    EXPECT_NEAR(per(2, 2.0 * th, t), std::exp(-4.0), 1e-15);
    const auto td = McsTable::threshold_decoding(McsTable::linear_rates(5));
    EXPECT_EQ(per(2, th * 0.999, td), 1.0);
    EXPECT_EQ(per(2, th * 1.001, td), 0.0);
    EXPECT_THROW(per(5, 1.0, t), std::out_of_range);
    EXPECT_THROW(per(0, -1.0, t), std::domain_error);
}

TEST(Coding, SnrMargin) {
    // PER(th * delta) must equal the target.
    for (double a : {0.5, 4.0, 10.0})
        for (double p : {0.5, 0.1, 1e-3}) {
            const double d = snr_margin_delta(p, a);
            EXPECT_NEAR(std::exp(-a * (d - 1.0)), p, 1e-14);
        }
    EXPECT_NEAR(snr_margin_delta(0.1, 4.0), 1.0 + std::log(10.0) / 4.0, 1e-15);
    EXPECT_THROW(snr_margin_delta(0.0, 4.0), std::domain_error);
    EXPECT_THROW(snr_margin_delta(0.1, 0.0), std::domain_error);
}

TEST(Coding, AggregateSnr) {
    const std::vector<double> s{0.5, 2.0, 7.0};
    EXPECT_NEAR(aggregate_snr(s, CombiningType::RR), 9.5, 1e-14);
    // IR: product of (1 + snr) minus one.
    EXPECT_NEAR(aggregate_snr(s, CombiningType::IR), 1.5 * 3.0 * 8.0 - 1.0, 1e-12);
    EXPECT_NEAR(aggregate_snr_repeated(3.0, 4, CombiningType::RR), 12.0, 1e-14);
    EXPECT_NEAR(aggregate_snr_repeated(3.0, 4, CombiningType::IR), 255.0, 1e-10);
    EXPECT_THROW(aggregate_snr(std::vector<double>{}, CombiningType::RR), std::invalid_argument);
    // RR never beats IR on equal inputs.
    for (double x : {0.1, 1.0, 10.0}) EXPECT_LE(aggregate_snr_repeated(x, 3, CombiningType::RR), aggregate_snr_repeated(x, 3, CombiningType::IR));
}

TEST(Coding, VariableLengthAggregate) {
    // First subcodeword of length 1/2 at SNR 1, second of 1/2 at SNR 1:
    // I' = (0.5 + 0.5) / 0.5 = 2 bits, i.e. SNR' = 3.
    const std::vector<SubcodewordRound> e{{0.5, 1.0}, {0.5, 1.0}};
    EXPECT_NEAR(aggregate_snr_vl(0.5, e), 3.0, 1e-14);
    const std::vector<SubcodewordRound> one{{1.0, 5.0}};
    EXPECT_NEAR(aggregate_snr_vl(1.0, one), 5.0, 1e-13);
    EXPECT_THROW(aggregate_snr_vl(1.0, one, CombiningType::RR), std::invalid_argument);
}

TEST(Coding, NackProbabilityUsesAggregate) {
    const auto t = table5();
    const std::vector<double> s{1.0, 2.0};
    EXPECT_DOUBLE_EQ(nack_probability(1, s, CombiningType::RR, t), per(1, 3.0, t));
    EXPECT_DOUBLE_EQ(nack_probability(1, s, CombiningType::IR, t), per(1, 5.0, t));
}

// Composite Simpson on [x, x + 60 avg] as the oracle for the tail mass.
TEST(Coding, PerTailMassMatchesQuadrature) {
    for (double a : {0.5, 4.0}) {
        const auto t = table5(a);
        for (double avg : {0.3, 2.0, 40.0})
            for (std::size_t l : {0u, 3u})
                for (double x : {0.0, 0.5 * t.threshold(l), 2.0 * t.threshold(l)}) {
                    const double th = t.threshold(l);
                    auto f = [&](double y) { return std::exp(-y / avg) / avg * per(l, y, t); };
                    auto simpson = [&](double lo, double hi) {
                        const int n = 20000;
                        const double h = (hi - lo) / n;
                        double s = f(lo) + f(hi);
                        for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
                        return s * h / 3.0;
                    };
                    // Resolve the PER decay scale th / a separately from the pdf scale.
                    const double lo = std::max(x, th);
                    const double mid = lo + 60.0 * th / a;
                    const double hi = mid + 60.0 * avg;
                    const double ref = (x < th ? simpson(x, th) : 0.0) + simpson(lo, mid) + simpson(mid, hi);
                    EXPECT_NEAR(per_tail_mass(l, x, avg, t), ref, 1e-9 + 1e-8 * ref) << a << ' ' << avg << ' ' << l << ' ' << x;
                }
    }
}
