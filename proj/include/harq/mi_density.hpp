#pragma once

// Densities of sums of i.i.d. mutual-information variables V = I(G), G
// exponential, tabulated on a uniform MI-domain grid. Used for the IR error
// cascades in fast fading.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "harq/coding.hpp"

namespace harq {

inline constexpr std::size_t kDefaultMiGridPoints = std::size_t{1} << 14;

namespace detail {

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

/// Full linear convolution of a and b.
inline std::vector<double> fft_convolve(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t out = a.size() + b.size() - 1;
    const std::size_t n = next_pow2(out);
    std::vector<double> pa(a), pb(b);
    pa.resize(n, 0.0);
    pb.resize(n, 0.0);
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> fa, fb;
    fft.fwd(fa, pa);
    fft.fwd(fb, pb);
    for (std::size_t i = 0; i < fa.size(); ++i) fa[i] *= fb[i];
    std::vector<double> r;
    fft.inv(r, fa);
    r.resize(out);
    return r;
}

// Three-point Gauss-Legendre nodes/weights on [0, 1].
inline constexpr double kGl3x[3] = {0.1127016653792583, 0.5, 0.8872983346207417};
inline constexpr double kGl3w[3] = {0.2777777777777778, 0.4444444444444444, 0.2777777777777778};

/// Moments of g against the two hat halves on the cell [a, a + h]:
///   first  = int_0^h (1 - s/h) g(a + s) ds,  second = int_0^h (s/h) g(a + s) ds.
/// g equals 1 below `knee` and is evaluated only above it.
template <class G>
std::pair<double, double> hat_moments(G&& g, double knee, double a, double h) {
    const double b = a + h;
    if (b <= knee) return {0.5 * h, 0.5 * h};
    double first = 0.0;
    double second = 0.0;
    double from = a;
    if (knee > a) {
        // g = 1 on [a, knee]; integrate the hat weights exactly.
        const double s = knee - a;
        first += s - 0.5 * s * s / h;
        second += 0.5 * s * s / h;
        from = knee;
    }
    const double len = b - from;
    for (int q = 0; q < 3; ++q) {
        const double x = from + kGl3x[q] * len;
        const double gv = g(x) * kGl3w[q] * len;
        const double t = (x - a) / h;
        first += (1.0 - t) * gv;
        second += t * gv;
    }
    return {first, second};
}

}  // namespace detail

/// p_m, the density of V_1 + ... + V_m, for m = 1..max_terms on the grid
/// v_j = j * step(). The single-term density is truncated at I(50 avg_snr).
class MiSumDensity {
public:
    MiSumDensity(double avg_snr, std::size_t max_terms, std::size_t grid_points = kDefaultMiGridPoints)
        : avg_snr_(avg_snr), n_(grid_points) {
        if (!(avg_snr > 0.0)) throw std::domain_error("MiSumDensity: avg_snr must be positive");
        if (max_terms < 1 || grid_points < 16) throw std::invalid_argument("MiSumDensity: bad sizes");
        h_ = mutual_information(50.0 * avg_snr) / static_cast<double>(n_);
        std::vector<double> p1(n_ + 1);
        for (std::size_t j = 0; j <= n_; ++j) p1[j] = single_density(static_cast<double>(j) * h_, avg_snr_);
        densities_.push_back(std::move(p1));
        for (std::size_t m = 2; m <= max_terms; ++m) densities_.push_back(convolve_single(densities_.back()));
        cdfs_.reserve(densities_.size());
        for (const auto& p : densities_) {
            std::vector<double> c(p.size(), 0.0);
            for (std::size_t j = 1; j < p.size(); ++j) c[j] = c[j - 1] + 0.5 * h_ * (p[j - 1] + p[j]);
            cdfs_.push_back(std::move(c));
        }
    }

    /// Density of I(G) at v >= 0: ln2 2^v exp(-(2^v - 1)/avg_snr) / avg_snr.
    static double single_density(double v, double avg_snr) {
        const double y = v * std::numbers::ln2;
        return std::numbers::ln2 / avg_snr * std::exp(y - std::expm1(y) / avg_snr);
    }

    double avg_snr() const { return avg_snr_; }
    double step() const { return h_; }
    std::size_t grid_points() const { return n_; }
    std::size_t max_terms() const { return densities_.size(); }

    const std::vector<double>& density(std::size_t terms) const { return densities_.at(terms - 1); }
    /// Trapezoid-integrated mass of the tabulated density (close to 1).
    double mass(std::size_t terms) const { return cdfs_.at(terms - 1).back(); }

    /// E[g(w + V_terms)] for a function g that equals 1 below `knee` and is
    /// non-increasing above it; the density is interpolated linearly.
    template <class G>
    double expect(std::size_t terms, double w, G&& g, double knee) const {
        const auto& p = density(terms);
        const auto& cdf = cdfs_.at(terms - 1);
        const std::size_t cells = p.size() - 1;
        // Cells lying entirely below the knee contribute their mass.
        const double c = knee - w;
        std::size_t j0 = 0;
        double total = 0.0;
        if (c > 0.0) {
            j0 = std::min(cells, static_cast<std::size_t>(std::floor(c / h_)));
            total = cdf[j0];
        }
        for (std::size_t j = j0; j < cells; ++j) {
            const double a = w + static_cast<double>(j) * h_;
            if (p[j] == 0.0 && p[j + 1] == 0.0) continue;
            const auto [first, second] = detail::hat_moments(g, knee, a, h_);
            total += p[j] * first + p[j + 1] * second;
            if (a > knee && g(a) < 1e-300) break;
        }
        return total;
    }

private:
    std::vector<double> convolve_single(const std::vector<double>& q) const {
        const auto& p1 = densities_.front();
        auto c = detail::fft_convolve(p1, q);
        // Trapezoid weights: half weight at both ends of [0, v_i].
        for (std::size_t i = 0; i < c.size(); ++i) {
            double v = c[i];
            if (i < q.size()) v -= 0.5 * p1[0] * q[i];
            if (i < p1.size()) v -= 0.5 * p1[i] * q[0];
            c[i] = std::max(0.0, v * h_);
        }
        return c;
    }

    double avg_snr_;
    std::size_t n_;
    double h_ = 0.0;
    std::vector<std::vector<double>> densities_;
    std::vector<std::vector<double>> cdfs_;
};

}  // namespace harq
