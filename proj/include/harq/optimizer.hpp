#pragma once

// Decision-region optimization. Slow fading: pointwise argmax of the per-SNR
// HARQ throughput, merged into unions of intervals. Fast fading: threshold
// vectors maximizing the renewal-reward throughput by Dinkelbach bisection
// on lambda with cyclic coordinate maximization of F(gamma, lambda).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "harq/amc.hpp"
#include "harq/harq_analysis.hpp"
#include "harq/regions.hpp"

namespace harq {

// ---------------------------------------------------------------- slow fading

/// n log-spaced linear SNRs over [lo_db, hi_db].
inline std::vector<double> log_snr_grid(double lo_db = -30.0, double hi_db = 45.0, std::size_t n = 2001) {
    if (n < 2 || !(hi_db > lo_db)) throw std::invalid_argument("log_snr_grid: bad range");
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = db_to_linear(lo_db + (hi_db - lo_db) * static_cast<double>(i) / static_cast<double>(n - 1));
    return g;
}

namespace detail {

/// argmax_l of slow_throughput_at; ties go to the larger l, except that an
/// all-zero row maps to l = 0 (nothing is decodable there, and this keeps the
/// K = 1 case identical to AMC).
inline std::size_t slow_argmax(double x, unsigned K, CombiningType c, const McsTable& table) {
    std::size_t best = 0;
    double bv = 0.0;
    bool any = false;
    for (std::size_t l = 0; l < table.size(); ++l) {
        const double v = slow_throughput_at(l, x, K, c, table);
        if (v > 0.0) any = true;
        if (v >= bv) {
            bv = v;
            best = l;
        }
    }
    return any ? best : 0;
}

struct Boundary {
    double x;
    std::size_t right_label;
};

inline void split_boundary(double xl, std::size_t la, double xr, std::size_t lr, unsigned K, CombiningType c,
                           const McsTable& table, std::vector<Boundary>& out, int depth) {
    if (depth > 64) throw NumericalError("slow_optimal_regions: boundary refinement did not resolve");
    while (xr - xl > 1e-6 * xr) {
        const double mid = 0.5 * (xl + xr);
        const std::size_t lm = slow_argmax(mid, K, c, table);
        if (lm == la) {
            xl = mid;
        } else if (lm == lr) {
            xr = mid;
        } else {
            // A third rate wins inside the gap: resolve both sides separately.
            split_boundary(xl, la, mid, lm, K, c, table, out, depth + 1);
            split_boundary(mid, lm, xr, lr, K, c, table, out, depth + 1);
            return;
        }
    }
    out.push_back({0.5 * (xl + xr), lr});
}

}  // namespace detail

/// Throughput-optimal slow-fading regions as unions of intervals.
inline DecisionRegions slow_optimal_regions(unsigned K, CombiningType combining, const McsTable& table,
                                            const std::vector<double>& snr_grid) {
    if (snr_grid.size() < 2000) throw std::invalid_argument("slow_optimal_regions: grid needs >= 2000 points");
    for (std::size_t i = 0; i < snr_grid.size(); ++i)
        if (!(snr_grid[i] > 0.0) || (i > 0 && !(snr_grid[i] > snr_grid[i - 1])))
            throw std::invalid_argument("slow_optimal_regions: grid must be positive and increasing");
    std::vector<std::size_t> lab(snr_grid.size());
    for (std::size_t i = 0; i < snr_grid.size(); ++i) lab[i] = detail::slow_argmax(snr_grid[i], K, combining, table);

    std::vector<detail::Boundary> bounds;
    for (std::size_t i = 0; i + 1 < snr_grid.size(); ++i)
        if (lab[i] != lab[i + 1])
            detail::split_boundary(snr_grid[i], lab[i], snr_grid[i + 1], lab[i + 1], K, combining, table, bounds, 0);

    // Below the grid the first label is extended to 0 unless a lower label
    // shows up at 0 itself.
    std::vector<std::vector<Interval>> per_rate(table.size());
    double lo = 0.0;
    std::size_t cur = lab.front();
    for (const auto& b : bounds) {
        if (b.right_label == cur) continue;
        if (b.x > lo) per_rate[cur].push_back({lo, b.x});
        lo = b.x;
        cur = b.right_label;
    }
    per_rate[cur].push_back({lo, kInf});
    // Merge touching pieces of the same label.
    for (auto& v : per_rate) {
        std::vector<Interval> merged;
        for (const auto& iv : v) {
            if (!merged.empty() && merged.back().hi == iv.lo)
                merged.back().hi = iv.hi;
            else
                merged.push_back(iv);
        }
        v = std::move(merged);
    }
    return DecisionRegions::from_intervals(std::move(per_rate));
}

inline DecisionRegions slow_optimal_regions(unsigned K, CombiningType combining, const McsTable& table) {
    return slow_optimal_regions(K, combining, table, log_snr_grid());
}

// ---------------------------------------------------------------- fast fading

struct DinkelbachState {
    double lambda = 0.0;
    std::vector<double> gamma;  // thresholds, gamma[0] = 0
    double f_value = 0.0;       // max_gamma F(gamma, lambda) found
    double lambda_lo = 0.0;
    double lambda_hi = 0.0;
};

struct FastOptimizerOptions {
    unsigned restarts = 5;
    std::uint64_t seed = 0x5eed;
    double f_tolerance = 1e-8;
    double bracket_tolerance = 1e-10;
    double kkt_tolerance = 1e-4;
    unsigned scan_points = 48;
    unsigned max_passes = 200;
};

struct FastOptimization {
    DecisionRegions regions = DecisionRegions::from_thresholds({0.0});
    ThroughputEstimate throughput;
    double lambda = 0.0;
    std::vector<DinkelbachState> trace;
    double kkt_residual = 0.0;  // max relative residual over interior thresholds
    bool kkt_warning = false;
};

namespace detail {

class FastObjective {
public:
    FastObjective(const FastFadingModel& m, double lambda) : m_(m), lambda_(lambda) {}

    /// zeta_l(x) = R_l (Q - T_K) - lambda (Q + sum_{0<k<K} T_k).
    double zeta(std::size_t l, double x) const {
        if (std::isinf(x)) return 0.0;
        const unsigned K = m_.max_rounds();
        const double q = m_.survival(x);
        double rounds = q;
        for (unsigned k = 1; k < K; ++k) rounds += m_.tail(k, l, x);
        return m_.table().rate(l) * (q - m_.tail(K, l, x)) - lambda_ * rounds;
    }

    /// u_l(x) = R_l (1 - f_K(x)) - lambda (1 + sum_{0<k<K} f_k(x)); d zeta_l / dx = -pdf u_l.
    double marginal(std::size_t l, double x) const {
        const unsigned K = m_.max_rounds();
        double rounds = 1.0;
        for (unsigned k = 1; k < K; ++k) rounds += m_.conditional(k, l, x);
        return m_.table().rate(l) * (1.0 - m_.conditional(K, l, x)) - lambda_ * rounds;
    }

    double value(const std::vector<double>& g) const {
        double f = zeta(0, 0.0);
        for (std::size_t l = 1; l < g.size(); ++l) f += zeta(l, g[l]) - zeta(l - 1, g[l]);
        return f;
    }

    double lambda() const { return lambda_; }
    const FastFadingModel& model() const { return m_; }

private:
    const FastFadingModel& m_;
    double lambda_;
};

inline double s_to_x(double s, double avg) { return s >= 1.0 ? kInf : avg * s / (1.0 - s); }
inline double x_to_s(double x, double avg) { return std::isinf(x) ? 1.0 : x / (x + avg); }

/// Maximize zeta_hi(x) - zeta_lo(x) over [a, b]; returns the new position,
/// which stays at `cur` unless strictly better.
inline double best_position(const FastObjective& obj, std::size_t lo, std::size_t hi, double a, double b, double cur,
                            unsigned scan) {
    const double avg = obj.model().avg_snr();
    auto phi = [&](double x) { return obj.zeta(hi, x) - obj.zeta(lo, x); };
    if (!(b > a)) return a;
    const double sa = x_to_s(a, avg);
    const double sb = x_to_s(b, avg);
    auto phis = [&](double s) { return phi(s_to_x(s, avg)); };

    std::vector<double> ss(scan + 1), vs(scan + 1);
    std::size_t ib = 0;
    for (unsigned i = 0; i <= scan; ++i) {
        ss[i] = i == scan ? sb : sa + (sb - sa) * static_cast<double>(i) / scan;
        vs[i] = phis(ss[i]);
        if (vs[i] > vs[ib]) ib = i;
    }
    double best_x = s_to_x(ss[ib], avg);
    double best_v = vs[ib];
    if (ib == 0) best_x = a;
    if (ib == scan) best_x = b;

    if (ib > 0 && ib < scan) {
        // Golden-section refinement inside the bracketing scan cell.
        const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
        double l = ss[ib - 1];
        double r = ss[ib + 1];
        double c = r - gr * (r - l);
        double d = l + gr * (r - l);
        double fc = phis(c);
        double fd = phis(d);
        for (int it = 0; it < 200 && r - l > 1e-14; ++it) {
            if (fc >= fd) {
                r = d;
                d = c;
                fd = fc;
                c = r - gr * (r - l);
                fc = phis(c);
            } else {
                l = c;
                c = d;
                fc = fd;
                d = l + gr * (r - l);
                fd = phis(d);
            }
        }
        const double sm = 0.5 * (l + r);
        const double vm = phis(sm);
        if (vm > best_v) {
            best_v = vm;
            best_x = s_to_x(sm, avg);
        }
        // Polish to exact stationarity where the marginal changes sign.
        const double xl = s_to_x(ss[ib - 1], avg);
        const double xr = s_to_x(ss[ib + 1], avg);
        auto kappa = [&](double x) { return obj.marginal(hi, x) - obj.marginal(lo, x); };
        if (std::isfinite(xr)) {
            const double kl = kappa(xl);
            const double kr = kappa(xr);
            if (kl < 0.0 && kr > 0.0) {
                std::uintmax_t iters = 200;
                auto tol = [](double u, double v) { return std::abs(v - u) <= 1e-13 * std::max(std::abs(u), 1e-300); };
                try {
                    auto [u, v] = boost::math::tools::toms748_solve(kappa, xl, xr, kl, kr, tol, iters);
                    const double xs = 0.5 * (u + v);
                    const double vx = phi(xs);
                    if (vx >= best_v - 1e-9 * std::abs(best_v)) {
                        best_v = std::max(best_v, vx);
                        best_x = xs;
                    }
                } catch (const std::exception&) {
                }
            }
        }
    }
    const double vcur = phi(cur);
    if (best_v > vcur + 1e-14 * std::abs(vcur)) return best_x;
    return cur;
}

/// Cyclic coordinate ascent, with moves of single thresholds and of clusters
/// of equal thresholds (degenerate regions moving together).
inline void coordinate_ascent(const FastObjective& obj, std::vector<double>& g, const FastOptimizerOptions& opt) {
    const std::size_t L = g.size();
    double prev = obj.value(g);
    for (unsigned pass = 0; pass < opt.max_passes; ++pass) {
        for (std::size_t l = 1; l < L; ++l) {
            const double a = g[l - 1];
            const double b = l + 1 < L ? g[l + 1] : kInf;
            g[l] = best_position(obj, l - 1, l, a, b, g[l], opt.scan_points);
        }
        for (std::size_t first = 1; first < L;) {
            std::size_t last = first;
            while (last + 1 < L && g[last + 1] == g[first]) ++last;
            if (last > first) {
                const double a = g[first - 1];
                const double b = last + 1 < L ? g[last + 1] : kInf;
                const double x = best_position(obj, first - 1, last, a, b, g[first], opt.scan_points);
                for (std::size_t l = first; l <= last; ++l) g[l] = x;
            }
            first = last + 1;
        }
        const double v = obj.value(g);
        if (!(v > prev + 1e-15 * std::abs(prev))) break;
        prev = v;
    }
}

inline void check_monotone(const std::vector<double>& g) {
    if (g.empty() || g[0] != 0.0) throw std::logic_error("optimizer: first threshold must be 0");
    for (std::size_t l = 1; l < g.size(); ++l)
        if (!(g[l] >= g[l - 1])) throw std::logic_error("optimizer: non-monotone threshold vector");
}

}  // namespace detail

/// F(gamma, lambda) = sum R_l p_l (1 - f_{K,l}) - lambda sum Tbar_{K,l} p_l.
inline double fast_F(const FastFadingModel& model, const std::vector<double>& gamma, double lambda) {
    detail::check_monotone(gamma);
    const auto q = model.quantities(DecisionRegions::from_thresholds(gamma));
    double f = 0.0;
    for (std::size_t l = 0; l < gamma.size(); ++l) {
        const auto& j = q.joint[l];
        f += model.table().rate(l) * (j.front() - j.back());
        for (std::size_t k = 0; k + 1 < j.size(); ++k) f -= lambda * j[k];
    }
    return f;
}

inline double fast_F(const std::vector<double>& gamma, double lambda, unsigned K, CombiningType combining,
                     const McsTable& table, double avg_snr) {
    return fast_F(FastFadingModel(table, combining, K, avg_snr), gamma, lambda);
}

inline FastOptimization fast_optimize_regions(const FastFadingModel& model, const FastOptimizerOptions& opt = {}) {
    const McsTable& table = model.table();
    const std::size_t L = table.size();
    const double avg = model.avg_snr();
    std::mt19937_64 rng(opt.seed);
    auto uniform = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

    // Fixed starting set: AMC thresholds, every single-region collapse, and
    // random monotone vectors.
    std::vector<std::vector<double>> starts;
    starts.push_back(amc_thresholds_exact(table).thresholds());
    for (std::size_t keep = 0; keep < L; ++keep) {
        std::vector<double> g(L, 0.0);
        for (std::size_t l = keep + 1; l < L; ++l) g[l] = kInf;
        starts.push_back(std::move(g));
    }
    for (unsigned r = 0; r < opt.restarts; ++r) {
        std::vector<double> s(L - 1);
        for (double& v : s) v = uniform();
        std::sort(s.begin(), s.end());
        std::vector<double> g(L, 0.0);
        for (std::size_t l = 1; l < L; ++l) g[l] = detail::s_to_x(s[l - 1], avg);
        starts.push_back(std::move(g));
    }

    FastOptimization out;
    double best_eta = -1.0;
    std::vector<double> best_gamma;
    auto consider = [&](const std::vector<double>& g) {
        const double eta = fast_throughput(model, DecisionRegions::from_thresholds(g)).value;
        if (eta > best_eta) {
            best_eta = eta;
            best_gamma = g;
        }
    };
    for (const auto& s : starts) consider(s);

    double lo = 0.0;
    double hi = table.max_rate();
    std::vector<double> warm = starts.front();
    while (true) {
        const double lambda = 0.5 * (lo + hi);
        const detail::FastObjective obj(model, lambda);
        double fbest = -kInf;
        std::vector<double> gbest;
        auto run = [&](std::vector<double> g) {
            detail::coordinate_ascent(obj, g, opt);
            detail::check_monotone(g);
            const double v = obj.value(g);
            if (v > fbest) {
                fbest = v;
                gbest = g;
            }
        };
        run(warm);
        for (const auto& s : starts) run(s);
        warm = gbest;
        consider(gbest);
        if (fbest > 0.0)
            lo = lambda;
        else
            hi = lambda;
        out.trace.push_back({lambda, gbest, fbest, lo, hi});
        if (std::abs(fbest) < opt.f_tolerance || hi - lo < opt.bracket_tolerance) break;
        if (out.trace.size() > 200) throw NumericalError("fast_optimize_regions: bisection did not terminate");
    }

    detail::check_monotone(best_gamma);
    out.regions = DecisionRegions::from_thresholds(best_gamma);
    out.throughput = {best_eta, 0.0, Provenance::Analytic, 0};
    out.lambda = out.trace.back().lambda;

    // Stationarity residual at interior thresholds, using lambda = eta.
    const detail::FastObjective at(model, best_eta);
    double worst = 0.0;
    for (std::size_t l = 1; l < L; ++l) {
        const double x = best_gamma[l];
        const double a = best_gamma[l - 1];
        const double b = l + 1 < L ? best_gamma[l + 1] : kInf;
        if (!(x > a && x < b) || std::isinf(x)) continue;
        if (model.survival(x) < 1e-250) continue;  // beyond double resolution of F
        const double k = at.marginal(l, x) - at.marginal(l - 1, x);
        worst = std::max(worst, std::abs(k) / table.max_rate());
    }
    out.kkt_residual = worst;
    out.kkt_warning = worst > opt.kkt_tolerance;
    return out;
}

inline FastOptimization fast_optimize_regions(unsigned K, CombiningType combining, const McsTable& table,
                                              double avg_snr, const FastOptimizerOptions& opt = {}) {
    return fast_optimize_regions(FastFadingModel(table, combining, K, avg_snr), opt);
}

}  // namespace harq
