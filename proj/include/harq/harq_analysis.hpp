#pragma once

// Analytic HARQ throughput: error cascades f_{k,l}, slow-fading per-SNR and
// averaged throughput, fast-fading region quantities and throughput, and the
// two-round-protocol bound.

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "harq/amc.hpp"
#include "harq/channel.hpp"
#include "harq/coding.hpp"
#include "harq/mi_density.hpp"
#include "harq/quadrature.hpp"
#include "harq/regions.hpp"

namespace harq {

enum class HarqVariant { Plain, PacketDrop, VariableLength };

struct HarqConfig {
    CombiningType combining = CombiningType::IR;
    unsigned max_rounds = 4;  // K
    HarqVariant variant = HarqVariant::Plain;
    std::vector<double> lengths_primary{1.0};  // decreasing, max 1
    std::vector<double> lengths_aux;           // all below min(lengths_primary)
    std::size_t buffer_size = 0;               // VL only; 0 means K * L

    static HarqConfig variable_length_default(unsigned K = 4) {
        HarqConfig c;
        c.combining = CombiningType::IR;
        c.max_rounds = K;
        c.variant = HarqVariant::VariableLength;
        c.lengths_primary = {1.0, 1.0 / 2, 1.0 / 3, 1.0 / 4, 1.0 / 5};
        c.lengths_aux = {1.0 / 8, 1.0 / 12, 1.0 / 16};
        return c;
    }

    void validate() const {
        if (max_rounds < 1) throw std::invalid_argument("HarqConfig: max_rounds must be >= 1");
        if (lengths_primary.empty() || lengths_primary.front() != 1.0)
            throw std::invalid_argument("HarqConfig: lengths_primary must start with 1");
        for (std::size_t i = 1; i < lengths_primary.size(); ++i)
            if (!(lengths_primary[i] < lengths_primary[i - 1] && lengths_primary[i] > 0.0))
                throw std::invalid_argument("HarqConfig: lengths_primary must be strictly decreasing and positive");
        for (double a : lengths_aux)
            if (!(a > 0.0 && a < lengths_primary.back()))
                throw std::invalid_argument("HarqConfig: lengths_aux must lie below min(lengths_primary)");
        if (variant == HarqVariant::VariableLength && combining != CombiningType::IR)
            throw std::invalid_argument("HarqConfig: variable-length HARQ requires IR combining");
    }
};

/// f_0 = 1, f_1, ..., f_K: probabilities of k consecutive decoding errors.
struct ErrorCascade {
    std::vector<double> f;

    std::size_t rounds() const { return f.size() - 1; }
    double operator[](std::size_t k) const { return f.at(k); }
    /// 1 + sum_{k<K} f_k.
    double mean_rounds() const {
        double t = 0.0;
        for (std::size_t k = 0; k + 1 < f.size(); ++k) t += f[k];
        return t;
    }
};

/// Renewal-reward throughput R (1 - f_K) / (1 + sum_{k<K} f_k).
inline double renewal_throughput(double rate, const ErrorCascade& c) {
    return rate * (1.0 - c.f.back()) / c.mean_rounds();
}

// ---------------------------------------------------------------- slow fading

/// f_{k,l}(snr) = PER_l(h^{-1}(k h(snr))) for k = 0..K.
inline ErrorCascade slow_cascade(std::size_t l, double snr, unsigned K, CombiningType combining,
                                 const McsTable& table) {
    table.check_index(l);
    if (snr < 0.0) throw std::domain_error("slow_cascade: snr must be >= 0");
    if (K < 1) throw std::domain_error("slow_cascade: K must be >= 1");
    ErrorCascade c;
    c.f.resize(K + 1);
    c.f[0] = 1.0;
    for (unsigned k = 1; k <= K; ++k) c.f[k] = per(l, aggregate_snr_repeated(snr, k, combining), table);
    return c;
}

inline double slow_throughput_at(std::size_t l, double snr, unsigned K, CombiningType combining,
                                 const McsTable& table) {
    return renewal_throughput(table.rate(l), slow_cascade(l, snr, K, combining, table));
}

/// SNRs at which the k-round aggregate reaches the decoding threshold of l.
inline std::vector<double> slow_kinks(std::size_t l, unsigned K, CombiningType combining, const McsTable& table) {
    std::vector<double> out;
    const double th = table.threshold(l);
    for (unsigned k = 1; k <= K; ++k) {
        if (combining == CombiningType::RR)
            out.push_back(th / k);
        else
            out.push_back(mutual_information_inverse(table.rate(l) / k));
    }
    return out;
}

inline ThroughputEstimate slow_throughput(const DecisionRegions& regions, unsigned K, CombiningType combining,
                                          const McsTable& table, double avg_snr) {
    if (regions.size() != table.size()) throw std::invalid_argument("regions/table size mismatch");
    if (!(avg_snr > 0.0)) throw std::domain_error("avg_snr must be positive");
    double eta = 0.0;
    for (std::size_t l = 0; l < table.size(); ++l) {
        const auto kinks = slow_kinks(l, K, combining, table);
        for (const auto& iv : regions.intervals(l))
            eta += detail::integrate_against_pdf(
                [&](double x) { return slow_throughput_at(l, x, K, combining, table); }, iv, avg_snr, kinks);
    }
    return {eta, 0.0, Provenance::Analytic, 0};
}

// ---------------------------------------------------------------- fast fading

namespace detail {

/// RR: f_{k,l}(x) = E[PER(x + S)], S ~ Erlang(n = k-1, mean scale m), in
/// closed form through regularized incomplete gamma functions.
inline double rr_conditional(double t, double decay, bool threshold_mode, unsigned n, double x, double m) {
    const double c = t - x;
    const double dn = static_cast<double>(n);
    if (threshold_mode) return c > 0.0 ? boost::math::gamma_p(dn, c / m) : 0.0;
    const double b = decay / t;
    const double shrink = 1.0 / (1.0 + b * m);
    const double mgf = std::pow(shrink, dn);
    if (c <= 0.0) return std::exp(-decay * (x - t) / t) * mgf;
    const double tilted = m * shrink;
    const double v = boost::math::gamma_p(dn, c / m) + std::exp(b * c) * mgf * boost::math::gamma_q(dn, c / tilted);
    return std::min(1.0, v);
}

/// g_l(u) = PER_l(I^{-1}(u)) on the MI axis.
inline auto mi_per(std::size_t l, const McsTable& table) {
    const double r = table.rate(l);
    const double t = table.threshold(l);
    const double a = table.decay();
    const bool thr = table.is_threshold_decoding();
    return [r, t, a, thr](double u) {
        if (u < r) return 1.0;
        if (thr) return 0.0;
        return std::exp(-a * (mutual_information_inverse(u) / t - 1.0));
    };
}

// Absolute tolerance of the IR grid-halving check.
inline constexpr double kIrGridTolerance = 1e-6;

}  // namespace detail

/// f_{k,l}(x): probability of k consecutive errors given first-round SNR x,
/// averaged over k-1 further independent exponential SNRs.
inline double fast_cascade_conditional(std::size_t l, double x, unsigned k, CombiningType combining,
                                       const McsTable& table, double avg_snr,
                                       std::size_t grid_points = kDefaultMiGridPoints) {
    table.check_index(l);
    if (k < 1) throw std::domain_error("fast_cascade_conditional: k must be >= 1");
    if (x < 0.0 || !(avg_snr > 0.0)) throw std::domain_error("fast_cascade_conditional: bad snr");
    if (k == 1) return per(l, x, table);
    if (combining == CombiningType::RR)
        return detail::rr_conditional(table.threshold(l), table.decay(), table.is_threshold_decoding(), k - 1, x,
                                      avg_snr);
    const auto g = detail::mi_per(l, table);
    const double w = mutual_information(x);
    const MiSumDensity fine(avg_snr, k - 1, grid_points);
    const MiSumDensity coarse(avg_snr, k - 1, grid_points / 2);
    const double v = fine.expect(k - 1, w, g, table.rate(l));
    const double vc = coarse.expect(k - 1, w, g, table.rate(l));
    if (std::abs(v - vc) > detail::kIrGridTolerance)
        throw NumericalError("fast_cascade_conditional: MI grid not converged (" + std::to_string(v) + " vs " +
                             std::to_string(vc) + ")");
    return std::clamp(v, 0.0, 1.0);
}

/// Region-averaged fast-fading quantities. `joint[l][k]` is p_l f_{k,l}.
struct FastRegionQuantities {
    std::vector<double> probability;
    std::vector<ErrorCascade> cascade;  // all zeros (f_0 = 1) for degenerate regions
    std::vector<double> mean_rounds;    // 1 + sum_{k<K} f_{k,l}
    std::vector<std::vector<double>> joint;
};

/// Everything needed to evaluate fast-fading quantities for arbitrary regions
/// at one (avg_snr, combining, K, table): conditional cascades f_{k,l}(x) and
/// the tail integrals T_{k,l}(x) = int_x^inf pdf(y) f_{k,l}(y) dy.
///
/// Tails are stored as tau = e^{x/avg} T(x), which is bounded and smooth, and
/// interpolated by cubic Hermite using tau' = (tau - f) / avg. This keeps
/// relative accuracy deep in the exponential tail.
class FastFadingModel {
public:
    FastFadingModel(McsTable table, CombiningType combining, unsigned K, double avg_snr,
                    std::size_t grid_points = kDefaultMiGridPoints)
        : table_(std::move(table)), combining_(combining), K_(K), avg_(avg_snr) {
        if (K < 1) throw std::domain_error("FastFadingModel: K must be >= 1");
        if (!(avg_snr > 0.0) || !std::isfinite(avg_snr)) throw std::domain_error("FastFadingModel: bad avg_snr");
        const double th_max = table_.thresholds().back();
        x_max_ = std::max(60.0 * avg_, std::min(600.0 * avg_, 20.0 * th_max));
        if (K_ >= 2 && combining_ == CombiningType::IR) build_ir(grid_points);
        build_nodes();
        build_tails();
    }

    const McsTable& table() const { return table_; }
    CombiningType combining() const { return combining_; }
    unsigned max_rounds() const { return K_; }
    double avg_snr() const { return avg_; }
    double x_max() const { return x_max_; }

    /// Q(x) = P(SNR >= x).
    double survival(double x) const { return std::isinf(x) ? 0.0 : std::exp(-x / avg_); }

    double conditional(unsigned k, std::size_t l, double x) const {
        table_.check_index(l);
        if (k == 0) return 1.0;
        if (k == 1) return per(l, x, table_);
        if (k > K_) throw std::out_of_range("FastFadingModel: k beyond K");
        if (combining_ == CombiningType::RR)
            return detail::rr_conditional(table_.threshold(l), table_.decay(), table_.is_threshold_decoding(), k - 1,
                                          x, avg_);
        const double w = mutual_information(x);
        const auto& F = ir_tables_[l][k - 2];
        const double pos = w / ir_step_;
        if (pos < static_cast<double>(F.size() - 1)) {
            const auto i = static_cast<std::size_t>(pos);
            const double fr = pos - static_cast<double>(i);
            return F[i] + fr * (F[i + 1] - F[i]);
        }
        return std::clamp(ir_density_->expect(k - 1, w, detail::mi_per(l, table_), table_.rate(l)), 0.0, 1.0);
    }

    /// T_{k,l}(x); k = 0 gives Q(x). x may be +inf.
    double tail(unsigned k, std::size_t l, double x) const {
        if (std::isinf(x)) return 0.0;
        if (k == 0) return survival(x);
        if (k == 1) return per_tail_mass(l, x, avg_, table_);
        return std::exp(-x / avg_) * scaled_tail(k, l, x);
    }

    /// e^{x/avg} T_{k,l}(x), for k >= 2.
    double scaled_tail(unsigned k, std::size_t l, double x) const {
        const auto& tau = tau_[l][k - 2];
        const auto& fn = f_nodes_[l][k - 2];
        if (x >= nodes_.back()) return tau.back();
        const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
        const std::size_t i = static_cast<std::size_t>(it - nodes_.begin()) - 1;
        const double x0 = nodes_[i];
        const double x1 = nodes_[i + 1];
        const double hseg = x1 - x0;
        const double s = (x - x0) / hseg;
        const double d0 = (tau[i] - fn[i]) / avg_;
        const double d1 = (tau[i + 1] - fn[i + 1]) / avg_;
        const double s2 = s * s;
        const double s3 = s2 * s;
        return (2 * s3 - 3 * s2 + 1) * tau[i] + (s3 - 2 * s2 + s) * hseg * d0 + (-2 * s3 + 3 * s2) * tau[i + 1] +
               (s3 - s2) * hseg * d1;
    }

    FastRegionQuantities quantities(const DecisionRegions& regions) const {
        if (regions.size() != table_.size()) throw std::invalid_argument("regions/table size mismatch");
        const std::size_t L = table_.size();
        FastRegionQuantities q;
        q.probability.assign(L, 0.0);
        q.cascade.resize(L);
        q.mean_rounds.assign(L, 1.0);
        q.joint.assign(L, std::vector<double>(K_ + 1, 0.0));
        for (std::size_t l = 0; l < L; ++l) {
            for (const auto& iv : regions.intervals(l))
                for (unsigned k = 0; k <= K_; ++k) q.joint[l][k] += tail(k, l, iv.lo) - tail(k, l, iv.hi);
            for (unsigned k = 1; k <= K_; ++k)
                q.joint[l][k] = std::clamp(q.joint[l][k], 0.0, q.joint[l][k - 1]);
            const double p = q.joint[l][0];
            q.probability[l] = p;
            auto& c = q.cascade[l].f;
            c.assign(K_ + 1, 0.0);
            c[0] = 1.0;
            if (p > 0.0)
                for (unsigned k = 1; k <= K_; ++k) c[k] = std::min(c[k - 1], q.joint[l][k] / p);
            q.mean_rounds[l] = q.cascade[l].mean_rounds();
        }
        return q;
    }

private:
    void build_ir(std::size_t grid_points) {
        ir_density_ = std::make_shared<MiSumDensity>(avg_, K_ - 1, grid_points);
        const MiSumDensity& dens = *ir_density_;
        ir_step_ = dens.step();
        const double h = ir_step_;
        const std::size_t n_w = static_cast<std::size_t>(std::ceil(mutual_information(x_max_) / h)) + 2;
        const std::size_t j_max = dens.density(K_ - 1).size() - 1;
        const std::size_t m_len = n_w + j_max + 1;
        const std::size_t fft_n = detail::next_pow2(m_len + j_max + 1);
        Eigen::FFT<double> fft;

        // Spectra of the reversed densities (the j = 0 term is handled apart).
        std::vector<std::vector<std::complex<double>>> p_spec(K_ - 1);
        for (unsigned m = 1; m < K_; ++m) {
            const auto& p = dens.density(m);
            const std::size_t J = p.size() - 1;
            std::vector<double> r(fft_n, 0.0);
            for (std::size_t j = 1; j <= J; ++j) r[J - j] = p[j];
            fft.fwd(p_spec[m - 1], r);
        }

        ir_tables_.assign(table_.size(), {});
        for (std::size_t l = 0; l < table_.size(); ++l) {
            const auto g = detail::mi_per(l, table_);
            const double knee = table_.rate(l);
            std::vector<double> A(m_len, 0.0), B(m_len, 0.0);
            for (std::size_t m = 0; m < m_len; ++m) {
                const double a = static_cast<double>(m) * h;
                if (a > knee && g(a) < 1e-300) break;
                std::tie(A[m], B[m]) = detail::hat_moments(g, knee, a, h);
            }
            std::vector<double> H(fft_n, 0.0);
            for (std::size_t m = 0; m < m_len; ++m) H[m] = A[m] + (m > 0 ? B[m - 1] : 0.0);
            std::vector<std::complex<double>> h_spec;
            fft.fwd(h_spec, H);
            for (unsigned m = 1; m < K_; ++m) {
                const auto& p = dens.density(m);
                const std::size_t J = p.size() - 1;
                std::vector<std::complex<double>> prod(fft_n);
                for (std::size_t i = 0; i < fft_n; ++i) prod[i] = p_spec[m - 1][i] * h_spec[i];
                std::vector<double> corr;
                fft.inv(corr, prod);
                std::vector<double> F(n_w + 1);
                for (std::size_t i = 0; i <= n_w; ++i)
                    F[i] = std::clamp(p[0] * A[i] + corr[i + J], 0.0, 1.0);
                ir_tables_[l].push_back(std::move(F));
            }
        }
        check_ir_grid(grid_points);
    }

    // Grid-halving check of the tabulated cascades at the decoding thresholds.
    void check_ir_grid(std::size_t grid_points) const {
        const MiSumDensity coarse(avg_, K_ - 1, grid_points / 2);
        for (std::size_t l = 0; l < table_.size(); ++l) {
            const auto g = detail::mi_per(l, table_);
            for (double x : {0.5 * table_.threshold(l), table_.threshold(l), 2.0 * table_.threshold(l)}) {
                if (x > x_max_) continue;
                for (unsigned k = 2; k <= K_; ++k) {
                    const double fine = conditional(k, l, x);
                    const double c = coarse.expect(k - 1, mutual_information(x), g, table_.rate(l));
                    if (std::abs(fine - c) > detail::kIrGridTolerance)
                        throw NumericalError("FastFadingModel: MI grid not converged at avg_snr " +
                                             std::to_string(avg_) + " (" + std::to_string(fine) + " vs " +
                                             std::to_string(c) + ")");
                }
            }
        }
    }

    void build_nodes() {
        std::vector<double> xs{0.0, x_max_};
        const double x0 = 1e-6 * std::min(avg_, table_.threshold(0));
        for (double x = x0; x < x_max_; x *= 1.02) xs.push_back(x);
        const double du = 0.25 * avg_;
        for (double x = du; x < x_max_; x += du) xs.push_back(x);
        for (double t : table_.thresholds())
            if (t < x_max_) xs.push_back(t);
        std::sort(xs.begin(), xs.end());
        nodes_.clear();
        for (double x : xs)
            if (nodes_.empty() || x > nodes_.back() * (1.0 + 1e-12) + 1e-300) nodes_.push_back(x);
    }

    void build_tails() {
        const std::size_t L = table_.size();
        tau_.assign(L, {});
        f_nodes_.assign(L, {});
        if (K_ < 2) return;
        const std::size_t n = nodes_.size();
        for (std::size_t l = 0; l < L; ++l) {
            for (unsigned k = 2; k <= K_; ++k) {
                std::vector<double> fv(n), tau(n);
                for (std::size_t i = 0; i < n; ++i) fv[i] = conditional(k, l, nodes_[i]);
                tau[n - 1] = fv[n - 1];
                for (std::size_t i = n - 1; i-- > 0;) {
                    const double x0 = nodes_[i];
                    const double seg = detail::gauss_legendre8(
                        [&](double y) { return std::exp(-(y - x0) / avg_) * conditional(k, l, y) / avg_; }, x0,
                        nodes_[i + 1]);
                    tau[i] = seg + std::exp(-(nodes_[i + 1] - x0) / avg_) * tau[i + 1];
                }
                tau_[l].push_back(std::move(tau));
                f_nodes_[l].push_back(std::move(fv));
            }
        }
    }

    McsTable table_;
    CombiningType combining_;
    unsigned K_;
    double avg_;
    double x_max_ = 0.0;
    std::vector<double> nodes_;
    std::vector<std::vector<std::vector<double>>> tau_;      // [l][k-2][node]
    std::vector<std::vector<std::vector<double>>> f_nodes_;  // [l][k-2][node]
    std::shared_ptr<const MiSumDensity> ir_density_;
    double ir_step_ = 0.0;
    std::vector<std::vector<std::vector<double>>> ir_tables_;  // [l][k-2][w index]
};

inline FastRegionQuantities fast_region_quantities(const DecisionRegions& regions, unsigned K,
                                                   CombiningType combining, const McsTable& table,
                                                   double avg_snr) {
    return FastFadingModel(table, combining, K, avg_snr).quantities(regions);
}

/// sum_l R_l (1 - f_{K,l}) p_l / sum_l Tbar_{K,l} p_l.
inline double fast_throughput_from(const FastRegionQuantities& q, const McsTable& table) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t l = 0; l < table.size(); ++l) {
        const auto& j = q.joint[l];
        num += table.rate(l) * (j.front() - j.back());
        for (std::size_t k = 0; k + 1 < j.size(); ++k) den += j[k];
    }
    return den > 0.0 ? num / den : 0.0;
}

inline ThroughputEstimate fast_throughput(const FastFadingModel& model, const DecisionRegions& regions) {
    return {fast_throughput_from(model.quantities(regions), model.table()), 0.0, Provenance::Analytic, 0};
}

inline ThroughputEstimate fast_throughput(const DecisionRegions& regions, unsigned K, CombiningType combining,
                                          const McsTable& table, double avg_snr) {
    return fast_throughput(FastFadingModel(table, combining, K, avg_snr), regions);
}

/// Closed-form p_l and p_l f_{1,l} per region.
struct FirstRoundStats {
    std::vector<double> probability;
    std::vector<double> joint_error;  // p_l f_{1,l}
};

inline FirstRoundStats first_round_stats(const DecisionRegions& regions, const McsTable& table, double avg_snr) {
    if (regions.size() != table.size()) throw std::invalid_argument("regions/table size mismatch");
    if (!(avg_snr > 0.0)) throw std::domain_error("avg_snr must be positive");
    FirstRoundStats s;
    s.probability.assign(table.size(), 0.0);
    s.joint_error.assign(table.size(), 0.0);
    for (std::size_t l = 0; l < table.size(); ++l) {
        for (const auto& iv : regions.intervals(l)) {
            s.probability[l] += detail::interval_probability(iv, avg_snr);
            const double hi = std::isinf(iv.hi) ? 0.0 : per_tail_mass(l, iv.hi, avg_snr, table);
            s.joint_error[l] += per_tail_mass(l, iv.lo, avg_snr, table) - hi;
        }
    }
    return s;
}

/// Throughput of the two-round protocol: sum R_l p_l / (1 + fbar_1).
inline double two_round_bound(const DecisionRegions& regions, const McsTable& table, double avg_snr) {
    const auto s = first_round_stats(regions, table, avg_snr);
    double num = 0.0;
    double fbar = 0.0;
    for (std::size_t l = 0; l < table.size(); ++l) {
        num += table.rate(l) * s.probability[l];
        fbar += s.joint_error[l];
    }
    return num / (1.0 + fbar);
}

/// P(R_l | first-round NACK) for each l.
inline std::vector<double> nack_posterior(const DecisionRegions& regions, const McsTable& table, double avg_snr) {
    const auto s = first_round_stats(regions, table, avg_snr);
    const double total = std::accumulate(s.joint_error.begin(), s.joint_error.end(), 0.0);
    std::vector<double> post(table.size(), 0.0);
    if (total > 0.0)
        for (std::size_t l = 0; l < table.size(); ++l) post[l] = s.joint_error[l] / total;
    return post;
}

}  // namespace harq
