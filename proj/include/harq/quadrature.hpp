#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace harq {

/// Raised when a numerical routine fails to meet its accuracy contract.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

/// Adaptive Gauss-Kronrod over [a, b], split at the given interior
/// breakpoints (kinks of the integrand).
template <class F>
double integrate(F&& f, double a, double b, std::vector<double> breaks = {}, double abs_tol = 1e-10) {
    if (!(b > a)) return 0.0;
    breaks.push_back(a);
    breaks.push_back(b);
    std::sort(breaks.begin(), breaks.end());
    double total = 0.0;
    double lo = a;
    for (double bp : breaks) {
        if (bp <= lo) continue;
        const double hi = std::min(bp, b);
        if (hi <= lo) continue;
        double err = 0.0;
        double l1 = 0.0;
        const double v =
            boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, lo, hi, 15, 1e-12, &err, &l1);
        if (!std::isfinite(v) || (err > abs_tol && err > 1e-9 * l1))
            throw NumericalError("quadrature did not converge on [" + std::to_string(lo) + ", " +
                                 std::to_string(hi) + "], error estimate " + std::to_string(err));
        total += v;
        lo = hi;
        if (lo >= b) break;
    }
    return total;
}

/// Fixed 8-point Gauss-Legendre rule on [a, b].
template <class F>
double gauss_legendre8(F&& f, double a, double b) {
    static constexpr double x[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                    0.9602898564975363};
    static constexpr double w[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                    0.1012285362903763};
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < 4; ++i) s += w[i] * (f(c - h * x[i]) + f(c + h * x[i]));
    return s * h;
}

}  // namespace detail
}  // namespace harq
