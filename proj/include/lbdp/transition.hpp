#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "types.hpp"

namespace lbdp {

// ============================================================
// Transition law of the linear birth-death process
// ============================================================
//
// Over an interval of length t the offspring distribution of a single
// individual is characterized by two coefficients a(t), b(t) in [0, 1):
// extinction mass a, and a geometric tail with ratio b. The n-ancestor
// transition probabilities follow by convolution and admit three
// equivalent evaluation paths (a double binomial sum, an all-positive
// rearrangement of it, and a terminating Gauss hypergeometric series).

struct TransitionCoeffs {
    double a = 0.0;  // extinction weight
    double b = 0.0;  // geometric ratio
    double t = 0.0;  // interval length
};

// a(t) = mu (e^{alpha t} - 1) / (lambda e^{alpha t} - mu), b = (lambda/mu) a,
// with the critical limit a = b = lambda t / (1 + lambda t) and the
// pure-birth limit a = 0, b = 1 - e^{-lambda t}.
inline TransitionCoeffs coeffs(const RateParams& p, double t) {
    if (!(t >= 0.0) || !std::isfinite(t))
        throw InvalidParams("interval length must be nonnegative and finite");
    if (t == 0.0) return TransitionCoeffs{0.0, 0.0, 0.0};

    const double lambda = p.lambda, mu = p.mu;
    if (mu == 0.0)
        return TransitionCoeffs{0.0, -std::expm1(-lambda * t), t};
    if (lambda == 0.0)
        return TransitionCoeffs{-std::expm1(-mu * t), 0.0, t};

    const double x = (lambda - mu) * t;
    double a;
    if (std::abs(x) < 1e-9) {
        // second-order series around the critical point, exact at x = 0
        const double s = 1.0 + 0.5 * x;
        a = mu * t * s / (1.0 + lambda * t * s);
    } else if (x > 0.0) {
        a = mu * (-std::expm1(-x)) / (lambda - mu * std::exp(-x));
    } else {
        a = mu * std::expm1(x) / (lambda * std::exp(x) - mu);
    }
    // at extreme horizons the exact values approach 1 from below but
    // round to 1; saturate just under it to keep the open interval
    const double top = std::nextafter(1.0, 0.0);
    return TransitionCoeffs{std::min(a, top), std::min((lambda / mu) * a, top), t};
}

namespace detail {

// log k!, memoized per thread; entries computed independently via
// lgamma so no error accumulates across the table.
inline double log_factorial(std::int64_t k) {
    thread_local std::vector<double> table{0.0, 0.0};
    if (k < 0) return -std::numeric_limits<double>::infinity();
    while (static_cast<std::size_t>(k) >= table.size())
        table.push_back(std::lgamma(static_cast<double>(table.size()) + 1.0));
    return table[static_cast<std::size_t>(k)];
}

inline double log_choose(std::int64_t n, std::int64_t k) {
    if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
    return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

// k * log(v) with the convention 0 * log(0) = 0
inline double pow_log(std::int64_t k, double logv) {
    return k == 0 ? 0.0 : static_cast<double>(k) * logv;
}

inline double neg_inf() { return -std::numeric_limits<double>::infinity(); }

inline double safe_log(double v) { return v > 0.0 ? std::log(v) : neg_inf(); }

inline void check_transition_args(std::int64_t n, std::int64_t m, const TransitionCoeffs& c) {
    if (n < 1) throw InvalidParams("transition needs n >= 1 ancestors");
    if (m < 0) throw InvalidParams("transition target must be nonnegative");
    if (!(c.a >= 0.0 && c.a < 1.0) || !(c.b >= 0.0 && c.b < 1.0))
        throw InvalidParams("transition coefficients must lie in [0, 1)");
}

}  // namespace detail

// Double binomial sum over the number j of ancestors with exactly one
// surviving line:
//   P_nm = sum_j C(n,j) C(n+m-j-1, n-1) a^{n-j} b^{m-j} (1-a-b)^j.
// Valid while 1 - a - b >= 0 (short-to-moderate intervals); tiny negative
// values from rounding are clamped, anything beyond is a domain error.
inline double log_transition_keiding(std::int64_t n, std::int64_t m, const TransitionCoeffs& c) {
    detail::check_transition_args(n, m, c);
    double w = 1.0 - c.a - c.b;
    if (w < -1e-14)
        throw DomainError("1 - a - b is negative: sum has mixed signs, use the alternative form");
    if (w < 0.0) w = 0.0;

    const double la = detail::safe_log(c.a);
    if (m == 0) return detail::pow_log(n, la);
    const double lb = detail::safe_log(c.b);
    const double lw = detail::safe_log(w);

    const std::int64_t jmax = std::min(n, m);
    double peak = detail::neg_inf();
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(jmax) + 1);
    for (std::int64_t j = 0; j <= jmax; ++j) {
        const double lt = detail::log_choose(n, j) + detail::log_choose(n + m - j - 1, n - 1) +
                          detail::pow_log(n - j, la) + detail::pow_log(m - j, lb) +
                          detail::pow_log(j, lw);
        terms.push_back(lt);
        peak = std::max(peak, lt);
    }
    if (peak == detail::neg_inf()) return peak;
    double acc = 0.0;
    for (double lt : terms) acc += std::exp(lt - peak);
    return peak + std::log(acc);
}

// Rearranged sum over the number j of surviving ancestral lines:
//   P_nm = sum_{j>=1} C(m-1, j-1) C(n, j) a^{n-j} b^{m-j} [(1-a)(1-b)]^j.
// Every summand is nonnegative for all valid coefficients, so this form
// has no cancellation and works for arbitrarily long intervals.
inline double log_transition_alternative(std::int64_t n, std::int64_t m, const TransitionCoeffs& c) {
    detail::check_transition_args(n, m, c);
    const double la = detail::safe_log(c.a);
    if (m == 0) return detail::pow_log(n, la);

    const double lb = detail::safe_log(c.b);
    const double lsurv = std::log1p(-c.a) + std::log1p(-c.b);
    const std::int64_t jmax = std::min(n, m);
    double peak = detail::neg_inf();
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(jmax));
    for (std::int64_t j = 1; j <= jmax; ++j) {
        const double lt = detail::log_choose(m - 1, j - 1) + detail::log_choose(n, j) +
                          detail::pow_log(n - j, la) + detail::pow_log(m - j, lb) +
                          static_cast<double>(j) * lsurv;
        terms.push_back(lt);
        peak = std::max(peak, lt);
    }
    if (peak == detail::neg_inf()) return peak;
    double acc = 0.0;
    for (double lt : terms) acc += std::exp(lt - peak);
    return peak + std::log(acc);
}

// Terminating hypergeometric series
//   P_nm = a^n b^m C(n+m-1, m) 2F1(-m, -n; 1-n-m; z),  z = (a+b-1)/(ab),
// expanded termwise in log space. For 1-a-b >= 0 the argument is
// nonpositive and every term of the series is positive; otherwise the
// terms alternate and the evaluation falls back to the alternative form
// when cancellation or overflow would spoil it.
inline double log_transition_2f1(std::int64_t n, std::int64_t m, const TransitionCoeffs& c) {
    detail::check_transition_args(n, m, c);
    if (m == 0) return detail::pow_log(n, detail::safe_log(c.a));
    if (c.a <= 0.0 || c.b <= 0.0)
        return log_transition_alternative(n, m, c);  // z undefined at the boundary

    const double z = (c.a + c.b - 1.0) / (c.a * c.b);
    const double lz = detail::safe_log(std::abs(z));
    const double term_sign = z > 0.0 ? -1.0 : 1.0;  // sign of (-z)^k

    const double pref = static_cast<double>(n) * std::log(c.a) +
                        static_cast<double>(m) * std::log(c.b) +
                        detail::log_choose(n + m - 1, m);
    const std::int64_t kmax = std::min(n, m);
    const double base = detail::log_factorial(m) + detail::log_factorial(n) -
                        detail::log_factorial(n + m - 1);
    double peak = detail::neg_inf();
    std::vector<double> mags;
    mags.reserve(static_cast<std::size_t>(kmax) + 1);
    for (std::int64_t k = 0; k <= kmax; ++k) {
        const double lmag = base + detail::log_factorial(n + m - 1 - k) -
                            detail::log_factorial(m - k) - detail::log_factorial(n - k) -
                            detail::log_factorial(k) + detail::pow_log(k, lz);
        mags.push_back(lmag);
        peak = std::max(peak, lmag);
    }
    if (!std::isfinite(peak) || !std::isfinite(pref))
        return log_transition_alternative(n, m, c);
    double acc = 0.0, sign = 1.0;
    for (double lmag : mags) {
        acc += sign * std::exp(lmag - peak);
        sign *= term_sign;
    }
    if (!(acc > 1e-6))  // cancellation wiped the sum (all-positive sums have acc >= 1)
        return log_transition_alternative(n, m, c);
    return pref + peak + std::log(acc);
}

// Gaussian transition approximation:
//   X(t) | X(0)=x  ~  N(x e^{alpha t}, sigma2 x e^{alpha t}(e^{alpha t}-1)).
// sigma2 shares the sign of alpha, so the variance is positive on both
// half-lines; alpha = 0 (or any nonpositive variance) is rejected.
inline double gaussian_logpdf(double x_next, double x, const GrowthParams& g, double t) {
    if (!(x > 0.0)) throw InvalidParams("conditioning count must be positive");
    if (!(t > 0.0)) throw InvalidParams("interval length must be positive");
    const double e = std::exp(g.alpha * t);
    const double var = g.sigma2 * x * e * std::expm1(g.alpha * t);
    if (!(var > 0.0) || !std::isfinite(var))
        throw DegenerateVariance("transition variance must be positive");
    const double r = x_next - x * e;
    constexpr double ln_2pi = 1.8378770664093454836;
    return -0.5 * (ln_2pi + std::log(var)) - r * r / (2.0 * var);
}

}  // namespace lbdp
