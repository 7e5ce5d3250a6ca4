#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "transition.hpp"
#include "types.hpp"

namespace lbdp {

struct SolverConfig {
    double root_tol = 1e-10;      // absolute tolerance on alpha
    int max_iter = 200;
    double bracket_expand = 2.0;
    double alpha_floor = 1e-12;   // below this |alpha| the zero-root convention applies
};

namespace detail {

struct Interval {
    double t, x, y;
};

// Flatten a pooled collection of series into intervals. Intervals whose
// starting count is zero carry no conditional information for the
// Gaussian/saddlepoint likelihoods and can be dropped on request; the
// number of series containing such starts is reported.
inline std::vector<Interval> collect_intervals(std::span<const ObservationSeries> series,
                                               bool drop_zero_start, int* flagged = nullptr) {
    std::vector<Interval> out;
    int nflag = 0;
    for (const auto& s : series) {
        bool has_zero_start = false;
        const auto& x = s.counts();
        for (std::size_t i = 0; i + 1 < x.size(); ++i) {
            if (drop_zero_start && x[i] <= 0.0) {
                has_zero_start = true;
                continue;
            }
            out.push_back(Interval{s.interval(i), x[i], x[i + 1]});
        }
        if (has_zero_start) ++nflag;
    }
    if (flagged) *flagged = nflag;
    return out;
}

// t (y - x e^{w}) / (e^{w} - 1) with w = alpha * t, stable on both
// half-lines and free of overflow for arbitrarily large |w|.
inline double h_term(double alpha, double t, double x, double y) {
    const double w = alpha * t;
    if (w > 0.0) {
        const double ye = y == 0.0 ? 0.0 : y * std::exp(-w);
        return t * (ye - x) / (-std::expm1(-w));
    }
    return t * (y - x * std::exp(w)) / std::expm1(w);
}

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

// ----- Brent root refinement on a sign-changing bracket -----
template <class F>
double brent_root(F&& f, double a, double b, double fa, double fb, double tol, int max_iter) {
    double c = a, fc = fa;
    double d = b - a, e = b - a;
    for (int it = 0; it < max_iter; ++it) {
        if (std::abs(fc) < std::abs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        const double tol1 = 2.0 * std::numeric_limits<double>::epsilon() * std::abs(b) + 0.5 * tol;
        const double xm = 0.5 * (c - b);
        if (std::abs(xm) <= tol1 || fb == 0.0) return b;
        if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
            double p, q;
            const double s = fb / fa;
            if (a == c) {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                const double qq = fa / fc, rr = fb / fc;
                p = s * (2.0 * xm * qq * (qq - rr) - (b - a) * (rr - 1.0));
                q = (qq - 1.0) * (rr - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q;
            p = std::abs(p);
            if (2.0 * p < std::min(3.0 * xm * q - std::abs(tol1 * q), std::abs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += std::abs(d) > tol1 ? d : (xm > 0.0 ? tol1 : -tol1);
        fb = f(b);
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a; fc = fa;
            d = b - a; e = d;
        }
    }
    return b;
}

// ----- golden-section maximization on [a, b] -----
template <class F>
double golden_max(F&& f, double a, double b, double tol) {
    constexpr double inv_phi = 0.6180339887498949;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (std::abs(b - a) > tol) {
        if (f1 < f2) {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    return 0.5 * (a + b);
}

// ----- Nelder-Mead simplex minimization -----
template <class F>
bool nelder_mead(F&& f, std::vector<double>& x, double step, double ftol, double xtol,
                 int max_iter, int* iters_out) {
    const std::size_t n = x.size();
    std::vector<std::vector<double>> v(n + 1, x);
    std::vector<double> fv(n + 1);
    for (std::size_t i = 0; i < n; ++i) v[i + 1][i] += step;
    for (std::size_t i = 0; i <= n; ++i) fv[i] = f(v[i]);

    auto order = [&] {
        std::vector<std::size_t> idx(n + 1);
        std::iota(idx.begin(), idx.end(), std::size_t(0));
        std::sort(idx.begin(), idx.end(),
                  [&](std::size_t p, std::size_t q) { return fv[p] < fv[q]; });
        std::vector<std::vector<double>> v2;
        std::vector<double> f2;
        v2.reserve(n + 1);
        f2.reserve(n + 1);
        for (auto i : idx) {
            v2.push_back(std::move(v[i]));
            f2.push_back(fv[i]);
        }
        v = std::move(v2);
        fv = std::move(f2);
    };

    int it = 0;
    bool ok = false;
    for (; it < max_iter; ++it) {
        order();
        double diam = 0.0;
        for (std::size_t i = 1; i <= n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                diam = std::max(diam, std::abs(v[i][j] - v[0][j]));
        if (std::abs(fv[n] - fv[0]) <= ftol * (1.0 + std::abs(fv[0])) && diam <= xtol) {
            ok = true;
            break;
        }
        std::vector<double> cen(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) cen[j] += v[i][j] / static_cast<double>(n);
        auto blend = [&](double coef) {
            std::vector<double> p(n);
            for (std::size_t j = 0; j < n; ++j) p[j] = cen[j] + coef * (v[n][j] - cen[j]);
            return p;
        };
        auto xr = blend(-1.0);
        const double fr = f(xr);
        if (fr < fv[0]) {
            auto xe = blend(-2.0);
            const double fe = f(xe);
            if (fe < fr) { v[n] = std::move(xe); fv[n] = fe; }
            else { v[n] = std::move(xr); fv[n] = fr; }
        } else if (fr < fv[n - 1]) {
            v[n] = std::move(xr);
            fv[n] = fr;
        } else {
            auto xc = blend(fr < fv[n] ? -0.5 : 0.5);
            const double fc = f(xc);
            if (fc < std::min(fr, fv[n])) {
                v[n] = std::move(xc);
                fv[n] = fc;
            } else {
                for (std::size_t i = 1; i <= n; ++i) {
                    for (std::size_t j = 0; j < n; ++j)
                        v[i][j] = v[0][j] + 0.5 * (v[i][j] - v[0][j]);
                    fv[i] = f(v[i]);
                }
            }
        }
    }
    order();
    x = v[0];
    if (iters_out) *iters_out = it;
    return ok;
}

}  // namespace detail

// ============================================================
// Estimating function h and the moment estimators
// ============================================================

// h(alpha) = sum_i t_i (X_{i+1} - X_i e^{alpha t_i}) / (e^{alpha t_i} - 1),
// pooled over all series.
inline double h_function(double alpha, std::span<const ObservationSeries> series) {
    if (alpha == 0.0) throw InvalidParams("h is undefined at alpha = 0");
    double s = 0.0;
    for (const auto& ser : series) {
        const auto& x = ser.counts();
        for (std::size_t i = 0; i + 1 < x.size(); ++i)
            s += detail::h_term(alpha, ser.interval(i), x[i], x[i + 1]);
    }
    return s;
}

inline double h_function(double alpha, const ObservationSeries& series) {
    return h_function(alpha, std::span<const ObservationSeries>(&series, 1));
}

// Plug-in variance estimate: the average over usable intervals of
//   e^{at}/((e^{at} - 1) X_i) * (X_{i+1} e^{-at} - X_i)^2   at a = alpha_hat,
// i.e. residual^2 over model variance; this is also the sigma2 that
// maximizes the joint Gaussian log-likelihood at fixed alpha. Undefined
// (nullopt) below the alpha floor or with no interval starting from a
// positive count; carries the sign of alpha_hat, as sigma2 itself does.
inline std::optional<double> sigma2_plugin(double alpha_hat,
                                           std::span<const ObservationSeries> series,
                                           double alpha_floor = 1e-12) {
    if (!(std::abs(alpha_hat) >= alpha_floor)) return std::nullopt;
    double acc = 0.0;
    std::size_t used = 0;
    for (const auto& ser : series) {
        const auto& x = ser.counts();
        for (std::size_t i = 0; i + 1 < x.size(); ++i) {
            if (x[i] <= 0.0) continue;
            const double t = ser.interval(i);
            const double w = alpha_hat * t;
            double ratio;  // e^{w} / (e^{w} - 1); negative for w < 0
            if (w > 0.0) ratio = 1.0 / (-std::expm1(-w));
            else ratio = std::exp(w) / std::expm1(w);
            const double bracket = (x[i + 1] == 0.0 ? 0.0 : x[i + 1] * std::exp(-w)) - x[i];
            acc += ratio * bracket * bracket / x[i];
            ++used;
        }
    }
    if (used == 0) return std::nullopt;
    return acc / static_cast<double>(used);
}

inline std::optional<double> sigma2_plugin(double alpha_hat, const ObservationSeries& series,
                                           double alpha_floor = 1e-12) {
    return sigma2_plugin(alpha_hat, std::span<const ObservationSeries>(&series, 1), alpha_floor);
}

// Growth estimator for equidistant observations:
//   alpha_hat = (1/tau) log( sum X_{2..n} / sum X_{1..n-1} ), pooled.
inline EstimateResult gw_estimate(std::span<const ObservationSeries> series,
                                  const SolverConfig& cfg = {}) {
    detail::Timer timer;
    if (series.empty()) throw DegenerateData("no series given");
    const double tau = series.front().interval(0);
    double s_after = 0.0, s_before = 0.0;
    for (const auto& ser : series) {
        const auto& x = ser.counts();
        for (std::size_t i = 0; i + 1 < x.size(); ++i) {
            if (std::abs(ser.interval(i) - tau) > 1e-9 * std::max(1.0, std::abs(tau)))
                throw NotEquidistant("series intervals must share one spacing");
            s_before += x[i];
            s_after += x[i + 1];
        }
    }
    if (s_before <= 0.0 || s_after <= 0.0)
        throw DegenerateData("pooled count sums must be positive");

    EstimateResult r;
    r.method = Method::gw;
    r.alpha_hat = std::log(s_after / s_before) / tau;
    r.sigma2_hat = sigma2_plugin(*r.alpha_hat, series, cfg.alpha_floor);
    r.converged = true;
    r.iterations = 0;
    derive_rates(r);
    r.runtime_seconds = timer.seconds();
    return r;
}

inline EstimateResult gw_estimate(const ObservationSeries& series, const SolverConfig& cfg = {}) {
    return gw_estimate(std::span<const ObservationSeries>(&series, 1), cfg);
}

// Approximate MLE: the root of h on the half-line picked by the sign of
// D = sum(X_{i+1} - X_i); D = 0 takes the zero-root convention directly.
// h diverges to +infinity at 0 on the chosen side, so a sign change is
// bracketed around a data-informed first guess (expanding or shrinking
// geometrically as needed) and refined with Brent's method.
inline EstimateResult approx_mle(std::span<const ObservationSeries> series,
                                 const SolverConfig& cfg = {}) {
    detail::Timer timer;
    if (series.empty()) throw DegenerateData("no series given");

    EstimateResult r;
    r.method = Method::approx_mle;

    const auto iv = detail::collect_intervals(series, false, nullptr);
    double D = 0.0, sum_x = 0.0, sum_y = 0.0, sum_t = 0.0;
    for (const auto& q : iv) {
        D += q.y - q.x;
        sum_x += q.x;
        sum_y += q.y;
        sum_t += q.t;
    }
    const std::size_t n_int = iv.size();

    auto zero_root = [&](const char* why) -> EstimateResult& {
        r.alpha_hat = 0.0;
        r.sigma2_hat = std::nullopt;
        r.converged = true;
        if (why) r.message = why;
        r.runtime_seconds = timer.seconds();
        return r;
    };

    if (D == 0.0) {
        r.iterations = 0;
        return zero_root(nullptr);
    }

    const double side = D > 0.0 ? 1.0 : -1.0;
    int evals = 0;
    auto h = [&](double a) {
        ++evals;
        double s = 0.0;
        for (const auto& q : iv) {
            const double w = a * q.t;
            if (w > 0.0) {
                const double ye = q.y == 0.0 ? 0.0 : q.y * std::exp(-w);
                s += q.t * (ye - q.x) / (-std::expm1(-w));
            } else {
                s += q.t * (q.y - q.x * std::exp(w)) / std::expm1(w);
            }
        }
        return s;
    };

    const double a_floor = side * cfg.alpha_floor;
    const double h_floor = h(a_floor);
    if (!(h_floor > 0.0)) {
        r.iterations = evals;
        return zero_root("root below alpha_floor");
    }

    // first guess: pooled log-ratio over the mean interval (exact for
    // equidistant data)
    const double tbar = sum_t / static_cast<double>(n_int);
    double guess = 0.0;
    if (sum_x > 0.0 && sum_y > 0.0) guess = std::log(sum_y / sum_x) / tbar;
    const double g0 = side * std::clamp(std::abs(guess), 16.0 * cfg.alpha_floor, 1e8);

    double lo = a_floor, h_lo = h_floor;
    double hi = 0.0, h_hi = 0.0;
    const double hg = h(g0);
    bool bracketed = false;
    if (hg == 0.0) {
        lo = hi = g0;
        h_lo = h_hi = 0.0;
        bracketed = true;
    } else if (hg > 0.0) {
        lo = g0;
        h_lo = hg;
        hi = g0 * cfg.bracket_expand;
        for (int k = 0; k < cfg.max_iter; ++k) {
            h_hi = h(hi);
            if (h_hi < 0.0) { bracketed = true; break; }
            if (h_hi == 0.0) { lo = hi; h_lo = 0.0; bracketed = true; break; }
            lo = hi;
            h_lo = h_hi;
            hi *= cfg.bracket_expand;
        }
        if (h_lo == 0.0) { hi = lo; h_hi = 0.0; }
    } else {
        hi = g0;
        h_hi = hg;
        double probe = g0 / cfg.bracket_expand;
        for (int k = 0; k < cfg.max_iter; ++k) {
            if (std::abs(probe) <= cfg.alpha_floor) {
                // the floor end (already known positive) closes the bracket
                bracketed = true;
                break;
            }
            const double hp = h(probe);
            if (hp > 0.0) { lo = probe; h_lo = hp; bracketed = true; break; }
            if (hp == 0.0) { lo = hi = probe; h_lo = h_hi = 0.0; bracketed = true; break; }
            hi = probe;
            h_hi = hp;
            probe /= cfg.bracket_expand;
        }
    }

    if (!bracketed) {
        r.converged = false;
        r.iterations = evals;
        r.message = "no sign change: h has no root on the selected half-line";
        r.runtime_seconds = timer.seconds();
        return r;
    }

    const double root =
        lo == hi ? lo : detail::brent_root(h, lo, hi, h_lo, h_hi, cfg.root_tol, cfg.max_iter);

    r.alpha_hat = root;
    r.sigma2_hat = sigma2_plugin(root, series, cfg.alpha_floor);
    r.converged = true;
    r.iterations = evals;
    derive_rates(r);
    r.runtime_seconds = timer.seconds();
    return r;
}

inline EstimateResult approx_mle(const ObservationSeries& series, const SolverConfig& cfg = {}) {
    return approx_mle(std::span<const ObservationSeries>(&series, 1), cfg);
}

// ============================================================
// Gaussian MLE (profile likelihood)
// ============================================================

// Joint Gaussian log-likelihood of the pooled intervals at (alpha, sigma2);
// intervals starting at zero are skipped.
inline double gaussian_joint_loglik(double alpha, double sigma2,
                                    std::span<const ObservationSeries> series) {
    double L = 0.0;
    for (const auto& ser : series) {
        const auto& x = ser.counts();
        for (std::size_t i = 0; i + 1 < x.size(); ++i) {
            if (x[i] <= 0.0) continue;
            L += gaussian_logpdf(x[i + 1], x[i], GrowthParams{alpha, sigma2}, ser.interval(i));
        }
    }
    return L;
}

inline double gaussian_joint_loglik(double alpha, double sigma2, const ObservationSeries& series) {
    return gaussian_joint_loglik(alpha, sigma2, std::span<const ObservationSeries>(&series, 1));
}

// Gaussian MLE with sigma2 profiled out analytically: maximize
//   l_p(alpha) = -1/2 sum_i log(2 pi s2(alpha) v_i(alpha)) - N/2,
//   s2(alpha) = (1/N) sum_i r_i^2 / v_i,
// where v_i = X_i e^{at}(e^{at} - 1) and r_i = X_{i+1} - X_i e^{at}.
// Each half-line is scanned by geometric expansion from the alpha floor
// and the bracketed peak refined by golden section; the better half-line
// wins. Series containing zero counts before their last entry are
// flagged and those intervals dropped.
inline EstimateResult gaussian_mle(std::span<const ObservationSeries> series,
                                   const SolverConfig& cfg = {}) {
    detail::Timer timer;
    EstimateResult r;
    r.method = Method::gaussian_mle;

    int flagged = 0;
    const auto iv = detail::collect_intervals(series, true, &flagged);
    r.flagged_series = flagged;
    if (iv.empty()) throw DegenerateData("no usable intervals");
    const double N = static_cast<double>(iv.size());

    double t_max = 0.0;
    for (const auto& q : iv) t_max = std::max(t_max, q.t);

    int evals = 0;
    auto profile = [&](double alpha) {
        ++evals;
        double s_rv = 0.0, s_lv = 0.0;
        for (const auto& q : iv) {
            const double w = alpha * q.t;
            const double e = std::exp(w);
            const double em1 = std::expm1(w);
            const double v = q.x * e * em1;  // carries the sign of alpha
            const double res = q.y - q.x * e;
            s_rv += res * res / v;
            s_lv += std::log(std::abs(v));
        }
        const double s2 = s_rv / N;
        if (!(std::abs(s2) > 0.0) || !std::isfinite(s2) || !std::isfinite(s_lv))
            return -std::numeric_limits<double>::infinity();
        constexpr double ln_2pi = 1.8378770664093454836;
        return -0.5 * (N * (ln_2pi + std::log(std::abs(s2))) + s_lv) - 0.5 * N;
    };

    double best_alpha = 0.0;
    double best_val = -std::numeric_limits<double>::infinity();
    bool interior = false;

    for (const double side : {1.0, -1.0}) {
        std::vector<double> as;
        double a = side * cfg.alpha_floor;
        int k_best = -1;
        double f_best = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < 4000; ++k) {
            if (std::abs(a) * t_max > 690.0) break;
            const double fa = profile(a);
            as.push_back(a);
            if (fa > f_best) {
                f_best = fa;
                k_best = k;
            }
            // stop once the peak is clearly behind us
            if (k_best >= 0 && k >= k_best + 3 && std::isfinite(f_best)) break;
            a *= cfg.bracket_expand;
        }
        if (!std::isfinite(f_best) || k_best < 0) continue;
        if (k_best == 0 || k_best + 1 >= static_cast<int>(as.size())) {
            // peak pressed against the floor or the overflow edge
            if (f_best > best_val) {
                best_val = f_best;
                best_alpha = as[static_cast<std::size_t>(k_best)];
                interior = false;
            }
            continue;
        }
        const double lo = as[static_cast<std::size_t>(k_best - 1)];
        const double hi = as[static_cast<std::size_t>(k_best + 1)];
        const double opt = detail::golden_max(profile, std::min(lo, hi), std::max(lo, hi),
                                              std::max(cfg.root_tol, 1e-12));
        const double fopt = profile(opt);
        if (fopt > best_val) {
            best_val = fopt;
            best_alpha = opt;
            interior = true;
        }
    }

    if (!std::isfinite(best_val)) {
        r.converged = false;
        r.iterations = evals;
        r.message = "profile likelihood degenerate on both half-lines";
        r.runtime_seconds = timer.seconds();
        return r;
    }

    r.alpha_hat = best_alpha;
    r.sigma2_hat = sigma2_plugin(best_alpha, series, cfg.alpha_floor);
    r.converged = interior;
    if (!interior) r.message = "profile maximum at the search boundary";
    r.iterations = evals;
    derive_rates(r);
    r.runtime_seconds = timer.seconds();
    return r;
}

inline EstimateResult gaussian_mle(const ObservationSeries& series, const SolverConfig& cfg = {}) {
    return gaussian_mle(std::span<const ObservationSeries>(&series, 1), cfg);
}

// ============================================================
// Saddlepoint MLE
// ============================================================

namespace detail {

// Cumulant generating function of the single-ancestor offspring law,
// K1(s) = log f1(e^s) with f1(z) = (a + (1-a-b) z) / (1 - b z),
// finite for e^s < 1/b.
struct OffspringCgf {
    double a, b, c;  // c = 1 - a - b

    double k(double s) const {
        const double es = std::exp(s);
        return std::log(a + c * es) - std::log1p(-b * es);
    }
    double kp(double s) const {
        const double es = std::exp(s);
        return es * (c / (a + c * es) + b / (1.0 - b * es));
    }
    double kpp(double s) const {
        const double es = std::exp(s);
        const double d1 = a + c * es, d2 = 1.0 - b * es;
        return a * c * es / (d1 * d1) + b * es / (d2 * d2);
    }
};

// Saddlepoint log-density of the count after one interval: solve
// x K1'(s) = y for s, then log f = x K1(s) - s y - log sqrt(2 pi x K1''(s)).
// nullopt when the saddle equation has no solution (y = 0, degenerate
// coefficients) or the curvature is unusable.
inline std::optional<double> saddlepoint_interval_logpdf(const TransitionCoeffs& tc, double x,
                                                         double y) {
    if (!(x > 0.0) || !(y > 0.0) || !(tc.b > 0.0) || !(tc.b < 1.0)) return std::nullopt;
    const OffspringCgf cg{tc.a, tc.b, 1.0 - tc.a - tc.b};
    const double s_sup = -std::log(tc.b);  // open upper end of the domain

    auto g = [&](double s) { return x * cg.kp(s) - y; };

    double lo, hi;
    if (g(0.0) >= 0.0) {
        hi = 0.0;
        lo = -1.0;
        int guard = 0;
        while (g(lo) > 0.0) {
            lo *= 2.0;
            if (++guard > 80) return std::nullopt;
        }
    } else {
        lo = 0.0;
        double gap = s_sup;
        int guard = 0;
        hi = s_sup - 0.5 * gap;
        while (g(hi) < 0.0) {
            gap *= 0.5;
            hi = s_sup - 0.5 * gap;
            if (++guard > 200) return std::nullopt;
        }
    }

    // safeguarded Newton on the monotone saddle equation
    double s = 0.5 * (lo + hi);
    for (int it = 0; it < 100; ++it) {
        const double gs = g(s);
        if (gs > 0.0) hi = s;
        else lo = s;
        if (std::abs(gs) <= 1e-10 * (1.0 + y)) break;
        double snew = s - gs / (x * cg.kpp(s));
        if (!std::isfinite(snew) || snew <= lo || snew >= hi) snew = 0.5 * (lo + hi);
        if (std::abs(snew - s) < 1e-14 * (1.0 + std::abs(s))) {
            s = snew;
            break;
        }
        s = snew;
    }

    const double curv = x * cg.kpp(s);
    if (!(curv > 0.0) || !std::isfinite(curv)) return std::nullopt;
    constexpr double ln_2pi = 1.8378770664093454836;
    const double lf = x * cg.k(s) - s * y - 0.5 * (ln_2pi + std::log(curv));
    if (!std::isfinite(lf)) return std::nullopt;
    return lf;
}

}  // namespace detail

// Saddlepoint MLE over (log lambda, log mu) by derivative-free simplex,
// warm-started from the approximate MLE. Each objective evaluation
// solves one saddle equation per interval; intervals whose saddle point
// cannot be located (a zero target count, degenerate coefficients)
// contribute a fixed penalty during the search and are counted in
// `flagged_series` at the optimum.
inline EstimateResult saddlepoint_mle(std::span<const ObservationSeries> series,
                                      const SolverConfig& cfg = {}) {
    detail::Timer timer;
    EstimateResult r;
    r.method = Method::saddlepoint;

    const auto iv = detail::collect_intervals(series, true, nullptr);
    if (iv.empty()) throw DegenerateData("no usable intervals");

    auto nll = [&](const std::vector<double>& logp) {
        const double lambda = std::exp(logp[0]);
        const double mu = std::exp(logp[1]);
        if (!std::isfinite(lambda) || !std::isfinite(mu) || lambda > 1e8 || mu > 1e8 ||
            lambda + mu <= 0.0)
            return 1e300;
        double acc = 0.0;
        for (const auto& q : iv) {
            const auto tc = coeffs(RateParams(lambda, mu), q.t);
            const auto lf = detail::saddlepoint_interval_logpdf(tc, q.x, q.y);
            if (lf) acc -= *lf;
            else acc += 1e6;  // constant for always-degenerate intervals, steering otherwise
        }
        return acc;
    };

    std::vector<double> start(2);
    EstimateResult boot;
    bool have_boot = false;
    try {
        boot = approx_mle(series, cfg);
        have_boot = boot.converged;
    } catch (const Error&) {
    }
    if (have_boot && boot.lambda_hat && boot.mu_hat) {
        start[0] = std::log(std::max(*boot.lambda_hat, 1e-6));
        start[1] = std::log(std::max(*boot.mu_hat, 1e-6));
    } else if (have_boot && boot.alpha_hat && std::abs(*boot.alpha_hat) > cfg.alpha_floor) {
        const double aa = *boot.alpha_hat;
        const double lam = aa > 0.0 ? 2.0 * aa : -aa;
        const double mu = aa > 0.0 ? aa : -2.0 * aa;
        start[0] = std::log(std::max(lam, 1e-6));
        start[1] = std::log(std::max(mu, 1e-6));
    } else {
        double sum_t = 0.0;
        for (const auto& q : iv) sum_t += q.t;
        const double scale = static_cast<double>(iv.size()) / sum_t;
        start[0] = std::log(0.50 * scale);
        start[1] = std::log(0.25 * scale);
    }

    int iters = 0;
    const bool ok = detail::nelder_mead(nll, start, 0.3, 1e-10, 1e-7, 400, &iters);
    r.iterations = iters;
    r.converged = ok;
    if (!ok) r.message = "simplex did not converge";
    r.lambda_hat = std::exp(start[0]);
    r.mu_hat = std::exp(start[1]);
    r.alpha_hat = *r.lambda_hat - *r.mu_hat;
    if (std::abs(*r.alpha_hat) > cfg.alpha_floor)
        r.sigma2_hat = (*r.lambda_hat + *r.mu_hat) / *r.alpha_hat;

    int skipped = 0;
    for (const auto& q : iv) {
        const auto tc = coeffs(RateParams(*r.lambda_hat, *r.mu_hat), q.t);
        if (!detail::saddlepoint_interval_logpdf(tc, q.x, q.y)) ++skipped;
    }
    r.flagged_series = skipped;
    r.runtime_seconds = timer.seconds();
    return r;
}

inline EstimateResult saddlepoint_mle(const ObservationSeries& series,
                                      const SolverConfig& cfg = {}) {
    return saddlepoint_mle(std::span<const ObservationSeries>(&series, 1), cfg);
}

// ============================================================
// Likelihood decomposition and the normalized estimating function
// ============================================================

struct LikelihoodTerms {
    double l1, l2, l3;
    double sum() const { return l1 + l2 + l3; }
};

// Per-interval decomposition of the alpha-score of the Gaussian
// log-likelihood. l1 is the leading term; l2 and l3 are the remainder,
// which shrinks relative to l1 as counts grow.
inline LikelihoodTerms l_decomposition(double alpha, double sigma2, double x, double x_next,
                                       double t) {
    if (!(x > 0.0)) throw InvalidParams("x must be positive");
    if (!(t > 0.0)) throw InvalidParams("t must be positive");
    if (alpha == 0.0 || sigma2 == 0.0) throw InvalidParams("alpha and sigma2 must be nonzero");
    const double e = std::exp(alpha * t);
    const double em1 = std::expm1(alpha * t);
    const double res = x_next - x * e;
    LikelihoodTerms out{};
    out.l1 = t * res / (sigma2 * em1);
    out.l2 = t * res * res * (2.0 * e - 1.0) / (2.0 * x * sigma2 * e * em1 * em1);
    out.l3 = -0.5 * t - 0.5 * t * e / em1;
    return out;
}

// Normalized estimating function g(alpha) = h(alpha) / (X_1 sum_i t_i e^{a0 T_i})
// with T_i the elapsed time to the left end of interval i; shares its
// roots with h.
inline double g_function(double alpha, double alpha0, const ObservationSeries& series) {
    const auto& times = series.times();
    double norm = 0.0;
    for (std::size_t i = 0; i + 1 < times.size(); ++i)
        norm += series.interval(i) * std::exp(alpha0 * (times[i] - times[0]));
    return h_function(alpha, series) / (series.counts().front() * norm);
}

// Deterministic limit of g along the mean path of a process with growth
// rate alpha0:
//   g*(alpha) = sum_i t_i e^{a0 T_i} (e^{a0 t_i} - e^{a t_i}) / (e^{a t_i} - 1)
//               / sum_i t_i e^{a0 T_i}.
// g*(alpha0) = 0 exactly and g* decreases in alpha.
inline double g_star(double alpha, double alpha0, std::span<const double> times) {
    if (times.size() < 2) throw InvalidParams("need at least two observation times");
    if (alpha == 0.0) throw InvalidParams("g* is undefined at alpha = 0");
    // weights in shifted log space so long schedules cannot overflow
    double max_e = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < times.size(); ++i)
        max_e = std::max(max_e, alpha0 * (times[i] - times[0]));
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i + 1 < times.size(); ++i) {
        const double t = times[i + 1] - times[i];
        const double w = t * std::exp(alpha0 * (times[i] - times[0]) - max_e);
        const double wa = alpha * t;
        // (e^{a0 t} - e^{a t}) / (e^{a t} - 1), stable on both half-lines
        double frac;
        if (wa > 0.0) frac = std::expm1((alpha0 - alpha) * t) / (-std::expm1(-wa));
        else frac = (std::exp(alpha0 * t) - std::exp(wa)) / std::expm1(wa);
        num += w * frac;
        den += w;
    }
    return num / den;
}

// Pseudo-log-likelihood: the Gaussian log-likelihood anchored at alpha0
// plus the closed-form integral of the leading score term l1 between
// alpha0 and alpha. Both growth rates must lie on one half-line.
inline double pseudo_loglik(double alpha, double sigma2, double alpha0,
                            const ObservationSeries& series) {
    if (alpha * alpha0 <= 0.0)
        throw InvalidParams("alpha and alpha0 must be nonzero with equal sign");
    const double anchor = gaussian_joint_loglik(alpha0, sigma2, series);
    const auto& x = series.counts();
    double corr = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        const double t = series.interval(i);
        // log(expm1(a0 t) / expm1(a t)) without overflow for large arguments
        double lr;
        if (alpha > 0.0)
            lr = (alpha0 - alpha) * t + std::log(std::expm1(-alpha0 * t) / std::expm1(-alpha * t));
        else
            lr = std::log(std::expm1(alpha0 * t) / std::expm1(alpha * t));
        corr += (x[i + 1] - x[i]) * std::abs(lr) - x[i + 1] * std::abs(alpha0 - alpha) * t;
    }
    return anchor + corr / sigma2;
}

}  // namespace lbdp
