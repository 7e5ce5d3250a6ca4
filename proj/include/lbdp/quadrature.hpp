#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "types.hpp"

namespace lbdp {

namespace detail {

// Gauss-Kronrod 7-15 pair on [-1, 1]; positive abscissae, center last.
// Odd indices are the embedded Gauss points.
inline constexpr double gk_node[7] = {
    0.99145537112081263920685469752633,  //
    0.94910791234275852452618968404785,  //
    0.86486442335976907278971278864093,  //
    0.74153118559939443986386477328079,  //
    0.58608723546769113029414483825873,  //
    0.40584515137739716690660641207696,  //
    0.20778495500789846760068940377324,
};

inline constexpr double gk_wk[8] = {
    0.022935322010529224963732008058970,  //
    0.063092092629978553290700663189204,  //
    0.104790010322250183839876322541518,  //
    0.140653259715525918745189590510238,  //
    0.169004726639267902826583426598550,  //
    0.190350578064785409913256402421014,  //
    0.204432940075298892414161999234649,  //
    0.209482141084727828012999174891714,  // center
};

inline constexpr double gk_wg[4] = {
    0.129484966168869693270611432679082,  //
    0.279705391489276667901467771423780,  //
    0.381830050505118944950369775488975,  //
    0.417959183673469387755102040816327,  // center
};

struct PanelResult {
    double value;
    double error;
};

template <class F>
PanelResult gk15_panel(F& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double q15 = gk_wk[7] * fc;
    double q7 = gk_wg[3] * fc;
    for (int i = 0; i < 7; ++i) {
        const double d = h * gk_node[i];
        const double fsum = f(c - d) + f(c + d);
        q15 += gk_wk[i] * fsum;
        if (i % 2 == 1) q7 += gk_wg[i / 2] * fsum;
    }
    return {q15 * h, std::abs(q15 - q7) * std::abs(h)};
}

template <class F>
double adapt_panel(F& f, double a, double b, double tol, int depth) {
    const auto r = gk15_panel(f, a, b);
    if (r.error <= tol || b - a == 0.0) return r.value;
    if (depth <= 0) throw QuadratureFailure("quadrature tolerance unmet after max refinement");
    const double m = 0.5 * (a + b);
    return adapt_panel(f, a, m, 0.5 * tol, depth - 1) +
           adapt_panel(f, m, b, 0.5 * tol, depth - 1);
}

}  // namespace detail

// Adaptive Gauss-Kronrod integral of f over [a, b] (a > b allowed with
// the usual sign flip). The error target is
// max(abs_tol, rel_tol * |first estimate|), split across refinements.
template <class F>
double integrate(F&& f, double a, double b, double rel_tol = 1e-9, double abs_tol = 1e-14,
                 int max_depth = 40) {
    if (a == b) return 0.0;
    if (a > b) return -integrate(f, b, a, rel_tol, abs_tol, max_depth);
    const auto first = detail::gk15_panel(f, a, b);
    const double tol = std::max(abs_tol, rel_tol * std::abs(first.value));
    if (first.error <= tol) return first.value;
    const double m = 0.5 * (a + b);
    return detail::adapt_panel(f, a, m, 0.5 * tol, max_depth) +
           detail::adapt_panel(f, m, b, 0.5 * tol, max_depth);
}

// Running integral of f along sorted points: out[0] = 0 and
// out[i] = integral from points[0] to points[i].
template <class F>
std::vector<double> cumulative_integral(F&& f, std::span<const double> points,
                                        double rel_tol = 1e-9) {
    std::vector<double> out;
    out.reserve(points.size());
    if (points.empty()) return out;
    out.push_back(0.0);
    for (std::size_t i = 1; i < points.size(); ++i)
        out.push_back(out.back() + integrate(f, points[i - 1], points[i], rel_tol));
    return out;
}

}  // namespace lbdp
