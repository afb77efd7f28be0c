// quadrature.hpp — Composite Simpson cumulative integrals on uniform grids
// (trapezoid fallback on the final interval when the sample count is even)
// and bounded adaptive repair of windows containing a singular sample.

#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "thermoduet/types.hpp"

namespace thermoduet {

// Cumulative integral I_k = int_{t_0}^{t_k} f dt on a uniform grid, composite
// Simpson over even interval counts, trapezoid closing rule otherwise.
inline std::vector<double> cumulative_simpson(const std::vector<double>& f, double h) {
    std::vector<double> out(f.size(), 0.0);
    for (std::size_t k = 1; k < f.size(); ++k) {
        if (k % 2 == 0)
            out[k] = out[k - 2] + h / 3.0 * (f[k - 2] + 4.0 * f[k - 1] + f[k]);
        else
            out[k] = out[k - 1] + 0.5 * h * (f[k - 1] + f[k]);
    }
    return out;
}

// Integrand evaluation that may fail inside a singular window.
using PartialIntegrand = std::function<std::optional<double>(double)>;

namespace detail {

inline std::optional<double> adaptive_simpson_rec(const PartialIntegrand& f, double a, double b,
                                                  double fa, double fm, double fb, double whole,
                                                  double tol, int depth) {
    const double m = 0.5 * (a + b);
    const auto flo = f(0.5 * (a + m));
    const auto fhi = f(0.5 * (m + b));
    if (!flo || !fhi) return std::nullopt;
    const double left = (m - a) / 6.0 * (fa + 4.0 * *flo + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * *fhi + fb);
    const double err = (left + right - whole) / 15.0;
    if (std::abs(err) <= tol) return left + right + err;
    if (depth <= 0) return std::nullopt;  // tolerance not certified
    auto l = adaptive_simpson_rec(f, a, m, fa, *flo, fm, left, 0.5 * tol, depth - 1);
    if (!l) return std::nullopt;
    auto r = adaptive_simpson_rec(f, m, b, fm, *fhi, fb, right, 0.5 * tol, depth - 1);
    if (!r) return std::nullopt;
    return *l + *r;
}

}  // namespace detail

// Adaptive Simpson that either meets the absolute tolerance or reports
// failure (evaluation hole or depth exhaustion).
inline std::optional<double> adaptive_simpson(const PartialIntegrand& f, double a, double b,
                                              double tol, int max_depth = 18) {
    if (a == b) return 0.0;
    const auto fa = f(a);
    const auto fb = f(b);
    const auto fm = f(0.5 * (a + b));
    if (!fa || !fb || !fm) return std::nullopt;
    const double whole = (b - a) / 6.0 * (*fa + 4.0 * *fm + *fb);
    return detail::adaptive_simpson_rec(f, a, b, *fa, *fm, *fb, whole, tol, max_depth);
}

inline constexpr int kSingularRefineLevels = 12;

namespace detail {

// Sum of geometric shells approaching `edge` from `from`, with a tail
// estimate from the observed decay ratio. Succeeds once the accelerated total
// stabilizes within tol; fails on growth (non-integrable behaviour) or when
// the refinement budget runs out before stabilizing.
inline std::optional<double> shell_integral(const PartialIntegrand& f, double from, double edge,
                                            double tol) {
    double partial = 0.0;
    double prev_piece = std::numeric_limits<double>::infinity();
    double prev_total = std::numeric_limits<double>::infinity();
    double lo = from;
    for (int level = 0; level < kSingularRefineLevels; ++level) {
        const double hi = 0.5 * (lo + edge);
        const auto piece = adaptive_simpson(f, lo, hi, 0.25 * tol, 14);
        if (!piece) return std::nullopt;
        partial += *piece;
        if (level >= 3 && std::abs(*piece) > std::abs(prev_piece)) return std::nullopt;
        double total = partial;
        if (level >= 1 && std::abs(prev_piece) > 0.0) {
            const double r = *piece / prev_piece;
            if (std::abs(r) < 0.95) total += *piece * r / (1.0 - r);
        }
        if (level >= 4 && std::abs(total - prev_total) <= tol) return total;
        prev_total = total;
        prev_piece = *piece;
        lo = hi;
    }
    return std::nullopt;
}

}  // namespace detail

// Integrate f over a window [a, b] that contains a non-evaluable band around
// t_fail (grid sample rejected as singular). The edges of the band are
// located by bisection; each side is then integrated directly when smooth, or
// through geometrically shrinking shells with tail extrapolation when the
// integrand diverges toward the band. Non-integrable behaviour yields
// nullopt: the caller reports a flagged gap.
inline std::optional<double> repair_window(const PartialIntegrand& f, double a, double b,
                                           double t_fail, double tol) {
    if (auto direct = adaptive_simpson(f, a, b, tol, 14)) return direct;

    auto evaluable = [&f](double t) { return f(t).has_value(); };
    if (!evaluable(a) || !evaluable(b)) return std::nullopt;

    double bad = t_fail;
    if (evaluable(bad)) {
        // The failing point moved (or the direct pass failed on tolerance
        // only); probe the window interior for a hole.
        bool found = false;
        for (int k = 1; k < 128 && !found; ++k) {
            const double t = a + (b - a) * k / 128.0;
            if (!evaluable(t)) {
                bad = t;
                found = true;
            }
        }
        if (!found) return std::nullopt;  // no hole: genuine tolerance failure
    }

    auto edge_between = [&](double good, double hole) {
        for (int i = 0; i < 60; ++i) {
            const double m = 0.5 * (good + hole);
            if (evaluable(m)) good = m;
            else hole = m;
        }
        return good;
    };
    const double left_edge = edge_between(a, bad);
    const double right_edge = edge_between(b, bad);

    auto side = [&](double from, double edge) -> std::optional<double> {
        if (auto direct = adaptive_simpson(f, from, edge, 0.5 * tol, 14)) return direct;
        return detail::shell_integral(f, from, edge, 0.5 * tol);
    };
    const auto left = side(a, left_edge);
    if (!left) return std::nullopt;
    // The right side runs downward from b; the signed shell sum is the
    // negative of the forward integral.
    const auto right = side(b, right_edge);
    if (!right) return std::nullopt;
    return *left - *right;
}

}  // namespace thermoduet
