// thermo.hpp — (Delta U, delta Q, delta W) time series for both subsystems
// under the four definition sets, plus net cross-bipartition balances.

#pragma once

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include "thermoduet/quadrature.hpp"
#include "thermoduet/reduced.hpp"
#include "thermoduet/spectral.hpp"
#include "thermoduet/types.hpp"

namespace thermoduet {

enum class Approach : int { wc = 0, interaction = 1, bare = 2, md = 3 };
inline constexpr std::array<Approach, 4> kApproaches{Approach::wc, Approach::interaction,
                                                     Approach::bare, Approach::md};

inline const char* to_string(Approach a) {
    switch (a) {
        case Approach::wc: return "wc";
        case Approach::interaction: return "int";
        case Approach::bare: return "bare";
        default: return "md";
    }
}

// One (du, dq, dw) triple on the grid. `ok` marks samples that exist; only the
// md approach ever produces gaps.
struct ApproachSeries {
    std::vector<double> du, dq, dw;
    std::vector<char> ok;

    void resize_all_ok(std::size_t n) {
        du.assign(n, 0.0);
        dq.assign(n, 0.0);
        dw.assign(n, 0.0);
        ok.assign(n, 1);
    }
};

// ------------------------- endpoint-difference sets --------------------------

// Weak coupling: dU = dQ = E_x(t) - E_x(0), dW = 0.
inline ApproachSeries weak_coupling_quantities(const std::vector<double>& e_x) {
    ApproachSeries s;
    s.resize_all_ok(e_x.size());
    for (std::size_t k = 0; k < e_x.size(); ++k) {
        s.du[k] = e_x[k] - e_x[0];
        s.dq[k] = s.du[k];
    }
    return s;
}

// Interaction approach: dU = dQ = -(E_xbar(t) - E_xbar(0)), dW = 0.
inline ApproachSeries interaction_approach(const std::vector<double>& e_xbar) {
    ApproachSeries s;
    s.resize_all_ok(e_xbar.size());
    for (std::size_t k = 0; k < e_xbar.size(); ++k) {
        s.du[k] = e_xbar[0] - e_xbar[k];
        s.dq[k] = s.du[k];
    }
    return s;
}

// Bare approach: dU = E_x(t) - E_x(0), dQ = -(E_xbar(t) - E_xbar(0)),
// dW = -Delta U_I(t) (identical for both subsystems).
inline ApproachSeries bare_approach(const std::vector<double>& e_x,
                                    const std::vector<double>& e_xbar,
                                    const std::vector<double>& u_i) {
    ApproachSeries s;
    s.resize_all_ok(e_x.size());
    for (std::size_t k = 0; k < e_x.size(); ++k) {
        s.du[k] = e_x[k] - e_x[0];
        s.dq[k] = e_xbar[0] - e_xbar[k];
        s.dw[k] = -(u_i[k] - u_i[0]);
    }
    return s;
}

// ----------------------------- minimal dissipation ---------------------------

// Scalar md data at one time: the endpoint value Tr{K_t S_t^{(x)}} and the two
// integrands Tr{K_t dS/dt} and Tr{dK/dt S_t}.
struct MdPoint {
    double tr_ks{0.0};
    double q_integrand{0.0};
    double w_integrand{0.0};
};

using MdEvaluator = std::function<std::optional<MdPoint>(double)>;

struct MdGridData {
    std::vector<double> tr_ks;
    std::vector<double> q_integrand;
    std::vector<double> w_integrand;
    std::vector<char> ok;
};

// Cumulative md quantities on a uniform grid. dU is endpoint-wise; dQ and dW
// are composite-Simpson cumulative integrals. Missing samples (singular
// propagator) trigger bounded adaptive repair of the surrounding window via
// `eval`; an unrecoverable window leaves the remainder of the series flagged.
inline ApproachSeries minimal_dissipation_quantities(const MdGridData& data,
                                                     const std::vector<double>& grid,
                                                     const MdEvaluator& eval,
                                                     double tol_quad_abs) {
    const std::size_t n = grid.size();
    ApproachSeries s;
    s.resize_all_ok(n);
    if (n == 0) return s;
    if (!data.ok.empty() && !data.ok[0])
        throw std::invalid_argument("md series cannot start on a singular sample");
    const double h = n > 1 ? grid[1] - grid[0] : 0.0;

    for (std::size_t k = 0; k < n; ++k)
        s.du[k] = data.ok[k] ? data.tr_ks[k] - data.tr_ks[0] : 0.0;

    auto q_at = [&eval](double t) -> std::optional<double> {
        const auto p = eval(t);
        if (!p) return std::nullopt;
        return p->q_integrand;
    };
    auto w_at = [&eval](double t) -> std::optional<double> {
        const auto p = eval(t);
        if (!p) return std::nullopt;
        return p->w_integrand;
    };

    std::size_t anchor = 0;  // last index where the Simpson pairing restarts
    std::size_t k = 1;
    while (k < n) {
        if (data.ok[k]) {
            if ((k - anchor) % 2 == 0) {
                s.dq[k] = s.dq[k - 2] +
                          h / 3.0 * (data.q_integrand[k - 2] + 4.0 * data.q_integrand[k - 1] +
                                     data.q_integrand[k]);
                s.dw[k] = s.dw[k - 2] +
                          h / 3.0 * (data.w_integrand[k - 2] + 4.0 * data.w_integrand[k - 1] +
                                     data.w_integrand[k]);
            } else {
                s.dq[k] = s.dq[k - 1] + 0.5 * h * (data.q_integrand[k - 1] + data.q_integrand[k]);
                s.dw[k] = s.dw[k - 1] + 0.5 * h * (data.w_integrand[k - 1] + data.w_integrand[k]);
            }
            ++k;
            continue;
        }
        // Singular window: [k-1, j] with j the next evaluable sample.
        std::size_t j = k + 1;
        while (j < n && !data.ok[j]) ++j;
        const std::size_t left = k - 1;
        std::optional<double> wq, ww;
        if (j < n && eval) {
            double iscale = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                if (data.ok[i])
                    iscale = std::max({iscale, std::abs(data.q_integrand[i]),
                                       std::abs(data.w_integrand[i])});
            // Floor against tolerances below the reachable roundoff level.
            const double tol = std::max(tol_quad_abs, 1e-13 * (1.0 + iscale) * (grid[j] - grid[left]));
            wq = repair_window(q_at, grid[left], grid[j], grid[k], tol);
            if (wq) ww = repair_window(w_at, grid[left], grid[j], grid[k], tol);
        }
        if (!wq || !ww) {
            for (std::size_t i = k; i < n; ++i) s.ok[i] = 0;
            return s;
        }
        for (std::size_t i = k; i < j; ++i) s.ok[i] = 0;
        s.dq[j] = s.dq[left] + *wq;
        s.dw[j] = s.dw[left] + *ww;
        anchor = j;
        k = j + 1;
    }
    return s;
}

// Matrix-level form of the md quantities: traces are taken here. Intended for
// desk-scale runs and tests; trajectory-scale runs feed precomputed scalars.
inline ApproachSeries minimal_dissipation_quantities(const std::vector<ComplexMatrix>& k_series,
                                                     const std::vector<ComplexMatrix>& k_dot_series,
                                                     const std::vector<ComplexMatrix>& s_series,
                                                     const std::vector<ComplexMatrix>& s_dot_series,
                                                     const std::vector<double>& grid,
                                                     const MdEvaluator& eval = nullptr,
                                                     double tol_quad_abs = 1e-10) {
    MdGridData data;
    const std::size_t n = grid.size();
    data.tr_ks.resize(n);
    data.q_integrand.resize(n);
    data.w_integrand.resize(n);
    data.ok.assign(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        data.tr_ks[i] = one_body_expectation(k_series[i], s_series[i]);
        data.q_integrand[i] = one_body_expectation(k_series[i], s_dot_series[i]);
        data.w_integrand[i] = one_body_expectation(k_dot_series[i], s_series[i]);
    }
    return minimal_dissipation_quantities(data, grid, eval, tol_quad_abs);
}

// ------------------------------- net balances --------------------------------

struct BalanceSeries {
    std::vector<double> du, dq, dw;
    std::vector<char> ok;
};

inline BalanceSeries net_balance(const ApproachSeries& s1, const ApproachSeries& s2) {
    const std::size_t n = s1.du.size();
    BalanceSeries b;
    b.du.assign(n, 0.0);
    b.dq.assign(n, 0.0);
    b.dw.assign(n, 0.0);
    b.ok.assign(n, 1);
    for (std::size_t k = 0; k < n; ++k) {
        b.ok[k] = s1.ok[k] && s2.ok[k];
        if (!b.ok[k]) continue;
        b.du[k] = s1.du[k] + s2.du[k];
        b.dq[k] = s1.dq[k] + s2.dq[k];
        b.dw[k] = s1.dw[k] + s2.dw[k];
    }
    return b;
}

// ------------------------------ trajectory bundle ----------------------------

struct ThermoTrajectory {
    std::vector<double> t;          // physical times (inverse-energy units)
    double omega1{1.0};             // time axis is emitted as t * omega1
    std::vector<double> e1, e2;     // bare subsystem energies
    std::vector<double> u_i;        // interaction-energy variation Delta U_I(t)
    std::array<std::array<ApproachSeries, 4>, 2> series;  // [subsystem-1][approach]
    std::array<BalanceSeries, 4> balances;
    std::array<std::vector<double>, 2> k_trace;  // Tr K_t (empty unless requested)
    std::array<std::vector<double>, 2> k_eps;    // identity coefficient of K_t
    std::array<std::vector<double>, 2> k_coll;   // collective-mode eigenvalue of K_t
    std::array<double, 2> tol_quad_abs{0.0, 0.0};
    int gap_count{0};

    const ApproachSeries& at(int subsystem, Approach a) const {
        return series[subsystem - 1][static_cast<int>(a)];
    }
    ApproachSeries& at(int subsystem, Approach a) {
        return series[subsystem - 1][static_cast<int>(a)];
    }
    const BalanceSeries& balance(Approach a) const { return balances[static_cast<int>(a)]; }
};

inline void fill_net_balances(ThermoTrajectory& tr) {
    for (Approach a : kApproaches)
        tr.balances[static_cast<int>(a)] = net_balance(tr.at(1, a), tr.at(2, a));
}

}  // namespace thermoduet
