// analytic.hpp — Closed forms for the homogeneous model (equal frequencies and
// couplings within each subsystem) and the dispersive/ultrastrong expansions.
// Serves as the quadrature-free reference the numeric pipeline is checked
// against.

#pragma once

#include <cmath>
#include <optional>

#include "thermoduet/model.hpp"
#include "thermoduet/types.hpp"

namespace thermoduet::analytic {

// -------------------------- derived scalar set -------------------------------

struct HomogeneousDerived {
    Index n1_modes{1}, n2_modes{1};
    double beta1{1.0}, beta2{1.0};
    double eps1{0.0}, eps2{0.0};   // degenerate eigenvalues omega_x - g_x
    double nu1{0.0}, nu2{0.0};     // collective eigenvalues omega_x + (N_x-1) g_x
    double nu{0.0};                // nu1 + nu2
    double delta{0.0};             // nu1 - nu2
    double big_gamma{0.0};         // 2 sqrt(N1 N2) gamma
    double big_omega{0.0};         // sqrt(delta^2 + big_gamma^2)
    double lambda{0.0}, mu{0.0};   // (nu +- big_omega) / 2
    double f_plus{0.0}, f_minus{0.0};
    double n_eps1{0.0}, n_eps2{0.0}, n_nu1{0.0}, n_nu2{0.0};

    static HomogeneousDerived from_params(const ModelParams& p) {
        p.validate();
        HomogeneousDerived d;
        d.n1_modes = p.n1;
        d.n2_modes = p.n2;
        d.beta1 = 1.0 / p.temp1;
        d.beta2 = 1.0 / p.temp2;
        d.eps1 = p.omega1 - p.g1;
        d.eps2 = p.omega2 - p.g2;
        d.nu1 = collective_eigenvalue(p.n1, p.omega1, p.g1);
        d.nu2 = collective_eigenvalue(p.n2, p.omega2, p.g2);
        if (!(d.eps1 > 0.0) || !(d.eps2 > 0.0) || !(d.nu1 > 0.0) || !(d.nu2 > 0.0))
            throw PhysicsError("homogeneous closed forms need positive block eigenvalues");
        d.nu = d.nu1 + d.nu2;
        d.delta = d.nu1 - d.nu2;
        d.big_gamma =
            2.0 * std::sqrt(static_cast<double>(p.n1) * static_cast<double>(p.n2)) * p.gamma;
        d.big_omega = std::hypot(d.delta, d.big_gamma);
        d.lambda = 0.5 * (d.nu + d.big_omega);
        d.mu = 0.5 * (d.nu - d.big_omega);
        const double ratio = d.big_omega > 0.0 ? d.delta / d.big_omega : 0.0;
        d.f_plus = std::sqrt(0.5 * (1.0 + ratio));
        d.f_minus = std::sqrt(0.5 * (1.0 - ratio));
        d.n_eps1 = bose_occupation(d.beta1, d.eps1);
        d.n_eps2 = bose_occupation(d.beta2, d.eps2);
        d.n_nu1 = bose_occupation(d.beta1, d.nu1);
        d.n_nu2 = bose_occupation(d.beta2, d.nu2);
        return d;
    }

    // Same model with the subsystem roles exchanged.
    HomogeneousDerived swapped() const {
        HomogeneousDerived s = *this;
        std::swap(s.n1_modes, s.n2_modes);
        std::swap(s.beta1, s.beta2);
        std::swap(s.eps1, s.eps2);
        std::swap(s.nu1, s.nu2);
        std::swap(s.n_eps1, s.n_eps2);
        std::swap(s.n_nu1, s.n_nu2);
        s.delta = -s.delta;
        s.f_plus = f_minus;
        s.f_minus = f_plus;
        return s;
    }

    double period() const { return 2.0 * M_PI / big_omega; }
};

// ------------------------------ propagator scalars ---------------------------

struct AlphaXi {
    Complex alpha1;
    Complex alpha2;
    Complex xi;
};

inline AlphaXi alpha_xi(const HomogeneousDerived& d, double t) {
    const Complex el = std::exp(-kImag * d.lambda * t);
    const Complex em = std::exp(-kImag * d.mu * t);
    const double fp2 = d.f_plus * d.f_plus;
    const double fm2 = d.f_minus * d.f_minus;
    return {el * fp2 + em * fm2, el * fm2 + em * fp2, d.f_plus * d.f_minus * (el - em)};
}

// |xi(t)|^2 = (Gamma/Omega)^2 sin^2(Omega t / 2); |alpha|^2 = 1 - |xi|^2.
inline double xi_squared(const HomogeneousDerived& d, double t) {
    if (d.big_omega == 0.0) return 0.0;
    const double s = std::sin(0.5 * d.big_omega * t);
    const double r = d.big_gamma / d.big_omega;
    return r * r * s * s;
}

inline double alpha_squared(const HomogeneousDerived& d, double t) {
    return 1.0 - xi_squared(d, t);
}

// ------------------------------ G and B functions ----------------------------

struct GB {
    double g;  // G_1(t); G_2 = -G_1
    double b;  // B(t) <= 0
};

inline GB g_b_functions(const HomogeneousDerived& d, double t) {
    const double u = xi_squared(d, t);
    GB gb;
    gb.g = (d.n_nu2 - d.n_nu1) * u;
    gb.b = u == 0.0 ? 0.0 : -0.5 * u / (1.0 - u);
    return gb;
}

// ------------------------------ energy variations ----------------------------

struct EnergyVariations {
    double de1;     // Delta E_1 = +nu1 G
    double de2;     // Delta E_2 = -nu2 G
    double du1_md;  // nu1 G - B delta [n1(nu1) + G]
    double du2_md;  // -nu2 G + B delta [n2(nu2) - G]
    double du_i;    // interaction-energy variation -(de1 + de2)
};

inline EnergyVariations analytic_energies(const HomogeneousDerived& d, double t) {
    const GB gb = g_b_functions(d, t);
    EnergyVariations ev;
    ev.de1 = d.nu1 * gb.g;
    ev.de2 = -d.nu2 * gb.g;
    ev.du1_md = ev.de1 - gb.b * d.delta * (d.n_nu1 + gb.g);
    ev.du2_md = ev.de2 + gb.b * d.delta * (d.n_nu2 - gb.g);
    ev.du_i = -(ev.de1 + ev.de2);
    return ev;
}

// --------------------------- effective Hamiltonian ---------------------------

// Near-resonance guard for evaluating delta / (2 |alpha|^2): flagged when the
// backward-propagator weight |alpha|^2 = (delta^2 + Gamma^2 cos^2(Omega t/2))
// / Omega^2 drops below threshold. Only reachable deep in the ultrastrong
// regime.
inline bool effective_hamiltonian_singular(const HomogeneousDerived& d, double t) {
    const double c = std::cos(0.5 * d.big_omega * t);
    const double num = d.delta * d.delta + d.big_gamma * d.big_gamma * c * c;
    return num < 1e-6 * d.big_omega * d.big_omega;
}

struct EffectiveHamiltonianCoefficients {
    double eps;         // coefficient of the identity part
    double collective;  // eigenvalue on the collective mode, -Im{alpha_dot/alpha}
};

// K_t^{(x)} = eps_x I + (collective - eps_x) J / N_x. Empty when inside the
// singular guard band.
inline std::optional<EffectiveHamiltonianCoefficients> analytic_effective_hamiltonian(
    const HomogeneousDerived& d, double t, int which) {
    const double eps = which == 1 ? d.eps1 : d.eps2;
    const double sign = which == 1 ? 1.0 : -1.0;
    if (d.delta == 0.0) return EffectiveHamiltonianCoefficients{eps, 0.5 * d.nu};
    if (effective_hamiltonian_singular(d, t)) return std::nullopt;
    const double a2 = alpha_squared(d, t);
    return EffectiveHamiltonianCoefficients{eps, 0.5 * d.nu + sign * 0.5 * d.delta / a2};
}

// --------------------------- md heat and work ---------------------------------

struct HeatWork {
    double dq;
    double dw;
};

// Exact integrals of the minimal-dissipation heat and work integrands for the
// homogeneous case, with u = |xi(t)|^2:
//   dQ_1 = nu1 G - (delta/2)(n2 - n1) [u + ln(1-u)]
//   dW_1 = (delta/2) [ n2 u/(1-u) + (n2 - n1) ln(1-u) ]
// and the role-swapped counterparts for subsystem 2.
inline HeatWork md_heat_work(const HomogeneousDerived& d, double t, int which) {
    if (which == 2) return md_heat_work(d.swapped(), t, 1);
    const double u = xi_squared(d, t);
    const double g = (d.n_nu2 - d.n_nu1) * u;
    if (d.delta == 0.0) return {d.nu1 * g, 0.0};
    const double occ_diff = d.n_nu2 - d.n_nu1;
    const double log1mu = std::log1p(-u);
    HeatWork hw;
    hw.dq = d.nu1 * g - 0.5 * d.delta * occ_diff * xplus_log1m(u);
    hw.dw = 0.5 * d.delta * (d.n_nu2 * u / (1.0 - u) + occ_diff * log1mu);
    return hw;
}

// ------------------------------- expansions ----------------------------------

struct DispersiveExpansion {
    double dq_md;  // nu_x [n_xbar - n_x] (Gamma/delta)^2 sin^2(delta t / 2)
    double b;      // -(Gamma^2 / 2 delta^2) sin^2(Omega t / 2)
};

inline DispersiveExpansion dispersive_expansions(const HomogeneousDerived& d, double t,
                                                 int which) {
    if (which == 2) return dispersive_expansions(d.swapped(), t, 1);
    DispersiveExpansion e{0.0, 0.0};
    if (d.big_gamma == 0.0) return e;
    const double r2 = (d.big_gamma / d.delta) * (d.big_gamma / d.delta);
    const double sd = std::sin(0.5 * d.delta * t);
    const double so = std::sin(0.5 * d.big_omega * t);
    e.dq_md = d.nu1 * (d.n_nu2 - d.n_nu1) * r2 * sd * sd;
    e.b = -0.5 * r2 * so * so;
    return e;
}

// Validity test for the ultrastrong tangent-term expansion: the truncation
// error of tan^2 against the exact u/(1-u) exceeds ~10% once
// Gamma |cos(Omega t/2)| drops below a few |delta|.
inline bool ultrastrong_expansion_valid(const HomogeneousDerived& d, double t) {
    const double c = std::cos(0.5 * d.big_omega * t);
    return std::abs(d.big_gamma * c) >= 5.0 * std::abs(d.delta);
}

struct UltrastrongExpansion {
    double du;  // (nu/2)(n2-n1) sin^2(Gamma t/2) + (delta/2) n2 tan^2(Gamma t/2)
    double dq;  // (n2-n1) [ (nu/2) sin^2(Gamma t/2) - delta ln|cos(Gamma t/2)| ]
    double dw;  // delta (n2-n1) ln|cos(Gamma t/2)| + (delta/2) n2 tan^2(Gamma t/2)
};

// Strong-coupling expansion for subsystem `which`; empty inside the guard band
// around tbar = (2n+1) pi / Gamma. The log terms cancel exactly in du.
inline std::optional<UltrastrongExpansion> ultrastrong_expansions(const HomogeneousDerived& d,
                                                                  double t, int which) {
    if (which == 2) return ultrastrong_expansions(d.swapped(), t, 1);
    if (!ultrastrong_expansion_valid(d, t)) return std::nullopt;
    const double half = 0.5 * d.big_gamma * t;
    const double s2 = std::sin(half) * std::sin(half);
    const double tan2 = std::tan(half) * std::tan(half);
    const double logcos = std::log(std::abs(std::cos(half)));
    const double occ = d.n_nu2 - d.n_nu1;
    UltrastrongExpansion e;
    e.dq = occ * (0.5 * d.nu * s2 - d.delta * logcos);
    e.dw = d.delta * occ * logcos + 0.5 * d.delta * d.n_nu2 * tan2;
    e.du = occ * 0.5 * d.nu * s2 + 0.5 * d.delta * d.n_nu2 * tan2;
    return e;
}

}  // namespace thermoduet::analytic
