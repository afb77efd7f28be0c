// model.hpp — Physical parameters, Hamiltonian matrix assembly, frequency
// sampling for the distributed case, and parameter-regime classification.

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "thermoduet/types.hpp"

namespace thermoduet {

// ------------------------------- parameters ---------------------------------

struct ModelParams {
    Index n1{1};           // modes in subsystem 1
    Index n2{1};           // modes in subsystem 2
    double omega1{1.0};    // central frequency of subsystem 1 (hbar = 1)
    double omega2{1.0};    // central frequency of subsystem 2
    double g1{0.0};        // intra-subsystem coupling, subsystem 1
    double g2{0.0};        // intra-subsystem coupling, subsystem 2
    double gamma{0.0};     // inter-subsystem coupling
    double temp1{1.0};     // initial temperature of subsystem 1 (k_B = 1)
    double temp2{1.0};     // initial temperature of subsystem 2
    double sigma{0.0};     // relative frequency spread (0 = homogeneous)
    std::uint64_t seed{1}; // RNG seed for frequency sampling

    Index total_modes() const { return n1 + n2; }

    void validate() const {
        if (n1 < 1 || n2 < 1) throw ConfigError("mode counts must satisfy n1 >= 1, n2 >= 1");
        if (!(omega1 > 0.0) || !(omega2 > 0.0))
            throw ConfigError("central frequencies must be positive");
        if (!(temp1 > 0.0) || !(temp2 > 0.0)) throw ConfigError("temperatures must be positive");
        if (!(sigma >= 0.0)) throw ConfigError("sigma must be non-negative");
    }
};

// --------------------------- Hamiltonian matrix ------------------------------

// Real symmetric matrix with block layout (H1, G; G^T, H2).
struct HamiltonianMatrix {
    Matrix h;
    Index n1{0};
    Index n2{0};

    Index dim() const { return n1 + n2; }

    Eigen::Block<const Matrix> block1() const { return h.block(0, 0, n1, n1); }
    Eigen::Block<const Matrix> block2() const { return h.block(n1, n1, n2, n2); }
    Eigen::Block<const Matrix> coupling() const { return h.block(0, n1, n1, n2); }
    Eigen::Block<const Matrix> block(int which) const {
        return which == 1 ? block1() : block2();
    }
    Index block_offset(int which) const { return which == 1 ? 0 : n1; }
    Index block_size(int which) const { return which == 1 ? n1 : n2; }
};

// ------------------------------ regime report --------------------------------

enum class CouplingRegime { dispersive, intermediate, ultrastrong };
enum class Collectivity { non_collective, intermediate, collective };

inline const char* to_string(CouplingRegime r) {
    switch (r) {
        case CouplingRegime::dispersive: return "dispersive";
        case CouplingRegime::ultrastrong: return "ultrastrong";
        default: return "intermediate";
    }
}

inline const char* to_string(Collectivity c) {
    switch (c) {
        case Collectivity::non_collective: return "non-collective";
        case Collectivity::collective: return "collective";
        default: return "intermediate";
    }
}

// Thresholds on |delta|/Gamma for the coupling-regime labels, and on
// N_x g_x / omega_x for the collectivity labels.
inline constexpr double kRatioDispersive = 10.0;
inline constexpr double kRatioUltrastrong = 0.1;

struct RegimeReport {
    double nu1{0.0};        // collective eigenvalue, subsystem 1
    double nu2{0.0};        // collective eigenvalue, subsystem 2
    double delta{0.0};      // effective detuning nu1 - nu2
    double big_gamma{0.0};  // effective coupling 2 sqrt(N1 N2) gamma
    double big_omega{0.0};  // sqrt(delta^2 + big_gamma^2)
    CouplingRegime coupling_regime{CouplingRegime::intermediate};
    Collectivity collectivity1{Collectivity::intermediate};
    Collectivity collectivity2{Collectivity::intermediate};
    bool nominal{false};    // true when sigma > 0 (central frequencies used)
};

// ------------------------------- operations ----------------------------------

namespace detail {

// Deterministic standard-normal stream: explicit Box-Muller on mt19937_64.
// std::normal_distribution is implementation-defined, which would break
// byte-identical reproducibility of sampled scenarios.
class NormalStream {
  public:
    explicit NormalStream(std::uint64_t seed) : gen_(seed) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform01();  // in (0, 1]
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double phi = 2.0 * M_PI * u2;
        spare_ = r * std::sin(phi);
        have_spare_ = true;
        return r * std::cos(phi);
    }

  private:
    double uniform01() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;  // in [0, 1)
    }

    std::mt19937_64 gen_;
    double spare_{0.0};
    bool have_spare_{false};
};

}  // namespace detail

inline constexpr int kFrequencyRedrawCap = 1000;

// Draw the n1+n2 mode frequencies: block x ~ Normal(omega_x, sigma*omega_x),
// non-positive draws rejected and redrawn (cap per mode). sigma = 0 returns
// the central values exactly and consumes no randomness.
inline std::vector<double> sample_frequencies(const ModelParams& p) {
    p.validate();
    std::vector<double> freqs;
    freqs.reserve(static_cast<std::size_t>(p.total_modes()));
    if (p.sigma == 0.0) {
        freqs.insert(freqs.end(), static_cast<std::size_t>(p.n1), p.omega1);
        freqs.insert(freqs.end(), static_cast<std::size_t>(p.n2), p.omega2);
        return freqs;
    }
    detail::NormalStream normals(p.seed);
    auto draw_block = [&](Index count, double center, int subsystem) {
        const double width = p.sigma * center;
        for (Index i = 0; i < count; ++i) {
            double value = 0.0;
            int tries = 0;
            do {
                if (++tries > kFrequencyRedrawCap) {
                    throw PhysicsError("frequency sampling for subsystem " +
                                       std::to_string(subsystem) +
                                       " exceeded the redraw cap (sigma too large)");
                }
                value = center + width * normals.next();
            } while (!(value > 0.0));
            freqs.push_back(value);
        }
    };
    draw_block(p.n1, p.omega1, 1);
    draw_block(p.n2, p.omega2, 2);
    return freqs;
}

// Assemble the full Hamiltonian matrix: sampled frequencies on the diagonal,
// g_x on within-block off-diagonals, gamma on every cross-block entry.
// Symmetric by construction.
inline HamiltonianMatrix build_hamiltonian(const ModelParams& p,
                                           const std::vector<double>& freqs) {
    p.validate();
    const Index n = p.total_modes();
    if (static_cast<Index>(freqs.size()) != n)
        throw ConfigError("frequency list length does not match n1 + n2");
    for (double f : freqs)
        if (!(f > 0.0)) throw ConfigError("mode frequencies must be positive");

    HamiltonianMatrix hm;
    hm.n1 = p.n1;
    hm.n2 = p.n2;
    hm.h.setZero(n, n);
    for (Index i = 0; i < p.n1; ++i)
        for (Index j = 0; j < p.n1; ++j) hm.h(i, j) = (i == j) ? freqs[i] : p.g1;
    for (Index i = p.n1; i < n; ++i)
        for (Index j = p.n1; j < n; ++j) hm.h(i, j) = (i == j) ? freqs[i] : p.g2;
    for (Index i = 0; i < p.n1; ++i)
        for (Index k = p.n1; k < n; ++k) {
            hm.h(i, k) = p.gamma;
            hm.h(k, i) = p.gamma;
        }
    return hm;
}

inline HamiltonianMatrix build_hamiltonian(const ModelParams& p) {
    return build_hamiltonian(p, sample_frequencies(p));
}

// Collective eigenvalue of a homogeneous subsystem block.
inline double collective_eigenvalue(Index n, double omega, double g) {
    return omega + static_cast<double>(n - 1) * g;
}

inline Collectivity classify_collectivity(double ratio) {
    if (ratio >= kRatioDispersive) return Collectivity::collective;
    if (ratio <= kRatioUltrastrong) return Collectivity::non_collective;
    return Collectivity::intermediate;
}

// Regime classification from the homogeneous formulas. For sigma > 0 the
// central frequencies are used and the report is flagged nominal.
inline RegimeReport classify_regime(const ModelParams& p) {
    p.validate();
    RegimeReport r;
    r.nu1 = collective_eigenvalue(p.n1, p.omega1, p.g1);
    r.nu2 = collective_eigenvalue(p.n2, p.omega2, p.g2);
    r.delta = r.nu1 - r.nu2;
    r.big_gamma = 2.0 * std::sqrt(static_cast<double>(p.n1) * static_cast<double>(p.n2)) * p.gamma;
    r.big_omega = std::hypot(r.delta, r.big_gamma);
    if (r.big_gamma == 0.0) {
        r.coupling_regime = CouplingRegime::dispersive;
    } else {
        const double ratio = std::abs(r.delta) / r.big_gamma;
        if (ratio >= kRatioDispersive) r.coupling_regime = CouplingRegime::dispersive;
        else if (ratio <= kRatioUltrastrong) r.coupling_regime = CouplingRegime::ultrastrong;
        else r.coupling_regime = CouplingRegime::intermediate;
    }
    r.collectivity1 = classify_collectivity(static_cast<double>(p.n1) * p.g1 / p.omega1);
    r.collectivity2 = classify_collectivity(static_cast<double>(p.n2) * p.g2 / p.omega2);
    r.nominal = p.sigma > 0.0;
    return r;
}

}  // namespace thermoduet
