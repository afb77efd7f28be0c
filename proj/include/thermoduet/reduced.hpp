// reduced.hpp — Reduced first-moment propagator of one subsystem, its
// time-local generator L_t = Phi_dot Phi^{-1}, the renormalized Hamiltonian
// K_t = (L^dag - L)/(2i), and the exact chain-rule rate K_dot.

#pragma once

#include "thermoduet/spectral.hpp"
#include "thermoduet/types.hpp"

namespace thermoduet {

struct BlockLayout {
    Index n1{0};
    Index n2{0};
    Index offset(int which) const { return which == 1 ? 0 : n1; }
    Index size(int which) const { return which == 1 ? n1 : n2; }
};

inline BlockLayout layout_of(const HamiltonianMatrix& hm) { return {hm.n1, hm.n2}; }

inline constexpr double kDefaultKappaMax = 1e12;

namespace detail {

// Block rows of Z for one subsystem.
inline Matrix block_rows(const Spectrum& spec, const BlockLayout& lay, int which) {
    return spec.z.middleRows(lay.offset(which), lay.size(which));
}

// Z_x diag(w) Z_x^T for a complex weight vector w.
inline ComplexMatrix block_sandwich(const Matrix& zx, const ComplexVector& w) {
    ComplexMatrix scaled = zx.cast<Complex>() * w.asDiagonal();
    ComplexMatrix out;
    out.noalias() = scaled * zx.transpose().cast<Complex>();
    return out;
}

// Higham-style 1-norm estimate of A^{-1} given an LU factorization of A^T.
inline double inverse_onenorm_estimate(const Eigen::PartialPivLU<ComplexMatrix>& lu_of_at) {
    const Index n = lu_of_at.rows();
    ComplexVector x = ComplexVector::Constant(n, Complex(1.0 / static_cast<double>(n), 0.0));
    double est = 0.0;
    for (int iter = 0; iter < 4; ++iter) {
        const ComplexVector y = lu_of_at.transpose().solve(x);  // A^{-1} x
        est = y.lpNorm<1>();
        if (!std::isfinite(est)) return std::numeric_limits<double>::infinity();
        ComplexVector xi(n);
        for (Index i = 0; i < n; ++i) {
            const double m = std::abs(y(i));
            xi(i) = m > 0.0 ? y(i) / m : Complex(1.0, 0.0);
        }
        const ComplexVector z = lu_of_at.solve(xi.conjugate()).conjugate();  // A^{-H} xi
        Index j = 0;
        double zmax = 0.0;
        for (Index i = 0; i < n; ++i) {
            if (std::abs(z(i)) > zmax) {
                zmax = std::abs(z(i));
                j = i;
            }
        }
        if (zmax <= std::real(z.dot(x)) + 1e-14) break;
        x.setZero();
        x(j) = 1.0;
    }
    return est;
}

}  // namespace detail

// Phi_t: diagonal block of U_t for the chosen subsystem; Phi_0 = I.
inline ComplexMatrix reduced_propagator(const Spectrum& spec, const BlockLayout& lay, double t,
                                        int which) {
    return detail::block_sandwich(detail::block_rows(spec, lay, which),
                                  evolution_phases(spec, t));
}

inline ComplexMatrix reduced_propagator_derivative(const Spectrum& spec, const BlockLayout& lay,
                                                   double t, int which) {
    ComplexVector w = evolution_phases(spec, t);
    w.array() *= -kImag * spec.eigenvalues.cast<Complex>().array();
    return detail::block_sandwich(detail::block_rows(spec, lay, which), w);
}

inline ComplexMatrix reduced_propagator_second_derivative(const Spectrum& spec,
                                                          const BlockLayout& lay, double t,
                                                          int which) {
    ComplexVector w = evolution_phases(spec, t);
    w.array() *= -spec.eigenvalues.cast<Complex>().array().square();
    return detail::block_sandwich(detail::block_rows(spec, lay, which), w);
}

struct GeneratorResult {
    ComplexMatrix l;
    double condition{1.0};
};

// L_t = Phi_dot Phi^{-1} via linear solves on the LU factorization of Phi^T.
// Throws SingularPropagator once the 1-norm condition estimate exceeds
// kappa_max, before NaNs can propagate downstream.
inline GeneratorResult generator(const Spectrum& spec, const BlockLayout& lay, double t,
                                 int which, double kappa_max = kDefaultKappaMax) {
    const ComplexMatrix phi = reduced_propagator(spec, lay, t, which);
    const ComplexMatrix phi_dot = reduced_propagator_derivative(spec, lay, t, which);
    Eigen::PartialPivLU<ComplexMatrix> lu(phi.transpose());
    const double kappa =
        phi.cwiseAbs().colwise().sum().maxCoeff() * detail::inverse_onenorm_estimate(lu);
    if (!(kappa <= kappa_max)) throw SingularPropagator(t, kappa);
    GeneratorResult out;
    out.l = lu.solve(phi_dot.transpose()).transpose();
    out.condition = kappa;
    return out;
}

// K_t = (L^dag - L) / (2i), Hermitian by construction.
inline ComplexMatrix effective_hamiltonian(const ComplexMatrix& l) {
    return (l.adjoint() - l) / (2.0 * kImag);
}

// Everything the thermodynamics needs about one subsystem at one time.
struct EffectiveGenerator {
    int which{1};
    double t{0.0};
    ComplexMatrix phi;
    ComplexMatrix l;
    ComplexMatrix k;
    ComplexMatrix k_dot;
    double condition{1.0};
};

// Exact chain rule: L_dot = U_ddot_block Phi^{-1} - L^2, then
// K_dot = (L_dot^dag - L_dot)/(2i). No finite differences involved.
inline EffectiveGenerator evaluate_effective_generator(const Spectrum& spec,
                                                       const BlockLayout& lay, double t,
                                                       int which,
                                                       double kappa_max = kDefaultKappaMax) {
    EffectiveGenerator eg;
    eg.which = which;
    eg.t = t;
    eg.phi = reduced_propagator(spec, lay, t, which);
    const ComplexMatrix phi_dot = reduced_propagator_derivative(spec, lay, t, which);
    const ComplexMatrix phi_ddot = reduced_propagator_second_derivative(spec, lay, t, which);

    Eigen::PartialPivLU<ComplexMatrix> lu(eg.phi.transpose());
    eg.condition = eg.phi.cwiseAbs().colwise().sum().maxCoeff() *
                   detail::inverse_onenorm_estimate(lu);
    if (!(eg.condition <= kappa_max)) throw SingularPropagator(t, eg.condition);

    eg.l = lu.solve(phi_dot.transpose()).transpose();
    ComplexMatrix l_dot = lu.solve(phi_ddot.transpose()).transpose();
    l_dot.noalias() -= eg.l * eg.l;
    eg.k = effective_hamiltonian(eg.l);
    eg.k_dot = effective_hamiltonian(l_dot);
    return eg;
}

inline ComplexMatrix effective_hamiltonian_rate(const Spectrum& spec, const BlockLayout& lay,
                                                double t, int which,
                                                double kappa_max = kDefaultKappaMax) {
    return evaluate_effective_generator(spec, lay, t, which, kappa_max).k_dot;
}

}  // namespace thermoduet
