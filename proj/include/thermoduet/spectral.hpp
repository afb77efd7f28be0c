// spectral.hpp — Diagonalization of the full Hamiltonian, one-particle
// unitary, thermal initial second moments, and exact moment propagation.
//
// Conventions (fixed once, verified against the homogeneous closed forms):
//   h = Z diag(eigenvalues) Z^T   (columns of Z are eigenvectors)
//   U_t = Z exp(-i diag t) Z^T    (complex symmetric, unitary)
//   S_t = conj(U_t) S_0 U_t       with (S)_ij = <a_i^dag a_j>

#pragma once

#include <vector>

#include "thermoduet/model.hpp"
#include "thermoduet/types.hpp"

namespace thermoduet {

// -------------------------------- spectrum -----------------------------------

struct Spectrum {
    Matrix z;             // orthogonal, eigenvectors in columns
    Vector eigenvalues;   // ascending, paired with columns

    Index dim() const { return eigenvalues.size(); }
};

namespace detail {

inline void gram_schmidt_columns(Matrix& z) {
    for (Index j = 0; j < z.cols(); ++j) {
        for (Index k = 0; k < j; ++k) z.col(j) -= z.col(k).dot(z.col(j)) * z.col(k);
        const double norm = z.col(j).norm();
        if (norm <= 0.0) throw std::runtime_error("eigenvector re-orthogonalization failed");
        z.col(j) /= norm;
    }
}

}  // namespace detail

// Spectral decomposition of a symmetric Hamiltonian matrix with residual
// checks. Degenerate clusters can degrade orthogonality, in which case the
// columns are re-orthogonalized.
inline Spectrum diagonalize(const HamiltonianMatrix& hm) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(hm.h);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("symmetric eigensolver did not converge");
    Spectrum spec{solver.eigenvectors(), solver.eigenvalues()};

    const Index n = spec.dim();
    double ortho = max_abs(Matrix(spec.z.transpose() * spec.z - Matrix::Identity(n, n)));
    if (ortho > 1e-12) {
        detail::gram_schmidt_columns(spec.z);
        ortho = max_abs(Matrix(spec.z.transpose() * spec.z - Matrix::Identity(n, n)));
    }
    if (ortho > 1e-10) throw std::runtime_error("eigenvector basis lost orthogonality");

    const Matrix rebuilt = spec.z * spec.eigenvalues.asDiagonal() * spec.z.transpose();
    if (max_abs(Matrix(rebuilt - hm.h)) > 1e-10 * std::max(1.0, max_abs(hm.h)))
        throw std::runtime_error("spectral reconstruction residual too large");
    return spec;
}

inline Spectrum diagonalize_block(const HamiltonianMatrix& hm, int which) {
    HamiltonianMatrix sub;
    sub.h = hm.block(which);
    sub.n1 = sub.h.rows();
    sub.n2 = 0;
    return diagonalize(sub);
}

// --------------------------- one-particle unitary ----------------------------

inline ComplexVector evolution_phases(const Spectrum& spec, double t) {
    return (-kImag * t * spec.eigenvalues.cast<Complex>().array()).exp();
}

// U_t = Z exp(-i H' t) Z^T.
inline ComplexMatrix one_particle_unitary(const Spectrum& spec, double t) {
    const ComplexVector e = evolution_phases(spec, t);
    return spec.z.cast<Complex>() * e.asDiagonal() * spec.z.transpose().cast<Complex>();
}

// d/dt U_t = Z (-i H' exp(-i H' t)) Z^T.
inline ComplexMatrix one_particle_unitary_derivative(const Spectrum& spec, double t) {
    const ComplexVector e = evolution_phases(spec, t);
    const ComplexVector de =
        (-kImag * spec.eigenvalues.cast<Complex>().array()) * e.array();
    return spec.z.cast<Complex>() * de.asDiagonal() * spec.z.transpose().cast<Complex>();
}

// ------------------------------ second moments -------------------------------

// Matrix of <a_i^dag a_j> expectation values at one time. First moments and
// <a a> moments are identically zero for thermal initial states and are not
// stored.
struct MomentMatrix {
    ComplexMatrix s;
    double t{0.0};

    double trace_real() const { return s.trace().real(); }

    double hermiticity_defect() const { return max_abs(ComplexMatrix(s - s.adjoint())); }

    double min_eigenvalue() const {
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (s + s.adjoint()));
        return es.eigenvalues().minCoeff();
    }

    void check_invariants() const {
        if (hermiticity_defect() > 1e-12 * std::max(1.0, max_abs(s)))
            throw std::runtime_error("moment matrix lost Hermiticity");
        if (min_eigenvalue() < -1e-10 * std::max(1.0, max_abs(s)))
            throw std::runtime_error("moment matrix lost positive semidefiniteness");
    }
};

struct BlockSpectra {
    Spectrum s1;
    Spectrum s2;
};

inline BlockSpectra diagonalize_blocks(const HamiltonianMatrix& hm) {
    return {diagonalize_block(hm, 1), diagonalize_block(hm, 2)};
}

// Thermal initial moments: block x equals P_x diag(n_x(eigenvalues)) P_x^T
// where P_x diagonalizes the uncoupled block Hamiltonian H_x.
inline MomentMatrix thermal_initial_moments(const ModelParams& p, const BlockSpectra& blocks) {
    p.validate();
    const Index n = p.total_modes();
    if (blocks.s1.dim() != p.n1 || blocks.s2.dim() != p.n2)
        throw ConfigError("block spectra do not match the mode counts");

    MomentMatrix m;
    m.t = 0.0;
    m.s.setZero(n, n);
    auto fill_block = [&m](const Spectrum& spec, double beta, Index offset) {
        for (Index k = 0; k < spec.dim(); ++k) {
            if (!(spec.eigenvalues(k) > 0.0))
                throw PhysicsError("thermal state undefined for non-positive mode energy");
        }
        Vector occ(spec.dim());
        for (Index k = 0; k < spec.dim(); ++k)
            occ(k) = bose_occupation(beta, spec.eigenvalues(k));
        const Matrix block = spec.z * occ.asDiagonal() * spec.z.transpose();
        m.s.block(offset, offset, spec.dim(), spec.dim()) = block.cast<Complex>();
    };
    fill_block(blocks.s1, 1.0 / p.temp1, 0);
    fill_block(blocks.s2, 1.0 / p.temp2, p.n1);
    return m;
}

// S_t = conj(U_t) S_0 U_t.
inline MomentMatrix evolve_moments(const MomentMatrix& s0, const ComplexMatrix& u, double t) {
    if (u.rows() != s0.s.rows() || u.cols() != s0.s.cols())
        throw std::invalid_argument("evolve_moments: dimension mismatch");
    MomentMatrix out;
    out.t = t;
    out.s.noalias() = u.conjugate() * s0.s * u;
    return out;
}

// Exact product rule: dS/dt = conj(U_dot) S_0 U + conj(U) S_0 U_dot.
inline ComplexMatrix moment_time_derivative(const MomentMatrix& s0, const Spectrum& spec,
                                            double t) {
    const ComplexMatrix u = one_particle_unitary(spec, t);
    const ComplexMatrix du = one_particle_unitary_derivative(spec, t);
    return du.conjugate() * s0.s * u + u.conjugate() * s0.s * du;
}

// ------------------------------ contractions ---------------------------------

// Expectation value of a one-body operator with coefficient matrix a over the
// moment block s: sum_ij a_ij s_ij. Real for Hermitian a and valid moments.
inline double one_body_expectation(const ComplexMatrix& a, const ComplexMatrix& s) {
    const Complex v = (a.array() * s.array()).sum();
    return v.real();
}

// E_x(t): contraction of the bare block Hamiltonian with the reduced moments.
inline double subsystem_energy(const MomentMatrix& m, const HamiltonianMatrix& hm, int which) {
    const Index off = hm.block_offset(which);
    const Index len = hm.block_size(which);
    const Complex v = (hm.block(which).cast<Complex>().array() *
                       m.s.block(off, off, len, len).array())
                          .sum();
    return v.real();
}

// U_I(t) = 2 Re sum_{i in 1, k in 2} gamma_ik s_ik.
inline double interaction_energy(const MomentMatrix& m, const HamiltonianMatrix& hm) {
    const Complex v = (hm.coupling().cast<Complex>().array() *
                       m.s.block(0, hm.n1, hm.n1, hm.n2).array())
                          .sum();
    return 2.0 * v.real();
}

// <H> = E_1 + E_2 + U_I in one contraction.
inline double total_energy(const MomentMatrix& m, const HamiltonianMatrix& hm) {
    const Complex v = (hm.h.cast<Complex>().array() * m.s.array()).sum();
    return v.real();
}

}  // namespace thermoduet
