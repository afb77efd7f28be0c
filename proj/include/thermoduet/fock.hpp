// fock.hpp — Brute-force verification in a truncated Fock basis: exact quantum
// evolution of tiny instances (n1+n2 <= 3 modes), bypassing all Gaussian
// machinery. Matrix exponentials go through the spectral decomposition of the
// (small) Hermitian Fock Hamiltonian.

#pragma once

#include <vector>

#include "thermoduet/model.hpp"
#include "thermoduet/spectral.hpp"
#include "thermoduet/types.hpp"

namespace thermoduet::fock {

inline constexpr double kTailTarget = 1e-8;
inline constexpr Index kDimensionCap = 10000;

// Thermal weight beyond occupation n_max for a mode with mean occupation nbar.
inline double thermal_tail_weight(double nbar, int n_max) {
    return std::pow(nbar / (nbar + 1.0), n_max + 1);
}

// Smallest truncation putting the hottest mode's tail below the target. The
// hottest mode is judged by the normal-mode energies of each uncoupled block.
inline int auto_truncation(const HamiltonianMatrix& hm, double temp1, double temp2) {
    const BlockSpectra blocks = diagonalize_blocks(hm);
    double hottest = 0.0;
    auto scan = [&hottest](const Spectrum& s, double temp) {
        for (Index k = 0; k < s.dim(); ++k) {
            if (!(s.eigenvalues(k) > 0.0))
                throw PhysicsError("thermal state undefined for non-positive mode energy");
            hottest = std::max(hottest, bose_occupation(1.0 / temp, s.eigenvalues(k)));
        }
    };
    scan(blocks.s1, temp1);
    scan(blocks.s2, temp2);
    int n_max = 1;
    while (thermal_tail_weight(hottest, n_max) >= kTailTarget && n_max < 4000) ++n_max;
    return n_max;
}

struct FockConfig {
    HamiltonianMatrix h;
    double temp1{1.0};
    double temp2{1.0};
    int n_max{0};  // <= 0 requests automatic truncation

    int resolved_n_max() const { return n_max > 0 ? n_max : auto_truncation(h, temp1, temp2); }

    double tail_weight() const {
        const BlockSpectra blocks = diagonalize_blocks(h);
        double hottest = 0.0;
        for (Index k = 0; k < blocks.s1.dim(); ++k)
            hottest = std::max(hottest, bose_occupation(1.0 / temp1, blocks.s1.eigenvalues(k)));
        for (Index k = 0; k < blocks.s2.dim(); ++k)
            hottest = std::max(hottest, bose_occupation(1.0 / temp2, blocks.s2.eigenvalues(k)));
        return thermal_tail_weight(hottest, resolved_n_max());
    }
};

// ------------------------------ occupation basis -----------------------------

struct FockSpace {
    Index modes{1};
    int n_max{1};
    Index dim{1};
    std::vector<Index> stride;

    FockSpace(Index modes_, int n_max_) : modes(modes_), n_max(n_max_) {
        stride.assign(static_cast<std::size_t>(modes), 1);
        dim = 1;
        for (Index m = modes - 1; m >= 0; --m) {
            stride[static_cast<std::size_t>(m)] = dim;
            dim *= n_max + 1;
            if (dim > kDimensionCap)
                throw ConfigError("truncated Fock space exceeds the dimension cap");
        }
    }

    int occupation(Index state, Index mode) const {
        return static_cast<int>((state / stride[static_cast<std::size_t>(mode)]) % (n_max + 1));
    }
};

// Annihilation operator of one mode as a dense real matrix.
inline Matrix annihilation(const FockSpace& space, Index mode) {
    Matrix a = Matrix::Zero(space.dim, space.dim);
    for (Index s = 0; s < space.dim; ++s) {
        const int n = space.occupation(s, mode);
        if (n > 0) a(s - space.stride[static_cast<std::size_t>(mode)], s) = std::sqrt(double(n));
    }
    return a;
}

// H = sum_ij h_ij a_i^dag a_j realized with truncated ladder operators.
inline Matrix build_fock_hamiltonian(const FockSpace& space, const Matrix& h) {
    if (h.rows() != space.modes) throw ConfigError("mode count mismatch in Fock Hamiltonian");
    std::vector<Matrix> a;
    a.reserve(static_cast<std::size_t>(space.modes));
    for (Index m = 0; m < space.modes; ++m) a.push_back(annihilation(space, m));
    Matrix out = Matrix::Zero(space.dim, space.dim);
    for (Index i = 0; i < space.modes; ++i)
        for (Index j = 0; j < space.modes; ++j)
            if (h(i, j) != 0.0)
                out.noalias() += h(i, j) * a[static_cast<std::size_t>(i)].transpose() *
                                 a[static_cast<std::size_t>(j)];
    return out;
}

inline Matrix total_number_operator(const FockSpace& space) {
    Matrix n = Matrix::Zero(space.dim, space.dim);
    for (Index s = 0; s < space.dim; ++s) {
        int total = 0;
        for (Index m = 0; m < space.modes; ++m) total += space.occupation(s, m);
        n(s, s) = total;
    }
    return n;
}

// Renormalized truncated Gibbs state exp(-beta H)/Z via spectral decomposition.
inline Matrix thermal_density(const Matrix& h_fock, double beta) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(h_fock);
    if (es.info() != Eigen::Success) throw std::runtime_error("Fock eigensolver failed");
    Vector w = (-beta * (es.eigenvalues().array() - es.eigenvalues().minCoeff())).exp();
    w /= w.sum();
    return es.eigenvectors() * w.asDiagonal() * es.eigenvectors().transpose();
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// ------------------------------- measurements --------------------------------

struct FockMeasurement {
    ComplexMatrix occupations;  // <a_i^dag a_j>
    double max_anomalous{0.0};  // max |<a_i a_j>|
    double total_number{0.0};
};

class FockSimulator {
  public:
    explicit FockSimulator(const FockConfig& cfg)
        : n_max_(cfg.resolved_n_max()), space_(cfg.h.dim(), n_max_) {
        const Matrix h_fock = build_fock_hamiltonian(space_, cfg.h.h);
        Eigen::SelfAdjointEigenSolver<Matrix> es(h_fock);
        if (es.info() != Eigen::Success) throw std::runtime_error("Fock eigensolver failed");
        evecs_ = es.eigenvectors();
        evals_ = es.eigenvalues();

        // Product of renormalized truncated Gibbs states of the two blocks.
        const FockSpace s1(cfg.h.n1, n_max_);
        const FockSpace s2(cfg.h.n2, n_max_);
        const Matrix rho1 =
            thermal_density(build_fock_hamiltonian(s1, cfg.h.block1()), 1.0 / cfg.temp1);
        const Matrix rho2 =
            thermal_density(build_fock_hamiltonian(s2, cfg.h.block2()), 1.0 / cfg.temp2);
        rho0_eig_ = evecs_.transpose() * kron(rho1, rho2) * evecs_;

        for (Index m = 0; m < space_.modes; ++m) ladders_.push_back(annihilation(space_, m));
        number_ = total_number_operator(space_);
    }

    int n_max() const { return n_max_; }
    const FockSpace& space() const { return space_; }

    FockMeasurement measure(double t) const {
        const Index d = space_.dim;
        ComplexMatrix rho_t(d, d);
        {
            ComplexMatrix rot = rho0_eig_.cast<Complex>();
            for (Index a = 0; a < d; ++a)
                for (Index b = 0; b < d; ++b)
                    rot(a, b) *= std::exp(-kImag * (evals_(a) - evals_(b)) * t);
            rho_t.noalias() = evecs_.cast<Complex>() * rot * evecs_.transpose().cast<Complex>();
        }
        FockMeasurement out;
        const Index modes = space_.modes;
        out.occupations.resize(modes, modes);
        auto trace_with = [&rho_t](const Matrix& op) {
            return (rho_t.array() * op.transpose().cast<Complex>().array()).sum();
        };
        for (Index i = 0; i < modes; ++i)
            for (Index j = 0; j < modes; ++j) {
                const Matrix op = ladders_[static_cast<std::size_t>(i)].transpose() *
                                  ladders_[static_cast<std::size_t>(j)];
                out.occupations(i, j) = trace_with(op);
                const Matrix aa = ladders_[static_cast<std::size_t>(i)] *
                                  ladders_[static_cast<std::size_t>(j)];
                out.max_anomalous = std::max(out.max_anomalous, std::abs(trace_with(aa)));
            }
        out.total_number = trace_with(number_).real();
        return out;
    }

  private:
    int n_max_;
    FockSpace space_;
    Matrix evecs_;
    Vector evals_;
    Matrix rho0_eig_;
    std::vector<Matrix> ladders_;
    Matrix number_;
};

}  // namespace thermoduet::fock
