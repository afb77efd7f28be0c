// types.hpp — Shared aliases, errors, and small numeric helpers

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace thermoduet {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;
using Index = Eigen::Index;

inline constexpr Complex kImag{0.0, 1.0};

// Invalid scenario input (bad parameter values, malformed config keys)
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Physically meaningless request (e.g. thermal state of a non-positive mode)
struct PhysicsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Reduced propagator too ill-conditioned to invert at time t
struct SingularPropagator : std::runtime_error {
    double t;
    double condition;
    SingularPropagator(double time, double kappa)
        : std::runtime_error("reduced propagator singular at t=" + std::to_string(time) +
                             " (condition " + std::to_string(kappa) + ")"),
          t(time),
          condition(kappa) {}
};

// Mean thermal occupation of a mode with energy x at inverse temperature beta.
// expm1 keeps small beta*x (hot modes) accurate.
inline double bose_occupation(double beta, double x) {
    return 1.0 / std::expm1(beta * x);
}

inline double max_abs(const ComplexMatrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline double max_abs(const Matrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

// x + log(1-x) without cancellation for small x (equals -x^2/2 - x^3/3 - ...)
inline double xplus_log1m(double x) {
    if (std::abs(x) < 1e-3) {
        double s = 0.0;
        double p = x * x;
        for (int k = 2; k <= 9; ++k) {
            s -= p / k;
            p *= x;
        }
        return s;
    }
    return x + std::log1p(-x);
}

}  // namespace thermoduet
