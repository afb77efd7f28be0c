// test_support.hpp — Shared helpers for the test suites: parameter presets,
// deviation measures, and a small Romberg integrator used as an independent
// quadrature oracle.

#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "thermoduet/model.hpp"

namespace testsupport {

// Fig. 2 parameter set: dispersive, N=200, M=300, omega2 = 0.3 omega1,
// g = gamma = 1e-5, T1 = 0.6, T2 = 4.
inline thermoduet::ModelParams fig2_params() {
    thermoduet::ModelParams p;
    p.n1 = 200;
    p.n2 = 300;
    p.omega1 = 1.0;
    p.omega2 = 0.3;
    p.g1 = p.g2 = 1e-5;
    p.gamma = 1e-5;
    p.temp1 = 0.6;
    p.temp2 = 4.0;
    return p;
}

// Fig. 4 parameter sets: gamma = 2e-3 with positive (omega2 = 0.3) or
// negative (omega2 = 1.7) detuning.
inline thermoduet::ModelParams fig4_params(bool positive_detuning) {
    thermoduet::ModelParams p = fig2_params();
    p.gamma = 2e-3;
    p.omega2 = positive_detuning ? 0.3 : 1.7;
    return p;
}

// Desk-scale homogeneous preset with the same regime dials.
inline thermoduet::ModelParams small_params(double omega2 = 0.7, double g = 1e-3,
                                            double gamma = 3e-3) {
    thermoduet::ModelParams p;
    p.n1 = 6;
    p.n2 = 9;
    p.omega1 = 1.0;
    p.omega2 = omega2;
    p.g1 = p.g2 = g;
    p.gamma = gamma;
    p.temp1 = 0.6;
    p.temp2 = 4.0;
    return p;
}

inline double max_abs_dev(const std::vector<double>& a, const std::vector<double>& b) {
    double dev = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) dev = std::max(dev, std::abs(a[i] - b[i]));
    return dev;
}

inline double max_abs(const std::vector<double>& a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

// Romberg integration on [a, b]; independent of the library quadrature.
inline double romberg(const std::function<double(double)>& f, double a, double b,
                      int levels = 14) {
    std::vector<std::vector<double>> r(levels);
    double h = b - a;
    r[0] = {0.5 * h * (f(a) + f(b))};
    for (int i = 1; i < levels; ++i) {
        h *= 0.5;
        double sum = 0.0;
        const long m = 1L << (i - 1);
        for (long k = 0; k < m; ++k) sum += f(a + (2 * k + 1) * h);
        r[i].resize(i + 1);
        r[i][0] = 0.5 * r[i - 1][0] + h * sum;
        double pow4 = 1.0;
        for (int j = 1; j <= i; ++j) {
            pow4 *= 4.0;
            r[i][j] = r[i][j - 1] + (r[i][j - 1] - r[i - 1][j - 1]) / (pow4 - 1.0);
        }
    }
    return r[levels - 1][levels - 1];
}

}  // namespace testsupport
