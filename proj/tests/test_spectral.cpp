#include <catch2/catch_amalgamated.hpp>

#include "thermoduet/analytic.hpp"
#include "thermoduet/spectral.hpp"
#include "test_support.hpp"

using namespace thermoduet;

namespace {

HamiltonianMatrix matrix_of(const ModelParams& p) { return build_hamiltonian(p); }

// Appendix-style J-structured block: a I + (b - a) J/n.
ComplexMatrix j_structured(Index n, Complex a, Complex b) {
    ComplexMatrix m = ComplexMatrix::Constant(n, n, (b - a) / double(n));
    m.diagonal().array() += a;
    return m;
}

}  // namespace

TEST_CASE("diagonalize: already diagonal matrix") {
    ModelParams p;
    p.omega1 = 1.0;
    p.omega2 = 0.3;
    const auto spec = diagonalize(matrix_of(p));
    CHECK(spec.eigenvalues(0) == Catch::Approx(0.3).epsilon(1e-14));
    CHECK(spec.eigenvalues(1) == Catch::Approx(1.0).epsilon(1e-14));
    // Eigenvector matrix is a signed permutation.
    CHECK(std::abs(std::abs(spec.z(0, 1)) - 1.0) <= 1e-12);
    CHECK(std::abs(std::abs(spec.z(1, 0)) - 1.0) <= 1e-12);
}

TEST_CASE("diagonalize: 2x2 against the quadratic formula") {
    ModelParams p;
    p.omega1 = 1.0;
    p.omega2 = 0.3;
    p.gamma = 0.01;
    const auto spec = diagonalize(matrix_of(p));
    const double disc = std::sqrt(0.49 + 4e-4);
    CHECK(spec.eigenvalues(0) == Catch::Approx((1.3 - disc) / 2).epsilon(1e-13));
    CHECK(spec.eigenvalues(1) == Catch::Approx((1.3 + disc) / 2).epsilon(1e-13));
}

TEST_CASE("diagonalize: homogeneous spectrum matches the closed-form eigensystem") {
    const ModelParams p = testsupport::small_params();
    const auto d = analytic::HomogeneousDerived::from_params(p);
    const auto spec = diagonalize(matrix_of(p));

    std::vector<double> expected;
    for (Index i = 0; i < p.n1 - 1; ++i) expected.push_back(d.eps1);
    for (Index i = 0; i < p.n2 - 1; ++i) expected.push_back(d.eps2);
    expected.push_back(d.mu);
    expected.push_back(d.lambda);
    std::sort(expected.begin(), expected.end());
    for (Index i = 0; i < spec.dim(); ++i)
        CHECK(spec.eigenvalues(i) ==
              Catch::Approx(expected[static_cast<std::size_t>(i)]).margin(1e-10));

    const Index n = spec.dim();
    CHECK(max_abs(Matrix(spec.z.transpose() * spec.z - Matrix::Identity(n, n))) <= 1e-10);
    const Matrix rebuilt = spec.z * spec.eigenvalues.asDiagonal() * spec.z.transpose();
    CHECK(max_abs(Matrix(rebuilt - matrix_of(p).h)) <= 1e-10 * max_abs(matrix_of(p).h));
}

TEST_CASE("one_particle_unitary: identity at t = 0 and phase evolution") {
    const ModelParams p = testsupport::small_params();
    const auto spec = diagonalize(matrix_of(p));
    const Index n = spec.dim();
    CHECK(max_abs(ComplexMatrix(one_particle_unitary(spec, 0.0) -
                                ComplexMatrix::Identity(n, n))) <= 1e-12);

    // Uncoupled diagonal Hamiltonian: pure phases.
    ModelParams diag;
    diag.omega1 = 1.0;
    diag.omega2 = 0.3;
    const auto sd = diagonalize(matrix_of(diag));
    const double t = 2.7;
    const ComplexMatrix u = one_particle_unitary(sd, t);
    CHECK(std::abs(u(0, 0) - std::exp(-kImag * 1.0 * t)) <= 1e-12);
    CHECK(std::abs(u(1, 1) - std::exp(-kImag * 0.3 * t)) <= 1e-12);
    CHECK(std::abs(u(0, 1)) <= 1e-14);
}

TEST_CASE("one_particle_unitary: homogeneous block form") {
    const ModelParams p = testsupport::small_params();
    const auto d = analytic::HomogeneousDerived::from_params(p);
    const auto spec = diagonalize(matrix_of(p));
    for (double t : {0.9, 5.3, 17.0}) {
        const ComplexMatrix u = one_particle_unitary(spec, t);
        const auto ax = analytic::alpha_xi(d, t);
        const Complex phase1 = std::exp(-kImag * d.eps1 * t);
        const ComplexMatrix expected = j_structured(p.n1, phase1, ax.alpha1);
        CHECK(max_abs(ComplexMatrix(u.topLeftCorner(p.n1, p.n1) - expected)) <= 1e-11);
        // Off-diagonal block is xi(t) J / sqrt(N1 N2).
        const double scale = 1.0 / std::sqrt(double(p.n1) * double(p.n2));
        CHECK(std::abs(u(0, p.n1) - ax.xi * scale) <= 1e-11);
    }
}

TEST_CASE("one_particle_unitary: long-time unitarity") {
    ModelParams p = testsupport::small_params();
    p.sigma = 0.25;
    p.seed = 5;
    const auto spec = diagonalize(matrix_of(p));
    const Index n = spec.dim();
    for (double t : {1e2, 1e4, 1e5}) {
        const ComplexMatrix u = one_particle_unitary(spec, t);
        CHECK(max_abs(ComplexMatrix(u.adjoint() * u - ComplexMatrix::Identity(n, n))) <= 1e-10);
    }
}

TEST_CASE("thermal_initial_moments: single modes and limits") {
    ModelParams p;
    p.omega1 = 1.0;
    p.omega2 = 0.3;
    p.temp1 = 0.6;
    p.temp2 = 4.0;
    const auto hm = matrix_of(p);
    const auto m = thermal_initial_moments(p, diagonalize_blocks(hm));
    // Oracle: direct scalar evaluation 1/(e^{omega/T} - 1).
    CHECK(m.s(0, 0).real() == Catch::Approx(1.0 / std::expm1(1.0 / 0.6)).epsilon(1e-14));
    CHECK(m.s(1, 1).real() == Catch::Approx(1.0 / std::expm1(0.3 / 4.0)).epsilon(1e-14));
    CHECK(std::abs(m.s(0, 1)) == 0.0);

    ModelParams cold = p;
    cold.temp1 = cold.temp2 = 1e-3;
    const auto mc = thermal_initial_moments(cold, diagonalize_blocks(hm));
    CHECK(max_abs(mc.s) <= 1e-120);
}

TEST_CASE("thermal_initial_moments: homogeneous block structure") {
    ModelParams p;
    p.n1 = 2;
    p.n2 = 1;
    p.omega1 = 1.0;
    p.omega2 = 0.3;
    p.g1 = 0.05;
    p.temp1 = 0.7;
    p.temp2 = 2.0;
    const auto m = thermal_initial_moments(p, diagonalize_blocks(matrix_of(p)));
    // Oracle: direct 2x2 construction n(eps) I + (n(nu) - n(eps)) J/2.
    const double neps = bose_occupation(1.0 / 0.7, 0.95);
    const double nnu = bose_occupation(1.0 / 0.7, 1.05);
    const ComplexMatrix expected = j_structured(2, neps, nnu);
    CHECK(max_abs(ComplexMatrix(m.s.topLeftCorner(2, 2) - expected)) <= 1e-13);
    m.check_invariants();
}

TEST_CASE("thermal_initial_moments: rejects non-positive block energies") {
    ModelParams p;
    p.n1 = 2;
    p.n2 = 1;
    p.omega1 = 0.1;
    p.omega2 = 0.3;
    p.g1 = 0.2;  // eps1 = -0.1
    CHECK_THROWS_AS(thermal_initial_moments(p, diagonalize_blocks(matrix_of(p))), PhysicsError);
}

TEST_CASE("evolve_moments: trivial and decoupled cases") {
    const ModelParams p = testsupport::small_params();
    const auto hm = matrix_of(p);
    const auto spec = diagonalize(hm);
    const auto s0 = thermal_initial_moments(p, diagonalize_blocks(hm));
    const auto same = evolve_moments(s0, one_particle_unitary(spec, 0.0), 0.0);
    CHECK(max_abs(ComplexMatrix(same.s - s0.s)) <= 1e-12);

    ModelParams dec = p;
    dec.gamma = 0.0;
    const auto hd = matrix_of(dec);
    const auto sd = diagonalize(hd);
    const auto s0d = thermal_initial_moments(dec, diagonalize_blocks(hd));
    const double tr1_0 = s0d.s.topLeftCorner(dec.n1, dec.n1).trace().real();
    for (double t : {1.1, 8.0}) {
        const auto st = evolve_moments(s0d, one_particle_unitary(sd, t), t);
        CHECK(st.s.topLeftCorner(dec.n1, dec.n1).trace().real() ==
              Catch::Approx(tr1_0).epsilon(1e-12));
        st.check_invariants();
    }
}

TEST_CASE("evolve_moments: homogeneous reduced blocks match the closed form") {
    const ModelParams p = testsupport::small_params();
    const auto d = analytic::HomogeneousDerived::from_params(p);
    const auto hm = matrix_of(p);
    const auto spec = diagonalize(hm);
    const auto s0 = thermal_initial_moments(p, diagonalize_blocks(hm));
    for (double t : {0.7, 3.9, 21.0}) {
        const auto st = evolve_moments(s0, one_particle_unitary(spec, t), t);
        const double u = analytic::xi_squared(d, t);
        const double sb1 = d.n_nu1 * (1.0 - u) + d.n_nu2 * u;
        const double sb2 = d.n_nu2 * (1.0 - u) + d.n_nu1 * u;
        const ComplexMatrix b1 = j_structured(p.n1, d.n_eps1, sb1);
        const ComplexMatrix b2 = j_structured(p.n2, d.n_eps2, sb2);
        CHECK(max_abs(ComplexMatrix(st.s.topLeftCorner(p.n1, p.n1) - b1)) <= 1e-9);
        CHECK(max_abs(ComplexMatrix(st.s.bottomRightCorner(p.n2, p.n2) - b2)) <= 1e-9);
        CHECK(st.trace_real() == Catch::Approx(s0.trace_real()).epsilon(1e-9));
        st.check_invariants();
    }
}

TEST_CASE("moment_time_derivative: stationarity, finite differences, trace") {
    ModelParams dec = testsupport::small_params();
    dec.gamma = 0.0;
    const auto hd = matrix_of(dec);
    const auto sd = diagonalize(hd);
    const auto s0d = thermal_initial_moments(dec, diagonalize_blocks(hd));
    CHECK(max_abs(moment_time_derivative(s0d, sd, 0.0)) <= 1e-12);

    const ModelParams p = testsupport::small_params();
    const auto hm = matrix_of(p);
    const auto spec = diagonalize(hm);
    const auto s0 = thermal_initial_moments(p, diagonalize_blocks(hm));
    const auto d = analytic::HomogeneousDerived::from_params(p);
    const double h = 1e-4 / d.big_omega;
    for (double t : {0.8, 4.4, 12.3}) {
        const ComplexMatrix exact = moment_time_derivative(s0, spec, t);
        const ComplexMatrix fd = (evolve_moments(s0, one_particle_unitary(spec, t + h), 0).s -
                                  evolve_moments(s0, one_particle_unitary(spec, t - h), 0).s) /
                                 (2.0 * h);
        CHECK(max_abs(ComplexMatrix(exact - fd)) <= 1e-6 * max_abs(exact));
        CHECK(std::abs(exact.trace()) <= 1e-10 * std::max(1.0, max_abs(exact)));
    }
}

TEST_CASE("subsystem energies and interaction energy") {
    const ModelParams p = testsupport::small_params();
    const auto d = analytic::HomogeneousDerived::from_params(p);
    const auto hm = matrix_of(p);
    const auto spec = diagonalize(hm);
    const auto s0 = thermal_initial_moments(p, diagonalize_blocks(hm));

    // Oracle: E_x(0) = (N_x - 1) eps_x n_x(eps_x) + nu_x n_x(nu_x).
    const double e10 = (p.n1 - 1) * d.eps1 * d.n_eps1 + d.nu1 * d.n_nu1;
    const double e20 = (p.n2 - 1) * d.eps2 * d.n_eps2 + d.nu2 * d.n_nu2;
    CHECK(subsystem_energy(s0, hm, 1) == Catch::Approx(e10).epsilon(1e-12));
    CHECK(subsystem_energy(s0, hm, 2) == Catch::Approx(e20).epsilon(1e-12));
    CHECK(interaction_energy(s0, hm) == 0.0);

    // Conservation and the interaction-energy identity along the trajectory.
    const double h0 = total_energy(s0, hm);
    for (double t : {1.3, 6.6, 28.0}) {
        const auto st = evolve_moments(s0, one_particle_unitary(spec, t), t);
        const double e1 = subsystem_energy(st, hm, 1);
        const double e2 = subsystem_energy(st, hm, 2);
        const double ui = interaction_energy(st, hm);
        CHECK(total_energy(st, hm) == Catch::Approx(h0).epsilon(1e-12));
        CHECK(e1 + e2 + ui == Catch::Approx(total_energy(st, hm)).epsilon(1e-12));
        // Delta U_I = -(dE1 + dE2), and the closed form -delta G(t).
        const double du_i = -d.delta * analytic::g_b_functions(d, t).g;
        CHECK(ui == Catch::Approx(du_i).margin(1e-10));
    }

    // gamma = 0: bare energies constant.
    ModelParams dec = p;
    dec.gamma = 0.0;
    const auto hd = matrix_of(dec);
    const auto sd = diagonalize(hd);
    const auto s0d = thermal_initial_moments(dec, diagonalize_blocks(hd));
    const double e1c = subsystem_energy(s0d, hd, 1);
    for (double t : {2.0, 9.0}) {
        const auto st = evolve_moments(s0d, one_particle_unitary(sd, t), t);
        CHECK(subsystem_energy(st, hd, 1) == Catch::Approx(e1c).epsilon(1e-12));
    }
}

TEST_CASE("identical subsystems at equal temperatures stay frozen") {
    ModelParams p = testsupport::small_params();
    p.n2 = p.n1;
    p.omega2 = p.omega1;
    p.g2 = p.g1;
    p.temp2 = p.temp1;
    const auto hm = matrix_of(p);
    const auto spec = diagonalize(hm);
    const auto s0 = thermal_initial_moments(p, diagonalize_blocks(hm));
    const double e0 = subsystem_energy(s0, hm, 1);
    for (double t : {0.9, 7.7, 40.0}) {
        const auto st = evolve_moments(s0, one_particle_unitary(spec, t), t);
        CHECK(std::abs(subsystem_energy(st, hm, 1) - e0) <= 1e-12 * std::max(1.0, e0));
        CHECK(std::abs(interaction_energy(st, hm)) <= 1e-12 * std::max(1.0, e0));
    }
}

TEST_CASE("interaction energy vanishes for equal collective eigenvalues") {
    ModelParams p = testsupport::small_params();
    p.n2 = p.n1;
    p.omega2 = p.omega1;
    p.g2 = p.g1;  // nu1 = nu2, temperatures differ
    const auto hm = matrix_of(p);
    const auto spec = diagonalize(hm);
    const auto s0 = thermal_initial_moments(p, diagonalize_blocks(hm));
    const double scale = std::abs(subsystem_energy(s0, hm, 1));
    for (double t : {1.7, 12.0, 33.0}) {
        const auto st = evolve_moments(s0, one_particle_unitary(spec, t), t);
        CHECK(std::abs(interaction_energy(st, hm)) <= 1e-12 * std::max(1.0, scale));
    }
}
