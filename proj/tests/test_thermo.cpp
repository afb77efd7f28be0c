#include <catch2/catch_amalgamated.hpp>

#include "thermoduet/analytic.hpp"
#include "thermoduet/pipeline.hpp"
#include "thermoduet/quadrature.hpp"
#include "thermoduet/thermo.hpp"
#include "test_support.hpp"

using namespace thermoduet;

TEST_CASE("endpoint approaches: structure and exact identities") {
    const std::vector<double> e1{2.0, 2.3, 1.9, 2.05};
    const std::vector<double> e2{5.0, 4.7, 5.1, 4.95};
    const std::vector<double> ui{0.0, 0.02, -0.03, 0.01};

    const auto wc = weak_coupling_quantities(e1);
    CHECK(wc.du[0] == 0.0);
    CHECK(wc.du[1] == Catch::Approx(0.3));
    for (std::size_t k = 0; k < e1.size(); ++k) {
        CHECK(wc.dq[k] == wc.du[k]);
        CHECK(wc.dw[k] == 0.0);
    }

    const auto inter = interaction_approach(e2);
    CHECK(inter.du[1] == Catch::Approx(0.3));
    for (std::size_t k = 0; k < e2.size(); ++k) {
        CHECK(inter.dw[k] == 0.0);
        CHECK(inter.dq[k] == inter.du[k]);
    }

    const auto bare1 = bare_approach(e1, e2, ui);
    const auto bare2 = bare_approach(e2, e1, ui);
    for (std::size_t k = 0; k < e1.size(); ++k) {
        // First law holds exactly: dW is defined as -dU_I and dU + dU_bar = -dU_I
        // only via conservation, but the emitted identities are structural:
        CHECK(bare1.dw[k] == bare2.dw[k]);
        CHECK(bare1.dq[k] == inter.du[k]);  // dQ_bare = dQ_int
        CHECK(bare1.dw[k] == -(ui[k] - ui[0]));
    }
}

TEST_CASE("cumulative Simpson: polynomial exactness and closing rule") {
    // f(t) = t^2 on h = 0.25: Simpson integrates cubics exactly at even
    // sample counts; the odd-interval tail closes with a trapezoid.
    const double h = 0.25;
    std::vector<double> f;
    for (int k = 0; k <= 8; ++k) f.push_back((k * h) * (k * h));
    const auto I = cumulative_simpson(f, h);
    CHECK(I[0] == 0.0);
    for (int k = 2; k <= 8; k += 2) {
        const double t = k * h;
        CHECK(I[k] == Catch::Approx(t * t * t / 3.0).margin(1e-14));
    }
    // Odd index: Simpson over [0, t_{k-1}] plus trapezoid on the last step.
    const double t3 = 3 * h;
    const double expected =
        (2 * h) * (2 * h) * (2 * h) / 3.0 + 0.5 * h * (f[2] + f[3]);
    CHECK(I[3] == Catch::Approx(expected).margin(1e-14));
    CHECK(I[3] != Catch::Approx(t3 * t3 * t3 / 3.0).margin(1e-6));
}

TEST_CASE("cumulative Simpson: fourth-order convergence on a smooth integrand") {
    auto run = [](int n) {
        const double t_end = 3.0;
        const double h = t_end / n;
        std::vector<double> f;
        for (int k = 0; k <= n; ++k) f.push_back(std::sin(1.3 * k * h));
        const auto I = cumulative_simpson(f, h);
        const double exact = (1.0 - std::cos(1.3 * t_end)) / 1.3;
        return std::abs(I.back() - exact);
    };
    const double e1 = run(64);
    const double e2 = run(128);
    CHECK(e1 / e2 >= 12.0);  // order 4 gives 16
}

TEST_CASE("adaptive Simpson and singular-window repair") {
    PartialIntegrand smooth = [](double t) -> std::optional<double> {
        return std::cos(2.0 * t);
    };
    const auto v = adaptive_simpson(smooth, 0.0, 1.4, 1e-12);
    REQUIRE(v.has_value());
    CHECK(*v == Catch::Approx(std::sin(2.8) / 2.0).margin(1e-10));

    // Smooth integrand with a hairline evaluation hole: the window integral
    // is recovered to the requested tolerance.
    const double t0 = 0.37;
    PartialIntegrand holed = [t0](double t) -> std::optional<double> {
        if (std::abs(t - t0) < 1e-11) return std::nullopt;
        return std::cos(2.0 * t);
    };
    const auto h = repair_window(holed, t0 - 0.2, t0 + 0.3, t0, 1e-10);
    REQUIRE(h.has_value());
    CHECK(*h == Catch::Approx((std::sin(2.0 * (t0 + 0.3)) - std::sin(2.0 * (t0 - 0.2))) / 2.0)
                    .margin(1e-8));

    // Integrable log singularity with a band refusing to evaluate: the shell
    // pass recovers the integral at the tolerance it can certify.
    PartialIntegrand logsing = [t0](double t) -> std::optional<double> {
        if (std::abs(t - t0) < 1e-9) return std::nullopt;
        return std::log(std::abs(t - t0));
    };
    const double tol_log = 2e-4;
    const auto w = repair_window(logsing, t0 - 0.2, t0 + 0.3, t0, tol_log);
    REQUIRE(w.has_value());
    auto primitive = [t0](double t) {
        const double u = std::abs(t - t0);
        return (t - t0 >= 0 ? 1.0 : -1.0) * (u * std::log(u) - u);
    };
    CHECK(*w == Catch::Approx(primitive(t0 + 0.3) - primitive(t0 - 0.2)).margin(5.0 * tol_log));

    // Non-integrable pole: the repair must give up.
    PartialIntegrand pole = [t0](double t) -> std::optional<double> {
        if (std::abs(t - t0) < 1e-9) return std::nullopt;
        return 1.0 / ((t - t0) * (t - t0));
    };
    CHECK(!repair_window(pole, t0 - 0.2, t0 + 0.3, t0, 1e-9).has_value());
}

TEST_CASE("md quantities via the matrix-level operation match the closed forms") {
    const ModelParams p = testsupport::small_params();
    const auto d = analytic::HomogeneousDerived::from_params(p);
    const auto hm = build_hamiltonian(p);
    const auto spec = diagonalize(hm);
    const auto lay = layout_of(hm);
    const auto s0 = thermal_initial_moments(p, diagonalize_blocks(hm));

    const int n = 801;
    std::vector<double> grid(n);
    for (int k = 0; k < n; ++k) grid[k] = d.period() * k / (n - 1);

    std::vector<ComplexMatrix> ks, kdots, ss, sdots;
    for (double t : grid) {
        const auto eg = evaluate_effective_generator(spec, lay, t, 1);
        ks.push_back(eg.k);
        kdots.push_back(eg.k_dot);
        ss.push_back(
            evolve_moments(s0, one_particle_unitary(spec, t), t).s.topLeftCorner(p.n1, p.n1));
        sdots.push_back(moment_time_derivative(s0, spec, t).topLeftCorner(p.n1, p.n1));
    }
    const auto md = minimal_dissipation_quantities(ks, kdots, ss, sdots, grid);

    double scale = 0.0, dev_u = 0.0, dev_q = 0.0, dev_w = 0.0, res = 0.0;
    for (int k = 0; k < n; ++k) {
        const auto ev = analytic::analytic_energies(d, grid[k]);
        const auto hw = analytic::md_heat_work(d, grid[k], 1);
        scale = std::max(scale, std::abs(ev.du1_md));
        dev_u = std::max(dev_u, std::abs(md.du[k] - ev.du1_md));
        dev_q = std::max(dev_q, std::abs(md.dq[k] - hw.dq));
        dev_w = std::max(dev_w, std::abs(md.dw[k] - hw.dw));
        res = std::max(res, std::abs(md.du[k] - md.dq[k] - md.dw[k]));
    }
    CHECK(dev_u <= 1e-10 * scale);
    CHECK(dev_q <= 1e-7 * scale);
    CHECK(dev_w <= 1e-7 * scale);
    CHECK(res <= 1e-6 * scale);
}

TEST_CASE("md quadrature: residual shrinks at least 4x under grid halving") {
    const ModelParams p = testsupport::small_params(1.02, 1e-4, 2e-2);  // strong coupling
    TrajectoryEngine eng(p);
    const auto d = analytic::HomogeneousDerived::from_params(p);
    auto residual = [&](Index n) {
        GridSpec grid{d.period() * p.omega1, n};
        const auto tr = eng.run(grid, PipelineOptions{});
        double r = 0.0;
        for (std::size_t k = 0; k < tr.t.size(); ++k)
            for (int x : {1, 2}) {
                const auto& s = tr.at(x, Approach::md);
                if (s.ok[k]) r = std::max(r, std::abs(s.du[k] - s.dq[k] - s.dw[k]));
            }
        return r;
    };
    const double r1 = residual(201);
    const double r2 = residual(401);
    CHECK(r1 > 1e-13);  // stays above the roundoff floor so the ratio is meaningful
    CHECK(r1 / r2 >= 4.0);
}

TEST_CASE("gap handling: isolated singular sample is bridged, divergent tail flagged") {
    // Synthetic scalar md data with one missing sample over a smooth integrand.
    const int n = 33;
    const int hole = 16;
    const double h = 1.0 / 16.0;
    std::vector<double> grid(n);
    for (int k = 0; k < n; ++k) grid[k] = h * k;
    MdGridData data;
    data.tr_ks.assign(n, 0.0);
    data.q_integrand.resize(n);
    data.w_integrand.resize(n);
    data.ok.assign(n, 1);
    auto qf = [](double t) { return std::cos(t); };
    auto wf = [](double t) { return std::sin(t); };
    for (int k = 0; k < n; ++k) {
        data.q_integrand[k] = qf(grid[k]);
        data.w_integrand[k] = wf(grid[k]);
    }
    data.ok[hole] = 0;
    MdEvaluator eval = [&](double t) -> std::optional<MdPoint> {
        if (std::abs(t - grid[hole]) < 1e-12) return std::nullopt;
        return MdPoint{0.0, qf(t), wf(t)};
    };
    const auto s = minimal_dissipation_quantities(data, grid, eval, 1e-10);
    CHECK(!s.ok[hole]);
    CHECK(s.ok[hole + 1]);
    CHECK(s.ok[n - 1]);
    CHECK(s.dq[n - 1] == Catch::Approx(std::sin(grid[n - 1])).margin(1e-4));
    CHECK(s.dw[n - 1] == Catch::Approx(1.0 - std::cos(grid[n - 1])).margin(1e-4));

    // Divergent window: everything from the gap onward is flagged.
    MdEvaluator diverging = [&](double t) -> std::optional<MdPoint> {
        if (std::abs(t - grid[hole]) < 1e-8) return std::nullopt;
        const double d2 = (t - grid[hole]) * (t - grid[hole]);
        return MdPoint{0.0, qf(t), 1.0 / d2};
    };
    MdGridData bad = data;
    for (int k = 0; k < n; ++k)
        if (k != hole)
            bad.w_integrand[k] = 1.0 / ((grid[k] - grid[hole]) * (grid[k] - grid[hole]));
    const auto sb = minimal_dissipation_quantities(bad, grid, diverging, 1e-10);
    CHECK(!sb.ok[hole]);
    CHECK(!sb.ok[hole + 1]);
    CHECK(!sb.ok[n - 1]);
    CHECK(sb.ok[hole - 1]);
}

TEST_CASE("net balances: paper identities on an engine trajectory") {
    ModelParams p = testsupport::small_params();
    p.sigma = 0.15;  // identities are structural, hold for distributed frequencies
    p.seed = 11;
    TrajectoryEngine eng(p);
    GridSpec grid{30.0, 241};
    const auto tr = eng.run(grid, PipelineOptions{});

    double ui_scale = testsupport::max_abs(tr.u_i);
    REQUIRE(ui_scale > 0.0);
    const auto& bal_int = tr.balance(Approach::interaction);
    const auto& bal_bare = tr.balance(Approach::bare);
    for (std::size_t k = 0; k < tr.t.size(); ++k) {
        CHECK(std::abs(bal_int.du[k] - tr.u_i[k]) <= 1e-10 * ui_scale);
        CHECK(std::abs(bal_bare.du[k] + tr.u_i[k]) <= 1e-10 * ui_scale);
        CHECK(std::abs(bal_bare.dq[k] - tr.u_i[k]) <= 1e-10 * ui_scale);
        CHECK(std::abs(bal_bare.dw[k] + 2.0 * tr.u_i[k]) <= 1e-10 * ui_scale);
        CHECK(tr.balance(Approach::interaction).dw[k] == 0.0);
        CHECK(tr.at(1, Approach::wc).dw[k] == 0.0);
        // Role-swap antisymmetry: dQ_1_int = -dU_2_bare identically.
        CHECK(tr.at(1, Approach::interaction).dq[k] == -tr.at(2, Approach::bare).du[k]);
    }

    // gamma = 0: all balances vanish.
    ModelParams dec = testsupport::small_params();
    dec.gamma = 0.0;
    const auto trd = TrajectoryEngine(dec).run(GridSpec{10.0, 11}, PipelineOptions{});
    for (Approach a : kApproaches)
        for (std::size_t k = 0; k < trd.t.size(); ++k) {
            CHECK(std::abs(trd.balance(a).du[k]) <= 1e-12);
            CHECK(std::abs(trd.balance(a).dq[k]) <= 1e-12);
            CHECK(std::abs(trd.balance(a).dw[k]) <= 1e-12);
        }
}

TEST_CASE("equal collective eigenvalues: all strong-coupling approaches coincide") {
    ModelParams p = testsupport::small_params();
    p.n2 = p.n1;
    p.omega2 = p.omega1;
    p.g2 = p.g1;
    p.temp1 = 0.6;
    p.temp2 = 4.0;
    TrajectoryEngine eng(p);
    const auto d = analytic::HomogeneousDerived::from_params(p);
    // Even count dodges the exact resonance; the trapezoid closing rule is
    // O(h^3) at odd samples, so hitting 1e-9 needs a few thousand points.
    GridSpec grid{d.period() * p.omega1, 4000};
    const auto tr = eng.run(grid, PipelineOptions{});
    REQUIRE(tr.gap_count == 0);

    double scale = 0.0;
    for (double v : tr.at(1, Approach::wc).du) scale = std::max(scale, std::abs(v));
    REQUIRE(scale > 0.0);
    for (std::size_t k = 0; k < tr.t.size(); ++k) {
        CHECK(std::abs(tr.u_i[k]) <= 1e-11 * scale);
        for (Approach a : {Approach::interaction, Approach::bare, Approach::md}) {
            CHECK(std::abs(tr.at(1, a).du[k] - tr.at(1, Approach::wc).du[k]) <= 1e-9 * scale);
            CHECK(std::abs(tr.at(1, a).dq[k] - tr.at(1, Approach::wc).dq[k]) <= 1e-9 * scale);
            CHECK(std::abs(tr.at(1, a).dw[k]) <= 1e-9 * scale);
        }
    }
}

TEST_CASE("first law per approach on a generic trajectory") {
    ModelParams p = testsupport::small_params();
    p.sigma = 0.05;
    p.seed = 3;
    TrajectoryEngine eng(p);
    GridSpec grid{25.0, 401};
    const auto tr = eng.run(grid, PipelineOptions{});
    double e_scale = 0.0;
    for (double v : tr.e1) e_scale = std::max(e_scale, std::abs(v));
    for (std::size_t k = 0; k < tr.t.size(); ++k) {
        for (int x : {1, 2}) {
            for (Approach a : {Approach::wc, Approach::interaction, Approach::bare}) {
                const auto& s = tr.at(x, a);
                CHECK(std::abs(s.du[k] - s.dq[k] - s.dw[k]) <= 1e-11 * e_scale);
            }
            const auto& md = tr.at(x, Approach::md);
            CHECK(std::abs(md.du[k] - md.dq[k] - md.dw[k]) <=
                  std::max(tr.tol_quad_abs[x - 1], 1e-11 * e_scale));
        }
    }
}
