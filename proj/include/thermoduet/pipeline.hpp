// pipeline.hpp — Trajectory evaluation over a time grid. One engine, two
// evaluation strategies behind the same formulas:
//
//   dense    — generic path: per-time GEMM sandwiches of the spectral data,
//              LU solves for the reduced generator. Used whenever the
//              spectrum has no exploitable structure (sigma > 0).
//   clustered — when the spectrum collapses onto a few degenerate clusters
//              (homogeneous scenarios), every needed quantity reduces to
//              small precomputed projections; the reduced propagator becomes
//              identity-plus-low-rank and is inverted by Woodbury on an r x r
//              core. Orders of magnitude faster and numerically cleaner near
//              resonance times.
//
// Both paths are cross-checked against each other and against the closed
// forms in the test suite.

#pragma once

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

#include "thermoduet/model.hpp"
#include "thermoduet/reduced.hpp"
#include "thermoduet/spectral.hpp"
#include "thermoduet/thermo.hpp"
#include "thermoduet/types.hpp"

namespace thermoduet {

struct GridSpec {
    double t_max{1.0};   // in units of 1/omega1
    Index n_points{3};

    std::vector<double> times(double omega1) const {
        if (n_points < 2) throw ConfigError("grid needs at least 2 points");
        if (!(t_max > 0.0)) throw ConfigError("t_max must be positive");
        std::vector<double> t(static_cast<std::size_t>(n_points));
        const double step = t_max / omega1 / static_cast<double>(n_points - 1);
        for (Index k = 0; k < n_points; ++k) t[static_cast<std::size_t>(k)] = step * k;
        return t;
    }
};

struct PipelineOptions {
    double kappa_max{kDefaultKappaMax};
    double tol_quad_rel{1e-6};  // md quadrature tolerance x dynamic range of dU_md
    int workers{1};
    bool with_md{true};
    bool with_k_data{false};    // record Tr K, identity and collective coefficients
    bool force_dense{false};
};

// Scalar data produced at one grid time.
struct TimePointSample {
    double e1{0.0}, e2{0.0}, u_i{0.0};
    double trace_s{0.0};
    struct MdPart {
        bool ok{true};
        double tr_ks{0.0}, q_integrand{0.0}, w_integrand{0.0};
        double condition{1.0};
        double k_trace{0.0}, k_eps{0.0}, k_coll{0.0};
    };
    std::array<MdPart, 2> md;
};

// --------------------------- eigenvalue clustering ---------------------------

struct EigenvalueClusters {
    std::vector<std::pair<Index, Index>> ranges;  // [begin, end) column ranges
    std::vector<double> representative;
    double max_spread{0.0};

    std::size_t count() const { return ranges.size(); }
};

inline EigenvalueClusters cluster_eigenvalues(const Vector& d) {
    const double scale = std::max(1.0, d.cwiseAbs().maxCoeff());
    const double atol = 64.0 * static_cast<double>(d.size()) *
                        std::numeric_limits<double>::epsilon() * scale;
    EigenvalueClusters c;
    Index begin = 0;
    for (Index i = 1; i <= d.size(); ++i) {
        if (i == d.size() || d(i) - d(i - 1) > atol) {
            c.ranges.emplace_back(begin, i);
            c.representative.push_back(d.segment(begin, i - begin).mean());
            c.max_spread = std::max(c.max_spread, d(i - 1) - d(begin));
            begin = i;
        }
    }
    return c;
}

namespace detail {

// Precomputed cluster-side data for one subsystem block.
struct ClusterBlock {
    Index nx{0};
    std::size_t dominant{0};
    double zeta0{0.0};
    std::vector<double> zeta_col;  // cluster value per kept non-dominant column
    Matrix tmat;                   // B' = Q * tmat
    Index rq{0};                   // columns of Q
    Matrix h_proj;                 // k x k scalars <B_g^T H_x B_g', W_gg'>
    Matrix tr_proj;                // k x k scalars <B_g^T B_g', W_gg'>
    std::vector<Matrix> v_proj;    // k*k matrices (rq x rq): (Q^T B_g) W_gg' (B_g'^T Q)
    Vector qv;                     // Q^T (ones / sqrt(nx))
};

struct ClusterData {
    bool usable{false};
    std::vector<double> reps;
    Matrix ui_proj;  // k x k scalars for the interaction energy
    double gamma{0.0};
    std::array<ClusterBlock, 2> block;
    double max_spread{0.0};
};

}  // namespace detail

// ------------------------------ trajectory engine ----------------------------

class TrajectoryEngine {
  public:
    explicit TrajectoryEngine(const ModelParams& params)
        : TrajectoryEngine(params, build_hamiltonian(params, sample_frequencies(params))) {}

    // Runs on a caller-supplied Hamiltonian matrix (fault-injection self-tests).
    TrajectoryEngine(const ModelParams& params, const HamiltonianMatrix& hm)
        : params_(params),
          freqs_(sample_frequencies(params)),
          hm_(hm),
          spec_(diagonalize(hm_)),
          s0_(thermal_initial_moments(params, diagonalize_blocks(hm_))),
          layout_{hm_.n1, hm_.n2} {
        w_ = spec_.z.transpose() * s0_.s.real() * spec_.z;
        wc_ = w_.cast<Complex>();
        z1c_ = spec_.z.topRows(hm_.n1).cast<Complex>();
        z2c_ = spec_.z.bottomRows(hm_.n2).cast<Complex>();
        u1_ = spec_.z.topRows(hm_.n1).colwise().sum().transpose();
        u2_ = spec_.z.bottomRows(hm_.n2).colwise().sum().transpose();
        h1c_ = hm_.block1().cast<Complex>();
        h2c_ = hm_.block2().cast<Complex>();
        build_clusters();
    }

    const ModelParams& params() const { return params_; }
    const std::vector<double>& frequencies() const { return freqs_; }
    const HamiltonianMatrix& hamiltonian() const { return hm_; }
    const Spectrum& spectrum() const { return spec_; }
    const MomentMatrix& initial_moments() const { return s0_; }
    const BlockLayout& layout() const { return layout_; }
    bool clustered() const { return clusters_.usable; }

    // Honest full-moment evolution (used by conservation checks and tests).
    MomentMatrix moments_at(double t) const {
        return evolve_moments(s0_, one_particle_unitary(spec_, t), t);
    }

    // Evaluate all per-time scalars with the selected strategy.
    TimePointSample evaluate(double t, const PipelineOptions& opt) const {
        if (use_cluster(opt)) return evaluate_clustered(t, opt);
        return evaluate_dense(t, opt);
    }

    ThermoTrajectory run(const GridSpec& grid, const PipelineOptions& opt) const {
        const std::vector<double> times = grid.times(params_.omega1);
        const std::size_t n = times.size();
        std::vector<TimePointSample> pts(n);

        const int workers = std::max(1, opt.workers);
        if (workers == 1 || n < 8) {
            for (std::size_t i = 0; i < n; ++i) pts[i] = evaluate(times[i], opt);
        } else {
            std::atomic<std::size_t> next{0};
            auto body = [&]() {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= n) return;
                    pts[i] = evaluate(times[i], opt);
                }
            };
            std::vector<std::thread> pool;
            for (int k = 0; k < workers - 1; ++k) pool.emplace_back(body);
            body();
            for (auto& th : pool) th.join();
        }
        return assemble(times, pts, opt);
    }

  private:
    bool use_cluster(const PipelineOptions& opt) const {
        return clusters_.usable && !opt.force_dense;
    }

    // ---------------------------- dense evaluation ---------------------------

    TimePointSample evaluate_dense(double t, const PipelineOptions& opt) const {
        TimePointSample out;
        const ComplexVector e = evolution_phases(spec_, t);

        // M = E^* W E; M^T = conj(M) since W is real.
        ComplexMatrix m = wc_;
        m.array().colwise() *= e.conjugate().array();
        m.array().rowwise() *= e.transpose().array();

        const ComplexVector dvals = spec_.eigenvalues.cast<Complex>();
        const ComplexVector id = kImag * dvals;

        for (int which = 1; which <= 2; ++which) {
            const ComplexMatrix& zx = which == 1 ? z1c_ : z2c_;
            const Index nx = layout_.size(which);
            ComplexMatrix p;
            p.noalias() = m * zx.transpose();                    // N x nx
            ComplexMatrix s;
            s.noalias() = zx * p;                                // S^(x)
            ComplexMatrix zd = zx * id.asDiagonal();             // rows scaled by iD
            ComplexMatrix sdot;
            sdot.noalias() = zd * p;
            sdot.noalias() -= (p.conjugate().transpose() * zd.transpose()).eval();

            const ComplexMatrix& hx = which == 1 ? h1c_ : h2c_;
            const double ex = (hx.array() * s.array()).sum().real();
            if (which == 1) out.e1 = ex;
            else out.e2 = ex;
            out.trace_s += s.trace().real();

            auto& md = out.md[which - 1];
            if (!opt.with_md) continue;

            // Reduced-generator chain, sharing the cast eigenvector rows.
            ComplexMatrix scaled = zx * e.asDiagonal();
            ComplexMatrix phi;
            phi.noalias() = scaled * zx.transpose();
            scaled = zx * (-id.array() * e.array()).matrix().asDiagonal();
            ComplexMatrix phi_dot;
            phi_dot.noalias() = scaled * zx.transpose();
            scaled = zx * (-dvals.array().square() * e.array()).matrix().asDiagonal();
            ComplexMatrix phi_ddot;
            phi_ddot.noalias() = scaled * zx.transpose();

            Eigen::PartialPivLU<ComplexMatrix> lu(phi.transpose());
            md.condition = phi.cwiseAbs().colwise().sum().maxCoeff() *
                           detail::inverse_onenorm_estimate(lu);
            if (!(md.condition <= opt.kappa_max)) {
                md.ok = false;
                continue;
            }
            const ComplexMatrix l = lu.solve(phi_dot.transpose()).transpose();
            ComplexMatrix l_dot = lu.solve(phi_ddot.transpose()).transpose();
            l_dot.noalias() -= l * l;
            const ComplexMatrix k = effective_hamiltonian(l);
            const ComplexMatrix k_dot = effective_hamiltonian(l_dot);

            md.tr_ks = (k.array() * s.array()).sum().real();
            md.q_integrand = (k.array() * sdot.array()).sum().real();
            md.w_integrand = (k_dot.array() * s.array()).sum().real();
            if (opt.with_k_data) {
                md.k_trace = k.trace().real();
                const ComplexVector v =
                    ComplexVector::Constant(nx, Complex(1.0 / std::sqrt(double(nx)), 0.0));
                md.k_coll = (v.adjoint() * k * v)(0, 0).real();
                md.k_eps = nx > 1 ? (md.k_trace - md.k_coll) / double(nx - 1) : md.k_coll;
            }
        }
        // U_I from the cross-block sum; couplings are uniform gamma.
        ComplexVector mu2;
        mu2.noalias() = m * u2_.cast<Complex>();
        out.u_i = 2.0 * params_.gamma * (u1_.cast<Complex>().transpose() * mu2)(0, 0).real();
        return out;
    }

    // --------------------------- cluster evaluation --------------------------

    TimePointSample evaluate_clustered(double t, const PipelineOptions& opt) const {
        const auto& cd = clusters_;
        const std::size_t k = cd.reps.size();
        std::vector<Complex> ph(k);
        for (std::size_t g = 0; g < k; ++g) ph[g] = std::exp(-kImag * cd.reps[g] * t);

        TimePointSample out;
        Complex e1{}, e2{}, ui{}, tr1{}, tr2{};
        for (std::size_t g = 0; g < k; ++g)
            for (std::size_t gp = 0; gp < k; ++gp) {
                const Complex w = std::conj(ph[g]) * ph[gp];
                e1 += w * cd.block[0].h_proj(g, gp);
                e2 += w * cd.block[1].h_proj(g, gp);
                tr1 += w * cd.block[0].tr_proj(g, gp);
                tr2 += w * cd.block[1].tr_proj(g, gp);
                ui += w * cd.ui_proj(g, gp);
            }
        out.e1 = e1.real();
        out.e2 = e2.real();
        out.u_i = 2.0 * cd.gamma * ui.real();
        out.trace_s = tr1.real() + tr2.real();
        if (!opt.with_md) return out;

        for (int which = 1; which <= 2; ++which) {
            const auto& b = cd.block[which - 1];
            auto& md = out.md[which - 1];
            const Index r = b.rq;
            const double z0 = b.zeta0;

            Complex trs{}, trsd{};
            ComplexMatrix qsq = ComplexMatrix::Zero(r, r);
            ComplexMatrix qsdq = ComplexMatrix::Zero(r, r);
            for (std::size_t g = 0; g < k; ++g)
                for (std::size_t gp = 0; gp < k; ++gp) {
                    const Complex w = std::conj(ph[g]) * ph[gp];
                    const Complex wd = kImag * (cd.reps[g] - cd.reps[gp]) * w;
                    trs += w * b.tr_proj(g, gp);
                    trsd += wd * b.tr_proj(g, gp);
                    const Matrix& v = b.v_proj[g * k + gp];
                    qsq += w * v;
                    qsdq += wd * v;
                }

            if (r == 0) {
                // Single phase on this block: K = zeta0 I, K_dot = 0.
                md.tr_ks = z0 * trs.real();
                md.q_integrand = z0 * trsd.real();
                md.w_integrand = 0.0;
                md.condition = 1.0;
                if (opt.with_k_data) {
                    md.k_trace = z0 * double(b.nx);
                    md.k_coll = z0;
                    md.k_eps = z0;
                }
                continue;
            }

            const Index rc = static_cast<Index>(b.zeta_col.size());
            ComplexVector c(rc), d(rc), q(rc);
            for (Index j = 0; j < rc; ++j) {
                const double zj = b.zeta_col[static_cast<std::size_t>(j)];
                const Complex rot = std::exp(-kImag * (zj - z0) * t);
                c(j) = rot - 1.0;
                d(j) = -kImag * (zj * c(j) + (zj - z0));
                q(j) = z0 * z0 - zj * zj * rot;
            }
            const ComplexMatrix tc = b.tmat.cast<Complex>();
            const ComplexMatrix mc = tc * c.asDiagonal() * tc.transpose();
            const ComplexMatrix mdm = tc * d.asDiagonal() * tc.transpose();
            const ComplexMatrix mq = tc * q.asDiagonal() * tc.transpose();
            const ComplexMatrix core = ComplexMatrix::Identity(r, r) + mc;

            Eigen::JacobiSVD<ComplexMatrix> svd(core);
            const double smax = svd.singularValues().maxCoeff();
            const double smin = svd.singularValues().minCoeff();
            md.condition = std::max(smax, 1.0) / std::max(std::min(smin, 1.0), 1e-300);
            if (!(md.condition <= opt.kappa_max)) {
                md.ok = false;
                continue;
            }

            const ComplexMatrix nw = core.partialPivLu().solve(mc);
            const ComplexMatrix iw = ComplexMatrix::Identity(r, r) - nw;
            const ComplexMatrix f = kImag * z0 * nw + mdm * iw;
            const ComplexMatrix g2 =
                z0 * z0 * nw + mq * iw + 2.0 * kImag * z0 * f - f * f;
            const ComplexMatrix ktil = (f.adjoint() - f) / (2.0 * kImag);
            const ComplexMatrix ktil_dot = (g2.adjoint() - g2) / (2.0 * kImag);

            md.tr_ks = z0 * trs.real() + (ktil.array() * qsq.array()).sum().real();
            md.q_integrand = z0 * trsd.real() + (ktil.array() * qsdq.array()).sum().real();
            md.w_integrand = (ktil_dot.array() * qsq.array()).sum().real();
            if (opt.with_k_data) {
                md.k_trace = z0 * double(b.nx) + ktil.trace().real();
                const ComplexVector qvc = b.qv.cast<Complex>();
                md.k_coll = z0 + (qvc.adjoint() * ktil * qvc)(0, 0).real();
                md.k_eps =
                    b.nx > 1 ? (md.k_trace - md.k_coll) / double(b.nx - 1) : md.k_coll;
            }
        }
        return out;
    }

    // ------------------------------ precompute -------------------------------

    void build_clusters() {
        const EigenvalueClusters cl = cluster_eigenvalues(spec_.eigenvalues);
        clusters_.usable = false;
        if (cl.count() > 16 || cl.count() == spec_.eigenvalues.size()) return;
        clusters_.reps = cl.representative;
        clusters_.max_spread = cl.max_spread;
        clusters_.gamma = params_.gamma;
        const std::size_t k = cl.count();

        for (int which = 1; which <= 2; ++which) {
            auto& b = clusters_.block[which - 1];
            const Index nx = layout_.size(which);
            const Index off = layout_.offset(which);
            b.nx = nx;

            std::vector<Matrix> bg(k);
            std::vector<double> mass(k);
            for (std::size_t g = 0; g < k; ++g) {
                bg[g] = spec_.z.block(off, cl.ranges[g].first, nx,
                                      cl.ranges[g].second - cl.ranges[g].first);
                mass[g] = bg[g].squaredNorm();
            }
            b.dominant = static_cast<std::size_t>(
                std::max_element(mass.begin(), mass.end()) - mass.begin());
            b.zeta0 = cl.representative[b.dominant];

            // Stack kept non-dominant eigenvector slices.
            std::vector<Index> cols;
            b.zeta_col.clear();
            Index r = 0;
            for (std::size_t g = 0; g < k; ++g) {
                if (g == b.dominant || mass[g] <= 1e-24) continue;
                r += bg[g].cols();
                for (Index j = 0; j < bg[g].cols(); ++j)
                    b.zeta_col.push_back(cl.representative[g]);
                cols.push_back(static_cast<Index>(g));
            }
            if (r > 32) return;
            Matrix bprime(nx, r);
            Index at = 0;
            for (Index gi : cols) {
                bprime.middleCols(at, bg[gi].cols()) = bg[gi];
                at += bg[gi].cols();
            }

            Matrix qmat;
            if (r > 0) {
                Eigen::ColPivHouseholderQR<Matrix> qr(bprime);
                qr.setThreshold(1e-13);
                const Index rr = std::max<Index>(qr.rank(), 1);
                qmat = qr.householderQ() * Matrix::Identity(nx, rr);
                Matrix rfull = qr.matrixQR().topRows(rr).triangularView<Eigen::Upper>();
                b.tmat = rfull * qr.colsPermutation().transpose();
                b.rq = rr;
            } else {
                b.rq = 0;
            }

            // Moment-side projections over all cluster pairs.
            const Matrix hx = hm_.block(which);
            b.h_proj.setZero(k, k);
            b.tr_proj.setZero(k, k);
            b.v_proj.assign(k * k, Matrix());
            b.qv = Vector();
            std::vector<Matrix> a_g(k);
            for (std::size_t g = 0; g < k; ++g)
                if (b.rq > 0) a_g[g] = qmat.transpose() * bg[g];
            if (b.rq > 0)
                b.qv = qmat.transpose() *
                       Vector::Constant(nx, 1.0 / std::sqrt(static_cast<double>(nx)));
            for (std::size_t g = 0; g < k; ++g) {
                const Matrix hb = hx * bg[g];
                for (std::size_t gp = 0; gp < k; ++gp) {
                    const Matrix wgg = w_.block(cl.ranges[g].first, cl.ranges[gp].first,
                                                bg[g].cols(), bg[gp].cols());
                    b.h_proj(g, gp) = ((hb.transpose() * bg[gp]).array() * wgg.array()).sum();
                    b.tr_proj(g, gp) = ((bg[g].transpose() * bg[gp]).array() * wgg.array()).sum();
                    if (b.rq > 0)
                        b.v_proj[g * k + gp] = a_g[g] * wgg * a_g[gp].transpose();
                    else
                        b.v_proj[g * k + gp] = Matrix::Zero(0, 0);
                }
            }
        }

        // Interaction-energy projections from the cross-block row sums.
        clusters_.ui_proj.setZero(k, k);
        for (std::size_t g = 0; g < k; ++g) {
            const auto rg = cl.ranges[g];
            const Vector b1 =
                spec_.z.block(0, rg.first, layout_.n1, rg.second - rg.first).colwise().sum();
            for (std::size_t gp = 0; gp < k; ++gp) {
                const auto rp = cl.ranges[gp];
                const Vector b2 = spec_.z
                                      .block(layout_.n1, rp.first, layout_.n2,
                                             rp.second - rp.first)
                                      .colwise().sum();
                const Matrix wgg =
                    w_.block(rg.first, rp.first, rg.second - rg.first, rp.second - rp.first);
                clusters_.ui_proj(g, gp) = b1.transpose() * wgg * b2;
            }
        }
        clusters_.usable = true;
    }

    // ------------------------------- assembly --------------------------------

    ThermoTrajectory assemble(const std::vector<double>& times,
                              const std::vector<TimePointSample>& pts,
                              const PipelineOptions& opt) const {
        const std::size_t n = times.size();
        ThermoTrajectory tr;
        tr.t = times;
        tr.omega1 = params_.omega1;
        tr.e1.resize(n);
        tr.e2.resize(n);
        tr.u_i.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            tr.e1[i] = pts[i].e1;
            tr.e2[i] = pts[i].e2;
            tr.u_i[i] = pts[i].u_i - pts[0].u_i;
        }

        tr.at(1, Approach::wc) = weak_coupling_quantities(tr.e1);
        tr.at(2, Approach::wc) = weak_coupling_quantities(tr.e2);
        tr.at(1, Approach::interaction) = interaction_approach(tr.e2);
        tr.at(2, Approach::interaction) = interaction_approach(tr.e1);
        tr.at(1, Approach::bare) = bare_approach(tr.e1, tr.e2, tr.u_i);
        tr.at(2, Approach::bare) = bare_approach(tr.e2, tr.e1, tr.u_i);

        for (int which = 1; which <= 2 && opt.with_md; ++which) {
            MdGridData data;
            data.tr_ks.resize(n);
            data.q_integrand.resize(n);
            data.w_integrand.resize(n);
            data.ok.assign(n, 1);
            for (std::size_t i = 0; i < n; ++i) {
                const auto& md = pts[i].md[which - 1];
                data.ok[i] = md.ok;
                data.tr_ks[i] = md.tr_ks;
                data.q_integrand[i] = md.q_integrand;
                data.w_integrand[i] = md.w_integrand;
            }
            double lo = 0.0, hi = 0.0;
            bool first = true;
            for (std::size_t i = 0; i < n; ++i) {
                if (!data.ok[i]) continue;
                const double v = data.tr_ks[i] - data.tr_ks[0];
                lo = first ? v : std::min(lo, v);
                hi = first ? v : std::max(hi, v);
                first = false;
            }
            const double tol_abs = opt.tol_quad_rel * std::max(hi - lo, 1e-12);
            tr.tol_quad_abs[which - 1] = tol_abs;

            MdEvaluator eval = [this, which, &opt](double t) -> std::optional<MdPoint> {
                const TimePointSample s = evaluate(t, opt);
                const auto& md = s.md[which - 1];
                if (!md.ok) return std::nullopt;
                return MdPoint{md.tr_ks, md.q_integrand, md.w_integrand};
            };
            tr.at(which, Approach::md) = minimal_dissipation_quantities(data, times, eval, tol_abs);
            for (std::size_t i = 0; i < n; ++i)
                if (!tr.at(which, Approach::md).ok[i]) ++tr.gap_count;

            if (opt.with_k_data) {
                tr.k_trace[which - 1].resize(n);
                tr.k_eps[which - 1].resize(n);
                tr.k_coll[which - 1].resize(n);
                for (std::size_t i = 0; i < n; ++i) {
                    tr.k_trace[which - 1][i] = pts[i].md[which - 1].k_trace;
                    tr.k_eps[which - 1][i] = pts[i].md[which - 1].k_eps;
                    tr.k_coll[which - 1][i] = pts[i].md[which - 1].k_coll;
                }
            }
        }
        if (!opt.with_md) {
            for (int which = 1; which <= 2; ++which) {
                auto& s = tr.at(which, Approach::md);
                s.resize_all_ok(n);
                s.ok.assign(n, 0);
            }
        }
        fill_net_balances(tr);
        return tr;
    }

    ModelParams params_;
    std::vector<double> freqs_;
    HamiltonianMatrix hm_;
    Spectrum spec_;
    MomentMatrix s0_;
    BlockLayout layout_;
    Matrix w_;
    ComplexMatrix wc_;
    ComplexMatrix z1c_, z2c_;
    Vector u1_, u2_;
    ComplexMatrix h1c_, h2c_;
    detail::ClusterData clusters_;
};

inline ThermoTrajectory compute_trajectory(const ModelParams& params, const GridSpec& grid,
                                           const PipelineOptions& opt = {}) {
    return TrajectoryEngine(params).run(grid, opt);
}

}  // namespace thermoduet
