// scenario.hpp — Scenario ingestion (flat key=value configs), CSV emission,
// regime reporting, oracle-verification drivers, and parameter sweeps. This is
// the library side of the CLI; the binary in tools/ is a thin wrapper.

#pragma once

#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "thermoduet/analytic.hpp"
#include "thermoduet/fock.hpp"
#include "thermoduet/pipeline.hpp"

namespace thermoduet {

inline constexpr const char* kCsvSchemaTag = "# thermoduet trajectory schema v1";

enum class OutputGroup { energies, heats, works, balances, k_trace };

inline std::optional<OutputGroup> output_group_from_string(const std::string& s) {
    if (s == "energies") return OutputGroup::energies;
    if (s == "heats") return OutputGroup::heats;
    if (s == "works") return OutputGroup::works;
    if (s == "balances") return OutputGroup::balances;
    if (s == "effective_hamiltonian_trace") return OutputGroup::k_trace;
    return std::nullopt;
}

struct ScenarioConfig {
    ModelParams params;
    GridSpec grid{10.0, 201};
    std::set<OutputGroup> outputs{OutputGroup::energies, OutputGroup::heats, OutputGroup::works,
                                  OutputGroup::balances};
    int subsystem_mask{3};  // bit 0: subsystem 1, bit 1: subsystem 2
    std::string sweep_param;
    std::vector<double> sweep_values;

    void validate() const {
        params.validate();
        if (grid.n_points < 3) throw ConfigError("grid.n_points must be >= 3");
        if (!(grid.t_max > 0.0)) throw ConfigError("grid.t_max must be positive");
        if (subsystem_mask == 0) throw ConfigError("subsystems must select 1, 2, or both");
    }

    bool wants(OutputGroup g) const { return outputs.count(g) > 0; }
    bool emits_subsystem(int x) const { return (subsystem_mask >> (x - 1)) & 1; }
};

// ------------------------------ config parsing -------------------------------

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& s, int line) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw ConfigError("line " + std::to_string(line) + ": not a number: '" + s + "'");
    }
    if (pos != s.size())
        throw ConfigError("line " + std::to_string(line) + ": trailing characters in '" + s + "'");
    return v;
}

inline long long parse_int(const std::string& s, int line) {
    std::size_t pos = 0;
    long long v = 0;
    try {
        v = std::stoll(s, &pos);
    } catch (const std::exception&) {
        throw ConfigError("line " + std::to_string(line) + ": not an integer: '" + s + "'");
    }
    if (pos != s.size())
        throw ConfigError("line " + std::to_string(line) + ": trailing characters in '" + s + "'");
    return v;
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace detail

inline ScenarioConfig parse_scenario(std::istream& in) {
    ScenarioConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (value.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": empty value for '" + key + "'");

        if (key == "n1") cfg.params.n1 = static_cast<Index>(detail::parse_int(value, lineno));
        else if (key == "n2") cfg.params.n2 = static_cast<Index>(detail::parse_int(value, lineno));
        else if (key == "omega1") cfg.params.omega1 = detail::parse_double(value, lineno);
        else if (key == "omega2") cfg.params.omega2 = detail::parse_double(value, lineno);
        else if (key == "g1") cfg.params.g1 = detail::parse_double(value, lineno);
        else if (key == "g2") cfg.params.g2 = detail::parse_double(value, lineno);
        else if (key == "gamma") cfg.params.gamma = detail::parse_double(value, lineno);
        else if (key == "temp1") cfg.params.temp1 = detail::parse_double(value, lineno);
        else if (key == "temp2") cfg.params.temp2 = detail::parse_double(value, lineno);
        else if (key == "sigma") cfg.params.sigma = detail::parse_double(value, lineno);
        else if (key == "seed")
            cfg.params.seed = static_cast<std::uint64_t>(detail::parse_int(value, lineno));
        else if (key == "grid.t_max") cfg.grid.t_max = detail::parse_double(value, lineno);
        else if (key == "grid.n_points")
            cfg.grid.n_points = static_cast<Index>(detail::parse_int(value, lineno));
        else if (key == "outputs") {
            cfg.outputs.clear();
            for (const auto& item : detail::split_list(value)) {
                const auto g = output_group_from_string(item);
                if (!g)
                    throw ConfigError("line " + std::to_string(lineno) +
                                      ": unknown output group '" + item + "'");
                cfg.outputs.insert(*g);
            }
        } else if (key == "subsystems") {
            if (value == "1") cfg.subsystem_mask = 1;
            else if (value == "2") cfg.subsystem_mask = 2;
            else if (value == "both") cfg.subsystem_mask = 3;
            else
                throw ConfigError("line " + std::to_string(lineno) +
                                  ": subsystems must be 1, 2, or both");
        } else if (key == "sweep.param") {
            cfg.sweep_param = value;
        } else if (key == "sweep.values") {
            cfg.sweep_values.clear();
            for (const auto& item : detail::split_list(value))
                cfg.sweep_values.push_back(detail::parse_double(item, lineno));
        } else {
            throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }
    return cfg;
}

inline ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse_scenario(in);
}

// -------------------------------- CSV output ---------------------------------

namespace detail {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

inline void write_trajectory_csv(std::ostream& out, const ThermoTrajectory& tr,
                                 const ScenarioConfig& cfg) {
    out << kCsvSchemaTag << "\n";
    std::vector<std::string> header{"t_omega1"};
    const bool e = cfg.wants(OutputGroup::energies);
    const bool q = cfg.wants(OutputGroup::heats);
    const bool w = cfg.wants(OutputGroup::works);
    for (int x = 1; x <= 2; ++x) {
        if (!cfg.emits_subsystem(x)) continue;
        for (Approach a : kApproaches) {
            const std::string tag = "_" + std::to_string(x) + "_" + to_string(a);
            if (e) header.push_back("dU" + tag);
            if (q) header.push_back("dQ" + tag);
            if (w) header.push_back("dW" + tag);
        }
    }
    if (e) header.push_back("dU_I");
    if (cfg.wants(OutputGroup::balances)) {
        for (Approach a : kApproaches) {
            header.push_back(std::string("bal_dU_") + to_string(a));
            header.push_back(std::string("bal_dQ_") + to_string(a));
            header.push_back(std::string("bal_dW_") + to_string(a));
        }
    }
    if (cfg.wants(OutputGroup::k_trace)) {
        for (int x = 1; x <= 2; ++x)
            if (cfg.emits_subsystem(x)) header.push_back("K_trace_" + std::to_string(x));
    }
    for (std::size_t i = 0; i < header.size(); ++i)
        out << header[i] << (i + 1 < header.size() ? "," : "\n");

    const std::size_t n = tr.t.size();
    for (std::size_t k = 0; k < n; ++k) {
        std::vector<std::string> row;
        row.push_back(detail::format_double(tr.t[k] * tr.omega1));
        auto emit = [&row](double v, bool ok) {
            row.push_back(ok ? detail::format_double(v) : std::string());
        };
        for (int x = 1; x <= 2; ++x) {
            if (!cfg.emits_subsystem(x)) continue;
            for (Approach a : kApproaches) {
                const ApproachSeries& s = tr.at(x, a);
                if (e) emit(s.du[k], s.ok[k]);
                if (q) emit(s.dq[k], s.ok[k]);
                if (w) emit(s.dw[k], s.ok[k]);
            }
        }
        if (e) row.push_back(detail::format_double(tr.u_i[k]));
        if (cfg.wants(OutputGroup::balances)) {
            for (Approach a : kApproaches) {
                const BalanceSeries& b = tr.balance(a);
                emit(b.du[k], b.ok[k]);
                emit(b.dq[k], b.ok[k]);
                emit(b.dw[k], b.ok[k]);
            }
        }
        if (cfg.wants(OutputGroup::k_trace)) {
            for (int x = 1; x <= 2; ++x) {
                if (!cfg.emits_subsystem(x)) continue;
                const bool ok = !tr.k_trace[x - 1].empty() && tr.at(x, Approach::md).ok[k];
                emit(ok ? tr.k_trace[x - 1][k] : 0.0, ok);
            }
        }
        for (std::size_t i = 0; i < row.size(); ++i)
            out << row[i] << (i + 1 < row.size() ? "," : "\n");
    }
}

inline std::string format_regime_report(const RegimeReport& r) {
    std::ostringstream os;
    os << "regime report" << (r.nominal ? " (nominal: sigma > 0, central frequencies used)" : "")
       << "\n"
       << "  nu1 = " << r.nu1 << "\n"
       << "  nu2 = " << r.nu2 << "\n"
       << "  delta = " << r.delta << "\n"
       << "  Gamma = " << r.big_gamma << "\n"
       << "  Omega = " << r.big_omega << "\n"
       << "  coupling regime: " << to_string(r.coupling_regime) << "\n"
       << "  collectivity: subsystem 1 " << to_string(r.collectivity1) << ", subsystem 2 "
       << to_string(r.collectivity2) << "\n";
    return os.str();
}

// ----------------------------------- run -------------------------------------

struct RunResult {
    ThermoTrajectory trajectory;
    RegimeReport regime;
    int warning_count{0};
};

inline RunResult run_scenario(const ScenarioConfig& cfg, const PipelineOptions& opt) {
    cfg.validate();
    PipelineOptions o = opt;
    o.with_k_data = o.with_k_data || cfg.wants(OutputGroup::k_trace);
    RunResult res;
    res.regime = classify_regime(cfg.params);
    res.trajectory = compute_trajectory(cfg.params, cfg.grid, o);
    res.warning_count = res.trajectory.gap_count;
    return res;
}

// ------------------------------ verify-analytic ------------------------------

struct VerifyLine {
    std::string name;
    double deviation{0.0};
    double tolerance{0.0};
    bool pass{true};
};

struct VerifyReport {
    std::vector<VerifyLine> lines;
    bool pass{true};
    double elapsed_seconds{0.0};

    void add(const std::string& name, double dev, double tol) {
        lines.push_back({name, dev, tol, dev <= tol});
        pass = pass && dev <= tol;
    }
};

namespace detail {

inline double scale_relative_deviation(const std::vector<double>& num,
                                       const std::vector<double>& ana,
                                       const std::vector<char>* ok = nullptr,
                                       double scale_floor = 0.0) {
    double dev = 0.0, scale = scale_floor;
    for (std::size_t i = 0; i < num.size(); ++i) {
        if (ok && !(*ok)[i]) continue;
        dev = std::max(dev, std::abs(num[i] - ana[i]));
        scale = std::max(scale, std::abs(ana[i]));
    }
    return scale > 0.0 ? dev / scale : dev;
}

}  // namespace detail

// Run the numeric pipeline and the closed forms on the same grid over one
// collective period [0, 2 pi / Omega] and report scale-relative deviations.
// Requires sigma = 0. Optional Hamiltonian override supports fault-injection
// self-tests.
inline VerifyReport verify_analytic(const ScenarioConfig& cfg, const PipelineOptions& opt,
                                    const Matrix* h_override = nullptr) {
    cfg.validate();
    if (cfg.params.sigma != 0.0)
        throw ConfigError("verify-analytic requires sigma = 0 (homogeneous closed forms)");

    const auto d = analytic::HomogeneousDerived::from_params(cfg.params);
    const double t_max_omega1 = d.period() * cfg.params.omega1;

    PipelineOptions o = opt;
    o.with_k_data = true;

    const auto start = std::chrono::steady_clock::now();
    const ModelParams& p = cfg.params;
    auto make_engine = [&]() {
        if (h_override == nullptr) return TrajectoryEngine(p);
        HamiltonianMatrix hm;
        hm.h = *h_override;
        hm.n1 = p.n1;
        hm.n2 = p.n2;
        return TrajectoryEngine(p, hm);
    };
    const TrajectoryEngine engine = make_engine();
    GridSpec grid{t_max_omega1, cfg.grid.n_points};
    const ThermoTrajectory tr = engine.run(grid, o);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const std::size_t n = tr.t.size();
    std::vector<double> a_de1(n), a_de2(n), a_ui(n), a_du1md(n), a_du2md(n), a_int1(n), a_int2(n);
    std::vector<double> a_q1(n), a_q2(n), a_w1(n), a_w2(n), a_keps1(n), a_keps2(n), a_kcoll1(n),
        a_kcoll2(n);
    std::vector<char> k_ok1(n, 1), k_ok2(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = tr.t[i];
        const auto ev = analytic::analytic_energies(d, t);
        a_de1[i] = ev.de1;
        a_de2[i] = ev.de2;
        a_ui[i] = ev.du_i;
        a_du1md[i] = ev.du1_md;
        a_du2md[i] = ev.du2_md;
        a_int1[i] = -ev.de2;
        a_int2[i] = -ev.de1;
        const auto hw1 = analytic::md_heat_work(d, t, 1);
        const auto hw2 = analytic::md_heat_work(d, t, 2);
        a_q1[i] = hw1.dq;
        a_w1[i] = hw1.dw;
        a_q2[i] = hw2.dq;
        a_w2[i] = hw2.dw;
        const auto k1 = analytic::analytic_effective_hamiltonian(d, t, 1);
        const auto k2 = analytic::analytic_effective_hamiltonian(d, t, 2);
        k_ok1[i] = k1.has_value();
        k_ok2[i] = k2.has_value();
        a_keps1[i] = k1 ? k1->eps : 0.0;
        a_kcoll1[i] = k1 ? k1->collective : 0.0;
        a_keps2[i] = k2 ? k2->eps : 0.0;
        a_kcoll2[i] = k2 ? k2->collective : 0.0;
    }

    VerifyReport rep;
    rep.elapsed_seconds = elapsed;
    const double tol_exact = 1e-8;
    const double tol_quad = 1e-6;
    using detail::scale_relative_deviation;
    rep.add("dE_1", scale_relative_deviation(tr.at(1, Approach::wc).du, a_de1), tol_exact);
    rep.add("dE_2", scale_relative_deviation(tr.at(2, Approach::wc).du, a_de2), tol_exact);
    rep.add("dU_1_int", scale_relative_deviation(tr.at(1, Approach::interaction).du, a_int1),
            tol_exact);
    rep.add("dU_2_int", scale_relative_deviation(tr.at(2, Approach::interaction).du, a_int2),
            tol_exact);
    rep.add("dU_I", scale_relative_deviation(tr.u_i, a_ui), tol_exact);
    rep.add("dU_1_md",
            scale_relative_deviation(tr.at(1, Approach::md).du, a_du1md,
                                     &tr.at(1, Approach::md).ok),
            tol_exact);
    rep.add("dU_2_md",
            scale_relative_deviation(tr.at(2, Approach::md).du, a_du2md,
                                     &tr.at(2, Approach::md).ok),
            tol_exact);
    rep.add("dQ_1_md",
            scale_relative_deviation(tr.at(1, Approach::md).dq, a_q1, &tr.at(1, Approach::md).ok),
            tol_quad);
    rep.add("dQ_2_md",
            scale_relative_deviation(tr.at(2, Approach::md).dq, a_q2, &tr.at(2, Approach::md).ok),
            tol_quad);
    rep.add("dW_1_md",
            scale_relative_deviation(tr.at(1, Approach::md).dw, a_w1, &tr.at(1, Approach::md).ok),
            tol_quad);
    rep.add("dW_2_md",
            scale_relative_deviation(tr.at(2, Approach::md).dw, a_w2, &tr.at(2, Approach::md).ok),
            tol_quad);

    std::vector<char> ok1(n), ok2(n);
    for (std::size_t i = 0; i < n; ++i) {
        ok1[i] = k_ok1[i] && tr.at(1, Approach::md).ok[i];
        ok2[i] = k_ok2[i] && tr.at(2, Approach::md).ok[i];
    }
    rep.add("K_eps_1", scale_relative_deviation(tr.k_eps[0], a_keps1, &ok1), tol_exact);
    rep.add("K_coll_1", scale_relative_deviation(tr.k_coll[0], a_kcoll1, &ok1), tol_exact);
    rep.add("K_eps_2", scale_relative_deviation(tr.k_eps[1], a_keps2, &ok2), tol_exact);
    rep.add("K_coll_2", scale_relative_deviation(tr.k_coll[1], a_kcoll2, &ok2), tol_exact);
    return rep;
}

// -------------------------------- verify-fock --------------------------------

// Gaussian engine against the truncated-Fock brute force over four exchange
// periods. Tiny instances only.
inline VerifyReport verify_fock(const ScenarioConfig& cfg, const PipelineOptions& opt) {
    cfg.validate();
    (void)opt;
    if (cfg.params.total_modes() > 3)
        throw ConfigError("verify-fock is limited to n1 + n2 <= 3 modes");

    const auto start = std::chrono::steady_clock::now();
    TrajectoryEngine engine(cfg.params);
    fock::FockConfig fcfg{engine.hamiltonian(), cfg.params.temp1, cfg.params.temp2, 0};
    fock::FockSimulator sim(fcfg);
    const double tail = fcfg.tail_weight();
    const double bound = 10.0 * tail;

    const RegimeReport regime = classify_regime(cfg.params);
    const double omega_exchange =
        regime.big_omega > 0.0 ? regime.big_omega : cfg.params.omega1;
    const double t_end = 4.0 * 2.0 * M_PI / omega_exchange;
    const int samples = 61;

    double dev = 0.0, anomalous = 0.0, number_drift = 0.0;
    double number0 = 0.0;
    for (int k = 0; k < samples; ++k) {
        const double t = t_end * k / (samples - 1);
        const MomentMatrix gauss = engine.moments_at(t);
        const fock::FockMeasurement meas = sim.measure(t);
        dev = std::max(dev, max_abs(ComplexMatrix(gauss.s - meas.occupations)));
        anomalous = std::max(anomalous, meas.max_anomalous);
        if (k == 0) number0 = meas.total_number;
        else number_drift = std::max(number_drift, std::abs(meas.total_number - number0));
    }

    VerifyReport rep;
    rep.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rep.add("fock_moment_deviation", dev, bound);
    rep.add("fock_anomalous_moments", anomalous, bound);
    rep.add("fock_number_conservation", number_drift,
            1e-10 * std::max(1.0, std::abs(number0)));
    return rep;
}

// ----------------------------------- sweep -----------------------------------

struct BalanceRatio {
    Approach approach;
    int quantity;  // 0: dU, 1: dQ, 2: dW
    double ratio{0.0};
    bool structural_zero{false};
};

inline const char* quantity_name(int q) { return q == 0 ? "dU" : (q == 1 ? "dQ" : "dW"); }

// Balance magnitude relative to the larger of the two per-subsystem series,
// per approach and quantity. Structural zeros (wc and interaction work) are
// marked instead of reported as ratios.
inline std::vector<BalanceRatio> balance_ratios(const ThermoTrajectory& tr) {
    std::vector<BalanceRatio> out;
    for (Approach a : kApproaches) {
        for (int q = 0; q < 3; ++q) {
            BalanceRatio r;
            r.approach = a;
            r.quantity = q;
            if (q == 2 && (a == Approach::wc || a == Approach::interaction)) {
                r.structural_zero = true;
                out.push_back(r);
                continue;
            }
            auto pick = [&](const ApproachSeries& s) -> const std::vector<double>& {
                return q == 0 ? s.du : (q == 1 ? s.dq : s.dw);
            };
            auto pickb = [&](const BalanceSeries& b) -> const std::vector<double>& {
                return q == 0 ? b.du : (q == 1 ? b.dq : b.dw);
            };
            double denom = 0.0, num = 0.0;
            const auto& s1 = tr.at(1, a);
            const auto& s2 = tr.at(2, a);
            const auto& b = tr.balance(a);
            for (std::size_t i = 0; i < tr.t.size(); ++i) {
                if (s1.ok[i]) denom = std::max(denom, std::abs(pick(s1)[i]));
                if (s2.ok[i]) denom = std::max(denom, std::abs(pick(s2)[i]));
                if (b.ok[i]) num = std::max(num, std::abs(pickb(b)[i]));
            }
            r.ratio = denom > 0.0 ? num / denom : 0.0;
            out.push_back(r);
        }
    }
    return out;
}

// Late-window variance over early-window variance; below threshold flags a
// thermalization plateau.
inline double plateau_variance_ratio(const std::vector<double>& series) {
    const std::size_t n = series.size();
    const std::size_t w = std::max<std::size_t>(2, n / 5);
    auto variance = [&](std::size_t begin, std::size_t count) {
        double mean = 0.0;
        for (std::size_t i = begin; i < begin + count; ++i) mean += series[i];
        mean /= static_cast<double>(count);
        double var = 0.0;
        for (std::size_t i = begin; i < begin + count; ++i)
            var += (series[i] - mean) * (series[i] - mean);
        return var / static_cast<double>(count);
    };
    const double early = variance(0, w);
    const double late = variance(n - w, w);
    return early > 0.0 ? late / early : (late > 0.0 ? 1e300 : 0.0);
}

inline constexpr double kPlateauThreshold = 0.05;

struct SweepPoint {
    double value{0.0};
    bool failed{false};
    std::string error;
    int gap_count{0};
    std::vector<BalanceRatio> ratios;
    double plateau_ratio{0.0};
    bool plateau{false};
    std::string csv_name;
};

inline ModelParams with_parameter(const ModelParams& base, const std::string& name, double value) {
    ModelParams p = base;
    if (name == "gamma") p.gamma = value;
    else if (name == "g") { p.g1 = value; p.g2 = value; }
    else if (name == "g1") p.g1 = value;
    else if (name == "g2") p.g2 = value;
    else if (name == "omega1") p.omega1 = value;
    else if (name == "omega2") p.omega2 = value;
    else if (name == "temp1") p.temp1 = value;
    else if (name == "temp2") p.temp2 = value;
    else if (name == "sigma") p.sigma = value;
    else if (name == "seed") p.seed = static_cast<std::uint64_t>(value);
    else throw ConfigError("unknown sweep parameter '" + name + "'");
    return p;
}

struct SweepResult {
    std::vector<SweepPoint> points;
    int failures{0};
};

inline SweepResult run_sweep(const ScenarioConfig& cfg, const PipelineOptions& opt,
                             const std::string& out_dir) {
    cfg.validate();
    if (cfg.sweep_param.empty() || cfg.sweep_values.empty())
        throw ConfigError("sweep requires sweep.param and a non-empty sweep.values list");
    std::filesystem::create_directories(out_dir);

    SweepResult result;
    for (std::size_t i = 0; i < cfg.sweep_values.size(); ++i) {
        SweepPoint pt;
        pt.value = cfg.sweep_values[i];
        try {
            ScenarioConfig point_cfg = cfg;
            point_cfg.params = with_parameter(cfg.params, cfg.sweep_param, pt.value);
            const RunResult run = run_scenario(point_cfg, opt);
            pt.gap_count = run.warning_count;
            pt.ratios = balance_ratios(run.trajectory);
            pt.plateau_ratio = plateau_variance_ratio(run.trajectory.at(1, Approach::bare).du);
            pt.plateau = pt.plateau_ratio < kPlateauThreshold;
            std::ostringstream name;
            name << "point_" << i << "_" << cfg.sweep_param << "_" << pt.value << ".csv";
            pt.csv_name = name.str();
            std::ofstream out(std::filesystem::path(out_dir) / pt.csv_name);
            write_trajectory_csv(out, run.trajectory, point_cfg);
        } catch (const std::exception& e) {
            pt.failed = true;
            pt.error = e.what();
            ++result.failures;
        }
        result.points.push_back(std::move(pt));
    }

    std::ofstream summary(std::filesystem::path(out_dir) / "summary.csv");
    summary << "point," << cfg.sweep_param << ",failed,gaps,plateau_ratio,plateau";
    for (Approach a : kApproaches)
        for (int q = 0; q < 3; ++q)
            summary << ",ratio_" << quantity_name(q) << "_" << to_string(a);
    summary << "\n";
    for (std::size_t i = 0; i < result.points.size(); ++i) {
        const auto& pt = result.points[i];
        summary << i << "," << detail::format_double(pt.value) << "," << (pt.failed ? 1 : 0) << ","
                << pt.gap_count << "," << detail::format_double(pt.plateau_ratio) << ","
                << (pt.plateau ? 1 : 0);
        for (std::size_t r = 0; r < pt.ratios.size(); ++r) {
            if (pt.failed || pt.ratios[r].structural_zero) summary << ",";
            else summary << "," << detail::format_double(pt.ratios[r].ratio);
        }
        summary << "\n";
    }
    return result;
}

}  // namespace thermoduet
