#pragma once

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "qpump/dnls/waveguide.hpp"
#include "qpump/experiments/config.hpp"
#include "qpump/experiments/csv.hpp"
#include "qpump/experiments/presets.hpp"
#include "qpump/experiments/pumping.hpp"
#include "qpump/io/json_convert.hpp"
#include "qpump/soliton/io.hpp"
#include "qpump/units/units.hpp"
#include "qpump/variational/effective.hpp"
#include "qpump/version.hpp"

namespace qpump::runner {

using nlohmann::json;
namespace fs = std::filesystem;

inline constexpr const char* kManifestSchema = "qpump.manifest/1";

// ---------------------------------------------------------------- config readers

inline SuperlatticeSpec spec_from_config(const json& cfg) {
    const auto& s = cfg.at("spec");
    SuperlatticeSpec out;
    out.p1 = s.at("p1").get<double>();
    out.p2 = s.at("p2").get<double>();
    out.alpha = AlphaValue::parse(s.at("alpha").get<std::string>());
    out.drive.v = s.at("v").get<double>();
    out.drive.phi0 = s.at("phi0").get<double>();
    out.sliding = sliding_from_string(s.at("sliding").get<std::string>());
    return out;
}

inline PumpNumerics numerics_from_config(const json& cfg) {
    const auto& n = cfg.at("numerics");
    PumpNumerics num;
    num.box_min = n.at("box_min").get<double>();
    num.points_per_unit = n.at("points_per_unit").get<double>();
    num.propagation.dt = n.at("dt").get<double>();
    num.propagation.samples_per_cycle = n.at("samples_per_cycle").get<std::size_t>();
    num.propagation.nonlinear_phase_cap = n.at("nonlinear_phase_cap").get<double>();
    num.propagation.edge_tol = n.at("edge_tol").get<double>();
    num.propagation.norm_abort = n.at("norm_abort").get<double>();
    num.solve.newton.tol = n.at("newton_tol").get<double>();
    num.solve.norm_tol = n.at("norm_tol").get<double>();
    return num;
}

/// Analysis basis named in the config: superlattice, approximant (of the
/// configured order), sliding (single sliding lattice) or none.
inline std::optional<AnalysisBasis> basis_from_config(const json& cfg, const SuperlatticeSpec& s,
                                                      std::optional<std::string> kind_override = std::nullopt) {
    const auto& a = cfg.at("analysis");
    const std::string kind = kind_override ? *kind_override : a.at("basis").get<std::string>();
    if (kind == "none") return std::nullopt;
    AnalysisBasis b;
    if (kind == "superlattice") {
        if (!s.period()) throw std::invalid_argument("analysis.basis=superlattice needs a periodic lattice");
        b.spec = s;
    } else if (kind == "approximant") {
        b.spec = with_alpha(s, approximant_of(s.alpha, a.at("basis_order").get<int>()).alpha());
    } else if (kind == "sliding") {
        b = sliding_lattice_basis(s);
    } else {
        throw std::invalid_argument("analysis.basis must be superlattice, approximant, sliding or none");
    }
    b.n_bands = a.at("n_bands").get<int>();
    b.radius = a.at("radius").get<int>();
    b.occupation_threshold = a.at("occupation_threshold").get<double>();
    b.max_plane_waves = a.at("max_plane_waves").get<std::size_t>();
    return b;
}

inline units::PhysicalSystem units_from_config(const json& cfg) {
    units::PhysicalSystem ps = units::lithium7();
    if (!cfg.contains("units")) return ps;
    const auto& u = cfg.at("units");
    if (u.value("system", std::string("li7")) != "li7") throw std::invalid_argument("units.system must be li7");
    ps.mass = u.value("mass", ps.mass);
    ps.d1 = u.value("d1", ps.d1);
    ps.a_s = u.value("a_s", ps.a_s);
    ps.omega_perp = u.value("omega_perp", ps.omega_perp);
    return ps;
}

/// Checks everything that can be checked without running. Throws with a
/// message naming the offending key.
inline void validate(const json& cfg) {
    const std::string exp = cfg.at("experiment").get<std::string>();
    if (!presets::exists(exp)) throw std::invalid_argument("unknown experiment '" + exp + "'");
    if (exp == "figS3_dnls") {
        const auto& d = cfg.at("dnls");
        if (d.at("J").size() != d.at("norm").size()) throw std::invalid_argument("dnls.J and dnls.norm differ in length");
        for (std::size_t i = 0; i < d.at("J").size(); ++i) {
            dnls::WaveguideConfig w;
            w.J = d.at("J")[i].get<double>();
            w.norm_N = d.at("norm")[i].get<double>();
            w.K = d.at("K").get<double>();
            w.p = d.at("p").get<int>();
            w.q = d.at("q").get<int>();
            w.n_sites = d.at("n_sites").get<int>();
            w.validate();
        }
        if (!(d.at("dz").get<double>() > 0.0)) throw std::invalid_argument("dnls.dz must be positive");
        return;
    }
    const auto s = spec_from_config(cfg);
    s.validate();
    const auto num = numerics_from_config(cfg);
    if (!(num.propagation.dt > 0.0 && num.propagation.dt <= 1e-2)) throw std::invalid_argument("numerics.dt must lie in (0, 1e-2]");
    if (num.box_min * num.points_per_unit < static_cast<double>(kProductionMinPoints)) {
        throw std::invalid_argument("numerics: box_min * points_per_unit below the resolution guard of " +
                                    std::to_string(kProductionMinPoints) + " points");
    }
    if (!(cfg.at("soliton").at("norm").get<double>() > 0.0)) throw std::invalid_argument("soliton.norm must be positive");
    if (cfg.at("run").at("cycles").get<int>() < 1) throw std::invalid_argument("run.cycles must be at least 1");
    if (exp == "custom" || exp == "fig1a_golden" || exp == "fig1cd_sqrt3") (void)basis_from_config(cfg, s);
    if (cfg.contains("scan")) {
        const auto& sc = cfg.at("scan");
        const auto target = sc.contains("target") ? AlphaValue::parse(sc.at("target").get<std::string>()) : s.alpha;
        for (const auto& o : sc.at("orders")) (void)approximant_of(target, o.get<int>());
    }
    if (cfg.contains("sweep")) {
        for (const auto& a : cfg.at("sweep").at("alphas")) (void)AlphaValue::parse(a.get<std::string>());
    }
}

// ---------------------------------------------------------------- outputs

class RunContext {
public:
    RunContext(json cfg, fs::path out) : cfg_(std::move(cfg)), out_(std::move(out)) {}

    [[nodiscard]] const json& config() const { return cfg_; }
    [[nodiscard]] const fs::path& dir() const { return out_; }
    json summary = json::object();
    json checks = json::object();

    void write_table(const std::string& file, const csv::Table& t) {
        csv::write(out_ / file, t);
        outputs_.push_back(file);
    }
    void write_soliton(const std::string& file, const SolitonSolution& s) {
        save_solution(out_ / file, s);
        outputs_.push_back(file);
    }
    [[nodiscard]] const std::vector<std::string>& outputs() const { return outputs_; }

    void check(const std::string& name, bool pass, json detail = json::object()) {
        detail["pass"] = pass;
        checks[name] = std::move(detail);
    }

private:
    json cfg_;
    fs::path out_;
    std::vector<std::string> outputs_;
};

inline csv::Table trajectory_table(const PumpTrajectory& tr, const std::string& name, int n_bands) {
    csv::Table t;
    t.schema = "trajectory";
    t.meta = {{"name", name}, {"provenance", tr.provenance}, {"spec", to_json(tr.spec)}};
    t.add_column("t", tr.times);
    t.add_column("phi", tr.phi_values);
    t.add_column("x_c", tr.x_c);
    const std::size_t n = tr.times.size();
    t.add_column("delta", tr.delta.size() == n ? tr.delta : std::vector<double>(n, std::nan("")));
    const auto nb = static_cast<std::size_t>(std::max(1, n_bands));
    for (std::size_t b = 0; b < nb; ++b) {
        const bool have = b < tr.rho.size() && tr.rho[b].size() == n;
        t.add_column("rho_" + std::to_string(b + 1), have ? tr.rho[b] : std::vector<double>(n, std::nan("")));
    }
    t.add_column("delta_decomposed",
                 tr.delta_decomposed.size() == n ? tr.delta_decomposed : std::vector<double>(n, std::nan("")));
    t.add_column("norm", tr.norms);
    return t;
}

inline json trajectory_summary(const PumpOutcome& o) {
    const auto& tr = o.trajectory;
    json j;
    j["box"] = o.grid.length();
    j["points"] = o.grid.size();
    j["mu"] = o.soliton.mu;
    j["soliton_residual"] = o.soliton.residual;
    j["per_cycle_displacement"] = tr.per_cycle_displacement;
    j["net_displacement"] = o.net;
    double mean = 0.0;
    for (double d : tr.per_cycle_displacement) mean += d;
    j["mean_per_cycle"] = tr.per_cycle_displacement.empty() ? 0.0 : mean / static_cast<double>(tr.per_cycle_displacement.size());
    j["max_norm_drift"] = tr.max_norm_drift;
    j["max_edge_ratio"] = tr.max_edge_ratio;
    j["dt"] = tr.dt;
    j["aborted"] = tr.aborted;
    if (tr.aborted) j["diagnostic"] = tr.diagnostic;
    if (!tr.rho.empty()) j["min_rho1"] = min_finite(tr.rho[0]);
    return j;
}

inline std::string safe_name(std::string s) {
    for (char& c : s) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) c = '_';
    }
    return s;
}

/// Number as it appears in check and file names: 20 -> "20", 0.15 -> "0.15".
inline std::string name_number(double v) {
    if (v == std::round(v) && std::abs(v) < 1e15) return std::to_string(std::llround(v));
    return csv::format_number(v);
}

// ---------------------------------------------------------------- experiments

inline PumpOutcome single_run(RunContext& ctx, const SuperlatticeSpec& s, const std::optional<AnalysisBasis>& basis,
                              const std::string& name, int cycles) {
    const auto& cfg = ctx.config();
    PumpCase pc{name, s, std::nullopt, cfg.at("soliton").at("norm").get<double>(), cycles, basis};
    auto o = run_pump_case(pc, numerics_from_config(cfg));
    ctx.write_soliton(name + "_soliton.bin", o.soliton);
    ctx.write_table(name + ".csv", trajectory_table(o.trajectory, name, basis ? basis->n_bands : cfg.at("analysis").at("n_bands").get<int>()));
    return o;
}

inline void exp_single(RunContext& ctx) {
    const auto& cfg = ctx.config();
    const auto s = spec_from_config(cfg);
    const auto basis = basis_from_config(cfg, s);
    const int cycles = cfg.at("run").at("cycles").get<int>();
    auto o = single_run(ctx, s, basis, "trajectory", cycles);
    ctx.summary["trajectory"] = trajectory_summary(o);
    const std::string exp = cfg.at("experiment").get<std::string>();
    if (s.period()) {
        if (auto C = lowest_band_chern(s)) {
            const double L = *s.period();
            ctx.summary["chern"] = *C;
            ctx.summary["period_L"] = L;
            ctx.check("quantized_first_cycle", std::abs(o.first_cycle - *C * L) / L < 0.02,
                      {{"displacement", o.first_cycle}, {"expected", *C * L}});
        }
    }
    if (exp == "fig1cd_sqrt3" || (basis && basis->spec.p1 == 0.0)) {
        const auto sl = sliding_lattice_basis(s);
        const auto C = lowest_band_chern(sl.spec);
        const double a = s.alpha.value();
        const double mean = ctx.summary["trajectory"]["mean_per_cycle"].get<double>();
        ctx.summary["sliding_chern"] = C ? json(*C) : json(nullptr);
        ctx.check("quasi_quantized", C && std::abs(mean - *C * a) / a < 0.1, {{"mean_per_cycle", mean}, {"C_alpha", C ? *C * a : 0.0}});
        if (basis && !o.trajectory.rho.empty()) {
            const double r1 = min_finite(o.trajectory.rho[0]);
            ctx.check("rho1_sustained", r1 > 0.9, {{"min_rho1", r1}});
        }
    }
}

inline csv::Table scan_table(const ScanResult& r) {
    csv::Table t;
    t.schema = "approximant_scan";
    t.meta = {{"target", r.target.label()}, {"n_c", r.n_c}};
    std::vector<double> order, alpha, L, chern, disp, ratio, quant, rho, net;
    auto push = [&](const ScanEntry& e, double ord) {
        order.push_back(ord);
        alpha.push_back(to_double(e.approximant.value));
        L.push_back(to_double(e.approximant.period_L));
        chern.push_back(e.chern ? *e.chern : std::nan(""));
        disp.push_back(e.displacement);
        ratio.push_back(e.ratio);
        quant.push_back(e.quantized ? 1.0 : 0.0);
        rho.push_back(e.min_rho1);
        net.push_back(e.net);
    };
    for (const auto& e : r.entries) push(e, e.order);
    // the tilted run is tagged with a negative order
    if (r.tilted) push(*r.tilted, -r.tilt_order);
    t.add_column("order", order);
    t.add_column("alpha", alpha);
    t.add_column("L", L);
    t.add_column("chern", chern);
    t.add_column("displacement", disp);
    t.add_column("ratio", ratio);
    t.add_column("quantized", quant);
    t.add_column("min_rho1", rho);
    t.add_column("net", net);
    return t;
}

inline json scan_summary(const ScanResult& r) {
    json j;
    j["target"] = r.target.label();
    j["n_c"] = r.n_c;
    j["skipped_degenerate"] = r.skipped_degenerate;
    json entries = json::array();
    for (const auto& e : r.entries) {
        entries.push_back({{"order", e.order},
                           {"alpha", to_string(e.approximant.value)},
                           {"L", to_double(e.approximant.period_L)},
                           {"chern", e.chern ? json(*e.chern) : json(nullptr)},
                           {"displacement", e.displacement},
                           {"ratio", e.ratio},
                           {"quantized", e.quantized},
                           {"max_norm_drift", e.outcome.trajectory.max_norm_drift}});
    }
    j["entries"] = entries;
    if (r.tilted) {
        j["tilted"] = {{"base_order", r.tilt_order}, {"displacement", r.tilted->displacement}, {"min_rho1", r.tilted->min_rho1}};
    }
    return j;
}

inline void write_scan_trajectories(RunContext& ctx, const ScanResult& r, int n_bands) {
    for (const auto& e : r.entries) {
        ctx.write_table("trajectory_order" + std::to_string(e.order) + ".csv",
                        trajectory_table(e.outcome.trajectory, "order_" + std::to_string(e.order), n_bands));
    }
    if (r.tilted) {
        ctx.write_table("trajectory_H" + std::to_string(r.tilt_order) + "W.csv",
                        trajectory_table(r.tilted->outcome.trajectory, "tilted", n_bands));
    }
}

inline void exp_approximant_scan(RunContext& ctx) {
    const auto& cfg = ctx.config();
    const auto s = spec_from_config(cfg);
    const auto& sc = cfg.at("scan");
    ScanOptions opt;
    opt.orders = sc.at("orders").get<std::vector<int>>();
    opt.quantization_tol = sc.at("quantization_tol").get<double>();
    if (sc.at("tilt_order").get<int>() >= 0) opt.tilt_order = sc.at("tilt_order").get<int>();
    if (sc.at("basis_order").get<int>() >= 0) opt.basis_order = sc.at("basis_order").get<int>();
    const auto res = approximant_scan(s, s.alpha, cfg.at("soliton").at("norm").get<double>(),
                                      cfg.at("run").at("cycles").get<int>(), opt, numerics_from_config(cfg));
    ctx.write_table("approximant_scan.csv", scan_table(res));
    write_scan_trajectories(ctx, res, cfg.at("analysis").at("n_bands").get<int>());
    ctx.summary["scan"] = scan_summary(res);
    // convergence of the supercritical orders against the critical one
    const ScanEntry* crit = nullptr;
    std::vector<const ScanEntry*> high;
    for (const auto& e : res.entries) {
        if (e.order == res.n_c) crit = &e;
        if (res.n_c >= 0 && e.order > res.n_c) high.push_back(&e);
    }
    if (crit && high.size() >= 2) {
        const double Lc = to_double(crit->approximant.period_L);
        double spread = 0.0, sep = INFINITY;
        for (const auto* a : high) {
            sep = std::min(sep, std::abs(a->displacement - crit->displacement));
            for (const auto* b : high) spread = std::max(spread, std::abs(a->displacement - b->displacement));
        }
        ctx.check("supercritical_agree", spread < 0.05 * Lc, {{"spread", spread}, {"limit", 0.05 * Lc}});
        ctx.check("supercritical_distinct", sep > 0.2 * Lc, {{"separation", sep}, {"limit", 0.2 * Lc}});
        if (res.tilted) {
            const double d = std::abs(res.tilted->displacement - high.back()->displacement);
            ctx.check("tilted_matches_highest", d < 0.05 * Lc, {{"difference", d}, {"limit", 0.05 * Lc}});
        }
    }
}

inline void exp_band_occupation(RunContext& ctx) {
    const auto& cfg = ctx.config();
    const auto alphas = cfg.at("cases").at("alphas").get<std::vector<std::string>>();
    const auto bases = cfg.at("cases").at("bases").get<std::vector<std::string>>();
    if (alphas.size() != bases.size()) throw std::invalid_argument("cases.alphas and cases.bases differ in length");
    json out = json::array();
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        auto s = spec_from_config(cfg);
        s.alpha = AlphaValue::parse(alphas[i]);
        const auto basis = basis_from_config(cfg, s, bases[i]);
        const std::string name = "occupation_" + std::to_string(i + 1) + "_" + safe_name(alphas[i]);
        auto o = single_run(ctx, s, basis, name, cfg.at("run").at("cycles").get<int>());
        auto j = trajectory_summary(o);
        j["alpha"] = alphas[i];
        j["basis"] = bases[i];
        out.push_back(j);
    }
    ctx.summary["cases"] = out;
}

inline void exp_alpha_sweep(RunContext& ctx) {
    const auto& cfg = ctx.config();
    const auto alphas = cfg.at("sweep").at("alphas").get<std::vector<std::string>>();
    const int forced = cfg.at("sweep").value("cycles", 0);
    const auto num = numerics_from_config(cfg);
    std::vector<double> A, L, Q, D, R, ACC;
    json skipped = json::array(), failed = json::array();
    for (const auto& label : alphas) {
        auto s = spec_from_config(cfg);
        s.alpha = AlphaValue::parse(label);
        if (s.alpha.degenerate()) {
            skipped.push_back(label);
            continue;
        }
        const double Lv = s.period() ? *s.period() : std::nan("");
        const int q = s.alpha.is_rational() ? static_cast<int>(s.alpha.q()) : 1;
        const int cycles = forced > 0 ? forced : std::max(1, q);
        try {
            PumpCase pc{label, s, std::nullopt, cfg.at("soliton").at("norm").get<double>(), cycles, std::nullopt};
            auto o = run_pump_case(pc, num);
            A.push_back(s.alpha.value());
            L.push_back(Lv);
            Q.push_back(q);
            D.push_back(o.first_cycle);
            R.push_back(o.first_cycle / s.alpha.value());
            ACC.push_back(o.net);
        } catch (const std::exception& e) {
            failed.push_back({{"alpha", label}, {"error", e.what()}});
        }
    }
    csv::Table t;
    t.schema = "alpha_sweep";
    t.add_column("alpha", A);
    t.add_column("L", L);
    t.add_column("q", Q);
    t.add_column("displacement", D);
    t.add_column("displacement_over_alpha", R);
    t.add_column("accumulated", ACC);
    ctx.write_table("alpha_sweep.csv", t);
    ctx.summary["skipped_degenerate"] = skipped;
    ctx.summary["failed"] = failed;
    json frac = json::array();
    for (std::size_t i = 0; i < A.size(); ++i) {
        frac.push_back({{"alpha", A[i]}, {"accumulated_over_L", ACC[i] / L[i]}, {"per_cycle_over_alpha", ACC[i] / Q[i] / A[i]}});
    }
    ctx.summary["fractional"] = frac;
}

inline csv::Table variational_table(const EffectiveTrajectory& tr, double v, double phi0) {
    csv::Table t;
    t.schema = "variational";
    t.meta = {{"N", tr.params.N}, {"p1", tr.params.p1}, {"p2", tr.params.p2}, {"alpha", tr.params.alpha},
              {"v", tr.params.v}, {"rtol", tr.rtol}, {"atol", tr.atol}};
    std::vector<double> phi(tr.times.size());
    for (std::size_t i = 0; i < phi.size(); ++i) phi[i] = phi0 - v * tr.times[i];
    t.add_column("t", tr.times);
    t.add_column("phi", phi);
    t.add_column("x_c", tr.x0);
    t.add_column("v0", tr.v0);
    return t;
}

inline void exp_nonlinearity(RunContext& ctx) {
    const auto& cfg = ctx.config();
    const auto& nl = cfg.at("nonlinearity");
    const auto base = spec_from_config(cfg);
    const auto num = numerics_from_config(cfg);
    const int cycles = cfg.at("run").at("cycles").get<int>();
    const double a = base.alpha.value();
    const double T = base.drive.period();
    json runs = json::array();
    auto run_one = [&](double N, SlidingTarget target) {
        SuperlatticeSpec s = base;
        s.sliding = target;
        const std::string tag = std::string(target == SlidingTarget::long_lattice ? "long" : "short") + "_N" + name_number(N);
        PumpCase pc{tag, s, std::nullopt, N, cycles, std::nullopt};
        auto o = run_pump_case(pc, num);
        ctx.write_table("trajectory_" + safe_name(tag) + ".csv", trajectory_table(o.trajectory, tag, 1));
        auto j = trajectory_summary(o);
        j["N"] = N;
        j["sliding"] = to_string(target);
        j["regime"] = to_string(classify_transport(o.net, 2.0 * a));
        if (target == SlidingTarget::long_lattice && nl.at("variational").get<bool>()) {
            EffectiveParams p{N, s.p1, s.p2, a, s.drive.v};
            auto ev = integrate_effective(p, o.trajectory.x_c.front(), 0.0, cycles * T);
            ctx.write_table("variational_" + safe_name(tag) + ".csv", variational_table(ev, s.drive.v, s.drive.phi0));
            const double net = ev.x0.back() - ev.x0.front();
            j["variational"] = {{"net", net}, {"regime", to_string(classify_transport(net, a))},
                                {"amplitude_ratio", amplitude_ratio(p)}, {"aborted", ev.aborted}};
        }
        runs.push_back(j);
        return o.net;
    };
    for (const auto& N : nl.at("norms")) {
        const double n = N.get<double>();
        const double net = run_one(n, SlidingTarget::long_lattice);
        if (n <= 10.0) ctx.check("transports_N" + name_number(n), net > 2.0 * a, {{"net", net}, {"limit", 2.0 * a}});
        if (n >= 15.0) ctx.check("traps_N" + name_number(n), std::abs(net) < 0.125, {{"net", net}, {"limit", 0.125}});
    }
    for (const auto& N : nl.at("short_variant_norms")) {
        const double n = N.get<double>();
        const double net = run_one(n, SlidingTarget::short_lattice);
        // the short lattice moves toward +x for v > 0
        const double along = base.drive.v >= 0 ? net : -net;
        ctx.check("short_transports_N" + name_number(n), along > 2.0 * a, {{"net", net}, {"limit", 2.0 * a}});
    }
    ctx.summary["runs"] = runs;
    EffectiveParams p{1.0, base.p1, base.p2, a, base.drive.v};
    if (base.p1 > 0.0 && 2.0 * a > 1.0) {
        try {
            ctx.summary["equal_amplitude_N"] = equal_amplitude_norm(p);
        } catch (const std::exception&) {
            ctx.summary["equal_amplitude_N"] = nullptr;
        }
    }
    if (nl.at("selfconsistent_chern").get<bool>()) {
        SuperlatticeSpec sc = base;
        sc.alpha = AlphaValue::parse(nl.at("supercell_alpha").get<std::string>());
        const double N = nl.at("supercell_norm").get<double>();
        const double L = *sc.period();
        const double B = commensurate_box({L}, num.box_min);
        const Grid g = pump_grid(B, 32.0, L);
        const auto sol = solve_at_norm(sc, sc.drive.phi0, g, N, std::nullopt, num.solve);
        const int periods = nl.at("supercell_periods").get<int>();
        const auto r = selfconsistent_chern(sc, g, sol.psi.density(), periods);
        ctx.summary["selfconsistent_chern"] = {{"alpha", sc.alpha.label()}, {"N", N}, {"supercell_periods", periods},
                                               {"chern", r.chern}, {"winding", r.winding}};
        ctx.check("selfconsistent_chern_plus_one", r.chern == 1, {{"winding", r.winding}});
    }
}

inline void exp_delta(RunContext& ctx) {
    const auto& cfg = ctx.config();
    const auto& d = cfg.at("delta");
    const auto base = spec_from_config(cfg);
    const auto num = numerics_from_config(cfg);
    const double N = cfg.at("soliton").at("norm").get<double>();
    const int nb = cfg.at("analysis").at("n_bands").get<int>();
    auto basis_for = [&](const SuperlatticeSpec& s, const std::string& kind) { return *basis_from_config(cfg, s, kind); };

    // static, inversion-symmetric lattice
    SuperlatticeSpec st = base;
    st.alpha = AlphaValue::parse(d.at("static_alpha").get<std::string>());
    st.drive.v = 0.0;
    st.drive.phi0 = 0.0;
    const PumpNumerics& ns = num;
    PumpCase pc_static{"static", st, std::nullopt, N, 1, basis_for(st, "superlattice")};
    // v = 0 has no period; propagate for one nominal cycle of the configured drive
    auto os = [&] {
        const double B = commensurate_box(case_periods(pc_static), ns.box_min);
        const Grid g = pump_grid(B, ns.points_per_unit, *st.period());
        auto sol = solve_at_norm(st, 0.0, g, N, std::nullopt, ns.solve);
        PumpOutcome o;
        o.grid = g;
        o.soliton = sol;
        o.trajectory = propagate(sol, st, std::min(10.0, base.drive.period()), ns.propagation, pc_static.basis);
        return o;
    }();
    ctx.write_table("delta_static.csv", trajectory_table(os.trajectory, "static", nb));
    double max_static = 0.0;
    for (double v : os.trajectory.delta) max_static = std::max(max_static, std::abs(v));
    ctx.check("static_delta_vanishes", max_static < 1e-6, {{"max_abs_delta", max_static}});

    // periodic: reset after T_r = T in the quantized regime
    SuperlatticeSpec per = base;
    per.alpha = AlphaValue::parse(d.at("periodic_alpha").get<std::string>());
    auto op = run_pump_case({"periodic", per, std::nullopt, N, 1, basis_for(per, "superlattice")}, num);
    ctx.write_table("delta_periodic.csv", trajectory_table(op.trajectory, "periodic", nb));
    const auto& dp = op.trajectory.delta;
    const double reset = std::abs(dp.back() - dp.front());
    ctx.check("periodic_reset", reset < 1e-3, {{"residual", reset}});

    // quasiperiodic: per-cycle drift in the sliding-lattice basis
    SuperlatticeSpec qp = base;
    qp.alpha = AlphaValue::parse(d.at("quasiperiodic_alpha").get<std::string>());
    const int qc = d.at("quasiperiodic_cycles").get<int>();
    auto oq = run_pump_case({"quasiperiodic", qp, std::nullopt, N, qc, basis_for(qp, "sliding")}, num);
    ctx.write_table("delta_quasiperiodic.csv", trajectory_table(oq.trajectory, "quasiperiodic", nb));
    std::vector<double> drift;
    const auto& tq = oq.trajectory;
    for (int k = 1; k <= qc; ++k) {
        auto i1 = sample_at(tq, k * tq.period), i0 = sample_at(tq, (k - 1) * tq.period);
        if (i1 && i0) drift.push_back(std::abs(tq.delta[*i1] - tq.delta[*i0]));
    }
    double mean_drift = 0.0;
    for (double v : drift) mean_drift += v;
    mean_drift = drift.empty() ? 0.0 : mean_drift / static_cast<double>(drift.size());
    ctx.summary["delta"] = {{"static_max_abs", max_static}, {"periodic_reset_residual", reset},
                            {"quasiperiodic_per_cycle_drift", drift}, {"quasiperiodic_mean_drift", mean_drift},
                            {"ratio", reset > 0 ? mean_drift / reset : INFINITY}};
    ctx.check("quasiperiodic_drift_exceeds_periodic", mean_drift >= 10.0 * reset, {{"mean_drift", mean_drift}, {"residual", reset}});
}

/// Critical orders reported for the preset targets.
inline std::optional<int> expected_critical_order(const std::string& label) {
    if (label == "sqrt3/3") return 4;
    if (label == "sqrt5/5") return 2;
    if (label == "golden") return 5;
    return std::nullopt;
}

inline void exp_critical_order(RunContext& ctx) {
    const auto& cfg = ctx.config();
    const auto& sc = cfg.at("scan");
    const auto base = spec_from_config(cfg);
    const auto target = AlphaValue::parse(sc.at("target").get<std::string>());
    ScanOptions opt;
    opt.orders = sc.at("orders").get<std::vector<int>>();
    opt.quantization_tol = sc.at("quantization_tol").get<double>();
    const auto res = approximant_scan(base, target, cfg.at("soliton").at("norm").get<double>(), sc.at("cycles").get<int>(),
                                      opt, numerics_from_config(cfg));
    ctx.write_table("approximant_scan.csv", scan_table(res));
    write_scan_trajectories(ctx, res, 1);
    ctx.summary["scan"] = scan_summary(res);
    if (auto want = expected_critical_order(target.label())) {
        ctx.check("critical_order", res.n_c == *want, {{"n_c", res.n_c}, {"expected", *want}});
    }
}

inline void exp_dnls(RunContext& ctx) {
    const auto& d = ctx.config().at("dnls");
    json out = json::array();
    for (std::size_t i = 0; i < d.at("J").size(); ++i) {
        dnls::WaveguideConfig w;
        w.J = d.at("J")[i].get<double>();
        w.norm_N = d.at("norm")[i].get<double>();
        w.K = d.at("K").get<double>();
        w.p = d.at("p").get<int>();
        w.q = d.at("q").get<int>();
        w.Omega = d.at("Omega").get<double>();
        w.g = d.at("g").get<double>();
        w.n_sites = d.at("n_sites").get<int>();
        const auto sol = dnls::dnls_soliton_at_norm(w);
        const int cycles = d.at("cycles").get<int>();
        const auto tr = dnls::dnls_propagate(sol.state, w, cycles * w.period(), d.at("dz").get<double>(),
                                             d.at("samples_per_cycle").get<int>(), d.at("edge_tol").get<double>());
        csv::Table t;
        t.schema = "dnls";
        t.meta = {{"J", w.J}, {"gN", w.g * w.norm_N}, {"K", w.K}, {"p", w.p}, {"q", w.q}, {"Omega", w.Omega},
                  {"n_sites", w.n_sites}, {"dz", tr.dz}};
        t.add_column("z", tr.z);
        t.add_column("delta_x_c", tr.shift);
        t.add_column("power", tr.power);
        const std::string name = "dnls_J" + name_number(w.J) + "_gN" + name_number(w.g * w.norm_N) + ".csv";
        ctx.write_table(name, t);
        double mean = 0.0;
        for (double v : tr.per_cycle_shift) mean += v;
        mean = tr.per_cycle_shift.empty() ? 0.0 : mean / static_cast<double>(tr.per_cycle_shift.size());
        out.push_back({{"J", w.J}, {"gN", w.g * w.norm_N}, {"mu", sol.mu}, {"participation", dnls::participation_number(sol.state.amplitudes)},
                       {"per_cycle_shift", tr.per_cycle_shift}, {"mean_per_cycle", mean}, {"max_norm_drift", tr.max_norm_drift},
                       {"coupling_distance_mm", dnls::distance_from_coupling(w.J)}, {"aborted", tr.aborted}});
        ctx.check("half_cell_J" + name_number(w.J), !tr.aborted && std::abs(std::abs(mean) - 0.5) < 0.05,
                  {{"mean_per_cycle", mean}});
    }
    ctx.summary["dnls"] = out;
}

inline void physical_units(RunContext& ctx) {
    const auto& cfg = ctx.config();
    if (!cfg.contains("spec")) return;
    const auto ps = units_from_config(cfg);
    const auto s = spec_from_config(cfg);
    const double T = s.drive.period();
    json u = {{"t0_s", ps.time_unit()}, {"x0_m", ps.length_unit()}, {"E0_J", ps.energy_unit()}};
    if (std::isfinite(T)) u["cycle_s"] = units::to_physical_time(T, ps);
    if (cfg.contains("soliton")) u["atoms"] = units::atom_number(cfg.at("soliton").at("norm").get<double>(), ps);
    ctx.summary["physical_units"] = u;
}

// ---------------------------------------------------------------- run / sweep

struct RunReport {
    int exit_code = 0;  // 0 all checks pass, 2 a check failed, 1 error
    json manifest;
};

inline std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline void write_json(const fs::path& p, const json& j) {
    std::ofstream out(p, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << j.dump(2) << '\n';
}

/// Validate, emit the manifest, run, finalize the manifest. Validation errors
/// leave no files behind.
inline RunReport run(const json& cfg, const fs::path& out_dir) {
    validate(cfg);
    fs::create_directories(out_dir);
    RunReport rep;
    json& m = rep.manifest;
    m["schema"] = kManifestSchema;
    m["schema_version"] = csv::kSchemaVersion;
    m["code_version"] = kVersion;
    m["experiment"] = cfg.at("experiment");
    m["config"] = cfg;
    m["status"] = "running";
    m["started_utc"] = utc_now();
    write_json(out_dir / "manifest.json", m);

    RunContext ctx(cfg, out_dir);
    const auto t0 = std::chrono::steady_clock::now();
    try {
        const std::string exp = cfg.at("experiment").get<std::string>();
        if (exp == "custom" || exp == "fig1a_golden" || exp == "fig1cd_sqrt3") {
            exp_single(ctx);
        } else if (exp == "fig1b_approximant_scan") {
            exp_approximant_scan(ctx);
        } else if (exp == "fig2_band_occupation") {
            exp_band_occupation(ctx);
        } else if (exp == "fig2g_alpha_sweep") {
            exp_alpha_sweep(ctx);
        } else if (exp == "fig3_nonlinearity_scan") {
            exp_nonlinearity(ctx);
        } else if (exp == "figS1_delta") {
            exp_delta(ctx);
        } else if (exp == "figS2_critical_order") {
            exp_critical_order(ctx);
        } else if (exp == "figS3_dnls") {
            exp_dnls(ctx);
        }
        physical_units(ctx);
        bool all = true;
        for (const auto& [k, v] : ctx.checks.items()) all = all && v.at("pass").get<bool>();
        m["status"] = "completed";
        rep.exit_code = all ? 0 : 2;
    } catch (const std::exception& e) {
        m["status"] = "failed";
        m["error"] = e.what();
        rep.exit_code = 1;
    }
    m["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    m["finished_utc"] = utc_now();
    m["summary"] = ctx.summary;
    m["checks"] = ctx.checks;
    m["outputs"] = ctx.outputs();
    write_json(out_dir / "manifest.json", m);
    return rep;
}

struct SweepPoint {
    std::string value;
    int exit_code = 0;
    std::string status;
    std::string error;
    fs::path dir;
};

/// One run per axis value (key=value override of the template), at most
/// `jobs` at a time. Failures are recorded and the sweep continues.
inline std::vector<SweepPoint> sweep(const std::string& preset, const json& file, const std::vector<std::string>& overrides,
                                     const std::string& key, const std::vector<std::string>& values, int jobs,
                                     const fs::path& out_dir) {
    fs::create_directories(out_dir);
    std::vector<SweepPoint> pts(values.size());
    std::vector<json> summaries(values.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < values.size(); i = next++) {
            auto& p = pts[i];
            p.value = values[i];
            p.dir = out_dir / ("point_" + std::to_string(i) + "_" + safe_name(values[i]));
            try {
                auto ov = overrides;
                ov.push_back(key + "=" + values[i]);
                const auto cfg = presets::resolve(preset, file, ov);
                auto r = run(cfg, p.dir);
                p.exit_code = r.exit_code;
                p.status = r.manifest.at("status").get<std::string>();
                if (r.manifest.contains("error")) p.error = r.manifest.at("error").get<std::string>();
                summaries[i] = r.manifest.at("summary");
            } catch (const std::exception& e) {
                p.exit_code = 1;
                p.status = "invalid";
                p.error = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    const int n = std::max(1, std::min<int>(jobs, static_cast<int>(values.size())));
    for (int j = 0; j < n; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    // numeric summary scalars present in every successful point become columns
    std::vector<std::string> keys;
    bool first = true;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (pts[i].status != "completed") continue;
        std::vector<std::string> ks;
        const json flat = summaries[i].flatten();
        for (const auto& [k, v] : flat.items()) {
            if (v.is_number()) ks.push_back(k);
        }
        if (first) {
            keys = ks;
            first = false;
        } else {
            std::vector<std::string> keep;
            std::set_intersection(keys.begin(), keys.end(), ks.begin(), ks.end(), std::back_inserter(keep));
            keys = keep;
        }
    }
    csv::Table t;
    t.schema = "aggregate";
    t.meta = {{"axis", key}, {"values", values}};
    std::vector<double> idx, val, status;
    std::vector<std::vector<double>> cols(keys.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        idx.push_back(static_cast<double>(i));
        double v = std::nan("");
        try {
            std::size_t used = 0;
            v = std::stod(pts[i].value, &used);
            if (used != pts[i].value.size()) v = std::nan("");
        } catch (const std::exception&) {
        }
        val.push_back(v);
        status.push_back(pts[i].status == "completed" ? (pts[i].exit_code == 0 ? 1.0 : 0.5) : 0.0);
        const json flat = pts[i].status == "completed" ? summaries[i].flatten() : json::object();
        for (std::size_t k = 0; k < keys.size(); ++k) {
            cols[k].push_back(flat.contains(keys[k]) ? flat.at(keys[k]).get<double>() : std::nan(""));
        }
    }
    t.add_column("index", idx);
    t.add_column("value", val);
    t.add_column("status", status);
    for (std::size_t k = 0; k < keys.size(); ++k) t.add_column(keys[k], cols[k]);
    csv::write(out_dir / "aggregate.csv", t);
    json agg = json::array();
    for (const auto& p : pts) {
        agg.push_back({{"value", p.value}, {"status", p.status}, {"exit_code", p.exit_code}, {"error", p.error},
                       {"dir", p.dir.filename().string()}});
    }
    write_json(out_dir / "aggregate.json", {{"schema", "qpump.aggregate/1"}, {"axis", key}, {"points", agg}});
    return pts;
}

}  // namespace qpump::runner
