#pragma once

#include <json.hpp>

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "qpump/experiments/config.hpp"

namespace qpump::presets {

using nlohmann::json;

struct PresetInfo {
    std::string name;
    std::string description;
};

inline const std::vector<PresetInfo>& all() {
    static const std::vector<PresetInfo> p{
        {"fig1a_golden", "golden-ratio superlattice, 3 cycles, occupations in the order-5 basis"},
        {"fig1b_approximant_scan", "golden approximants 3..8 plus H5 + W5^inf, one cycle each"},
        {"fig1cd_sqrt3", "alpha = sqrt3, 3 cycles, sliding-lattice basis"},
        {"fig2_band_occupation", "occupation series: 5/8 superlattice, golden in H5 basis, sqrt3 in sliding basis"},
        {"fig2g_alpha_sweep", "per-cycle displacement against alpha"},
        {"fig3_nonlinearity_scan", "p1 = p2 = 15, N scan with GPE and the variational model"},
        {"figS1_delta", "dynamical offset: static, periodic 2/3 and quasiperiodic sqrt3"},
        {"figS2_critical_order", "approximant scan locating the critical order for sqrt3/3 or sqrt5/5"},
        {"figS3_dnls", "waveguide-array fractional pumping, strong and weak coupling"},
        {"custom", "single pumping run from the config values"},
    };
    return p;
}

inline bool exists(const std::string& name) {
    const auto& p = all();
    return std::any_of(p.begin(), p.end(), [&](const PresetInfo& i) { return i.name == name; });
}

/// Keys shared by every continuum experiment.
inline json common_defaults() {
    return {
        {"spec", {{"p1", 25.0}, {"p2", 25.0}, {"alpha", "5/8"}, {"v", 0.1}, {"phi0", 0.0}, {"sliding", "long_lattice"}}},
        {"soliton", {{"norm", 0.2}}},
        {"run", {{"cycles", 1}}},
        {"numerics",
         {{"box_min", 40.0},
          {"points_per_unit", 32.0},
          {"dt", 1e-3},
          {"samples_per_cycle", 64},
          {"nonlinear_phase_cap", 0.025},
          {"edge_tol", 1e-2},
          {"norm_abort", 1e-4},
          {"newton_tol", 1e-10},
          {"norm_tol", 1e-10}}},
        {"analysis",
         {{"basis", "superlattice"},
          {"basis_order", 5},
          {"n_bands", 5},
          {"radius", 5},
          {"occupation_threshold", 0.5},
          {"max_plane_waves", 256}}},
        {"units", {{"system", "li7"}}},
    };
}

inline json dnls_defaults() {
    return {{"dnls",
             {{"J", json::array({1.0, 0.15})},
              {"norm", json::array({2.1, 0.2})},
              {"K", 0.01},
              {"p", 5},
              {"q", 2},
              {"Omega", 0.01},
              {"g", 1.0},
              {"n_sites", 75},
              {"cycles", 3},
              {"dz", 0.01},
              {"samples_per_cycle", 64},
              {"edge_tol", 1e-6}}}};
}

/// Fully resolved defaults of a preset; every key a run reads appears here.
inline json defaults(const std::string& name) {
    if (!exists(name)) throw std::invalid_argument("unknown preset '" + name + "'");
    json d = name == "figS3_dnls" ? json::object() : common_defaults();
    d["experiment"] = name;
    if (name == "fig1a_golden") {
        d["spec"]["alpha"] = "golden";
        d["run"]["cycles"] = 3;
        d["analysis"]["basis"] = "approximant";
    } else if (name == "fig1b_approximant_scan") {
        d["spec"]["alpha"] = "golden";
        d["scan"] = {{"orders", json::array({3, 4, 5, 6, 7, 8})},
                     {"tilt_order", 5},
                     {"basis_order", 5},
                     {"quantization_tol", 0.05}};
        d["analysis"]["basis"] = "approximant";
    } else if (name == "fig1cd_sqrt3") {
        d["spec"]["alpha"] = "sqrt3";
        d["run"]["cycles"] = 3;
        d["analysis"]["basis"] = "sliding";
    } else if (name == "fig2_band_occupation") {
        d["cases"] = {{"alphas", json::array({"5/8", "golden", "sqrt3"})},
                      {"bases", json::array({"superlattice", "approximant", "sliding"})}};
    } else if (name == "fig2g_alpha_sweep") {
        d["sweep"] = {{"alphas", json::array({"2/5", "1/2", "3/5", "2/3", "3/4", "4/5", "1", "5/4", "4/3", "3/2",
                                              "5/3", "7/4", "2"})}};
        d["analysis"]["basis"] = "none";
    } else if (name == "fig3_nonlinearity_scan") {
        d["spec"]["p1"] = 15.0;
        d["spec"]["p2"] = 15.0;
        d["spec"]["alpha"] = "21/34";
        d["run"]["cycles"] = 3;
        d["numerics"]["points_per_unit"] = 64.0;
        d["analysis"]["basis"] = "none";
        d["nonlinearity"] = {{"norms", json::array({7.0, 20.0})},
                             {"short_variant_norms", json::array({20.0})},
                             {"variational", true},
                             {"selfconsistent_chern", true},
                             {"supercell_alpha", "5/8"},
                             {"supercell_norm", 7.0},
                             {"supercell_periods", 3}};
    } else if (name == "figS1_delta") {
        d["delta"] = {{"static_alpha", "5/8"},
                      {"periodic_alpha", "2/3"},
                      {"quasiperiodic_alpha", "sqrt3"},
                      {"quasiperiodic_cycles", 3}};
    } else if (name == "figS2_critical_order") {
        d["scan"] = {{"target", "sqrt3/3"},
                     {"orders", json::array({2, 3, 4, 5, 6})},
                     {"quantization_tol", 0.05},
                     {"cycles", 1}};
        d["analysis"]["basis"] = "none";
    } else if (name == "figS3_dnls") {
        config::merge(d, dnls_defaults());
        d["units"] = {{"system", "li7"}};
    }
    return d;
}

/// Defaults <- config file <- overrides, with unknown keys rejected.
inline json resolve(const std::string& preset, const json& file, const std::vector<std::string>& overrides) {
    std::string name = preset;
    if (name.empty()) name = file.value("experiment", std::string("custom"));
    if (!preset.empty() && file.contains("experiment") && file.at("experiment") != preset) {
        throw std::invalid_argument("config names experiment '" + file.at("experiment").get<std::string>() +
                                    "' but preset '" + preset + "' was requested");
    }
    json cfg = defaults(name);
    json patch = file;
    for (const auto& o : overrides) config::apply_override(patch, o);
    auto unknown = config::unknown_keys(patch, cfg);
    std::erase(unknown, std::string("output"));
    std::erase_if(unknown, [](const std::string& k) { return k.rfind("output.", 0) == 0; });
    if (!unknown.empty()) {
        std::string msg = "unknown config keys for '" + name + "':";
        for (const auto& k : unknown) msg += " " + k;
        throw std::invalid_argument(msg);
    }
    config::merge(cfg, patch);
    cfg["experiment"] = name;
    return cfg;
}

}  // namespace qpump::presets
