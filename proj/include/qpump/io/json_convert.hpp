#pragma once

#include <json.hpp>

#include <sstream>
#include <string>

#include "qpump/lattice/alpha.hpp"
#include "qpump/lattice/potential.hpp"
#include "qpump/numerics/grid.hpp"

namespace qpump {

inline nlohmann::json to_json(const AlphaValue& a) {
    nlohmann::json j;
    j["label"] = a.label();
    j["rational"] = a.is_rational();
    std::ostringstream hp;
    hp.precision(40);
    hp << a.high_precision();
    j["value"] = hp.str();
    return j;
}

inline AlphaValue alpha_from_json(const nlohmann::json& j) {
    if (j.is_string()) return AlphaValue::parse(j.get<std::string>());
    const auto label = j.at("label").get<std::string>();
    try {
        return AlphaValue::parse(label);
    } catch (const std::invalid_argument&) {
        return AlphaValue::irrational(HighPrecision(j.at("value").get<std::string>()), label);
    }
}

inline nlohmann::json to_json(const SuperlatticeSpec& s) {
    return {{"p1", s.p1},
            {"p2", s.p2},
            {"alpha", to_json(s.alpha)},
            {"v", s.drive.v},
            {"phi0", s.drive.phi0},
            {"sliding", to_string(s.sliding)}};
}

inline SuperlatticeSpec spec_from_json(const nlohmann::json& j) {
    SuperlatticeSpec s;
    s.p1 = j.value("p1", s.p1);
    s.p2 = j.value("p2", s.p2);
    if (j.contains("alpha")) s.alpha = alpha_from_json(j.at("alpha"));
    s.drive.v = j.value("v", s.drive.v);
    s.drive.phi0 = j.value("phi0", s.drive.phi0);
    if (j.contains("sliding")) s.sliding = sliding_from_string(j.at("sliding").get<std::string>());
    return s;
}

inline nlohmann::json to_json(const Grid& g) {
    return {{"x_min", g.x_min()}, {"x_max", g.x_max()}, {"n_points", g.size()}};
}

inline Grid grid_from_json(const nlohmann::json& j) {
    return Grid(j.at("x_min").get<double>(), j.at("x_max").get<double>(), j.at("n_points").get<std::size_t>());
}

}  // namespace qpump
