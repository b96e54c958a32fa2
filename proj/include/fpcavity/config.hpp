#pragma once

// JSON configuration files: cavity geometry and ring-down simulation
// designs.  Keys carry explicit SI-unit suffixes (length_m, ...) so a
// mm/m mixup is visible in the file itself.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fpcavity/errors.hpp"
#include "fpcavity/resonator_modes.hpp"
#include "fpcavity/ringdown.hpp"

namespace fpcavity {

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& j, const char* key,
                                           const std::string& source) {
    const auto it = j.find(key);
    if (it == j.end()) {
        throw ParseError(source + ": missing field '" + std::string(key) + "'");
    }
    return *it;
}

inline double require_number(const nlohmann::json& j, const char* key,
                             const std::string& source) {
    const nlohmann::json& field = require_field(j, key, source);
    if (!field.is_number()) {
        throw ParseError(source + ": field '" + std::string(key) +
                         "' must be a number");
    }
    return field.get<double>();
}

inline nlohmann::json parse_json(const std::string& text, const std::string& source) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ParseError(source + ": invalid JSON");
    return j;
}

}  // namespace detail

inline CavityGeometry geometry_from_json(const std::string& text,
                                         const std::string& source = "<geometry>") {
    const nlohmann::json j = detail::parse_json(text, source);
    CavityGeometry geom;
    geom.length_m = detail::require_number(j, "length_m", source);
    geom.radius_x_m = detail::require_number(j, "radius_x_m", source);
    geom.radius_y_m = detail::require_number(j, "radius_y_m", source);
    geom.mirror_diameter_m = detail::require_number(j, "mirror_diameter_m", source);
    geom.roughness_rms_m = detail::require_number(j, "roughness_rms_m", source);
    try {
        validate_geometry(geom);
    } catch (const Error& err) {
        throw ParseError(source + ": " + err.what());
    }
    return geom;
}

inline nlohmann::json geometry_to_json(const CavityGeometry& geom) {
    return nlohmann::json{{"length_m", geom.length_m},
                          {"radius_x_m", geom.radius_x_m},
                          {"radius_y_m", geom.radius_y_m},
                          {"mirror_diameter_m", geom.mirror_diameter_m},
                          {"roughness_rms_m", geom.roughness_rms_m}};
}

/// Flat description of a simulated ring-down run: truth model, attenuation
/// list, shared uniform time grid, shots per point and generator seed.
struct SimulationDesign {
    double tc_s = 0.0;
    double u0 = 0.0;
    double p_background = 0.0;
    double p_saturated = 0.0;
    std::vector<double> attenuations_db;
    double t_start_s = 0.0;
    double t_end_s = 0.0;
    int n_points = 0;
    int shots = 0;
    std::uint64_t seed = 0;
    std::optional<double> frequency_hz;
};

inline SimulationDesign design_from_json(const std::string& text,
                                         const std::string& source = "<design>") {
    const nlohmann::json j = detail::parse_json(text, source);
    SimulationDesign design;
    design.tc_s = detail::require_number(j, "tc_s", source);
    design.u0 = detail::require_number(j, "u0", source);
    design.p_background = detail::require_number(j, "p_background", source);
    design.p_saturated = detail::require_number(j, "p_saturated", source);
    const nlohmann::json& atts = detail::require_field(j, "attenuations_db", source);
    if (!atts.is_array() || atts.empty()) {
        throw ParseError(source + ": field 'attenuations_db' must be a non-empty array");
    }
    for (const auto& a : atts) {
        if (!a.is_number()) {
            throw ParseError(source + ": attenuations_db entries must be numbers");
        }
        design.attenuations_db.push_back(a.get<double>());
    }
    design.t_start_s = detail::require_number(j, "t_start_s", source);
    design.t_end_s = detail::require_number(j, "t_end_s", source);
    design.n_points = static_cast<int>(detail::require_number(j, "n_points", source));
    design.shots = static_cast<int>(detail::require_number(j, "shots", source));
    design.seed = static_cast<std::uint64_t>(detail::require_number(j, "seed", source));
    if (j.contains("frequency_hz")) {
        design.frequency_hz = detail::require_number(j, "frequency_hz", source);
    }
    return design;
}

inline nlohmann::json design_to_json(const SimulationDesign& design) {
    nlohmann::json j{{"tc_s", design.tc_s},
                     {"u0", design.u0},
                     {"p_background", design.p_background},
                     {"p_saturated", design.p_saturated},
                     {"attenuations_db", design.attenuations_db},
                     {"t_start_s", design.t_start_s},
                     {"t_end_s", design.t_end_s},
                     {"n_points", design.n_points},
                     {"shots", design.shots},
                     {"seed", design.seed}};
    if (design.frequency_hz) j["frequency_hz"] = *design.frequency_hz;
    return j;
}

/// Expands a design into per-curve grids and runs the simulator.
inline RingdownDataset simulate(const SimulationDesign& design) {
    std::vector<CurveDesign> curves;
    const std::vector<double> grid =
        uniform_grid(design.t_start_s, design.t_end_s, design.n_points);
    curves.reserve(design.attenuations_db.size());
    for (double att : design.attenuations_db) {
        curves.push_back(CurveDesign{att, grid, design.shots});
    }
    const ProbeModel model{design.p_background, design.p_saturated, design.u0};
    RingdownDataset data = simulate(model, design.tc_s, curves, design.seed);
    if (design.frequency_hz) data.frequency_hz = *design.frequency_hz;
    return data;
}

}  // namespace fpcavity
