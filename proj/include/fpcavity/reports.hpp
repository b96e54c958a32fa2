#pragma once

// Report assembly for the command-line tools: fit reports (shared by the
// ring-down and thermal fits) and the cavity loss-budget report.  Reports
// are byte-reproducible for identical inputs, flags and tool version;
// JSON renderings re-serialize to identical bytes after parsing.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fpcavity/config.hpp"
#include "fpcavity/fit_engine.hpp"
#include "fpcavity/loss_budget.hpp"
#include "fpcavity/resonator_modes.hpp"
#include "fpcavity/version.hpp"

namespace fpcavity {

/// Six-significant-digit rendering for human-facing tables.
inline std::string format_sig(double value) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6g", value);
    return std::string(buf);
}

/// Infinity-aware JSON value for quality factors ("lossless" sentinel).
inline nlohmann::json q_to_json(double q) {
    if (std::isinf(q)) return "lossless";
    return q;
}

struct ReportParameter {
    std::string name;
    double value = 0.0;
    double std_error = std::numeric_limits<double>::quiet_NaN();
    std::string unit;
};

struct FitReport {
    std::string command;
    std::vector<std::pair<std::string, std::string>> input_digests;  // path, fnv1a64
    std::vector<ReportParameter> parameters;
    double ssr = 0.0;
    std::size_t dof = 0;
    bool converged = false;
    int iterations = 0;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> warnings;
    std::string version = kVersion;
};

inline FitReport make_fit_report(const FitResult& result,
                                 const std::vector<std::string>& units) {
    FitReport report;
    report.ssr = result.ssr;
    report.dof = result.dof;
    report.converged = result.converged;
    report.iterations = result.iterations;
    report.warnings = result.warnings;
    for (std::size_t i = 0; i < result.parameters.size(); ++i) {
        ReportParameter p;
        p.name = i < result.names.size() ? result.names[i] : "p" + std::to_string(i);
        p.value = result.parameters[i];
        if (i < result.std_errors.size()) p.std_error = result.std_errors[i];
        p.unit = i < units.size() ? units[i] : "dimensionless";
        report.parameters.push_back(std::move(p));
    }
    return report;
}

inline nlohmann::json to_json(const FitReport& report) {
    nlohmann::json params = nlohmann::json::array();
    for (const ReportParameter& p : report.parameters) {
        nlohmann::json entry{{"name", p.name}, {"value", p.value}, {"unit", p.unit}};
        if (std::isnan(p.std_error)) {
            entry["std_error"] = nullptr;
        } else {
            entry["std_error"] = p.std_error;
        }
        params.push_back(std::move(entry));
    }
    nlohmann::json digests = nlohmann::json::array();
    for (const auto& [path, digest] : report.input_digests) {
        digests.push_back({{"path", path}, {"fnv1a64", digest}});
    }
    nlohmann::json j{{"command", report.command},
                     {"inputs", digests},
                     {"parameters", params},
                     {"ssr", report.ssr},
                     {"dof", report.dof},
                     {"converged", report.converged},
                     {"iterations", report.iterations},
                     {"warnings", report.warnings},
                     {"version", report.version}};
    if (report.seed) j["seed"] = *report.seed;
    return j;
}

inline std::string to_text(const FitReport& report) {
    std::string out;
    out += "fit report (fpcavity " + report.version + ")\n";
    out += "command: " + report.command + "\n";
    for (const auto& [path, digest] : report.input_digests) {
        out += "input: " + path + " (fnv1a64 " + digest + ")\n";
    }
    if (report.seed) out += "seed: " + std::to_string(*report.seed) + "\n";
    out += std::string("converged: ") + (report.converged ? "yes" : "NO") + " after " +
           std::to_string(report.iterations) + " iterations\n";
    out += "ssr: " + format_sig(report.ssr) + "  dof: " + std::to_string(report.dof) +
           "\n";
    out += "parameters:\n";
    for (const ReportParameter& p : report.parameters) {
        char line[160];
        if (std::isnan(p.std_error)) {
            std::snprintf(line, sizeof(line), "  %-16s %14s   %14s   %s\n",
                          p.name.c_str(), format_sig(p.value).c_str(), "-",
                          p.unit.c_str());
        } else {
            std::snprintf(line, sizeof(line), "  %-16s %14s   %14s   %s\n",
                          p.name.c_str(), format_sig(p.value).c_str(),
                          format_sig(p.std_error).c_str(), p.unit.c_str());
        }
        out += line;
    }
    for (const std::string& w : report.warnings) out += "warning: " + w + "\n";
    return out;
}

/// One loss channel of the budget: a quality factor plus the formula
/// inputs that produced it.
struct QualityChannel {
    std::string name;
    double q_factor = 0.0;
    nlohmann::json inputs;
};

struct BudgetReport {
    CavityGeometry geometry;
    double frequency_hz = 0.0;
    int q_index = 9;
    double temperature_k = 0.0;
    BcsParams bcs;
    double r_residual_ohm = 0.0;
    double geometry_factor_ohm = 0.0;
    double mirror_spot_m = 0.0;
    std::vector<QualityChannel> channels;
    double q_surface_diffraction = 0.0;  ///< combine(diffraction, surface)
    double q_loss_model = 0.0;           ///< G / (R_bcs + R_residual)
    double q_all_channels = 0.0;         ///< harmonic combination of every channel
    QualitySummary summary;              ///< derived from q_loss_model
    std::string sensitivity_note;
    std::string version = kVersion;
};

/// Assembles the loss budget at the given temperature.  mirror_spot_m is
/// the spot size w fed to the diffraction limit; the exponential makes
/// Q_diff sensitive at the percent level of w, which the report records.
inline BudgetReport make_budget_report(const CavityGeometry& geom, double frequency_hz,
                                       int q_index, double temperature_k,
                                       const BcsParams& bcs, double r_residual_ohm,
                                       double geometry_factor_ohm,
                                       double mirror_spot_m) {
    BudgetReport report;
    report.geometry = geom;
    report.frequency_hz = frequency_hz;
    report.q_index = q_index;
    report.temperature_k = temperature_k;
    report.bcs = bcs;
    report.r_residual_ohm = r_residual_ohm;
    report.geometry_factor_ohm = geometry_factor_ohm;
    report.mirror_spot_m = mirror_spot_m;

    const double q_diff = q_diffraction(geom, frequency_hz, mirror_spot_m);
    double q_surf = std::numeric_limits<double>::infinity();
    if (geom.roughness_rms_m > 0.0) {
        q_surf = q_surface_scattering(geom, frequency_hz);
    }
    const double r_bcs = bcs_resistance(bcs, temperature_k);
    const double q_bcs = q_from_resistance(geometry_factor_ohm, r_bcs);
    const double q_res = q_from_resistance(geometry_factor_ohm, r_residual_ohm);

    report.channels.push_back(
        {"diffraction", q_diff,
         {{"mirror_spot_m", mirror_spot_m},
          {"mirror_diameter_m", geom.mirror_diameter_m},
          {"length_m", geom.length_m}}});
    report.channels.push_back(
        {"surface_scattering", q_surf,
         {{"roughness_rms_m", geom.roughness_rms_m}, {"length_m", geom.length_m}}});
    report.channels.push_back(
        {"bcs", q_bcs,
         {{"temperature_k", temperature_k},
          {"a_coeff_ohm_k", bcs.a_coeff_ohm_k},
          {"gap_over_kb_k", bcs.gap_over_kb_k},
          {"r_bcs_ohm", r_bcs}}});
    report.channels.push_back(
        {"residual", q_res, {{"r_residual_ohm", r_residual_ohm}}});

    report.q_surface_diffraction = combine_q({q_diff, q_surf});
    report.q_loss_model = combine_q({q_bcs, q_res});
    std::vector<double> all{q_diff, q_surf, q_bcs, q_res};
    report.q_all_channels = combine_q(all);
    report.summary = quality_summary(
        geom, frequency_hz,
        damping_time_from_q(report.q_loss_model, frequency_hz), q_index);

    const double w_lo = mirror_spot_m * 0.99, w_hi = mirror_spot_m * 1.01;
    report.sensitivity_note =
        "Q_diff depends exponentially on the spot size: w = " +
        format_sig(mirror_spot_m) + " m gives " + format_sig(q_diff) +
        "; +/-1% on w spans [" +
        format_sig(q_diffraction(geom, frequency_hz, w_lo)) + ", " +
        format_sig(q_diffraction(geom, frequency_hz, w_hi)) + "]";
    return report;
}

inline nlohmann::json to_json(const BudgetReport& report) {
    nlohmann::json channels = nlohmann::json::array();
    for (const QualityChannel& ch : report.channels) {
        channels.push_back({{"name", ch.name},
                            {"q_factor", q_to_json(ch.q_factor)},
                            {"inputs", ch.inputs}});
    }
    return nlohmann::json{
        {"geometry", geometry_to_json(report.geometry)},
        {"frequency_hz", report.frequency_hz},
        {"q_index", report.q_index},
        {"temperature_k", report.temperature_k},
        {"bcs", {{"a_coeff_ohm_k", report.bcs.a_coeff_ohm_k},
                 {"gap_over_kb_k", report.bcs.gap_over_kb_k}}},
        {"r_residual_ohm", report.r_residual_ohm},
        {"geometry_factor_ohm", report.geometry_factor_ohm},
        {"mirror_spot_m", report.mirror_spot_m},
        {"channels", channels},
        {"q_surface_diffraction", q_to_json(report.q_surface_diffraction)},
        {"q_loss_model", q_to_json(report.q_loss_model)},
        {"q_all_channels", q_to_json(report.q_all_channels)},
        {"summary", {{"q_factor", report.summary.q_factor},
                     {"tc_s", report.summary.tc_s},
                     {"finesse_paper", report.summary.finesse_paper},
                     {"finesse_fsr", report.summary.finesse_fsr},
                     {"fwhm_hz", report.summary.fwhm_hz},
                     {"photon_path_m", report.summary.photon_path_m},
                     {"q_index", report.summary.q_index}}},
        {"sensitivity_note", report.sensitivity_note},
        {"version", report.version}};
}

inline std::string to_text(const BudgetReport& report) {
    std::string out;
    out += "loss budget (fpcavity " + report.version + ")\n";
    out += "geometry: L=" + format_sig(report.geometry.length_m) +
           " m, Rx=" + format_sig(report.geometry.radius_x_m) +
           " m, Ry=" + format_sig(report.geometry.radius_y_m) +
           " m, D0=" + format_sig(report.geometry.mirror_diameter_m) +
           " m, h_rms=" + format_sig(report.geometry.roughness_rms_m) + " m\n";
    out += "frequency: " + format_sig(report.frequency_hz) + " Hz (q=" +
           std::to_string(report.q_index) + ")\n";
    out += "temperature: " + format_sig(report.temperature_k) + " K\n";
    out += "geometry factor G: " + format_sig(report.geometry_factor_ohm) + " ohm\n";
    out += "channels:\n";
    for (const QualityChannel& ch : report.channels) {
        char line[160];
        const std::string q_str =
            std::isinf(ch.q_factor) ? "lossless" : format_sig(ch.q_factor);
        std::snprintf(line, sizeof(line), "  %-20s Q = %s\n", ch.name.c_str(),
                      q_str.c_str());
        out += line;
    }
    const auto q_or_lossless = [](double q) {
        return std::isinf(q) ? std::string("lossless") : format_sig(q);
    };
    out += "Q' (diffraction+surface): " + q_or_lossless(report.q_surface_diffraction) +
           "\n";
    out += "Q (bcs+residual loss model): " + format_sig(report.q_loss_model) + "\n";
    out += "Q (all channels combined): " + q_or_lossless(report.q_all_channels) + "\n";
    out += "derived from loss model: Tc = " + format_sig(report.summary.tc_s) +
           " s, FWHM = " + format_sig(report.summary.fwhm_hz) +
           " Hz, finesse Q/q = " + format_sig(report.summary.finesse_paper) +
           ", finesse FSR/FWHM = " + format_sig(report.summary.finesse_fsr) +
           ", photon path = " + format_sig(report.summary.photon_path_m) + " m\n";
    out += "note: " + report.sensitivity_note + "\n";
    return out;
}

}  // namespace fpcavity
