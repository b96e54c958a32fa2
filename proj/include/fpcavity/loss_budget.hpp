#pragma once

// Superconducting-cavity quality factors and damping times from resistance
// components and geometric loss limits.
//
//   R_bcs(T) = (A/T) exp(-Delta0/kB T)        two-parameter BCS form
//   Q        = G / R_e                        with R_e = R_bcs + R_0 + R_d
//   Q_diff   = (omega L / c) exp(D0^2/2w^2)   mirror-aperture diffraction
//   Q_surf   = c L / (4 omega h_rms^2)        total integrated scattering
//
// Loss channels combine harmonically: 1/Q' = sum 1/Q_i.  fit_thermal
// recovers (A, Delta0/kB, R_0) from damping-time-versus-temperature data.

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "fpcavity/constants.hpp"
#include "fpcavity/errors.hpp"
#include "fpcavity/fit_engine.hpp"
#include "fpcavity/resonator_modes.hpp"

namespace fpcavity {

/// The exponential BCS form is a low-temperature approximation; inputs
/// above this bound are rejected.
inline constexpr double kMaxBcsTemperatureK = 4.5;

struct BcsParams {
    double a_coeff_ohm_k = 0.0;  ///< material coefficient A (Ohm K)
    double gap_over_kb_k = 0.0;  ///< Delta0 / kB (K)
};

/// Defaults calibrated so that R_bcs(1.6 K) matches the 75 nOhm residual
/// plateau of the reference niobium mirrors.
inline constexpr BcsParams kNiobiumDefaults{0.0365, 20.2};

struct ResistanceBudget {
    double geometry_factor_ohm = 0.0;
    double r_bcs_ohm = 0.0;
    double r_residual_ohm = 0.0;
    double r_diffraction_ohm = 0.0;

    double effective_resistance_ohm() const {
        return r_bcs_ohm + r_residual_ohm + r_diffraction_ohm;
    }
};

struct QualitySummary {
    double q_factor = 0.0;
    double tc_s = 0.0;
    double finesse_paper = 0.0;   ///< Q / q_index convention
    double finesse_fsr = 0.0;     ///< FSR / FWHM convention
    double fwhm_hz = 0.0;         ///< 1 / (2 pi Tc)
    double photon_path_m = 0.0;   ///< c Tc
    int q_index = 0;
};

inline void validate_bcs(const BcsParams& p) {
    if (!(p.a_coeff_ohm_k > 0.0)) throw NonPositiveInput("a_coeff_ohm_k must be > 0");
    if (!(p.gap_over_kb_k > 0.0)) throw NonPositiveInput("gap_over_kb_k must be > 0");
}

/// BCS surface resistance (A/T) exp(-Delta0/kB T); strictly increasing in T
/// below the gap temperature.
inline double bcs_resistance(const BcsParams& p, double temperature_k) {
    validate_bcs(p);
    if (!(temperature_k > 0.0)) {
        throw NonPositiveTemperature("temperature must be > 0 K");
    }
    if (temperature_k > kMaxBcsTemperatureK) {
        throw TemperatureOutOfRange("temperature " + std::to_string(temperature_k) +
                                    " K exceeds BCS-form validity bound " +
                                    std::to_string(kMaxBcsTemperatureK) + " K");
    }
    return (p.a_coeff_ohm_k / temperature_k) *
           std::exp(-p.gap_over_kb_k / temperature_k);
}

inline double q_from_resistance(double geometry_factor_ohm, double r_effective_ohm) {
    if (!(geometry_factor_ohm > 0.0)) throw NonPositiveInput("geometry factor must be > 0");
    if (!(r_effective_ohm > 0.0)) throw NonPositiveInput("effective resistance must be > 0");
    return geometry_factor_ohm / r_effective_ohm;
}

/// Effective resistance from an observed damping time, R = G / (omega Tc).
inline double residual_resistance_from_tc(double geometry_factor_ohm,
                                          double omega_rad_s, double tc_s) {
    if (!(geometry_factor_ohm > 0.0)) throw NonPositiveInput("geometry factor must be > 0");
    if (!(omega_rad_s > 0.0)) throw NonPositiveInput("omega must be > 0");
    if (!(tc_s > 0.0)) throw NonPositiveInput("tc must be > 0");
    return geometry_factor_ohm / (omega_rad_s * tc_s);
}

/// Diffraction Q limit set by the mirror aperture,
/// Q_diff = (omega L / c) exp(D0^2 / 2 w^2) with w the mirror spot size.
inline double q_diffraction(const CavityGeometry& geom, double frequency_hz,
                            double mirror_spot_m) {
    validate_geometry(geom);
    if (!(frequency_hz > 0.0)) throw NonPositiveInput("frequency must be > 0");
    if (!(mirror_spot_m > 0.0)) throw NonPositiveInput("mirror spot must be > 0");
    const double omega = 2.0 * kPi * frequency_hz;
    const double aperture = geom.mirror_diameter_m;
    return omega * geom.length_m / kSpeedOfLight *
           std::exp(aperture * aperture / (2.0 * mirror_spot_m * mirror_spot_m));
}

/// Surface-scattering Q limit from total integrated scattering,
/// Q_surf = c L / (4 omega h_rms^2).
inline double q_surface_scattering(const CavityGeometry& geom, double frequency_hz) {
    validate_geometry(geom);
    if (!(frequency_hz > 0.0)) throw NonPositiveInput("frequency must be > 0");
    if (geom.roughness_rms_m == 0.0) {
        throw ZeroRoughness("surface-scattering Q is unbounded for zero roughness");
    }
    const double omega = 2.0 * kPi * frequency_hz;
    return kSpeedOfLight * geom.length_m /
           (4.0 * omega * geom.roughness_rms_m * geom.roughness_rms_m);
}

/// Harmonic combination 1/Q' = sum 1/Q_i.  Infinity marks a lossless
/// channel and drops out; the result never exceeds the smallest input.
inline double combine_q(std::span<const double> q_list) {
    if (q_list.empty()) throw EmptyList("combine_q: empty channel list");
    double inverse_sum = 0.0;
    std::size_t finite_count = 0;
    double last_finite = 0.0;
    for (double q : q_list) {
        if (!(q > 0.0)) throw NonPositiveInput("combine_q: channels must be > 0");
        if (std::isinf(q)) continue;
        inverse_sum += 1.0 / q;
        ++finite_count;
        last_finite = q;
    }
    if (finite_count == 0) return std::numeric_limits<double>::infinity();
    if (finite_count == 1) return last_finite;  // exact single-channel passthrough
    return 1.0 / inverse_sum;
}

inline double combine_q(std::initializer_list<double> q_list) {
    return combine_q(std::span<const double>(q_list.begin(), q_list.size()));
}

/// Q, finesse (both conventions), linewidth and photon path from a damping
/// time.  fsr_hz feeds the FSR/FWHM finesse convention only.
inline QualitySummary quality_summary(double frequency_hz, double tc_s, int q_index,
                                      double fsr_hz) {
    if (!(frequency_hz > 0.0)) throw NonPositiveInput("frequency must be > 0");
    if (!(tc_s > 0.0)) throw NonPositiveInput("tc must be > 0");
    if (q_index < 1) throw NonPositiveInput("q_index must be >= 1");
    if (!(fsr_hz > 0.0)) throw NonPositiveInput("fsr must be > 0");

    QualitySummary summary;
    summary.q_index = q_index;
    summary.q_factor = 2.0 * kPi * frequency_hz * tc_s;
    summary.tc_s = tc_s;
    summary.finesse_paper = summary.q_factor / static_cast<double>(q_index);
    summary.finesse_fsr = fsr_hz * 2.0 * kPi * tc_s;
    summary.fwhm_hz = 1.0 / (2.0 * kPi * tc_s);
    summary.photon_path_m = kSpeedOfLight * tc_s;
    return summary;
}

inline QualitySummary quality_summary(const CavityGeometry& geom, double frequency_hz,
                                      double tc_s, int q_index) {
    return quality_summary(frequency_hz, tc_s, q_index, free_spectral_range(geom));
}

/// Inverse of q_factor = omega tc.
inline double damping_time_from_q(double q_factor, double frequency_hz) {
    if (!(q_factor > 0.0)) throw NonPositiveInput("q_factor must be > 0");
    if (!(frequency_hz > 0.0)) throw NonPositiveInput("frequency must be > 0");
    return q_factor / (2.0 * kPi * frequency_hz);
}

/// Thermal model of the damping time,
/// Tc(T) = G / (omega [R_bcs(T) + R_residual]); strictly decreasing in T.
inline double tc_vs_temperature(const BcsParams& p, double r_residual_ohm,
                                double geometry_factor_ohm, double frequency_hz,
                                double temperature_k) {
    if (!(r_residual_ohm > 0.0)) throw NonPositiveInput("residual resistance must be > 0");
    if (!(geometry_factor_ohm > 0.0)) throw NonPositiveInput("geometry factor must be > 0");
    if (!(frequency_hz > 0.0)) throw NonPositiveInput("frequency must be > 0");
    const double omega = 2.0 * kPi * frequency_hz;
    return geometry_factor_ohm /
           (omega * (bcs_resistance(p, temperature_k) + r_residual_ohm));
}

struct ThermalPoint {
    double temperature_k = 0.0;
    double tc_s = 0.0;
    /// Standard error of tc_s; NaN when not recorded.
    double tc_err_s = std::numeric_limits<double>::quiet_NaN();

    bool has_error() const { return !std::isnan(tc_err_s); }
};

struct ThermalDataset {
    std::vector<ThermalPoint> points;
};

/// Sorts by temperature and validates the dataset invariants.
inline ThermalDataset canonicalize(ThermalDataset data) {
    std::sort(data.points.begin(), data.points.end(),
              [](const ThermalPoint& a, const ThermalPoint& b) {
                  return a.temperature_k < b.temperature_k;
              });
    for (std::size_t i = 0; i < data.points.size(); ++i) {
        const ThermalPoint& pt = data.points[i];
        if (!(pt.temperature_k > 0.0)) {
            throw NonPositiveTemperature("thermal point " + std::to_string(i) +
                                         ": temperature must be > 0");
        }
        if (pt.temperature_k > kMaxBcsTemperatureK) {
            throw TemperatureOutOfRange("thermal point " + std::to_string(i) +
                                        ": temperature exceeds " +
                                        std::to_string(kMaxBcsTemperatureK) + " K");
        }
        if (!(pt.tc_s > 0.0)) {
            throw NonPositiveInput("thermal point " + std::to_string(i) +
                                   ": tc must be > 0");
        }
        if (pt.has_error() && !(pt.tc_err_s > 0.0)) {
            throw NonPositiveInput("thermal point " + std::to_string(i) +
                                   ": tc_err must be > 0 when present");
        }
        if (i > 0 && !(data.points[i - 1].temperature_k < pt.temperature_k)) {
            throw Error("thermal dataset: temperatures must be strictly increasing "
                        "(duplicate at point " + std::to_string(i) + ")");
        }
    }
    return data;
}

struct ThermalInit {
    double a_coeff_ohm_k = kNiobiumDefaults.a_coeff_ohm_k;
    double gap_over_kb_k = kNiobiumDefaults.gap_over_kb_k;
    double r_residual_ohm = 75e-9;
};

/// Weighted least-squares fit of tc_vs_temperature over
/// (A, Delta0/kB, R_residual), all log-reparameterized.  Weights are
/// 1/sigma^2 when every point carries tc_err_s, uniform otherwise (the
/// residual variance then comes from the post-fit ssr/dof scaling).
///
/// Identifiability guard: each point's effective resistance G/(omega tc)
/// is compared against twice the smallest one; fewer than two points above
/// that level means the activated regime is invisible and the gap cannot
/// be separated from the plateau (DegenerateRegime).  Data with no
/// saturated plateau instead surfaces as a poorly determined residual
/// parameter in the fit result.
inline FitResult fit_thermal(const ThermalDataset& data, double geometry_factor_ohm,
                             double frequency_hz, const ThermalInit& init,
                             const FitOptions& opts = {}) {
    const ThermalDataset canon = canonicalize(data);
    if (canon.points.size() < 4) {
        throw InsufficientData("thermal fit needs at least 4 points, got " +
                               std::to_string(canon.points.size()));
    }
    if (!(geometry_factor_ohm > 0.0)) throw NonPositiveInput("geometry factor must be > 0");
    if (!(frequency_hz > 0.0)) throw NonPositiveInput("frequency must be > 0");

    const BcsParams init_bcs{init.a_coeff_ohm_k, init.gap_over_kb_k};
    validate_bcs(init_bcs);
    if (!(init.r_residual_ohm > 0.0)) {
        throw NonPositiveInput("initial residual resistance must be > 0");
    }

    const double omega = 2.0 * kPi * frequency_hz;
    double r_plateau = std::numeric_limits<double>::infinity();
    for (const ThermalPoint& pt : canon.points) {
        r_plateau = std::min(r_plateau, geometry_factor_ohm / (omega * pt.tc_s));
    }
    std::size_t activated = 0;
    for (const ThermalPoint& pt : canon.points) {
        if (geometry_factor_ohm / (omega * pt.tc_s) > 2.0 * r_plateau) ++activated;
    }
    if (activated < 2) {
        throw DegenerateRegime(
            "all points lie on the saturated side of the thermal knee (" +
            std::to_string(activated) +
            " activated-regime points); gap and material coefficient are not "
            "separately identifiable");
    }

    const bool weighted = std::all_of(canon.points.begin(), canon.points.end(),
                                      [](const ThermalPoint& pt) { return pt.has_error(); });

    Objective obj;
    obj.parameter_count = 3;
    obj.log_scale = {true, true, true};
    obj.parameter_names = {"a_coeff_ohm_k", "gap_over_kb_k", "r_residual_ohm"};
    obj.residuals = [canon, geometry_factor_ohm, frequency_hz,
                     weighted](std::span<const double> p) {
        const BcsParams bcs{p[0], p[1]};
        std::vector<double> r;
        r.reserve(canon.points.size());
        for (const ThermalPoint& pt : canon.points) {
            const double model = tc_vs_temperature(bcs, p[2], geometry_factor_ohm,
                                                   frequency_hz, pt.temperature_k);
            const double sigma = weighted ? pt.tc_err_s : 1.0;
            r.push_back((model - pt.tc_s) / sigma);
        }
        return r;
    };

    return least_squares(obj, {init.a_coeff_ohm_k, init.gap_over_kb_k,
                               init.r_residual_ohm}, opts);
}

}  // namespace fpcavity
