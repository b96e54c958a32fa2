#pragma once

// Paraxial Gaussian-mode geometry and spectra of a symmetric two-mirror
// cavity with astigmatic (toroidal) mirrors.
//
// The two principal curvature planes are treated as decoupled, each with
// its own stability parameter g_a = 1 - L/R_a.  Per axis (symmetric
// cavity, waist at the midpoint):
//
//   z_R = sqrt(L (2R - L)) / 2
//   w0  = sqrt(lambda z_R / pi)
//   w(z) = w0 sqrt(1 + (z/z_R)^2)
//
// Resonances follow the standard paraxial condition with per-axis Gouy
// phases:
//
//   nu(q,m,n) = FSR [ q + (m + 1/2) acos(g_x)/pi + (n + 1/2) acos(g_y)/pi ]
//
// All lengths in meters, frequencies in hertz.

#include <cmath>
#include <string>
#include <utility>

#include "fpcavity/constants.hpp"
#include "fpcavity/errors.hpp"

namespace fpcavity {

struct CavityGeometry {
    double length_m = 0.0;           ///< mirror apex spacing L
    double radius_x_m = 0.0;         ///< radius of curvature, x principal plane
    double radius_y_m = 0.0;         ///< radius of curvature, y principal plane
    double mirror_diameter_m = 0.0;  ///< aperture diameter D0
    double roughness_rms_m = 0.0;    ///< r.m.s. surface deviation h_rms
};

struct ModeIndices {
    int q = 1;  ///< longitudinal index, >= 1
    int m = 0;  ///< transverse index along x
    int n = 0;  ///< transverse index along y
};

struct ModeProperties {
    double frequency_hz = 0.0;
    double fsr_hz = 0.0;
    double waist_x_m = 0.0;
    double waist_y_m = 0.0;
    double rayleigh_x_m = 0.0;
    double rayleigh_y_m = 0.0;
    double mirror_spot_x_m = 0.0;
    double mirror_spot_y_m = 0.0;
    double gouy_x_rad = 0.0;  ///< one-way Gouy phase acos(g_x)
    double gouy_y_rad = 0.0;
    double polarization_splitting_hz = 0.0;
};

inline void validate_geometry(const CavityGeometry& geom) {
    if (!(geom.length_m > 0.0)) throw NonPositiveInput("length_m must be > 0");
    if (!(geom.radius_x_m > 0.0)) throw NonPositiveInput("radius_x_m must be > 0");
    if (!(geom.radius_y_m > 0.0)) throw NonPositiveInput("radius_y_m must be > 0");
    if (!(geom.mirror_diameter_m > 0.0)) throw NonPositiveInput("mirror_diameter_m must be > 0");
    if (geom.roughness_rms_m < 0.0) throw NonPositiveInput("roughness_rms_m must be >= 0");
}

/// Stability parameters g_a = 1 - L/R_a for the two principal planes.
inline std::pair<double, double> stability_g(const CavityGeometry& geom) {
    validate_geometry(geom);
    return {1.0 - geom.length_m / geom.radius_x_m,
            1.0 - geom.length_m / geom.radius_y_m};
}

/// Rejects geometries with g_a^2 >= 1 on either axis.  g = 1 is unreachable
/// for finite positive L and R; the failing case is L >= 2R (g <= -1).
inline void require_stable(const CavityGeometry& geom) {
    const auto [gx, gy] = stability_g(geom);
    if (gx * gx >= 1.0 || gy * gy >= 1.0) {
        throw UnstableGeometry("unstable geometry: g_x=" + std::to_string(gx) +
                               ", g_y=" + std::to_string(gy) +
                               " (need g^2 < 1 on both axes)");
    }
}

inline double free_spectral_range(const CavityGeometry& geom) {
    validate_geometry(geom);
    return kSpeedOfLight / (2.0 * geom.length_m);
}

/// First-order vector correction for toroidal mirrors:
/// dnu = (c lambda / 4 pi^2 L) |1/R_x - 1/R_y|.  Zero iff R_x = R_y.
inline double polarization_splitting(const CavityGeometry& geom, double wavelength_m) {
    require_stable(geom);
    if (!(wavelength_m > 0.0)) throw NonPositiveInput("wavelength_m must be > 0");
    const double curvature_diff =
        std::abs(1.0 / geom.radius_x_m - 1.0 / geom.radius_y_m);
    return kSpeedOfLight * wavelength_m / (4.0 * kPi * kPi * geom.length_m) *
           curvature_diff;
}

/// Mode geometry (waists, Rayleigh ranges, mirror spots, Gouy phases) at a
/// given wavelength.  frequency_hz is set to c/lambda.
inline ModeProperties mode_geometry(const CavityGeometry& geom, double wavelength_m) {
    require_stable(geom);
    if (!(wavelength_m > 0.0)) throw NonPositiveInput("wavelength_m must be > 0");

    ModeProperties mode;
    mode.frequency_hz = kSpeedOfLight / wavelength_m;
    mode.fsr_hz = free_spectral_range(geom);

    const double half_length = geom.length_m / 2.0;
    const auto axis = [&](double radius, double& waist, double& rayleigh,
                          double& spot, double& gouy) {
        rayleigh = 0.5 * std::sqrt(geom.length_m * (2.0 * radius - geom.length_m));
        waist = std::sqrt(wavelength_m * rayleigh / kPi);
        spot = waist * std::sqrt(1.0 + (half_length / rayleigh) * (half_length / rayleigh));
        gouy = std::acos(1.0 - geom.length_m / radius);
    };
    axis(geom.radius_x_m, mode.waist_x_m, mode.rayleigh_x_m, mode.mirror_spot_x_m,
         mode.gouy_x_rad);
    axis(geom.radius_y_m, mode.waist_y_m, mode.rayleigh_y_m, mode.mirror_spot_y_m,
         mode.gouy_y_rad);

    mode.polarization_splitting_hz = polarization_splitting(geom, wavelength_m);
    return mode;
}

inline void validate_indices(const ModeIndices& idx) {
    if (idx.q < 1) throw NonPositiveInput("longitudinal index q must be >= 1");
    if (idx.m < 0 || idx.n < 0) throw NonPositiveInput("transverse indices must be >= 0");
}

/// Resonance frequency of TEM_qmn.
inline double resonance_frequency(const CavityGeometry& geom, const ModeIndices& idx) {
    validate_indices(idx);
    require_stable(geom);
    const auto [gx, gy] = stability_g(geom);
    const double gouy_fraction =
        ((idx.m + 0.5) * std::acos(gx) + (idx.n + 0.5) * std::acos(gy)) / kPi;
    return free_spectral_range(geom) * (static_cast<double>(idx.q) + gouy_fraction);
}

/// Full mode description: frequency from the resonance condition, geometry
/// evaluated at the corresponding wavelength.
inline ModeProperties mode_properties(const CavityGeometry& geom, const ModeIndices& idx) {
    const double frequency = resonance_frequency(geom, idx);
    ModeProperties mode = mode_geometry(geom, kSpeedOfLight / frequency);
    mode.frequency_hz = frequency;
    return mode;
}

/// Normalized transverse intensity envelope I/I_max at (x, y, z); z is the
/// axial offset from the waist.  Equals 1 at the origin.
inline double intensity_profile(const ModeProperties& mode, double x_m, double y_m,
                                double z_m) {
    const auto spot_at = [&](double waist, double rayleigh) {
        const double ratio = z_m / rayleigh;
        return waist * std::sqrt(1.0 + ratio * ratio);
    };
    const double wx = spot_at(mode.waist_x_m, mode.rayleigh_x_m);
    const double wy = spot_at(mode.waist_y_m, mode.rayleigh_y_m);
    return std::exp(-2.0 * x_m * x_m / (wx * wx)) *
           std::exp(-2.0 * y_m * y_m / (wy * wy));
}

/// Frequency shift of a mode when one mirror moves by displacement_m:
/// dnu = -nu dL / L.
inline double displacement_to_detuning(const CavityGeometry& geom, double frequency_hz,
                                       double displacement_m) {
    validate_geometry(geom);
    if (!(frequency_hz > 0.0)) throw NonPositiveInput("frequency_hz must be > 0");
    return -frequency_hz * displacement_m / geom.length_m;
}

/// Exact inverse of displacement_to_detuning.
inline double detuning_to_displacement(const CavityGeometry& geom, double frequency_hz,
                                       double detuning_hz) {
    validate_geometry(geom);
    if (!(frequency_hz > 0.0)) throw NonPositiveInput("frequency_hz must be > 0");
    return -geom.length_m * detuning_hz / frequency_hz;
}

/// Geometry with both radii replaced by their mean; used wherever a single
/// scalar waist or spot is quoted for an astigmatic cavity.
inline CavityGeometry mean_radius_geometry(const CavityGeometry& geom) {
    CavityGeometry mean = geom;
    const double r = 0.5 * (geom.radius_x_m + geom.radius_y_m);
    mean.radius_x_m = r;
    mean.radius_y_m = r;
    return mean;
}

}  // namespace fpcavity
