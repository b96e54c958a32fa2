#pragma once

// Shared fixtures for the test suites: the reference cavity, synthetic
// thermal datasets and the standard three-attenuation ring-down design.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "fpcavity/loss_budget.hpp"
#include "fpcavity/resonator_modes.hpp"
#include "fpcavity/ringdown.hpp"
#include "fpcavity/rng.hpp"

namespace testutil {

inline fpcavity::CavityGeometry reference_cavity() {
    return fpcavity::CavityGeometry{0.02757, 0.0394, 0.0406, 0.050, 10e-9};
}

inline constexpr double kGeometryFactorOhm = 2800.0;
inline constexpr double kFrequencyHz = 51.099e9;

inline constexpr fpcavity::BcsParams kThermalTruth{0.0365, 20.2};
inline constexpr double kResidualTruthOhm = 75e-9;

/// Damping-time-versus-temperature data from the thermal truth model.
/// noise_frac > 0 adds multiplicative Gaussian noise and records the
/// matching per-point standard error.
inline fpcavity::ThermalDataset synthetic_thermal(double noise_frac, std::uint64_t seed,
                                                  double t_min_k = 0.8,
                                                  double t_max_k = 4.2,
                                                  double t_step_k = 0.2) {
    fpcavity::ThermalDataset data;
    std::mt19937_64 gen(fpcavity::substream_seed(seed, 0x746865726dULL));
    for (double t = t_min_k; t <= t_max_k + 1e-9; t += t_step_k) {
        fpcavity::ThermalPoint pt;
        pt.temperature_k = t;
        const double truth = fpcavity::tc_vs_temperature(
            kThermalTruth, kResidualTruthOhm, kGeometryFactorOhm, kFrequencyHz, t);
        if (noise_frac > 0.0) {
            pt.tc_s = truth * (1.0 + noise_frac * fpcavity::normal_draw(gen));
            pt.tc_err_s = noise_frac * truth;
        } else {
            pt.tc_s = truth;
        }
        data.points.push_back(pt);
    }
    return data;
}

inline constexpr double kRingdownTcTruth = 0.112;
inline const fpcavity::ProbeModel kProbeTruth{0.02, 0.85, 7.0};

/// Probe with the measured contrast of the reference experiment: transition
/// probability spanning roughly 0.05 to 0.40.  Statistical checks use this
/// model so simulated uncertainties land on the reported few-millisecond
/// scale.
inline const fpcavity::ProbeModel kPaperProbe{0.05, 0.40, 7.0};

/// Attenuations 0, 10/ln10 and 20/ln10 dB: initial energies E0, E0/e,
/// E0/e^2, i.e. curves shifted by exactly one and two damping times.
inline std::vector<fpcavity::CurveDesign> paper_design(int n_points = 25,
                                                       int shots = 1600,
                                                       double t_end_s = 0.4) {
    const std::vector<double> grid = fpcavity::uniform_grid(0.0, t_end_s, n_points);
    return {
        fpcavity::CurveDesign{0.0, grid, shots},
        fpcavity::CurveDesign{fpcavity::kDbPerNeper, grid, shots},
        fpcavity::CurveDesign{2.0 * fpcavity::kDbPerNeper, grid, shots},
    };
}

/// Noiseless dataset: fractions quantized onto a huge shot count so the
/// binomial layer is exact to ~1e-9.
inline fpcavity::RingdownDataset noiseless_ringdown(
    const fpcavity::ProbeModel& model, double tc_s,
    const std::vector<fpcavity::CurveDesign>& design) {
    fpcavity::RingdownDataset data;
    for (const fpcavity::CurveDesign& curve_design : design) {
        fpcavity::RingdownCurve curve;
        curve.attenuation_db = curve_design.attenuation_db;
        for (double t : curve_design.times_s) {
            const double p =
                fpcavity::curve_probability(model, tc_s, curve_design.attenuation_db, t);
            fpcavity::RingdownPoint pt;
            pt.total = 1000000000;
            pt.detected = static_cast<int>(std::round(p * pt.total));
            pt.time_s = t;
            curve.points.push_back(pt);
        }
        data.curves.push_back(curve);
    }
    return data;
}

}  // namespace testutil
