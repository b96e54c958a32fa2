#pragma once

// Atomic-probe ring-down: simulation of multi-attenuation decay curves and
// two estimators of the cavity damping time.
//
// The stored energy decays as E(t) = E0 exp(-t/Tc).  The probe transition
// probability is a saturating function of the instantaneous energy,
//
//   p(u) = p_bg + (p_sat - p_bg)(1 - exp(-u)),    u = E/E_sat,
//
// so a curve taken with source attenuation a (dB) is the zero-attenuation
// curve shifted in time by a (ln 10 / 10) Tc.  fit_ringdown fits the full
// model; shift_estimate uses only the time-shift identity, which holds for
// any monotone p(E), and serves as a model-light cross-check.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fpcavity/constants.hpp"
#include "fpcavity/errors.hpp"
#include "fpcavity/fit_engine.hpp"
#include "fpcavity/rng.hpp"

namespace fpcavity {

struct ProbeModel {
    double p_background = 0.0;  ///< transition probability at zero field
    double p_saturated = 1.0;   ///< asymptotic transition probability
    double u0 = 1.0;            ///< initial energy in saturation units
};

inline void validate_probe(const ProbeModel& m) {
    if (!(m.p_background >= 0.0 && m.p_background < 1.0)) {
        throw NonPositiveInput("p_background must lie in [0,1)");
    }
    if (!(m.p_saturated > m.p_background && m.p_saturated <= 1.0)) {
        throw NonPositiveInput("p_saturated must lie in (p_background, 1]");
    }
    if (!(m.u0 > 0.0)) throw NonPositiveInput("u0 must be > 0");
}

/// E(t) = E0 exp(-t/Tc).
inline double field_energy(double e0, double tc_s, double t_s) {
    if (!(tc_s > 0.0)) throw NonPositiveInput("tc must be > 0");
    if (e0 < 0.0) throw NonPositiveInput("e0 must be >= 0");
    if (t_s < 0.0) throw NonPositiveInput("t must be >= 0");
    return e0 * std::exp(-t_s / tc_s);
}

/// Saturating absorption law, monotone increasing in u.
inline double transition_probability(const ProbeModel& m, double u) {
    if (u < 0.0) throw NonPositiveInput("energy must be >= 0");
    return m.p_background + (m.p_saturated - m.p_background) * (1.0 - std::exp(-u));
}

/// Probe response at delay t for a source attenuation in dB
/// (energy scale factor 10^(-att/10)).
inline double curve_probability(const ProbeModel& m, double tc_s, double attenuation_db,
                                double t_s) {
    if (attenuation_db < 0.0) throw NonPositiveInput("attenuation must be >= 0 dB");
    const double u_start = m.u0 * std::pow(10.0, -attenuation_db / 10.0);
    return transition_probability(m, field_energy(u_start, tc_s, t_s));
}

struct RingdownPoint {
    double time_s = 0.0;
    int detected = 0;
    int total = 0;

    double fraction() const { return static_cast<double>(detected) / total; }
};

struct RingdownCurve {
    double attenuation_db = 0.0;
    std::vector<RingdownPoint> points;
};

struct RingdownDataset {
    std::vector<RingdownCurve> curves;
    double frequency_hz = 0.0;          ///< metadata; 0 when unknown
    std::optional<std::uint64_t> seed;  ///< recorded at simulation time
};

/// Sorts curves by attenuation and points by time, then validates the
/// dataset invariants.
inline RingdownDataset canonicalize(RingdownDataset data) {
    std::sort(data.curves.begin(), data.curves.end(),
              [](const RingdownCurve& a, const RingdownCurve& b) {
                  return a.attenuation_db < b.attenuation_db;
              });
    bool any_points = false;
    for (std::size_t c = 0; c < data.curves.size(); ++c) {
        RingdownCurve& curve = data.curves[c];
        if (curve.attenuation_db < 0.0) {
            throw Error("curve " + std::to_string(c) + ": attenuation must be >= 0 dB");
        }
        if (c > 0 && !(data.curves[c - 1].attenuation_db < curve.attenuation_db)) {
            throw Error("attenuations must be pairwise distinct");
        }
        std::sort(curve.points.begin(), curve.points.end(),
                  [](const RingdownPoint& a, const RingdownPoint& b) {
                      return a.time_s < b.time_s;
                  });
        for (std::size_t k = 0; k < curve.points.size(); ++k) {
            const RingdownPoint& pt = curve.points[k];
            if (pt.time_s < 0.0) throw Error("times must be >= 0");
            if (pt.total <= 0) throw Error("total counts must be > 0");
            if (pt.detected < 0 || pt.detected > pt.total) {
                throw Error("detected must lie in [0, total]");
            }
            if (k > 0 && !(curve.points[k - 1].time_s < pt.time_s)) {
                throw Error("times must be strictly increasing within a curve");
            }
            any_points = true;
        }
    }
    if (!any_points) throw Error("dataset has no points");
    return data;
}

struct CurveDesign {
    double attenuation_db = 0.0;
    std::vector<double> times_s;
    int shots = 1600;
};

/// Draws binomial counts for every design point.  Each curve consumes an
/// independent substream keyed by (seed, attenuation), so curve order in
/// the design does not alter the draws and identical inputs reproduce the
/// dataset bit for bit.
inline RingdownDataset simulate(const ProbeModel& m, double tc_s,
                                std::span<const CurveDesign> design,
                                std::uint64_t seed) {
    validate_probe(m);
    if (!(tc_s > 0.0)) throw NonPositiveInput("tc must be > 0");
    if (design.empty()) throw InvalidDesign("design has no curves");

    RingdownDataset data;
    data.seed = seed;
    for (std::size_t c = 0; c < design.size(); ++c) {
        const CurveDesign& spec_curve = design[c];
        if (spec_curve.times_s.empty()) {
            throw InvalidDesign("curve " + std::to_string(c) + ": empty time grid");
        }
        if (spec_curve.shots < 1) {
            throw InvalidDesign("curve " + std::to_string(c) + ": shots must be >= 1");
        }
        if (spec_curve.attenuation_db < 0.0) {
            throw InvalidDesign("curve " + std::to_string(c) +
                                ": attenuation must be >= 0 dB");
        }
        for (std::size_t o = 0; o < c; ++o) {
            if (design[o].attenuation_db == spec_curve.attenuation_db) {
                throw InvalidDesign("duplicate attenuation " +
                                    std::to_string(spec_curve.attenuation_db) + " dB");
            }
        }
        std::vector<double> times = spec_curve.times_s;
        std::sort(times.begin(), times.end());
        for (std::size_t k = 0; k < times.size(); ++k) {
            if (times[k] < 0.0) {
                throw InvalidDesign("curve " + std::to_string(c) + ": negative time");
            }
            if (k > 0 && times[k] == times[k - 1]) {
                throw InvalidDesign("curve " + std::to_string(c) +
                                    ": duplicate time " + std::to_string(times[k]));
            }
        }

        std::mt19937_64 gen(substream_seed(
            seed, std::bit_cast<std::uint64_t>(spec_curve.attenuation_db)));
        RingdownCurve curve;
        curve.attenuation_db = spec_curve.attenuation_db;
        curve.points.reserve(times.size());
        for (double t : times) {
            const double p = curve_probability(m, tc_s, spec_curve.attenuation_db, t);
            RingdownPoint pt;
            pt.time_s = t;
            pt.total = spec_curve.shots;
            pt.detected = binomial_draw(gen, spec_curve.shots, p);
            curve.points.push_back(pt);
        }
        data.curves.push_back(std::move(curve));
    }
    return canonicalize(std::move(data));
}

/// Uniform grid of n points covering [t_start, t_end].
inline std::vector<double> uniform_grid(double t_start, double t_end, int n_points) {
    if (n_points < 1 || !(t_end > t_start) || t_start < 0.0) {
        throw InvalidDesign("invalid time grid");
    }
    std::vector<double> t(static_cast<std::size_t>(n_points));
    if (n_points == 1) {
        t[0] = t_start;
        return t;
    }
    const double dt = (t_end - t_start) / (n_points - 1);
    for (int i = 0; i < n_points; ++i) t[static_cast<std::size_t>(i)] = t_start + i * dt;
    return t;
}

struct PairShift {
    std::size_t low_index = 0;   ///< curve with the smaller attenuation
    std::size_t high_index = 0;
    double delta_db = 0.0;
    double shift_s = 0.0;        ///< time shift between the two curves
    double tc_s = 0.0;           ///< shift converted to a damping time
    double sigma_s = 0.0;        ///< standard error of tc_s from the pair
};

struct ShiftEstimate {
    double tc_s = 0.0;
    double std_error_s = 0.0;
    std::vector<PairShift> pairs;
};

namespace detail {

inline double lerp_fraction(const RingdownCurve& curve, double t) {
    const auto& pts = curve.points;
    auto it = std::lower_bound(pts.begin(), pts.end(), t,
                               [](const RingdownPoint& p, double v) {
                                   return p.time_s < v;
                               });
    if (it == pts.begin()) return pts.front().fraction();
    if (it == pts.end()) return pts.back().fraction();
    const RingdownPoint& hi = *it;
    const RingdownPoint& lo = *(it - 1);
    const double f = (t - lo.time_s) / (hi.time_s - lo.time_s);
    return lo.fraction() + f * (hi.fraction() - lo.fraction());
}

/// Mean squared discrepancy between curve `low` sampled at t+tau and curve
/// `high` sampled at t; returns the overlap count through n_overlap.
inline double shift_discrepancy(const RingdownCurve& low, const RingdownCurve& high,
                                double tau, std::size_t& n_overlap) {
    const double lo_min = low.points.front().time_s;
    const double lo_max = low.points.back().time_s;
    double sum = 0.0;
    n_overlap = 0;
    for (const RingdownPoint& pt : high.points) {
        const double t_shifted = pt.time_s + tau;
        if (t_shifted < lo_min || t_shifted > lo_max) continue;
        const double d = lerp_fraction(low, t_shifted) - pt.fraction();
        sum += d * d;
        ++n_overlap;
    }
    return n_overlap > 0 ? sum / static_cast<double>(n_overlap)
                         : std::numeric_limits<double>::infinity();
}

}  // namespace detail

/// Model-light damping-time estimator: for every curve pair, the time shift
/// minimizing the squared discrepancy between the linearly interpolated
/// fraction curves, converted via Tc = tau (10/ln 10)/delta_dB and combined
/// by inverse variance.
inline ShiftEstimate shift_estimate(const RingdownDataset& input) {
    const RingdownDataset data = canonicalize(input);
    if (data.curves.size() < 2) {
        throw IdentifiabilityError("shift estimation needs at least two curves "
                                   "with distinct attenuations");
    }

    ShiftEstimate estimate;
    for (std::size_t i = 0; i < data.curves.size(); ++i) {
        for (std::size_t j = i + 1; j < data.curves.size(); ++j) {
            const RingdownCurve& low = data.curves[i];   // smaller attenuation
            const RingdownCurve& high = data.curves[j];
            if (low.points.size() < 2 || high.points.size() < 2) continue;

            const double lo_min = low.points.front().time_s;
            const double lo_max = low.points.back().time_s;
            const double hi_min = high.points.front().time_s;
            const double hi_max = high.points.back().time_s;
            // Feasible shifts keeping any overlap at all.
            const double tau_lo = lo_min - hi_max;
            const double tau_hi = lo_max - hi_min;
            if (!(tau_hi > tau_lo)) continue;

            constexpr std::size_t kMinOverlap = 3;
            const int n_scan = 1200;
            const double dtau = (tau_hi - tau_lo) / n_scan;
            double best_tau = std::numeric_limits<double>::quiet_NaN();
            double best_val = std::numeric_limits<double>::infinity();
            for (int s = 0; s <= n_scan; ++s) {
                const double tau = tau_lo + s * dtau;
                std::size_t n_ov = 0;
                const double val = detail::shift_discrepancy(low, high, tau, n_ov);
                if (n_ov >= kMinOverlap && val < best_val) {
                    best_val = val;
                    best_tau = tau;
                }
            }
            if (!std::isfinite(best_tau)) continue;

            // Golden-section refinement around the scan minimum.
            double a = best_tau - dtau, b = best_tau + dtau;
            const double gr = 0.6180339887498949;
            double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
            std::size_t n_ov = 0;
            double f1 = detail::shift_discrepancy(low, high, x1, n_ov);
            double f2 = detail::shift_discrepancy(low, high, x2, n_ov);
            for (int it = 0; it < 200 && (b - a) > 1e-15 * std::max(1.0, std::abs(b));
                 ++it) {
                if (f1 < f2) {
                    b = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = b - gr * (b - a);
                    f1 = detail::shift_discrepancy(low, high, x1, n_ov);
                } else {
                    a = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a + gr * (b - a);
                    f2 = detail::shift_discrepancy(low, high, x2, n_ov);
                }
            }
            const double tau_star = 0.5 * (a + b);
            std::size_t n_star = 0;
            const double d_star = detail::shift_discrepancy(low, high, tau_star, n_star);
            if (n_star < kMinOverlap) continue;

            const double delta_db = high.attenuation_db - low.attenuation_db;
            PairShift pair;
            pair.low_index = i;
            pair.high_index = j;
            pair.delta_db = delta_db;
            pair.shift_s = tau_star;
            pair.tc_s = tau_star * kDbPerNeper / delta_db;

            // Local curvature of the discrepancy gives the shift variance.
            const double h = std::max((tau_hi - tau_lo) * 1e-4, 1e-12);
            std::size_t n_unused = 0;
            const double d_plus = detail::shift_discrepancy(low, high, tau_star + h, n_unused);
            const double d_minus = detail::shift_discrepancy(low, high, tau_star - h, n_unused);
            const double curvature = (d_plus - 2.0 * d_star + d_minus) / (h * h);
            double sigma_tau;
            if (curvature > 0.0 && n_star > 1) {
                const double var_tau =
                    2.0 * d_star / (static_cast<double>(n_star - 1) * curvature);
                sigma_tau = std::sqrt(std::max(var_tau, 0.0));
            } else {
                sigma_tau = 0.0;
            }
            sigma_tau = std::max(sigma_tau, (tau_hi - tau_lo) * 1e-9);
            pair.sigma_s = sigma_tau * kDbPerNeper / delta_db;
            estimate.pairs.push_back(pair);
        }
    }

    if (estimate.pairs.empty()) {
        throw NonOverlappingSupport("no curve pair shares time overlap after shifting");
    }

    double weight_sum = 0.0, value_sum = 0.0;
    for (const PairShift& pair : estimate.pairs) {
        const double w = 1.0 / (pair.sigma_s * pair.sigma_s);
        weight_sum += w;
        value_sum += w * pair.tc_s;
    }
    estimate.tc_s = value_sum / weight_sum;

    double sigma_pooled = std::sqrt(1.0 / weight_sum);
    if (estimate.pairs.size() >= 2) {
        // Guard against over-tight pooling when the pairs scatter.
        double scatter = 0.0;
        for (const PairShift& pair : estimate.pairs) {
            const double w = 1.0 / (pair.sigma_s * pair.sigma_s);
            const double d = pair.tc_s - estimate.tc_s;
            scatter += w * d * d;
        }
        scatter = std::sqrt(scatter / weight_sum /
                            static_cast<double>(estimate.pairs.size() - 1));
        sigma_pooled = std::max(sigma_pooled, scatter);
    }
    estimate.std_error_s = sigma_pooled;
    return estimate;
}

struct RingdownInit {
    double tc_s = 0.0;
    double u0 = 5.0;
    double p_background = 0.0;
    double p_saturated = 1.0;
};

/// Joint weighted least squares on the observed fractions of all curves.
/// Parameters (tc_s, u0, p_background, p_saturated) are shared across
/// curves; attenuations are known inputs.  Weights are binomial,
/// sigma^2 = f(1-f)/n, floored at 0.25/n for f in {0,1}.
inline FitResult fit_ringdown(const RingdownDataset& input,
                              std::optional<RingdownInit> init = std::nullopt,
                              const FitOptions& opts = {}) {
    const RingdownDataset data = canonicalize(input);

    std::size_t n_points = 0;
    double f_min = 1.0, f_max = 0.0;
    double t_min = std::numeric_limits<double>::infinity(), t_max = 0.0;
    for (const RingdownCurve& curve : data.curves) {
        for (const RingdownPoint& pt : curve.points) {
            ++n_points;
            f_min = std::min(f_min, pt.fraction());
            f_max = std::max(f_max, pt.fraction());
            t_min = std::min(t_min, pt.time_s);
            t_max = std::max(t_max, pt.time_s);
        }
    }
    if (n_points <= 4) {
        throw InsufficientData("ring-down fit needs more points than parameters (4)");
    }

    RingdownInit start;
    std::vector<std::string> init_warnings;
    if (init) {
        start = *init;
        if (!(start.tc_s > 0.0) || !(start.u0 > 0.0)) {
            throw NonPositiveInput("initial tc and u0 must be > 0");
        }
    } else {
        if (data.curves.size() >= 2) {
            start.tc_s = shift_estimate(data).tc_s;
            if (!(start.tc_s > 0.0)) start.tc_s = std::max(t_max - t_min, 1e-6) / 3.0;
        } else {
            start.tc_s = std::max(t_max - t_min, 1e-6) / 3.0;
        }
        start.u0 = 5.0;
        start.p_background = f_min;
        start.p_saturated = std::max(f_max, f_min + 1e-3);
    }

    Objective obj;
    obj.parameter_count = 4;
    obj.log_scale = {true, true, false, false};
    obj.parameter_names = {"tc_s", "u0", "p_background", "p_saturated"};
    obj.residuals = [data](std::span<const double> p) {
        std::vector<double> r;
        for (const RingdownCurve& curve : data.curves) {
            const double scale = std::pow(10.0, -curve.attenuation_db / 10.0);
            for (const RingdownPoint& pt : curve.points) {
                const double u = p[1] * scale * std::exp(-pt.time_s / p[0]);
                const double prediction =
                    p[2] + (p[3] - p[2]) * (1.0 - std::exp(-u));
                const double f = pt.fraction();
                double variance = f * (1.0 - f);
                if (variance == 0.0) variance = 0.25;
                variance /= static_cast<double>(pt.total);
                r.push_back((prediction - f) / std::sqrt(variance));
            }
        }
        return r;
    };

    FitResult result = least_squares(
        obj, {start.tc_s, start.u0, start.p_background, start.p_saturated}, opts);
    if (data.curves.size() < 2) {
        result.warnings.emplace_back(
            "single attenuation curve: time-shift information is absent, tc and u0 "
            "are only weakly identified");
    }
    return result;
}

}  // namespace fpcavity
