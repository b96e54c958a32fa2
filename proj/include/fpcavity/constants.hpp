#pragma once

#include <numbers>

namespace fpcavity {

/// Speed of light in vacuum (m/s), exact by SI definition.
inline constexpr double kSpeedOfLight = 299'792'458.0;

inline constexpr double kPi = std::numbers::pi;

/// Energy attenuation step (dB) equivalent to one factor of e, 10/ln(10).
inline constexpr double kDbPerNeper = 10.0 / std::numbers::ln10;

}  // namespace fpcavity
