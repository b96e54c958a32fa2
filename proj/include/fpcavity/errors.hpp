#pragma once

#include <stdexcept>
#include <string>

namespace fpcavity {

/// Base class for all toolkit errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Cavity geometry with g^2 >= 1 on some axis; no confined paraxial mode.
struct UnstableGeometry : Error {
    using Error::Error;
};

/// An input that must be strictly positive was zero or negative.
struct NonPositiveInput : Error {
    using Error::Error;
};

/// Temperature argument was <= 0.
struct NonPositiveTemperature : Error {
    using Error::Error;
};

/// Temperature outside the validity range of the two-parameter BCS form.
struct TemperatureOutOfRange : Error {
    using Error::Error;
};

/// Surface roughness is exactly zero; the scattering Q is unbounded.
struct ZeroRoughness : Error {
    using Error::Error;
};

struct EmptyList : Error {
    using Error::Error;
};

/// Measurement design rejected (empty grid, duplicate times, zero shots, ...).
struct InvalidDesign : Error {
    using Error::Error;
};

struct InsufficientData : Error {
    using Error::Error;
};

/// Data points all lie on one side of the thermal knee; the gap and the
/// material coefficient cannot be separated.
struct DegenerateRegime : Error {
    using Error::Error;
};

struct IdentifiabilityError : Error {
    using Error::Error;
};

/// Shifted ring-down curves share no common time support.
struct NonOverlappingSupport : Error {
    using Error::Error;
};

struct FitDidNotConverge : Error {
    using Error::Error;
};

/// Residual evaluation left the model domain; message carries the offending
/// parameter vector.
struct NonFiniteResidual : Error {
    using Error::Error;
};

/// Jacobian rank-deficient; message names the null-space direction.
struct SingularJacobian : Error {
    using Error::Error;
};

/// Malformed config, dataset or design file; message carries the location.
struct ParseError : Error {
    using Error::Error;
};

}  // namespace fpcavity
