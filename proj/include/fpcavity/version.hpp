#pragma once

namespace fpcavity {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace fpcavity
