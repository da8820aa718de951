#pragma once

namespace qrm {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace qrm
