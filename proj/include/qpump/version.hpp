#pragma once

namespace qpump {

inline constexpr const char* kVersion = "0.3.0";

}  // namespace qpump
