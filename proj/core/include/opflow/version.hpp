#pragma once

namespace opflow {

inline constexpr const char* kOpflowVersion = "0.1.0";

}  // namespace opflow
