#pragma once

namespace qcheat {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace qcheat
