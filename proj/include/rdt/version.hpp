#pragma once

namespace rdt {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace rdt
