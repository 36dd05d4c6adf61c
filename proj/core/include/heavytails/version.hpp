#pragma once

namespace heavytails {

inline constexpr const char* kVersion = "0.1.0";

}
