#pragma once

#include <string_view>

namespace uvgrasp {

// Library version, "major.minor.patch".
std::string_view
version() noexcept;

} // namespace uvgrasp
