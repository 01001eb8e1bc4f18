#include "uvgrasp/version.hpp"

namespace uvgrasp {

std::string_view
version() noexcept
{
  return UVGRASP_VERSION;
}

} // namespace uvgrasp
