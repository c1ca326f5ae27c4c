// SPDX-License-Identifier: Apache-2.0

#include "spansketch/numeric.hpp"

#include <cstdio>

namespace spansketch {

std::string Numeric::to_string() const {
  if (exact) return std::to_string(*exact);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

} // namespace spansketch
