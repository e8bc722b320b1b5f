// SPDX-License-Identifier: Apache-2.0
#include "emofuse/error.hpp"

namespace emofuse {

std::string shape_string(long rows, long cols) {
  return std::to_string(rows) + " x " + std::to_string(cols);
}

}  // namespace emofuse
