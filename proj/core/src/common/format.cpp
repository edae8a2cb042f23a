#include "memplan/common/format.hpp"

#include <fmt/format.h>

namespace memplan {

std::string fixed6(double v) {
  auto s = fmt::format("{:.6f}", v);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

}  // namespace memplan
