#pragma once

#include <string>

namespace memplan {

// Fixed six-place decimal used in every report and metrics line.
std::string fixed6(double v);

}  // namespace memplan
