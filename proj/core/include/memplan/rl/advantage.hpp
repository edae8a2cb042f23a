#pragma once

#include <span>
#include <vector>

namespace memplan::rl {

struct GroupStats {
  double mean = 0.0;
  double stddev = 0.0;
  std::vector<double> advantages;
};

// (R - mean) / (std + epsilon). Population std by default. Groups whose
// rewards are all equal get exactly zero advantages.
GroupStats group_advantages(std::span<const double> rewards, double epsilon = 1e-4, bool population_std = true);

}  // namespace memplan::rl
