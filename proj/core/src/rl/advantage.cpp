#include "memplan/rl/advantage.hpp"

#include <algorithm>
#include <cmath>

#include "memplan/common/error.hpp"

namespace memplan::rl {

GroupStats group_advantages(std::span<const double> rewards, double epsilon, bool population_std) {
  if (rewards.empty()) throw PreconditionError("group advantages need at least one reward");
  if (!(epsilon > 0.0)) throw PreconditionError("advantage epsilon must be positive");
  GroupStats g;
  const auto n = static_cast<double>(rewards.size());
  double sum = 0.0;
  for (double r : rewards) sum += r;
  g.mean = sum / n;
  double ss = 0.0;
  for (double r : rewards) ss += (r - g.mean) * (r - g.mean);
  const double denom = population_std ? n : n - 1.0;
  g.stddev = denom > 0.0 ? std::sqrt(ss / denom) : 0.0;

  g.advantages.assign(rewards.size(), 0.0);
  bool all_equal = std::all_of(rewards.begin(), rewards.end(), [&](double r) { return r == rewards[0]; });
  if (all_equal) {
    g.mean = rewards[0];
    g.stddev = 0.0;
    return g;
  }
  for (std::size_t i = 0; i < rewards.size(); ++i) g.advantages[i] = (rewards[i] - g.mean) / (g.stddev + epsilon);
  return g;
}

}  // namespace memplan::rl
