// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <set>
#include <string>
#include <vector>

#include "searchrl/harness.hpp"
#include "searchrl/reward.hpp"
#include "searchrl/rrm.hpp"
#include "searchrl/trajectory.hpp"

namespace searchrl {

// Shared trajectory-to-reward path: format check, atom scoring with the
// configured backend (remote degrades to the heuristic, then to zero), and
// the hybrid mix. Thread-safe; remote calls are bounded by the client gate.
class TrajectoryScorer {
 public:
  TrajectoryScorer(const EpisodeLimits& limits, std::set<std::string> registry_names,
                   const RrmRunConfig& rrm);

  RewardBreakdown score(const Trajectory& traj, const std::vector<std::string>& references,
                        double alpha) const;

 private:
  EpisodeLimits limits_;
  std::set<std::string> registry_names_;
  bool remote_ = false;
  std::unique_ptr<RrmClient> client_;
  std::string template_text_;
};

}  // namespace searchrl
