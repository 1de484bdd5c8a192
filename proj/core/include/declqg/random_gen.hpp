#pragma once

#include <cstdint>

#include "declqg/lqg.hpp"
#include "declqg/team_model.hpp"

namespace declqg {

/// Dimension caps for generated instances.
inline constexpr int kMaxGenMembers = 6;
inline constexpr int kMaxGenDim = 8;
inline constexpr int kMaxGenHorizon = 10;

struct TeamGenConfig {
  int n = 3;     // members, 3..kMaxGenMembers
  int d_xi = 2;  // exogenous dimension, 1..kMaxGenDim
};

/// Draws a team problem that satisfies the substitutability assumption by
/// construction: every planned critical pair's stacked effect is a right
/// multiple of its substituting member's stack. The last member observes
/// every block, so it always qualifies as a substitute.
TeamProblem generate_team_problem(const TeamGenConfig& config,
                                  std::uint64_t seed);

struct LqgGenConfig {
  int n = 2;    // controllers, 1..kMaxGenMembers
  int d_x = 2;  // state dimension, 1..kMaxGenDim
  int T = 5;    // horizon, 1..kMaxGenHorizon
};

/// Draws an LQG problem whose stacked [B^i; N^i] blocks all share one
/// column space: each is a base stack times a full-row-rank mixer.
LqgProblem generate_lqg_problem(const LqgGenConfig& config,
                                std::uint64_t seed);

}  // namespace declqg
