#pragma once

#include "declqg/static_team.hpp"

namespace declqg {

/// Per-member information structure violations: E^i lists the critical-pair
/// partners whose blocks member i's strategy actually reads.
struct ViolationSet {
  std::vector<std::set<int>> e;  // 0-indexed by member

  int total() const;
};

/// A coefficient "uses Z^r" iff any entry of its matrix on a block belonging
/// to r but not to i exceeds `zero_threshold` in magnitude (default: exact
/// zero semantics).
ViolationSet violations(const LinearTeamStrategy& strategy,
                        const TeamProblem& base,
                        const PrecedenceStructure& structure,
                        double zero_threshold = 0.0);

/// One substitution rewrite: member t stops reading Z^s; the substituting
/// member k absorbs lambda * K^{ts} on s's blocks (all of which k owns).
LinearTeamStrategy substitute_once(const LinearTeamStrategy& strategy, int t, int s,
                              const SubstitutionCertificate& certificate,
                              const TeamProblem& base,
                              double zero_threshold = 0.0);

struct TransformIteration {
  int l = 0;
  int t = 0;
  int s = 0;
  int k = 0;
  double nu_drift = 0.0;
  double z_drift = 0.0;
  int violations_after = 0;
};

struct TransformTrace {
  std::vector<TransformIteration> iterations;
};

struct DriftReport {
  double nu_drift = 0.0;
  double z_drift = 0.0;
};

/// Compares the composite controls of two strategies on the expanded
/// problem: nu_drift = ||N P_after - N P_before||_F, z_drift = the largest
/// Frobenius change of any information block's composite map.
DriftReport verify_rewrite_invariance(const LinearTeamStrategy& before,
                          const LinearTeamStrategy& after,
                          const ExpandedProblem& expanded);

struct TransformOptions {
  double zero_threshold = 0.0;  // coefficient pruning before counting uses
  bool drift_checks = true;     // verify cost/information invariance per step
  double drift_tol = 1e-9;
};

struct TransformResult {
  LinearTeamStrategy final;  // original mode, zero violations
  TransformTrace trace;
};

/// Iterates the substitution rewrite over members in ascending order,
/// always removing the smallest violating partner first, until the strategy
/// is implementable in the original information structure.
TransformResult transform_strategy(const LinearTeamStrategy& strategy,
                           const ExpandedProblem& expanded,
                           const PrecedenceStructure& structure,
                           const CertificateMap& certificates,
                           const TransformOptions& options = {});

}  // namespace declqg
