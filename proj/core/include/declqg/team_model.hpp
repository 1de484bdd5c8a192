#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "declqg/matrix.hpp"

namespace declqg {

/// One named row block of a member's information vector:
/// rows of Z equal to  h * Xi + sum_j d[j] * U^j.
struct InfoBlock {
  std::string id;
  Mat h;                 // rows x d_xi
  std::map<int, Mat> d;  // member index j -> rows x d_u^j; absent means zero

  int rows() const { return static_cast<int>(h.rows()); }
};

struct Member {
  int index = 0;  // 1-based
  int d_u = 0;
  Mat n_block;                      // cost columns N^i
  std::vector<std::string> blocks;  // ordered info block ids
};

/// A full team problem instance: exogenous law, cost blocks, and the
/// information structure expressed through a registry of named blocks.
struct TeamProblem {
  int n = 0;
  int d_xi = 0;
  Mat sigma;  // d_xi x d_xi, positive definite
  Mat m;      // cost rows x d_xi
  std::vector<Member> members;
  std::map<std::string, InfoBlock> block_registry;

  const Member& member(int i) const;
  const InfoBlock& block(const std::string& id) const;

  int cost_rows() const { return static_cast<int>(m.rows()); }
  int total_du() const;
  int info_rows(int i) const;

  /// Stacked H rows of member i's blocks, in block order.
  Mat h_of(int i) const;
  /// Stacked D^{ij} rows of member i's blocks (zero where absent).
  Mat d_of(int i, int j) const;
  /// [N^t ; D^{1t} ; ... ; D^{nt}] — the stacked effect of member t's action
  /// on cost and on every member's information.
  Mat stacked_effect(int t) const;
  /// [N^1 ... N^n]
  Mat n_stacked() const;
};

/// Checks every structural invariant and returns a human-readable list of
/// violations; an empty list means the problem is valid. Never throws.
std::vector<std::string> validate(const TeamProblem& problem);

/// True iff every block of member s's information appears in member k's.
bool subvector(const TeamProblem& problem, int s, int k);

struct PrecedenceStructure {
  // related[s-1][t-1]: D^{ts} != 0 somewhere in t's blocks
  std::vector<std::vector<bool>> related;
  std::vector<std::set<int>> precedents;  // P^t, 0-indexed by t-1
  std::vector<std::set<int>> critical;    // C^t
  bool partially_nested = false;
};

PrecedenceStructure analyze_precedence(const TeamProblem& problem);

/// Certificate that member k can substitute for member t on the critical
/// pair (s, t): stacked_effect(k) * lambda reproduces stacked_effect(t).
struct SubstitutionCertificate {
  int s = 0;
  int t = 0;
  int k = 0;
  Mat lambda;  // d_u^k x d_u^t
  double containment_residual = 0.0;
};

using CertificateMap = std::map<std::pair<int, int>, SubstitutionCertificate>;

/// For each critical pair (s,t), finds the smallest-index member k with
/// subvector(s,k) and column-space containment of the stacked effects, and
/// computes the substitution map per the pseudo-inverse formula. Throws
/// AssumptionViolated naming the first pair with no qualifying member.
CertificateMap certify_substitutability(const TeamProblem& problem,
                                        const PrecedenceStructure& structure,
                                        const Tolerance& tol = {});

/// Merges numerically identical (H, D)-row groups into shared block ids for
/// problems authored without explicit block sharing. Rows must match
/// bitwise for two blocks to be merged.
TeamProblem infer_blocks(const TeamProblem& problem);

}  // namespace declqg
