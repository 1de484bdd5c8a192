#pragma once

#include "declqg/team_model.hpp"

namespace declqg {

/// The partially nested expansion: each member additionally receives the
/// information blocks of its critical-pair partners (ascending member order,
/// duplicates dropped keeping the first occurrence).
struct ExpandedProblem {
  TeamProblem base;      // original problem
  TeamProblem expanded;  // same data, member info lists replaced by expansions
  std::vector<std::vector<std::string>> expanded_info;  // per member, 0-indexed
};

ExpandedProblem expand(const TeamProblem& problem,
                       const PrecedenceStructure& structure);

/// Static observations of the equivalent static team. Blocks whose H rows
/// are all exactly zero carry no exogenous information and contribute no
/// rows; `surviving_blocks[i]` lists, in order, the expanded blocks whose
/// H rows make up `h_hat[i]`.
struct StaticObservations {
  std::vector<Mat> h_hat;  // per member: rows(h_hat[i]) x d_xi
  std::vector<std::vector<std::string>> surviving_blocks;
};

StaticObservations to_static(const ExpandedProblem& expanded);

/// The assembled linear optimality system over x = vec(Pi^1, ..., Pi^n):
///   sum_j (N^i)' N^j Pi^j Sigma_{Z^j Z^i} = -(N^i)' M Sigma_{Xi Z^i}.
struct StaticSystem {
  Mat a;
  Mat b;                     // right-hand side (one column)
  std::vector<int> offsets;  // start of vec(Pi^i) within x, plus total size
  std::vector<std::pair<int, int>> pi_shapes;  // (rows, cols) of each Pi^i
};

StaticSystem assemble_static_system(const TeamProblem& problem,
                                    const StaticObservations& obs);

struct StaticStrategy {
  std::vector<Mat> pi;  // Pi^i: d_u^i x rows(h_hat[i])
  double system_residual = 0.0;
};

/// Solves the optimality system for the minimum-norm Pi. Throws
/// AssumptionViolated if the system is inconsistent.
StaticStrategy solve_static(const TeamProblem& problem,
                            const StaticObservations& obs,
                            const Tolerance& tol = {});

/// Wraps a user-supplied Pi (e.g. a solution quoted elsewhere) and records
/// its residual on the assembled system.
StaticStrategy static_strategy_from_pi(const TeamProblem& problem,
                                       const StaticObservations& obs,
                                       const std::vector<Mat>& pi);

enum class InfoMode { original, expanded };

/// Linear team strategy in coefficient form: member i's action is the sum of
/// coeffs[i][block] * Z_block over the blocks it reads.
struct LinearTeamStrategy {
  InfoMode mode = InfoMode::original;
  std::vector<std::map<std::string, Mat>> coeffs;  // per member, 0-indexed

  const Mat* coeff(int i, const std::string& block) const;
};

/// Rewrites the static solution as a coefficient-form strategy over the
/// expanded blocks, substituting decision terms forward in member order.
LinearTeamStrategy realize_static_strategy(const ExpandedProblem& expanded,
                                           const StaticObservations& obs,
                                           const StaticStrategy& strategy);

/// Composite control functions: each action and each information block as a
/// linear map of the exogenous vector.
struct CompositeControl {
  std::vector<Mat> p;                // P^i: U^i = P^i Xi
  std::map<std::string, Mat> z;      // block id -> linear map of Xi
};

CompositeControl composite(const TeamProblem& problem,
                           const LinearTeamStrategy& strategy);
CompositeControl composite(const ExpandedProblem& expanded,
                           const LinearTeamStrategy& strategy);

double expected_cost(const TeamProblem& problem,
                     const LinearTeamStrategy& strategy);
double expected_cost(const ExpandedProblem& expanded,
                     const LinearTeamStrategy& strategy);

/// The stacked effective map M + N * P of a composite control.
Mat effective_cost_map(const TeamProblem& problem, const CompositeControl& cc);

}  // namespace declqg
