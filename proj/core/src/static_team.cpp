#include "declqg/static_team.hpp"

#include <algorithm>
#include <unsupported/Eigen/KroneckerProduct>

namespace declqg {

namespace {

bool contains(const std::vector<std::string>& v, const std::string& x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

// column-major vectorization, matching the Kronecker identity
// vec(A X B) = (B' (x) A) vec(X)
Vec vectorize(const Mat& m) {
  return Eigen::Map<const Vec>(m.data(), m.size());
}

Mat unvectorize(const Vec& v, int rows, int cols) {
  return Eigen::Map<const Mat>(v.data(), rows, cols);
}

}  // namespace

const Mat* LinearTeamStrategy::coeff(int i, const std::string& block) const {
  const auto& m = coeffs.at(static_cast<size_t>(i - 1));
  auto it = m.find(block);
  return it == m.end() ? nullptr : &it->second;
}

ExpandedProblem expand(const TeamProblem& problem,
                       const PrecedenceStructure& structure) {
  ExpandedProblem out;
  out.base = problem;
  out.expanded = problem;
  out.expanded_info.resize(static_cast<size_t>(problem.n));
  for (int i = 1; i <= problem.n; ++i) {
    std::vector<std::string> blocks = problem.member(i).blocks;
    for (int c : structure.critical[static_cast<size_t>(i - 1)]) {
      for (const auto& id : problem.member(c).blocks) {
        if (!contains(blocks, id)) blocks.push_back(id);
      }
    }
    out.expanded_info[static_cast<size_t>(i - 1)] = blocks;
    out.expanded.members[static_cast<size_t>(i - 1)].blocks = blocks;
  }
  // the expansion must be partially nested; anything else is a bug
  const PrecedenceStructure check = analyze_precedence(out.expanded);
  if (!check.partially_nested) {
    throw InternalError("partially nested expansion failed its nesting check");
  }
  return out;
}

StaticObservations to_static(const ExpandedProblem& expanded) {
  const TeamProblem& p = expanded.base;
  StaticObservations obs;
  obs.h_hat.resize(static_cast<size_t>(p.n));
  obs.surviving_blocks.resize(static_cast<size_t>(p.n));
  for (int i = 1; i <= p.n; ++i) {
    std::vector<std::string> surviving;
    int rows = 0;
    for (const auto& id : expanded.expanded_info[static_cast<size_t>(i - 1)]) {
      const InfoBlock& b = p.block(id);
      // purely decision-driven blocks carry no exogenous information and
      // contribute no static observation rows
      if (b.rows() == 0 || is_exactly_zero(b.h)) continue;
      surviving.push_back(id);
      rows += b.rows();
    }
    Mat h(rows, p.d_xi);
    int row = 0;
    for (const auto& id : surviving) {
      const InfoBlock& b = p.block(id);
      h.middleRows(row, b.rows()) = b.h;
      row += b.rows();
    }
    obs.h_hat[static_cast<size_t>(i - 1)] = h;
    obs.surviving_blocks[static_cast<size_t>(i - 1)] = surviving;
  }
  return obs;
}

StaticSystem assemble_static_system(const TeamProblem& problem,
                                    const StaticObservations& obs) {
  const int n = problem.n;
  StaticSystem sys;
  sys.offsets.resize(static_cast<size_t>(n + 1));
  int total = 0;
  for (int i = 0; i < n; ++i) {
    sys.offsets[static_cast<size_t>(i)] = total;
    const int du = problem.members[static_cast<size_t>(i)].d_u;
    const int ri = static_cast<int>(obs.h_hat[static_cast<size_t>(i)].rows());
    sys.pi_shapes.emplace_back(du, ri);
    total += du * ri;
  }
  sys.offsets[static_cast<size_t>(n)] = total;

  sys.a = Mat::Zero(total, total);
  sys.b = Mat::Zero(total, 1);
  for (int i = 1; i <= n; ++i) {
    const Mat& hi = obs.h_hat[static_cast<size_t>(i - 1)];
    const Mat ni_t = problem.member(i).n_block.transpose();
    const int row0 = sys.offsets[static_cast<size_t>(i - 1)];
    const int nrows = sys.offsets[static_cast<size_t>(i)] - row0;
    for (int j = 1; j <= n; ++j) {
      const Mat& hj = obs.h_hat[static_cast<size_t>(j - 1)];
      // Sigma_{Z^j Z^i}' = H^i Sigma (H^j)'
      const Mat sigma_ij_t = hi * problem.sigma * hj.transpose();
      const Mat coupling = ni_t * problem.member(j).n_block;
      const Mat block = Eigen::kroneckerProduct(sigma_ij_t, coupling).eval();
      const int col0 = sys.offsets[static_cast<size_t>(j - 1)];
      sys.a.block(row0, col0, nrows, block.cols()) += block;
    }
    const Mat rhs = -ni_t * problem.m * problem.sigma * hi.transpose();
    sys.b.block(row0, 0, nrows, 1) = vectorize(rhs);
  }
  return sys;
}

namespace {

StaticStrategy unpack_pi(const StaticSystem& sys, const Vec& x,
                         double residual) {
  StaticStrategy out;
  out.system_residual = residual;
  for (size_t i = 0; i < sys.pi_shapes.size(); ++i) {
    const auto [rows, cols] = sys.pi_shapes[i];
    out.pi.push_back(unvectorize(
        x.segment(sys.offsets[i], static_cast<Eigen::Index>(rows) * cols), rows,
        cols));
  }
  return out;
}

}  // namespace

StaticStrategy solve_static(const TeamProblem& problem,
                            const StaticObservations& obs,
                            const Tolerance& tol) {
  const StaticSystem sys = assemble_static_system(problem, obs);
  // Rank decisions for the solve use a much tighter cutoff than the
  // user-facing consistency tolerance: the system can have genuinely tiny
  // curvature along near-flat directions, and truncating those would return
  // a non-stationary point.
  Tolerance solve_tol = tol;
  solve_tol.rel_tol = std::min(tol.rel_tol, 1e-13);
  MinNormSolution sol = solve_minimum_norm(sys.a, sys.b, solve_tol);
  sol.consistent = sol.residual <= tol.abs_tol + tol.rel_tol * sys.b.norm();
  if (!sol.consistent) {
    throw AssumptionViolated(
        "optimality system has no solution (residual " +
        std::to_string(sol.residual) + ")");
  }
  return unpack_pi(sys, sol.solution.col(0), sol.residual);
}

StaticStrategy static_strategy_from_pi(const TeamProblem& problem,
                                       const StaticObservations& obs,
                                       const std::vector<Mat>& pi) {
  const StaticSystem sys = assemble_static_system(problem, obs);
  if (pi.size() != sys.pi_shapes.size()) {
    throw DimensionMismatch("pi list size differs from member count");
  }
  Vec x(sys.offsets.back());
  for (size_t i = 0; i < pi.size(); ++i) {
    const auto [rows, cols] = sys.pi_shapes[i];
    if (pi[i].rows() != rows || pi[i].cols() != cols) {
      throw DimensionMismatch("Pi^" + std::to_string(i + 1) +
                              " has the wrong shape");
    }
    x.segment(sys.offsets[i], static_cast<Eigen::Index>(rows) * cols) =
        vectorize(pi[i]);
  }
  StaticStrategy out;
  out.pi = pi;
  out.system_residual = (sys.a * x - sys.b).norm();
  return out;
}

LinearTeamStrategy realize_static_strategy(const ExpandedProblem& expanded,
                                           const StaticObservations& obs,
                                           const StaticStrategy& strategy) {
  const TeamProblem& p = expanded.base;
  LinearTeamStrategy out;
  out.mode = InfoMode::expanded;
  out.coeffs.resize(static_cast<size_t>(p.n));
  for (int i = 1; i <= p.n; ++i) {
    const auto& avail = expanded.expanded_info[static_cast<size_t>(i - 1)];
    auto& ki = out.coeffs[static_cast<size_t>(i - 1)];
    const Mat& pi = strategy.pi[static_cast<size_t>(i - 1)];
    int row = 0;
    for (const auto& id : obs.surviving_blocks[static_cast<size_t>(i - 1)]) {
      const InfoBlock& blk = p.block(id);
      const Mat pib = pi.middleCols(row, blk.rows());
      row += blk.rows();
      // Pi^i acts on H_b Xi = Z_b - sum_j D^{bj} U^j
      auto [it, inserted] = ki.try_emplace(id, Mat::Zero(p.member(i).d_u, blk.rows()));
      it->second += pib;
      for (const auto& [j, dbj] : blk.d) {
        if (is_exactly_zero(dbj)) continue;
        // U^j is already in coefficient form (j precedes the owner of b)
        for (const auto& [bid, kjb] :
             out.coeffs[static_cast<size_t>(j - 1)]) {
          if (!contains(avail, bid)) {
            throw InternalError(
                "realization needs block '" + bid +
                "' outside member " + std::to_string(i) + "'s expansion");
          }
          auto [it2, ins2] = ki.try_emplace(
              bid, Mat::Zero(p.member(i).d_u, p.block(bid).rows()));
          it2->second -= pib * dbj * kjb;
        }
      }
    }
  }
  return out;
}

namespace {

CompositeControl composite_impl(
    const TeamProblem& p,
    const std::vector<std::vector<std::string>>& allowed,
    const LinearTeamStrategy& strategy) {
  if (static_cast<int>(strategy.coeffs.size()) != p.n) {
    throw DimensionMismatch("strategy member count differs from problem");
  }
  CompositeControl cc;
  cc.p.resize(static_cast<size_t>(p.n));
  auto compute_block = [&](const std::string& id) {
    if (cc.z.count(id)) return;
    const InfoBlock& b = p.block(id);
    Mat z = b.h;
    for (const auto& [j, dbj] : b.d) {
      if (is_exactly_zero(dbj)) continue;
      z += dbj * cc.p[static_cast<size_t>(j - 1)];
    }
    cc.z[id] = z;
  };
  for (int i = 1; i <= p.n; ++i) {
    for (const auto& id : p.member(i).blocks) compute_block(id);
    Mat pi = Mat::Zero(p.member(i).d_u, p.d_xi);
    for (const auto& [id, k] : strategy.coeffs[static_cast<size_t>(i - 1)]) {
      if (!contains(allowed[static_cast<size_t>(i - 1)], id)) {
        throw InfoViolation("member " + std::to_string(i) +
                            " reads unavailable block '" + id + "'");
      }
      auto it = cc.z.find(id);
      if (it == cc.z.end()) {
        throw InternalError("block '" + id + "' read before being computed");
      }
      pi += k * it->second;
    }
    cc.p[static_cast<size_t>(i - 1)] = pi;
  }
  // remaining registry blocks (unreferenced by any member's info list)
  for (const auto& [id, b] : p.block_registry) compute_block(id);
  return cc;
}

std::vector<std::vector<std::string>> own_blocks(const TeamProblem& p) {
  std::vector<std::vector<std::string>> out;
  for (const auto& m : p.members) out.push_back(m.blocks);
  return out;
}

}  // namespace

CompositeControl composite(const TeamProblem& problem,
                           const LinearTeamStrategy& strategy) {
  if (strategy.mode != InfoMode::original) {
    throw InfoViolation("expanded-mode strategy evaluated on original problem");
  }
  return composite_impl(problem, own_blocks(problem), strategy);
}

CompositeControl composite(const ExpandedProblem& expanded,
                           const LinearTeamStrategy& strategy) {
  // the information dynamics are those of the base problem; the expansion
  // only widens what each member may read
  return composite_impl(expanded.base, expanded.expanded_info, strategy);
}

Mat effective_cost_map(const TeamProblem& problem, const CompositeControl& cc) {
  Mat p_stacked(problem.total_du(), problem.d_xi);
  int row = 0;
  for (int i = 1; i <= problem.n; ++i) {
    const int du = problem.member(i).d_u;
    p_stacked.middleRows(row, du) = cc.p[static_cast<size_t>(i - 1)];
    row += du;
  }
  return problem.m + problem.n_stacked() * p_stacked;
}

double expected_cost(const TeamProblem& problem,
                     const LinearTeamStrategy& strategy) {
  const CompositeControl cc = composite(problem, strategy);
  return quad_cost(effective_cost_map(problem, cc), problem.sigma);
}

double expected_cost(const ExpandedProblem& expanded,
                     const LinearTeamStrategy& strategy) {
  const CompositeControl cc = composite(expanded, strategy);
  return quad_cost(effective_cost_map(expanded.base, cc), expanded.base.sigma);
}

}  // namespace declqg
