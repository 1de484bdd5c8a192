#include "declqg/team_model.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <sstream>

namespace declqg {

const Member& TeamProblem::member(int i) const {
  if (i < 1 || i > n) {
    throw BadIndex("member index " + std::to_string(i) + " out of range 1.." +
                   std::to_string(n));
  }
  return members[static_cast<size_t>(i - 1)];
}

const InfoBlock& TeamProblem::block(const std::string& id) const {
  auto it = block_registry.find(id);
  if (it == block_registry.end()) {
    throw BadIndex("unknown info block '" + id + "'");
  }
  return it->second;
}

int TeamProblem::total_du() const {
  int d = 0;
  for (const auto& mem : members) d += mem.d_u;
  return d;
}

int TeamProblem::info_rows(int i) const {
  int r = 0;
  for (const auto& id : member(i).blocks) r += block(id).rows();
  return r;
}

Mat TeamProblem::h_of(int i) const {
  Mat h(info_rows(i), d_xi);
  int row = 0;
  for (const auto& id : member(i).blocks) {
    const InfoBlock& b = block(id);
    h.middleRows(row, b.rows()) = b.h;
    row += b.rows();
  }
  return h;
}

Mat TeamProblem::d_of(int i, int j) const {
  const int d_uj = member(j).d_u;
  Mat d = Mat::Zero(info_rows(i), d_uj);
  int row = 0;
  for (const auto& id : member(i).blocks) {
    const InfoBlock& b = block(id);
    auto it = b.d.find(j);
    if (it != b.d.end()) d.middleRows(row, b.rows()) = it->second;
    row += b.rows();
  }
  return d;
}

Mat TeamProblem::stacked_effect(int t) const {
  const int d_ut = member(t).d_u;
  int rows = cost_rows();
  for (int i = 1; i <= n; ++i) rows += info_rows(i);
  Mat stack(rows, d_ut);
  stack.topRows(cost_rows()) = member(t).n_block;
  int row = cost_rows();
  for (int i = 1; i <= n; ++i) {
    const int r = info_rows(i);
    stack.middleRows(row, r) = d_of(i, t);
    row += r;
  }
  return stack;
}

Mat TeamProblem::n_stacked() const {
  Mat full(cost_rows(), total_du());
  int col = 0;
  for (const auto& mem : members) {
    full.middleCols(col, mem.d_u) = mem.n_block;
    col += mem.d_u;
  }
  return full;
}

std::vector<std::string> validate(const TeamProblem& problem) {
  std::vector<std::string> out;
  auto report = [&out](const std::string& msg) { out.push_back(msg); };

  if (problem.n < 1) report("member count must be at least 1");
  if (static_cast<int>(problem.members.size()) != problem.n) {
    report("member list size differs from n");
    return out;  // indices below would be meaningless
  }
  if (problem.d_xi < 1) report("exogenous dimension must be at least 1");

  if (problem.sigma.rows() != problem.d_xi ||
      problem.sigma.cols() != problem.d_xi) {
    report("sigma must be d_xi x d_xi");
  } else if (!is_finite(problem.sigma)) {
    report("sigma has non-finite entries");
  } else if ((problem.sigma - problem.sigma.transpose()).cwiseAbs().maxCoeff() >
             1e-12 * (1.0 + problem.sigma.cwiseAbs().maxCoeff())) {
    report("sigma is not symmetric");
  } else {
    Eigen::SelfAdjointEigenSolver<Mat> es(problem.sigma);
    if (es.eigenvalues().minCoeff() <= 0.0) {
      report("sigma is not positive definite");
    }
  }

  if (problem.m.cols() != problem.d_xi) {
    report("M must have d_xi columns");
  }

  for (int i = 1; i <= problem.n; ++i) {
    const Member& mem = problem.members[static_cast<size_t>(i - 1)];
    std::ostringstream who;
    who << "member " << i << ": ";
    if (mem.index != i) report(who.str() + "index field does not match position");
    if (mem.d_u < 1) report(who.str() + "action dimension must be at least 1");
    if (mem.n_block.rows() != problem.m.rows() || mem.n_block.cols() != mem.d_u) {
      report(who.str() + "N block must be cost_rows x d_u");
    }
    for (const auto& id : mem.blocks) {
      auto it = problem.block_registry.find(id);
      if (it == problem.block_registry.end()) {
        report(who.str() + "references unknown block '" + id + "'");
        continue;
      }
      const InfoBlock& b = it->second;
      if (b.h.cols() != problem.d_xi) {
        report("block '" + id + "': H rows must have d_xi columns");
      }
      for (const auto& [j, dmat] : b.d) {
        if (j < 1 || j > problem.n) {
          report("block '" + id + "': D references member " + std::to_string(j));
          continue;
        }
        if (dmat.rows() != b.h.rows()) {
          report("block '" + id + "': D rows for member " + std::to_string(j) +
                 " differ in row count from H rows");
        }
        if (dmat.cols() != problem.member(j).d_u) {
          report("block '" + id + "': D rows for member " + std::to_string(j) +
                 " must have d_u^" + std::to_string(j) + " columns");
        }
        // sequencing constraint: member i's information may depend only on
        // decisions of members indexed below i
        if (j >= i && !is_exactly_zero(dmat)) {
          report(who.str() + "block '" + id + "' depends on U^" +
                 std::to_string(j) +
                 " with j >= i (violates the sequential-decision constraint)");
        }
      }
    }
  }
  return out;
}

bool subvector(const TeamProblem& problem, int s, int k) {
  const Member& ms = problem.member(s);
  const Member& mk = problem.member(k);
  for (const auto& id : ms.blocks) {
    if (std::find(mk.blocks.begin(), mk.blocks.end(), id) == mk.blocks.end()) {
      return false;
    }
  }
  return true;
}

PrecedenceStructure analyze_precedence(const TeamProblem& problem) {
  const int n = problem.n;
  PrecedenceStructure ps;
  ps.related.assign(static_cast<size_t>(n),
                    std::vector<bool>(static_cast<size_t>(n), false));
  // sRt iff some block of t has nonzero D rows for member s (exact zero
  // semantics: D is authored problem data)
  for (int t = 1; t <= n; ++t) {
    for (const auto& id : problem.member(t).blocks) {
      for (const auto& [s, dmat] : problem.block(id).d) {
        if (!is_exactly_zero(dmat)) {
          ps.related[static_cast<size_t>(s - 1)][static_cast<size_t>(t - 1)] =
              true;
        }
      }
    }
  }
  // transitive closure
  std::vector<std::vector<bool>> reach = ps.related;
  for (int k = 0; k < n; ++k) {
    for (int s = 0; s < n; ++s) {
      if (!reach[static_cast<size_t>(s)][static_cast<size_t>(k)]) continue;
      for (int t = 0; t < n; ++t) {
        if (reach[static_cast<size_t>(k)][static_cast<size_t>(t)]) {
          reach[static_cast<size_t>(s)][static_cast<size_t>(t)] = true;
        }
      }
    }
  }
  ps.precedents.assign(static_cast<size_t>(n), {});
  ps.critical.assign(static_cast<size_t>(n), {});
  ps.partially_nested = true;
  for (int t = 1; t <= n; ++t) {
    for (int s = 1; s <= n; ++s) {
      if (!reach[static_cast<size_t>(s - 1)][static_cast<size_t>(t - 1)]) {
        continue;
      }
      ps.precedents[static_cast<size_t>(t - 1)].insert(s);
      if (!subvector(problem, s, t)) {
        ps.critical[static_cast<size_t>(t - 1)].insert(s);
        ps.partially_nested = false;
      }
    }
  }
  return ps;
}

CertificateMap certify_substitutability(const TeamProblem& problem,
                                        const PrecedenceStructure& structure,
                                        const Tolerance& tol) {
  CertificateMap certs;
  for (int t = 1; t <= problem.n; ++t) {
    for (int s : structure.critical[static_cast<size_t>(t - 1)]) {
      const Mat target = problem.stacked_effect(t);
      double best_residual = std::numeric_limits<double>::infinity();
      bool found = false;
      for (int k = 1; k <= problem.n && !found; ++k) {
        if (!subvector(problem, s, k)) continue;
        const Mat candidate = problem.stacked_effect(k);
        const ContainmentResult cr = colspace_contains(target, candidate, tol);
        best_residual = std::min(best_residual, cr.max_residual);
        if (!cr.contained) continue;
        SubstitutionCertificate cert;
        cert.s = s;
        cert.t = t;
        cert.k = k;
        cert.lambda = pinv(candidate, tol.rel_tol) * target;
        cert.containment_residual = cr.max_residual;
        certs[{s, t}] = cert;
        found = true;
      }
      if (!found) {
        std::ostringstream msg;
        msg << "no substituting member for critical pair (" << s << "," << t
            << "); best containment residual " << best_residual;
        throw AssumptionViolated(msg.str());
      }
    }
  }
  return certs;
}

TeamProblem infer_blocks(const TeamProblem& problem) {
  TeamProblem out = problem;
  // Map each block to a canonical representative with bitwise-identical
  // (H, D) rows; rewrite member info lists accordingly.
  std::vector<std::string> ids;
  for (const auto& [id, b] : problem.block_registry) ids.push_back(id);
  auto same = [&](const InfoBlock& a, const InfoBlock& b) {
    if (a.h.rows() != b.h.rows() || a.h.cols() != b.h.cols()) return false;
    if ((a.h.array() != b.h.array()).any()) return false;
    std::map<int, Mat> da = a.d, db = b.d;
    for (auto* dm : {&da, &db}) {
      for (auto it = dm->begin(); it != dm->end();) {
        it = is_exactly_zero(it->second) ? dm->erase(it) : std::next(it);
      }
    }
    if (da.size() != db.size()) return false;
    for (const auto& [j, m1] : da) {
      auto it = db.find(j);
      if (it == db.end() || m1.rows() != it->second.rows() ||
          m1.cols() != it->second.cols() ||
          (m1.array() != it->second.array()).any()) {
        return false;
      }
    }
    return true;
  };
  std::map<std::string, std::string> canon;
  for (size_t i = 0; i < ids.size(); ++i) {
    canon[ids[i]] = ids[i];
    for (size_t j = 0; j < i; ++j) {
      if (canon[ids[j]] == ids[j] &&
          same(problem.block_registry.at(ids[i]),
               problem.block_registry.at(ids[j]))) {
        canon[ids[i]] = ids[j];
        break;
      }
    }
  }
  for (auto& mem : out.members) {
    for (auto& id : mem.blocks) id = canon[id];
  }
  for (const auto& [id, rep] : canon) {
    if (id != rep) out.block_registry.erase(id);
  }
  return out;
}

}  // namespace declqg
