#include "declqg/strategy_transform.hpp"

#include <algorithm>

namespace declqg {

namespace {

bool contains(const std::vector<std::string>& v, const std::string& x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

bool exceeds(const Mat& m, double threshold) {
  return m.size() > 0 && m.cwiseAbs().maxCoeff() > threshold;
}

Mat stack_p(const TeamProblem& p, const CompositeControl& cc) {
  Mat stacked(p.total_du(), p.d_xi);
  int row = 0;
  for (int i = 1; i <= p.n; ++i) {
    stacked.middleRows(row, p.member(i).d_u) = cc.p[static_cast<size_t>(i - 1)];
    row += p.member(i).d_u;
  }
  return stacked;
}

}  // namespace

int ViolationSet::total() const {
  int t = 0;
  for (const auto& s : e) t += static_cast<int>(s.size());
  return t;
}

ViolationSet violations(const LinearTeamStrategy& strategy,
                        const TeamProblem& base,
                        const PrecedenceStructure& structure,
                        double zero_threshold) {
  ViolationSet vs;
  vs.e.resize(static_cast<size_t>(base.n));
  for (int i = 1; i <= base.n; ++i) {
    const auto& own = base.member(i).blocks;
    for (int r : structure.critical[static_cast<size_t>(i - 1)]) {
      for (const auto& id : base.member(r).blocks) {
        if (contains(own, id)) continue;
        const Mat* k = strategy.coeff(i, id);
        if (k != nullptr && exceeds(*k, zero_threshold)) {
          vs.e[static_cast<size_t>(i - 1)].insert(r);
          break;
        }
      }
    }
  }
  return vs;
}

LinearTeamStrategy substitute_once(const LinearTeamStrategy& strategy, int t, int s,
                              const SubstitutionCertificate& certificate,
                              const TeamProblem& base, double zero_threshold) {
  if (certificate.s != s || certificate.t != t) {
    throw BadCertificate("certificate is for pair (" +
                         std::to_string(certificate.s) + "," +
                         std::to_string(certificate.t) + "), not (" +
                         std::to_string(s) + "," + std::to_string(t) + ")");
  }
  const int k = certificate.k;
  if (certificate.lambda.rows() != base.member(k).d_u ||
      certificate.lambda.cols() != base.member(t).d_u) {
    throw BadCertificate("lambda has the wrong shape for members " +
                         std::to_string(k) + " and " + std::to_string(t));
  }

  const auto& t_own = base.member(t).blocks;
  std::vector<std::string> moved;  // blocks of s read illegally by t
  bool active = false;
  for (const auto& id : base.member(s).blocks) {
    if (contains(t_own, id)) continue;
    const Mat* kb = strategy.coeff(t, id);
    if (kb == nullptr) continue;
    moved.push_back(id);
    active = active || exceeds(*kb, zero_threshold);
  }
  if (!active) {
    throw NothingToDo("member " + std::to_string(t) + " does not use Z^" +
                      std::to_string(s));
  }

  LinearTeamStrategy out = strategy;
  auto& kt = out.coeffs[static_cast<size_t>(t - 1)];
  auto& kk = out.coeffs[static_cast<size_t>(k - 1)];
  const auto& k_own = base.member(k).blocks;
  for (const auto& id : moved) {
    if (!contains(k_own, id)) {
      throw BadCertificate("substituting member " + std::to_string(k) +
                           " does not own block '" + id + "'");
    }
    const Mat kb = kt.at(id);
    kt.erase(id);
    auto [it, inserted] = kk.try_emplace(
        id, Mat::Zero(base.member(k).d_u, base.block(id).rows()));
    it->second += certificate.lambda * kb;
  }
  return out;
}

DriftReport verify_rewrite_invariance(const LinearTeamStrategy& before,
                          const LinearTeamStrategy& after,
                          const ExpandedProblem& expanded) {
  const CompositeControl cb = composite(expanded, before);
  const CompositeControl ca = composite(expanded, after);
  const TeamProblem& p = expanded.base;
  DriftReport dr;
  dr.nu_drift =
      (p.n_stacked() * (stack_p(p, ca) - stack_p(p, cb))).norm();
  for (const auto& [id, zb] : cb.z) {
    dr.z_drift = std::max(dr.z_drift, (ca.z.at(id) - zb).norm());
  }
  return dr;
}

TransformResult transform_strategy(const LinearTeamStrategy& strategy,
                           const ExpandedProblem& expanded,
                           const PrecedenceStructure& structure,
                           const CertificateMap& certificates,
                           const TransformOptions& options) {
  const TeamProblem& base = expanded.base;
  TransformResult result;
  LinearTeamStrategy working = strategy;
  int l = 0;

  // reference magnitudes for the relative drift bounds
  const CompositeControl cc0 = composite(expanded, working);
  const double nu_scale = 1.0 + (base.n_stacked() * stack_p(base, cc0)).norm();
  double z_scale = 1.0;
  for (const auto& [id, z] : cc0.z) z_scale = std::max(z_scale, 1.0 + z.norm());

  for (int t = 1; t <= base.n; ++t) {
    for (;;) {
      const ViolationSet vs =
          violations(working, base, structure, options.zero_threshold);
      const auto& et = vs.e[static_cast<size_t>(t - 1)];
      if (et.empty()) break;
      const int s = *et.begin();
      auto cert_it = certificates.find({s, t});
      if (cert_it == certificates.end()) {
        throw AssumptionViolated("no certificate for critical pair (" +
                                 std::to_string(s) + "," + std::to_string(t) +
                                 ")");
      }
      const LinearTeamStrategy next =
          substitute_once(working, t, s, cert_it->second, base,
                     options.zero_threshold);

      TransformIteration iter;
      iter.l = l;
      iter.t = t;
      iter.s = s;
      iter.k = cert_it->second.k;
      if (options.drift_checks) {
        const DriftReport dr = verify_rewrite_invariance(working, next, expanded);
        iter.nu_drift = dr.nu_drift;
        iter.z_drift = dr.z_drift;
        if (dr.nu_drift > options.drift_tol * nu_scale ||
            dr.z_drift > options.drift_tol * z_scale) {
          throw InvarianceBroken(
              "substitution rewrite changed the closed-loop maps (nu drift " +
              std::to_string(dr.nu_drift) + ", z drift " +
              std::to_string(dr.z_drift) + ")");
        }
      }
      working = next;
      iter.violations_after =
          violations(working, base, structure, options.zero_threshold).total();
      result.trace.iterations.push_back(iter);
      ++l;
    }
  }

  // retag as original-mode: drop residual coefficients on non-own blocks
  // (all of them are at or below the zero threshold by construction)
  for (int i = 1; i <= base.n; ++i) {
    const auto& own = base.member(i).blocks;
    auto& ki = working.coeffs[static_cast<size_t>(i - 1)];
    for (auto it = ki.begin(); it != ki.end();) {
      if (contains(own, it->first)) {
        ++it;
        continue;
      }
      if (exceeds(it->second, options.zero_threshold)) {
        throw InternalError("non-own coefficient on block '" + it->first +
                            "' survived the transformation");
      }
      it = ki.erase(it);
    }
  }
  working.mode = InfoMode::original;
  result.final = working;
  return result;
}

}  // namespace declqg
