#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "declqg/io.hpp"
#include "declqg/random_gen.hpp"
#include "declqg/strategy_transform.hpp"

using namespace declqg;

namespace {

struct Pipeline {
  TeamProblem p;
  PrecedenceStructure st;
  CertificateMap certs;
  ExpandedProblem ex;
  StaticObservations obs;
};

Pipeline pipeline(const TeamProblem& problem) {
  Pipeline pl{problem, {}, {}, {}, {}};
  pl.st = analyze_precedence(pl.p);
  if (!pl.st.partially_nested) {
    pl.certs = certify_substitutability(pl.p, pl.st);
  }
  pl.ex = expand(pl.p, pl.st);
  pl.obs = to_static(pl.ex);
  return pl;
}

Pipeline load_pipeline(const std::string& name) {
  return pipeline(
      team_from_json(load_json(std::string(FIXTURE_DIR) + "/" + name)));
}

LinearTeamStrategy quoted_strategy(const Pipeline& pl) {
  std::vector<Mat> alt = {Mat::Zero(1, 1), Mat::Ones(1, 1),
                          -1.5 * Mat::Ones(1, 1)};
  return realize_static_strategy(pl.ex, pl.obs,
                                 static_strategy_from_pi(pl.p, pl.obs, alt));
}

}  // namespace

TEST_CASE("violation sets count reads of other members' blocks") {
  const Pipeline pl = load_pipeline("ex3.json");
  const LinearTeamStrategy s = quoted_strategy(pl);
  const ViolationSet v = violations(s, pl.p, pl.st);
  CHECK(v.total() == 1);
  CHECK(v.e[1] == std::set<int>{1});
  CHECK(v.e[0].empty());
  CHECK(v.e[2].empty());
}

TEST_CASE("one rewrite moves the coefficient to the substituting member") {
  const Pipeline pl = load_pipeline("ex3.json");
  const LinearTeamStrategy s = quoted_strategy(pl);
  const LinearTeamStrategy after =
      substitute_once(s, 2, 1, pl.certs.at({1, 2}), pl.p);
  const Mat* c2 = after.coeff(2, "xi2");
  const bool gone = c2 == nullptr || c2->cwiseAbs().maxCoeff() < 1e-15;
  CHECK(gone);
  REQUIRE(after.coeff(3, "xi2") != nullptr);
  CHECK((*after.coeff(3, "xi2"))(0, 0) == doctest::Approx(-0.5));

  const DriftReport drift = verify_rewrite_invariance(s, after, pl.ex);
  CHECK(drift.nu_drift < 1e-12);
  CHECK(drift.z_drift < 1e-12);
}

TEST_CASE("rewrites with no active coefficient are rejected as no-ops") {
  const Pipeline pl = load_pipeline("ex3.json");
  LinearTeamStrategy idle;
  idle.mode = InfoMode::expanded;
  idle.coeffs.resize(3);
  CHECK_THROWS_AS(substitute_once(idle, 2, 1, pl.certs.at({1, 2}), pl.p),
                  NothingToDo);
}

TEST_CASE("certificates for the wrong pair are rejected") {
  const Pipeline pl = load_pipeline("ex3.json");
  const LinearTeamStrategy s = quoted_strategy(pl);
  const SubstitutionCertificate& cert = pl.certs.at({1, 2});
  CHECK_THROWS_AS(substitute_once(s, 2, 3, cert, pl.p), BadCertificate);
  CHECK_THROWS_AS(substitute_once(s, 3, 1, cert, pl.p), BadCertificate);
}

TEST_CASE("full transformation of the quoted strategy takes one iteration") {
  const Pipeline pl = load_pipeline("ex3.json");
  const LinearTeamStrategy s = quoted_strategy(pl);
  const TransformResult r = transform_strategy(s, pl.ex, pl.st, pl.certs);
  REQUIRE(r.trace.iterations.size() == 1);
  const TransformIteration& it = r.trace.iterations[0];
  CHECK(it.t == 2);
  CHECK(it.s == 1);
  CHECK(it.k == 3);
  CHECK(it.nu_drift < 1e-12);
  CHECK(it.z_drift < 1e-12);
  CHECK(it.violations_after == 0);

  REQUIRE(r.final.mode == InfoMode::original);
  const Mat* c1 = r.final.coeff(1, "xi2");
  if (c1 != nullptr) CHECK(c1->cwiseAbs().maxCoeff() < 1e-12);
  CHECK(r.final.coeffs[1].empty());
  REQUIRE(r.final.coeff(3, "xi2") != nullptr);
  CHECK((*r.final.coeff(3, "xi2"))(0, 0) == doctest::Approx(-0.5));

  CHECK(expected_cost(pl.p, r.final) == doctest::Approx(1.5));
}

TEST_CASE("a corrupted substitution map breaks the drift invariant") {
  const Pipeline pl = load_pipeline("ex3.json");
  const LinearTeamStrategy s = quoted_strategy(pl);
  CertificateMap bad = pl.certs;
  bad.at({1, 2}).lambda *= 1.25;
  CHECK_THROWS_AS(transform_strategy(s, pl.ex, pl.st, bad), InvarianceBroken);
  TransformOptions lax;
  lax.drift_checks = false;
  CHECK_NOTHROW(transform_strategy(s, pl.ex, pl.st, bad, lax));
}

TEST_CASE("transformation pipeline preserves cost on generated problems") {
  for (std::uint64_t seed : {4u, 9u, 16u, 25u, 36u, 49u, 64u, 81u}) {
    for (int n : {3, 4, 5}) {
      TeamGenConfig cfg;
      cfg.n = n;
      cfg.d_xi = 4;
      const Pipeline pl = pipeline(generate_team_problem(cfg, seed));
      const StaticStrategy sol = solve_static(pl.p, pl.obs);
      const LinearTeamStrategy realized =
          realize_static_strategy(pl.ex, pl.obs, sol);
      const double cost0 = expected_cost(pl.ex, realized);
      const int initial_violations =
          violations(realized, pl.p, pl.st).total();

      const TransformResult r = transform_strategy(realized, pl.ex, pl.st, pl.certs);
      CHECK(static_cast<int>(r.trace.iterations.size()) == initial_violations);
      for (const auto& it : r.trace.iterations) {
        CHECK(it.nu_drift <= 1e-9);
        CHECK(it.z_drift <= 1e-9);
      }
      const double cost1 = expected_cost(pl.p, r.final);
      CHECK(std::abs(cost1 - cost0) <= 1e-7 * (1.0 + std::abs(cost0)));

      // implementable: every coefficient key is one of the member's own blocks
      for (int i = 1; i <= pl.p.n; ++i) {
        const auto& own = pl.p.member(i).blocks;
        for (const auto& [id, k] : r.final.coeffs[static_cast<size_t>(i - 1)]) {
          CHECK(std::find(own.begin(), own.end(), id) != own.end());
        }
      }
    }
  }
}
