#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <string>

#include "declqg/io.hpp"
#include "declqg/random_gen.hpp"
#include "lqg_oracle.hpp"

using namespace declqg;
using declqg::testing::transfer_cost;
using declqg::testing::transfer_rollout;

namespace {

LqgProblem load_fixture(const std::string& name) {
  return lqg_from_json(load_json(std::string(FIXTURE_DIR) + "/" + name));
}

Mat random_mat(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols,
               double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = u(rng);
  }
  return m;
}

}  // namespace

TEST_CASE("scalar filter gain splits the prior and unit noise evenly") {
  LqgProblem p;
  p.n = 1;
  p.T = 2;
  p.a = Mat::Ones(1, 1);
  p.b_blocks = {Mat::Ones(1, 1)};
  p.c_blocks = {Mat::Ones(1, 1)};
  p.sigma_x = Mat::Ones(1, 1);
  p.sigma_w = Mat::Ones(1, 1);
  p.sigma_v = Mat::Ones(1, 1);
  p.m = Mat::Ones(1, 1);
  p.n_blocks = {Mat::Ones(1, 1)};
  const KalmanSchedule ks = kalman_schedule(p);
  CHECK(ks.l[0](0, 0) == doctest::Approx(0.5));
  CHECK(ks.p_post[0](0, 0) == doctest::Approx(0.5));
}

TEST_CASE("duplicated sensors each carry a third of the update") {
  const LqgProblem p = load_fixture("lqg_scalar.json");
  const KalmanSchedule ks = kalman_schedule(p);
  CHECK(ks.l[0](0, 0) == doctest::Approx(1.0 / 3.0));
  CHECK(ks.l[0](0, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(ks.p_post[0](0, 0) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("one-step regulator gains match the hand calculation") {
  LqgProblem p;
  p.n = 1;
  p.T = 1;
  p.a = Mat::Ones(1, 1);
  p.b_blocks = {Mat::Ones(1, 1)};
  p.c_blocks = {Mat::Ones(1, 1)};
  p.sigma_x = p.sigma_w = p.sigma_v = Mat::Ones(1, 1);
  p.m = Mat::Ones(1, 1);
  p.n_blocks = {Mat::Ones(1, 1)};
  const std::vector<Mat> k = lqr_schedule(p);
  CHECK(k[0](0, 0) == doctest::Approx(-1.0));

  // two redundant actuators share the correction through the minimum-norm gain
  LqgProblem q = p;
  q.n = 2;
  q.b_blocks = {Mat::Ones(1, 1), Mat::Ones(1, 1)};
  q.c_blocks = {Mat::Ones(1, 1), Mat::Ones(1, 1)};
  q.n_blocks = {Mat::Ones(1, 1), Mat::Ones(1, 1)};
  q.sigma_v = Mat::Identity(2, 2);
  const std::vector<Mat> k2 = lqr_schedule(q);
  CHECK(k2[0](0, 0) == doctest::Approx(-0.5));
  CHECK(k2[0](1, 0) == doctest::Approx(-0.5));
}

TEST_CASE("substitution maps reproduce the full input stack") {
  const LqgProblem p = load_fixture("lqg_scalar.json");
  const std::vector<Mat> lambda = certify_lqg_substitutability(p);
  REQUIRE(lambda.size() == 2);
  CHECK(lambda[0](0, 0) == doctest::Approx(1.0));
  CHECK(lambda[0](0, 1) == doctest::Approx(1.0));

  const Mat full =
      (Mat(p.d_x() + p.m.rows(), p.d_u()) << p.b(), p.n_mat()).finished();
  for (int i = 1; i <= p.n; ++i) {
    Mat stack(p.d_x() + p.m.rows(), p.du(i));
    stack << p.b_blocks[static_cast<size_t>(i - 1)],
        p.n_blocks[static_cast<size_t>(i - 1)];
    CHECK((stack * lambda[static_cast<size_t>(i - 1)] - full)
              .cwiseAbs()
              .maxCoeff() < 1e-12);
  }
}

TEST_CASE("orthogonal input directions cannot be certified") {
  const LqgProblem p = load_fixture("lqg_orthogonal.json");
  CHECK_THROWS_WITH_AS(certify_lqg_substitutability(p),
                       doctest::Contains("controller 1"), AssumptionViolated);
}

TEST_CASE("merely semidefinite measurement noise needs the explicit override") {
  const LqgProblem p = load_fixture("lqg_perfect_obs.json");
  CHECK_FALSE(validate(p, false).empty());
  CHECK(validate(p, true).empty());
  SynthesisOptions opts;
  opts.allow_psd_noise = true;
  CHECK_NOTHROW(synthesize(p, opts));
}

TEST_CASE("decentralized exact cost equals the centralized optimum") {
  for (const char* name :
       {"lqg_scalar.json", "lqg_twostate.json", "lqg_single.json"}) {
    CAPTURE(name);
    const LqgProblem p = load_fixture(name);
    const GainSchedule gs = synthesize(p);
    const double cen = exact_cost(p, gs, SimMode::centralized);
    const double dec = exact_cost(p, gs, SimMode::decentralized);
    CHECK(std::abs(cen - dec) <= 1e-9 * (1.0 + std::abs(cen)));
    CHECK(rowsum_identity_residual(p, gs) < 1e-12);
  }
}

TEST_CASE("covariance propagation agrees with the noise-map oracle") {
  for (const char* name : {"lqg_scalar.json", "lqg_twostate.json",
                           "lqg_single.json", "lqg_perfect_obs.json"}) {
    CAPTURE(name);
    const bool psd = std::string(name) == "lqg_perfect_obs.json";
    const LqgProblem p = load_fixture(name);
    SynthesisOptions opts;
    opts.allow_psd_noise = psd;
    const GainSchedule gs = synthesize(p, opts);
    for (SimMode mode : {SimMode::centralized, SimMode::decentralized}) {
      const double lib = exact_cost(p, gs, mode);
      const double oracle = transfer_cost(p, gs, mode);
      CHECK(std::abs(lib - oracle) <= 1e-8 * (1.0 + std::abs(lib)));
    }
  }
}

TEST_CASE("Monte Carlo means land within four standard errors of exact") {
  const LqgProblem p = load_fixture("lqg_twostate.json");
  const GainSchedule gs = synthesize(p);
  const SimulationResult sim = simulate(p, gs, SimMode::both, 100000, 2024);
  const double cen = exact_cost(p, gs, SimMode::centralized);
  const double dec = exact_cost(p, gs, SimMode::decentralized);
  CHECK(std::abs(sim.mean_centralized - cen) <= 4.0 * sim.se_centralized);
  CHECK(std::abs(sim.mean_decentralized - dec) <= 4.0 * sim.se_decentralized);
  CHECK(sim.max_state_sum_residual <= 1e-8);
}

TEST_CASE("simulation is deterministic in the seed and independent across it") {
  const LqgProblem p = load_fixture("lqg_scalar.json");
  const GainSchedule gs = synthesize(p);
  const SimulationResult a = simulate(p, gs, SimMode::both, 64, 5);
  const SimulationResult b = simulate(p, gs, SimMode::both, 64, 5);
  CHECK(a.mean_centralized == b.mean_centralized);
  CHECK(a.cost_decentralized == b.cost_decentralized);
  const SimulationResult c = simulate(p, gs, SimMode::both, 64, 6);
  CHECK(a.mean_centralized != c.mean_centralized);
}

TEST_CASE("a single controller makes both feedback modes identical") {
  const LqgProblem p = load_fixture("lqg_single.json");
  const GainSchedule gs = synthesize(p);
  CHECK((gs.lambda[0] - Mat::Identity(1, 1)).cwiseAbs().maxCoeff() < 1e-12);
  const SimulationResult sim = simulate(p, gs, SimMode::both, 500, 3);
  for (size_t i = 0; i < sim.cost_centralized.size(); ++i) {
    CHECK(sim.cost_centralized[i] ==
          doctest::Approx(sim.cost_decentralized[i]).epsilon(1e-12));
  }
}

TEST_CASE("with exact per-controller sensing the local states embed the "
          "state coordinates") {
  const LqgProblem p = load_fixture("lqg_perfect_obs.json");
  SynthesisOptions opts;
  opts.allow_psd_noise = true;
  const GainSchedule gs = synthesize(p, opts);
  const auto roll = transfer_rollout(p, gs, SimMode::decentralized);
  for (int t = 0; t < p.T; ++t) {
    for (int i = 1; i <= p.n; ++i) {
      // controller i observes exactly coordinate i-1; its local state must be
      // that coordinate of X embedded in an otherwise-zero vector
      Mat embed = Mat::Zero(p.d_x(), p.d_x());
      embed(i - 1, i - 1) = 1.0;
      const Mat gap = roll.s_maps[static_cast<size_t>(t)][static_cast<size_t>(
                          i - 1)] -
                      embed * roll.x_maps[static_cast<size_t>(t)];
      // compare as random variables: the measurement noise has zero
      // variance here, so its columns of the map are immaterial
      const double var = (gap * roll.sigma_omega * gap.transpose()).trace();
      CHECK(std::sqrt(std::max(0.0, var)) <= 1e-8);
    }
  }
}

TEST_CASE("generated problems certify and keep the two costs equal") {
  for (std::uint64_t seed : {1u, 5u, 9u, 42u}) {
    LqgGenConfig cfg;
    cfg.n = 3;
    cfg.d_x = 4;
    cfg.T = 6;
    const LqgProblem p = generate_lqg_problem(cfg, seed);
    CHECK(validate(p).empty());
    const GainSchedule gs = synthesize(p);
    const double cen = exact_cost(p, gs, SimMode::centralized);
    const double dec = exact_cost(p, gs, SimMode::decentralized);
    CHECK(std::abs(cen - dec) <= 1e-9 * (1.0 + std::abs(cen)));
  }
}

TEST_CASE("perturbing the decentralized schedule never beats the optimum") {
  const LqgProblem p = load_fixture("lqg_twostate.json");
  const GainSchedule base = synthesize(p);
  const double optimum = exact_cost(p, base, SimMode::centralized);
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 25; ++trial) {
    GainSchedule noisy = base;
    for (auto& lam : noisy.lambda) {
      lam += random_mat(rng, lam.rows(), lam.cols(), 0.05);
    }
    for (auto& k : noisy.k) {
      k += random_mat(rng, k.rows(), k.cols(), 0.05);
    }
    CHECK(exact_cost(p, noisy, SimMode::decentralized) >= optimum - 1e-9);
  }
}

TEST_CASE("simulate validates the path count") {
  const LqgProblem p = load_fixture("lqg_single.json");
  const GainSchedule gs = synthesize(p);
  CHECK_THROWS_AS(simulate(p, gs, SimMode::both, 0, 1), BadIndex);
}
