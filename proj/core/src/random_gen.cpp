#include "declqg/random_gen.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <random>

namespace declqg {

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

Mat random_mat(Rng& rng, int rows, int cols, double scale = 1.0) {
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = uniform(rng, -scale, scale);
  }
  return m;
}

// random matrix with smallest singular value bounded away from zero
Mat well_conditioned(Rng& rng, int rows, int cols) {
  for (;;) {
    Mat m = random_mat(rng, rows, cols);
    Eigen::JacobiSVD<Mat> svd(m);
    if (svd.singularValues().minCoeff() > 0.2) return m;
  }
}

Mat random_spd(Rng& rng, int dim, double ridge) {
  const Mat g = random_mat(rng, dim, dim);
  return g * g.transpose() + ridge * Mat::Identity(dim, dim);
}

}  // namespace

TeamProblem generate_team_problem(const TeamGenConfig& config,
                                  std::uint64_t seed) {
  if (config.n < 3 || config.n > kMaxGenMembers) {
    throw BadIndex("team generator: n must be in 3.." +
                   std::to_string(kMaxGenMembers));
  }
  if (config.d_xi < 1 || config.d_xi > kMaxGenDim) {
    throw BadIndex("team generator: d_xi must be in 1.." +
                   std::to_string(kMaxGenDim));
  }
  Rng rng(seed);
  const int n = config.n;
  TeamProblem p;
  p.n = n;
  p.d_xi = config.d_xi;
  p.sigma = random_spd(rng, p.d_xi, 0.5);
  const int d_c = uniform_int(rng, 1, 3);
  p.m = random_mat(rng, d_c, p.d_xi);

  // cost players: members whose actions enter the cost but whose own
  // information is purely decision-driven; each forms a critical pair with
  // every observer that feeds it
  const int max_players = std::min(2, n - 2);
  std::vector<int> cost_players;
  {
    std::vector<int> candidates;
    for (int i = 2; i <= n - 1; ++i) candidates.push_back(i);
    std::shuffle(candidates.begin(), candidates.end(), rng);
    const int count = uniform_int(rng, 1, max_players);
    cost_players.assign(candidates.begin(), candidates.begin() + count);
    std::sort(cost_players.begin(), cost_players.end());
  }
  auto is_cost_player = [&](int i) {
    return std::find(cost_players.begin(), cost_players.end(), i) !=
           cost_players.end();
  };

  // when the team is large enough, route substitutions through member n-1
  // instead of member n; a downstream block then carries aligned decision
  // rows for the substituted and substituting actions
  const bool indirect = n >= 4 && !is_cost_player(n - 1) &&
                        uniform_int(rng, 0, 1) == 1 &&
                        std::all_of(cost_players.begin(), cost_players.end(),
                                    [&](int t) { return t < n - 1; });
  const int sub = indirect ? n - 1 : n;

  p.members.resize(static_cast<size_t>(n));
  for (int i = 1; i <= n; ++i) {
    Member& mem = p.members[static_cast<size_t>(i - 1)];
    mem.index = i;
    mem.d_u = uniform_int(rng, 1, 2);
  }

  // exclusive observation block per observer member
  std::vector<std::string> obs_blocks;
  for (int i = 1; i <= n; ++i) {
    if (is_cost_player(i)) continue;
    InfoBlock blk;
    blk.id = "obs_" + std::to_string(i);
    blk.h = random_mat(rng, uniform_int(rng, 1, 2), p.d_xi);
    p.block_registry[blk.id] = blk;
    obs_blocks.push_back(blk.id);
    p.members[static_cast<size_t>(i - 1)].blocks.push_back(blk.id);
  }
  // members n (and the substituting member) see every observation
  for (int i : indirect ? std::vector<int>{n - 1, n} : std::vector<int>{n}) {
    auto& blocks = p.members[static_cast<size_t>(i - 1)].blocks;
    for (const auto& id : obs_blocks) {
      if (std::find(blocks.begin(), blocks.end(), id) == blocks.end()) {
        blocks.push_back(id);
      }
    }
  }

  // cost columns: substituted actions are right multiples of the
  // substituting member's stack
  const int d_u_sub = p.members[static_cast<size_t>(sub - 1)].d_u;
  std::map<int, Mat> mixers;  // cost player -> R_t
  for (int i = 1; i <= n; ++i) {
    Member& mem = p.members[static_cast<size_t>(i - 1)];
    if (is_cost_player(i)) {
      mixers[i] = random_mat(rng, d_u_sub, mem.d_u);
    } else {
      mem.n_block = random_mat(rng, d_c, mem.d_u);
    }
  }
  const Mat& n_sub = p.members[static_cast<size_t>(sub - 1)].n_block;
  for (int t : cost_players) {
    p.members[static_cast<size_t>(t - 1)].n_block = n_sub * mixers[t];
  }

  // each cost player's information is driven by its observers' decisions
  for (int t : cost_players) {
    InfoBlock blk;
    blk.id = "dz_" + std::to_string(t);
    const int rows = uniform_int(rng, 1, 2);
    blk.h = Mat::Zero(rows, p.d_xi);
    std::vector<int> observers;
    for (int s = 1; s < t; ++s) {
      if (!is_cost_player(s)) observers.push_back(s);
    }
    std::shuffle(observers.begin(), observers.end(), rng);
    const int count =
        uniform_int(rng, 1, std::min<int>(2, static_cast<int>(observers.size())));
    for (int idx = 0; idx < count; ++idx) {
      const int s = observers[static_cast<size_t>(idx)];
      blk.d[s] = random_mat(rng, rows,
                            p.members[static_cast<size_t>(s - 1)].d_u);
    }
    p.block_registry[blk.id] = blk;
    p.members[static_cast<size_t>(t - 1)].blocks.push_back(blk.id);
    p.members[static_cast<size_t>(n - 1)].blocks.push_back(blk.id);
  }

  if (indirect) {
    // downstream block owned by the last member, with decision rows for the
    // substituting member and aligned rows for every substituted action
    InfoBlock blk;
    blk.id = "down";
    const int rows = uniform_int(rng, 1, 2);
    blk.h = Mat::Zero(rows, p.d_xi);
    const Mat d_sub = random_mat(rng, rows, d_u_sub);
    blk.d[sub] = d_sub;
    for (int t : cost_players) blk.d[t] = d_sub * mixers[t];
    p.block_registry[blk.id] = blk;
    p.members[static_cast<size_t>(n - 1)].blocks.push_back(blk.id);
  }
  return p;
}

LqgProblem generate_lqg_problem(const LqgGenConfig& config,
                                std::uint64_t seed) {
  if (config.n < 1 || config.n > kMaxGenMembers) {
    throw BadIndex("lqg generator: n must be in 1.." +
                   std::to_string(kMaxGenMembers));
  }
  if (config.d_x < 1 || config.d_x > kMaxGenDim) {
    throw BadIndex("lqg generator: d_x must be in 1.." +
                   std::to_string(kMaxGenDim));
  }
  if (config.T < 1 || config.T > kMaxGenHorizon) {
    throw BadIndex("lqg generator: T must be in 1.." +
                   std::to_string(kMaxGenHorizon));
  }
  Rng rng(seed);
  LqgProblem p;
  p.n = config.n;
  p.T = config.T;
  // contractive dynamics keep the closed-loop covariances well scaled over
  // the whole horizon
  p.a = random_mat(rng, config.d_x, config.d_x, 0.8);
  const double radius = std::abs(p.a.eigenvalues().cwiseAbs().maxCoeff());
  if (radius > 0.9) p.a *= 0.9 / radius;
  const int d_c = uniform_int(rng, 1, 3);
  p.m = random_mat(rng, d_c, config.d_x);

  // one shared column space for all stacked [B^i; N^i]
  const int rank = uniform_int(rng, 1, 2);
  const Mat base = well_conditioned(rng, config.d_x + d_c, rank);
  for (int i = 1; i <= p.n; ++i) {
    const int du = rank + uniform_int(rng, 0, 1);
    const Mat mixer = well_conditioned(rng, rank, du);
    const Mat stack = base * mixer;
    p.b_blocks.push_back(stack.topRows(config.d_x));
    p.n_blocks.push_back(stack.bottomRows(d_c));
    p.c_blocks.push_back(random_mat(rng, uniform_int(rng, 1, 2), config.d_x));
  }
  p.sigma_x = random_spd(rng, config.d_x, 0.2);
  p.sigma_w = random_spd(rng, config.d_x, 0.2);
  p.sigma_v = random_spd(rng, p.d_y(), 0.2);
  return p;
}

}  // namespace declqg
