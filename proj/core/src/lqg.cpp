#include "declqg/lqg.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>
#include <sstream>

namespace declqg {

int LqgProblem::d_u() const {
  int d = 0;
  for (const auto& b : b_blocks) d += static_cast<int>(b.cols());
  return d;
}

int LqgProblem::d_y() const {
  int d = 0;
  for (const auto& c : c_blocks) d += static_cast<int>(c.rows());
  return d;
}

int LqgProblem::du_offset(int i) const {
  int off = 0;
  for (int j = 1; j < i; ++j) off += du(j);
  return off;
}

int LqgProblem::dy_offset(int i) const {
  int off = 0;
  for (int j = 1; j < i; ++j) off += dy(j);
  return off;
}

Mat LqgProblem::b() const {
  Mat out(d_x(), d_u());
  int col = 0;
  for (const auto& bi : b_blocks) {
    out.middleCols(col, bi.cols()) = bi;
    col += static_cast<int>(bi.cols());
  }
  return out;
}

Mat LqgProblem::c() const {
  Mat out(d_y(), d_x());
  int row = 0;
  for (const auto& ci : c_blocks) {
    out.middleRows(row, ci.rows()) = ci;
    row += static_cast<int>(ci.rows());
  }
  return out;
}

Mat LqgProblem::n_mat() const {
  Mat out(m.rows(), d_u());
  int col = 0;
  for (const auto& ni : n_blocks) {
    out.middleCols(col, ni.cols()) = ni;
    col += static_cast<int>(ni.cols());
  }
  return out;
}

namespace {

bool is_symmetric_psd(const Mat& s, double* min_eig = nullptr) {
  if (s.rows() != s.cols()) return false;
  if ((s - s.transpose()).cwiseAbs().maxCoeff() >
      1e-12 * (1.0 + s.cwiseAbs().maxCoeff())) {
    return false;
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(s);
  const double lo = s.size() == 0 ? 0.0 : es.eigenvalues().minCoeff();
  if (min_eig) *min_eig = lo;
  return lo >= -1e-12 * (1.0 + s.cwiseAbs().maxCoeff());
}

Mat symmetrize(const Mat& s) { return 0.5 * (s + s.transpose()); }

// factor F with F F' = sigma for a symmetric PSD sigma
Mat psd_factor(const Mat& sigma) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(sigma));
  Vec lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * lam.asDiagonal();
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

std::vector<std::string> validate(const LqgProblem& p, bool allow_psd_noise) {
  std::vector<std::string> out;
  auto report = [&out](const std::string& msg) { out.push_back(msg); };
  if (p.n < 1) report("controller count must be at least 1");
  if (p.T < 1) report("horizon must be at least 1");
  if (p.a.rows() != p.a.cols() || p.a.rows() < 1) report("A must be square");
  if (static_cast<int>(p.b_blocks.size()) != p.n) report("need n B blocks");
  if (static_cast<int>(p.c_blocks.size()) != p.n) report("need n C blocks");
  if (static_cast<int>(p.n_blocks.size()) != p.n) report("need n N blocks");
  if (!out.empty()) return out;
  const int dx = p.d_x();
  for (int i = 1; i <= p.n; ++i) {
    if (p.b_blocks[static_cast<size_t>(i - 1)].rows() != dx) {
      report("B^" + std::to_string(i) + " must have d_x rows");
    }
    if (p.c_blocks[static_cast<size_t>(i - 1)].cols() != dx) {
      report("C^" + std::to_string(i) + " must have d_x columns");
    }
    if (p.n_blocks[static_cast<size_t>(i - 1)].rows() != p.m.rows() ||
        p.n_blocks[static_cast<size_t>(i - 1)].cols() != p.du(i)) {
      report("N^" + std::to_string(i) + " must be cost_rows x d_u^i");
    }
  }
  if (p.m.cols() != dx) report("M must have d_x columns");
  if (p.sigma_x.rows() != dx || !is_symmetric_psd(p.sigma_x)) {
    report("Sigma_x must be symmetric PSD of size d_x");
  }
  if (p.sigma_w.rows() != dx || !is_symmetric_psd(p.sigma_w)) {
    report("Sigma_w must be symmetric PSD of size d_x");
  }
  double min_eig = 0.0;
  if (p.sigma_v.rows() != p.d_y() || !is_symmetric_psd(p.sigma_v, &min_eig)) {
    report("Sigma_v must be symmetric PSD of size d_y");
  } else if (!allow_psd_noise && min_eig <= 0.0) {
    report("Sigma_v must be positive definite (pass allow_psd_noise to relax)");
  }
  return out;
}

std::vector<Mat> certify_lqg_substitutability(const LqgProblem& p,
                                              const Tolerance& tol) {
  const Mat full = (Mat(p.d_x() + p.m.rows(), p.d_u()) << p.b(), p.n_mat())
                       .finished();
  std::vector<Mat> lambda;
  for (int i = 1; i <= p.n; ++i) {
    Mat stack_i(p.d_x() + p.m.rows(), p.du(i));
    stack_i << p.b_blocks[static_cast<size_t>(i - 1)],
        p.n_blocks[static_cast<size_t>(i - 1)];
    // Assumption holds iff all stacked column spaces are identical
    const ContainmentResult fwd = colspace_contains(full, stack_i, tol);
    const ContainmentResult bwd = colspace_contains(stack_i, full, tol);
    if (!fwd.contained || !bwd.contained) {
      std::ostringstream msg;
      msg << "controller " << i
          << " cannot substitute for the team: containment residual "
          << std::max(fwd.max_residual, bwd.max_residual);
      throw AssumptionViolated(msg.str());
    }
    lambda.push_back(pinv(stack_i, tol.rel_tol) * full);
  }
  return lambda;
}

KalmanSchedule kalman_schedule(const LqgProblem& p, bool allow_psd_noise) {
  const Mat c = p.c();
  KalmanSchedule ks;
  Mat p_prior = p.sigma_x;
  const Mat eye = Mat::Identity(p.d_x(), p.d_x());
  for (int t = 1; t <= p.T; ++t) {
    const Mat innov = symmetrize(c * p_prior * c.transpose() + p.sigma_v);
    Mat innov_inv;
    if (allow_psd_noise) {
      innov_inv = pinv(innov);
    } else {
      Eigen::LLT<Mat> llt(innov);
      if (llt.info() != Eigen::Success) {
        throw SingularInnovation(
            "innovation covariance is numerically singular at t=" +
            std::to_string(t));
      }
      innov_inv = llt.solve(Mat::Identity(innov.rows(), innov.cols()));
    }
    const Mat l = p_prior * c.transpose() * innov_inv;
    ks.l.push_back(l);
    ks.p_prior.push_back(p_prior);
    const Mat p_post = symmetrize((eye - l * c) * p_prior);
    ks.p_post.push_back(p_post);
    p_prior = symmetrize(p.a * p_post * p.a.transpose() + p.sigma_w);
  }
  return ks;
}

std::vector<Mat> lqr_schedule(const LqgProblem& p) {
  const Mat a = p.a;
  const Mat b = p.b();
  const Mat n = p.n_mat();
  const Mat m = p.m;
  std::vector<Mat> k(static_cast<size_t>(p.T));
  Mat pc = Mat::Zero(p.d_x(), p.d_x());  // terminal weight is zero
  for (int t = p.T; t >= 1; --t) {
    const Mat g = n.transpose() * n + b.transpose() * pc * b;
    const Mat f = n.transpose() * m + b.transpose() * pc * a;
    const Mat g_pinv = pinv(g);
    k[static_cast<size_t>(t - 1)] = -g_pinv * f;
    pc = symmetrize(m.transpose() * m + a.transpose() * pc * a -
                    f.transpose() * g_pinv * f);
  }
  return k;
}

GainSchedule synthesize(const LqgProblem& p, const SynthesisOptions& options) {
  const auto issues = validate(p, options.allow_psd_noise);
  if (!issues.empty()) {
    std::string joined;
    for (const auto& s : issues) joined += (joined.empty() ? "" : "; ") + s;
    throw InvalidMatrix("invalid problem: " + joined);
  }
  GainSchedule gs;
  gs.lambda = certify_lqg_substitutability(p, options.tol);
  const KalmanSchedule ks = kalman_schedule(p, options.allow_psd_noise);
  gs.l = ks.l;
  gs.p_prior = ks.p_prior;
  gs.p_post = ks.p_post;
  gs.k = lqr_schedule(p);
  const double residual = rowsum_identity_residual(p, gs);
  if (residual > 1e-9) {
    throw InvarianceBroken(
        "per-controller state sum identity fails at schedule build (residual " +
        std::to_string(residual) + ")");
  }
  return gs;
}

std::vector<std::vector<Mat>> decentralized_gains(const LqgProblem& p,
                                                  const GainSchedule& gs) {
  std::vector<std::vector<Mat>> out(static_cast<size_t>(p.n));
  for (int i = 1; i <= p.n; ++i) {
    for (int t = 1; t <= p.T; ++t) {
      out[static_cast<size_t>(i - 1)].push_back(
          gs.lambda[static_cast<size_t>(i - 1)] *
          gs.k[static_cast<size_t>(t - 1)]);
    }
  }
  return out;
}

namespace {

// L_t split into per-controller column blocks L_t^i
Mat l_block(const LqgProblem& p, const Mat& l, int i) {
  return l.middleCols(p.dy_offset(i), p.dy(i));
}

}  // namespace

AugmentedSystem augmented_closed_loop(const LqgProblem& p,
                                      const GainSchedule& gs, SimMode mode) {
  if (mode == SimMode::both) {
    throw Error("augmented_closed_loop requires a single feedback mode");
  }
  const int dx = p.d_x();
  const int dy = p.d_y();
  const Mat a = p.a;
  const Mat b = p.b();
  const Mat c = p.c();
  const Mat n = p.n_mat();
  const Mat eye = Mat::Identity(dx, dx);

  AugmentedSystem sys;
  sys.noise_cov = Mat::Zero(dx + dy, dx + dy);
  sys.noise_cov.topLeftCorner(dx, dx) = p.sigma_w;
  sys.noise_cov.bottomRightCorner(dy, dy) = p.sigma_v;

  if (mode == SimMode::centralized) {
    const int dim = 2 * dx;
    const Mat& l1 = gs.l[0];
    // vec(X_1, Z_1) as a linear map of vec(X_1, V_1)
    Mat j = Mat::Zero(dim, dx + dy);
    j.topLeftCorner(dx, dx) = eye;
    j.block(dx, 0, dx, dx) = l1 * c;
    j.block(dx, dx, dx, dy) = l1;
    Mat init_noise = Mat::Zero(dx + dy, dx + dy);
    init_noise.topLeftCorner(dx, dx) = p.sigma_x;
    init_noise.bottomRightCorner(dy, dy) = p.sigma_v;
    sys.init_cov = j * init_noise * j.transpose();

    for (int t = 1; t <= p.T; ++t) {
      const Mat& kt = gs.k[static_cast<size_t>(t - 1)];
      Mat stage(p.m.rows(), dim);
      stage << p.m, n * kt;
      sys.stage.push_back(stage);
      if (t == p.T) break;
      const Mat& lnext = gs.l[static_cast<size_t>(t)];
      const Mat lc = lnext * c;
      Mat trans = Mat::Zero(dim, dim);
      trans.topLeftCorner(dx, dx) = a;
      trans.topRightCorner(dx, dx) = b * kt;
      trans.bottomLeftCorner(dx, dx) = lc * a;
      trans.bottomRightCorner(dx, dx) =
          lc * b * kt + (eye - lc) * (a + b * kt);
      Mat noise = Mat::Zero(dim, dx + dy);
      noise.topLeftCorner(dx, dx) = eye;
      noise.block(dx, 0, dx, dx) = lc;
      noise.block(dx, dx, dx, dy) = lnext;
      sys.trans.push_back(trans);
      sys.noise_in.push_back(noise);
    }
    return sys;
  }

  // decentralized: state vec(X, S^1, ..., S^n)
  const int dim = (p.n + 1) * dx;
  const Mat& l1 = gs.l[0];
  Mat j = Mat::Zero(dim, dx + dy);
  j.topLeftCorner(dx, dx) = eye;
  for (int i = 1; i <= p.n; ++i) {
    const Mat l1i = l_block(p, l1, i);
    const Mat& ci = p.c_blocks[static_cast<size_t>(i - 1)];
    j.block(i * dx, 0, dx, dx) = l1i * ci;
    j.block(i * dx, dx + p.dy_offset(i), dx, p.dy(i)) = l1i;
  }
  Mat init_noise = Mat::Zero(dx + dy, dx + dy);
  init_noise.topLeftCorner(dx, dx) = p.sigma_x;
  init_noise.bottomRightCorner(dy, dy) = p.sigma_v;
  sys.init_cov = j * init_noise * j.transpose();

  for (int t = 1; t <= p.T; ++t) {
    const Mat& kt = gs.k[static_cast<size_t>(t - 1)];
    std::vector<Mat> feed(static_cast<size_t>(p.n));   // B^i Lambda^i K_t
    std::vector<Mat> cost(static_cast<size_t>(p.n));   // N^i Lambda^i K_t
    for (int i = 1; i <= p.n; ++i) {
      const Mat lk = gs.lambda[static_cast<size_t>(i - 1)] * kt;
      feed[static_cast<size_t>(i - 1)] =
          p.b_blocks[static_cast<size_t>(i - 1)] * lk;
      cost[static_cast<size_t>(i - 1)] =
          p.n_blocks[static_cast<size_t>(i - 1)] * lk;
    }
    Mat stage = Mat::Zero(p.m.rows(), dim);
    stage.leftCols(dx) = p.m;
    for (int i = 1; i <= p.n; ++i) {
      stage.middleCols(i * dx, dx) = cost[static_cast<size_t>(i - 1)];
    }
    sys.stage.push_back(stage);
    if (t == p.T) break;

    const Mat& lnext = gs.l[static_cast<size_t>(t)];
    const Mat lc = lnext * c;
    Mat trans = Mat::Zero(dim, dim);
    Mat noise = Mat::Zero(dim, dx + dy);
    trans.topLeftCorner(dx, dx) = a;
    for (int j2 = 1; j2 <= p.n; ++j2) {
      trans.block(0, j2 * dx, dx, dx) = feed[static_cast<size_t>(j2 - 1)];
    }
    noise.topLeftCorner(dx, dx) = eye;
    for (int i = 1; i <= p.n; ++i) {
      const Mat li = l_block(p, lnext, i);
      const Mat& ci = p.c_blocks[static_cast<size_t>(i - 1)];
      const Mat lici = li * ci;
      trans.block(i * dx, 0, dx, dx) = lici * a;
      for (int j2 = 1; j2 <= p.n; ++j2) {
        Mat blk = lici * feed[static_cast<size_t>(j2 - 1)];
        if (i == j2) {
          blk += (eye - lc) * (a + feed[static_cast<size_t>(i - 1)]);
        }
        trans.block(i * dx, j2 * dx, dx, dx) = blk;
      }
      noise.block(i * dx, 0, dx, dx) = lici;
      noise.block(i * dx, dx + p.dy_offset(i), dx, p.dy(i)) = li;
    }
    sys.trans.push_back(trans);
    sys.noise_in.push_back(noise);
  }
  return sys;
}

double rowsum_identity_residual(const LqgProblem& p, const GainSchedule& gs) {
  const AugmentedSystem dec =
      augmented_closed_loop(p, gs, SimMode::decentralized);
  const AugmentedSystem cen =
      augmented_closed_loop(p, gs, SimMode::centralized);
  const int dx = p.d_x();
  Mat agg = Mat::Zero(dx, (p.n + 1) * dx);
  for (int i = 1; i <= p.n; ++i) {
    agg.middleCols(i * dx, dx) = Mat::Identity(dx, dx);
  }
  double residual = 0.0;
  for (size_t t = 0; t < dec.trans.size(); ++t) {
    // summing S-block rows must reproduce the Z recursion rows with every
    // S^j column carrying the Z coefficient
    const Mat zx = cen.trans[t].block(dx, 0, dx, dx);
    const Mat zz = cen.trans[t].block(dx, dx, dx, dx);
    Mat expected = Mat::Zero(dx, (p.n + 1) * dx);
    expected.leftCols(dx) = zx;
    for (int j = 1; j <= p.n; ++j) expected.middleCols(j * dx, dx) = zz;
    residual = std::max(residual,
                        (agg * dec.trans[t] - expected).cwiseAbs().maxCoeff());
    const Mat znoise = cen.noise_in[t].middleRows(dx, dx);
    residual = std::max(
        residual, (agg * dec.noise_in[t] - znoise).cwiseAbs().maxCoeff());
  }
  return residual;
}

SimulationResult simulate(const LqgProblem& p, const GainSchedule& gs,
                          SimMode mode, int paths, std::uint64_t seed,
                          double state_sum_tol) {
  if (paths < 1) throw BadIndex("paths must be at least 1");
  const Mat fx = psd_factor(p.sigma_x);
  const Mat fw = psd_factor(p.sigma_w);
  const Mat fv = psd_factor(p.sigma_v);
  const Mat a = p.a;
  const Mat b = p.b();
  const Mat c = p.c();
  const Mat n = p.n_mat();
  const Mat eye = Mat::Identity(p.d_x(), p.d_x());
  const bool want_cen = mode != SimMode::decentralized;
  const bool want_dec = mode != SimMode::centralized;

  SimulationResult res;
  res.seed = seed;
  res.paths = paths;

  for (int path = 0; path < paths; ++path) {
    std::mt19937_64 gen(splitmix64(seed + 0x51u * static_cast<std::uint64_t>(path) + 1));
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto draw = [&](const Mat& factor) {
      Vec u(factor.cols());
      for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = gauss(gen);
      return Vec(factor * u);
    };

    Vec x = draw(fx);
    Vec y = c * x + draw(fv);
    Vec z = gs.l[0] * y;
    std::vector<Vec> s(static_cast<size_t>(p.n));
    for (int i = 1; i <= p.n; ++i) {
      s[static_cast<size_t>(i - 1)] =
          l_block(p, gs.l[0], i) * y.segment(p.dy_offset(i), p.dy(i));
    }
    double cost_cen = 0.0, cost_dec = 0.0;
    for (int t = 1; t <= p.T; ++t) {
      const Mat& kt = gs.k[static_cast<size_t>(t - 1)];
      Vec u_cen, u_dec;
      if (want_cen) {
        u_cen = kt * z;
        cost_cen += (p.m * x + n * u_cen).squaredNorm();
      }
      if (want_dec) {
        u_dec = Vec(p.d_u());
        for (int i = 1; i <= p.n; ++i) {
          u_dec.segment(p.du_offset(i), p.du(i)) =
              gs.lambda[static_cast<size_t>(i - 1)] * kt *
              s[static_cast<size_t>(i - 1)];
        }
        cost_dec += (p.m * x + n * u_dec).squaredNorm();
      }
      if (mode == SimMode::both) {
        Vec sum = Vec::Zero(p.d_x());
        for (const auto& si : s) sum += si;
        const double r = (z - sum).cwiseAbs().maxCoeff();
        res.max_state_sum_residual = std::max(res.max_state_sum_residual, r);
        if (r > state_sum_tol) {
          throw InvarianceBroken(
              "per-controller states no longer sum to the centralized "
              "estimate (residual " + std::to_string(r) + " at t=" +
              std::to_string(t) + ")");
        }
      }
      if (t == p.T) break;

      // the physical input: decentralized when simulated, else centralized
      const Vec& u_applied = want_dec ? u_dec : u_cen;
      x = a * x + b * u_applied + draw(fw);
      y = c * x + draw(fv);
      const Mat& lnext = gs.l[static_cast<size_t>(t)];
      if (want_cen) {
        z = (eye - lnext * c) * (a * z + b * u_cen) + lnext * y;
      }
      if (want_dec) {
        for (int i = 1; i <= p.n; ++i) {
          Vec& si = s[static_cast<size_t>(i - 1)];
          si = (eye - lnext * c) *
                   (a * si + p.b_blocks[static_cast<size_t>(i - 1)] *
                                 u_dec.segment(p.du_offset(i), p.du(i))) +
               l_block(p, lnext, i) * y.segment(p.dy_offset(i), p.dy(i));
        }
      }
    }
    if (want_cen) res.cost_centralized.push_back(cost_cen);
    if (want_dec) res.cost_decentralized.push_back(cost_dec);
  }

  auto summarize = [paths](const std::vector<double>& v, double& mean,
                           double& se) {
    if (v.empty()) return;
    double sum = 0.0;
    for (double x : v) sum += x;
    mean = sum / static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    if (v.size() > 1) {
      var /= static_cast<double>(v.size() - 1);
      se = std::sqrt(var / static_cast<double>(paths));
    }
  };
  summarize(res.cost_centralized, res.mean_centralized, res.se_centralized);
  summarize(res.cost_decentralized, res.mean_decentralized,
            res.se_decentralized);
  return res;
}

double exact_cost(const LqgProblem& p, const GainSchedule& gs, SimMode mode) {
  const AugmentedSystem sys = augmented_closed_loop(p, gs, mode);
  // The per-controller states can carry internal modes many orders of
  // magnitude larger than the cost they cancel down to; quad-precision
  // accumulation keeps that cancellation exact to double accuracy.
  using QMat = Eigen::Matrix<__float128, Eigen::Dynamic, Eigen::Dynamic>;
  auto widen = [](const Mat& m) {
    QMat q(m.rows(), m.cols());
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        q(r, c) = static_cast<__float128>(m(r, c));
      }
    }
    return q;
  };

  QMat cov = widen(sys.init_cov);
  const QMat noise_cov = widen(sys.noise_cov);
  __float128 cost = 0.0;
  for (size_t t = 0; t < sys.stage.size(); ++t) {
    const QMat stage = widen(sys.stage[t]);
    cost += (stage * cov * stage.transpose()).trace();
    if (t < sys.trans.size()) {
      const QMat trans = widen(sys.trans[t]);
      const QMat noise = widen(sys.noise_in[t]);
      cov = trans * cov * trans.transpose() +
            noise * noise_cov * noise.transpose();
      cov = (cov + QMat(cov.transpose())) * static_cast<__float128>(0.5);
    }
  }
  return static_cast<double>(cost);
}

}  // namespace declqg
