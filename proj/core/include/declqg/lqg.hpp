#pragma once

#include <cstdint>
#include <vector>

#include "declqg/matrix.hpp"

namespace declqg {

/// Finite-horizon decentralized LQG instance:
///   X_{t+1} = A X_t + B U_t + W_t,  Y^i_t = C^i X_t + V^i_t,
///   cost sum_t ||M X_t + N U_t||^2,  B = [B^1 ... B^n], N = [N^1 ... N^n].
struct LqgProblem {
  int n = 0;
  int T = 0;
  Mat a;
  std::vector<Mat> b_blocks;  // B^i: d_x x d_u^i
  std::vector<Mat> c_blocks;  // C^i: d_y^i x d_x
  Mat sigma_x, sigma_w, sigma_v;
  Mat m;                      // cost rows x d_x
  std::vector<Mat> n_blocks;  // N^i: cost rows x d_u^i

  int d_x() const { return static_cast<int>(a.rows()); }
  int d_u() const;
  int d_y() const;
  int du(int i) const { return static_cast<int>(b_blocks[static_cast<size_t>(i - 1)].cols()); }
  int dy(int i) const { return static_cast<int>(c_blocks[static_cast<size_t>(i - 1)].rows()); }
  int du_offset(int i) const;  // column offset of U^i within U
  int dy_offset(int i) const;  // row offset of Y^i within Y

  Mat b() const;  // horizontal concatenation of B^i
  Mat c() const;  // vertical concatenation of C^i
  Mat n_mat() const;
};

/// allow_psd_noise permits a merely positive semidefinite Sigma_v; the
/// innovation covariance is then inverted via pseudo-inverse.
std::vector<std::string> validate(const LqgProblem& problem,
                                  bool allow_psd_noise = false);

/// Checks that the column spaces of all stacked [B^i; N^i] are identical and
/// returns the substitution maps Lambda^i = pinv([B^i; N^i]) [B; N].
/// Throws AssumptionViolated naming the first failing controller.
std::vector<Mat> certify_lqg_substitutability(const LqgProblem& problem,
                                              const Tolerance& tol = {});

struct KalmanSchedule {
  std::vector<Mat> l;        // L_t, t = 1..T
  std::vector<Mat> p_prior;  // error covariance before the measurement update
  std::vector<Mat> p_post;   // and after
};

/// Forward discrete-time filter recursion producing the gains that make
/// Z_t the conditional mean of X_t given the centralized information.
KalmanSchedule kalman_schedule(const LqgProblem& problem,
                               bool allow_psd_noise = false);

/// Backward Riccati recursion with cross terms for the stage cost
/// ||M x + N u||^2, terminal weight zero. Singular curvature is resolved by
/// the minimum-norm gain.
std::vector<Mat> lqr_schedule(const LqgProblem& problem);

struct GainSchedule {
  std::vector<Mat> k;        // K_t, t = 1..T
  std::vector<Mat> l;        // L_t, t = 1..T
  std::vector<Mat> lambda;   // Lambda^i, i = 1..n
  std::vector<Mat> p_prior;  // filter covariances
  std::vector<Mat> p_post;
};

struct SynthesisOptions {
  Tolerance tol;
  bool allow_psd_noise = false;
};

/// Certification + filter + control recursions, plus the schedule-time
/// matrix identity check that the per-controller states sum to the
/// centralized estimate. Throws InvarianceBroken if that identity fails.
GainSchedule synthesize(const LqgProblem& problem,
                        const SynthesisOptions& options = {});

/// Residual of the row-sum identity: summing the S-block rows of the
/// decentralized closed-loop transition must reproduce the centralized
/// estimate recursion. Zero (to round-off) whenever the Lambda maps are
/// valid.
double rowsum_identity_residual(const LqgProblem& problem,
                                const GainSchedule& schedule);

/// The decentralized feedback matrices Lambda^i K_t, indexed [i-1][t-1].
std::vector<std::vector<Mat>> decentralized_gains(const LqgProblem& problem,
                                                  const GainSchedule& schedule);

enum class SimMode { centralized, decentralized, both };

struct SimulationResult {
  std::uint64_t seed = 0;
  int paths = 0;
  std::vector<double> cost_centralized;    // empty unless mode covers it
  std::vector<double> cost_decentralized;
  double mean_centralized = 0.0, se_centralized = 0.0;
  double mean_decentralized = 0.0, se_decentralized = 0.0;
  double max_state_sum_residual = 0.0;  // max_t ||Z_t - sum_i S^i_t||_inf
};

/// Seeded Monte Carlo rollout of the closed loop. In `both` mode the
/// centralized estimate and the per-controller states are advanced in
/// lockstep on the same noise and their sum identity is enforced pathwise.
SimulationResult simulate(const LqgProblem& problem,
                          const GainSchedule& schedule, SimMode mode,
                          int paths, std::uint64_t seed,
                          double state_sum_tol = 1e-8);

/// Closed-loop augmented linear-Gaussian system for one feedback mode:
/// state vec(X, Z) (centralized) or vec(X, S^1..S^n) (decentralized).
struct AugmentedSystem {
  Mat init_cov;
  std::vector<Mat> trans;     // state transition, t = 1..T-1
  std::vector<Mat> noise_in;  // input map for vec(W_t, V_{t+1})
  std::vector<Mat> stage;     // stage cost output map, t = 1..T
  Mat noise_cov;              // blockdiag(Sigma_w, Sigma_v)
};

AugmentedSystem augmented_closed_loop(const LqgProblem& problem,
                                      const GainSchedule& schedule,
                                      SimMode mode);

/// Exact expected cost by forward covariance propagation of the augmented
/// closed loop.
double exact_cost(const LqgProblem& problem, const GainSchedule& schedule,
                  SimMode mode);

}  // namespace declqg
