#pragma once

#include <Eigen/Dense>

#include "declqg/errors.hpp"

namespace declqg {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Absolute/relative tolerance pair used throughout for numerical decisions.
struct Tolerance {
  double abs_tol = 1e-9;
  double rel_tol = 1e-9;
};

/// Moore-Penrose pseudo-inverse. Singular values below
/// max(rows, cols) * sigma_max * rel_tol are treated as zero.
Mat pinv(const Mat& a, double rel_tol = 1e-9);

struct ContainmentResult {
  bool contained = false;
  double max_residual = 0.0;
};

/// Tests whether every column of `target` lies in the column space of
/// `candidate`, by projecting onto the candidate's range and measuring the
/// per-column residual against abs_tol + rel_tol * ||column||.
ContainmentResult colspace_contains(const Mat& target, const Mat& candidate,
                                    const Tolerance& tol = {});

struct MinNormSolution {
  Mat solution;
  double residual = 0.0;
  bool consistent = false;
};

/// Minimum-norm least-squares solve of a * x = b via the pseudo-inverse.
/// `consistent` reports whether the Frobenius residual is within tolerance
/// of zero relative to ||b||.
MinNormSolution solve_minimum_norm(const Mat& a, const Mat& b,
                                   const Tolerance& tol = {});

/// trace(m_eff * sigma * m_eff^T): the expected squared norm of m_eff * X
/// for X ~ N(0, sigma). Throws InvalidCovariance if sigma is asymmetric
/// beyond tolerance.
double quad_cost(const Mat& m_eff, const Mat& sigma, const Tolerance& tol = {});

/// True iff all entries are finite.
bool is_finite(const Mat& a);

/// True iff all entries are exactly zero.
bool is_exactly_zero(const Mat& a);

}  // namespace declqg
