#include "declqg/matrix.hpp"

#include <Eigen/SVD>
#include <cmath>

namespace declqg {

bool is_finite(const Mat& a) { return a.allFinite(); }

bool is_exactly_zero(const Mat& a) {
  return a.size() == 0 || (a.array() == 0.0).all();
}

Mat pinv(const Mat& a, double rel_tol) {
  if (!is_finite(a)) {
    throw InvalidMatrix("pinv: input has non-finite entries");
  }
  if (a.rows() == 0 || a.cols() == 0) {
    return Mat::Zero(a.cols(), a.rows());
  }
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double cutoff =
      static_cast<double>(std::max(a.rows(), a.cols())) * s(0) * rel_tol;
  Vec s_inv = Vec::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff) s_inv(i) = 1.0 / s(i);
  }
  return svd.matrixV() * s_inv.asDiagonal() * svd.matrixU().transpose();
}

ContainmentResult colspace_contains(const Mat& target, const Mat& candidate,
                                    const Tolerance& tol) {
  if (target.rows() != candidate.rows()) {
    throw DimensionMismatch("colspace_contains: row counts differ");
  }
  ContainmentResult res;
  res.contained = true;
  if (target.cols() == 0) return res;
  const Mat proj = candidate * pinv(candidate, tol.rel_tol);
  for (Eigen::Index c = 0; c < target.cols(); ++c) {
    const Vec col = target.col(c);
    const double r = (proj * col - col).norm();
    res.max_residual = std::max(res.max_residual, r);
    if (r > tol.abs_tol + tol.rel_tol * col.norm()) res.contained = false;
  }
  return res;
}

MinNormSolution solve_minimum_norm(const Mat& a, const Mat& b,
                                   const Tolerance& tol) {
  if (a.rows() != b.rows()) {
    throw DimensionMismatch("solve_minimum_norm: row counts differ");
  }
  MinNormSolution out;
  out.solution = pinv(a, tol.rel_tol) * b;
  out.residual = (a * out.solution - b).norm();
  out.consistent = out.residual <= tol.abs_tol + tol.rel_tol * b.norm();
  return out;
}

double quad_cost(const Mat& m_eff, const Mat& sigma, const Tolerance& tol) {
  if (sigma.rows() != sigma.cols()) {
    throw InvalidCovariance("quad_cost: sigma is not square");
  }
  const double asym = (sigma - sigma.transpose()).cwiseAbs().maxCoeff();
  if (asym > tol.abs_tol + tol.rel_tol * sigma.cwiseAbs().maxCoeff()) {
    throw InvalidCovariance("quad_cost: sigma is not symmetric");
  }
  if (m_eff.cols() != sigma.rows()) {
    throw DimensionMismatch("quad_cost: m_eff.cols != sigma.rows");
  }
  return (m_eff * sigma * m_eff.transpose()).trace();
}

}  // namespace declqg
