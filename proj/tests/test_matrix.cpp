#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "declqg/matrix.hpp"

using namespace declqg;

namespace {

Mat random_mat(std::mt19937_64& rng, int rows, int cols) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = u(rng);
  }
  return m;
}

}  // namespace

TEST_CASE("pinv of a rank-one symmetric matrix has the closed form A'/|A|^2") {
  Mat a(2, 2);
  a << 1, 2, 2, 4;
  const Mat p = pinv(a);
  Mat expected(2, 2);
  expected << 0.04, 0.08, 0.08, 0.16;
  CHECK((p - expected).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("pinv satisfies the Penrose identities on random matrices") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const int rows = 1 + static_cast<int>(rng() % 5);
    const int cols = 1 + static_cast<int>(rng() % 5);
    const Mat a = random_mat(rng, rows, cols);
    const Mat p = pinv(a);
    CHECK((a * p * a - a).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((p * a * p - p).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(((a * p) - (a * p).transpose()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(((p * a) - (p * a).transpose()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("pinv of zero and of an identity is zero / identity") {
  CHECK(is_exactly_zero(pinv(Mat::Zero(3, 2))));
  const Mat p = pinv(Mat::Identity(3, 3));
  CHECK((p - Mat::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("pinv rejects non-finite input") {
  Mat a(1, 1);
  a << std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(pinv(a), InvalidMatrix);
}

TEST_CASE("colspace containment holds for right multiples, fails across "
          "orthogonal complements") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const Mat cand = random_mat(rng, 5, 2);
    const Mat target = cand * random_mat(rng, 2, 3);
    CHECK(colspace_contains(target, cand).contained);
  }
  Mat cand(2, 1), target(2, 1);
  cand << 1, 0;
  target << 0, 1;
  const ContainmentResult r = colspace_contains(target, cand);
  CHECK_FALSE(r.contained);
  CHECK(r.max_residual == doctest::Approx(1.0));
}

TEST_CASE("minimum-norm solve picks the shortest solution") {
  Mat a(1, 2), b(1, 1);
  a << 1, 1;
  b << 2;
  const MinNormSolution sol = solve_minimum_norm(a, b);
  CHECK(sol.consistent);
  CHECK(sol.solution(0, 0) == doctest::Approx(1.0));
  CHECK(sol.solution(1, 0) == doctest::Approx(1.0));

  // adding any nullspace component can only grow the norm
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const Mat aa = random_mat(rng, 2, 4);
    const Mat bb = aa * random_mat(rng, 4, 1);  // guaranteed consistent
    const MinNormSolution s = solve_minimum_norm(aa, bb);
    CHECK(s.consistent);
    const Mat null_dir =
        (Mat::Identity(4, 4) - pinv(aa) * aa) * random_mat(rng, 4, 1);
    CHECK(s.solution.norm() <= (s.solution + null_dir).norm() + 1e-12);
  }
}

TEST_CASE("minimum-norm solve flags inconsistent systems") {
  Mat a(2, 1), b(2, 1);
  a << 1, 0;
  b << 0, 1;
  const MinNormSolution sol = solve_minimum_norm(a, b);
  CHECK_FALSE(sol.consistent);
  CHECK(sol.residual == doctest::Approx(1.0));
}

TEST_CASE("quad_cost equals trace(M Sigma M') and is orthogonally invariant") {
  Mat m = Mat::Identity(2, 2);
  Mat sigma(2, 2);
  sigma << 2, 0, 0, 3;
  CHECK(quad_cost(m, sigma) == doctest::Approx(5.0));

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Mat mm = random_mat(rng, 3, 3);
    const Mat g = random_mat(rng, 3, 3);
    const Mat s = g * g.transpose();
    // rotating the cost rows leaves the expected squared norm unchanged
    const Eigen::HouseholderQR<Mat> qr(random_mat(rng, 3, 3));
    const Mat q = qr.householderQ();
    CHECK(quad_cost(q * mm, s) == doctest::Approx(quad_cost(mm, s)));
  }
}

TEST_CASE("quad_cost rejects an asymmetric covariance") {
  Mat sigma(2, 2);
  sigma << 1, 0.5, 0, 1;
  CHECK_THROWS_AS(quad_cost(Mat::Identity(2, 2), sigma), InvalidCovariance);
}
