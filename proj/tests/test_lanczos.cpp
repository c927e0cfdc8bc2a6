#include <random>

#include <gtest/gtest.h>

#include "vlab/lanczos.hpp"

using namespace vlab;

namespace {

// Q diag(spec) Q^T with a random orthogonal Q.
Eigen::MatrixXd with_spectrum(const Eigen::VectorXd& spec, unsigned seed) {
  const int n = static_cast<int>(spec.size());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd X(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) X(i, j) = g(rng);
  const Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(X).householderQ();
  Eigen::MatrixXd A = Q * spec.asDiagonal() * Q.transpose();
  return 0.5 * (A + A.transpose());
}

}  // namespace

TEST(CountAbove, MatchesDenseDiagonalization) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.6);
  for (unsigned trial = 0; trial < 6; ++trial) {
    const int n = 150 + 40 * trial;
    Eigen::VectorXd spec(n);
    for (int i = 0; i < n; ++i) spec(i) = u(rng) * std::pow(0.97, i);
    const Eigen::MatrixXd A = with_spectrum(spec, trial);
    int expected = 0;
    for (int i = 0; i < n; ++i) expected += spec(i) > 1.0;
    const CountResult r = count_above(A);
    EXPECT_EQ(r.count, expected) << "trial " << trial;
    EXPECT_FALSE(r.ambiguous);
  }
}

TEST(CountAbove, ZeroOperator) {
  const CountResult r = count_above(Eigen::MatrixXd::Zero(40, 40));
  EXPECT_EQ(r.count, 0);
}

TEST(CountAbove, ClusteredEigenvaluesAboveThreshold) {
  Eigen::VectorXd spec = Eigen::VectorXd::LinSpaced(200, -0.5, 0.9);
  spec(0) = 1.3;
  spec(1) = 1.3;
  spec(2) = 1.3 + 1e-9;
  const CountResult r = count_above(with_spectrum(spec, 11));
  EXPECT_EQ(r.count, 3);
}

TEST(CountAbove, BoundaryEigenvalueIsFlagged) {
  Eigen::VectorXd spec = Eigen::VectorXd::LinSpaced(120, -0.5, 0.5);
  spec(0) = 1.0 + 1e-10;
  spec(1) = 2.0;
  const CountResult r = count_above(with_spectrum(spec, 3));
  EXPECT_TRUE(r.ambiguous);
  EXPECT_EQ(r.count, 1);
  EXPECT_EQ(r.count_if_boundary_above, 2);
}

TEST(TopEigenvalue, AgreesWithDense) {
  Eigen::VectorXd spec = Eigen::VectorXd::LinSpaced(300, -3.0, 2.0);
  spec(17) = 2.5;
  const Eigen::MatrixXd A = with_spectrum(spec, 8);
  const double top = top_eigenvalue([&](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y.noalias() = A * x; }, 300,
                                    200);
  EXPECT_NEAR(top, 2.5, 1e-9);
}

TEST(TopSingularValue, AgreesWithSvd) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  Eigen::MatrixXd M(60, 45);
  for (int i = 0; i < 60; ++i)
    for (int j = 0; j < 45; ++j) M(i, j) = g(rng);
  const double ref = Eigen::JacobiSVD<Eigen::MatrixXd>(M).singularValues()(0);
  EXPECT_NEAR(top_singular_value(M, 45) / ref, 1.0, 1e-10);
}
