#include <gtest/gtest.h>

#include "fairclust/gradcheck.hpp"

namespace fairclust {
namespace {

Vector sample_params() {
  Vector p(6);
  p << 0.3, -1.2, 2.5, 0.01, -0.7, 4.0;
  return p;
}

TEST(FiniteDiff, QuadraticIsExact) {
  const Vector p = sample_params();
  auto loss = [](const Vector& v) { return 0.5 * v.squaredNorm(); };
  const auto r = finite_diff_check(loss, p, p, 1e-4, p.size());
  EXPECT_LE(r.max_rel_error, 1e-7);
  EXPECT_EQ(r.checked, 6u);
}

TEST(FiniteDiff, ConstantLossReportsZero) {
  const Vector p = sample_params();
  auto loss = [](const Vector&) { return 3.0; };
  const auto r = finite_diff_check(loss, Vector::Zero(6), p, 1e-4, 6);
  EXPECT_EQ(r.max_rel_error, 0.0);
}

TEST(FiniteDiff, SignFlipGivesErrorNearTwo) {
  const Vector p = sample_params();
  auto loss = [](const Vector& v) { return 0.5 * v.squaredNorm(); };
  const auto r = finite_diff_check(loss, -p, p, 1e-4, p.size());
  EXPECT_NEAR(r.max_rel_error, 2.0, 1e-6);
}

TEST(FiniteDiff, SubsetSamplingIsSeeded) {
  const Vector p = sample_params();
  Vector bad = p;
  bad(2) = 0.0;
  auto loss = [](const Vector& v) { return 0.5 * v.squaredNorm(); };
  const auto a = finite_diff_check(loss, bad, p, 1e-4, 3, 5);
  const auto b = finite_diff_check(loss, bad, p, 1e-4, 3, 5);
  EXPECT_EQ(a.checked, 3u);
  EXPECT_EQ(a.max_rel_error, b.max_rel_error);
  EXPECT_EQ(a.worst_index, b.worst_index);
}

TEST(FiniteDiff, WorstIndexPointsAtTheBug) {
  const Vector p = sample_params();
  Vector bad = p;
  bad(4) += 1.0;
  auto loss = [](const Vector& v) { return 0.5 * v.squaredNorm(); };
  EXPECT_EQ(finite_diff_check(loss, bad, p, 1e-4, 6).worst_index, 4);
}

TEST(FiniteDiff, StepOutsideRangeIsRejected) {
  const Vector p = sample_params();
  auto loss = [](const Vector& v) { return v.sum(); };
  EXPECT_THROW(finite_diff_check(loss, p, p, 1e-7, 6), std::invalid_argument);
  EXPECT_THROW(finite_diff_check(loss, p, p, 0.1, 6), std::invalid_argument);
  EXPECT_THROW(finite_diff_check(loss, p, p, 1e-4, 7), std::invalid_argument);
}

}  // namespace
}  // namespace fairclust
