#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "stg/errors.hpp"
#include "stg/scene_model.hpp"
#include "support/scenes.hpp"

namespace stg {
namespace {

GaussianCloud<double> one_gaussian() {
  GaussianCloud<double> c(1, 3, 1);
  c.set_rotation_coeff(0, 0, Vec4<double>(1, 0, 0, 0));
  return c;
}

TEST(EvalPosition, ConstantTermOnly) {
  auto c = one_gaussian();
  c.set_motion_coeff(0, 0, {1, 2, 3});
  for (double t : {0.0, 0.3, 1.0, 7.0}) EXPECT_EQ(eval_position(c, 0, t), Vec3<double>(1, 2, 3));
}

TEST(EvalPosition, LinearTerm) {
  auto c = one_gaussian();
  c.set_motion_coeff(0, 1, {1, 0, 0});
  EXPECT_EQ(eval_position(c, 0, 2.0), Vec3<double>(2, 0, 0));
}

TEST(EvalPosition, AllCoefficientsOne) {
  auto c = one_gaussian();
  for (int k = 0; k <= 3; ++k) c.set_motion_coeff(0, k, {1, 1, 1});
  EXPECT_EQ(eval_position(c, 0, 2.0), Vec3<double>(15, 15, 15));
}

TEST(EvalPosition, FourthDifferenceVanishes) {
  std::mt19937_64 rng(3);
  auto c = testing::random_cloud<double>(rng, 5);
  for (std::size_t i = 0; i < c.size(); ++i)
    for (double h : {0.01, 0.1, 0.37}) {
      const double t = 0.2;
      const Vec3<double> d4 = eval_position(c, i, t + 4 * h) - 4 * eval_position(c, i, t + 3 * h) +
                              6 * eval_position(c, i, t + 2 * h) - 4 * eval_position(c, i, t + h) +
                              eval_position(c, i, t);
      EXPECT_LT(d4.norm(), 1e-12);
    }
}

TEST(EvalPosition, OutOfRangeIndexThrows) {
  auto c = one_gaussian();
  EXPECT_THROW(eval_position(c, 1, 0.0), UsageError);
}

TEST(EvalRotation, IdentityAndNormalization) {
  auto c = one_gaussian();
  EXPECT_EQ(eval_rotation(c, 0, 0.7), Vec4<double>(1, 0, 0, 0));
  c.set_rotation_coeff(0, 0, {2, 0, 0, 0});
  EXPECT_EQ(eval_rotation(c, 0, 0.7), Vec4<double>(1, 0, 0, 0));
}

TEST(EvalRotation, LinearPolynomialThenNormalize) {
  auto c = one_gaussian();
  c.set_rotation_coeff(0, 1, {0, 2, 0, 0});
  const Vec4<double> q = eval_rotation(c, 0, 0.5);
  const double r = std::sqrt(0.5);
  EXPECT_NEAR(q[0], r, 1e-15);
  EXPECT_NEAR(q[1], r, 1e-15);
  EXPECT_EQ(q[2], 0.0);
  EXPECT_EQ(q[3], 0.0);
}

TEST(EvalRotation, UnitNormOnRandomClouds) {
  std::mt19937_64 rng(4);
  auto c = testing::random_cloud<double>(rng, 50);
  for (std::size_t i = 0; i < c.size(); ++i)
    for (double t : {0.0, 0.5, 1.0}) EXPECT_NEAR(eval_rotation(c, i, t).norm(), 1.0, 1e-6);
}

TEST(EvalRotation, DegenerateThrows) {
  GaussianCloud<double> c(1, 3, 1);
  EXPECT_THROW(eval_rotation(c, 0, 0.5), NumericalError);
}

TEST(EvalTemporalOpacity, PeakAndClosedForms) {
  auto c = one_gaussian();
  c.opacity_logit[0] = logit(0.7);
  c.temporal_center[0] = 0.3;
  EXPECT_NEAR(eval_temporal_opacity(c, 0, 0.3), 0.7, 1e-15);

  c.opacity_logit[0] = 40.0;  // σ^s = 1 to double precision
  c.log_temporal_scale[0] = std::log(std::log(2.0));
  c.temporal_center[0] = 0.0;
  EXPECT_NEAR(eval_temporal_opacity(c, 0, 1.0), 0.5, 1e-12);

  c.opacity_logit[0] = logit(0.8);
  c.log_temporal_scale[0] = std::log(4.0);
  EXPECT_NEAR(eval_temporal_opacity(c, 0, 0.5), 0.29430, 1e-5);
  EXPECT_NEAR(eval_temporal_opacity(c, 0, 0.5), 0.8 * std::exp(-1.0), 1e-14);
}

TEST(EvalTemporalOpacity, SymmetricAndMonotone) {
  auto c = one_gaussian();
  c.opacity_logit[0] = 0.4;
  c.temporal_center[0] = 0.5;
  c.log_temporal_scale[0] = 1.3;
  double prev = 2;
  for (int k = 0; k <= 32; ++k) {
    const double d = k / 32.0;  // exact offsets keep 0.5 ± d symmetric in binary
    const double a = eval_temporal_opacity(c, 0, 0.5 + d), b = eval_temporal_opacity(c, 0, 0.5 - d);
    EXPECT_EQ(a, b);
    EXPECT_LE(a, prev);
    prev = a;
  }
}

TEST(EvalCovariance, Examples) {
  auto c = one_gaussian();
  EXPECT_TRUE(eval_covariance(c, 0, 0.0).isApprox(Mat3<double>::Identity(), 1e-15));

  c.log_scales[0] = std::log(2.0);
  Mat3<double> expect = Vec3<double>(4, 1, 1).asDiagonal();
  EXPECT_TRUE(eval_covariance(c, 0, 0.0).isApprox(expect, 1e-14));

  const double r = std::sqrt(0.5);  // 90° about z
  c.set_rotation_coeff(0, 0, {r, 0, 0, r});
  expect = Vec3<double>(1, 4, 1).asDiagonal();
  EXPECT_LT((eval_covariance(c, 0, 0.0) - expect).norm(), 1e-14);
}

TEST(EvalCovariance, EigenvaluesFollowScalesAtAnyTime) {
  std::mt19937_64 rng(5);
  auto c = testing::random_cloud<double>(rng, 20);
  for (std::size_t i = 0; i < c.size(); ++i) {
    std::array<double, 3> want;
    for (int k = 0; k < 3; ++k) want[k] = std::exp(2 * c.log_scales[3 * i + k]);
    std::sort(want.begin(), want.end());
    for (double t : {0.0, 0.6}) {
      const Mat3<double> s = eval_covariance(c, i, t);
      EXPECT_LT((s - s.transpose()).norm(), 1e-15);
      Eigen::SelfAdjointEigenSolver<Mat3<double>> es(s);
      for (int k = 0; k < 3; ++k) EXPECT_NEAR(es.eigenvalues()[k], want[k], 1e-12 * want[2]);
    }
  }
}

TEST(EvalFeatures, Examples) {
  auto c = one_gaussian();
  c.temporal_center[0] = 0.25;
  for (int k = 0; k < 3; ++k) {
    c.f_base[k] = 0.1 * (k + 1);
    c.f_dir[k] = -0.2 * (k + 1);
    c.f_time[k] = k + 1;
  }
  Vec9<double> at_center = eval_features(c, 0, 0.25);
  Vec9<double> expect;
  expect << 0.1, 0.2, 0.3, -0.2, -0.4, -0.6, 0, 0, 0;
  EXPECT_TRUE(at_center.isApprox(expect, 1e-15));

  const Vec9<double> later = eval_features(c, 0, 0.75);
  EXPECT_DOUBLE_EQ(later[6], 0.5);
  EXPECT_DOUBLE_EQ(later[7], 1.0);
  EXPECT_DOUBLE_EQ(later[8], 1.5);

  auto z = one_gaussian();
  EXPECT_EQ(eval_features(z, 0, 0.9), Vec9<double>::Zero());
}

TEST(GaussianCloud, FloatsPerGaussianAndRowEditing) {
  std::mt19937_64 rng(6);
  auto c = testing::random_cloud<float>(rng, 4);
  EXPECT_EQ(c.floats_per_gaussian(), 35);
  append_row(c, c, 1);
  ASSERT_EQ(c.size(), 5u);
  EXPECT_EQ(c.motion_coeff(4, 0), c.motion_coeff(1, 0));
  EXPECT_EQ(c.f_time[12], c.f_time[3]);
  const Vec3<float> row2 = c.motion_coeff(2, 0), copy = c.motion_coeff(4, 0);
  filter_rows(c, {true, false, true, true, true});
  ASSERT_EQ(c.size(), 4u);
  EXPECT_EQ(c.motion_coeff(1, 0), row2);
  EXPECT_EQ(c.motion_coeff(3, 0), copy);
  append_zero_rows(c, 2);
  EXPECT_EQ(c.size(), 6u);
  EXPECT_NO_THROW(c.check_consistent());
  c.f_base.pop_back();
  EXPECT_THROW(c.check_consistent(), UsageError);
}

TEST(GaussianCloud, EvaluationIsPure) {
  std::mt19937_64 rng(7);
  auto c = testing::random_cloud<float>(rng, 10);
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_EQ(eval_covariance(c, i, 0.3f), eval_covariance(c, i, 0.3f));
    EXPECT_EQ(eval_features(c, i, 0.3f), eval_features(c, i, 0.3f));
  }
}

TEST(FrameTime, NormalizesIndex) {
  EXPECT_EQ(frame_time(0, 16), 0.0);
  EXPECT_EQ(frame_time(15, 16), 1.0);
  EXPECT_EQ(frame_time(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(frame_time(1, 3), 0.5);
}

}  // namespace
}  // namespace stg
