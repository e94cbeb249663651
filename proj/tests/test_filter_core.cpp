#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "amcckf/filter_core.hpp"
#include "test_support.hpp"

namespace amcckf {
namespace {

using test::Mat;
using test::Vec;

GaussianBelief<double> belief(const Vec& mean, const Mat& cov) {
  return {mean, cov, 0.0};
}

// predict -------------------------------------------------------------------

TEST(Predict, ScalarIdentityAddsQ) {
  const auto model = test::linear_process(Mat::Identity(1, 1), Mat::Constant(1, 1, 0.5));
  const auto out = predict(belief(Vec::Zero(1), Mat::Identity(1, 1)), model, Vec(), 0.1);
  EXPECT_DOUBLE_EQ(out.covariance(0, 0), 1.5);
  EXPECT_DOUBLE_EQ(out.time, 0.1);
}

TEST(Predict, ZeroCovarianceStaysZero) {
  const auto model = test::linear_process(Mat::Identity(3, 3), Mat::Zero(3, 3));
  const auto out = predict(belief(Vec::Ones(3), Mat::Zero(3, 3)), model, Vec(), 1.0);
  EXPECT_EQ(out.covariance, Mat::Zero(3, 3));
}

TEST(Predict, ConstantVelocityMatchesElementwiseArithmetic) {
  const double dt = 0.1;
  Mat F(2, 2);
  F << 1, dt, 0, 1;
  const auto model = test::linear_process(F, 0.01 * Mat::Identity(2, 2));
  Vec x(2);
  x << 1.0, 2.0;
  const auto out = predict(belief(x, Mat::Identity(2, 2)), model, Vec(), dt);

  // [1 dt; 0 1] I [1 0; dt 1] + 0.01 I written out by hand.
  EXPECT_DOUBLE_EQ(out.covariance(0, 0), 1.0 + dt * dt + 0.01);
  EXPECT_DOUBLE_EQ(out.covariance(0, 1), dt);
  EXPECT_DOUBLE_EQ(out.covariance(1, 0), dt);
  EXPECT_DOUBLE_EQ(out.covariance(1, 1), 1.0 + 0.01);
  EXPECT_DOUBLE_EQ(out.mean(0), 1.0 + 2.0 * dt);
  EXPECT_DOUBLE_EQ(out.mean(1), 2.0);
}

TEST(Predict, NonFiniteStateNamesIndex) {
  ProcessModel<double> model = test::linear_process(Mat::Identity(3, 3), Mat::Zero(3, 3));
  model.transition = [](const Vec& x, const Vec&, double) {
    Vec y = x;
    y(2) = std::numeric_limits<double>::quiet_NaN();
    return y;
  };
  try {
    predict(belief(Vec::Zero(3), Mat::Identity(3, 3)), model, Vec(), 0.1);
    FAIL() << "expected PropagationError";
  } catch (const PropagationError& e) {
    EXPECT_EQ(e.index(), 2);
  }
}

TEST(Predict, RejectsNonPositiveDt) {
  const auto model = test::linear_process(Mat::Identity(1, 1), Mat::Zero(1, 1));
  EXPECT_THROW(predict(belief(Vec::Zero(1), Mat::Identity(1, 1)), model, Vec(), 0.0),
               ValidationError);
}

TEST(Predict, TraceNeverDecreasesWithIdentityTransition) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index n = 1 + trial % 8;
    const Mat P = test::random_spd(rng, n);
    const Mat Q = test::random_spd(rng, n, 1e-6) * 1e-3;
    const auto model = test::linear_process(Mat::Identity(n, n), Q);
    const auto out = predict(belief(Vec::Zero(n), P), model, Vec(), 0.01);
    EXPECT_GE(out.covariance.trace(), P.trace());
  }
}

// correntropy_weights -------------------------------------------------------

TEST(CorrentropyWeights, ZeroInnovationGivesOnes) {
  const auto w = correntropy_weights<double>(Vec::Zero(4), Mat::Identity(4, 4), Vec::Ones(4));
  EXPECT_EQ(w.weighted, Vec::Ones(4));
  EXPECT_EQ(w.unweighted, Vec::Ones(4));
}

TEST(CorrentropyWeights, HugeInnovationUnderflowsTowardZero) {
  Vec y(1);
  y << 1e6;
  const auto w = correntropy_weights<double>(y, Mat::Identity(1, 1), Vec::Ones(1));
  EXPECT_LT(w.weighted(0), 1e-300);
  EXPECT_GT(w.weighted(0), 0.0);
}

TEST(CorrentropyWeights, TwoDimensionalExample) {
  Vec y(2), s(2), d(2);
  y << 1, 2;
  s << 1, 1;
  d << 1, 4;
  const auto w = correntropy_weights<double>(y, d.asDiagonal(), s);
  EXPECT_NEAR(w.weighted(0), std::exp(-0.5), 1e-15);
  EXPECT_NEAR(w.weighted(1), std::exp(-0.5), 1e-15);
  EXPECT_NEAR(w.unweighted(0), std::exp(-0.5), 1e-15);
  EXPECT_NEAR(w.unweighted(1), std::exp(-2.0), 1e-15);
}

TEST(CorrentropyWeights, EntriesInUnitIntervalForFiniteInputs) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> lg(-12.0, 12.0);
  for (int trial = 0; trial < 20000; ++trial) {
    Vec y(3), s(3), r(3);
    for (int j = 0; j < 3; ++j) {
      y(j) = (trial % 2 ? -1.0 : 1.0) * std::pow(10.0, lg(rng));
      s(j) = std::pow(10.0, lg(rng) / 2);
      r(j) = std::pow(10.0, lg(rng) / 2);
    }
    const auto w = correntropy_weights<double>(y, r.asDiagonal(), s);
    for (int j = 0; j < 3; ++j) {
      ASSERT_GT(w.weighted(j), 0.0);
      ASSERT_LE(w.weighted(j), 1.0);
      ASSERT_GT(w.unweighted(j), 0.0);
      ASSERT_LE(w.unweighted(j), 1.0);
    }
  }
}

// mcckf_update / kf_update --------------------------------------------------

TEST(Update, UnitWeightsGiveKalmanGain) {
  const auto model = test::linear_measurement("s", Mat::Identity(1, 1), Mat::Identity(1, 1),
                                              Vec::Constant(1, 1e12));
  Vec z(1);
  z << 2.0;
  const auto kf = kf_update(belief(Vec::Zero(1), Mat::Identity(1, 1)), z, model);
  EXPECT_DOUBLE_EQ(kf.record.K(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(kf.belief.mean(0), 1.0);
  const auto mc = mcckf_update(belief(Vec::Zero(1), Mat::Identity(1, 1)), z, model);
  EXPECT_NEAR(mc.record.K(0, 0), 0.5, 1e-12);
}

TEST(Update, ZeroInnovationKeepsMeanAndContracts) {
  std::mt19937_64 rng(5);
  const Mat P = test::random_spd(rng, 4);
  const Mat H = test::random_matrix(rng, 2, 4);
  const auto model = test::linear_measurement("s", H, test::random_diag_spd(rng, 2), Vec::Ones(2));
  const Vec x = test::random_vector(rng, 4);
  const auto out = mcckf_update(belief(x, P), Vec(H * x), model);
  EXPECT_LT((out.belief.mean - x).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT(out.belief.covariance.trace(), P.trace());
  EXPECT_EQ(out.record.weights.weighted, Vec::Ones(2));
}

TEST(Update, ZeroWeightRemovesDimensionInfluence) {
  Mat P(2, 2);
  P << 2.0, 0.3, 0.3, 1.0;
  Mat R(2, 2);
  R << 0.5, 0.0, 0.0, 0.7;
  Vec y(2), c(2);
  y << 0.4, 100.0;
  c << 1.0, 0.0;
  const auto out = correct<double>(belief(Vec::Zero(2), P), y, Mat::Identity(2, 2), R, c);
  EXPECT_EQ(out.gain(0, 1), 0.0);
  EXPECT_EQ(out.gain(1, 1), 0.0);
  // The state correction ignores the outlier entirely.
  Vec y_clean = y;
  y_clean(1) = 0.0;
  EXPECT_EQ(out.gain * y, out.gain * y_clean);
}

TEST(Update, KalmanMatchesSaturatedKernel) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const Mat P = test::random_spd(rng, 4);
    const Mat H = test::random_matrix(rng, 3, 4);
    const Mat R = test::random_diag_spd(rng, 3);
    const auto model = test::linear_measurement("s", H, R, Vec::Constant(3, 1e12));
    const Vec x = test::random_vector(rng, 4);
    const Vec z = test::random_vector(rng, 3);
    const auto kf = kf_update(belief(x, P), z, model);
    const auto mc = mcckf_update(belief(x, P), z, model);
    EXPECT_LT(test::max_rel_diff(kf.belief.mean, mc.belief.mean), 1e-9);
    EXPECT_LT(test::max_rel_diff(kf.belief.covariance, mc.belief.covariance), 1e-9);
  }
}

TEST(Update, JosephMatchesTextbookForOptimalGain) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 2 + trial % 5, m = 1 + trial % 4;
    const Mat P = test::random_spd(rng, n, 0.1);
    const Mat H = test::random_matrix(rng, m, n);
    const Mat R = test::random_spd(rng, m, 0.1);
    const auto model = test::linear_measurement("s", H, R, Vec::Ones(m));
    const auto out = kf_update(belief(Vec::Zero(n), P), test::random_vector(rng, m), model);
    const Mat K = out.record.K;
    const Mat textbook = (Mat::Identity(n, n) - K * H) * P;
    EXPECT_LT(test::max_rel_diff(out.belief.covariance, textbook), 1e-10);
  }
}

TEST(Update, UnitWeightsMatchKalmanUpdate) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index n = 1 + trial % 6, m = 1 + trial % 3;
    const Mat P = test::random_spd(rng, n);
    const Mat H = test::random_matrix(rng, m, n);
    const Mat R = test::random_spd(rng, m);
    const Vec x = test::random_vector(rng, n);
    const Vec z = test::random_vector(rng, m);
    const auto model = test::linear_measurement("s", H, R, Vec::Ones(m));
    const auto kf = kf_update(belief(x, P), z, model);
    const auto c = correct<double>(belief(x, P), Vec(z - H * x), H, R, Vec::Ones(m));
    EXPECT_LT(test::max_rel_diff(kf.belief.mean, c.posterior.mean), 1e-10);
    EXPECT_LT(test::max_rel_diff(kf.belief.covariance, c.posterior.covariance), 1e-10);
  }
}

TEST(Update, RecordIsPopulated) {
  Mat H(2, 3);
  H << 1, 0, 0, 0, 1, 1;
  const auto model = test::linear_measurement("cam", H, Mat::Identity(2, 2), Vec::Ones(2));
  Vec x(3), z(2);
  x << 1, 2, 3;
  z << 1.5, 4.0;
  const auto out = mcckf_update(belief(x, Mat::Identity(3, 3)), z, model);
  const auto& r = out.record;
  EXPECT_EQ(r.sensor_id, "cam");
  EXPECT_EQ(r.innovation, Vec(z - H * x));
  EXPECT_EQ(r.residual, Vec(z - H * out.belief.mean));
  EXPECT_EQ(r.H, H);
  EXPECT_EQ(r.P_prior, Mat::Identity(3, 3));
  EXPECT_EQ(r.P_post, out.belief.covariance);
  EXPECT_EQ(r.x_prior, x);
  EXPECT_EQ(r.x_post, out.belief.mean);
  EXPECT_EQ(r.weights.weighted.size(), 2);
}

TEST(Update, NonFiniteMeasurementRejected) {
  const auto model = test::linear_measurement("s", Mat::Identity(2, 2), Mat::Identity(2, 2),
                                              Vec::Ones(2));
  Vec z(2);
  z << 1.0, std::numeric_limits<double>::infinity();
  EXPECT_THROW(mcckf_update(belief(Vec::Zero(2), Mat::Identity(2, 2)), z, model),
               MeasurementRejected);
  EXPECT_THROW(kf_update(belief(Vec::Zero(2), Mat::Identity(2, 2)), z, model),
               MeasurementRejected);
  EXPECT_THROW(kf_update(belief(Vec::Zero(2), Mat::Identity(2, 2)), Vec(Vec::Zero(3)), model),
               MeasurementRejected);
}

TEST(Update, InvalidBandwidthOrNoiseRejected) {
  auto model = test::linear_measurement("s", Mat::Identity(1, 1), Mat::Identity(1, 1),
                                        Vec::Zero(1));
  EXPECT_THROW(mcckf_update(belief(Vec::Zero(1), Mat::Identity(1, 1)), Vec(Vec::Ones(1)), model),
               ValidationError);
}

TEST(Update, SingularPriorIsRegularized) {
  const auto model = test::linear_measurement("s", Mat::Identity(2, 2), Mat::Identity(2, 2),
                                              Vec::Ones(2));
  const auto out = mcckf_update(belief(Vec::Zero(2), Mat::Zero(2, 2)), Vec(Vec::Ones(2)), model);
  EXPECT_TRUE(out.record.regularized);
  EXPECT_TRUE(out.belief.covariance.allFinite());
  EXPECT_TRUE(out.belief.mean.allFinite());
}

TEST(Update, CorrelatedNoiseWithUnequalWeights) {
  Mat R(2, 2);
  R << 1.0, 0.6, 0.6, 1.0;
  Vec c(2);
  c << 1.0, 0.2;
  const auto out = correct<double>(belief(Vec::Zero(2), Mat::Identity(2, 2)), Vec(Vec::Ones(2)),
                                   Mat::Identity(2, 2), R, c);
  // Oracle: K = (P^-1 + C R^-1)^-1 C R^-1 through a dense LU.
  const Mat CRi = c.asDiagonal() * R.inverse();
  const Mat K = (Mat::Identity(2, 2) + CRi).inverse() * CRi;
  EXPECT_LT((out.gain - K).cwiseAbs().maxCoeff(), 1e-12);
}

// Properties ----------------------------------------------------------------

TEST(UpdateProperty, PosteriorIsSymmetricPsd) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> nd(1, 12), md(1, 9);
  std::uniform_real_distribution<double> lg(-3.0, 3.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100000; ++trial) {
    const int n = nd(rng), m = md(rng);
    const Mat P = test::random_spd(rng, n, 1e-6);
    const Mat H = test::random_matrix(rng, m, n);
    const Mat R = test::random_diag_spd(rng, m, 1e-3, 1e2);
    Vec s(m);
    for (int j = 0; j < m; ++j) s(j) = std::pow(10.0, lg(rng));
    const auto model = test::linear_measurement("s", H, R, s);
    const auto out = mcckf_update(belief(Vec::Zero(n), P), test::random_vector(rng, m, 3.0), model);
    const Mat& C = out.belief.covariance;
    ASSERT_EQ(C, C.transpose());
    worst = std::min(worst, min_eigenvalue(C));
  }
  EXPECT_GE(worst, -1e-9);
}

TEST(UpdateProperty, OutlierCorrectionVanishes) {
  const Mat P = Mat::Identity(2, 2);
  const Mat R = Mat::Identity(2, 2);
  const Vec s = Vec::Ones(2);
  auto correction = [&](double magnitude) {
    Vec y(2);
    y << 0.1, magnitude;
    const auto w = correntropy_weights<double>(y, R, s);
    const auto c = correct<double>(belief(Vec::Zero(2), P), y, Mat::Identity(2, 2), R, w.weighted);
    return c.posterior.mean(1);
  };
  // Beyond the kernel peak at |y| = sigma sqrt(R) the correction decays.
  double prev = correction(2.0);
  for (double y : {4.0, 8.0, 16.0, 32.0}) {
    const double cur = correction(y);
    EXPECT_LT(cur, prev) << "y = " << y;
    prev = cur;
  }
  // Past the exponent floor the weight is constant, so the correction is
  // bounded by |y| exp(-700).
  for (double y : {1e2, 1e4, 1e6}) {
    EXPECT_LT(std::abs(correction(y)), 1e-290) << "y = " << y;
  }
}

}  // namespace
}  // namespace amcckf
