#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace steepest;
using steepest::testing::linear_model;
using steepest::testing::make_dataset;
using steepest::testing::random_matrix;
using steepest::testing::relu_model;

namespace {

const LossSpec kExp{LossKind::Exponential};
const LossSpec kLog{LossKind::Logistic};

ParamVector v2(double a, double b) { return ParamVector::from_values({a, b}); }

}  // namespace

TEST(MarginReport, LinearClosedForm) {
  const Dataset ds = make_dataset({{1, 0}}, {1});
  const MarginReport r = margin_report(linear_model(2), v2(3, 4), ds, kExp, NormSpec::l2());
  EXPECT_DOUBLE_EQ(r.q_min, 3.0);
  EXPECT_DOUBLE_EQ(r.gamma_2, 0.6);
  EXPECT_DOUBLE_EQ(r.gamma_1, 0.75);
  EXPECT_NEAR(r.gamma_inf, 3.0 / 7.0, 1e-16);
  EXPECT_NEAR(*r.gamma_sigma, 0.6, 1e-15);
  EXPECT_EQ(r.degree, 1);
}

TEST(MarginReport, SingleExampleSandwichIsTight) {
  const Dataset ds = make_dataset({{5, 0}}, {1});
  const MarginReport r = margin_report(linear_model(2), v2(1, 0), ds, kExp, NormSpec::l2());
  EXPECT_DOUBLE_EQ(r.log_loss, -5.0);
  EXPECT_DOUBLE_EQ(r.soft_margin, 5.0);
  EXPECT_DOUBLE_EQ(r.gamma_algo, 5.0);
}

TEST(MarginReport, TwoExampleGapIsLogM) {
  const Dataset ds = make_dataset({{5, 0}, {0, -5}}, {1, -1});
  const MarginReport r = margin_report(linear_model(2), ParamVector::from_values({std::sqrt(0.5), std::sqrt(0.5)}),
                                       make_dataset({{5 * std::sqrt(2.0), 0}, {0, 5 * std::sqrt(2.0)}}, {1, 1}), kExp,
                                       NormSpec::l2());
  (void)ds;
  EXPECT_NEAR(r.gamma_algo, 5.0, 1e-14);
  EXPECT_NEAR(r.soft_margin, 5.0 - std::log(2.0), 1e-14);
}

TEST(MarginReport, SandwichAndAlignmentOnRandomSeparatedPoints) {
  Xoshiro256pp rng(4);
  const ModelSpec m = relu_model(3, 6);
  for (int t = 0; t < 50; ++t) {
    Dataset ds;
    ds.x = random_matrix(rng, 10, 3);
    const ParamVector theta({random_matrix(rng, 6, 3), random_matrix(rng, 6, 1)});
    ds.y.resize(10);
    const Vector f = forward_batch(m, theta, ds.x);
    for (int i = 0; i < 10; ++i) ds.y(i) = f(i) >= 0 ? 1 : -1;
    const ParamVector big = 30.0 * theta;
    for (const auto& norm : {NormSpec::l1(), NormSpec::l2(), NormSpec::linf(), NormSpec::spectral()}) {
      const MarginReport r = margin_report(m, big, ds, kExp, norm);
      if (!r.separated) continue;
      const double scale = std::pow(r.norm_algo, 2);
      EXPECT_LE(r.soft_margin, r.gamma_algo + 1e-10);
      EXPECT_GE(r.soft_margin, r.gamma_algo - std::log(10.0) / scale - 1e-10);
      EXPECT_LE(r.alignment, 1.0 + 1e-10);
    }
  }
}

TEST(ScaleToFeasible, Values) {
  const Dataset ds = make_dataset({{1, 0}}, {1});
  const ParamVector t = scale_to_feasible(linear_model(2), v2(2, 0), ds);
  EXPECT_DOUBLE_EQ(t.block(0)(0), 1.0);
  EXPECT_DOUBLE_EQ(t.block(0)(1), 0.0);

  Matrix w(1, 2);
  w << 2, 0;
  Matrix u(1, 1);
  u << 2;
  const ParamVector relu({w, u});  // q = 2 * 2 * 1 = 4
  const ParamVector tr = scale_to_feasible(relu_model(2, 1), relu, ds);
  EXPECT_DOUBLE_EQ(tr.block(0)(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(tr.block(1)(0, 0), 1.0);
  const ParamVector again = scale_to_feasible(relu_model(2, 1), tr, ds);
  EXPECT_EQ(again.flat(), tr.flat());
}

TEST(ScaleToFeasible, NotSeparated) {
  const Dataset ds = make_dataset({{1, 0}}, {-1});
  EXPECT_THROW(scale_to_feasible(linear_model(2), v2(2, 0), ds), NotSeparatedError);
}

TEST(Bregman, ClosedForms) {
  EXPECT_EQ(bregman_divergence(NormSpec::l2(), v2(1, 2), v2(1, 2), v2(5, -3)), 0.0);
  EXPECT_DOUBLE_EQ(bregman_divergence(NormSpec::l2(), v2(0, 1), v2(1, 0), v2(1, 0)), 1.0);
}

TEST(Bregman, LinfPotentialMatchesDirectFormula) {
  // Algorithm norm l1, so the potential is 1/2 ||.||_inf^2 with subgradient
  // ||z||_inf * sign(z_j*) e_j* at z.
  Xoshiro256pp rng(9);
  for (int t = 0; t < 50; ++t) {
    Vector y(4), z(4);
    for (int i = 0; i < 4; ++i) y(i) = rng.gaussian(), z(i) = rng.gaussian();
    Eigen::Index j = 0;
    z.cwiseAbs().maxCoeff(&j);
    Vector mvec = Vector::Zero(4);
    mvec(j) = z.cwiseAbs().maxCoeff() * (z(j) > 0 ? 1 : -1);
    const double direct = 0.5 * std::pow(y.cwiseAbs().maxCoeff(), 2) - 0.5 * std::pow(z.cwiseAbs().maxCoeff(), 2) -
                          mvec.dot(y - z);
    const double got = bregman_divergence(NormSpec::l1(), ParamVector::from_vector(y), ParamVector::from_vector(z),
                                          ParamVector::from_vector(mvec));
    EXPECT_NEAR(got, direct, 1e-13);
    EXPECT_GE(got, -1e-13);  // convex potential with a true subgradient
  }
}

TEST(DetectSeparation, Thresholds) {
  EXPECT_TRUE(detect_separation(-0.01, kExp));
  EXPECT_FALSE(detect_separation(0.0, kExp));
  EXPECT_TRUE(detect_separation(-0.4, kLog));
  EXPECT_FALSE(detect_separation(-0.3, kLog));
}

TEST(Kkt, SingleExampleIsExact) {
  const Dataset ds = make_dataset({{1, 0}}, {1});
  const KktReport k = kkt_residuals(linear_model(2), v2(2, 0), ds, kExp, NormSpec::l2(), 1.0);
  EXPECT_NEAR(k.lambda(0), 1.0, 1e-15);
  EXPECT_NEAR(k.eps, 0.0, 1e-15);
  EXPECT_NEAR(k.delta, 0.0, 1e-15);
  EXPECT_NEAR(k.alignment, 1.0, 1e-15);
}

TEST(Kkt, SymmetricPairAtMaxMarginDirection) {
  const Dataset ds = make_dataset({{1, 1}, {-1, -1}}, {1, -1});
  const KktReport k = kkt_residuals(linear_model(2), v2(7, 7), ds, kExp, NormSpec::l2(), 1.0);
  EXPECT_LE(k.eps, 1e-8);
  EXPECT_LE(std::abs(k.delta), 1e-12);
  EXPECT_LE(k.bregman_gap, k.bregman_bound + 1e-12);
}

TEST(Kkt, NonStationaryDirectionHasResidual) {
  const Dataset ds = make_dataset({{1, 0}, {0, 1}}, {1, 1});
  const KktReport k = kkt_residuals(linear_model(2), v2(5, 1), ds, kExp, NormSpec::l2(), 0.1);
  EXPECT_GT(k.eps, 0.1);
  EXPECT_GT(k.delta, 0.0);
}

TEST(Kkt, MultipliersSurviveUnderflow) {
  const Dataset ds = make_dataset({{1, 1}, {-1, -1}}, {1, -1});
  const KktReport k = kkt_residuals(linear_model(2), v2(600, 600), ds, kExp, NormSpec::l2(), 1.0);
  EXPECT_TRUE(std::isfinite(k.log_lambda(0)));
  EXPECT_LE(k.eps, 1e-8);
}

TEST(Kkt, BoundsHoldAlongLinearGdRun) {
  const Dataset ds = make_dataset({{2, 1}, {1, 3}, {-1, -2}, {-3, -0.5}}, {1, 1, -1, -1});
  const ModelSpec m = linear_model(2);
  for (const auto& norm : {NormSpec::l2(), NormSpec::l1(), NormSpec::linf()}) {
    ParamVector theta = v2(0.01, -0.02);
    const OptimizerSpec opt = OptimizerSpec::steepest(norm, 0.05);
    double sm0 = 0.0;
    for (int t = 0; t < 3000; ++t) {
      const LossGradient lg = loss_subgradient(kExp, m, theta, ds);
      if (detect_separation(lg.log_loss, kExp)) {
        const MarginReport r = margin_report(m, theta, ds, kExp, norm);
        if (sm0 == 0.0) sm0 = r.soft_margin;
        if (sm0 > 0.0 && r.q_min > 0.0) {
          const KktReport k = kkt_residuals(m, theta, ds, kExp, norm, sm0);
          EXPECT_LE(k.bregman_gap, k.bregman_bound + 1e-8) << to_string(norm) << " step " << t;
          EXPECT_LE(k.delta, k.delta_bound + 1e-8) << to_string(norm) << " step " << t;
          EXPECT_GE(k.delta, -1e-12);
        }
      }
      theta = step_steepest(theta, lg.gradient(), opt);
    }
    EXPECT_GT(sm0, 0.0);
  }
}
