#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace steepest;
using steepest::testing::random_matrix;

namespace {

ParamVector v2(double a, double b) { return ParamVector::from_values({a, b}); }

}  // namespace

TEST(StepSteepest, RawL2) {
  const ParamVector t = step_steepest(v2(1, 1), v2(3, 4), OptimizerSpec::steepest(NormSpec::l2(), 0.1));
  EXPECT_DOUBLE_EQ(t.block(0)(0), 1 - 0.3);
  EXPECT_DOUBLE_EQ(t.block(0)(1), 1 - 0.4);
}

TEST(StepSteepest, NormalizedSign) {
  const ParamVector t = step_steepest(v2(0, 0), v2(3, -4), OptimizerSpec::steepest(NormSpec::linf(), 0.1, true));
  EXPECT_DOUBLE_EQ(t.block(0)(0), -0.1);
  EXPECT_DOUBLE_EQ(t.block(0)(1), 0.1);
}

TEST(StepSteepest, ZeroGradientNoMove) {
  for (bool normalized : {false, true})
    for (const auto& n : {NormSpec::l1(), NormSpec::l2(), NormSpec::linf(), NormSpec::spectral()}) {
      const ParamVector t = step_steepest(v2(2, -1), v2(0, 0), OptimizerSpec::steepest(n, 0.5, normalized));
      EXPECT_EQ(t.flat(), v2(2, -1).flat());
    }
}

TEST(StepSteepest, RejectsNonFiniteGradient) {
  EXPECT_THROW(step_steepest(v2(0, 0), v2(INFINITY, 0), OptimizerSpec::steepest(NormSpec::l2(), 0.1)), DomainError);
}

TEST(StepAdam, ZeroBetasIsSignDescent) {
  OptimizerState st;
  const ParamVector t = step_adam(v2(0, 0), v2(0.5, -2), st, OptimizerSpec::adam(0.1, 0, 0, 0));
  EXPECT_DOUBLE_EQ(t.block(0)(0), -0.1);
  EXPECT_DOUBLE_EQ(t.block(0)(1), 0.1);
}

TEST(StepAdam, BiasCorrectionFirstStep) {
  OptimizerState st;
  const ParamVector t = step_adam(v2(0, 0), v2(1, 0), st, OptimizerSpec::adam(0.01, 0.9, 0.999, 0));
  EXPECT_NEAR(t.block(0)(0), -0.01, 1e-15);  // m_hat = g, sqrt(v_hat) = |g|
  EXPECT_DOUBLE_EQ(t.block(0)(1), 0.0);
}

TEST(StepAdam, LargeEpsilonLimit) {
  OptimizerState st;
  const double eta = 0.1, eps = 1e6;
  const ParamVector t = step_adam(v2(0, 0), v2(1, 1), st, OptimizerSpec::adam(eta, 0.9, 0.999, eps));
  // Direct formula: m_hat = 1, sqrt(v_hat) = 1, update = -eta / (1 + eps).
  for (int k = 0; k < 2; ++k) {
    EXPECT_NEAR(t.block(0)(k), -eta / (1.0 + eps), 1e-22);
    EXPECT_NEAR(t.block(0)(k), -eta / eps, 1e-12);
  }
}

TEST(StepAdam, ZeroCoordinateDoesNotMove) {
  OptimizerState st;
  const ParamVector t = step_adam(v2(3, 0), v2(0, 1), st, OptimizerSpec::adam(0.1, 0, 0, 0));
  EXPECT_DOUBLE_EQ(t.block(0)(0), 3.0);
  EXPECT_FALSE(std::isnan(t.block(0)(1)));
}

TEST(StepShampoo, DiagonalFirstStep) {
  Matrix g = Matrix::Zero(2, 2);
  g(0, 0) = 3;
  g(1, 1) = 1;
  OptimizerState st;
  const double eta = 0.1;
  const ParamVector t = step_shampoo(ParamVector({Matrix(Matrix::Zero(2, 2))}), ParamVector({g}), st,
                                     OptimizerSpec::shampoo(eta));
  EXPECT_LT((t.block(0) + eta * Matrix::Identity(2, 2)).norm(), 1e-14);
}

TEST(StepShampoo, ZeroGradient) {
  OptimizerState st;
  const ParamVector w({Matrix(Matrix::Constant(2, 3, 0.5))});
  const ParamVector t = step_shampoo(w, ParamVector::zeros_like(w), st, OptimizerSpec::shampoo(0.1));
  EXPECT_EQ(t.flat(), w.flat());
  EXPECT_TRUE(st.left[0].isZero(0.0));
  EXPECT_TRUE(st.right[0].isZero(0.0));
}

TEST(StepShampoo, FirstStepIsNormalizedSpectralStep) {
  Xoshiro256pp rng(31);
  const double eta = 0.05;
  for (int trial = 0; trial < 10; ++trial) {
    const ParamVector g({random_matrix(rng, 8, 6)});
    const ParamVector w0({random_matrix(rng, 8, 6)});
    OptimizerState st;
    const ParamVector a = step_shampoo(w0, g, st, OptimizerSpec::shampoo(eta));
    const ParamVector b = step_steepest(w0, g, OptimizerSpec::steepest(NormSpec::spectral(), eta, true));
    EXPECT_LT((a.flat() - b.flat()).cwiseAbs().maxCoeff(), 1e-8);
    const ThinSvd s = thin_svd(g.block(0));
    const Matrix uvt = s.u * s.v.transpose();
    EXPECT_LT((a.block(0) - (w0.block(0) - eta * uvt)).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(ApplySwitch, Rules) {
  OptimizerSpec gd = OptimizerSpec::steepest(NormSpec::l2(), 0.1);
  OptimizerState st;
  EXPECT_EQ(apply_switch(gd, st, true).norm.kind, NormKind::L2);

  gd.switch_rule = SwitchRule{std::make_shared<const OptimizerSpec>(OptimizerSpec::steepest(NormSpec::l1(), 0.1))};
  st.t = 5;
  EXPECT_EQ(apply_switch(gd, st, false).norm.kind, NormKind::L2);
  EXPECT_FALSE(st.switched);
  EXPECT_EQ(st.t, 5);
  EXPECT_EQ(apply_switch(gd, st, true).norm.kind, NormKind::L1);
  EXPECT_TRUE(st.switched);
  EXPECT_EQ(st.t, 0);
  st.t = 3;
  EXPECT_EQ(apply_switch(gd, st, false).norm.kind, NormKind::L1);
  EXPECT_EQ(st.t, 3);
}

TEST(Validate, RejectsBadSpecs) {
  EXPECT_THROW(OptimizerSpec::steepest(NormSpec::l2(), 0.0).validate(), ConfigError);
  EXPECT_THROW(OptimizerSpec::adam(0.1, 1.0, 0.5, 0).validate(), ConfigError);
  EXPECT_THROW(OptimizerSpec::shampoo(0.1, -1.0).validate(), ConfigError);
}
