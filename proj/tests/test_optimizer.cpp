#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "fairclust/optimizer.hpp"

namespace fairclust {
namespace {

Tensor scalar(double v) { return Tensor::Constant(1, 1, v); }

TEST(Sgd, PlainStep) {
  Sgd opt({0.1, 0.0});
  Tensor p = scalar(1.0);
  opt.step(p, scalar(2.0));
  EXPECT_DOUBLE_EQ(p(0, 0), 0.8);
}

TEST(Sgd, ZeroGradientLeavesParameters) {
  Sgd opt({0.5, 0.9});
  Tensor p = scalar(3.0);
  opt.step(p, scalar(0.0));
  opt.step(p, scalar(0.0));
  EXPECT_DOUBLE_EQ(p(0, 0), 3.0);
}

TEST(Sgd, MomentumTwoStepsByHand) {
  // v1 = 1, p1 = -1; v2 = 0.9 + 1 = 1.9, p2 = -2.9.
  Sgd opt({1.0, 0.9});
  Tensor p = scalar(0.0);
  opt.step(p, scalar(1.0));
  EXPECT_DOUBLE_EQ(p(0, 0), -1.0);
  opt.step(p, scalar(1.0));
  EXPECT_DOUBLE_EQ(p(0, 0), -2.9);
}

TEST(Sgd, MatchesReferenceRecurrenceOnParamSet) {
  Rng rng(1);
  ParamSet p({make_layer("a", 2, 3, Activation::kRelu, rng, 0.5)});
  ParamSet g = p.zeros_like();
  g[0].weight.setConstant(0.25);
  g[0].bias.setConstant(-1.0);
  Sgd opt({0.05, 0.8});
  Vector ref = p.flatten();
  Vector vel = Vector::Zero(ref.size());
  for (int step = 0; step < 5; ++step) {
    opt.step(p, g);
    vel = 0.8 * vel + g.flatten();
    ref -= 0.05 * vel;
  }
  EXPECT_LT((p.flatten() - ref).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Sgd, NonFiniteGradientSignalsDivergence) {
  Sgd opt;
  Tensor p = scalar(1.0);
  EXPECT_THROW(opt.step(p, scalar(std::numeric_limits<double>::quiet_NaN())), TrainingDivergence);
  EXPECT_THROW(opt.step(p, scalar(std::numeric_limits<double>::infinity())), TrainingDivergence);
}

TEST(Sgd, ShapeChangeIsRejected) {
  Sgd opt;
  Tensor p = scalar(1.0);
  opt.step(p, scalar(1.0));
  Tensor q = Tensor::Zero(2, 2);
  EXPECT_THROW(opt.step(q, Tensor::Zero(2, 2)), ShapeError);
}

TEST(Sgd, RejectsNonPositiveLearningRate) {
  EXPECT_THROW(Sgd({0.0, 0.9}), std::invalid_argument);
  Sgd opt;
  EXPECT_THROW(opt.set_lr(-1.0), std::invalid_argument);
}

}  // namespace
}  // namespace fairclust
