#include <gtest/gtest.h>

#include "legs/samplers.hpp"
#include "legs/selection.hpp"
#include "oracles.hpp"

using namespace legs;

TEST(InitTheta, Uniform) {
  const auto s = selection_matrix(init_theta(2, 4, ThetaInit::Uniform));
  for (int r = 0; r < 2; ++r)
    for (int t = 0; t < 4; ++t) EXPECT_DOUBLE_EQ(s.F(r, t), 0.25);
}

TEST(InitTheta, DyadicWarmPeaks) {
  const auto s = selection_matrix(init_theta(3, 8, ThetaInit::DyadicWarm));
  EXPECT_EQ(first_argmax(s.F.row(0)) + 1, 1);
  EXPECT_EQ(first_argmax(s.F.row(1)) + 1, 2);
  EXPECT_EQ(first_argmax(s.F.row(2)) + 1, 4);
}

TEST(InitTheta, RandomIsSeedDeterministic) {
  EXPECT_EQ(init_theta(3, 6, ThetaInit::Random, 7).theta, init_theta(3, 6, ThetaInit::Random, 7).theta);
  EXPECT_NE(init_theta(3, 6, ThetaInit::Random, 7).theta, init_theta(3, 6, ThetaInit::Random, 8).theta);
}

TEST(InitTheta, InvalidShape) {
  EXPECT_THROW(init_theta(5, 4, ThetaInit::Uniform), Error);
  EXPECT_THROW(init_theta(4, 6, ThetaInit::DyadicWarm), Error);  // 2^3 > 6
}

TEST(SelectionMatrix, ReordersByPeak) {
  SelectionParams p;
  p.theta = Eigen::MatrixXd::Zero(2, 4);
  p.theta(0, 2) = 3.0;  // peak at t = 3
  p.theta(1, 0) = 3.0;  // peak at t = 1
  const auto s = selection_matrix(p);
  EXPECT_EQ(s.row_order, (std::vector<int>{1, 0}));
  EXPECT_EQ(first_argmax(s.F.row(0)), 0);
  EXPECT_EQ(first_argmax(s.F.row(1)), 2);
}

TEST(SelectionMatrix, TiesKeepOriginalOrder) {
  SelectionParams p;
  p.theta = Eigen::MatrixXd::Zero(3, 4);
  p.theta(0, 1) = 1.0;
  p.theta(1, 1) = 2.0;
  p.theta(2, 0) = 1.0;
  EXPECT_EQ(selection_matrix(p).row_order, (std::vector<int>{2, 0, 1}));
}

TEST(SelectionMatrix, LargeLogitAgainstDirectSoftmax) {
  SelectionParams p;
  p.theta = Eigen::MatrixXd::Zero(1, 4);
  p.theta(0, 0) = 10.0;
  const auto s = selection_matrix(p);
  const double denom = std::exp(10.0) + 3.0;
  EXPECT_NEAR(s.F(0, 0), std::exp(10.0) / denom, 1e-15);
  for (int t = 1; t < 4; ++t) EXPECT_NEAR(s.F(0, t), 1.0 / denom, 1e-15);
}

TEST(SelectionMatrix, RowsSumToOneForExtremeLogits) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    SelectionParams p;
    p.theta = Eigen::MatrixXd::NullaryExpr(4, 16, [&] { return uniform(rng, -700.0, 700.0); });
    const auto s = selection_matrix(p);
    ASSERT_TRUE(s.F.allFinite());
    for (int r = 0; r < 4; ++r) ASSERT_NEAR(s.F.row(r).sum(), 1.0, 1e-12);
    for (int r = 1; r < 4; ++r) ASSERT_LE(first_argmax(s.F.row(r - 1)), first_argmax(s.F.row(r)));
  }
}

TEST(SelectionMatrix, NonFinite) {
  SelectionParams p;
  p.theta = Eigen::MatrixXd::Zero(1, 3);
  p.theta(0, 1) = std::nan("");
  EXPECT_THROW(selection_matrix(p), Error);
}

TEST(LegsApply, OneHotReducesToFixedBank) {
  Rng rng(14);
  for (int trial = 0; trial < 50; ++trial) {
    const Graph g = sample::draw({sample::kAllFamilies[trial % 4], 5, 40, 0.2, 0.6, true}, rng);
    const auto scales = make_scales({1, 3, 4, 9, 16}, 16);
    const SignalMatrix x = sample::gaussian_signal(g.n(), 2, rng);
    const auto cascade = diffusion_cascade(g, 0.5, x, 16);
    const auto relaxed = legs_apply(one_hot_selection(scales), cascade);
    const auto fixed = apply_bank(cascade, scales);
    for (int k = 0; k <= scales.count(); ++k)
      ASSERT_LE((relaxed.filter(k) - fixed.filter(k)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(LegsApply, DegreeVectorOnlyLowPass) {
  Rng rng(15);
  const Graph g = sample::draw({sample::Family::ErdosRenyi, 20, 20, 0.2, 0.5, true}, rng);
  const auto sel = selection_matrix(init_theta(3, 8, ThetaInit::Random, 2));
  const SignalMatrix d = g.degree();
  const auto r = legs_apply(sel, diffusion_cascade(g, 0.5, d, 8));
  for (const auto& p : r.psi) EXPECT_LE(p.cwiseAbs().maxCoeff(), 1e-12 * d.maxCoeff());
  EXPECT_LE((r.phi - d).cwiseAbs().maxCoeff(), 1e-12 * d.maxCoeff());
}

TEST(LegsApply, TelescopesAndMatchesDenseFormulas) {
  Rng rng(16);
  for (int trial = 0; trial < 40; ++trial) {
    const Graph g = sample::draw({sample::kAllFamilies[trial % 4], 20, 20, 0.2, 0.5, true}, rng);
    const auto sel = selection_matrix(init_theta(4, 8, ThetaInit::Random, 100 + trial));
    const SignalMatrix x = sample::gaussian_signal(g.n(), 1, rng);
    const auto r = legs_apply(sel, diffusion_cascade(g, 0.5, x, 8));
    ASSERT_LE((r.sum() - x).cwiseAbs().maxCoeff(), 1e-10 * x.cwiseAbs().maxCoeff());
    const auto dense = oracle::relaxed_filters(oracle::lazy_walk(g, 0.5), sel.F);
    for (int k = 0; k <= 4; ++k) ASSERT_LE((r.filter(k) - dense[k] * x).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(LegsApply, DepthMismatch) {
  const Graph g = build_graph(2, {{0, 1, 1.0}});
  const auto sel = selection_matrix(init_theta(2, 4, ThetaInit::Uniform));
  EXPECT_THROW(legs_apply(sel, diffusion_cascade(g, 0.5, SignalMatrix::Ones(2, 1), 3)), Error);
}

TEST(Nonexpansive, OneHotOrdered) {
  Rng rng(17);
  const Graph g = sample::draw({sample::Family::ErdosRenyi, 25, 25, 0.2, 0.4, true}, rng);
  const auto rep = check_nonexpansive(one_hot_selection(make_scales({1, 2, 4, 8}, 16)), 1e-3, g, 200);
  EXPECT_TRUE(rep.support_ok);
  EXPECT_LE(rep.max_energy_ratio, 1.0 + 1e-10);
  EXPECT_GT(rep.max_energy_ratio, 0.0);
}

TEST(Nonexpansive, SharedColumnFailsSupport) {
  SelectionMatrix s;
  s.F = Eigen::MatrixXd::Zero(2, 4);
  s.F << 0.5, 0.5, 0.0, 0.0,
         0.0, 0.5, 0.5, 0.0;
  s.row_order = {0, 1};
  const Graph g = build_graph(3, {{0, 1, 1.0}, {1, 2, 1.0}});
  EXPECT_FALSE(check_nonexpansive(s, 1e-3, g, 10).support_ok);
}

TEST(Nonexpansive, SplitMassRowsOnRandomGraphs) {
  Rng rng(18);
  SelectionMatrix s;
  s.F = Eigen::MatrixXd::Zero(3, 8);
  s.F(0, 0) = s.F(0, 1) = 0.5;
  s.F(1, 2) = s.F(1, 4) = 0.5;
  s.F(2, 5) = s.F(2, 7) = 0.5;
  s.row_order = {0, 1, 2};
  for (int trial = 0; trial < 10; ++trial) {
    const Graph g = sample::draw({sample::kAllFamilies[trial % 4], 30, 30, 0.2, 0.6, true}, rng);
    const auto rep = check_nonexpansive(s, 1e-3, g, 100, 0.5, trial);
    ASSERT_TRUE(rep.support_ok);
    ASSERT_LE(rep.max_energy_ratio, 1.0 + 1e-10);
  }
}

TEST(Nonexpansive, RandomOrderedSupports) {
  Rng rng(19);
  for (int trial = 0; trial < 200; ++trial) {
    const int m = uniform_int(rng, 4, 16);
    const int J = uniform_int(rng, 1, std::min(4, m));
    const auto s = sample::ordered_support_selection(J, m, rng);
    ASSERT_TRUE(has_ordered_disjoint_support(s.F));
    const Graph g = sample::draw({sample::kAllFamilies[trial % 4], 5, 30, 0.2, 0.6, true}, rng);
    const auto rep = check_nonexpansive(s, 1e-9, g, 5, uniform(rng, 0.5, 0.9), trial);
    ASSERT_LE(rep.max_energy_ratio, 1.0 + 1e-10);
  }
}

TEST(Sparsify, DropsTailsAndRenormalises) {
  const auto sel = selection_matrix(init_theta(3, 16, ThetaInit::DyadicWarm));
  const auto sp = sparsify(sel, 0.05);
  for (int r = 0; r < 3; ++r) {
    EXPECT_NEAR(sp.F.row(r).sum(), 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(sp.F.row(r).maxCoeff(), 1.0);
  }
  EXPECT_TRUE(has_ordered_disjoint_support(sp.F));
}
