#include <gtest/gtest.h>

#include "legs/graph.hpp"
#include "legs/samplers.hpp"
#include "oracles.hpp"

using namespace legs;

namespace {

Graph k2() { return build_graph(2, {{0, 1, 1.0}}); }

Graph path3() { return build_graph(3, {{0, 1, 1.0}, {1, 2, 1.0}}); }

}  // namespace

TEST(BuildGraph, SingleNodeGetsSelfLoop) {
  const Graph g = build_graph(1, {}, IsolatedPolicy::SelfLoop);
  ASSERT_EQ(g.n(), 1);
  EXPECT_DOUBLE_EQ(g.degree()[0], 1.0);
  EXPECT_DOUBLE_EQ(g.weight(0, 0), 1.0);
}

TEST(BuildGraph, DegreesAreRowSums) {
  EXPECT_EQ(k2().degree(), Eigen::Vector2d(1, 1));
  const Graph g = build_graph(3, {{0, 1, 2.0}, {1, 2, 3.0}});
  EXPECT_EQ(g.degree(), Eigen::Vector3d(2, 5, 3));
  EXPECT_DOUBLE_EQ(g.weight(1, 0), 2.0);
  EXPECT_DOUBLE_EQ(g.weight(2, 1), 3.0);
  EXPECT_DOUBLE_EQ(g.weight(0, 2), 0.0);
}

TEST(BuildGraph, Errors) {
  auto code = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::ConfigError;
  };
  EXPECT_EQ(code([] { build_graph(2, {{0, 2, 1.0}}); }), ErrorCode::IndexOutOfRange);
  EXPECT_EQ(code([] { build_graph(2, {{0, 1, 0.0}}); }), ErrorCode::NonPositiveWeight);
  EXPECT_EQ(code([] { build_graph(2, {{0, 1, -1.0}}); }), ErrorCode::NonPositiveWeight);
  EXPECT_EQ(code([] { build_graph(2, {{0, 1, 1.0}, {1, 0, 1.0}}); }), ErrorCode::DuplicateEdge);
  EXPECT_EQ(code([] { build_graph(3, {{0, 1, 1.0}}, IsolatedPolicy::Reject); }), ErrorCode::IsolatedNode);
  EXPECT_EQ(code([] { build_graph(2, {{1, 1, 1.0}}); }), ErrorCode::SelfLoop);
}

TEST(LazyStep, SingleNodeIsIdentity) {
  const Graph g = build_graph(1, {}, IsolatedPolicy::SelfLoop);
  SignalMatrix x(1, 1);
  x << 3.7;
  EXPECT_DOUBLE_EQ(lazy_step(g, 0.5, x)(0, 0), 3.7);
}

TEST(LazyStep, K2HalfLazy) {
  SignalMatrix x(2, 1);
  x << 1, 0;
  const SignalMatrix y = lazy_step(k2(), 0.5, x);
  EXPECT_DOUBLE_EQ(y(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(y(1, 0), 0.5);
}

TEST(LazyStep, PathMatchesDenseOracle) {
  SignalMatrix x(3, 1);
  x << 1, 0, 0;
  const SignalMatrix y = lazy_step(path3(), 0.5, x);
  const Eigen::VectorXd ref = oracle::lazy_walk(path3(), 0.5) * x;
  EXPECT_LE((y.col(0) - ref).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(LazyStep, DimensionMismatch) {
  EXPECT_THROW(lazy_step(k2(), 0.5, SignalMatrix::Zero(3, 1)), Error);
}

TEST(LazyStep, TransposeIsAdjoint) {
  Rng rng(3);
  const Graph g = sample::draw({sample::Family::ErdosRenyi, 12, 12, 0.3, 0.5, true}, rng);
  const SignalMatrix x = sample::gaussian_signal(g.n(), 2, rng);
  const SignalMatrix y = sample::gaussian_signal(g.n(), 2, rng);
  const double lhs = (y.array() * lazy_step(g, 0.3, x).array()).sum();
  const double rhs = (lazy_step_transpose(g, 0.3, y).array() * x.array()).sum();
  EXPECT_NEAR(lhs, rhs, 1e-12 * std::abs(lhs) + 1e-12);
}

TEST(Cascade, DegreeIsFixedPoint) {
  Rng rng(11);
  const Graph g = sample::draw({sample::Family::ErdosRenyi, 15, 15, 0.2, 0.6, true}, rng);
  const SignalMatrix d = g.degree();
  const auto c = diffusion_cascade(g, 0.5, d, 6);
  ASSERT_EQ(c.depth(), 6);
  for (int t = 1; t <= 6; ++t) EXPECT_LE((c.at(t) - d).cwiseAbs().maxCoeff(), 1e-12 * d.maxCoeff());
}

TEST(Cascade, SingleNodeConstant) {
  const Graph g = build_graph(1, {}, IsolatedPolicy::SelfLoop);
  SignalMatrix x(1, 1);
  x << -2.0;
  const auto c = diffusion_cascade(g, 0.5, x, 4);
  for (int t = 0; t <= 4; ++t) EXPECT_DOUBLE_EQ(c.at(t)(0, 0), -2.0);
}

TEST(Cascade, MatchesDensePowersOnRandomGraph) {
  Rng rng(20);
  const Graph g = sample::draw({sample::Family::ErdosRenyi, 20, 20, 0.2, 0.4, false}, rng);
  const SignalMatrix x = sample::gaussian_signal(20, 1, rng);
  const auto c = diffusion_cascade(g, 0.5, x, 8);
  const Eigen::MatrixXd ref = oracle::power(oracle::lazy_walk(g, 0.5), 8) * x;
  EXPECT_LE((c.at(8) - ref).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Cascade, RejectsZeroDepth) { EXPECT_THROW(diffusion_cascade(k2(), 0.5, SignalMatrix::Zero(2, 1), 0), Error); }

TEST(WeightedNorm, Examples) {
  EXPECT_DOUBLE_EQ(weighted_norm_sq(k2(), SignalMatrix::Zero(2, 1)), 0.0);
  SignalMatrix x(2, 1);
  x << 1, 0;
  EXPECT_DOUBLE_EQ(weighted_norm_sq(k2(), x), 1.0);
  const Graph g = build_graph(3, {{0, 1, 2.0}, {1, 2, 3.0}});
  EXPECT_DOUBLE_EQ(weighted_norm_sq(g, g.degree()), 10.0);
  EXPECT_THROW(weighted_norm_sq(g, SignalMatrix::Zero(2, 1)), Error);
}

TEST(SpectralOracle, Examples) {
  const auto single = spectral_oracle(build_graph(1, {}, IsolatedPolicy::SelfLoop), 0.5);
  EXPECT_NEAR(single.m(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(single.eigvals[0], 1.0, 1e-15);

  const auto two = spectral_oracle(k2(), 0.5);
  EXPECT_NEAR(two.eigvals[0], 1.0, 1e-14);
  EXPECT_NEAR(two.eigvals[1], 0.0, 1e-14);
}

TEST(SpectralOracle, ReconstructsAndIsSymmetric) {
  Rng rng(5);
  const Graph g = sample::draw({sample::Family::ErdosRenyi, 10, 10, 0.3, 0.6, true}, rng);
  const auto s = spectral_oracle(g, 0.5);
  EXPECT_LE((s.m - s.m.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  const Eigen::MatrixXd rec = s.eigvecs * s.eigvals.asDiagonal() * s.eigvecs.transpose();
  EXPECT_LE((rec - s.m).cwiseAbs().maxCoeff(), 1e-10);
  for (Eigen::Index i = 1; i < s.eigvals.size(); ++i) EXPECT_GE(s.eigvals[i - 1], s.eigvals[i]);
}

TEST(SpectralOracle, CapEnforced) {
  const Graph g = build_graph(5, sample::path_edges(5));
  try {
    spectral_oracle(g, 0.5, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GraphTooLargeForDenseOracle);
  }
}

// Property sweeps: mass conservation, spectrum location, oracle equivalence.
TEST(GraphProperties, MassConservation) {
  Rng rng(101);
  for (int trial = 0; trial < 1000; ++trial) {
    const Graph g = sample::draw({sample::kAllFamilies[trial % 4], 5, 30, 0.2, 0.6, trial % 2 == 0}, rng);
    const double alpha = uniform(rng, 0.01, 0.99);
    const SignalMatrix x = sample::gaussian_signal(g.n(), 1, rng);
    const SignalMatrix y = lazy_step(g, alpha, x);
    ASSERT_LE(std::abs(y.sum() - x.sum()), 1e-10 * x.cwiseAbs().sum()) << "trial " << trial;
  }
}

TEST(GraphProperties, SpectrumInLazyRange) {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const Graph g = sample::draw({sample::kAllFamilies[trial % 4], 5, 40, 0.2, 0.6, true}, rng);
    const double alpha = uniform(rng, 0.5, 0.99);
    const auto s = spectral_oracle(g, alpha);
    ASSERT_LE(s.eigvals.maxCoeff(), 1.0 + 1e-10);
    ASSERT_GE(s.eigvals.minCoeff(), 2.0 * alpha - 1.0 - 1e-10);
  }
}

TEST(GraphProperties, CascadeMatchesDensePowers) {
  Rng rng(8);
  for (int trial = 0; trial < 60; ++trial) {
    const Graph g = sample::draw({sample::kAllFamilies[trial % 4], 5, 50, 0.2, 0.6, trial % 3 == 0}, rng);
    const SignalMatrix x = sample::gaussian_signal(g.n(), 1, rng);
    const auto c = diffusion_cascade(g, 0.5, x, 16);
    const Eigen::MatrixXd p = oracle::lazy_walk(g, 0.5);
    Eigen::MatrixXd pt = Eigen::MatrixXd::Identity(g.n(), g.n());
    for (int t = 1; t <= 16; ++t) {
      pt = pt * p;
      ASSERT_LE((c.at(t) - pt * x).cwiseAbs().maxCoeff(), 1e-10 * x.cwiseAbs().maxCoeff());
    }
  }
}
