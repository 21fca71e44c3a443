#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "legs/filter_bank.hpp"
#include "legs/rng.hpp"

namespace legs {

/// Trainable J x m scale-selection logits; row j softly picks the diffusion time of wavelet j.
struct SelectionParams {
  Eigen::MatrixXd theta;

  int rows() const { return static_cast<int>(theta.rows()); }
  int cols() const { return static_cast<int>(theta.cols()); }
};

enum class ThetaInit { DyadicWarm, Uniform, Random };

inline constexpr double kDyadicWarmLogit = 4.0;

inline SelectionParams init_theta(int J, int m, ThetaInit scheme, std::uint64_t seed = 0) {
  require(J >= 1 && m >= 1 && J <= m, ErrorCode::InvalidShape,
          "need 1 <= J <= m, got J=" + std::to_string(J) + " m=" + std::to_string(m));
  SelectionParams p;
  p.theta = Eigen::MatrixXd::Zero(J, m);
  switch (scheme) {
    case ThetaInit::DyadicWarm:
      require(J <= 31 && (1LL << (J - 1)) <= m, ErrorCode::InvalidShape,
              "dyadic warm start needs 2^(J-1) <= m");
      for (int j = 0; j < J; ++j) p.theta(j, (1 << j) - 1) = kDyadicWarmLogit;
      break;
    case ThetaInit::Uniform:
      break;
    case ThetaInit::Random: {
      Rng rng(seed);
      for (int j = 0; j < J; ++j)
        for (int t = 0; t < m; ++t) p.theta(j, t) = standard_normal(rng);
      break;
    }
  }
  return p;
}

/// Row-stochastic selection matrix with rows sorted by the column of their peak.
/// Column t-1 holds the weight of diffusion time t.
struct SelectionMatrix {
  Eigen::MatrixXd F;
  std::vector<int> row_order;  // row_order[i] = theta row placed at sorted row i

  int rows() const { return static_cast<int>(F.rows()); }
  int depth() const { return static_cast<int>(F.cols()); }
};

inline Eigen::RowVectorXd softmax(const Eigen::RowVectorXd& z) {
  const double mx = z.maxCoeff();
  Eigen::RowVectorXd e = (z.array() - mx).exp().matrix();
  return e / e.sum();
}

inline int first_argmax(const Eigen::RowVectorXd& r) {
  int best = 0;
  for (int t = 1; t < r.size(); ++t)
    if (r[t] > r[best]) best = t;
  return best;
}

inline SelectionMatrix selection_matrix(const SelectionParams& params) {
  require(params.theta.allFinite(), ErrorCode::NonFiniteParameter, "theta has non-finite entries");
  const int J = params.rows();
  Eigen::MatrixXd raw(J, params.cols());
  std::vector<int> peak(static_cast<std::size_t>(J));
  for (int j = 0; j < J; ++j) {
    raw.row(j) = softmax(params.theta.row(j));
    peak[j] = first_argmax(raw.row(j));
  }
  SelectionMatrix s;
  s.row_order.resize(static_cast<std::size_t>(J));
  std::iota(s.row_order.begin(), s.row_order.end(), 0);
  std::stable_sort(s.row_order.begin(), s.row_order.end(),
                   [&](int a, int b) { return peak[a] < peak[b]; });
  s.F.resize(J, params.cols());
  for (int i = 0; i < J; ++i) s.F.row(i) = raw.row(s.row_order[i]);
  return s;
}

/// Exact one-hot selection matrix realising a fixed scale sequence.
inline SelectionMatrix one_hot_selection(const ScaleSequence& scales) {
  SelectionMatrix s;
  s.F = Eigen::MatrixXd::Zero(scales.count(), scales.m);
  s.row_order.resize(static_cast<std::size_t>(scales.count()));
  for (int j = 0; j < scales.count(); ++j) {
    s.F(j, scales.scales[j] - 1) = 1.0;
    s.row_order[j] = j;
  }
  return s;
}

/// Filter k as sum_t C(k, t) P^t, t = 0..m, for k = 0..J (row J is the low-pass).
inline Eigen::MatrixXd bank_coefficients(const Eigen::MatrixXd& F) {
  const Eigen::Index J = F.rows();
  const Eigen::Index m = F.cols();
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(J + 1, m + 1);
  c(0, 0) = 1.0;
  for (Eigen::Index t = 1; t <= m; ++t) {
    c(0, t) = -F(0, t - 1);
    for (Eigen::Index k = 1; k < J; ++k) c(k, t) = F(k - 1, t - 1) - F(k, t - 1);
    c(J, t) = F(J - 1, t - 1);
  }
  return c;
}

using LegsResponses = FilterResponses;

/// Relaxed bank: psi_0 = X - A_0, psi_j = A_{j-1} - A_j, phi = A_{J-1},
/// where A_r = sum_t F(r, t) P^t X.
inline LegsResponses legs_apply(const SelectionMatrix& sel, const DiffusionCascade& cascade) {
  require(sel.depth() == cascade.depth(), ErrorCode::DimensionMismatch,
          "selection matrix has " + std::to_string(sel.depth()) + " columns, cascade depth is " +
              std::to_string(cascade.depth()));
  const int J = sel.rows();
  const int m = sel.depth();
  std::vector<SignalMatrix> avg(static_cast<std::size_t>(J));
  for (int r = 0; r < J; ++r) {
    avg[r] = SignalMatrix::Zero(cascade.input().rows(), cascade.input().cols());
    for (int t = 1; t <= m; ++t) {
      const double w = sel.F(r, t - 1);
      if (w != 0.0) avg[r] += w * cascade.at(t);
    }
  }
  LegsResponses out;
  out.psi.reserve(static_cast<std::size_t>(J));
  out.psi.push_back(cascade.input() - avg[0]);
  for (int j = 1; j < J; ++j) out.psi.push_back(avg[j - 1] - avg[j]);
  out.phi = avg[J - 1];
  return out;
}

/// Zeroes entries below threshold and renormalises each row.
inline SelectionMatrix sparsify(const SelectionMatrix& sel, double threshold) {
  SelectionMatrix s = sel;
  for (int r = 0; r < s.rows(); ++r) {
    for (int t = 0; t < s.depth(); ++t)
      if (s.F(r, t) < threshold) s.F(r, t) = 0.0;
    const double total = s.F.row(r).sum();
    if (total > 0.0) s.F.row(r) /= total;
  }
  return s;
}

/// True when every support element of row j precedes every support element of row j+1.
inline bool has_ordered_disjoint_support(const Eigen::MatrixXd& F) {
  int prev_max = -1;
  for (Eigen::Index r = 0; r < F.rows(); ++r) {
    int lo = -1, hi = -1;
    for (Eigen::Index t = 0; t < F.cols(); ++t)
      if (F(r, t) != 0.0) {
        if (lo < 0) lo = static_cast<int>(t);
        hi = static_cast<int>(t);
      }
    if (lo < 0 || lo <= prev_max) return false;
    prev_max = hi;
  }
  return true;
}

struct NonexpansiveReport {
  bool support_ok = false;
  double max_energy_ratio = 0.0;
};

/// Checks the nonexpansiveness hypothesis on a thresholded copy of F and measures
/// the worst weighted energy ratio over random signals.
inline NonexpansiveReport check_nonexpansive(const SelectionMatrix& sel, double threshold, const Graph& g,
                                             int trials, double alpha = 0.5, std::uint64_t seed = 0) {
  const SelectionMatrix s = sparsify(sel, threshold);
  NonexpansiveReport rep;
  rep.support_ok = has_ordered_disjoint_support(s.F);
  Rng rng(seed);
  for (int k = 0; k < trials; ++k) {
    SignalMatrix x(g.n(), 1);
    for (int i = 0; i < g.n(); ++i) x(i, 0) = standard_normal(rng);
    const double nx = weighted_norm_sq(g, x);
    if (nx == 0.0) continue;
    x /= std::sqrt(nx);
    const auto resp = legs_apply(s, diffusion_cascade(g, alpha, x, s.depth()));
    const auto e = frame_energy(g, resp, x);
    rep.max_energy_ratio = std::max(rep.max_energy_ratio, e.energy / e.input_norm_sq);
  }
  return rep;
}

}  // namespace legs
