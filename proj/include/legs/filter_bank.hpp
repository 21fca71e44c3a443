#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "legs/graph.hpp"

namespace legs {

/// Strictly increasing diffusion times 0 < t_1 < ... < t_J <= m.
struct ScaleSequence {
  std::vector<int> scales;
  int m = 0;

  int count() const { return static_cast<int>(scales.size()); }
  int first() const { return scales.front(); }
  int last() const { return scales.back(); }
};

inline ScaleSequence make_scales(std::vector<int> scales, int m) {
  require(!scales.empty(), ErrorCode::InvalidScales, "scale sequence is empty");
  require(scales.front() > 0, ErrorCode::InvalidScales, "scales must be positive");
  for (std::size_t k = 1; k < scales.size(); ++k)
    require(scales[k] > scales[k - 1], ErrorCode::InvalidScales, "scales must be strictly increasing");
  require(scales.back() <= m, ErrorCode::ScaleExceedsCascade,
          "largest scale " + std::to_string(scales.back()) + " exceeds cascade depth " + std::to_string(m));
  return ScaleSequence{std::move(scales), m};
}

/// [2^0, 2^1, ..., 2^J]; the generalized bank over these scales is the dyadic bank.
inline ScaleSequence dyadic_scales(int J, int m) {
  require(J >= 0 && J < 31, ErrorCode::InvalidScales, "dyadic order out of range");
  require((1 << J) <= m, ErrorCode::ScaleExceedsCascade,
          "2^" + std::to_string(J) + " exceeds cascade depth " + std::to_string(m));
  std::vector<int> s;
  for (int j = 0; j <= J; ++j) s.push_back(1 << j);
  return ScaleSequence{std::move(s), m};
}

/// Band-pass responses psi[0..J-1] and the low-pass response phi.
struct FilterResponses {
  std::vector<SignalMatrix> psi;
  SignalMatrix phi;

  int wavelet_count() const { return static_cast<int>(psi.size()); }

  /// Response of filter k, where k == wavelet_count() selects phi.
  const SignalMatrix& filter(int k) const {
    return k == wavelet_count() ? phi : psi[static_cast<std::size_t>(k)];
  }

  SignalMatrix sum() const {
    SignalMatrix s = phi;
    for (const auto& p : psi) s += p;
    return s;
  }
};

/// Generalized bank: I - P^{t_1}, P^{t_j} - P^{t_{j+1}}, and P^{t_J}, read off a cascade.
inline FilterResponses apply_bank(const DiffusionCascade& cascade, const ScaleSequence& scales) {
  require(scales.count() >= 1, ErrorCode::InvalidScales, "scale sequence is empty");
  require(scales.last() <= cascade.depth(), ErrorCode::ScaleExceedsCascade,
          "scale " + std::to_string(scales.last()) + " exceeds cascade depth " +
              std::to_string(cascade.depth()));
  FilterResponses r;
  const int J = scales.count();
  r.psi.reserve(static_cast<std::size_t>(J));
  r.psi.push_back(cascade.input() - cascade.at(scales.scales[0]));
  for (int j = 1; j < J; ++j)
    r.psi.push_back(cascade.at(scales.scales[j - 1]) - cascade.at(scales.scales[j]));
  r.phi = cascade.at(scales.last());
  return r;
}

inline FilterResponses apply_bank(const Graph& g, double alpha, const ScaleSequence& scales,
                                  const SignalMatrix& x) {
  return apply_bank(diffusion_cascade(g, alpha, x, scales.last()), scales);
}

namespace detail {
inline double frame_objective(double xi, int t1, int tJ) {
  const double a = std::pow(xi, 2 * tJ);
  const double b = 1.0 - std::pow(xi, t1);
  return a + b * b;
}
}  // namespace detail

/// min over xi in [0,1] of xi^{2 tJ} + (1 - xi^{t1})^2: the lower frame bound.
/// Grid localisation followed by ternary refinement of the bracketing cell.
inline double frame_lower_constant(int t1, int tJ) {
  require(t1 >= 1 && t1 <= tJ, ErrorCode::InvalidScales,
          "need 1 <= t1 <= tJ, got t1=" + std::to_string(t1) + " tJ=" + std::to_string(tJ));
  constexpr int kGrid = 10000;
  int best = 0;
  double best_val = detail::frame_objective(0.0, t1, tJ);
  for (int k = 1; k <= kGrid; ++k) {
    const double v = detail::frame_objective(static_cast<double>(k) / kGrid, t1, tJ);
    if (v < best_val) {
      best_val = v;
      best = k;
    }
  }
  double lo = static_cast<double>(std::max(best - 1, 0)) / kGrid;
  double hi = static_cast<double>(std::min(best + 1, kGrid)) / kGrid;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double a = lo + (hi - lo) / 3.0;
    const double b = hi - (hi - lo) / 3.0;
    if (detail::frame_objective(a, t1, tJ) < detail::frame_objective(b, t1, tJ))
      hi = b;
    else
      lo = a;
  }
  return std::min(best_val, detail::frame_objective(0.5 * (lo + hi), t1, tJ));
}

struct FrameEnergy {
  double energy = 0.0;
  double input_norm_sq = 0.0;
};

/// Weighted energy of all filter outputs, paired with the weighted energy of x.
inline FrameEnergy frame_energy(const Graph& g, const FilterResponses& responses, const SignalMatrix& x) {
  FrameEnergy e;
  for (const auto& p : responses.psi) e.energy += weighted_norm_sq(g, p);
  e.energy += weighted_norm_sq(g, responses.phi);
  e.input_norm_sq = weighted_norm_sq(g, x);
  return e;
}

}  // namespace legs
