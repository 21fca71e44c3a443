#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "legs/scattering.hpp"

namespace legs {

/// J_{ts} = s_t (delta_{ts} - s_s) for s = softmax(theta_row).
inline Eigen::MatrixXd softmax_row_jacobian(const Eigen::RowVectorXd& theta_row) {
  require(theta_row.allFinite(), ErrorCode::NonFiniteParameter, "theta row has non-finite entries");
  const Eigen::RowVectorXd s = softmax(theta_row);
  Eigen::MatrixXd jac = -s.transpose() * s;
  jac.diagonal() += s.transpose();
  return jac;
}

inline double sign_or_zero(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

/// dL/dF in sorted-row space from per-filter adjoints G_0..G_J of one cascade:
/// dF(r, t) = <G_{r+1} - G_r, P^t X>.
inline Eigen::MatrixXd grad_wrt_F(const std::vector<SignalMatrix>& upstream, const DiffusionCascade& cascade) {
  require(upstream.size() >= 2, ErrorCode::ShapeMismatch, "need adjoints for at least one wavelet and phi");
  const int J = static_cast<int>(upstream.size()) - 1;
  const int m = cascade.depth();
  for (const auto& g : upstream)
    require(g.rows() == cascade.input().rows() && g.cols() == cascade.input().cols(), ErrorCode::ShapeMismatch,
            "adjoint shape does not match the cascade");
  Eigen::MatrixXd dF(J, m);
  for (int t = 1; t <= m; ++t) {
    const SignalMatrix& s = cascade.at(t);
    double prev = (upstream[0].array() * s.array()).sum();
    for (int r = 0; r < J; ++r) {
      const double next = (upstream[r + 1].array() * s.array()).sum();
      dF(r, t - 1) = next - prev;
      prev = next;
    }
  }
  return dF;
}

/// Moves sorted-row gradients back onto the theta rows they came from.
inline Eigen::MatrixXd route_to_theta_rows(const Eigen::MatrixXd& dF_sorted, const std::vector<int>& row_order) {
  Eigen::MatrixXd out(dF_sorted.rows(), dF_sorted.cols());
  for (std::size_t i = 0; i < row_order.size(); ++i) out.row(row_order[i]) = dF_sorted.row(static_cast<Eigen::Index>(i));
  return out;
}

inline Eigen::MatrixXd grad_wrt_F(const std::vector<SignalMatrix>& upstream, const DiffusionCascade& cascade,
                                  const std::vector<int>& row_order) {
  return route_to_theta_rows(grad_wrt_F(upstream, cascade), row_order);
}

/// Per-expansion filter adjoints after a full reverse sweep.
struct ScatteringAdjoints {
  std::vector<std::vector<SignalMatrix>> filters;  // [expansion][k], k = 0..J
};

/// sum_k Psi_k^T G_k for filters written as sum_t C(k,t) P^t (Horner in P^T).
inline SignalMatrix bank_adjoint(const Graph& g, double alpha, const Eigen::MatrixXd& coeffs,
                                 const std::vector<SignalMatrix>& upstream) {
  const Eigen::Index m = coeffs.cols() - 1;
  auto h = [&](Eigen::Index t) {
    SignalMatrix acc = SignalMatrix::Zero(upstream[0].rows(), upstream[0].cols());
    for (std::size_t k = 0; k < upstream.size(); ++k) {
      const double c = coeffs(static_cast<Eigen::Index>(k), t);
      if (c != 0.0) acc += c * upstream[k];
    }
    return acc;
  };
  SignalMatrix acc = h(m);
  for (Eigen::Index t = m - 1; t >= 0; --t) acc = h(t) + lazy_step_transpose(g, alpha, acc);
  return acc;
}

/// Reverse sweep from feature adjoints to the adjoints of every bank application.
inline ScatteringAdjoints backward_adjoints(const ScatteringCache& cache, const Eigen::VectorXd& d_features) {
  require(cache.graph != nullptr && !cache.expansions.empty() && cache.coefficients.size() > 0,
          ErrorCode::MissingCache, "forward pass did not retain its cache");
  const Graph& g = *cache.graph;
  const int J = static_cast<int>(cache.coefficients.rows()) - 1;
  const auto& nodes = cache.nodes;
  const auto& exps = cache.expansions;
  const Eigen::Index n = nodes[0].u.rows();
  const Eigen::Index N = nodes[0].u.cols();
  const int q_max = cache.q_max;
  const Eigen::Index expected = static_cast<Eigen::Index>(nodes.size() + 1) * N * q_max;
  require(d_features.size() == expected, ErrorCode::ShapeMismatch,
          "feature adjoint has " + std::to_string(d_features.size()) + " entries, expected " +
              std::to_string(expected));
  const double scale = (cache.normalize && n > 0) ? 1.0 / static_cast<double>(n) : 1.0;

  // d/du sum_i |u_i|^q = q |u|^{q-1} sign(u), sign(0) = 0.
  auto moment_adjoint = [&](const SignalMatrix& u, Eigen::Index offset) {
    SignalMatrix du = SignalMatrix::Zero(n, N);
    for (Eigen::Index c = 0; c < N; ++c)
      for (Eigen::Index i = 0; i < n; ++i) {
        const double v = u(i, c);
        const double a = std::abs(v);
        const double sg = sign_or_zero(v);
        double pw = 1.0;
        double acc = 0.0;
        for (int q = 1; q <= q_max; ++q) {
          acc += d_features[offset + c * q_max + (q - 1)] * q * pw;
          pw *= a;
        }
        du(i, c) = acc * sg * scale;
      }
    return du;
  };

  std::vector<SignalMatrix> du(nodes.size());
  const Eigen::Index block = N * q_max;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    du[i] = moment_adjoint(nodes[i].u, static_cast<Eigen::Index>(i) * block);

  ScatteringAdjoints adj;
  adj.filters.assign(exps.size(),
                     std::vector<SignalMatrix>(static_cast<std::size_t>(J + 1), SignalMatrix::Zero(n, N)));
  adj.filters[0][J] += moment_adjoint(exps[0].responses.phi, static_cast<Eigen::Index>(nodes.size()) * block);

  std::vector<std::size_t> order;
  for (std::size_t i = 1; i < nodes.size(); ++i) order.push_back(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return nodes[a].path.size() > nodes[b].path.size(); });
  for (std::size_t i : order) {
    const auto& node = nodes[i];
    if (node.expansion >= 0) {
      const SignalMatrix da = bank_adjoint(g, cache.alpha, cache.coefficients, adj.filters[node.expansion]);
      du[i].array() += node.u.array().unaryExpr([](double v) { return sign_or_zero(v); }) * da.array();
    }
    const int pe = nodes[node.parent].expansion;
    adj.filters[pe][node.filter] += du[i];
  }
  return adj;
}

/// dL/dF (sorted rows) accumulated over all bank applications.
inline Eigen::MatrixXd backward_selection(const ScatteringCache& cache, const ScatteringAdjoints& adj) {
  Eigen::MatrixXd dF;
  for (std::size_t e = 0; e < cache.expansions.size(); ++e) {
    const Eigen::MatrixXd part = grad_wrt_F(adj.filters[e], cache.expansions[e].cascade);
    if (dF.size() == 0)
      dF = part;
    else
      dF += part;
  }
  return dF;
}

/// Full chain from feature adjoints to dL/dTheta: moments, moduli, relaxed filters,
/// row reordering and the softmax Jacobian of each row.
inline Eigen::MatrixXd backward_theta(const ScatteringCache* cache, const Eigen::VectorXd& d_features,
                                      const SelectionParams& params) {
  require(cache != nullptr, ErrorCode::MissingCache, "forward pass did not retain its cache");
  const Eigen::MatrixXd dF_sorted = backward_selection(*cache, backward_adjoints(*cache, d_features));
  require(dF_sorted.rows() == params.rows() && dF_sorted.cols() == params.cols(), ErrorCode::ShapeMismatch,
          "theta shape does not match the cached bank");
  const Eigen::MatrixXd dF = route_to_theta_rows(dF_sorted, cache->row_order);
  Eigen::MatrixXd d_theta(params.rows(), params.cols());
  for (int r = 0; r < params.rows(); ++r)
    d_theta.row(r) = (softmax_row_jacobian(params.theta.row(r)) * dF.row(r).transpose()).transpose();
  return d_theta;
}

/// sum_{k=1}^t P^{k-1} (J^{ab} D^{-1}) P^{t-k}.
inline Eigen::MatrixXd frozen_degree_power_derivative(const Eigen::MatrixXd& p, const Eigen::VectorXd& inv_degree, int t,
                                              int a, int b) {
  const Eigen::Index n = p.rows();
  Eigen::MatrixXd jd = Eigen::MatrixXd::Zero(n, n);
  jd(a, b) = inv_degree[b];
  std::vector<Eigen::MatrixXd> pw{Eigen::MatrixXd::Identity(n, n)};
  for (int k = 1; k < t; ++k) pw.push_back(pw.back() * p);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k <= t; ++k) out += pw[k - 1] * jd * pw[t - k];
  return out;
}

struct AdjacencyGradientEntry {
  int a = 0;
  int b = 0;
  double value = 0.0;
};

/// Diagnostic dL/dW_ab for every stored entry (a, b), using the closed form
/// dP^t/dW_ab = sum_k P^{k-1} J^{ab} D^{-1} P^{t-k}: degrees frozen, the entry (a, b)
/// perturbed alone, and no (1 - alpha) factor. This is the derivative with respect
/// to entry (a, b) of P D, not the exact derivative of P_alpha(W).
inline std::vector<AdjacencyGradientEntry> grad_adjacency_frozen_degree(const ScatteringCache* cache,
                                                                const Eigen::VectorXd& d_features,
                                                                int cap = kDefaultDenseOracleCap) {
  require(cache != nullptr, ErrorCode::MissingCache, "forward pass did not retain its cache");
  const Graph& g = *cache->graph;
  require(g.n() <= cap, ErrorCode::GraphTooLargeForDenseOracle,
          std::to_string(g.n()) + " nodes exceeds dense cap " + std::to_string(cap));
  const ScatteringAdjoints adj = backward_adjoints(*cache, d_features);
  const Eigen::MatrixXd pt = dense_diffusion(g, cache->alpha, cap).transpose();
  const Eigen::MatrixXd& c = cache->coefficients;
  const Eigen::Index m = c.cols() - 1;
  const Eigen::Index n = g.n();

  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t e = 0; e < cache->expansions.size(); ++e) {
    const auto& ex = cache->expansions[e];
    const auto& up = adj.filters[e];
    // sum_t sum_{s=1}^t C(k,t) [(P^T)^{s-1} G_k] [D^{-1} P^{t-s} A]^T, grouped by r = t - s.
    for (Eigen::Index r = 0; r < m; ++r) {
      SignalMatrix v = SignalMatrix::Zero(n, up[0].cols());
      for (Eigen::Index i = m - 1 - r; i >= 0; --i) {
        SignalMatrix h = SignalMatrix::Zero(n, up[0].cols());
        for (std::size_t k = 0; k < up.size(); ++k) h += c(static_cast<Eigen::Index>(k), i + r + 1) * up[k];
        v = h + pt * v;
      }
      const SignalMatrix right = g.inv_degree().asDiagonal() * ex.cascade.at(static_cast<int>(r));
      total += v * right.transpose();
    }
  }
  std::vector<AdjacencyGradientEntry> out;
  for (int a = 0; a < g.n(); ++a)
    for (int k = g.row_ptr()[a]; k < g.row_ptr()[a + 1]; ++k) {
      const int b = g.col_idx()[k];
      out.push_back({a, b, total(a, b)});
    }
  return out;
}

/// Central differences of a scalar function.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& p0,
                                   double step) {
  Eigen::VectorXd g(p0.size());
  Eigen::VectorXd p = p0;
  for (Eigen::Index i = 0; i < p0.size(); ++i) {
    p[i] = p0[i] + step;
    const double fp = f(p);
    p[i] = p0[i] - step;
    const double fm = f(p);
    p[i] = p0[i];
    g[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

/// Largest |a - fd| / max(|a|, |fd|, 1e-12) over coordinates.
inline double max_relative_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& fd) {
  require(analytic.size() == fd.size(), ErrorCode::ShapeMismatch, "gradient sizes differ");
  double worst = 0.0;
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    const double denom = std::max({std::abs(analytic[i]), std::abs(fd[i]), 1e-12});
    worst = std::max(worst, std::abs(analytic[i] - fd[i]) / denom);
  }
  return worst;
}

inline double fd_check(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& p0,
                       const Eigen::VectorXd& analytic, double step) {
  return max_relative_error(analytic, fd_gradient(f, p0, step));
}

}  // namespace legs
