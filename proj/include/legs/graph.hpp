#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "legs/error.hpp"

namespace legs {

/// n x N block of graph signals, one signal per column.
using SignalMatrix = Eigen::MatrixXd;
using Signal = Eigen::VectorXd;

struct Edge {
  int i = 0;
  int j = 0;
  double w = 1.0;
};

enum class IsolatedPolicy { Reject, SelfLoop };

/// Sparse weighted undirected graph. Adjacency is kept as a symmetric CSR
/// structure, so a row traversal doubles as a column traversal.
class Graph {
 public:
  Graph() = default;

  int n() const { return n_; }
  std::size_t nnz() const { return col_.size(); }

  const std::vector<int>& row_ptr() const { return row_ptr_; }
  const std::vector<int>& col_idx() const { return col_; }
  const std::vector<double>& weights() const { return val_; }
  const Eigen::VectorXd& degree() const { return degree_; }
  const Eigen::VectorXd& inv_degree() const { return inv_degree_; }

  /// Undirected edges with i <= j (self-loops have i == j).
  const std::vector<Edge>& edges() const { return edges_; }

  /// Adjacency weight W[i,j] or 0.
  double weight(int i, int j) const {
    auto first = col_.begin() + row_ptr_[i];
    auto last = col_.begin() + row_ptr_[i + 1];
    auto it = std::lower_bound(first, last, j);
    return (it != last && *it == j) ? val_[static_cast<std::size_t>(it - col_.begin())] : 0.0;
  }

  /// Unweighted neighbours of i, self excluded.
  std::vector<int> neighbors(int i) const {
    std::vector<int> out;
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
      if (col_[k] != i) out.push_back(col_[k]);
    return out;
  }

  friend Graph build_graph(int n, const std::vector<Edge>& edges, IsolatedPolicy policy);

 private:
  int n_ = 0;
  std::vector<int> row_ptr_{0};
  std::vector<int> col_;
  std::vector<double> val_;
  std::vector<Edge> edges_;
  Eigen::VectorXd degree_;
  Eigen::VectorXd inv_degree_;
};

/// Builds a graph from undirected edges. Each unordered pair may appear once,
/// in either orientation.
inline Graph build_graph(int n, const std::vector<Edge>& edges,
                         IsolatedPolicy policy = IsolatedPolicy::Reject) {
  require(n >= 0, ErrorCode::IndexOutOfRange, "negative node count");
  std::vector<Edge> canon;
  canon.reserve(edges.size());
  for (const Edge& e : edges) {
    require(e.i >= 0 && e.i < n && e.j >= 0 && e.j < n, ErrorCode::IndexOutOfRange,
            "edge (" + std::to_string(e.i) + "," + std::to_string(e.j) + ") outside [0," +
                std::to_string(n) + ")");
    require(e.i != e.j, ErrorCode::SelfLoop, "self-loop at node " + std::to_string(e.i));
    require(e.w > 0.0 && std::isfinite(e.w), ErrorCode::NonPositiveWeight,
            "edge (" + std::to_string(e.i) + "," + std::to_string(e.j) + ") has weight " +
                std::to_string(e.w));
    canon.push_back({std::min(e.i, e.j), std::max(e.i, e.j), e.w});
  }
  std::sort(canon.begin(), canon.end(),
            [](const Edge& a, const Edge& b) { return std::pair(a.i, a.j) < std::pair(b.i, b.j); });
  for (std::size_t k = 1; k < canon.size(); ++k) {
    require(!(canon[k].i == canon[k - 1].i && canon[k].j == canon[k - 1].j), ErrorCode::DuplicateEdge,
            "edge (" + std::to_string(canon[k].i) + "," + std::to_string(canon[k].j) + ") repeated");
  }

  std::vector<int> count(static_cast<std::size_t>(n), 0);
  for (const Edge& e : canon) {
    ++count[e.i];
    ++count[e.j];
  }
  for (int v = 0; v < n; ++v) {
    if (count[v] > 0) continue;
    require(policy == IsolatedPolicy::SelfLoop, ErrorCode::IsolatedNode,
            "node " + std::to_string(v) + " has degree 0");
    canon.push_back({v, v, 1.0});
  }
  std::sort(canon.begin(), canon.end(),
            [](const Edge& a, const Edge& b) { return std::pair(a.i, a.j) < std::pair(b.i, b.j); });

  Graph g;
  g.n_ = n;
  g.edges_ = canon;
  std::vector<std::vector<std::pair<int, double>>> rows(static_cast<std::size_t>(n));
  for (const Edge& e : canon) {
    rows[e.i].emplace_back(e.j, e.w);
    if (e.i != e.j) rows[e.j].emplace_back(e.i, e.w);
  }
  g.row_ptr_.assign(static_cast<std::size_t>(n) + 1, 0);
  g.degree_ = Eigen::VectorXd::Zero(n);
  for (int v = 0; v < n; ++v) {
    auto& r = rows[v];
    std::sort(r.begin(), r.end());
    for (auto [c, w] : r) {
      g.col_.push_back(c);
      g.val_.push_back(w);
      g.degree_[v] += w;
    }
    g.row_ptr_[v + 1] = static_cast<int>(g.col_.size());
  }
  g.inv_degree_ = g.degree_.cwiseInverse();
  return g;
}

inline void check_conforms(const Graph& g, Eigen::Index rows, const char* what) {
  require(rows == g.n(), ErrorCode::DimensionMismatch,
          std::string(what) + " has " + std::to_string(rows) + " rows, graph has " +
              std::to_string(g.n()) + " nodes");
}

/// out = P_alpha * x with P_alpha = alpha I + (1 - alpha) W D^{-1}.
inline void lazy_step_into(const Graph& g, double alpha, const SignalMatrix& x, SignalMatrix& out) {
  const int n = g.n();
  const auto& rp = g.row_ptr();
  const auto& ci = g.col_idx();
  const auto& wv = g.weights();
  const auto& dinv = g.inv_degree();
  out.resize(n, x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double* xc = x.col(c).data();
    double* oc = out.col(c).data();
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int k = rp[i]; k < rp[i + 1]; ++k) acc += wv[k] * xc[ci[k]] * dinv[ci[k]];
      oc[i] = alpha * xc[i] + (1.0 - alpha) * acc;
    }
  }
}

inline SignalMatrix lazy_step(const Graph& g, double alpha, const SignalMatrix& x) {
  check_conforms(g, x.rows(), "signal");
  SignalMatrix out;
  lazy_step_into(g, alpha, x, out);
  return out;
}

/// out = P_alpha^T * x = alpha x + (1 - alpha) D^{-1} W x. Used by the backward pass.
inline SignalMatrix lazy_step_transpose(const Graph& g, double alpha, const SignalMatrix& x) {
  check_conforms(g, x.rows(), "adjoint");
  const int n = g.n();
  const auto& rp = g.row_ptr();
  const auto& ci = g.col_idx();
  const auto& wv = g.weights();
  const auto& dinv = g.inv_degree();
  SignalMatrix out(n, x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double* xc = x.col(c).data();
    double* oc = out.col(c).data();
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int k = rp[i]; k < rp[i + 1]; ++k) acc += wv[k] * xc[ci[k]];
      oc[i] = alpha * xc[i] + (1.0 - alpha) * dinv[i] * acc;
    }
  }
  return out;
}

/// [X, P X, P^2 X, ..., P^m X]; index 0 is the input itself.
struct DiffusionCascade {
  double alpha = 0.5;
  std::vector<SignalMatrix> steps;  // size m + 1

  int depth() const { return static_cast<int>(steps.size()) - 1; }
  const SignalMatrix& input() const { return steps.front(); }
  const SignalMatrix& at(int t) const { return steps[static_cast<std::size_t>(t)]; }
};

inline DiffusionCascade diffusion_cascade(const Graph& g, double alpha, const SignalMatrix& x, int m) {
  check_conforms(g, x.rows(), "signal");
  require(m >= 1, ErrorCode::InvalidShape, "cascade depth must be >= 1");
  DiffusionCascade c;
  c.alpha = alpha;
  c.steps.resize(static_cast<std::size_t>(m) + 1);
  c.steps[0] = x;
  for (int t = 1; t <= m; ++t) lazy_step_into(g, alpha, c.steps[t - 1], c.steps[t]);
  return c;
}

/// sum_i x_i^2 / d_i, summed over all columns.
inline double weighted_norm_sq(const Graph& g, const SignalMatrix& x) {
  check_conforms(g, x.rows(), "signal");
  const auto& dinv = g.inv_degree();
  double s = 0.0;
  for (Eigen::Index c = 0; c < x.cols(); ++c)
    for (int i = 0; i < g.n(); ++i) s += x(i, c) * x(i, c) * dinv[i];
  return s;
}

inline constexpr int kDefaultDenseOracleCap = 256;

/// Dense P_alpha. Test and diagnostic paths only.
inline Eigen::MatrixXd dense_diffusion(const Graph& g, double alpha, int cap = kDefaultDenseOracleCap) {
  require(g.n() <= cap, ErrorCode::GraphTooLargeForDenseOracle,
          std::to_string(g.n()) + " nodes exceeds dense cap " + std::to_string(cap));
  const int n = g.n();
  Eigen::MatrixXd p = alpha * Eigen::MatrixXd::Identity(n, n);
  for (int i = 0; i < n; ++i)
    for (int k = g.row_ptr()[i]; k < g.row_ptr()[i + 1]; ++k) {
      const int j = g.col_idx()[k];
      p(i, j) += (1.0 - alpha) * g.weights()[k] * g.inv_degree()[j];
    }
  return p;
}

struct SpectralOracle {
  Eigen::MatrixXd m;          // D^{-1/2} P D^{1/2}, symmetric
  Eigen::VectorXd eigvals;    // descending
  Eigen::MatrixXd eigvecs;    // columns match eigvals
};

inline SpectralOracle spectral_oracle(const Graph& g, double alpha, int cap = kDefaultDenseOracleCap) {
  require(g.n() <= cap, ErrorCode::GraphTooLargeForDenseOracle,
          std::to_string(g.n()) + " nodes exceeds dense cap " + std::to_string(cap));
  const int n = g.n();
  // alpha I + (1 - alpha) D^{-1/2} W D^{-1/2}, formed directly so it is exactly symmetric.
  Eigen::MatrixXd m = alpha * Eigen::MatrixXd::Identity(n, n);
  const Eigen::VectorXd s = g.inv_degree().cwiseSqrt();
  for (int i = 0; i < n; ++i)
    for (int k = g.row_ptr()[i]; k < g.row_ptr()[i + 1]; ++k) {
      const int j = g.col_idx()[k];
      m(i, j) += (1.0 - alpha) * g.weights()[k] * s[i] * s[j];
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  SpectralOracle out;
  out.m = m;
  out.eigvals = es.eigenvalues().reverse();
  out.eigvecs = es.eigenvectors().rowwise().reverse();
  return out;
}

}  // namespace legs
