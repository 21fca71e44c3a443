#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "legs/graph.hpp"
#include "legs/rng.hpp"
#include "legs/selection.hpp"

namespace legs::sample {

enum class Family { ErdosRenyi, Cycle, Tree, Barbell, Path };

inline constexpr Family kAllFamilies[] = {Family::ErdosRenyi, Family::Cycle, Family::Tree, Family::Barbell};

inline std::string to_string(Family f) {
  switch (f) {
    case Family::ErdosRenyi: return "erdos_renyi";
    case Family::Cycle: return "cycle";
    case Family::Tree: return "tree";
    case Family::Barbell: return "barbell";
    case Family::Path: return "path";
  }
  return "?";
}

inline std::vector<Edge> cycle_edges(int n) {
  std::vector<Edge> e;
  for (int i = 0; i < n; ++i) e.push_back({i, (i + 1) % n, 1.0});
  if (n == 2) e.pop_back();
  return e;
}

inline std::vector<Edge> path_edges(int n) {
  std::vector<Edge> e;
  for (int i = 0; i + 1 < n; ++i) e.push_back({i, i + 1, 1.0});
  return e;
}

/// Uniform random recursive tree, relabelled by a random permutation.
inline std::vector<Edge> tree_edges(int n, Rng& rng) {
  std::vector<int> label(static_cast<std::size_t>(n));
  std::iota(label.begin(), label.end(), 0);
  shuffle(label, rng);
  std::vector<Edge> e;
  for (int i = 1; i < n; ++i) e.push_back({label[i], label[uniform_index(rng, static_cast<std::size_t>(i))], 1.0});
  return e;
}

/// G(n, p) with components chained together so the result is connected.
inline std::vector<Edge> connected_er_edges(int n, double p, Rng& rng) {
  std::vector<Edge> e;
  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (uniform01(rng) < p) {
        e.push_back({i, j, 1.0});
        parent[find(i)] = find(j);
      }
  int prev_root = -1;
  for (int v = 0; v < n; ++v) {
    if (find(v) != v) continue;
    if (prev_root >= 0) {
      e.push_back({prev_root, v, 1.0});
      parent[find(prev_root)] = v;
    }
    prev_root = v;
  }
  return e;
}

/// Two cliques of size k joined through a path with `bridge` edges.
inline std::vector<Edge> barbell_edges(int k, int bridge) {
  std::vector<Edge> e;
  for (int side = 0; side < 2; ++side) {
    const int off = side * (k + bridge - 1);
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j) e.push_back({off + i, off + j, 1.0});
  }
  int prev = k - 1;
  for (int s = 1; s < bridge; ++s) {
    e.push_back({prev, k - 1 + s, 1.0});
    prev = k - 1 + s;
  }
  e.push_back({prev, k + bridge - 1, 1.0});
  return e;
}

inline int barbell_size(int k, int bridge) { return 2 * k + bridge - 1; }

struct GraphSpec {
  Family family = Family::ErdosRenyi;
  int min_n = 5;
  int max_n = 50;
  double er_p_lo = 0.2;
  double er_p_hi = 0.6;
  bool random_weights = false;
};

/// Draws a connected graph of the requested family; sizes are uniform in [min_n, max_n].
inline Graph draw(const GraphSpec& spec, Rng& rng) {
  int n = uniform_int(rng, spec.min_n, spec.max_n);
  std::vector<Edge> e;
  switch (spec.family) {
    case Family::ErdosRenyi: e = connected_er_edges(n, uniform(rng, spec.er_p_lo, spec.er_p_hi), rng); break;
    case Family::Cycle: e = cycle_edges(std::max(n, 3)); n = std::max(n, 3); break;
    case Family::Tree: e = tree_edges(n, rng); break;
    case Family::Path: e = path_edges(n); break;
    case Family::Barbell: {
      const int k = std::max(3, n / 3);
      const int bridge = std::max(1, n - 2 * k + 1);
      n = barbell_size(k, bridge);
      e = barbell_edges(k, bridge);
      break;
    }
  }
  if (spec.random_weights)
    for (auto& edge : e) edge.w = uniform(rng, 0.5, 2.0);
  return build_graph(n, e, IsolatedPolicy::SelfLoop);
}

inline SignalMatrix gaussian_signal(int n, int channels, Rng& rng) {
  SignalMatrix x(n, channels);
  for (int c = 0; c < channels; ++c)
    for (int i = 0; i < n; ++i) x(i, c) = standard_normal(rng);
  return x;
}

/// Random permutation pi with pi[i] = new label of node i.
inline std::vector<int> permutation(int n, Rng& rng) {
  std::vector<int> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  shuffle(p, rng);
  return p;
}

inline Graph permute(const Graph& g, const std::vector<int>& pi) {
  std::vector<Edge> e;
  for (const Edge& edge : g.edges())
    if (edge.i != edge.j) e.push_back({pi[edge.i], pi[edge.j], edge.w});
  Graph out = build_graph(g.n(), e, IsolatedPolicy::SelfLoop);
  return out;
}

inline SignalMatrix permute_rows(const SignalMatrix& x, const std::vector<int>& pi) {
  SignalMatrix y(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) y.row(pi[static_cast<std::size_t>(i)]) = x.row(i);
  return y;
}

/// Random F whose rows have ordered, disjoint supports with random positive mass.
inline SelectionMatrix ordered_support_selection(int J, int m, Rng& rng) {
  std::vector<int> cols(static_cast<std::size_t>(m - 1));
  std::iota(cols.begin(), cols.end(), 1);
  shuffle(cols, rng);
  std::vector<int> cuts(cols.begin(), cols.begin() + (J - 1));
  std::sort(cuts.begin(), cuts.end());
  cuts.insert(cuts.begin(), 0);
  cuts.push_back(m);
  SelectionMatrix s;
  s.F = Eigen::MatrixXd::Zero(J, m);
  for (int r = 0; r < J; ++r) {
    for (int t = cuts[r]; t < cuts[r + 1]; ++t)
      if (t == cuts[r] || uniform01(rng) < 0.6) s.F(r, t) = uniform(rng, 0.05, 1.0);
    s.F.row(r) /= s.F.row(r).sum();
    s.row_order.push_back(r);
  }
  return s;
}

}  // namespace legs::sample
