#pragma once

#include <algorithm>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "legs/filter_bank.hpp"
#include "legs/selection.hpp"

namespace legs {

/// Wavelet indices (j_1, ..., j_k); the empty path is the raw signal.
using ScatteringPath = std::vector<int>;

enum class PathRule { Increasing, AllOrdered };

struct ScatteringConfig {
  int J = 4;       // wavelets per bank (rows of F)
  int m = 16;      // cascade depth
  int q_max = 4;   // moment orders 1..q_max
  int order = 2;   // longest path
  PathRule path_rule = PathRule::Increasing;
  bool normalize_moments = true;
  double alpha = 0.5;
};

inline std::vector<ScatteringPath> enumerate_paths(int J, int order, PathRule rule) {
  require(order >= 1 && order <= 3, ErrorCode::UnsupportedOrder,
          "scattering order " + std::to_string(order) + " not in {1,2,3}");
  require(J >= 1, ErrorCode::InvalidShape, "need at least one wavelet");
  std::vector<ScatteringPath> out{{}};
  std::vector<ScatteringPath> frontier{{}};
  for (int len = 1; len <= order; ++len) {
    std::vector<ScatteringPath> next;
    for (const auto& p : frontier) {
      const int start = (rule == PathRule::Increasing && !p.empty()) ? p.back() + 1 : 0;
      for (int j = start; j < J; ++j) {
        auto q = p;
        q.push_back(j);
        next.push_back(q);
      }
    }
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Either a fixed scale sequence or a (relaxed) selection matrix.
class Bank {
 public:
  Bank(ScaleSequence s) : impl_(std::move(s)) {}
  Bank(SelectionMatrix s) : impl_(std::move(s)) {}

  bool is_fixed() const { return std::holds_alternative<ScaleSequence>(impl_); }
  const ScaleSequence& scales() const { return std::get<ScaleSequence>(impl_); }
  const SelectionMatrix& selection() const { return std::get<SelectionMatrix>(impl_); }

  int wavelet_count() const { return is_fixed() ? scales().count() : selection().rows(); }

  /// Cascade depth the bank reads from.
  int depth() const { return is_fixed() ? scales().last() : selection().depth(); }

  FilterResponses apply(const DiffusionCascade& c) const {
    return is_fixed() ? apply_bank(c, scales()) : legs_apply(selection(), c);
  }

  /// Coefficients of sum_t C(k,t) P^t over t = 0..depth().
  Eigen::MatrixXd coefficients() const {
    return bank_coefficients(is_fixed() ? one_hot_selection(scales()).F.leftCols(depth()).eval()
                                        : selection().F);
  }

 private:
  std::variant<ScaleSequence, SelectionMatrix> impl_;
};

/// Cascade truncated or extended to the depth a bank needs.
inline DiffusionCascade cascade_for(const Graph& g, double alpha, const SignalMatrix& x, const Bank& bank) {
  return diffusion_cascade(g, alpha, x, bank.depth());
}

/// Node-level U_p X = Psi_{j_k} |... |Psi_{j_1} X| ...|. No modulus on the final output.
inline SignalMatrix scatter_nodes(const Graph& g, double alpha, const Bank& bank, const ScatteringPath& path,
                                  const SignalMatrix& x) {
  check_conforms(g, x.rows(), "signal");
  for (int j : path)
    require(j >= 0 && j < bank.wavelet_count(), ErrorCode::PathIndexOutOfRange,
            "path index " + std::to_string(j) + " with " + std::to_string(bank.wavelet_count()) + " wavelets");
  SignalMatrix u = x;
  for (std::size_t k = 0; k < path.size(); ++k) {
    const SignalMatrix in = (k == 0) ? u : SignalMatrix(u.cwiseAbs());
    u = bank.apply(cascade_for(g, alpha, in, bank)).filter(path[k]);
  }
  return u;
}

/// q_max x N matrix with entry (q-1, c) = sum_i |u(i,c)|^q, divided by n when normalised.
/// Sums run in ascending node order.
inline Eigen::MatrixXd moments(const SignalMatrix& u, int q_max, bool normalize) {
  require(q_max >= 1, ErrorCode::InvalidShape, "q_max must be >= 1");
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(q_max, u.cols());
  for (Eigen::Index c = 0; c < u.cols(); ++c)
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
      const double a = std::abs(u(i, c));
      double p = a;
      for (int q = 0; q < q_max; ++q) {
        s(q, c) += p;
        p *= a;
      }
    }
  if (normalize && u.rows() > 0) s /= static_cast<double>(u.rows());
  return s;
}

struct FeatureKey {
  ScatteringPath path;
  bool lowpass = false;  // moments of Phi X rather than of a wavelet path
  int channel = 0;
  int q = 1;
};

inline std::string path_label(const FeatureKey& k) {
  if (k.lowpass) return "phi";
  std::string s = "(";
  for (std::size_t i = 0; i < k.path.size(); ++i) s += (i ? "," : "") + std::to_string(k.path[i]);
  return s + ")";
}

/// Path tree produced by a forward pass; everything the backward pass reads.
struct ScatteringCache {
  struct Node {
    ScatteringPath path;
    SignalMatrix u;
    int parent = -1;     // node index
    int filter = -1;     // filter of the parent's expansion that produced u
    int expansion = -1;  // index into expansions when this node has children
  };
  struct Expansion {
    int node = 0;  // node whose (absolute) output was diffused
    DiffusionCascade cascade;
    FilterResponses responses;
  };

  const Graph* graph = nullptr;
  double alpha = 0.5;
  int q_max = 4;
  bool normalize = true;
  Eigen::MatrixXd coefficients;  // bank filters as sums over P^t, see bank_coefficients
  std::vector<int> row_order;    // selection row routing; identity for fixed banks
  std::vector<Node> nodes;  // nodes[0] is the empty path; rest in enumeration order
  std::vector<Expansion> expansions;  // expansions[0] diffuses the raw signal
};

struct ScatteringFeatures {
  Eigen::VectorXd values;
  std::vector<FeatureKey> index;
  std::shared_ptr<ScatteringCache> cache;  // set when requested
};

inline std::size_t feature_count(const ScatteringConfig& cfg, int channels) {
  const auto paths = enumerate_paths(cfg.J, cfg.order, cfg.path_rule);
  return (paths.size() + 1) * static_cast<std::size_t>(cfg.q_max) * static_cast<std::size_t>(channels);
}

/// Column layout: paths in enumeration order then the low-pass block; within each,
/// channel-major, then q ascending.
inline std::vector<FeatureKey> feature_index(const ScatteringConfig& cfg, int channels) {
  std::vector<FeatureKey> idx;
  auto paths = enumerate_paths(cfg.J, cfg.order, cfg.path_rule);
  for (const auto& p : paths)
    for (int c = 0; c < channels; ++c)
      for (int q = 1; q <= cfg.q_max; ++q) idx.push_back({p, false, c, q});
  for (int c = 0; c < channels; ++c)
    for (int q = 1; q <= cfg.q_max; ++q) idx.push_back({{}, true, c, q});
  return idx;
}

/// Graph-level scattering moments for every enumerated path plus the low-pass channel.
/// `root` may supply a precomputed cascade of X of depth >= bank.depth().
inline ScatteringFeatures transform(const Graph& g, const SignalMatrix& x, const Bank& bank,
                                    const ScatteringConfig& cfg, bool keep_cache = false,
                                    const DiffusionCascade* root = nullptr) {
  check_conforms(g, x.rows(), "signal");
  require(bank.wavelet_count() == cfg.J, ErrorCode::DimensionMismatch,
          "bank has " + std::to_string(bank.wavelet_count()) + " wavelets, config expects " +
              std::to_string(cfg.J));
  require(x.allFinite(), ErrorCode::NonFiniteParameter, "signal has non-finite entries");
  const auto paths = enumerate_paths(cfg.J, cfg.order, cfg.path_rule);

  auto cache = std::make_shared<ScatteringCache>();
  cache->graph = &g;
  cache->alpha = cfg.alpha;
  cache->q_max = cfg.q_max;
  cache->normalize = cfg.normalize_moments;
  if (keep_cache) {
    cache->coefficients = bank.coefficients();
    if (bank.is_fixed()) {
      cache->row_order.resize(static_cast<std::size_t>(cfg.J));
      for (int j = 0; j < cfg.J; ++j) cache->row_order[j] = j;
    } else {
      cache->row_order = bank.selection().row_order;
    }
  }
  auto& nodes = cache->nodes;
  auto& exps = cache->expansions;
  nodes.reserve(paths.size());
  nodes.push_back({{}, x, -1, -1, 0});
  {
    ScatteringCache::Expansion e;
    e.node = 0;
    if (root && root->depth() == bank.depth() && root->input().rows() == x.rows()) {
      e.cascade = *root;
    } else if (root && root->depth() > bank.depth()) {
      e.cascade.alpha = root->alpha;
      e.cascade.steps.assign(root->steps.begin(), root->steps.begin() + bank.depth() + 1);
    } else {
      e.cascade = cascade_for(g, cfg.alpha, x, bank);
    }
    e.responses = bank.apply(e.cascade);
    exps.push_back(std::move(e));
  }

  // Parents precede children once paths are visited by length.
  std::vector<std::size_t> by_len(paths.size());
  for (std::size_t i = 0; i < paths.size(); ++i) by_len[i] = i;
  std::stable_sort(by_len.begin(), by_len.end(),
                   [&](std::size_t a, std::size_t b) { return paths[a].size() < paths[b].size(); });
  std::vector<int> node_of(paths.size(), -1);
  for (std::size_t pi : by_len) {
    const auto& p = paths[pi];
    if (p.empty()) {
      node_of[pi] = 0;
      continue;
    }
    ScatteringPath prefix(p.begin(), p.end() - 1);
    const auto it = std::lower_bound(paths.begin(), paths.end(), prefix);
    const int parent = node_of[static_cast<std::size_t>(it - paths.begin())];
    if (nodes[parent].expansion < 0) {
      ScatteringCache::Expansion e;
      e.node = parent;
      e.cascade = cascade_for(g, cfg.alpha, nodes[parent].u.cwiseAbs(), bank);
      e.responses = bank.apply(e.cascade);
      nodes[parent].expansion = static_cast<int>(exps.size());
      exps.push_back(std::move(e));
    }
    ScatteringCache::Node node;
    node.path = p;
    node.parent = parent;
    node.filter = p.back();
    node.u = exps[nodes[parent].expansion].responses.filter(p.back());
    node_of[pi] = static_cast<int>(nodes.size());
    nodes.push_back(std::move(node));
  }

  const int N = static_cast<int>(x.cols());
  ScatteringFeatures out;
  out.index = feature_index(cfg, N);
  out.values.resize(static_cast<Eigen::Index>(out.index.size()));
  Eigen::Index k = 0;
  auto emit = [&](const SignalMatrix& u) {
    const Eigen::MatrixXd s = moments(u, cfg.q_max, cfg.normalize_moments);
    for (int c = 0; c < N; ++c)
      for (int q = 0; q < cfg.q_max; ++q) out.values[k++] = s(q, c);
  };
  for (std::size_t pi = 0; pi < paths.size(); ++pi) emit(nodes[node_of[pi]].u);
  emit(exps[0].responses.phi);

  // Renumber nodes to enumeration order so feature blocks map 1:1 onto nodes.
  std::vector<ScatteringCache::Node> ordered(paths.size());
  std::vector<int> remap(nodes.size());
  for (std::size_t pi = 0; pi < paths.size(); ++pi) remap[node_of[pi]] = static_cast<int>(pi);
  for (std::size_t old = 0; old < nodes.size(); ++old) {
    auto n = std::move(nodes[old]);
    if (n.parent >= 0) n.parent = remap[n.parent];
    ordered[remap[old]] = std::move(n);
  }
  for (auto& e : exps) e.node = remap[e.node];
  nodes = std::move(ordered);

  if (keep_cache) out.cache = std::move(cache);
  return out;
}

}  // namespace legs
