#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "legs/error.hpp"
#include "legs/rng.hpp"

namespace legs {

/// Calls f on every trainable tensor of a head, in a fixed order.
/// Heads define visit_params for themselves; pack/unpack build on it.
template <class Head>
Eigen::VectorXd pack_params(const Head& h) {
  Eigen::Index total = 0;
  visit_params(h, [&](const auto& p) { total += p.size(); });
  Eigen::VectorXd out(total);
  Eigen::Index off = 0;
  visit_params(h, [&](const auto& p) {
    out.segment(off, p.size()) = Eigen::Map<const Eigen::VectorXd>(p.data(), p.size());
    off += p.size();
  });
  return out;
}

template <class Head>
void unpack_params(Head& h, const Eigen::VectorXd& flat) {
  Eigen::Index off = 0;
  visit_params(h, [&](auto& p) {
    require(off + p.size() <= flat.size(), ErrorCode::ShapeMismatch, "flat parameter vector too short");
    Eigen::Map<Eigen::VectorXd>(p.data(), p.size()) = flat.segment(off, p.size());
    off += p.size();
  });
  require(off == flat.size(), ErrorCode::ShapeMismatch, "flat parameter vector too long");
}

template <class Head>
Head zeros_like(const Head& h) {
  Head z = h;
  visit_params(z, [](auto& p) { p.setZero(); });
  return z;
}

namespace detail {

inline void fill_uniform(Eigen::MatrixXd& m, double bound, Rng& rng) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = uniform(rng, -bound, bound);
}

inline void fill_uniform(Eigen::VectorXd& v, double bound, Rng& rng) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = uniform(rng, -bound, bound);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Feature standardization (fixed affine map fitted once, not trained)

struct FeatureScaler {
  Eigen::VectorXd mean;
  Eigen::VectorXd inv_std;

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return (x - mean).cwiseProduct(inv_std); }
  Eigen::VectorXd backward(const Eigen::VectorXd& d_out) const { return d_out.cwiseProduct(inv_std); }
};

/// Columns with zero spread keep unit scale so they pass through centred.
inline FeatureScaler fit_scaler(const Eigen::MatrixXd& rows) {
  require(rows.rows() > 0, ErrorCode::EmptySplit, "cannot fit a scaler on zero rows");
  FeatureScaler s;
  s.mean = rows.colwise().mean().transpose();
  s.inv_std.resize(rows.cols());
  for (Eigen::Index j = 0; j < rows.cols(); ++j) {
    const double var = (rows.col(j).array() - s.mean[j]).square().mean();
    s.inv_std[j] = var > 1e-24 ? 1.0 / std::sqrt(var) : 1.0;
  }
  return s;
}

inline FeatureScaler identity_scaler(Eigen::Index dim) {
  return FeatureScaler{Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim)};
}

// ---------------------------------------------------------------------------
// Two-layer fully connected head

struct FcnHead {
  Eigen::MatrixXd W1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd W2;
  Eigen::VectorXd b2;

  Eigen::Index in() const { return W1.cols(); }
  Eigen::Index hidden() const { return W1.rows(); }
  Eigen::Index out() const { return W2.rows(); }
};

template <class H, class F>
  requires std::is_same_v<std::remove_const_t<H>, FcnHead>
void visit_params(H& h, F&& f) {
  f(h.W1);
  f(h.b1);
  f(h.W2);
  f(h.b2);
}

/// Uniform(+-1/sqrt(fan_in)) weights and biases.
inline FcnHead make_fcn_head(Eigen::Index in, Eigen::Index out, Eigen::Index hidden, std::uint64_t seed) {
  require(in > 0 && out > 0 && hidden > 0, ErrorCode::InvalidShape, "head dimensions must be positive");
  Rng rng = make_rng(seed, "fcn_head");
  FcnHead h{Eigen::MatrixXd(hidden, in), Eigen::VectorXd(hidden), Eigen::MatrixXd(out, hidden),
            Eigen::VectorXd(out)};
  const double b_in = 1.0 / std::sqrt(static_cast<double>(in));
  const double b_hid = 1.0 / std::sqrt(static_cast<double>(hidden));
  detail::fill_uniform(h.W1, b_in, rng);
  detail::fill_uniform(h.b1, b_in, rng);
  detail::fill_uniform(h.W2, b_hid, rng);
  detail::fill_uniform(h.b2, b_hid, rng);
  return h;
}

struct FcnCache {
  Eigen::VectorXd x;
  Eigen::VectorXd pre;  // W1 x + b1
};

inline Eigen::VectorXd fcn_forward(const FcnHead& h, const Eigen::VectorXd& x, FcnCache* cache = nullptr) {
  require(x.size() == h.in(), ErrorCode::ShapeMismatch,
          "feature length " + std::to_string(x.size()) + " != head input " + std::to_string(h.in()));
  Eigen::VectorXd pre = h.W1 * x + h.b1;
  Eigen::VectorXd logits = h.W2 * pre.cwiseMax(0.0) + h.b2;
  if (cache) *cache = FcnCache{x, std::move(pre)};
  return logits;
}

/// Accumulates parameter gradients into grad and returns dL/dx.
inline Eigen::VectorXd fcn_backward(const FcnHead& h, const FcnCache& c, const Eigen::VectorXd& d_logits,
                                    FcnHead& grad) {
  require(d_logits.size() == h.out(), ErrorCode::ShapeMismatch, "d_logits length does not match head output");
  const Eigen::VectorXd act = c.pre.cwiseMax(0.0);
  grad.W2 += d_logits * act.transpose();
  grad.b2 += d_logits;
  Eigen::VectorXd d_pre = h.W2.transpose() * d_logits;
  for (Eigen::Index i = 0; i < d_pre.size(); ++i)
    if (c.pre[i] <= 0.0) d_pre[i] = 0.0;
  grad.W1 += d_pre * c.x.transpose();
  grad.b1 += d_pre;
  return h.W1.transpose() * d_pre;
}

// ---------------------------------------------------------------------------
// Batch normalization + Gaussian RBF head

enum class Mode { Train, Eval };

struct BatchNorm {
  Eigen::VectorXd gamma;
  Eigen::VectorXd beta;
  Eigen::VectorXd running_mean;
  Eigen::VectorXd running_var;
  double eps = 1e-5;
  double momentum = 0.1;
};

inline BatchNorm make_batch_norm(Eigen::Index dim) {
  return BatchNorm{Eigen::VectorXd::Ones(dim), Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Zero(dim),
                   Eigen::VectorXd::Ones(dim)};
}

struct BatchNormCache {
  Mode mode = Mode::Eval;
  Eigen::MatrixXd xhat;     // B x d
  Eigen::VectorXd inv_std;  // d
};

/// Rows are samples. Train mode normalizes with the batch mean and biased variance
/// and moves the running statistics toward the batch (unbiased variance).
inline Eigen::MatrixXd batch_norm_forward(BatchNorm& bn, const Eigen::MatrixXd& x, Mode mode,
                                          BatchNormCache* cache = nullptr, bool update_running = true) {
  const Eigen::Index d = bn.gamma.size();
  require(x.cols() == d, ErrorCode::ShapeMismatch, "batch-norm input width mismatch");
  require(x.rows() > 0, ErrorCode::ShapeMismatch, "empty batch");
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd var;
  if (mode == Mode::Train) {
    mean = x.colwise().mean();
    var = (x.rowwise() - mean).array().square().colwise().mean();
    if (update_running) {
      const double b = static_cast<double>(x.rows());
      const Eigen::RowVectorXd unbiased = x.rows() > 1 ? Eigen::RowVectorXd(var * (b / (b - 1.0))) : var;
      bn.running_mean = (1.0 - bn.momentum) * bn.running_mean + bn.momentum * mean.transpose();
      bn.running_var = (1.0 - bn.momentum) * bn.running_var + bn.momentum * unbiased.transpose();
    }
  } else {
    mean = bn.running_mean.transpose();
    var = bn.running_var.transpose();
  }
  const Eigen::RowVectorXd inv_std = (var.array() + bn.eps).rsqrt();
  Eigen::MatrixXd xhat = (x.rowwise() - mean).array().rowwise() * inv_std.array();
  Eigen::MatrixXd y = (xhat.array().rowwise() * bn.gamma.transpose().array()).rowwise() + bn.beta.transpose().array();
  if (cache) *cache = BatchNormCache{mode, std::move(xhat), inv_std.transpose()};
  return y;
}

/// Accumulates dgamma, dbeta and returns dL/dx (batch coupling included in train mode).
inline Eigen::MatrixXd batch_norm_backward(const BatchNorm& bn, const BatchNormCache& c, const Eigen::MatrixXd& dy,
                                           BatchNorm& grad) {
  grad.gamma += (dy.array() * c.xhat.array()).colwise().sum().transpose().matrix();
  grad.beta += dy.colwise().sum().transpose();
  const Eigen::MatrixXd dxhat = dy.array().rowwise() * bn.gamma.transpose().array();
  if (c.mode == Mode::Eval) return dxhat.array().rowwise() * c.inv_std.transpose().array();
  const double b = static_cast<double>(dy.rows());
  const Eigen::RowVectorXd sum_d = dxhat.colwise().sum();
  const Eigen::RowVectorXd sum_dx = (dxhat.array() * c.xhat.array()).colwise().sum();
  Eigen::MatrixXd dx = (b * dxhat).rowwise() - sum_d;
  dx -= (c.xhat.array().rowwise() * sum_dx.array()).matrix();
  return (dx.array().rowwise() * (c.inv_std.transpose().array() / b)).matrix();
}

struct RbfHead {
  BatchNorm bn;
  Eigen::MatrixXd anchors;  // K x in
  Eigen::MatrixXd W;        // classes x K
  Eigen::VectorXd b;
  bool initialized = false;

  Eigen::Index in() const { return anchors.cols(); }
  Eigen::Index anchor_count() const { return anchors.rows(); }
  Eigen::Index out() const { return W.rows(); }
};

template <class H, class F>
  requires std::is_same_v<std::remove_const_t<H>, RbfHead>
void visit_params(H& h, F&& f) {
  f(h.bn.gamma);
  f(h.bn.beta);
  f(h.anchors);
  f(h.W);
  f(h.b);
}

inline constexpr Eigen::Index kDefaultAnchors = 64;

inline RbfHead make_rbf_head(Eigen::Index in, Eigen::Index out, Eigen::Index anchors, std::uint64_t seed) {
  require(in > 0 && out > 0 && anchors > 0, ErrorCode::InvalidShape, "head dimensions must be positive");
  Rng rng = make_rng(seed, "rbf_head");
  RbfHead h{make_batch_norm(in), Eigen::MatrixXd::Zero(anchors, in), Eigen::MatrixXd(out, anchors),
            Eigen::VectorXd(out)};
  const double bound = 1.0 / std::sqrt(static_cast<double>(anchors));
  detail::fill_uniform(h.W, bound, rng);
  detail::fill_uniform(h.b, bound, rng);
  return h;
}

/// Anchors are K distinct rows of the batch-normalized first pass (batch statistics,
/// running statistics untouched).
inline void rbf_init_anchors(RbfHead& h, const Eigen::MatrixXd& first_batch, std::uint64_t seed) {
  require(!h.initialized, ErrorCode::AlreadyInitialized, "RBF anchors are already initialized");
  const Eigen::Index k = h.anchor_count();
  require(first_batch.rows() >= k, ErrorCode::BatchTooSmall,
          "batch has " + std::to_string(first_batch.rows()) + " rows, need " + std::to_string(k));
  const Eigen::MatrixXd z = batch_norm_forward(h.bn, first_batch, Mode::Train, nullptr, false);
  std::vector<std::size_t> idx(static_cast<std::size_t>(z.rows()));
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng = make_rng(seed, "rbf_anchors");
  shuffle(idx, rng);
  for (Eigen::Index r = 0; r < k; ++r) h.anchors.row(r) = z.row(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(r)]));
  h.initialized = true;
}

struct RbfCache {
  BatchNormCache bn;
  Eigen::MatrixXd z;    // B x in
  Eigen::MatrixXd act;  // B x K
};

/// Logits for a batch (rows are samples): a_k = exp(-|z - c_k|^2), logits = W a + b.
inline Eigen::MatrixXd rbf_forward_batch(RbfHead& h, const Eigen::MatrixXd& x, Mode mode, RbfCache* cache = nullptr,
                                         bool update_running = true) {
  require(h.initialized, ErrorCode::AnchorsNotInitialized, "RBF anchors have not been initialized");
  BatchNormCache bc;
  Eigen::MatrixXd z = batch_norm_forward(h.bn, x, mode, &bc, update_running);
  Eigen::MatrixXd act(z.rows(), h.anchor_count());
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    for (Eigen::Index k = 0; k < h.anchor_count(); ++k) act(i, k) = std::exp(-(z.row(i) - h.anchors.row(k)).squaredNorm());
  Eigen::MatrixXd logits = (act * h.W.transpose()).rowwise() + h.b.transpose();
  if (cache) *cache = RbfCache{std::move(bc), std::move(z), std::move(act)};
  return logits;
}

inline Eigen::VectorXd rbf_forward(RbfHead& h, const Eigen::VectorXd& x, Mode mode) {
  return rbf_forward_batch(h, x.transpose(), mode).row(0).transpose();
}

/// Accumulates parameter gradients and returns dL/dx for every sample.
inline Eigen::MatrixXd rbf_backward_batch(const RbfHead& h, const RbfCache& c, const Eigen::MatrixXd& d_logits,
                                          RbfHead& grad) {
  require(d_logits.rows() == c.z.rows() && d_logits.cols() == h.out(), ErrorCode::ShapeMismatch,
          "d_logits shape does not match the batch");
  grad.W += d_logits.transpose() * c.act;
  grad.b += d_logits.colwise().sum().transpose();
  const Eigen::MatrixXd d_act = d_logits * h.W;  // B x K
  Eigen::MatrixXd dz = Eigen::MatrixXd::Zero(c.z.rows(), c.z.cols());
  for (Eigen::Index i = 0; i < c.z.rows(); ++i)
    for (Eigen::Index k = 0; k < h.anchor_count(); ++k) {
      const double s = -2.0 * d_act(i, k) * c.act(i, k);
      const Eigen::RowVectorXd diff = c.z.row(i) - h.anchors.row(k);
      dz.row(i) += s * diff;
      grad.anchors.row(k) -= s * diff;
    }
  return batch_norm_backward(h.bn, c.bn, dz, grad.bn);
}

// ---------------------------------------------------------------------------
// Losses

enum class LossKind { CrossEntropy, MeanSquaredError };

struct LossSpec {
  LossKind kind = LossKind::CrossEntropy;
  int outputs = 2;  // class count or target dimension
};

struct Target {
  int label = -1;
  Eigen::VectorXd value;

  static Target cls(int c) { return Target{c, {}}; }
  static Target reg(Eigen::VectorXd v) { return Target{-1, std::move(v)}; }
};

struct LossValue {
  double value = 0.0;
  Eigen::VectorXd d_logits;
};

inline LossValue cross_entropy(const Eigen::VectorXd& logits, int label) {
  require(label >= 0 && label < logits.size(), ErrorCode::LabelOutOfRange,
          "label " + std::to_string(label) + " outside [0, " + std::to_string(logits.size()) + ")");
  const double mx = logits.maxCoeff();
  const Eigen::ArrayXd e = (logits.array() - mx).exp();
  const double lse = mx + std::log(e.sum());
  LossValue out{lse - logits[label], e.matrix() / e.sum()};
  out.d_logits[label] -= 1.0;
  return out;
}

inline LossValue mean_squared_error(const Eigen::VectorXd& pred, const Eigen::VectorXd& target) {
  require(pred.size() == target.size(), ErrorCode::ShapeMismatch, "prediction and target lengths differ");
  const Eigen::VectorXd r = pred - target;
  const double n = static_cast<double>(r.size());
  return LossValue{r.squaredNorm() / n, (2.0 / n) * r};
}

inline LossValue loss(const LossSpec& spec, const Eigen::VectorXd& logits, const Target& target) {
  require(logits.size() == spec.outputs, ErrorCode::ShapeMismatch,
          "logits length " + std::to_string(logits.size()) + " != " + std::to_string(spec.outputs));
  if (spec.kind == LossKind::CrossEntropy) return cross_entropy(logits, target.label);
  return mean_squared_error(logits, target.value);
}

/// Index of the largest logit; ties resolve to the lowest index.
inline int argmax(const Eigen::VectorXd& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return static_cast<int>(best);
}

}  // namespace legs
