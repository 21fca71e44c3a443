#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "legs/autograd.hpp"
#include "legs/data_io.hpp"
#include "legs/heads.hpp"
#include "legs/optim.hpp"

namespace legs {

// ---------------------------------------------------------------------------
// Configuration

enum class Variant { LegsFixed, LegsFcn, LegsRbf };

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::LegsFixed: return "LEGS-FIXED";
    case Variant::LegsFcn: return "LEGS-FCN";
    case Variant::LegsRbf: return "LEGS-RBF";
  }
  return "?";
}

inline Variant parse_variant(const std::string& s) {
  for (auto v : {Variant::LegsFixed, Variant::LegsFcn, Variant::LegsRbf})
    if (to_string(v) == s) return v;
  fail(ErrorCode::ConfigError, "variant: unknown model variant '" + s + "'");
}

inline std::string to_string(ThetaInit t) {
  switch (t) {
    case ThetaInit::DyadicWarm: return "dyadic_warm";
    case ThetaInit::Uniform: return "uniform";
    case ThetaInit::Random: return "random";
  }
  return "?";
}

inline ThetaInit parse_theta_init(const std::string& s) {
  for (auto t : {ThetaInit::DyadicWarm, ThetaInit::Uniform, ThetaInit::Random})
    if (to_string(t) == s) return t;
  fail(ErrorCode::ConfigError, "theta_init: unknown scheme '" + s + "'");
}

inline std::string to_string(PathRule r) { return r == PathRule::Increasing ? "increasing" : "all_ordered"; }

inline PathRule parse_path_rule(const std::string& s) {
  if (s == "increasing") return PathRule::Increasing;
  if (s == "all_ordered") return PathRule::AllOrdered;
  fail(ErrorCode::ConfigError, "path_rule: unknown rule '" + s + "'");
}

struct TrainConfig {
  double lr = 1e-4;
  int max_epochs = 1000;
  int patience_epochs = 100;
  int eval_every = 10;
  int batch_size = 32;
  AdamConfig adam;
  std::uint64_t seed = 0;
  Variant variant = Variant::LegsFcn;
  ScatteringConfig scattering;
  ThetaInit theta_init = ThetaInit::DyadicWarm;
  int hidden = 128;
  int anchors = static_cast<int>(kDefaultAnchors);
  int threads = 1;
};

/// Training-field messages carry `prefix` (e.g. "train."); scattering fields are named
/// "scattering.<field>".
inline void validate(const TrainConfig& c, const std::string& prefix = "") {
  auto need = [&](bool ok, const std::string& msg) {
    require(ok, ErrorCode::ConfigError, msg.rfind("scattering.", 0) == 0 ? msg : prefix + msg);
  };
  need(c.lr > 0.0 && std::isfinite(c.lr), "lr: must be positive");
  need(c.max_epochs >= 1, "max_epochs: must be >= 1");
  need(c.eval_every >= 1, "eval_every: must be >= 1");
  need(c.patience_epochs >= c.eval_every && c.patience_epochs <= c.max_epochs,
       "patience_epochs: must lie in [eval_every, max_epochs]");
  need(c.patience_epochs % c.eval_every == 0, "patience_epochs: must be a multiple of eval_every");
  need(c.batch_size >= 1, "batch_size: must be >= 1");
  need(c.adam.beta1 >= 0.0 && c.adam.beta1 < 1.0, "adam.beta1: must lie in [0, 1)");
  need(c.adam.beta2 >= 0.0 && c.adam.beta2 < 1.0, "adam.beta2: must lie in [0, 1)");
  need(c.adam.eps > 0.0, "adam.eps: must be positive");
  need(c.hidden >= 1, "hidden: must be >= 1");
  need(c.anchors >= 1, "anchors: must be >= 1");
  need(c.threads >= 1, "threads: must be >= 1");
  const auto& s = c.scattering;
  need(s.alpha > 0.0 && s.alpha < 1.0, "scattering.alpha: must lie in (0, 1)");
  need(s.J >= 1 && s.J <= s.m, "scattering.J: need 1 <= J <= m");
  need(s.q_max >= 1, "scattering.q_max: must be >= 1");
  need(s.order >= 1 && s.order <= 3, "scattering.order: must be 1, 2 or 3");
  if (c.variant == Variant::LegsFixed)
    need((1 << (s.J - 1)) <= s.m, "scattering.m: the dyadic bank needs m >= 2^(J-1)");
}

inline nlohmann::json to_json(const ScatteringConfig& s) {
  return {{"J", s.J},           {"m", s.m},
          {"q_max", s.q_max},   {"order", s.order},
          {"path_rule", to_string(s.path_rule)}, {"normalize_moments", s.normalize_moments},
          {"alpha", s.alpha}};
}

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"lr", c.lr},
          {"max_epochs", c.max_epochs},
          {"patience_epochs", c.patience_epochs},
          {"eval_every", c.eval_every},
          {"batch_size", c.batch_size},
          {"adam", {{"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"eps", c.adam.eps}}},
          {"seed", c.seed},
          {"variant", to_string(c.variant)},
          {"scattering", to_json(c.scattering)},
          {"theta_init", to_string(c.theta_init)},
          {"hidden", c.hidden},
          {"anchors", c.anchors}};
}

/// Stable hash of everything that influences results (thread count excluded).
inline std::string config_hash(const nlohmann::json& j) {
  std::ostringstream os;
  os << std::hex << fnv1a64(j.dump());
  return os.str();
}

// ---------------------------------------------------------------------------
// Threading

/// Runs f(0..count-1) on up to `threads` workers with a static interleaved split.
/// Callers write results into per-index slots and reduce in index order.
template <class F>
void parallel_for(std::size_t count, int threads, F&& f) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) f(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += workers) f(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline int default_threads() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

// ---------------------------------------------------------------------------
// Model

struct Model {
  Variant variant = Variant::LegsFcn;
  ScatteringConfig scattering;
  LossSpec loss;
  SelectionParams theta;
  FeatureScaler scaler;
  FcnHead fcn;
  RbfHead rbf;

  bool theta_trainable() const { return variant != Variant::LegsFixed; }
  bool uses_rbf() const { return variant == Variant::LegsRbf; }

  Bank bank() const {
    if (variant == Variant::LegsFixed) return Bank(dyadic_scales(scattering.J - 1, scattering.m));
    return Bank(selection_matrix(theta));
  }

  /// The selection matrix in effect (one-hot dyadic rows for the frozen variant).
  SelectionMatrix selection() const {
    if (variant == Variant::LegsFixed) return one_hot_selection(dyadic_scales(scattering.J - 1, scattering.m));
    return selection_matrix(theta);
  }

  Eigen::VectorXd params() const {
    const Eigen::VectorXd head = uses_rbf() ? pack_params(rbf) : pack_params(fcn);
    if (!theta_trainable()) return head;
    Eigen::VectorXd out(theta.theta.size() + head.size());
    out << Eigen::Map<const Eigen::VectorXd>(theta.theta.data(), theta.theta.size()), head;
    return out;
  }

  void set_params(const Eigen::VectorXd& p) {
    Eigen::Index off = 0;
    if (theta_trainable()) {
      require(p.size() >= theta.theta.size(), ErrorCode::ShapeMismatch, "parameter vector too short");
      Eigen::Map<Eigen::VectorXd>(theta.theta.data(), theta.theta.size()) = p.head(theta.theta.size());
      off = theta.theta.size();
    }
    if (uses_rbf())
      unpack_params(rbf, p.tail(p.size() - off));
    else
      unpack_params(fcn, p.tail(p.size() - off));
  }
};

/// Per-dataset precomputation shared by every model trained on it.
struct PreparedData {
  const GraphDataset* ds = nullptr;
  std::vector<DiffusionCascade> roots;

  const Graph& graph(int i) const { return ds->graphs[static_cast<std::size_t>(i)]; }
  const SignalMatrix& signal(int i) const { return ds->features[static_cast<std::size_t>(i)]; }
  Target target(int i) const {
    return ds->is_classification() ? Target::cls(ds->labels[static_cast<std::size_t>(i)])
                                   : Target::reg(ds->targets[static_cast<std::size_t>(i)]);
  }
};

inline PreparedData prepare(const GraphDataset& ds, const ScatteringConfig& cfg, int threads = 1) {
  require(ds.graphs.size() == ds.features.size(), ErrorCode::ShapeMismatch, "graphs and features not aligned");
  PreparedData p{&ds, std::vector<DiffusionCascade>(ds.size())};
  parallel_for(ds.size(), threads, [&](std::size_t i) {
    p.roots[i] = diffusion_cascade(ds.graphs[i], cfg.alpha, ds.features[i], cfg.m);
  });
  return p;
}

inline LossSpec loss_spec_for(const GraphDataset& ds) {
  if (ds.is_classification()) return {LossKind::CrossEntropy, ds.class_count};
  require(!ds.targets.empty(), ErrorCode::ShapeMismatch, "dataset has neither labels nor targets");
  return {LossKind::MeanSquaredError, static_cast<int>(ds.targets.front().size())};
}

inline ScatteringFeatures model_features(const Model& m, const Bank& bank, const PreparedData& d, int i,
                                         bool keep_cache) {
  return transform(d.graph(i), d.signal(i), bank, m.scattering, keep_cache, &d.roots[static_cast<std::size_t>(i)]);
}

/// Eval-mode outputs (logits or regression values), one row per listed graph.
inline Eigen::MatrixXd predict_outputs(const Model& m, const PreparedData& d, const std::vector<int>& idx,
                                       int threads = 1) {
  const Bank bank = m.bank();
  std::vector<Eigen::VectorXd> feats(idx.size());
  parallel_for(idx.size(), threads, [&](std::size_t k) { feats[k] = model_features(m, bank, d, idx[k], false).values; });
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.loss.outputs);
  if (m.uses_rbf()) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(idx.size()), m.rbf.in());
    for (std::size_t k = 0; k < idx.size(); ++k) x.row(static_cast<Eigen::Index>(k)) = feats[k].transpose();
    RbfHead h = m.rbf;
    if (!idx.empty()) out = rbf_forward_batch(h, x, Mode::Eval);
  } else {
    for (std::size_t k = 0; k < idx.size(); ++k)
      out.row(static_cast<Eigen::Index>(k)) = fcn_forward(m.fcn, m.scaler.apply(feats[k])).transpose();
  }
  return out;
}

inline double mean_loss(const Model& m, const PreparedData& d, const std::vector<int>& idx, int threads = 1) {
  const Eigen::MatrixXd out = predict_outputs(m, d, idx, threads);
  double total = 0.0;
  for (std::size_t k = 0; k < idx.size(); ++k)
    total += loss(m.loss, out.row(static_cast<Eigen::Index>(k)).transpose(), d.target(idx[k])).value;
  return total / static_cast<double>(idx.size());
}

inline std::vector<int> predict_labels(const Model& m, const PreparedData& d, const std::vector<int>& idx,
                                       int threads = 1) {
  const Eigen::MatrixXd out = predict_outputs(m, d, idx, threads);
  std::vector<int> labels;
  for (Eigen::Index r = 0; r < out.rows(); ++r) labels.push_back(argmax(out.row(r).transpose()));
  return labels;
}

/// Fresh model: theta from the configured init, heads seeded from the run seed,
/// feature scaler (FCN heads) or anchors (RBF head) from a first pass over `train`.
inline Model init_model(const TrainConfig& cfg, const PreparedData& d, const std::vector<int>& train) {
  validate(cfg);
  require(!train.empty(), ErrorCode::EmptySplit, "training split is empty");
  Model m;
  m.variant = cfg.variant;
  m.scattering = cfg.scattering;
  m.loss = loss_spec_for(*d.ds);
  m.theta = init_theta(cfg.scattering.J, cfg.scattering.m, cfg.theta_init, derive_seed(cfg.seed, "theta"));
  const Bank bank = m.bank();
  std::vector<Eigen::VectorXd> feats(train.size());
  parallel_for(train.size(), cfg.threads,
               [&](std::size_t k) { feats[k] = model_features(m, bank, d, train[k], false).values; });
  const Eigen::Index dim = feats.front().size();
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(train.size()), dim);
  for (std::size_t k = 0; k < train.size(); ++k) rows.row(static_cast<Eigen::Index>(k)) = feats[k].transpose();
  if (m.uses_rbf()) {
    const Eigen::Index k = std::min<Eigen::Index>(cfg.anchors, rows.rows());
    m.rbf = make_rbf_head(dim, m.loss.outputs, k, derive_seed(cfg.seed, "head"));
    rbf_init_anchors(m.rbf, rows, derive_seed(cfg.seed, "anchors"));
    m.scaler = identity_scaler(dim);
  } else {
    m.fcn = make_fcn_head(dim, m.loss.outputs, cfg.hidden, derive_seed(cfg.seed, "head"));
    m.scaler = fit_scaler(rows);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Training

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  std::optional<double> val_loss;
};

struct TrainState {
  Model model;
  AdamState adam;
  Rng rng;
  int epoch = 0;
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  Model best;
  std::vector<EpochRecord> history;
  bool stopped = false;
};

inline TrainState init_train_state(const TrainConfig& cfg, const PreparedData& d, const std::vector<int>& train) {
  TrainState s;
  s.model = init_model(cfg, d, train);
  s.adam = AdamState::zeros(s.model.params().size());
  s.rng = make_rng(cfg.seed, "batching");
  s.best = s.model;
  return s;
}

namespace detail {

struct SampleGrad {
  double loss = 0.0;
  Eigen::VectorXd d_theta;  // empty when theta is frozen
};

}  // namespace detail

/// Loss and mean gradient over one batch; the RBF head also updates its running statistics.
inline double batch_step(Model& m, const PreparedData& d, const std::vector<int>& batch, Eigen::VectorXd& grad,
                         int threads, std::vector<Eigen::VectorXd>* fixed_features) {
  const std::size_t b = batch.size();
  const double inv_b = 1.0 / static_cast<double>(b);
  const Bank bank = m.bank();
  std::vector<ScatteringFeatures> feats(b);
  parallel_for(b, threads, [&](std::size_t k) {
    if (fixed_features) {
      feats[k].values = (*fixed_features)[static_cast<std::size_t>(batch[k])];
      return;
    }
    feats[k] = model_features(m, bank, d, batch[k], m.theta_trainable());
  });

  std::vector<Eigen::VectorXd> d_feat(b);
  std::vector<double> losses(b);
  Eigen::VectorXd head_grad;
  if (m.uses_rbf()) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(b), m.rbf.in());
    for (std::size_t k = 0; k < b; ++k) x.row(static_cast<Eigen::Index>(k)) = feats[k].values.transpose();
    RbfCache cache;
    const Eigen::MatrixXd out = rbf_forward_batch(m.rbf, x, Mode::Train, &cache);
    Eigen::MatrixXd dl(out.rows(), out.cols());
    for (std::size_t k = 0; k < b; ++k) {
      const auto lv = loss(m.loss, out.row(static_cast<Eigen::Index>(k)).transpose(), d.target(batch[k]));
      losses[k] = lv.value;
      dl.row(static_cast<Eigen::Index>(k)) = lv.d_logits.transpose() * inv_b;
    }
    RbfHead g = zeros_like(m.rbf);
    const Eigen::MatrixXd dx = rbf_backward_batch(m.rbf, cache, dl, g);
    head_grad = pack_params(g);
    for (std::size_t k = 0; k < b; ++k) d_feat[k] = dx.row(static_cast<Eigen::Index>(k)).transpose();
  } else {
    std::vector<Eigen::VectorXd> per(b);
    parallel_for(b, threads, [&](std::size_t k) {
      FcnCache c;
      const Eigen::VectorXd out = fcn_forward(m.fcn, m.scaler.apply(feats[k].values), &c);
      const auto lv = loss(m.loss, out, d.target(batch[k]));
      losses[k] = lv.value;
      FcnHead g = zeros_like(m.fcn);
      d_feat[k] = m.scaler.backward(fcn_backward(m.fcn, c, lv.d_logits * inv_b, g));
      per[k] = pack_params(g);
    });
    head_grad = per[0];
    for (std::size_t k = 1; k < b; ++k) head_grad += per[k];
  }

  Eigen::VectorXd theta_grad;
  if (m.theta_trainable()) {
    std::vector<Eigen::MatrixXd> per(b);
    parallel_for(b, threads,
                 [&](std::size_t k) { per[k] = backward_theta(feats[k].cache.get(), d_feat[k], m.theta); });
    Eigen::MatrixXd sum = per[0];
    for (std::size_t k = 1; k < b; ++k) sum += per[k];
    theta_grad = Eigen::Map<const Eigen::VectorXd>(sum.data(), sum.size());
  }
  grad.resize(theta_grad.size() + head_grad.size());
  grad << theta_grad, head_grad;
  return std::accumulate(losses.begin(), losses.end(), 0.0);
}

/// Advances training until `until_epoch` (or max_epochs) or early stopping. Validation
/// runs every eval_every epochs; training stops once patience_epochs pass without a
/// strictly lower validation loss.
inline void run_epochs(TrainState& s, const TrainConfig& cfg, const PreparedData& d, const std::vector<int>& train,
                       const std::vector<int>& val, int until_epoch) {
  require(!train.empty(), ErrorCode::EmptySplit, "training split is empty");
  require(!val.empty(), ErrorCode::EmptySplit, "validation split is empty");
  until_epoch = std::min(until_epoch, cfg.max_epochs);
  std::vector<Eigen::VectorXd> fixed;
  if (!s.model.theta_trainable() && s.epoch < until_epoch && !s.stopped) {
    fixed.resize(d.ds->size());
    const Bank bank = s.model.bank();
    parallel_for(train.size(), cfg.threads, [&](std::size_t k) {
      fixed[static_cast<std::size_t>(train[k])] = model_features(s.model, bank, d, train[k], false).values;
    });
  }
  std::vector<int> order = train;
  Eigen::VectorXd grad;
  while (!s.stopped && s.epoch < until_epoch) {
    order = train;
    shuffle(order, s.rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const std::vector<int> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                   order.begin() + static_cast<std::ptrdiff_t>(end));
      total += batch_step(s.model, d, batch, grad, cfg.threads, fixed.empty() ? nullptr : &fixed);
      Eigen::VectorXd p = s.model.params();
      adam_step(p, grad, s.adam, cfg.lr, cfg.adam);
      s.model.set_params(p);
    }
    ++s.epoch;
    EpochRecord rec{s.epoch, total / static_cast<double>(order.size()), std::nullopt};
    if (s.epoch % cfg.eval_every == 0) {
      const double v = mean_loss(s.model, d, val, cfg.threads);
      rec.val_loss = v;
      if (v < s.best_val) {
        s.best_val = v;
        s.best_epoch = s.epoch;
        s.best = s.model;
      }
      if (s.epoch - s.best_epoch >= cfg.patience_epochs) s.stopped = true;
    }
    s.history.push_back(rec);
  }
  if (s.epoch >= cfg.max_epochs) s.stopped = true;
}

struct TrainResult {
  Model best;
  double best_val_loss = 0.0;
  int best_epoch = 0;
  int stopped_epoch = 0;
  std::vector<EpochRecord> history;
};

inline TrainResult finish(const TrainState& s) {
  return TrainResult{s.best, s.best_val, s.best_epoch, s.epoch, s.history};
}

inline TrainResult train(const TrainConfig& cfg, const PreparedData& d, const std::vector<int>& train_idx,
                         const std::vector<int>& val_idx) {
  for (int i : train_idx)
    require(std::find(val_idx.begin(), val_idx.end(), i) == val_idx.end(), ErrorCode::ConfigError,
            "graph " + std::to_string(i) + " is in both training and validation splits");
  TrainState s = init_train_state(cfg, d, train_idx);
  run_epochs(s, cfg, d, train_idx, val_idx, cfg.max_epochs);
  return finish(s);
}

// ---------------------------------------------------------------------------
// Checkpoints

inline nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  require(static_cast<Eigen::Index>(data.size()) == rows * cols, ErrorCode::ParseError, "matrix data size mismatch");
  return Eigen::Map<const Eigen::MatrixXd>(data.data(), rows, cols);
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& j) { return matrix_from_json(j).col(0); }

inline nlohmann::json model_json(const Model& m) {
  nlohmann::json j{{"variant", to_string(m.variant)},
                   {"scattering", to_json(m.scattering)},
                   {"loss", {{"kind", m.loss.kind == LossKind::CrossEntropy ? "cross_entropy" : "mean_squared_error"},
                             {"outputs", m.loss.outputs}}},
                   {"theta", matrix_json(m.theta.theta)},
                   {"scaler", {{"mean", matrix_json(m.scaler.mean)}, {"inv_std", matrix_json(m.scaler.inv_std)}}}};
  if (m.uses_rbf()) {
    j["rbf"] = {{"gamma", matrix_json(m.rbf.bn.gamma)},
                {"beta", matrix_json(m.rbf.bn.beta)},
                {"running_mean", matrix_json(m.rbf.bn.running_mean)},
                {"running_var", matrix_json(m.rbf.bn.running_var)},
                {"eps", m.rbf.bn.eps},
                {"momentum", m.rbf.bn.momentum},
                {"anchors", matrix_json(m.rbf.anchors)},
                {"W", matrix_json(m.rbf.W)},
                {"b", matrix_json(m.rbf.b)},
                {"initialized", m.rbf.initialized}};
  } else {
    j["fcn"] = {{"W1", matrix_json(m.fcn.W1)},
                {"b1", matrix_json(m.fcn.b1)},
                {"W2", matrix_json(m.fcn.W2)},
                {"b2", matrix_json(m.fcn.b2)}};
  }
  return j;
}

inline ScatteringConfig scattering_from_json(const nlohmann::json& j) {
  ScatteringConfig s;
  s.J = j.at("J");
  s.m = j.at("m");
  s.q_max = j.at("q_max");
  s.order = j.at("order");
  s.path_rule = parse_path_rule(j.at("path_rule"));
  s.normalize_moments = j.at("normalize_moments");
  s.alpha = j.at("alpha");
  return s;
}

inline Model model_from_json(const nlohmann::json& j) {
  Model m;
  m.variant = parse_variant(j.at("variant"));
  m.scattering = scattering_from_json(j.at("scattering"));
  m.loss.kind = j.at("loss").at("kind") == "cross_entropy" ? LossKind::CrossEntropy : LossKind::MeanSquaredError;
  m.loss.outputs = j.at("loss").at("outputs");
  m.theta.theta = matrix_from_json(j.at("theta"));
  m.scaler.mean = vector_from_json(j.at("scaler").at("mean"));
  m.scaler.inv_std = vector_from_json(j.at("scaler").at("inv_std"));
  if (m.uses_rbf()) {
    const auto& r = j.at("rbf");
    m.rbf.bn.gamma = vector_from_json(r.at("gamma"));
    m.rbf.bn.beta = vector_from_json(r.at("beta"));
    m.rbf.bn.running_mean = vector_from_json(r.at("running_mean"));
    m.rbf.bn.running_var = vector_from_json(r.at("running_var"));
    m.rbf.bn.eps = r.at("eps");
    m.rbf.bn.momentum = r.at("momentum");
    m.rbf.anchors = matrix_from_json(r.at("anchors"));
    m.rbf.W = matrix_from_json(r.at("W"));
    m.rbf.b = vector_from_json(r.at("b"));
    m.rbf.initialized = r.at("initialized");
  } else {
    const auto& f = j.at("fcn");
    m.fcn.W1 = matrix_from_json(f.at("W1"));
    m.fcn.b1 = vector_from_json(f.at("b1"));
    m.fcn.W2 = matrix_from_json(f.at("W2"));
    m.fcn.b2 = vector_from_json(f.at("b2"));
  }
  return m;
}

inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json checkpoint_json(const TrainState& s, const TrainConfig& cfg) {
  std::ostringstream rng_state;
  rng_state << s.rng;
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& r : s.history)
    hist.push_back({{"epoch", r.epoch}, {"train_loss", r.train_loss},
                    {"val_loss", r.val_loss ? nlohmann::json(*r.val_loss) : nlohmann::json(nullptr)}});
  return {{"checkpoint_version", kCheckpointVersion},
          {"config_hash", config_hash(to_json(cfg))},
          {"model", model_json(s.model)},
          {"best_model", model_json(s.best)},
          {"adam", {{"m", matrix_json(s.adam.m)}, {"v", matrix_json(s.adam.v)}, {"step", s.adam.step}}},
          {"rng", rng_state.str()},
          {"epoch", s.epoch},
          {"best_val_loss", std::isfinite(s.best_val) ? nlohmann::json(s.best_val) : nlohmann::json(nullptr)},
          {"best_epoch", s.best_epoch},
          {"stopped", s.stopped},
          {"history", hist}};
}

/// Restores a state saved by checkpoint_json; rejects checkpoints made under another config.
inline TrainState state_from_checkpoint(const nlohmann::json& j, const TrainConfig& cfg) {
  require(j.value("checkpoint_version", 0) == kCheckpointVersion, ErrorCode::ParseError,
          "unsupported checkpoint version");
  require(j.at("config_hash") == config_hash(to_json(cfg)), ErrorCode::ConfigError,
          "checkpoint was written under a different configuration");
  TrainState s;
  s.model = model_from_json(j.at("model"));
  s.best = model_from_json(j.at("best_model"));
  s.adam.m = vector_from_json(j.at("adam").at("m"));
  s.adam.v = vector_from_json(j.at("adam").at("v"));
  s.adam.step = j.at("adam").at("step");
  std::istringstream rs(j.at("rng").get<std::string>());
  rs >> s.rng;
  require(!rs.fail(), ErrorCode::ParseError, "checkpoint RNG state is malformed");
  s.epoch = j.at("epoch");
  s.best_val = j.at("best_val_loss").is_null() ? std::numeric_limits<double>::infinity()
                                               : j.at("best_val_loss").get<double>();
  s.best_epoch = j.at("best_epoch");
  s.stopped = j.at("stopped");
  for (const auto& r : j.at("history"))
    s.history.push_back({r.at("epoch"), r.at("train_loss"),
                         r.at("val_loss").is_null() ? std::nullopt : std::optional<double>(r.at("val_loss").get<double>())});
  return s;
}

// ---------------------------------------------------------------------------
// Metrics and cross-validation

inline double accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
  require(pred.size() == truth.size(), ErrorCode::LengthMismatch,
          std::to_string(pred.size()) + " predictions for " + std::to_string(truth.size()) + " targets");
  require(!pred.empty(), ErrorCode::LengthMismatch, "no predictions");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == truth[i];
  return static_cast<double>(hit) / static_cast<double>(pred.size());
}

inline double mean_squared_error(const std::vector<Eigen::VectorXd>& pred, const std::vector<Eigen::VectorXd>& truth) {
  require(pred.size() == truth.size(), ErrorCode::LengthMismatch,
          std::to_string(pred.size()) + " predictions for " + std::to_string(truth.size()) + " targets");
  require(!pred.empty(), ErrorCode::LengthMismatch, "no predictions");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += mean_squared_error(pred[i], truth[i]).value;
  return s / static_cast<double>(pred.size());
}

/// Per-sample majority over models; ties go to the lowest class index.
inline std::vector<int> majority_vote(const std::vector<std::vector<int>>& votes, int class_count) {
  require(!votes.empty(), ErrorCode::LengthMismatch, "no models to vote");
  std::vector<int> out(votes.front().size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::vector<int> counts(static_cast<std::size_t>(class_count), 0);
    for (const auto& v : votes) {
      require(v.size() == out.size(), ErrorCode::LengthMismatch, "models voted on different sample counts");
      ++counts[static_cast<std::size_t>(v[i])];
    }
    out[i] = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  }
  return out;
}

/// k near-equal folds. Classification: indices are shuffled within each class, classes are
/// concatenated in label order and dealt round-robin, so every fold is stratified.
inline std::vector<std::vector<int>> make_folds(std::size_t n, const std::vector<int>& labels, int k,
                                                std::uint64_t seed) {
  require(n >= static_cast<std::size_t>(k), ErrorCode::DatasetTooSmall,
          "dataset of " + std::to_string(n) + " graphs cannot fill " + std::to_string(k) + " folds");
  Rng rng = make_rng(seed, "folds");
  std::vector<int> order;
  if (labels.empty()) {
    order.resize(n);
    std::iota(order.begin(), order.end(), 0);
    shuffle(order, rng);
  } else {
    const int classes = *std::max_element(labels.begin(), labels.end()) + 1;
    for (int c = 0; c < classes; ++c) {
      std::vector<int> members;
      for (std::size_t i = 0; i < n; ++i)
        if (labels[i] == c) members.push_back(static_cast<int>(i));
      shuffle(members, rng);
      order.insert(order.end(), members.begin(), members.end());
    }
  }
  std::vector<std::vector<int>> folds(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < order.size(); ++i) folds[i % static_cast<std::size_t>(k)].push_back(order[i]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

struct CvConfig {
  int folds = 10;
  bool fast = true;             // one model per test fold instead of one per remaining fold
  double train_fraction = 0.8;  // share of the whole dataset used for training
};

struct CvModelResult {
  int test_fold = 0;
  int val_fold = 0;
  int train_size = 0;
  double best_val_loss = 0.0;
  int best_epoch = 0;
  int stopped_epoch = 0;
  Eigen::MatrixXd F;
  std::vector<EpochRecord> history;
};

struct CvFoldResult {
  int test_fold = 0;
  double score = 0.0;
  std::vector<int> test_indices;
};

struct CvResult {
  std::string metric;  // "accuracy" or "mse"
  std::vector<CvFoldResult> folds;
  std::vector<CvModelResult> models;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation over folds
};

namespace detail {

/// Stratified subsample of `train` down to round(fraction * n_total) graphs.
inline std::vector<int> subsample(const std::vector<int>& train, const GraphDataset& ds, double fraction,
                                  std::uint64_t seed) {
  const auto want = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(ds.size())));
  if (want >= train.size()) return train;
  require(want >= 1, ErrorCode::EmptySplit, "train_fraction leaves no training graphs");
  Rng rng = make_rng(seed, "subsample");
  std::vector<int> order = train;
  shuffle(order, rng);
  if (!ds.is_classification()) {
    order.resize(want);
    std::sort(order.begin(), order.end());
    return order;
  }
  // Deal classes round-robin so class shares follow the full split.
  std::vector<std::vector<int>> by_class(static_cast<std::size_t>(ds.class_count));
  for (int i : order) by_class[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(i)])].push_back(i);
  std::vector<int> out;
  std::vector<double> quota(by_class.size());
  for (std::size_t c = 0; c < by_class.size(); ++c)
    quota[c] = static_cast<double>(by_class[c].size()) * static_cast<double>(want) / static_cast<double>(train.size());
  std::vector<std::size_t> taken(by_class.size(), 0);
  while (out.size() < want) {
    std::size_t best = by_class.size();
    double deficit = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < by_class.size(); ++c)
      if (taken[c] < by_class[c].size() && quota[c] - static_cast<double>(taken[c]) > deficit) {
        deficit = quota[c] - static_cast<double>(taken[c]);
        best = c;
      }
    out.push_back(by_class[best][taken[best]++]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

/// For each test fold, trains on the remaining folds with one held-out validation fold
/// (all nine choices, or only the next fold in fast mode) and scores the ensemble:
/// majority vote for classification, mean output for regression.
inline CvResult crossval(const GraphDataset& ds, const TrainConfig& cfg, const CvConfig& cv) {
  validate(cfg);
  require(ds.size() >= 10 && ds.size() >= static_cast<std::size_t>(cv.folds), ErrorCode::DatasetTooSmall,
          "cross-validation needs at least 10 graphs, got " + std::to_string(ds.size()));
  require(cv.folds >= 3, ErrorCode::ConfigError, "folds: need at least 3");
  require(cv.train_fraction > 0.0 && cv.train_fraction <= 1.0, ErrorCode::ConfigError,
          "train_fraction: must lie in (0, 1]");
  const PreparedData data = prepare(ds, cfg.scattering, cfg.threads);
  const auto folds = make_folds(ds.size(), ds.is_classification() ? ds.labels : std::vector<int>{}, cv.folds,
                                cfg.seed);
  struct Job {
    int test, val;
  };
  std::vector<Job> jobs;
  for (int t = 0; t < cv.folds; ++t)
    for (int v = 0; v < cv.folds; ++v)
      if (v != t && (!cv.fast || v == (t + 1) % cv.folds)) jobs.push_back({t, v});

  std::vector<CvModelResult> results(jobs.size());
  std::vector<Eigen::MatrixXd> outputs(jobs.size());
  parallel_for(jobs.size(), cfg.threads, [&](std::size_t ji) {
    const Job job = jobs[ji];
    std::vector<int> train;
    for (int f = 0; f < cv.folds; ++f)
      if (f != job.test && f != job.val)
        train.insert(train.end(), folds[static_cast<std::size_t>(f)].begin(), folds[static_cast<std::size_t>(f)].end());
    std::sort(train.begin(), train.end());
    TrainConfig local = cfg;
    local.threads = 1;
    local.seed = derive_seed(cfg.seed, "model", static_cast<std::uint64_t>(job.test * cv.folds + job.val));
    train = detail::subsample(train, ds, cv.train_fraction, local.seed);
    const TrainResult r = legs::train(local, data, train, folds[static_cast<std::size_t>(job.val)]);
    outputs[ji] = predict_outputs(r.best, data, folds[static_cast<std::size_t>(job.test)]);
    results[ji] = CvModelResult{job.test,          job.val,         static_cast<int>(train.size()),
                                r.best_val_loss,   r.best_epoch,    r.stopped_epoch,
                                r.best.selection().F, r.history};
  });

  CvResult out;
  out.metric = ds.is_classification() ? "accuracy" : "mse";
  out.models = results;
  for (int t = 0; t < cv.folds; ++t) {
    const auto& test = folds[static_cast<std::size_t>(t)];
    std::vector<std::size_t> mine;
    for (std::size_t ji = 0; ji < jobs.size(); ++ji)
      if (jobs[ji].test == t) mine.push_back(ji);
    CvFoldResult fr{t, 0.0, test};
    if (ds.is_classification()) {
      std::vector<std::vector<int>> votes;
      for (std::size_t ji : mine) {
        std::vector<int> v;
        for (Eigen::Index r = 0; r < outputs[ji].rows(); ++r) v.push_back(argmax(outputs[ji].row(r).transpose()));
        votes.push_back(v);
      }
      std::vector<int> truth;
      for (int i : test) truth.push_back(ds.labels[static_cast<std::size_t>(i)]);
      fr.score = accuracy(majority_vote(votes, ds.class_count), truth);
    } else {
      Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(outputs[mine[0]].rows(), outputs[mine[0]].cols());
      for (std::size_t ji : mine) mean += outputs[ji];
      mean /= static_cast<double>(mine.size());
      std::vector<Eigen::VectorXd> pred, truth;
      for (std::size_t k = 0; k < test.size(); ++k) {
        pred.push_back(mean.row(static_cast<Eigen::Index>(k)).transpose());
        truth.push_back(ds.targets[static_cast<std::size_t>(test[k])]);
      }
      fr.score = mean_squared_error(pred, truth);
    }
    out.folds.push_back(fr);
  }
  for (const auto& f : out.folds) out.mean += f.score;
  out.mean /= static_cast<double>(out.folds.size());
  for (const auto& f : out.folds) out.std += (f.score - out.mean) * (f.score - out.mean);
  out.std = std::sqrt(out.std / static_cast<double>(out.folds.size()));
  return out;
}

}  // namespace legs
