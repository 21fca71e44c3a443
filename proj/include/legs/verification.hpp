#pragma once

#include <chrono>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "legs/autograd.hpp"
#include "legs/data_io.hpp"
#include "legs/heads.hpp"
#include "legs/samplers.hpp"
#include "legs/trainer.hpp"

namespace legs::verify {

/// Deliberate defects used to prove the suite can fail.
enum class Fault {
  None,
  FlipWaveletSign,   // negate the first wavelet response of the relaxed bank
  UnnormalizedRows,  // scale selection rows to sum to 0.9
};

inline std::string to_string(Fault f) {
  switch (f) {
    case Fault::None: return "none";
    case Fault::FlipWaveletSign: return "flip_wavelet_sign";
    case Fault::UnnormalizedRows: return "unnormalized_rows";
  }
  return "?";
}

inline Fault parse_fault(const std::string& s) {
  for (auto f : {Fault::None, Fault::FlipWaveletSign, Fault::UnnormalizedRows})
    if (to_string(f) == s) return f;
  fail(ErrorCode::ConfigError, "fault: unknown fault '" + s + "'");
}

struct SamplerSpec {
  std::vector<sample::Family> families{std::begin(sample::kAllFamilies), std::end(sample::kAllFamilies)};
  int min_n = 5;
  int max_n = 50;
  double er_p_lo = 0.2;
  double er_p_hi = 0.6;
  bool random_weights = true;
};

struct PropertySpec {
  std::string name;
  SamplerSpec sampler;
  double tolerance = 1e-10;
  int trials = 100;
  std::uint64_t seed = 0;
  int dense_cap = kDefaultDenseOracleCap;  // largest n handed to dense oracles
};

/// Every property reports a violation margin per trial; the worst must stay <= tolerance.
struct PropertyReport {
  std::string name;
  int trials = 0;
  double worst = -std::numeric_limits<double>::infinity();
  double tolerance = 0.0;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

namespace detail {

struct Trial {
  const PropertySpec& spec;
  Rng& rng;
  int index;
  Fault fault;

  Graph graph() const {
    const auto& s = spec.sampler;
    const auto fam = s.families[static_cast<std::size_t>(index) % s.families.size()];
    return sample::draw({fam, s.min_n, s.max_n, s.er_p_lo, s.er_p_hi, s.random_weights}, rng);
  }

  /// Mostly Gaussian signals, with the degree vector and the constant vector mixed in.
  SignalMatrix signal(const Graph& g, int channels = 1) const {
    switch (index % 10) {
      case 0: return g.degree().replicate(1, channels);
      case 1: return SignalMatrix::Ones(g.n(), channels);
      default: return sample::gaussian_signal(g.n(), channels, rng);
    }
  }
};

inline double rel_inf(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

inline ScaleSequence random_scales(Rng& rng, int max_m) {
  const int m = uniform_int(rng, 2, max_m);
  const int J = uniform_int(rng, 1, std::min(5, m));
  std::vector<int> cols(static_cast<std::size_t>(m));
  std::iota(cols.begin(), cols.end(), 1);
  shuffle(cols, rng);
  std::vector<int> s(cols.begin(), cols.begin() + J);
  std::sort(s.begin(), s.end());
  return make_scales(s, m);
}

inline SelectionMatrix faulty(SelectionMatrix s, Fault f) {
  if (f == Fault::UnnormalizedRows) s.F *= 0.9;
  return s;
}

inline FilterResponses faulty(FilterResponses r, Fault f) {
  if (f == Fault::FlipWaveletSign && !r.psi.empty()) r.psi[0] = -r.psi[0];
  return r;
}

/// Floyd-Warshall hop distances, row maxima over reachable nodes.
inline Eigen::VectorXd reference_eccentricity(const Graph& g) {
  const int n = g.n();
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd d = Eigen::MatrixXd::Constant(n, n, inf);
  for (int i = 0; i < n; ++i) d(i, i) = 0.0;
  for (const auto& e : g.edges())
    if (e.i != e.j) d(e.i, e.j) = d(e.j, e.i) = 1.0;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) d(i, j) = std::min(d(i, j), d(i, k) + d(k, j));
  Eigen::VectorXd ecc = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (std::isfinite(d(i, j))) ecc[i] = std::max(ecc[i], d(i, j));
  return ecc;
}

/// Triangles through each node counted over all node triples.
inline Eigen::VectorXd reference_clustering(const Graph& g) {
  const int n = g.n();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : g.edges())
    if (e.i != e.j) a(e.i, e.j) = a(e.j, e.i) = 1.0;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    const double deg = a.row(i).sum();
    if (deg < 2) continue;
    double links = 0;
    for (int j = 0; j < n; ++j)
      for (int k = j + 1; k < n; ++k) links += a(i, j) * a(i, k) * a(j, k);
    c[i] = 2.0 * links / (deg * (deg - 1.0));
  }
  return c;
}

inline bool near_kink(const ScatteringCache& c) {
  for (const auto& node : c.nodes)
    if (node.u.cwiseAbs().minCoeff() < 1e-6) return true;
  return c.expansions[0].responses.phi.cwiseAbs().minCoeff() < 1e-6;
}

inline bool near_tie(const Eigen::MatrixXd& theta) {
  for (Eigen::Index r = 0; r < theta.rows(); ++r) {
    Eigen::RowVectorXd row = theta.row(r);
    std::sort(row.data(), row.data() + row.size());
    if (row[row.size() - 1] - row[row.size() - 2] < 1e-3) return true;
  }
  return false;
}

inline Eigen::MatrixXd gaussian_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = standard_normal(rng);
  return m;
}

using Check = std::function<double(const Trial&)>;

inline double mass_conservation(const Trial& t) {
  const Graph g = t.graph();
  const SignalMatrix x = t.signal(g, 2);
  const SignalMatrix px = lazy_step(g, uniform(t.rng, 0.05, 0.95), x);
  return rel_inf(px.colwise().sum(), x.colwise().sum());
}

inline double degree_fixed_point(const Trial& t) {
  const Graph g = t.graph();
  return rel_inf(lazy_step(g, uniform(t.rng, 0.05, 0.95), g.degree()), g.degree());
}

inline double dense_oracle_cascade(const Trial& t) {
  const Graph g = t.graph();
  const SignalMatrix x = t.signal(g, 2);
  const double alpha = uniform(t.rng, 0.05, 0.95);
  const int m = uniform_int(t.rng, 1, 16);
  const auto c = diffusion_cascade(g, alpha, x, m);
  const Eigen::MatrixXd p = dense_diffusion(g, alpha, t.spec.dense_cap);
  Eigen::MatrixXd pk = Eigen::MatrixXd::Identity(g.n(), g.n());
  double worst = 0.0;
  for (int k = 0; k <= m; ++k) {
    worst = std::max(worst, rel_inf(c.at(k), pk * x));
    pk = p * pk;
  }
  return worst;
}

inline double telescoping_fixed(const Trial& t) {
  const Graph g = t.graph();
  const SignalMatrix x = t.signal(g, 2);
  const auto scales = random_scales(t.rng, 16);
  const auto r = faulty(apply_bank(g, 0.5, scales, x), t.fault);
  return rel_inf(r.sum(), x);
}

inline double telescoping_legs(const Trial& t) {
  const Graph g = t.graph();
  const SignalMatrix x = t.signal(g, 2);
  const int m = uniform_int(t.rng, 1, 16);
  const int J = uniform_int(t.rng, 1, std::min(5, m));
  const auto sel = faulty(selection_matrix(init_theta(J, m, ThetaInit::Random, t.rng())), t.fault);
  const auto r = faulty(legs_apply(sel, diffusion_cascade(g, 0.5, x, m)), t.fault);
  return rel_inf(r.sum(), x);
}

/// max(C ||x||^2 - energy, energy - ||x||^2): positive means a bound is broken.
inline double frame_bounds(const Trial& t) {
  const Graph g = t.graph();
  const SignalMatrix x = t.signal(g);
  const auto scales = random_scales(t.rng, 16);
  const auto e = frame_energy(g, faulty(apply_bank(g, 0.5, scales, x), t.fault), x);
  const double c = frame_lower_constant(scales.first(), scales.last());
  return std::max(c * e.input_norm_sq - e.energy, e.energy - e.input_norm_sq);
}

inline Bank random_bank(Rng& rng, int J, int m, int index) {
  if (index % 2) return Bank(selection_matrix(init_theta(J, m, ThetaInit::Random, rng())));
  return Bank(dyadic_scales(J - 1, m));
}

inline double permutation_node(const Trial& t) {
  const Graph g = t.graph();
  const SignalMatrix x = t.signal(g, 2);
  const auto pi = sample::permutation(g.n(), t.rng);
  const Graph gp = sample::permute(g, pi);
  const SignalMatrix xp = sample::permute_rows(x, pi);
  const Bank bank = random_bank(t.rng, 4, 16, t.index);
  double worst = 0.0;
  for (const auto& p : enumerate_paths(4, 2, PathRule::Increasing))
    worst = std::max(worst, rel_inf(scatter_nodes(gp, 0.5, bank, p, xp),
                                    sample::permute_rows(scatter_nodes(g, 0.5, bank, p, x), pi)));
  return worst;
}

inline double permutation_graph(const Trial& t) {
  const Graph g = t.graph();
  const SignalMatrix x = t.signal(g, 2);
  const auto pi = sample::permutation(g.n(), t.rng);
  const Bank bank = random_bank(t.rng, 4, 16, t.index);
  const ScatteringConfig cfg;
  const auto a = transform(g, x, bank, cfg).values;
  const auto b = transform(sample::permute(g, pi), sample::permute_rows(x, pi), bank, cfg).values;
  return ((a - b).array().abs() / a.array().abs().max(1.0)).maxCoeff();
}

inline double one_hot_reduction(const Trial& t) {
  const Graph g = t.graph();
  const SignalMatrix x = t.signal(g, 2);
  const auto scales = random_scales(t.rng, 16);
  const auto cascade = diffusion_cascade(g, 0.5, x, scales.m);
  const auto fixed = apply_bank(cascade, scales);
  const auto relaxed = faulty(legs_apply(faulty(one_hot_selection(scales), t.fault), cascade), t.fault);
  double worst = rel_inf(relaxed.phi, fixed.phi);
  for (int k = 0; k < fixed.wavelet_count(); ++k) worst = std::max(worst, rel_inf(relaxed.psi[k], fixed.psi[k]));
  return worst;
}

/// Worst weighted energy ratio minus one.
inline double nonexpansive(const Trial& t) {
  const Graph g = t.graph();
  const int m = uniform_int(t.rng, 4, 16);
  const int J = uniform_int(t.rng, 1, std::min(4, m));
  const auto sel = sample::ordered_support_selection(J, m, t.rng);
  if (!has_ordered_disjoint_support(sel.F)) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (int k = 0; k < 3; ++k) {
    const SignalMatrix x = t.signal(g);
    const double nx = weighted_norm_sq(g, x);
    const auto e = frame_energy(g, faulty(legs_apply(faulty(sel, t.fault), diffusion_cascade(g, 0.5, x, m)), t.fault), x);
    worst = std::max(worst, e.energy / nx - 1.0);
  }
  return worst;
}

inline double softmax_row_sums(const Trial& t) {
  const int m = uniform_int(t.rng, 2, 16);
  Eigen::RowVectorXd th(m);
  for (int k = 0; k < m; ++k) th[k] = 3.0 * standard_normal(t.rng);
  return softmax_row_jacobian(th).rowwise().sum().cwiseAbs().maxCoeff();
}

inline double fd_softmax(const Trial& t) {
  const int m = 8;
  Eigen::RowVectorXd th(m);
  for (int k = 0; k < m; ++k) th[k] = standard_normal(t.rng);
  const Eigen::MatrixXd jac = softmax_row_jacobian(th);
  double worst = 0.0;
  for (int r = 0; r < m; ++r) {
    auto f = [&](const Eigen::VectorXd& p) { return softmax(p.transpose())[r]; };
    worst = std::max(worst, fd_check(f, th.transpose(), jac.row(r).transpose(), 1e-5));
  }
  return worst;
}

/// Analytic d(loss)/d(theta) vs central differences, away from |.| kinks and argmax ties.
inline double fd_theta(const Trial& t) {
  for (;;) {
    const Graph g = sample::draw({sample::kAllFamilies[uniform_index(t.rng, 4)], 5, 12, 0.3, 0.6, true}, t.rng);
    const int m = uniform_int(t.rng, 4, 8);
    const int J = uniform_int(t.rng, 2, 4);
    ScatteringConfig cfg;
    cfg.J = J;
    cfg.m = m;
    cfg.order = uniform_int(t.rng, 1, 3);
    cfg.q_max = 4;
    const SignalMatrix x = sample::gaussian_signal(g.n(), 2, t.rng);
    const SelectionParams params = init_theta(J, m, ThetaInit::Random, t.rng());
    if (near_tie(params.theta)) continue;
    const auto f = transform(g, x, Bank(selection_matrix(params)), cfg, true);
    if (near_kink(*f.cache)) continue;
    Eigen::VectorXd w(f.values.size());
    for (Eigen::Index k = 0; k < w.size(); ++k) w[k] = standard_normal(t.rng);
    const Eigen::MatrixXd d = backward_theta(f.cache.get(), w, params);
    auto loss = [&](const Eigen::VectorXd& p) {
      SelectionParams q{Eigen::Map<const Eigen::MatrixXd>(p.data(), J, m)};
      return w.dot(transform(g, x, Bank(selection_matrix(q)), cfg).values);
    };
    return fd_check(loss, Eigen::Map<const Eigen::VectorXd>(params.theta.data(), params.theta.size()),
                    Eigen::Map<const Eigen::VectorXd>(d.data(), d.size()), 1e-5);
  }
}

/// FCN parameters and inputs, RBF parameters (batch norm, anchors, readout) in eval and
/// train mode, and the cross-entropy adjoint.
inline double fd_heads(const Trial& t) {
  Rng& rng = t.rng;
  double worst = 0.0;
  {
    const FcnHead h = make_fcn_head(6, 3, 8, rng());
    const Eigen::VectorXd x = gaussian_matrix(6, 1, rng).col(0);
    const int label = static_cast<int>(uniform_index(rng, 3));
    FcnCache c;
    const auto lv = cross_entropy(fcn_forward(h, x, &c), label);
    FcnHead grad = zeros_like(h);
    const Eigen::VectorXd dx = fcn_backward(h, c, lv.d_logits, grad);
    auto fp = [&](const Eigen::VectorXd& p) {
      FcnHead q = h;
      unpack_params(q, p);
      return cross_entropy(fcn_forward(q, x), label).value;
    };
    worst = std::max(worst, fd_check(fp, pack_params(h), pack_params(grad), 1e-5));
    auto fx = [&](const Eigen::VectorXd& xx) { return cross_entropy(fcn_forward(h, xx), label).value; };
    worst = std::max(worst, fd_check(fx, x, dx, 1e-5));
  }
  for (Mode mode : {Mode::Eval, Mode::Train}) {
   for (int attempt = 0;; ++attempt) {
    RbfHead h = make_rbf_head(4, 3, 6, rng());
    const Eigen::MatrixXd batch = gaussian_matrix(10, 4, rng);
    rbf_init_anchors(h, batch, rng());
    // |gamma| >= 0.5 and inputs near the anchors keep every adjoint above FD roundoff.
    for (Eigen::Index k = 0; k < 4; ++k) h.bn.gamma[k] = (0.5 + 0.5 * uniform01(rng)) * (uniform01(rng) < 0.5 ? -1 : 1);
    h.bn.beta = gaussian_matrix(4, 1, rng).col(0) * 0.1;
    h.bn.running_mean = batch.colwise().mean().transpose() + gaussian_matrix(4, 1, rng).col(0) * 0.1;
    h.bn.running_var = Eigen::VectorXd::Ones(4) + gaussian_matrix(4, 1, rng).col(0) * 0.1;
    const Eigen::MatrixXd x = batch + gaussian_matrix(10, 4, rng) * 0.2;
    auto total = [&](RbfHead& hh, const Eigen::MatrixXd& xx, RbfCache* c, Eigen::MatrixXd* dl) {
      const Eigen::MatrixXd logits = rbf_forward_batch(hh, xx, mode, c, false);
      double v = 0.0;
      if (dl) dl->resize(logits.rows(), logits.cols());
      for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const auto lv = cross_entropy(logits.row(i).transpose(), static_cast<int>(i % 3));
        v += lv.value;
        if (dl) dl->row(i) = lv.d_logits.transpose();
      }
      return v;
    };
    RbfCache c;
    Eigen::MatrixXd dl;
    total(h, x, &c, &dl);
    RbfHead grad = zeros_like(h);
    const Eigen::MatrixXd dx = rbf_backward_batch(h, c, dl, grad);
    // Redraw when an adjoint sits within 1e4 of central-difference roundoff (~1e-10 here).
    if (attempt < 20 && (pack_params(grad).cwiseAbs().minCoeff() < 1e-6 || dx.cwiseAbs().minCoeff() < 1e-6)) continue;
    auto fp = [&](const Eigen::VectorXd& p) {
      RbfHead q = h;
      unpack_params(q, p);
      return total(q, x, nullptr, nullptr);
    };
    worst = std::max(worst, fd_check(fp, pack_params(h), pack_params(grad), 1e-5));
    auto fx = [&](const Eigen::VectorXd& p) {
      RbfHead q = h;
      return total(q, Eigen::Map<const Eigen::MatrixXd>(p.data(), x.rows(), x.cols()), nullptr, nullptr);
    };
    worst = std::max(worst, fd_check(fx, Eigen::Map<const Eigen::VectorXd>(x.data(), x.size()),
                                     Eigen::Map<const Eigen::VectorXd>(dx.data(), dx.size()), 1e-5));
    break;
   }
  }
  return worst;
}

/// Closed-form dP^t/dW_ab against central differences of P^t with D frozen.
inline double fd_power_derivative(const Trial& t) {
  const Graph g = sample::draw({sample::kAllFamilies[uniform_index(t.rng, 4)], 4, 10, 0.3, 0.6, true}, t.rng);
  const double alpha = 0.5;
  const Eigen::MatrixXd p = dense_diffusion(g, alpha, t.spec.dense_cap);
  const int power = uniform_int(t.rng, 1, 5);
  const auto& e = g.edges()[uniform_index(t.rng, g.edges().size())];
  const bool flip = uniform01(t.rng) < 0.5;
  const int a = flip ? e.j : e.i, b = flip ? e.i : e.j;
  const Eigen::MatrixXd analytic = frozen_degree_power_derivative(p, g.inv_degree(), power, a, b);
  const double h = 1e-6;
  Eigen::MatrixXd bump = Eigen::MatrixXd::Zero(g.n(), g.n());
  bump(a, b) = h * g.inv_degree()[b];
  Eigen::MatrixXd up = Eigen::MatrixXd::Identity(g.n(), g.n()), down = up;
  for (int k = 0; k < power; ++k) {
    up = (p + bump) * up;
    down = (p - bump) * down;
  }
  const Eigen::MatrixXd fd = (up - down) / (2 * h);
  return (analytic - fd).cwiseAbs().maxCoeff() / std::max(analytic.cwiseAbs().maxCoeff(), 1e-12);
}

inline double eccentricity_oracle(const Trial& t) {
  const Graph g = t.graph();
  return (eccentricity(g) - reference_eccentricity(g)).cwiseAbs().maxCoeff();
}

inline double clustering_oracle(const Trial& t) {
  const Graph g = t.graph();
  return (clustering_coefficient(g) - reference_clustering(g)).cwiseAbs().maxCoeff();
}

struct Entry {
  Check check;
  PropertySpec defaults;
};

inline const std::map<std::string, Entry>& registry() {
  static const std::map<std::string, Entry> r = [] {
    std::map<std::string, Entry> m;
    auto add = [&](const std::string& name, Check c, double tol, int trials, SamplerSpec s = {}) {
      m[name] = Entry{std::move(c), PropertySpec{name, std::move(s), tol, trials, 0}};
    };
    SamplerSpec small;
    small.max_n = 30;
    SamplerSpec unweighted;
    unweighted.random_weights = false;
    add("mass_conservation", mass_conservation, 1e-12, 200);
    add("degree_fixed_point", degree_fixed_point, 1e-12, 200);
    add("dense_oracle_cascade", dense_oracle_cascade, 1e-10, 200);
    add("telescoping_fixed", telescoping_fixed, 1e-10, 200);
    add("telescoping_legs", telescoping_legs, 1e-10, 200);
    add("frame_bounds", frame_bounds, 1e-9, 1000);
    add("permutation_node", permutation_node, 1e-10, 200, small);
    add("permutation_graph", permutation_graph, 1e-10, 200, small);
    add("one_hot_reduction", one_hot_reduction, 1e-12, 200);
    add("nonexpansive", nonexpansive, 1e-10, 1000);
    add("softmax_row_sums", softmax_row_sums, 1e-14, 200);
    add("fd_softmax", fd_softmax, 1e-8, 100);
    add("fd_theta", fd_theta, 1e-4, 100);
    add("fd_heads", fd_heads, 1e-4, 100);
    add("fd_power_derivative", fd_power_derivative, 1e-6, 100);
    add("eccentricity_oracle", eccentricity_oracle, 1e-12, 200, unweighted);
    SamplerSpec clus = unweighted;
    clus.max_n = 30;
    add("clustering_oracle", clustering_oracle, 1e-12, 200, clus);
    return m;
  }();
  return r;
}

}  // namespace detail

/// Names of every registered property, in registry order.
inline std::vector<std::string> property_names() {
  std::vector<std::string> out;
  for (const auto& [name, _] : detail::registry()) out.push_back(name);
  return out;
}

inline PropertySpec default_spec(const std::string& name) {
  const auto it = detail::registry().find(name);
  require(it != detail::registry().end(), ErrorCode::ConfigError, "unknown property '" + name + "'");
  return it->second.defaults;
}

inline PropertyReport run_property(const PropertySpec& spec, Fault fault = Fault::None) {
  PropertyReport rep;
  rep.name = spec.name;
  rep.tolerance = spec.tolerance;
  const auto t0 = std::chrono::steady_clock::now();
  const auto it = detail::registry().find(spec.name);
  if (it == detail::registry().end()) {
    rep.detail = "unknown property";
    return rep;
  }
  if (!(spec.tolerance > 0.0) || spec.trials < 100) {
    rep.detail = "invalid spec: need tolerance > 0 and at least 100 trials";
    return rep;
  }
  Rng rng = make_rng(spec.seed, "property/" + spec.name);
  int worst_trial = -1;
  for (int k = 0; k < spec.trials; ++k) {
    double v = 0.0;
    try {
      v = it->second.check(detail::Trial{spec, rng, k, fault});
    } catch (const std::exception& e) {
      rep.detail = "trial " + std::to_string(k) + " threw: " + e.what();
      rep.worst = std::numeric_limits<double>::infinity();
      rep.trials = k + 1;
      rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      return rep;
    }
    if (!(v <= rep.worst)) {
      rep.worst = std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
      worst_trial = k;
    }
    ++rep.trials;
  }
  rep.pass = rep.worst <= spec.tolerance;
  rep.detail = "worst at trial " + std::to_string(worst_trial);
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

inline std::vector<PropertyReport> run_suite(const std::vector<PropertySpec>& specs, Fault fault, int threads = 1) {
  std::vector<PropertyReport> out(specs.size());
  parallel_for(specs.size(), threads, [&](std::size_t i) { out[i] = run_property(specs[i], fault); });
  return out;
}

/// Runs the named properties (all when empty) with their default specs.
inline std::vector<PropertyReport> run_suite(const std::vector<std::string>& names, std::uint64_t seed, Fault fault,
                                             int threads = 1) {
  std::vector<PropertySpec> specs;
  for (const auto& n : names.empty() ? property_names() : names) {
    PropertySpec s = default_spec(n);
    s.seed = seed;
    specs.push_back(s);
  }
  return run_suite(specs, fault, threads);
}

}  // namespace legs::verify
