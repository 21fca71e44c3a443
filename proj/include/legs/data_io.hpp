#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "legs/graph.hpp"
#include "legs/rng.hpp"
#include "legs/samplers.hpp"

namespace legs {

struct GraphDataset {
  std::string name;
  std::vector<Graph> graphs;
  std::vector<SignalMatrix> features;
  std::vector<int> labels;                // classification
  std::vector<Eigen::VectorXd> targets;   // regression
  int class_count = 0;
  std::vector<std::string> feature_spec;  // one name per channel
  std::vector<std::vector<int>> node_labels;  // raw TU node labels, empty when absent

  std::size_t size() const { return graphs.size(); }
  bool is_classification() const { return targets.empty(); }
  int channels() const { return static_cast<int>(feature_spec.size()); }
};

// ---------------------------------------------------------------------------
// Structural node features

/// Per node, the largest hop distance to a node in the same component.
inline Eigen::VectorXd eccentricity(const Graph& g) {
  const int n = g.n();
  Eigen::VectorXd ecc = Eigen::VectorXd::Zero(n);
  std::vector<int> dist(static_cast<std::size_t>(n));
  std::vector<int> queue(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), -1);
    dist[s] = 0;
    int head = 0, tail = 0, far = 0;
    queue[tail++] = s;
    while (head < tail) {
      const int v = queue[head++];
      far = std::max(far, dist[v]);
      for (int k = g.row_ptr()[v]; k < g.row_ptr()[v + 1]; ++k) {
        const int w = g.col_idx()[k];
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          queue[tail++] = w;
        }
      }
    }
    ecc[s] = far;
  }
  return ecc;
}

/// Fraction of neighbour pairs that are adjacent, on the binarized graph without self-loops.
inline Eigen::VectorXd clustering_coefficient(const Graph& g) {
  const int n = g.n();
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    const std::vector<int> nb = g.neighbors(i);
    const std::size_t d = nb.size();
    if (d < 2) continue;
    std::size_t links = 0;
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = a + 1; b < d; ++b)
        if (g.weight(nb[a], nb[b]) > 0.0) ++links;
    c[i] = 2.0 * static_cast<double>(links) / static_cast<double>(d * (d - 1));
  }
  return c;
}

inline const std::vector<std::string> kStructuralFeatures = {"eccentricity", "clustering"};

inline SignalMatrix structural_features(const Graph& g) {
  SignalMatrix x(g.n(), 2);
  x.col(0) = eccentricity(g);
  x.col(1) = clustering_coefficient(g);
  return x;
}

// ---------------------------------------------------------------------------
// TU text format

struct TuRawFiles {
  std::filesystem::path dir;
  std::string name;

  std::filesystem::path file(const std::string& suffix) const { return dir / (name + "_" + suffix + ".txt"); }
};

struct TuOptions {
  IsolatedPolicy isolated = IsolatedPolicy::Reject;
  bool one_hot_node_labels = false;
  bool structural_features = true;          // eccentricity and clustering columns first
  std::vector<std::string> attribute_names;  // names for node_attributes columns, attr_k when empty
};

namespace detail {

inline std::vector<std::string> read_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  require(static_cast<bool>(in), ErrorCode::IoError, "cannot open " + p.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().find_first_not_of(" \t") == std::string::npos) lines.pop_back();
  return lines;
}

inline std::vector<long long> parse_ints(const std::string& line, const std::filesystem::path& file, std::size_t lineno) {
  std::vector<long long> out;
  std::string tok;
  std::stringstream ss(line);
  while (std::getline(ss, tok, ',')) {
    const auto a = tok.find_first_not_of(" \t");
    const auto b = tok.find_last_not_of(" \t");
    const std::string t = a == std::string::npos ? "" : tok.substr(a, b - a + 1);
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(t, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    require(!t.empty() && used == t.size(), ErrorCode::ParseError,
            file.filename().string() + ":" + std::to_string(lineno) + ": expected an integer, got '" + t + "'");
    out.push_back(v);
  }
  return out;
}

inline std::vector<double> parse_doubles(const std::string& line, const std::filesystem::path& file,
                                         std::size_t lineno) {
  std::vector<double> out;
  std::string tok;
  std::stringstream ss(line);
  while (std::getline(ss, tok, ',')) {
    const auto a = tok.find_first_not_of(" \t");
    const auto b = tok.find_last_not_of(" \t");
    const std::string t = a == std::string::npos ? "" : tok.substr(a, b - a + 1);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(t, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    require(!t.empty() && used == t.size() && std::isfinite(v), ErrorCode::ParseError,
            file.filename().string() + ":" + std::to_string(lineno) + ": expected a number, got '" + t + "'");
    out.push_back(v);
  }
  return out;
}

/// Reads one comma-separated row of reals per line, all of equal width.
inline std::vector<std::vector<double>> read_real_rows(const std::filesystem::path& p, std::size_t expect_rows) {
  const auto lines = read_lines(p);
  const std::string f = p.filename().string();
  require(lines.size() == expect_rows, ErrorCode::InconsistentIndicator,
          f + " has " + std::to_string(lines.size()) + " lines, expected " + std::to_string(expect_rows));
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    rows.push_back(parse_doubles(lines[i], p, i + 1));
    require(rows.back().size() == rows.front().size(), ErrorCode::ParseError,
            f + ":" + std::to_string(i + 1) + ": expected " + std::to_string(rows.front().size()) + " values");
  }
  return rows;
}

}  // namespace detail

/// Reads NAME_A, NAME_graph_indicator, NAME_graph_labels and the optional NAME_node_labels
/// and NAME_node_attributes. Without graph labels, NAME_graph_attributes become regression
/// targets. Every undirected edge must be listed in both directions; self-loop lines are skipped.
inline GraphDataset parse_tu(const TuRawFiles& files, const TuOptions& opt = {}) {
  GraphDataset ds;
  ds.name = files.name;

  const auto ind_lines = detail::read_lines(files.file("graph_indicator"));
  const bool regression =
      !std::filesystem::exists(files.file("graph_labels")) && std::filesystem::exists(files.file("graph_attributes"));
  const auto lab_lines = regression ? detail::read_lines(files.file("graph_attributes"))
                                    : detail::read_lines(files.file("graph_labels"));
  const std::size_t n_graphs = lab_lines.size();
  const std::size_t n_nodes = ind_lines.size();

  std::vector<long long> raw_labels;
  for (std::size_t i = 0; i < lab_lines.size() && !regression; ++i) {
    const auto v = detail::parse_ints(lab_lines[i], files.file("graph_labels"), i + 1);
    require(v.size() == 1, ErrorCode::ParseError, "graph_labels:" + std::to_string(i + 1) + ": expected one label");
    raw_labels.push_back(v[0]);
  }

  std::vector<int> node_graph(n_nodes), node_local(n_nodes);
  std::vector<int> sizes(n_graphs, 0);
  for (std::size_t i = 0; i < n_nodes; ++i) {
    const auto v = detail::parse_ints(ind_lines[i], files.file("graph_indicator"), i + 1);
    require(v.size() == 1, ErrorCode::ParseError, "graph_indicator:" + std::to_string(i + 1) + ": expected one id");
    require(v[0] >= 1 && static_cast<std::size_t>(v[0]) <= n_graphs, ErrorCode::InconsistentIndicator,
            "node " + std::to_string(i + 1) + " assigned to graph " + std::to_string(v[0]) + " but there are " +
                std::to_string(n_graphs) + " graph labels");
    node_graph[i] = static_cast<int>(v[0] - 1);
    node_local[i] = sizes[static_cast<std::size_t>(node_graph[i])]++;
  }
  for (std::size_t gi = 0; gi < n_graphs; ++gi)
    require(sizes[gi] > 0, ErrorCode::InconsistentIndicator, "graph " + std::to_string(gi + 1) + " has no nodes");

  std::vector<std::set<std::pair<int, int>>> directed(n_graphs);
  const auto a_lines = detail::read_lines(files.file("A"));
  for (std::size_t i = 0; i < a_lines.size(); ++i) {
    const auto v = detail::parse_ints(a_lines[i], files.file("A"), i + 1);
    require(v.size() == 2, ErrorCode::ParseError, "A:" + std::to_string(i + 1) + ": expected 'i, j'");
    for (long long u : v)
      require(u >= 1 && static_cast<std::size_t>(u) <= n_nodes, ErrorCode::ParseError,
              "A:" + std::to_string(i + 1) + ": node " + std::to_string(u) + " out of range");
    const auto a = static_cast<std::size_t>(v[0] - 1), b = static_cast<std::size_t>(v[1] - 1);
    require(node_graph[a] == node_graph[b], ErrorCode::InconsistentIndicator,
            "A:" + std::to_string(i + 1) + ": edge joins nodes of different graphs");
    if (a == b) continue;
    directed[static_cast<std::size_t>(node_graph[a])].insert({node_local[a], node_local[b]});
  }

  std::vector<std::vector<int>> node_labels;
  const bool have_node_labels = std::filesystem::exists(files.file("node_labels"));
  if (have_node_labels) {
    const auto nl = detail::read_lines(files.file("node_labels"));
    require(nl.size() == n_nodes, ErrorCode::InconsistentIndicator, "node_labels has " + std::to_string(nl.size()) +
                                                                        " lines for " + std::to_string(n_nodes) + " nodes");
    node_labels.assign(n_graphs, {});
    for (std::size_t gi = 0; gi < n_graphs; ++gi) node_labels[gi].resize(static_cast<std::size_t>(sizes[gi]));
    for (std::size_t i = 0; i < n_nodes; ++i) {
      const auto v = detail::parse_ints(nl[i], files.file("node_labels"), i + 1);
      require(!v.empty(), ErrorCode::ParseError, "node_labels:" + std::to_string(i + 1) + ": empty line");
      node_labels[static_cast<std::size_t>(node_graph[i])][static_cast<std::size_t>(node_local[i])] =
          static_cast<int>(v[0]);
    }
  }

  for (std::size_t gi = 0; gi < n_graphs; ++gi) {
    std::vector<Edge> edges;
    for (const auto& [a, b] : directed[gi]) {
      require(directed[gi].count({b, a}) > 0, ErrorCode::AsymmetricEdgeList,
              "graph " + std::to_string(gi + 1) + ": edge (" + std::to_string(a) + ", " + std::to_string(b) +
                  ") has no reverse entry");
      if (a < b) edges.push_back({a, b, 1.0});
    }
    ds.graphs.push_back(build_graph(sizes[gi], edges, opt.isolated));
  }

  if (regression) {
    for (const auto& row : detail::read_real_rows(files.file("graph_attributes"), n_graphs))
      ds.targets.push_back(Eigen::Map<const Eigen::VectorXd>(row.data(), static_cast<Eigen::Index>(row.size())));
  } else {
    std::vector<long long> uniq = raw_labels;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    for (long long r : raw_labels)
      ds.labels.push_back(static_cast<int>(std::lower_bound(uniq.begin(), uniq.end(), r) - uniq.begin()));
    ds.class_count = static_cast<int>(uniq.size());
  }

  std::vector<std::vector<double>> attrs;
  if (std::filesystem::exists(files.file("node_attributes")))
    attrs = detail::read_real_rows(files.file("node_attributes"), n_nodes);
  const std::size_t n_attr = attrs.empty() ? 0 : attrs.front().size();
  require(opt.attribute_names.empty() || opt.attribute_names.size() == n_attr, ErrorCode::ParseError,
          "node_attributes has " + std::to_string(n_attr) + " columns but " +
              std::to_string(opt.attribute_names.size()) + " names were given");

  std::vector<int> node_classes;
  if (have_node_labels) {
    for (const auto& g : node_labels) node_classes.insert(node_classes.end(), g.begin(), g.end());
    std::sort(node_classes.begin(), node_classes.end());
    node_classes.erase(std::unique(node_classes.begin(), node_classes.end()), node_classes.end());
    ds.node_labels = node_labels;
  }
  if (opt.structural_features) ds.feature_spec = kStructuralFeatures;
  const Eigen::Index label_col = static_cast<Eigen::Index>(ds.feature_spec.size());
  const bool one_hot = opt.one_hot_node_labels && have_node_labels;
  if (one_hot)
    for (int c : node_classes) ds.feature_spec.push_back("node_label=" + std::to_string(c));
  const Eigen::Index attr_col = static_cast<Eigen::Index>(ds.feature_spec.size());
  for (std::size_t k = 0; k < n_attr; ++k)
    ds.feature_spec.push_back(opt.attribute_names.empty() ? "attr_" + std::to_string(k + 1) : opt.attribute_names[k]);
  require(!ds.feature_spec.empty(), ErrorCode::ConfigError, "no node features selected");
  std::vector<std::vector<std::size_t>> global(n_graphs);
  for (std::size_t i = 0; i < n_nodes; ++i) global[static_cast<std::size_t>(node_graph[i])].push_back(i);
  for (std::size_t gi = 0; gi < n_graphs; ++gi) {
    SignalMatrix x = SignalMatrix::Zero(ds.graphs[gi].n(), static_cast<Eigen::Index>(ds.feature_spec.size()));
    if (opt.structural_features) x.leftCols(2) = structural_features(ds.graphs[gi]);
    for (int v = 0; v < ds.graphs[gi].n(); ++v) {
      if (one_hot) {
        const int lab = node_labels[gi][static_cast<std::size_t>(v)];
        x(v, label_col + (std::lower_bound(node_classes.begin(), node_classes.end(), lab) - node_classes.begin())) = 1.0;
      }
      for (std::size_t k = 0; k < n_attr; ++k)
        x(v, attr_col + static_cast<Eigen::Index>(k)) = attrs[global[gi][static_cast<std::size_t>(v)]][k];
    }
    ds.features.push_back(std::move(x));
  }
  return ds;
}

/// Writes graphs, labels (as class indices) or targets, node labels when present, and every
/// feature column that is neither structural nor a node-label indicator as node attributes. Self-loop
/// entries added for isolated nodes are omitted, matching what parse_tu skips.
inline void write_tu(const GraphDataset& ds, const TuRawFiles& files) {
  std::filesystem::create_directories(files.dir);
  std::ofstream a(files.file("A")), ind(files.file("graph_indicator"));
  std::ofstream lab(files.file(ds.is_classification() ? "graph_labels" : "graph_attributes"));
  require(a && ind && lab, ErrorCode::IoError, "cannot write TU files under " + files.dir.string());
  lab << std::setprecision(17);
  long long offset = 0;
  for (std::size_t gi = 0; gi < ds.size(); ++gi) {
    const Graph& g = ds.graphs[gi];
    for (int i = 0; i < g.n(); ++i) {
      ind << gi + 1 << '\n';
      for (int k = g.row_ptr()[i]; k < g.row_ptr()[i + 1]; ++k)
        if (g.col_idx()[k] != i) a << offset + i + 1 << ", " << offset + g.col_idx()[k] + 1 << '\n';
    }
    if (ds.is_classification()) {
      lab << ds.labels[gi] << '\n';
    } else {
      const auto& t = ds.targets[gi];
      for (Eigen::Index k = 0; k < t.size(); ++k) lab << (k ? ", " : "") << t[k];
      lab << '\n';
    }
    offset += g.n();
  }
  std::vector<Eigen::Index> attr_cols;
  for (std::size_t c = 0; c < ds.feature_spec.size(); ++c) {
    const std::string& f = ds.feature_spec[c];
    const bool derived = f.rfind("node_label=", 0) == 0 ||
                         std::find(kStructuralFeatures.begin(), kStructuralFeatures.end(), f) != kStructuralFeatures.end();
    if (!derived) attr_cols.push_back(static_cast<Eigen::Index>(c));
  }
  if (!attr_cols.empty()) {
    std::ofstream na(files.file("node_attributes"));
    require(static_cast<bool>(na), ErrorCode::IoError, "cannot write node attributes");
    na << std::setprecision(17);
    for (const auto& x : ds.features)
      for (Eigen::Index v = 0; v < x.rows(); ++v) {
        for (std::size_t k = 0; k < attr_cols.size(); ++k) na << (k ? ", " : "") << x(v, attr_cols[k]);
        na << '\n';
      }
  }
  if (!ds.node_labels.empty()) {
    std::ofstream nl(files.file("node_labels"));
    require(static_cast<bool>(nl), ErrorCode::IoError, "cannot write node labels");
    for (const auto& g : ds.node_labels)
      for (int v : g) nl << v << '\n';
  }
}

inline nlohmann::json dataset_manifest(const GraphDataset& ds) {
  std::size_t nodes = 0, edges = 0;
  for (const auto& g : ds.graphs) {
    nodes += static_cast<std::size_t>(g.n());
    edges += g.edges().size();
  }
  nlohmann::json j{{"name", ds.name},
                   {"graphs", ds.size()},
                   {"nodes", nodes},
                   {"edges", edges},
                   {"average_nodes", ds.size() ? static_cast<double>(nodes) / static_cast<double>(ds.size()) : 0.0},
                   {"feature_spec", ds.feature_spec},
                   {"task", ds.is_classification() ? "classification" : "regression"}};
  if (ds.is_classification()) {
    std::vector<int> counts(static_cast<std::size_t>(ds.class_count), 0);
    for (int l : ds.labels) ++counts[static_cast<std::size_t>(l)];
    j["class_count"] = ds.class_count;
    j["class_sizes"] = counts;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Synthetic two-class datasets

enum class SyntheticKind { CycleVsTree, ErDensity, LongrangePair };

struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::CycleVsTree;
  int count = 200;
  int min_n = 16;
  int max_n = 40;
  double p1 = 0.2;  // er_density: class 0 edge probability
  double p2 = 0.5;  // er_density: class 1 edge probability
  int short_bridge = 2;
  int long_bridge = 8;
};

inline std::string to_string(SyntheticKind k) {
  switch (k) {
    case SyntheticKind::CycleVsTree: return "cycle_vs_tree";
    case SyntheticKind::ErDensity: return "er_density";
    case SyntheticKind::LongrangePair: return "longrange_pair";
  }
  return "?";
}

inline SyntheticKind synthetic_kind(const std::string& s) {
  for (auto k : {SyntheticKind::CycleVsTree, SyntheticKind::ErDensity, SyntheticKind::LongrangePair})
    if (to_string(k) == s) return k;
  fail(ErrorCode::ConfigError, "unknown synthetic kind '" + s + "'");
}

namespace detail {

/// Two connected ER communities of size k (edge probability 0.5) joined by a path with
/// `bridge` edges, with `spacer` zero-signal nodes between them in total. The signal is +1 on
/// the first community, -1 on the second, 0 on the spacer.
inline std::pair<Graph, SignalMatrix> two_communities(int k, int bridge, int spacer, Rng& rng) {
  const int n = 2 * k + spacer;
  std::vector<Edge> e;
  for (int side = 0; side < 2; ++side) {
    const int off = side * (k + spacer);
    for (const auto& x : sample::connected_er_edges(k, 0.5, rng)) e.push_back({off + x.i, off + x.j, 1.0});
  }
  const int a = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(k)));
  const int b = k + spacer + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(k)));
  int prev = a;
  for (int s = 1; s < bridge; ++s) {
    e.push_back({prev, k - 1 + s, 1.0});
    prev = k - 1 + s;
  }
  e.push_back({prev, b, 1.0});
  // Leftover spacer nodes hang off the bridge middle as a tail.
  int tail = bridge > 1 ? k - 1 + bridge / 2 : a;
  for (int s = bridge; s <= spacer; ++s) {
    e.push_back({tail, k - 1 + s, 1.0});
    tail = k - 1 + s;
  }
  SignalMatrix x = SignalMatrix::Zero(n, 1);
  x.topRows(k).setOnes();
  x.bottomRows(k).setConstant(-1.0);
  return {build_graph(n, e), x};
}

}  // namespace detail

/// Balanced two-class dataset; labels alternate 0, 1, 0, 1, ...
/// cycle_vs_tree and er_density carry [eccentricity, clustering] node features.
/// longrange_pair draws community size uniformly in [min_n/2, max_n/2] and carries the
/// community sign signal; its classes differ only in bridge length. Both classes carry the
/// same number of zero-signal spacer nodes, the short bridge keeping the rest as a tail.
inline GraphDataset gen_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  require(spec.count >= 2 && spec.count % 2 == 0, ErrorCode::InvalidSizeRange, "count must be even and positive");
  require(spec.min_n >= 4 && spec.min_n <= spec.max_n, ErrorCode::InvalidSizeRange,
          "size range [" + std::to_string(spec.min_n) + ", " + std::to_string(spec.max_n) + "] invalid (need 4 <= lo <= hi)");
  GraphDataset ds;
  ds.name = to_string(spec.kind);
  ds.class_count = 2;
  ds.feature_spec = spec.kind == SyntheticKind::LongrangePair ? std::vector<std::string>{"community_sign"}
                                                              : kStructuralFeatures;
  Rng rng = make_rng(seed, "synthetic/" + ds.name);
  for (int i = 0; i < spec.count; ++i) {
    const int label = i % 2;
    const int n = uniform_int(rng, spec.min_n, spec.max_n);
    Graph g;
    SignalMatrix x;
    switch (spec.kind) {
      case SyntheticKind::CycleVsTree:
        g = build_graph(n, label == 0 ? sample::cycle_edges(n) : sample::tree_edges(n, rng));
        break;
      case SyntheticKind::ErDensity:
        g = build_graph(n, sample::connected_er_edges(n, label == 0 ? spec.p1 : spec.p2, rng));
        break;
      case SyntheticKind::LongrangePair: {
        const int k = uniform_int(rng, std::max(2, spec.min_n / 2), std::max(2, spec.max_n / 2));
        std::tie(g, x) = detail::two_communities(k, label == 0 ? spec.short_bridge : spec.long_bridge,
                                                 std::max(spec.short_bridge, spec.long_bridge) - 1, rng);
        break;
      }
    }
    if (x.size() == 0) x = structural_features(g);
    ds.graphs.push_back(std::move(g));
    ds.features.push_back(std::move(x));
    ds.labels.push_back(label);
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Regression targets

struct WhitenStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;

  Eigen::VectorXd apply(const Eigen::VectorXd& t) const { return (t - mean).cwiseQuotient(std); }
};

/// Mean/std (population) fitted on the given rows only, applied to every target.
inline WhitenStats whiten_targets(GraphDataset& ds, const std::vector<int>& fit_rows) {
  require(!ds.targets.empty(), ErrorCode::ShapeMismatch, "dataset has no regression targets");
  require(!fit_rows.empty(), ErrorCode::EmptySplit, "no rows to fit whitening on");
  const Eigen::Index d = ds.targets.front().size();
  WhitenStats s{Eigen::VectorXd::Zero(d), Eigen::VectorXd::Zero(d)};
  for (int r : fit_rows) s.mean += ds.targets[static_cast<std::size_t>(r)];
  s.mean /= static_cast<double>(fit_rows.size());
  for (int r : fit_rows) s.std += (ds.targets[static_cast<std::size_t>(r)] - s.mean).cwiseAbs2();
  s.std = (s.std / static_cast<double>(fit_rows.size())).cwiseSqrt();
  for (Eigen::Index k = 0; k < d; ++k)
    require(s.std[k] > 0.0, ErrorCode::ZeroVarianceTarget, "target dimension " + std::to_string(k) + " is constant");
  for (auto& t : ds.targets) t = s.apply(t);
  return s;
}

inline WhitenStats whiten_targets(GraphDataset& ds) {
  std::vector<int> all(ds.targets.size());
  std::iota(all.begin(), all.end(), 0);
  return whiten_targets(ds, all);
}

}  // namespace legs
