#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "legs/data_io.hpp"
#include "oracles.hpp"

using namespace legs;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  fs::path p = fs::temp_directory_path() / "legs_tests" / (std::string(info->test_suite_name()) + "_" + info->name());
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_file(const fs::path& p, const std::string& body) { std::ofstream(p) << body; }

TuRawFiles write_raw(const fs::path& dir, const std::string& a, const std::string& ind, const std::string& lab) {
  write_file(dir / "T_A.txt", a);
  write_file(dir / "T_graph_indicator.txt", ind);
  write_file(dir / "T_graph_labels.txt", lab);
  return {dir, "T"};
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::ConfigError;
}

void expect_same(const GraphDataset& a, const GraphDataset& b) {
  ASSERT_EQ(a.size(), b.size());
  EXPECT_EQ(a.labels, b.labels);
  ASSERT_EQ(a.targets.size(), b.targets.size());
  for (std::size_t i = 0; i < a.targets.size(); ++i) EXPECT_EQ(a.targets[i], b.targets[i]);
  EXPECT_EQ(a.class_count, b.class_count);
  EXPECT_EQ(a.feature_spec, b.feature_spec);
  EXPECT_EQ(a.node_labels, b.node_labels);
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a.graphs[i].n(), b.graphs[i].n());
    EXPECT_EQ(a.graphs[i].row_ptr(), b.graphs[i].row_ptr());
    EXPECT_EQ(a.graphs[i].col_idx(), b.graphs[i].col_idx());
    EXPECT_EQ(a.graphs[i].weights(), b.graphs[i].weights());
    EXPECT_EQ(a.features[i], b.features[i]);
  }
}

}  // namespace

TEST(Eccentricity, Examples) {
  EXPECT_EQ(eccentricity(build_graph(2, {{0, 1, 1.0}})), Eigen::Vector2d(1, 1));
  EXPECT_EQ(eccentricity(build_graph(3, sample::path_edges(3))), Eigen::Vector3d(2, 1, 2));
  // Two components: a path of 3 and an edge.
  const Graph g = build_graph(5, {{0, 1, 1.0}, {1, 2, 1.0}, {3, 4, 1.0}});
  Eigen::VectorXd expect(5);
  expect << 2, 1, 2, 1, 1;
  EXPECT_EQ(eccentricity(g), expect);
}

TEST(Eccentricity, MatchesAllPairsOracle) {
  Rng rng(1);
  for (int trial = 0; trial < 60; ++trial) {
    const Graph g = sample::draw({sample::kAllFamilies[trial % 4], 5, 50, 0.05, 0.3, trial % 3 == 0}, rng);
    const auto ref = oracle::eccentricity(g);
    const Eigen::VectorXd ecc = eccentricity(g);
    for (int i = 0; i < g.n(); ++i) ASSERT_EQ(ecc[i], ref[static_cast<std::size_t>(i)]);
  }
}

TEST(Clustering, Examples) {
  EXPECT_EQ(clustering_coefficient(build_graph(3, sample::cycle_edges(3))), Eigen::Vector3d::Ones());
  const Graph star = build_graph(4, {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}});
  EXPECT_EQ(clustering_coefficient(star), Eigen::Vector4d::Zero());
  // Weighted edges count as links.
  const Graph w = build_graph(3, {{0, 1, 0.2}, {1, 2, 5.0}, {0, 2, 1.5}});
  EXPECT_EQ(clustering_coefficient(w), Eigen::Vector3d::Ones());
}

TEST(Clustering, MatchesBruteForceOracle) {
  Rng rng(2);
  for (int trial = 0; trial < 60; ++trial) {
    const Graph g = sample::draw({sample::kAllFamilies[trial % 4], 5, 30, 0.2, 0.6, true}, rng);
    const auto ref = oracle::clustering(g);
    const Eigen::VectorXd c = clustering_coefficient(g);
    for (int i = 0; i < g.n(); ++i) {
      ASSERT_NEAR(c[i], ref[static_cast<std::size_t>(i)], 1e-15);
      ASSERT_GE(c[i], 0.0);
      ASSERT_LE(c[i], 1.0);
    }
  }
}

TEST(ParseTu, K2) {
  const auto files = write_raw(scratch_dir(), "1, 2\n2, 1\n", "1\n1\n", "5\n");
  const GraphDataset ds = parse_tu(files);
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds.graphs[0].n(), 2);
  EXPECT_EQ(ds.graphs[0].weight(0, 1), 1.0);
  EXPECT_EQ(ds.labels, std::vector<int>{0});
  EXPECT_EQ(ds.class_count, 1);
  EXPECT_EQ(ds.features[0].col(0), Eigen::Vector2d(1, 1));
}

TEST(ParseTu, LabelRemapAndNodeLabels) {
  const fs::path dir = scratch_dir();
  const auto files = write_raw(dir, "1,2\n2,1\n2,3\n3,2\n4,5\n5,4\n", "1\n1\n1\n2\n2\n", "-1\n7\n");
  write_file(dir / "T_node_labels.txt", "3\n0\n3\n5\n0\n");
  const GraphDataset ds = parse_tu(files, {IsolatedPolicy::Reject, true});
  EXPECT_EQ(ds.labels, (std::vector<int>{0, 1}));
  EXPECT_EQ(ds.feature_spec,
            (std::vector<std::string>{"eccentricity", "clustering", "node_label=0", "node_label=3", "node_label=5"}));
  ASSERT_EQ(ds.features[1].cols(), 5);
  EXPECT_EQ(ds.features[1].row(0).tail(3), Eigen::RowVector3d(0, 0, 1));
  EXPECT_EQ(ds.features[0].row(1).tail(3), Eigen::RowVector3d(1, 0, 0));
}

TEST(ParseTu, Errors) {
  const fs::path dir = scratch_dir();
  EXPECT_EQ(code_of([&] { parse_tu(write_raw(dir, "1, 2\n2, 1\n", "1\n3\n", "0\n")); }),
            ErrorCode::InconsistentIndicator);
  EXPECT_EQ(code_of([&] { parse_tu(write_raw(dir, "1, 2\n", "1\n1\n", "0\n")); }), ErrorCode::AsymmetricEdgeList);
  EXPECT_EQ(code_of([&] { parse_tu(write_raw(dir, "1, 2\n2; 1\n", "1\n1\n", "0\n")); }), ErrorCode::ParseError);
  try {
    parse_tu(write_raw(dir, "1, 2\n2, x\n", "1\n1\n", "0\n"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("A.txt:2"), std::string::npos) << e.what();
  }
  EXPECT_EQ(code_of([&] { parse_tu(write_raw(dir, "1, 2\n2, 1\n", "1\n2\n", "0\n0\n")); }),
            ErrorCode::InconsistentIndicator);
  EXPECT_EQ(code_of([&] { parse_tu(TuRawFiles{dir / "missing", "T"}); }), ErrorCode::IoError);
  EXPECT_EQ(code_of([&] { parse_tu(write_raw(dir, "1, 2\n2, 1\n", "1\n1\n1\n", "0\n")); }), ErrorCode::IsolatedNode);
  const auto ok = parse_tu(write_raw(dir, "1, 2\n2, 1\n3, 3\n", "1\n1\n1\n", "0\n"), {IsolatedPolicy::SelfLoop});
  EXPECT_EQ(ok.graphs[0].weight(2, 2), 1.0);
}

TEST(ParseTu, RoundTrip) {
  const fs::path dir = scratch_dir();
  for (auto kind : {SyntheticKind::CycleVsTree, SyntheticKind::ErDensity}) {
    SyntheticSpec spec;
    spec.kind = kind;
    spec.count = 12;
    spec.min_n = 6;
    spec.max_n = 14;
    GraphDataset ds = gen_synthetic(spec, 5);
    ds.name = "R";
    ds.node_labels.clear();
    for (const auto& g : ds.graphs) ds.node_labels.emplace_back(static_cast<std::size_t>(g.n()), 2);
    write_tu(ds, {dir, "R"});
    GraphDataset back = parse_tu({dir, "R"});
    back.node_labels = ds.node_labels;
    expect_same(ds, back);
    write_tu(back, {dir / "again", "R"});
    expect_same(back, parse_tu({dir / "again", "R"}));
  }
}

TEST(ParseTu, AttributesAndTargetsRoundTrip) {
  const fs::path dir = scratch_dir();
  SyntheticSpec spec;
  spec.kind = SyntheticKind::LongrangePair;
  spec.count = 6;
  GraphDataset ds = gen_synthetic(spec, 8);
  ds.name = "L";
  write_tu(ds, {dir, "L"});
  TuOptions opt;
  opt.structural_features = false;
  opt.attribute_names = {"community_sign"};
  expect_same(ds, parse_tu({dir, "L"}, opt));

  // Regression: targets with full precision, attributes after the structural columns.
  ds.labels.clear();
  ds.class_count = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) ds.targets.push_back(Eigen::Vector2d(0.1 * static_cast<double>(i), 1.0 / 3.0));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    SignalMatrix x(ds.features[i].rows(), 3);
    x << structural_features(ds.graphs[i]), ds.features[i];
    ds.features[i] = x;
  }
  ds.feature_spec = {"eccentricity", "clustering", "attr_1"};
  write_tu(ds, {dir / "reg", "L"});
  const GraphDataset back = parse_tu({dir / "reg", "L"});
  EXPECT_FALSE(back.is_classification());
  expect_same(ds, back);
}

TEST(ParseTu, AttributeErrors) {
  const fs::path dir = scratch_dir();
  const auto files = write_raw(dir, "1, 2\n2, 1\n", "1\n1\n", "0\n");
  write_file(dir / "T_node_attributes.txt", "0.5, 1\n2\n");
  EXPECT_EQ(code_of([&] { parse_tu(files); }), ErrorCode::ParseError);
  write_file(dir / "T_node_attributes.txt", "0.5\n");
  EXPECT_EQ(code_of([&] { parse_tu(files); }), ErrorCode::InconsistentIndicator);
  write_file(dir / "T_node_attributes.txt", "0.5\n-2e-1\n");
  const auto ds = parse_tu(files);
  EXPECT_EQ(ds.feature_spec, (std::vector<std::string>{"eccentricity", "clustering", "attr_1"}));
  EXPECT_EQ(ds.features[0](1, 2), -0.2);
  TuOptions opt;
  opt.attribute_names = {"a", "b"};
  EXPECT_EQ(code_of([&] { parse_tu(files, opt); }), ErrorCode::ParseError);
}

TEST(ParseTu, PublicDatasetStatisticsWhenAvailable) {
  // MUTAG: 188 graphs, 17.93 nodes on average, classes 63/125.
  const char* env = std::getenv("LEGS_MUTAG_DIR");
  const fs::path dir = env ? fs::path(env) : fs::path("data/MUTAG");
  if (!fs::exists(dir / "MUTAG_A.txt")) GTEST_SKIP() << "MUTAG raw files not present";
  const GraphDataset ds = parse_tu({dir, "MUTAG"});
  EXPECT_EQ(ds.size(), 188u);
  const auto m = dataset_manifest(ds);
  EXPECT_NEAR(m["average_nodes"].get<double>(), 17.93, 0.01);
  EXPECT_EQ(m["class_sizes"], (std::vector<int>{63, 125}));
}

TEST(GenSynthetic, CycleAndTreeShapes) {
  SyntheticSpec spec;
  spec.count = 40;
  spec.min_n = 6;
  spec.max_n = 6;
  const GraphDataset ds = gen_synthetic(spec, 3);
  int c0 = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Graph& g = ds.graphs[i];
    if (ds.labels[i] == 0) {
      ++c0;
      EXPECT_EQ(g.degree(), Eigen::VectorXd::Constant(6, 2.0));
      EXPECT_EQ(clustering_coefficient(g), Eigen::VectorXd::Zero(6));
    } else {
      EXPECT_EQ(g.edges().size(), 5u);  // connected with n - 1 edges, hence acyclic
    }
  }
  EXPECT_EQ(c0, 20);
}

TEST(GenSynthetic, DeterministicAndBalanced) {
  for (auto kind : {SyntheticKind::CycleVsTree, SyntheticKind::ErDensity, SyntheticKind::LongrangePair}) {
    SyntheticSpec spec;
    spec.kind = kind;
    spec.count = 20;
    const auto a = gen_synthetic(spec, 11);
    const auto b = gen_synthetic(spec, 11);
    expect_same(a, b);
    EXPECT_EQ(std::count(a.labels.begin(), a.labels.end(), 1), 10);
    const auto c = gen_synthetic(spec, 12);
    bool differs = false;
    for (std::size_t i = 0; i < a.size() && !differs; ++i)
      differs = a.graphs[i].n() != c.graphs[i].n() || a.graphs[i].col_idx() != c.graphs[i].col_idx();
    EXPECT_TRUE(differs);
  }
}

TEST(GenSynthetic, LongrangeBridgeLengths) {
  SyntheticSpec spec;
  spec.kind = SyntheticKind::LongrangePair;
  spec.count = 10;
  const auto ds = gen_synthetic(spec, 4);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const SignalMatrix& x = ds.features[i];
    const int k = static_cast<int>((x.array() > 0).count());
    const int bridge = ds.labels[i] == 0 ? spec.short_bridge : spec.long_bridge;
    // Same node count in both classes; only the hop distance between communities differs.
    const Graph& g = ds.graphs[i];
    EXPECT_EQ(g.n(), 2 * k + spec.long_bridge - 1);
    EXPECT_EQ((x.array() < 0).count(), k);
    EXPECT_EQ(x.sum(), 0.0);
    std::vector<int> dist(static_cast<std::size_t>(g.n()), -1);
    std::vector<int> queue;
    for (int v = 0; v < g.n(); ++v)
      if (x(v, 0) > 0) {
        dist[static_cast<std::size_t>(v)] = 0;
        queue.push_back(v);
      }
    for (std::size_t h = 0; h < queue.size(); ++h)
      for (int p = g.row_ptr()[queue[h]]; p < g.row_ptr()[queue[h] + 1]; ++p) {
        const int w = g.col_idx()[p];
        if (dist[static_cast<std::size_t>(w)] < 0) {
          dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(queue[h])] + 1;
          queue.push_back(w);
        }
      }
    int gap = g.n();
    for (int v = 0; v < g.n(); ++v)
      if (x(v, 0) < 0) gap = std::min(gap, dist[static_cast<std::size_t>(v)]);
    EXPECT_EQ(gap, bridge);
  }
}

TEST(GenSynthetic, Errors) {
  SyntheticSpec spec;
  spec.count = 7;
  EXPECT_EQ(code_of([&] { gen_synthetic(spec, 1); }), ErrorCode::InvalidSizeRange);
  spec.count = 8;
  spec.min_n = 3;
  EXPECT_EQ(code_of([&] { gen_synthetic(spec, 1); }), ErrorCode::InvalidSizeRange);
  spec.min_n = 10;
  spec.max_n = 9;
  EXPECT_EQ(code_of([&] { gen_synthetic(spec, 1); }), ErrorCode::InvalidSizeRange);
}

TEST(WhitenTargets, Examples) {
  GraphDataset ds;
  for (double t : {1.0, 2.0, 3.0}) ds.targets.push_back(Eigen::VectorXd::Constant(1, t));
  whiten_targets(ds);
  EXPECT_NEAR(ds.targets[0][0], -1.224744871391589, 1e-12);
  EXPECT_NEAR(ds.targets[1][0], 0.0, 1e-15);
  EXPECT_NEAR(ds.targets[2][0], 1.224744871391589, 1e-12);
  const auto before = ds.targets;
  whiten_targets(ds);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(ds.targets[i][0], before[i][0], 1e-10);
  GraphDataset flat;
  flat.targets.assign(4, Eigen::Vector2d(1.0, 5.0));
  flat.targets[1][0] = 2.0;
  try {
    whiten_targets(flat);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroVarianceTarget);
    EXPECT_NE(std::string(e.what()).find("dimension 1"), std::string::npos);
  }
}

TEST(WhitenTargets, TrainingRowsOnly) {
  Rng rng(6);
  GraphDataset ds;
  for (int i = 0; i < 30; ++i) ds.targets.push_back(Eigen::Vector2d(standard_normal(rng) * 4 + 2, uniform01(rng)));
  std::vector<int> rows{0, 3, 5, 8, 13, 21, 22, 29};
  whiten_targets(ds, rows);
  Eigen::Vector2d mean = Eigen::Vector2d::Zero(), sq = Eigen::Vector2d::Zero();
  for (int r : rows) mean += ds.targets[static_cast<std::size_t>(r)];
  mean /= rows.size();
  for (int r : rows) sq += (ds.targets[static_cast<std::size_t>(r)] - mean).cwiseAbs2();
  EXPECT_LE(mean.cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE(((sq / rows.size()).cwiseSqrt() - Eigen::Vector2d::Ones()).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Manifest, Counts) {
  SyntheticSpec spec;
  spec.count = 4;
  spec.min_n = 5;
  spec.max_n = 5;
  const auto m = dataset_manifest(gen_synthetic(spec, 1));
  EXPECT_EQ(m["graphs"], 4);
  EXPECT_EQ(m["nodes"], 20);
  EXPECT_EQ(m["class_sizes"], (std::vector<int>{2, 2}));
}
