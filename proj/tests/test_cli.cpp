#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "legs/config.hpp"

using namespace legs;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  fs::path p = fs::temp_directory_path() / "legs_cli_tests" / info->name();
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct CliRun {
  int code = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

CliRun legs_cli(const fs::path& dir, const std::string& args) {
  const std::string cmd = "cd '" + dir.string() + "' && '" LEGS_CLI "' " + args + " > stdout.txt 2> stderr.txt";
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(dir / "stdout.txt");
  r.err = slurp(dir / "stderr.txt");
  return r;
}

void write_file(const fs::path& p, const std::string& body) {
  fs::create_directories(p.parent_path());
  std::ofstream(p) << body;
}

std::vector<std::vector<double>> read_csv(const fs::path& p, std::vector<std::string>* header = nullptr) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  if (header) {
    std::stringstream hs(line);
    std::string tok;
    while (std::getline(hs, tok, ',')) header->push_back(tok);
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string tok;
    rows.emplace_back();
    while (std::getline(ss, tok, ',')) rows.back().push_back(std::stod(tok));
  }
  return rows;
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

/// K2 with signal e0 = (1, 0) as a one-channel TU dataset.
void write_k2(const fs::path& dir) {
  write_file(dir / "K2_A.txt", "1, 2\n2, 1\n");
  write_file(dir / "K2_graph_indicator.txt", "1\n1\n");
  write_file(dir / "K2_graph_labels.txt", "0\n");
  write_file(dir / "K2_node_attributes.txt", "1\n0\n");
}

const char* kK2Config = R"({"schema_version": 1,
  "dataset": {"dir": "k2", "name": "K2", "structural_features": false, "attribute_names": ["x"]},
  "scattering": {"J": 1, "m": 1, "order": 1, "q_max": %d},
  "train": {"variant": "LEGS-FIXED"}})";

std::string k2_config(int q_max) {
  char buf[512];
  std::snprintf(buf, sizeof buf, kK2Config, q_max);
  return buf;
}

}  // namespace

TEST(CliCheck, DefaultConfigPassesAndListsEverySuite) {
  const fs::path dir = scratch_dir();
  const CliRun r = legs_cli(dir, "check --threads 2");
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  for (const auto& n : verify::property_names()) EXPECT_NE(r.out.find(n), std::string::npos) << n;
  EXPECT_NE(r.out.find("all 17 properties passed"), std::string::npos);
  const auto meta = read_json(dir / "out" / "run_meta.json");
  EXPECT_EQ(meta["version"], LEGS_VERSION);
  EXPECT_EQ(meta["decisions"]["path_rule"], "increasing");
  EXPECT_TRUE(meta.contains("config_hash"));
}

TEST(CliCheck, ConfigErrorsExitTwoAndNameTheField) {
  const fs::path dir = scratch_dir();
  write_file(dir / "alpha.json", R"({"schema_version": 1, "scattering": {"alpha": 1.5}})");
  CliRun r = legs_cli(dir, "check --config alpha.json");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("scattering.alpha"), std::string::npos) << r.err;

  write_file(dir / "unknown.json", R"({"schema_version": 1, "train": {"learning_rate": 0.1}})");
  r = legs_cli(dir, "check --config unknown.json");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("train.learning_rate: unknown key"), std::string::npos) << r.err;

  write_file(dir / "type.json", R"({"schema_version": 1, "cv": {"folds": "ten"}})");
  r = legs_cli(dir, "check --config type.json");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("cv.folds"), std::string::npos) << r.err;

  write_file(dir / "version.json", R"({"schema_version": 7})");
  EXPECT_EQ(legs_cli(dir, "check --config version.json").code, 2);
  write_file(dir / "noversion.json", R"({"seed": 1})");
  EXPECT_EQ(legs_cli(dir, "check --config noversion.json").code, 2);
  EXPECT_EQ(legs_cli(dir, "check --no-such-flag").code, 2);
  EXPECT_EQ(legs_cli(dir, "").code, 2);
  EXPECT_EQ(legs_cli(dir, "check --fault no_such_fault").code, 2);
}

TEST(CliCheck, InjectedFaultExitsOneNamingTheInvariant) {
  const fs::path dir = scratch_dir();
  write_file(dir / "c.json", R"({"schema_version": 1, "check": {"properties": ["telescoping_fixed", "mass_conservation"]}})");
  const CliRun r = legs_cli(dir, "check --config c.json --fault flip_wavelet_sign");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("failed: telescoping_fixed"), std::string::npos) << r.out;
  const auto rows = read_json(dir / "out" / "check.json")["properties"];
  EXPECT_EQ(rows.size(), 2u);
}

TEST(CliTransform, EmptyFeatureConfigGivesThreeColumns) {
  const fs::path dir = scratch_dir();
  write_k2(dir / "k2");
  write_file(dir / "c.json", k2_config(1));
  const CliRun r = legs_cli(dir, "transform --config c.json");
  ASSERT_EQ(r.code, 0) << r.err;
  std::vector<std::string> header;
  const auto rows = read_csv(dir / "out" / "features.csv", &header);
  EXPECT_EQ(header.size(), 3u);
  EXPECT_EQ(read_json(dir / "out" / "features_index.json")["feature_count"], 3);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0], (std::vector<double>{0.5, 0.5, 0.5}));
}

TEST(CliTransform, K2ValuesAndDeterminism) {
  const fs::path dir = scratch_dir();
  write_k2(dir / "k2");
  write_file(dir / "c.json", k2_config(2));
  ASSERT_EQ(legs_cli(dir, "transform --config c.json --out a").code, 0);
  ASSERT_EQ(legs_cli(dir, "transform --config c.json --out b --threads 3").code, 0);
  const auto rows = read_csv(dir / "a" / "features.csv");
  ASSERT_EQ(rows.size(), 1u);
  const std::vector<double> expect{0.5, 0.5, 0.5, 0.25, 0.5, 0.25};
  ASSERT_EQ(rows[0].size(), expect.size());
  for (std::size_t k = 0; k < expect.size(); ++k) EXPECT_NEAR(rows[0][k], expect[k], 1e-15) << k;
  EXPECT_EQ(slurp(dir / "a" / "features.csv"), slurp(dir / "b" / "features.csv"));
  const auto cols = read_json(dir / "a" / "features_index.json")["columns"];
  EXPECT_EQ(cols[2]["path"], nlohmann::json::array({0}));
  EXPECT_EQ(cols[5]["lowpass"], true);
}

TEST(CliGen, BalancedDeterministicAndRoundTrips) {
  const fs::path dir = scratch_dir();
  write_file(dir / "g.json", R"({"schema_version": 1, "seed": 5, "synthetic": {"kind": "cycle_vs_tree", "count": 20}})");
  ASSERT_EQ(legs_cli(dir, "gen --config g.json --out a").code, 0);
  ASSERT_EQ(legs_cli(dir, "gen --config g.json --out b").code, 0);
  for (const char* f : {"A", "graph_indicator", "graph_labels"}) {
    const std::string name = std::string("cycle_vs_tree_") + f + ".txt";
    EXPECT_EQ(slurp(dir / "a" / "cycle_vs_tree" / name), slurp(dir / "b" / "cycle_vs_tree" / name)) << f;
  }
  const auto manifest = read_json(dir / "a" / "cycle_vs_tree" / "cycle_vs_tree_manifest.json");
  EXPECT_EQ(manifest["graphs"], 20);
  EXPECT_EQ(manifest["class_sizes"], nlohmann::json::array({10, 10}));

  SyntheticSpec spec;
  spec.count = 20;
  const GraphDataset want = gen_synthetic(spec, 5);
  const GraphDataset got = parse_tu({dir / "a" / "cycle_vs_tree", "cycle_vs_tree"});
  ASSERT_EQ(got.size(), want.size());
  EXPECT_EQ(got.labels, want.labels);
  EXPECT_EQ(got.feature_spec, want.feature_spec);
  for (std::size_t i = 0; i < want.size(); ++i) {
    EXPECT_EQ(got.graphs[i].col_idx(), want.graphs[i].col_idx());
    EXPECT_EQ(got.features[i], want.features[i]);
  }
}

TEST(CliGen, LongrangeAttributesRoundTripThroughManifestConfig) {
  const fs::path dir = scratch_dir();
  write_file(dir / "g.json", R"({"schema_version": 1, "synthetic": {"kind": "longrange_pair", "count": 4}})");
  ASSERT_EQ(legs_cli(dir, "gen --config g.json").code, 0);
  const auto manifest = read_json(dir / "out" / "longrange_pair" / "longrange_pair_manifest.json");
  nlohmann::json cfg{{"schema_version", 1}, {"dataset", manifest["dataset_config"]}, {"scattering", {{"q_max", 1}}}};
  write_file(dir / "t.json", cfg.dump());
  ASSERT_EQ(legs_cli(dir, "transform --config t.json --out t").code, 0);
  EXPECT_EQ(read_json(dir / "t" / "features_index.json")["columns"][0]["channel"], "community_sign");
}

TEST(CliTrain, FixedVariantDumpsDyadicOneHotRows) {
  const fs::path dir = scratch_dir();
  write_file(dir / "c.json", R"({"schema_version": 1, "seed": 2,
    "synthetic": {"kind": "cycle_vs_tree", "count": 20, "min_n": 8, "max_n": 12},
    "train": {"variant": "LEGS-FIXED", "max_epochs": 20, "patience_epochs": 20}})");
  const CliRun r = legs_cli(dir, "train --config c.json");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto F = read_csv(dir / "out" / "F.csv");
  ASSERT_EQ(F.size(), 4u);
  const int peaks[] = {1, 2, 4, 8};
  for (std::size_t j = 0; j < 4; ++j) {
    ASSERT_EQ(F[j].size(), 16u);
    for (int t = 1; t <= 16; ++t) EXPECT_EQ(F[j][static_cast<std::size_t>(t - 1)], t == peaks[j] ? 1.0 : 0.0);
  }
  const auto m = read_json(dir / "out" / "metrics.json");
  EXPECT_EQ(m["metric"], "accuracy");
  EXPECT_EQ(m["stopped_epoch"], 20);
  std::ifstream log(dir / "out" / "train_log.jsonl");
  int lines = 0;
  for (std::string line; std::getline(log, line); ++lines) EXPECT_EQ(nlohmann::json::parse(line)["epoch"], lines + 1);
  EXPECT_EQ(lines, 20);
}

TEST(CliTrain, ResumeFromSnapshotMatchesUninterruptedRun) {
  const fs::path dir = scratch_dir();
  write_file(dir / "c.json", R"({"schema_version": 1, "seed": 4, "checkpoint_every": 10,
    "synthetic": {"kind": "cycle_vs_tree", "count": 20, "min_n": 8, "max_n": 12},
    "train": {"max_epochs": 30, "patience_epochs": 30, "lr": 0.001}})");
  ASSERT_EQ(legs_cli(dir, "train --config c.json --out full").code, 0);
  ASSERT_TRUE(fs::exists(dir / "full" / "checkpoints" / "epoch_10.json"));
  const CliRun r = legs_cli(dir, "train --config c.json --out resumed --checkpoint full/checkpoints/epoch_10.json");
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"metrics.json", "F.csv", "model_best.json", "checkpoint.json", "train_log.jsonl"})
    EXPECT_EQ(slurp(dir / "full" / f), slurp(dir / "resumed" / f)) << f;

  write_file(dir / "other.json", R"({"schema_version": 1, "seed": 4,
    "synthetic": {"kind": "cycle_vs_tree", "count": 20, "min_n": 8, "max_n": 12},
    "train": {"max_epochs": 30, "patience_epochs": 30, "lr": 0.002}})");
  EXPECT_EQ(legs_cli(dir, "train --config other.json --out x --checkpoint full/checkpoints/epoch_10.json").code, 2);
}

TEST(CliCrossval, MetricsAndThreadIndependence) {
  const fs::path dir = scratch_dir();
  write_file(dir / "c.json", R"({"schema_version": 1, "seed": 1,
    "synthetic": {"kind": "cycle_vs_tree", "count": 20, "min_n": 8, "max_n": 12},
    "train": {"max_epochs": 10, "patience_epochs": 10, "lr": 0.001}})");
  ASSERT_EQ(legs_cli(dir, "crossval --config c.json --fast --threads 1 --out a").code, 0);
  ASSERT_EQ(legs_cli(dir, "crossval --config c.json --fast --threads 4 --out b").code, 0);
  for (const char* f : {"metrics.json", "metrics.csv", "train_log.jsonl"})
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  const auto m = read_json(dir / "a" / "metrics.json");
  EXPECT_EQ(m["metric"], "accuracy");
  EXPECT_EQ(m["folds"].size(), 10u);
  EXPECT_EQ(m["models"].size(), 10u);
  const double mean = m["mean"];
  EXPECT_GE(mean, 0.0);
  EXPECT_LE(mean, 1.0);
  EXPECT_TRUE(fs::exists(dir / "a" / "F" / "fold0_val1.csv"));
  EXPECT_EQ(legs_cli(dir, "crossval --config c.json --fast --full").code, 2);
}

TEST(CliInput, MissingDatasetIsAnInputError) {
  const fs::path dir = scratch_dir();
  EXPECT_EQ(legs_cli(dir, "transform").code, 2);
  EXPECT_EQ(legs_cli(dir, "transform --dataset nowhere/MUTAG").code, 2);
}

TEST(CliFrameReport, BoundsHold) {
  const fs::path dir = scratch_dir();
  const CliRun r = legs_cli(dir, "frame-report --seed 3");
  EXPECT_EQ(r.code, 0) << r.out;
  const auto j = read_json(dir / "out" / "frame_report.json");
  EXPECT_TRUE(j["bounds_hold"].get<bool>());
  EXPECT_NEAR(j["lower_constant"].get<double>(), frame_lower_constant(1, 16), 1e-15);
  EXPECT_GE(j["min_ratio"].get<double>(), j["lower_constant"].get<double>() - 1e-9);
  EXPECT_LE(j["max_ratio"].get<double>(), 1.0 + 1e-9);
}
