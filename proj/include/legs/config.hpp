#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "legs/trainer.hpp"
#include "legs/verification.hpp"

namespace legs {

inline constexpr int kConfigSchemaVersion = 1;

struct DatasetConfig {
  std::filesystem::path dir;
  std::string name;
  IsolatedPolicy isolated = IsolatedPolicy::SelfLoop;
  bool one_hot_node_labels = false;
  bool structural_features = true;
  std::vector<std::string> attribute_names;
  bool whiten_targets = true;  // regression only
};

struct CheckConfig {
  std::vector<std::string> properties;  // empty runs all
  std::string fault = "none";
  int dense_oracle_cap = kDefaultDenseOracleCap;
};

struct FrameReportConfig {
  std::vector<int> scales{1, 2, 4, 8, 16};
  int graphs = 20;
  int signals = 20;  // per graph
  int min_n = 5;
  int max_n = 50;
};

/// Everything a CLI run depends on. `threads` never affects results.
struct RunConfig {
  int schema_version = kConfigSchemaVersion;
  std::uint64_t seed = 0;
  std::optional<int> threads;
  std::filesystem::path out = "out";
  int checkpoint_every = 0;  // train: also snapshot the state every this many epochs
  std::optional<DatasetConfig> dataset;
  std::optional<SyntheticSpec> synthetic;
  TrainConfig train;
  CvConfig cv;
  CheckConfig check;
  FrameReportConfig frame_report;

  int thread_count() const { return threads ? *threads : default_threads(); }
};

namespace detail {

inline std::string type_name(const nlohmann::json& j) {
  if (j.is_number_integer()) return "an integer";
  if (j.is_number()) return "a number";
  return std::string("a ") + j.type_name();
}

/// Reads keys of one JSON object and rejects whatever it did not read.
class ObjectReader {
 public:
  ObjectReader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    require(j.is_object(), ErrorCode::ConfigError, (path_.empty() ? "config" : path_) + ": expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    const std::string field = name(key);
    const nlohmann::json& v = *it;
    auto bad = [&](const char* want) { fail(ErrorCode::ConfigError, field + ": expected " + want + ", got " + type_name(v)); };
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) bad("a boolean");
      out = v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) bad("a non-negative integer");
      out = v.get<std::uint64_t>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) bad("an integer");
      const long long x = v.get<long long>();
      require(x >= std::numeric_limits<T>::min() && x <= std::numeric_limits<T>::max(), ErrorCode::ConfigError,
              field + ": out of range");
      out = static_cast<T>(x);
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) bad("a number");
      out = v.get<T>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) bad("a string");
      out = v.get<std::string>();
    } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
      if (!v.is_array() || !std::all_of(v.begin(), v.end(), [](const auto& e) { return e.is_string(); }))
        bad("an array of strings");
      out = v.get<T>();
    } else if constexpr (std::is_same_v<T, std::vector<int>>) {
      if (!v.is_array() || !std::all_of(v.begin(), v.end(), [](const auto& e) { return e.is_number_integer(); }))
        bad("an array of integers");
      out = v.get<T>();
    } else {
      static_assert(sizeof(T) == 0, "unsupported config field type");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }

  ObjectReader child(const char* key) {
    seen_.insert(key);
    static const nlohmann::json empty = nlohmann::json::object();
    const auto it = j_.find(key);
    return ObjectReader(it == j_.end() ? empty : *it, name(key));
  }

  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      require(seen_.count(it.key()) > 0, ErrorCode::ConfigError, name(it.key()) + ": unknown key");
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class T, class Parse>
void get_enum(ObjectReader& r, const char* key, T& out, Parse parse) {
  std::string s;
  r.get(key, s);
  if (!r.has(key)) return;
  try {
    out = parse(s);
  } catch (const Error&) {
    fail(ErrorCode::ConfigError, r.name(key) + ": unknown value '" + s + "'");
  }
}

inline IsolatedPolicy parse_isolated(const std::string& s) {
  if (s == "self_loop") return IsolatedPolicy::SelfLoop;
  if (s == "reject") return IsolatedPolicy::Reject;
  fail(ErrorCode::ConfigError, "isolated: unknown policy '" + s + "'");
}

inline std::string to_string(IsolatedPolicy p) { return p == IsolatedPolicy::SelfLoop ? "self_loop" : "reject"; }

}  // namespace detail

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json to_json(const SyntheticSpec& s) {
  return {{"kind", to_string(s.kind)}, {"count", s.count}, {"min_n", s.min_n},
          {"max_n", s.max_n},          {"p1", s.p1},       {"p2", s.p2},
          {"short_bridge", s.short_bridge}, {"long_bridge", s.long_bridge}};
}

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json train = to_json(c.train);
  train.erase("seed");
  train.erase("scattering");
  nlohmann::json j{{"schema_version", c.schema_version},
                   {"seed", c.seed},
                   {"out", c.out.string()},
                   {"checkpoint_every", c.checkpoint_every},
                   {"scattering", to_json(c.train.scattering)},
                   {"train", train},
                   {"cv", {{"folds", c.cv.folds}, {"fast", c.cv.fast}, {"train_fraction", c.cv.train_fraction}}},
                   {"check",
                    {{"properties", c.check.properties},
                     {"fault", c.check.fault},
                     {"dense_oracle_cap", c.check.dense_oracle_cap}}},
                   {"frame_report",
                    {{"scales", c.frame_report.scales},
                     {"graphs", c.frame_report.graphs},
                     {"signals", c.frame_report.signals},
                     {"min_n", c.frame_report.min_n},
                     {"max_n", c.frame_report.max_n}}}};
  if (c.threads) j["threads"] = *c.threads;
  if (c.dataset)
    j["dataset"] = {{"dir", c.dataset->dir.string()},
                    {"name", c.dataset->name},
                    {"isolated", detail::to_string(c.dataset->isolated)},
                    {"one_hot_node_labels", c.dataset->one_hot_node_labels},
                    {"structural_features", c.dataset->structural_features},
                    {"attribute_names", c.dataset->attribute_names},
                    {"whiten_targets", c.dataset->whiten_targets}};
  if (c.synthetic) j["synthetic"] = to_json(*c.synthetic);
  return j;
}

/// Hash of the result-relevant part of a config (threads, output directory and snapshot
/// cadence excluded).
inline std::string run_config_hash(const RunConfig& c) {
  nlohmann::json j = to_json(c);
  j.erase("threads");
  j.erase("out");
  j.erase("checkpoint_every");
  return config_hash(j);
}

// ---------------------------------------------------------------------------
// Validation and parsing

inline void validate(const RunConfig& c) {
  auto need = [](bool ok, const std::string& msg) { require(ok, ErrorCode::ConfigError, msg); };
  need(c.schema_version == kConfigSchemaVersion,
       "schema_version: expected " + std::to_string(kConfigSchemaVersion) + ", got " + std::to_string(c.schema_version));
  need(!c.threads || *c.threads >= 1, "threads: must be >= 1");
  need(!c.out.empty(), "out: must not be empty");
  need(c.checkpoint_every >= 0, "checkpoint_every: must be >= 0");
  validate(c.train, "train.");
  need(c.cv.folds >= 3, "cv.folds: need at least 3");
  need(c.cv.train_fraction > 0.0 && c.cv.train_fraction <= 1.0, "cv.train_fraction: must lie in (0, 1]");
  const auto names = verify::property_names();
  for (const auto& p : c.check.properties)
    need(std::find(names.begin(), names.end(), p) != names.end(), "check.properties: unknown property '" + p + "'");
  try {
    verify::parse_fault(c.check.fault);
  } catch (const Error&) {
    need(false, "check.fault: unknown fault '" + c.check.fault + "'");
  }
  need(c.check.dense_oracle_cap >= 1, "check.dense_oracle_cap: must be >= 1");
  const auto& f = c.frame_report;
  need(!f.scales.empty() && f.scales.front() >= 1 && std::is_sorted(f.scales.begin(), f.scales.end()) &&
           std::adjacent_find(f.scales.begin(), f.scales.end()) == f.scales.end(),
       "frame_report.scales: need strictly increasing scales >= 1");
  need(f.graphs >= 1, "frame_report.graphs: must be >= 1");
  need(f.signals >= 1, "frame_report.signals: must be >= 1");
  need(f.min_n >= 2 && f.min_n <= f.max_n, "frame_report.min_n: need 2 <= min_n <= max_n");
  if (c.synthetic) {
    const auto& s = *c.synthetic;
    need(s.count >= 2 && s.count % 2 == 0, "synthetic.count: must be even and positive");
    need(s.min_n >= 4 && s.min_n <= s.max_n, "synthetic.min_n: need 4 <= min_n <= max_n");
    need(s.p1 > 0.0 && s.p1 <= 1.0, "synthetic.p1: must lie in (0, 1]");
    need(s.p2 > 0.0 && s.p2 <= 1.0, "synthetic.p2: must lie in (0, 1]");
    need(s.short_bridge >= 1, "synthetic.short_bridge: must be >= 1");
    need(s.long_bridge >= 1, "synthetic.long_bridge: must be >= 1");
  }
  if (c.dataset) need(!c.dataset->name.empty(), "dataset.name: must not be empty");
}

inline RunConfig parse_run_config(const nlohmann::json& j) {
  RunConfig c;
  detail::ObjectReader top(j, "");
  require(j.contains("schema_version"), ErrorCode::ConfigError, "schema_version: missing");
  top.get("schema_version", c.schema_version);
  top.get("seed", c.seed);
  if (top.has("threads")) {
    int t = 0;
    top.get("threads", t);
    c.threads = t;
  }
  std::string out = c.out.string();
  top.get("out", out);
  c.out = out;
  top.get("checkpoint_every", c.checkpoint_every);

  if (top.has("dataset")) {
    auto r = top.child("dataset");
    DatasetConfig d;
    std::string dir;
    r.get("dir", dir);
    d.dir = dir;
    r.get("name", d.name);
    detail::get_enum(r, "isolated", d.isolated, detail::parse_isolated);
    r.get("one_hot_node_labels", d.one_hot_node_labels);
    r.get("structural_features", d.structural_features);
    r.get("attribute_names", d.attribute_names);
    r.get("whiten_targets", d.whiten_targets);
    r.finish();
    c.dataset = d;
  }
  if (top.has("synthetic")) {
    auto r = top.child("synthetic");
    SyntheticSpec s;
    detail::get_enum(r, "kind", s.kind, synthetic_kind);
    r.get("count", s.count);
    r.get("min_n", s.min_n);
    r.get("max_n", s.max_n);
    r.get("p1", s.p1);
    r.get("p2", s.p2);
    r.get("short_bridge", s.short_bridge);
    r.get("long_bridge", s.long_bridge);
    r.finish();
    c.synthetic = s;
  }
  {
    auto r = top.child("scattering");
    auto& s = c.train.scattering;
    r.get("J", s.J);
    r.get("m", s.m);
    r.get("q_max", s.q_max);
    r.get("order", s.order);
    detail::get_enum(r, "path_rule", s.path_rule, parse_path_rule);
    r.get("normalize_moments", s.normalize_moments);
    r.get("alpha", s.alpha);
    r.finish();
  }
  {
    auto r = top.child("train");
    auto& t = c.train;
    detail::get_enum(r, "variant", t.variant, parse_variant);
    detail::get_enum(r, "theta_init", t.theta_init, parse_theta_init);
    r.get("lr", t.lr);
    r.get("max_epochs", t.max_epochs);
    r.get("patience_epochs", t.patience_epochs);
    r.get("eval_every", t.eval_every);
    r.get("batch_size", t.batch_size);
    r.get("hidden", t.hidden);
    r.get("anchors", t.anchors);
    auto a = r.child("adam");
    a.get("beta1", t.adam.beta1);
    a.get("beta2", t.adam.beta2);
    a.get("eps", t.adam.eps);
    a.finish();
    r.finish();
  }
  {
    auto r = top.child("cv");
    r.get("folds", c.cv.folds);
    r.get("fast", c.cv.fast);
    r.get("train_fraction", c.cv.train_fraction);
    r.finish();
  }
  {
    auto r = top.child("check");
    r.get("properties", c.check.properties);
    r.get("fault", c.check.fault);
    r.get("dense_oracle_cap", c.check.dense_oracle_cap);
    r.finish();
  }
  {
    auto r = top.child("frame_report");
    r.get("scales", c.frame_report.scales);
    r.get("graphs", c.frame_report.graphs);
    r.get("signals", c.frame_report.signals);
    r.get("min_n", c.frame_report.min_n);
    r.get("max_n", c.frame_report.max_n);
    r.finish();
  }
  top.finish();
  c.train.seed = c.seed;
  validate(c);
  return c;
}

inline RunConfig load_run_config(const std::filesystem::path& p) {
  std::ifstream in(p);
  require(static_cast<bool>(in), ErrorCode::IoError, "cannot open config " + p.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::ConfigError, p.filename().string() + ": invalid JSON: " + e.what());
  }
  return parse_run_config(j);
}

}  // namespace legs
