// legs: command-line front end for the scattering library.
// Exit codes: 0 success, 1 check or bound failure, 2 usage, config or input error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "legs/config.hpp"

namespace fs = std::filesystem;
using namespace legs;

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string out;
  bool fast = false;
  bool full = false;
  std::string dataset;
  std::string checkpoint;
  std::string fault;
};

RunConfig resolve(const Flags& f) {
  RunConfig c = f.config.empty() ? parse_run_config({{"schema_version", kConfigSchemaVersion}})
                                 : load_run_config(f.config);
  if (f.seed) c.seed = c.train.seed = *f.seed;
  if (f.threads) c.threads = *f.threads;
  if (!f.out.empty()) c.out = f.out;
  require(!(f.fast && f.full), ErrorCode::ConfigError, "--fast and --full are exclusive");
  if (f.fast) c.cv.fast = true;
  if (f.full) c.cv.fast = false;
  if (!f.dataset.empty()) {
    DatasetConfig d = c.dataset.value_or(DatasetConfig{});
    d.dir = f.dataset;
    if (d.name.empty()) d.name = fs::path(f.dataset).lexically_normal().filename().string();
    if (d.name.empty()) d.name = fs::path(f.dataset).lexically_normal().parent_path().filename().string();
    c.dataset = d;
  }
  if (!f.fault.empty()) c.check.fault = f.fault;
  validate(c);
  c.train.threads = c.thread_count();
  return c;
}

void write_text(const fs::path& p, const std::string& body) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::IoError, "cannot write " + p.string());
  out << body;
}

void write_json(const fs::path& p, const nlohmann::json& j) { write_text(p, j.dump(2) + "\n"); }

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string matrix_csv(const Eigen::MatrixXd& m, const std::vector<std::string>& header) {
  std::ostringstream os;
  for (std::size_t k = 0; k < header.size(); ++k) os << (k ? "," : "") << header[k];
  os << "\n";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) os << (k ? "," : "") << fmt(m(r, k));
    os << "\n";
  }
  return os.str();
}

std::string selection_csv(const Eigen::MatrixXd& F) {
  std::vector<std::string> header;
  for (Eigen::Index t = 1; t <= F.cols(); ++t) header.push_back("t" + std::to_string(t));
  return matrix_csv(F, header);
}

/// Per row of F, the expected diffusion step sum_t t F(j, t).
std::vector<double> expected_scales(const Eigen::MatrixXd& F) {
  std::vector<double> out;
  for (Eigen::Index j = 0; j < F.rows(); ++j) {
    double e = 0.0;
    for (Eigen::Index t = 0; t < F.cols(); ++t) e += static_cast<double>(t + 1) * F(j, t);
    out.push_back(e);
  }
  return out;
}

void write_meta(const RunConfig& c, const std::string& command) {
  nlohmann::json j{
      {"command", command},
      {"version", LEGS_VERSION},
      {"config_hash", run_config_hash(c)},
      {"config", to_json(c)},
      {"decisions",
       {{"path_rule", to_string(c.train.scattering.path_rule)},
        {"normalize_moments", c.train.scattering.normalize_moments},
        {"reorder_policy", "selection rows stably sorted by first argmax over diffusion steps 1..m"},
        {"fixed_bank", "dyadic scales 2^0..2^(J-1)"},
        {"feature_layout", "path-major (empty path first, lexicographic), then channel, then q; phi block last"},
        {"isolated_nodes", c.dataset ? detail::to_string(c.dataset->isolated) : "n/a"}}}};
  write_json(c.out / "run_meta.json", j);
}

GraphDataset load_dataset(const RunConfig& c) {
  if (c.dataset) {
    TuOptions o;
    o.isolated = c.dataset->isolated;
    o.one_hot_node_labels = c.dataset->one_hot_node_labels;
    o.structural_features = c.dataset->structural_features;
    o.attribute_names = c.dataset->attribute_names;
    return parse_tu({c.dataset->dir, c.dataset->name}, o);
  }
  require(c.synthetic.has_value(), ErrorCode::ConfigError,
          "dataset: give a dataset or synthetic section in the config, or --dataset");
  return gen_synthetic(*c.synthetic, c.seed);
}

// ---------------------------------------------------------------------------

int cmd_check(const RunConfig& c) {
  const verify::Fault fault = verify::parse_fault(c.check.fault);
  std::vector<verify::PropertySpec> specs;
  for (const auto& n : c.check.properties.empty() ? verify::property_names() : c.check.properties) {
    auto s = verify::default_spec(n);
    s.seed = c.seed;
    s.dense_cap = c.check.dense_oracle_cap;
    specs.push_back(s);
  }
  const auto reports = verify::run_suite(specs, fault, c.thread_count());
  std::printf("%-22s %7s %12s %10s  %s\n", "property", "trials", "worst", "tolerance", "result");
  nlohmann::json rows = nlohmann::json::array();
  std::ostringstream csv;
  csv << "property,trials,worst,tolerance,pass\n";
  std::vector<std::string> failed;
  for (const auto& r : reports) {
    std::printf("%-22s %7d %12.3e %10.1e  %s\n", r.name.c_str(), r.trials, r.worst, r.tolerance, r.pass ? "PASS" : "FAIL");
    if (!r.pass) failed.push_back(r.name);
    rows.push_back({{"property", r.name}, {"trials", r.trials}, {"worst", r.worst}, {"tolerance", r.tolerance},
                    {"pass", r.pass}, {"detail", r.detail}, {"seconds", r.seconds}});
    csv << r.name << "," << r.trials << "," << fmt(r.worst) << "," << fmt(r.tolerance) << "," << (r.pass ? 1 : 0) << "\n";
  }
  write_meta(c, "check");
  write_json(c.out / "check.json", {{"fault", c.check.fault}, {"properties", rows}});
  write_text(c.out / "check.csv", csv.str());
  if (failed.empty()) {
    std::printf("all %zu properties passed\n", reports.size());
    return 0;
  }
  std::string names;
  for (const auto& n : failed) names += (names.empty() ? "" : ", ") + n;
  std::printf("%zu of %zu properties failed: %s\n", failed.size(), reports.size(), names.c_str());
  return 1;
}

Model model_from_file(const fs::path& p) {
  std::ifstream in(p);
  require(static_cast<bool>(in), ErrorCode::IoError, "cannot open checkpoint " + p.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::ParseError, p.filename().string() + ": invalid JSON: " + e.what());
  }
  return model_from_json(j.contains("best_model") ? j.at("best_model") : j);
}

int cmd_transform(const RunConfig& c, const Flags& f) {
  const GraphDataset ds = load_dataset(c);
  ScatteringConfig sc = c.train.scattering;
  std::optional<Bank> bank;
  if (!f.checkpoint.empty()) {
    const Model m = model_from_file(f.checkpoint);
    sc = m.scattering;
    bank = m.bank();
  } else if (c.train.variant == Variant::LegsFixed) {
    bank = Bank(dyadic_scales(sc.J - 1, sc.m));
  } else {
    bank = Bank(selection_matrix(init_theta(sc.J, sc.m, c.train.theta_init, derive_seed(c.seed, "theta"))));
  }
  const auto index = feature_index(sc, ds.channels());
  std::vector<Eigen::VectorXd> rows(ds.size());
  parallel_for(ds.size(), c.thread_count(),
               [&](std::size_t i) { rows[i] = transform(ds.graphs[i], ds.features[i], *bank, sc).values; });
  std::ostringstream csv;
  nlohmann::json cols = nlohmann::json::array();
  for (std::size_t k = 0; k < index.size(); ++k) {
    const auto& key = index[k];
    const std::string name = path_label(key) + "/" + ds.feature_spec[static_cast<std::size_t>(key.channel)] + "/q" +
                             std::to_string(key.q);
    csv << (k ? "," : "") << name;
    cols.push_back({{"column", k},
                    {"name", name},
                    {"path", key.path},
                    {"lowpass", key.lowpass},
                    {"channel", ds.feature_spec[static_cast<std::size_t>(key.channel)]},
                    {"q", key.q}});
  }
  csv << "\n";
  for (const auto& r : rows) {
    for (Eigen::Index k = 0; k < r.size(); ++k) csv << (k ? "," : "") << fmt(r[k]);
    csv << "\n";
  }
  write_meta(c, "transform");
  write_text(c.out / "features.csv", csv.str());
  write_json(c.out / "features_index.json", {{"dataset", dataset_manifest(ds)},
                                             {"rows", ds.size()},
                                             {"feature_count", index.size()},
                                             {"scattering", to_json(sc)},
                                             {"columns", cols}});
  std::printf("wrote %zu rows x %zu features to %s\n", ds.size(), index.size(), (c.out / "features.csv").c_str());
  return 0;
}

std::string history_jsonl(const std::vector<EpochRecord>& h, const nlohmann::json& prefix) {
  std::ostringstream os;
  for (const auto& r : h) {
    nlohmann::json j = prefix;
    j["epoch"] = r.epoch;
    j["train_loss"] = r.train_loss;
    j["val_loss"] = r.val_loss ? nlohmann::json(*r.val_loss) : nlohmann::json(nullptr);
    os << j.dump() << "\n";
  }
  return os.str();
}

/// Single model: fold 0 is the test set, fold 1 validation, the rest training.
int cmd_train(const RunConfig& c, const Flags& f) {
  GraphDataset ds = load_dataset(c);
  const auto folds = make_folds(ds.size(), ds.is_classification() ? ds.labels : std::vector<int>{}, c.cv.folds, c.seed);
  const std::vector<int>& test = folds[0];
  const std::vector<int>& val = folds[1];
  std::vector<int> train;
  for (std::size_t k = 2; k < folds.size(); ++k) train.insert(train.end(), folds[k].begin(), folds[k].end());
  std::sort(train.begin(), train.end());
  train = detail::subsample(train, ds, c.cv.train_fraction, c.seed);
  nlohmann::json whitening;
  if (!ds.is_classification() && (!c.dataset || c.dataset->whiten_targets)) {
    const auto w = whiten_targets(ds, train);
    whitening = {{"mean", matrix_json(w.mean)}, {"std", matrix_json(w.std)}};
  }
  const PreparedData d = prepare(ds, c.train.scattering, c.thread_count());
  TrainState s;
  if (!f.checkpoint.empty()) {
    std::ifstream in(f.checkpoint);
    require(static_cast<bool>(in), ErrorCode::IoError, "cannot open checkpoint " + f.checkpoint);
    s = state_from_checkpoint(nlohmann::json::parse(in), c.train);
  } else {
    s = init_train_state(c.train, d, train);
  }
  const Eigen::MatrixXd F0 = init_train_state(c.train, d, train).model.selection().F;
  if (c.checkpoint_every > 0)
    for (int e = (s.epoch / c.checkpoint_every + 1) * c.checkpoint_every; e < c.train.max_epochs && !s.stopped;
         e += c.checkpoint_every) {
      run_epochs(s, c.train, d, train, val, e);
      if (s.epoch == e) write_json(c.out / "checkpoints" / ("epoch_" + std::to_string(e) + ".json"), checkpoint_json(s, c.train));
    }
  run_epochs(s, c.train, d, train, val, c.train.max_epochs);
  const TrainResult r = finish(s);

  nlohmann::json metrics{{"metric", ds.is_classification() ? "accuracy" : "mse"},
                         {"train_size", train.size()},
                         {"val_size", val.size()},
                         {"test_size", test.size()},
                         {"best_val_loss", r.best_val_loss},
                         {"best_epoch", r.best_epoch},
                         {"stopped_epoch", r.stopped_epoch},
                         {"variant", to_string(c.train.variant)},
                         {"expected_scales_init", expected_scales(F0)},
                         {"expected_scales", expected_scales(r.best.selection().F)}};
  if (ds.is_classification()) {
    std::vector<int> truth;
    for (int i : test) truth.push_back(ds.labels[static_cast<std::size_t>(i)]);
    metrics["test_score"] = accuracy(predict_labels(r.best, d, test, c.thread_count()), truth);
  } else {
    const Eigen::MatrixXd out = predict_outputs(r.best, d, test, c.thread_count());
    std::vector<Eigen::VectorXd> pred, truth;
    for (std::size_t k = 0; k < test.size(); ++k) {
      pred.push_back(out.row(static_cast<Eigen::Index>(k)).transpose());
      truth.push_back(ds.targets[static_cast<std::size_t>(test[k])]);
    }
    metrics["test_score"] = mean_squared_error(pred, truth);
    metrics["whitening"] = whitening;
  }
  write_meta(c, "train");
  write_json(c.out / "metrics.json", metrics);
  std::ostringstream csv;
  csv << "key,value\n";
  for (const char* k : {"test_score", "best_val_loss", "best_epoch", "stopped_epoch", "train_size"})
    csv << k << "," << metrics[k].dump() << "\n";
  write_text(c.out / "metrics.csv", csv.str());
  write_text(c.out / "train_log.jsonl", history_jsonl(r.history, nlohmann::json::object()));
  write_json(c.out / "checkpoint.json", checkpoint_json(s, c.train));
  write_json(c.out / "model_best.json", model_json(r.best));
  write_text(c.out / "F.csv", selection_csv(r.best.selection().F));
  write_text(c.out / "F_init.csv", selection_csv(F0));
  std::printf("%s %s = %.6f (best epoch %d, stopped at %d)\n", to_string(c.train.variant).c_str(),
              metrics["metric"].get<std::string>().c_str(), metrics["test_score"].get<double>(), r.best_epoch,
              r.stopped_epoch);
  return 0;
}

int cmd_crossval(const RunConfig& c) {
  GraphDataset ds = load_dataset(c);
  nlohmann::json whitening;
  if (!ds.is_classification() && (!c.dataset || c.dataset->whiten_targets)) {
    const auto w = whiten_targets(ds);
    whitening = {{"mean", matrix_json(w.mean)}, {"std", matrix_json(w.std)}};
  }
  const CvResult r = crossval(ds, c.train, c.cv);
  nlohmann::json folds = nlohmann::json::array(), models = nlohmann::json::array();
  std::ostringstream csv, log;
  csv << "fold,score,test_size\n";
  for (const auto& fr : r.folds) {
    folds.push_back({{"fold", fr.test_fold}, {"score", fr.score}, {"test_size", fr.test_indices.size()}});
    csv << fr.test_fold << "," << fmt(fr.score) << "," << fr.test_indices.size() << "\n";
  }
  for (const auto& m : r.models) {
    models.push_back({{"test_fold", m.test_fold},
                      {"val_fold", m.val_fold},
                      {"train_size", m.train_size},
                      {"best_val_loss", m.best_val_loss},
                      {"best_epoch", m.best_epoch},
                      {"stopped_epoch", m.stopped_epoch},
                      {"expected_scales", expected_scales(m.F)}});
    log << history_jsonl(m.history, {{"test_fold", m.test_fold}, {"val_fold", m.val_fold}});
    write_text(c.out / "F" / ("fold" + std::to_string(m.test_fold) + "_val" + std::to_string(m.val_fold) + ".csv"),
               selection_csv(m.F));
  }
  nlohmann::json metrics{{"metric", r.metric}, {"mean", r.mean},   {"std", r.std},
                         {"fast", c.cv.fast},  {"folds", folds},   {"models", models},
                         {"variant", to_string(c.train.variant)},  {"train_fraction", c.cv.train_fraction}};
  if (!whitening.is_null()) metrics["whitening"] = whitening;
  write_meta(c, "crossval");
  write_json(c.out / "metrics.json", metrics);
  csv << "mean," << fmt(r.mean) << ",\nstd," << fmt(r.std) << ",\n";
  write_text(c.out / "metrics.csv", csv.str());
  write_text(c.out / "train_log.jsonl", log.str());
  std::printf("%s %s: mean %.6f std %.6f over %zu folds (%zu models)\n", to_string(c.train.variant).c_str(),
              r.metric.c_str(), r.mean, r.std, r.folds.size(), r.models.size());
  return 0;
}

int cmd_gen(const RunConfig& c) {
  require(c.synthetic.has_value(), ErrorCode::ConfigError, "synthetic: gen needs a synthetic section");
  GraphDataset ds = gen_synthetic(*c.synthetic, c.seed);
  const std::string name = ds.name;
  write_tu(ds, {c.out / name, name});
  nlohmann::json manifest = dataset_manifest(ds);
  const bool structural = ds.feature_spec.size() >= 2 && ds.feature_spec[0] == kStructuralFeatures[0] &&
                          ds.feature_spec[1] == kStructuralFeatures[1];
  std::vector<std::string> attrs(ds.feature_spec.begin() + (structural ? 2 : 0), ds.feature_spec.end());
  // Dataset section that reads these files back into the same features.
  manifest["dataset_config"] = {{"dir", (c.out / name).string()},
                                {"name", name},
                                {"structural_features", structural},
                                {"attribute_names", attrs}};
  write_json(c.out / name / (name + "_manifest.json"), manifest);
  write_meta(c, "gen");
  std::printf("wrote %zu graphs to %s\n", ds.size(), (c.out / name).c_str());
  return 0;
}

int cmd_frame_report(const RunConfig& c) {
  const auto& fr = c.frame_report;
  const ScaleSequence scales = make_scales(fr.scales, fr.scales.back());
  const double C = frame_lower_constant(scales.first(), scales.last());
  Rng rng = make_rng(c.seed, "frame_report");
  std::ostringstream csv;
  csv << "graph,signal,n,ratio\n";
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (int gi = 0; gi < fr.graphs; ++gi) {
    const auto fam = sample::kAllFamilies[static_cast<std::size_t>(gi) % std::size(sample::kAllFamilies)];
    const Graph g = sample::draw({fam, fr.min_n, fr.max_n, 0.2, 0.6, true}, rng);
    for (int si = 0; si < fr.signals; ++si) {
      const SignalMatrix x = sample::gaussian_signal(g.n(), 1, rng);
      const auto e = frame_energy(g, apply_bank(g, c.train.scattering.alpha, scales, x), x);
      const double ratio = e.energy / e.input_norm_sq;
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
      csv << gi << "," << si << "," << g.n() << "," << fmt(ratio) << "\n";
    }
  }
  const bool ok = lo >= C - 1e-9 && hi <= 1.0 + 1e-9;
  std::string seq;
  for (int t : fr.scales) seq += (seq.empty() ? "" : ",") + std::to_string(t);
  std::printf("scales [%s], alpha %.3g\n", seq.c_str(), c.train.scattering.alpha);
  std::printf("lower frame constant C(%d, %d) = %.12f\n", scales.first(), scales.last(), C);
  std::printf("energy / |x|^2 over %d signals: min %.12f max %.12f\n", fr.graphs * fr.signals, lo, hi);
  std::printf("bounds C <= ratio <= 1: %s\n", ok ? "hold" : "VIOLATED");
  write_meta(c, "frame-report");
  write_text(c.out / "frame_report.csv", csv.str());
  write_json(c.out / "frame_report.json", {{"scales", fr.scales},
                                           {"alpha", c.train.scattering.alpha},
                                           {"lower_constant", C},
                                           {"min_ratio", lo},
                                           {"max_ratio", hi},
                                           {"samples", fr.graphs * fr.signals},
                                           {"bounds_hold", ok}});
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geometric scattering on graphs with learnable diffusion scales"};
  app.set_version_flag("--version", std::string(LEGS_VERSION));
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  app.add_option("--config", f.config, "Run configuration (JSON)");
  app.add_option("--seed", f.seed, "Override the configured seed");
  app.add_option("--threads", f.threads, "Worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
  app.add_option("--out", f.out, "Output directory");
  app.add_flag("--fast", f.fast, "Cross-validation: one model per test fold");
  app.add_flag("--full", f.full, "Cross-validation: all nine validation folds per test fold");
  app.add_option("--dataset", f.dataset, "TU dataset directory (files NAME_A.txt, ...)");
  app.add_option("--checkpoint", f.checkpoint, "transform: model to take the bank from; train: state to resume");
  app.add_option("--fault", f.fault, "check: inject a fault (flip_wavelet_sign, unnormalized_rows)");

  std::string which;
  for (const auto& [name, help] : std::vector<std::pair<std::string, std::string>>{
           {"check", "Run the invariant and gradient suites"},
           {"transform", "Write scattering features for a dataset"},
           {"train", "Train one model"},
           {"crossval", "10-fold cross-validation"},
           {"gen", "Generate a synthetic dataset in TU format"},
           {"frame-report", "Measure frame bounds of a fixed bank"}})
    app.add_subcommand(name, help)->callback([&which, n = name] { which = n; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const RunConfig c = resolve(f);
    if (which == "check") return cmd_check(c);
    if (which == "transform") return cmd_transform(c, f);
    if (which == "train") return cmd_train(c, f);
    if (which == "crossval") return cmd_crossval(c);
    if (which == "gen") return cmd_gen(c);
    if (which == "frame-report") return cmd_frame_report(c);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
