#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "bars/config.hpp"
#include "bars/dataset.hpp"
#include "bars/error.hpp"
#include "bars/eval.hpp"
#include "bars/io.hpp"
#include "bars/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  int jobs = 0;
  std::optional<std::uint64_t> seed;
};

bars::RunConfig resolve_config(const CommonOptions& opts) {
  bars::RunConfig config;
  fs::path path = opts.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv(bars::kConfigEnvVar); env && *env) path = env;
  }
  if (!path.empty()) config = bars::load_config_file(path);
  for (const auto& kv : opts.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw bars::Error(bars::ErrorCode::Schema, fmt::format("--set expects key=value, got '{}'", kv));
    bars::apply_setting(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (opts.seed) config.model.seed = *opts.seed;
  return config;
}

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path,
                  fmt::format("key = value config file (default: ${})", bars::kConfigEnvVar));
  cmd->add_option("--set", opts.overrides, "Override one config key, e.g. --set smoothing_window=7");
  cmd->add_option("--jobs", opts.jobs, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
}

std::vector<bars::FeatureRow> features_from(const fs::path& input, const bars::RunConfig& config, int jobs,
                                            std::vector<bars::ProcessingError>* errors) {
  if (!bars::io::looks_like_manifest(input)) return bars::io::read_features_csv(input);
  const auto entries = bars::io::read_manifest(input);
  auto result = bars::process_manifest(entries, config.pipeline, jobs);
  if (errors) *errors = std::move(result.errors);
  return std::move(result.rows);
}

int cmd_process(const CommonOptions& common, const fs::path& manifest, const fs::path& out, fs::path errors_path,
                const std::string& dump_dir) {
  const auto config = resolve_config(common);
  std::vector<bars::io::ManifestEntry> entries;
  try {
    entries = bars::io::read_manifest(manifest);
  } catch (const bars::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  const auto result = bars::process_manifest(entries, config.pipeline, common.jobs);
  if (errors_path.empty()) errors_path = fs::path(out).concat(".errors.csv");
  bars::io::write_features_csv(out, result.rows);
  bars::write_errors_csv(errors_path, result.errors);
  if (!dump_dir.empty()) {
    for (std::size_t i = 0; i < result.rows.size(); ++i) {
      const auto& id = result.rows[i].video_id;
      const auto& p = result.processed[i];
      bars::io::write_json(fs::path(dump_dir) / (id + "_segmentation.json"), bars::io::segmentation_to_json(p.cycles));
      if (p.stabilized)
        bars::io::write_json(fs::path(dump_dir) / (id + "_transforms.json"),
                             bars::io::transforms_to_json(p.transforms, p.transform_rms));
    }
  }
  for (const auto& e : result.errors) std::cerr << e.video_id << ": " << e.stage << ": " << e.reason << '\n';
  std::cerr << fmt::format("{} of {} videos processed\n", result.rows.size(), entries.size());
  if (!entries.empty() && result.rows.empty()) return kExitFailure;
  return kExitOk;
}

int cmd_train(const CommonOptions& common, const fs::path& features, const fs::path& out) {
  const auto config = resolve_config(common);
  const auto rows = bars::io::read_features_csv(features);
  if (rows.size() < 2) throw bars::Error(bars::ErrorCode::TooFewRows, "need at least two feature rows");
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(bars::kFeatureCount));
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
  std::vector<std::string> groups;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < bars::kFeatureCount; ++j) x(r, static_cast<Eigen::Index>(j)) = rows[i].features[j];
    y(r) = rows[i].gold_rating;
    groups.push_back(rows[i].patient_id);
  }
  std::vector<std::string> names(bars::kFeatureNames.begin(), bars::kFeatureNames.end());
  const auto trained = bars::train_rating_model(x, y, groups, config.model, names);
  bars::io::save_model(out, trained.model);
  if (!trained.converged) std::cerr << "warning: coordinate descent hit the sweep limit\n";
  std::cerr << fmt::format("lambda = {:.6g}\n", trained.model.lambda);
  return kExitOk;
}

int cmd_predict(const fs::path& model_path, const fs::path& features, const fs::path& out) {
  const auto model = bars::io::load_model(model_path);
  const auto rows = bars::io::read_features_csv(features);
  std::vector<bars::io::Prediction> preds;
  preds.reserve(rows.size());
  for (const auto& row : rows) {
    const double raw = bars::predict_raw(model, row.features);
    preds.push_back({row.video_id, raw, bars::round_to_bars(raw)});
  }
  bars::io::write_predictions_csv(out, preds);
  return kExitOk;
}

int cmd_evaluate(const CommonOptions& common, const fs::path& input, const fs::path& out, const std::string& raters,
                 const std::string& fullpoint, std::optional<std::size_t> repeats) {
  auto config = resolve_config(common);
  if (repeats) config.repeats = *repeats;
  std::vector<bars::ProcessingError> errors;
  auto rows = features_from(input, config, common.jobs, &errors);

  json doc;
  doc["config"] = bars::config_to_json(config);
  doc["fullpoint"] = fullpoint;
  doc["n_input_videos"] = rows.size() + errors.size();

  const bars::EvalConfig eval{config.model};
  if (fullpoint == "discard") {
    const auto before = rows.size();
    rows = bars::fullpoint_discard(rows);
    doc["n_discarded"] = before - rows.size();
  }
  auto report = bars::run_lopo(rows, eval);
  for (const auto& e : errors) report.excluded.push_back({e.video_id, e.stage, e.reason});
  if (!raters.empty()) bars::attach_rater_agreement(report, bars::io::read_raters_csv(raters));
  doc["report"] = bars::io::report_to_json(report);
  if (fullpoint == "round")
    doc["random_rounding"] =
        bars::io::random_rounding_to_json(bars::fullpoint_random_round(rows, eval, config.model.seed, config.repeats));

  bars::io::write_json(out, doc);
  std::cerr << fmt::format("videos {}  MAE {:.4f}  Pearson {}  errors<1 {:.3f}\n", report.per_video.size(),
                           report.mae, report.pearson ? fmt::format("{:.4f}", *report.pearson) : "n/a",
                           report.frac_err_lt_1);
  return kExitOk;
}

int cmd_synth(const fs::path& dir, int patients, int videos_per_patient, std::uint64_t seed, bool camera_motion,
              bool no_flow) {
  bars::DatasetParams params;
  params.n_patients = patients;
  params.videos_per_patient = videos_per_patient;
  params.seed = seed;
  if (camera_motion) params.exam.camera_motion = bars::CameraDrift{};
  if (no_flow) params.exam.dense_trajectories = false;
  const auto dataset = bars::generate_dataset(params);
  auto exams = dataset.exams;
  if (no_flow)
    for (auto& exam : exams) exam.flow.clear();
  const auto manifest = bars::io::write_synthetic_dataset(dir, {std::move(exams), dataset.patient_severity});
  std::cout << manifest.string() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BARS finger-to-nose severity pipeline"};
  app.require_subcommand(1);
  CommonOptions common;

  std::string manifest, out, errors_path, dump_dir;
  auto* process = app.add_subcommand("process", "Manifest of keypoint tracks -> features CSV");
  add_common(process, common);
  process->add_option("manifest", manifest, "Dataset manifest CSV")->required();
  process->add_option("-o,--out", out, "Features CSV")->required();
  process->add_option("--errors", errors_path, "Error sidecar CSV (default: <out>.errors.csv)");
  process->add_option("--dump-dir", dump_dir, "Write per-video segmentation and transform JSON here");

  std::string features, model_path;
  auto* train = app.add_subcommand("train", "Features CSV -> model JSON");
  add_common(train, common);
  train->add_option("features", features, "Features CSV")->required();
  train->add_option("-o,--out", out, "Model JSON")->required();
  train->add_option("--seed", common.seed, "Cross-validation seed");

  auto* predict = app.add_subcommand("predict", "Model JSON + features CSV -> predictions CSV");
  predict->add_option("model", model_path, "Model JSON")->required();
  predict->add_option("features", features, "Features CSV")->required();
  predict->add_option("-o,--out", out, "Predictions CSV")->required();

  std::string input, raters, fullpoint = "none";
  std::optional<std::size_t> repeats;
  auto* evaluate = app.add_subcommand("evaluate", "Leave-one-patient-out evaluation -> report JSON");
  add_common(evaluate, common);
  evaluate->add_option("input", input, "Manifest or features CSV")->required();
  evaluate->add_option("-o,--out", out, "Report JSON")->required();
  evaluate->add_option("--raters", raters, "Rater matrix CSV (video_id,rater_id,rating)");
  evaluate->add_option("--fullpoint", fullpoint, "Full-point experiment")
      ->check(CLI::IsMember({"none", "discard", "round"}));
  evaluate->add_option("--repeats", repeats, "Random-rounding repeats")->check(CLI::PositiveNumber);
  evaluate->add_option("--seed", common.seed, "Seed for CV folds and random rounding");

  std::string synth_dir;
  int patients = 40, vpp = 2;
  std::uint64_t synth_seed = 0;
  bool camera_motion = false, no_flow = false;
  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset (manifest + per-video CSVs)");
  synth->add_option("dir", synth_dir, "Output directory")->required();
  synth->add_option("--patients", patients, "Number of patients")->check(CLI::PositiveNumber);
  synth->add_option("--videos-per-patient", vpp, "Videos per patient")->check(CLI::PositiveNumber);
  synth->add_option("--seed", synth_seed, "Generator seed");
  synth->add_flag("--camera-motion", camera_motion, "Add slow camera zoom, roll and pan");
  synth->add_flag("--no-flow", no_flow, "Omit optical flow and dense trajectory files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*process) return cmd_process(common, manifest, out, errors_path, dump_dir);
    if (*train) return cmd_train(common, features, out);
    if (*predict) return cmd_predict(model_path, features, out);
    if (*evaluate) return cmd_evaluate(common, input, out, raters, fullpoint, repeats);
    if (*synth) return cmd_synth(synth_dir, patients, vpp, synth_seed, camera_motion, no_flow);
  } catch (const bars::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    const auto code = e.code();
    return code == bars::ErrorCode::Schema || code == bars::ErrorCode::Io ? kExitUsage : kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
