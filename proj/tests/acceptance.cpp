// Acceptance suite: one PASS/FAIL line per criterion, with runtime.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "bars/dataset.hpp"
#include "bars/error.hpp"
#include "bars/eval.hpp"
#include "bars/features.hpp"
#include "bars/io.hpp"
#include "bars/model.hpp"
#include "bars/segment.hpp"
#include "bars/stabilize.hpp"
#include "bars/synth.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace bars;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

const fs::path kWork = fs::temp_directory_path() / "bars_acceptance";

int run_cli(const std::string& args) {
  const std::string cmd = "\"" BARS_CLI_PATH "\" " + args + " >>\"" + (kWork / "cli.log").string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------- 1

Outcome similarity_recovery() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(-1.0, 1.0), coord(-300.0, 300.0);
  double worst_param = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const SimilarityTransform truth{std::exp(0.7 * u(rng)), 3.0 * u(rng), {200.0 * u(rng), 200.0 * u(rng)}};
    PointCorrespondences c;
    const int n = 3 + trial % 20;
    for (int i = 0; i < n; ++i) {
      const Point2 p{coord(rng), coord(rng)};
      c.pairs.emplace_back(p, truth.apply(p));
    }
    const auto est = estimate_similarity(c).transform;
    worst_param = std::max({worst_param, std::abs(est.scale - truth.scale), std::abs(est.rotation - truth.rotation),
                            std::abs(est.translation.x - truth.translation.x),
                            std::abs(est.translation.y - truth.translation.y)});
  }

  // Chain of camera motions applied to a static point, then undone.
  double worst_round_trip = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<SimilarityTransform> gaps;
    for (int i = 0; i < 100; ++i) gaps.push_back({std::exp(0.01 * u(rng)), 0.01 * u(rng), {2.0 * u(rng), 2.0 * u(rng)}});
    const Point2 world{coord(rng), coord(rng)};
    KeypointTrack observed;
    Point2 p = world;
    observed.frames.push_back({p.x, p.y, 1.0});
    for (const auto& g : gaps) {
      p = g.apply(p);
      observed.frames.push_back({p.x, p.y, 1.0});
    }
    const auto stable = stabilize_track(observed, gaps);
    const auto back = destabilize_track(stable, gaps);
    for (std::size_t f = 0; f < observed.frames.size(); ++f) {
      worst_round_trip = std::max({worst_round_trip, std::hypot(stable.frames[f].x - world.x, stable.frames[f].y - world.y),
                                   std::hypot(back.frames[f].x - observed.frames[f].x,
                                              back.frames[f].y - observed.frames[f].y)});
    }
  }
  return {worst_param <= 1e-9 && worst_round_trip <= 1e-9,
          fmt::format("max param err {:.2e}, max round-trip err {:.2e}", worst_param, worst_round_trip)};
}

// ---------------------------------------------------------------- 2

Outcome hysteresis_oracle() {
  std::mt19937_64 rng(202);
  int mismatches = 0, chatter_signals = 0, chatter_dips = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const bool chatter = trial % 2 == 0;
    const auto x = oracle::piecewise_linear(rng, 4 + trial % 16, chatter);
    const auto expected = oracle::hysteresis(x, 0.0, 1.0, 0.6, 0.4);
    std::vector<oracle::Event> got;
    try {
      for (const auto& e : hysteresis_events(x, {0.0, 1.0})) got.push_back({e.kind == EventKind::Forward, e.frame});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoEvents) throw;
    }
    if (got != expected) ++mismatches;
    if (chatter) {
      ++chatter_signals;
      for (double v : x) chatter_dips += v > 0.4 && v < 0.6;
    }
  }
  return {mismatches == 0 && chatter_dips > 0,
          fmt::format("500 signals, {} mismatches, {} chatter signals with {} in-band samples", mismatches,
                      chatter_signals, chatter_dips)};
}

// ---------------------------------------------------------------- 3

Outcome cycle_designation() {
  int cases = 0, failures = 0;
  for (int len = 0; len <= 8; ++len) {
    for (int mask = 0; mask < (1 << len); ++mask) {
      std::string kinds;
      std::vector<CrossingEvent> events;
      for (int i = 0; i < len; ++i) {
        const bool fwd = (mask >> i) & 1;
        kinds.push_back(fwd ? 'F' : 'B');
        events.push_back({fwd ? EventKind::Forward : EventKind::Backward, static_cast<std::size_t>(10 * (i + 1))});
      }
      ++cases;
      const bool alternating = std::adjacent_find(kinds.begin(), kinds.end()) == kinds.end();
      const int fnf = oracle::count_triples(kinds, 'B');
      const int nfn = oracle::count_triples(kinds, 'F');
      try {
        const auto set = build_cycles(events, 100);
        const auto want = fnf >= nfn ? Designation::FingerNoseFinger : Designation::NoseFingerNose;
        const bool ok = alternating && set.designation == want &&
                        set.size() == static_cast<std::size_t>(std::max(fnf, nfn)) &&
                        count_cycles(events, EventKind::Backward) == static_cast<std::size_t>(fnf) &&
                        count_cycles(events, EventKind::Forward) == static_cast<std::size_t>(nfn);
        failures += !ok;
      } catch (const Error& e) {
        const bool ok = alternating ? (std::max(fnf, nfn) == 0 && e.code() == ErrorCode::NoCycles)
                                    : e.code() == ErrorCode::InvalidArgument;
        failures += !ok;
      }
    }
  }
  return {failures == 0, fmt::format("{} event sequences (length 0-8), {} disagreements", cases, failures)};
}

// ---------------------------------------------------------------- 4

Outcome apen_oracle() {
  std::mt19937_64 rng(404);
  std::normal_distribution<double> g(0, 1);
  std::uniform_int_distribution<int> len(10, 200);
  double worst = 0.0;
  int comparisons = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(static_cast<std::size_t>(len(rng)));
    double walk = 0.0;
    for (auto& v : x) v = trial % 2 ? g(rng) : (walk += g(rng));
    for (int m : {2, 3})
      for (double r : kApenTolerances) {
        worst = std::max(worst, std::abs(apen(x, static_cast<std::size_t>(m), r) - oracle::apen(x, m, r)));
        ++comparisons;
      }
  }
  bool constant_zero = true;
  for (double level : {0.0, 3.7, -1e6}) {
    const std::vector<double> flat(120, level);
    for (int m : {2, 3})
      for (double r : kApenTolerances) constant_zero &= apen(flat, static_cast<std::size_t>(m), r) == 0.0;
  }
  return {worst <= 1e-10 && constant_zero,
          fmt::format("{} comparisons, max |diff| {:.2e}, constant series exactly 0: {}", comparisons, worst,
                      constant_zero ? "yes" : "no")};
}

// ---------------------------------------------------------------- 5

Eigen::MatrixXd gaussian(std::mt19937_64& rng, Eigen::Index n, Eigen::Index p) {
  std::normal_distribution<double> g(0, 1);
  Eigen::MatrixXd x(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = g(rng);
  return x;
}

Outcome lasso_checks() {
  std::mt19937_64 rng(505);
  std::uniform_int_distribution<int> rows(20, 50);
  bool shrink_ok = true;
  double worst_ls = 0.0, worst_soft = 0.0;
  int increases = 0, sweeps = 0;
  LassoOptions record;
  record.record_objective = true;

  for (int trial = 0; trial < 100; ++trial) {
    const auto raw = gaussian(rng, rows(rng), 14);
    const auto x = standardize_fit(raw).apply(raw);
    Eigen::VectorXd beta = gaussian(rng, 14, 1).col(0);
    const Eigen::VectorXd y = x * beta + 0.5 * gaussian(rng, x.rows(), 1).col(0);

    // (a)
    const double lmax = lambda_max(x, y);
    for (double s : {1.0, 1.01, 2.0, 100.0}) shrink_ok &= (lasso_fit(x, y, lmax * s).weights.array() == 0.0).all();

    // (b)
    const auto [w, b] = oracle::least_squares(x, y);
    const auto fit = lasso_fit(x, y, 0.0);
    worst_ls = std::max({worst_ls, (fit.weights - w).cwiseAbs().maxCoeff(), std::abs(fit.intercept - b)});

    // (d)
    for (double frac : {0.5, 0.1, 0.01, 1e-3}) {
      const auto path = lasso_fit(x, y, lmax * frac, record);
      sweeps += path.sweeps;
      for (std::size_t k = 1; k < path.objective.size(); ++k)
        increases += path.objective[k] > path.objective[k - 1] * (1.0 + 1e-12);
    }
  }

  // (c)
  for (int trial = 0; trial < 100; ++trial) {
    const auto raw = gaussian(rng, rows(rng), 1);
    const auto x = standardize_fit(raw).apply(raw);
    const Eigen::VectorXd y = 2.0 * x.col(0) + gaussian(rng, x.rows(), 1).col(0);
    const Eigen::VectorXd yc = y.array() - y.mean();
    const double c = x.col(0).dot(yc) / static_cast<double>(x.rows());
    for (double lambda : {0.0, 0.3, 1.0, 2.0, 5.0}) {
      const double expected = std::copysign(std::max(0.0, std::abs(c) - lambda), c);
      worst_soft = std::max(worst_soft, std::abs(lasso_fit(x, y, lambda).weights[0] - expected));
    }
  }
  return {shrink_ok && worst_ls <= 1e-6 && worst_soft <= 1e-10 && increases == 0,
          fmt::format("(a) exact zeros {}; (b) max err vs normal equations {:.2e}; (c) max soft-threshold err {:.2e}; "
                      "(d) {} objective increases over {} sweeps",
                      shrink_ok ? "yes" : "no", worst_ls, worst_soft, increases, sweeps)};
}

// ---------------------------------------------------------------- 6

Outcome metric_oracles() {
  const std::vector<double> a{1, 2, 3, 4}, b{1, 3, 2, 4};
  const double r = pearson(a, b);

  std::mt19937_64 rng(606);
  std::normal_distribution<double> g(0, 1);
  double worst_icc = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + trial % 40, k = 2 + trial % 5;
    std::vector<std::vector<double>> m(n, std::vector<double>(k));
    for (auto& row : m) {
      const double target = 1.5 * g(rng);
      for (std::size_t j = 0; j < k; ++j) row[j] = target + 0.2 * static_cast<double>(j) + 0.7 * g(rng);
    }
    worst_icc = std::max(worst_icc, std::abs(icc(m) - oracle::icc21(m)));
  }

  std::uniform_int_distribution<int> level(0, 8);
  int count_mismatch = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> pred(30), gold(30);
    for (std::size_t i = 0; i < 30; ++i) pred[i] = level(rng) / 2.0, gold[i] = level(rng) / 2.0;
    double abs_sum = 0.0;
    std::array<std::size_t, 9> bins{};
    std::size_t below = 0;
    for (std::size_t i = 0; i < 30; ++i) {
      const int half_steps = std::abs(static_cast<int>(2 * pred[i]) - static_cast<int>(2 * gold[i]));
      abs_sum += half_steps / 2.0;
      ++bins[static_cast<std::size_t>(half_steps)];
      below += half_steps < 2;
    }
    const auto h = error_histogram(pred, gold);
    count_mismatch += std::abs(mae(pred, gold) - abs_sum / 30.0) > 1e-15 || h.counts != bins ||
                      h.frac_err_lt_1 != static_cast<double>(below) / 30.0;
  }
  return {std::abs(r - 0.8) <= 1e-12 && worst_icc <= 1e-9 && count_mismatch == 0,
          fmt::format("Pearson {:.15f}; ICC max |diff| {:.2e} over 100 matrices; MAE/histogram mismatches {}", r,
                      worst_icc, count_mismatch)};
}

// ---------------------------------------------------------------- 7

constexpr std::uint64_t kSeed = 7;
const fs::path kData = kWork / "synthetic";
const fs::path kFeatures = kWork / "features.csv";

Outcome synthetic_end_to_end() {
  if (run_cli(fmt::format("synth {} --patients 40 --videos-per-patient 2 --seed {}", q(kData), kSeed)) != 0)
    return {false, "synth command failed"};
  if (run_cli(fmt::format("process {} -o {}", q(kData / "manifest.csv"), q(kFeatures))) != 0)
    return {false, "process command failed"};
  const auto a = kWork / "report_a.json", b = kWork / "report_b.json";
  if (run_cli(fmt::format("evaluate {} -o {} --seed {}", q(kData / "manifest.csv"), q(a), kSeed)) != 0 ||
      run_cli(fmt::format("evaluate {} -o {} --seed {}", q(kData / "manifest.csv"), q(b), kSeed)) != 0)
    return {false, "evaluate command failed"};

  const bool identical = slurp(a) == slurp(b);
  const auto doc = json::parse(slurp(a));
  const auto& report = doc["report"];
  std::set<double> levels;
  for (const auto& v : report["per_video"]) levels.insert(v["gold"].get<double>());
  const double pearson = report["pearson"].is_null() ? -1.0 : report["pearson"].get<double>();
  const double mae = report["mae"];
  const double frac = report["frac_err_lt_1"];
  const std::size_t n = report["n_videos"];
  const bool spread = levels.count(0.0) && levels.count(4.0) && levels.size() >= 7;
  return {identical && spread && n == 80 && pearson >= 0.8 && mae <= 0.5 && frac >= 0.85,
          fmt::format("{} videos, {} gold levels, Pearson {:.4f}, MAE {:.4f}, errors<1 {:.1f}%, rerun identical {}", n,
                      levels.size(), pearson, mae, 100.0 * frac, identical ? "yes" : "no")};
}

// ---------------------------------------------------------------- 8

std::vector<VideoInputs> inputs_of(const SyntheticDataset& d) {
  std::vector<VideoInputs> out;
  for (const auto& e : d.exams) out.push_back({e.record, e.flow, e.trajectories});
  return out;
}

Outcome stabilization_end_to_end() {
  DatasetParams params;
  params.seed = kSeed;
  const auto clean = process_dataset(inputs_of(generate_dataset(params)), {});
  params.exam.camera_motion = CameraDrift{};
  const auto drift_inputs = inputs_of(generate_dataset(params));
  const auto stabilized = process_dataset(drift_inputs, {});
  PipelineConfig off;
  off.stabilize = false;
  const auto raw = process_dataset(drift_inputs, off);

  if (!clean.errors.empty() || !stabilized.errors.empty() || clean.rows.size() != stabilized.rows.size())
    return {false, fmt::format("processing failures: clean {}, stabilized {}", clean.errors.size(),
                               stabilized.errors.size())};
  std::size_t stabilized_videos = 0;
  for (const auto& v : stabilized.processed) stabilized_videos += v.stabilized;

  // Per feature: total absolute deviation relative to the drift-free total.
  double worst = 0.0;
  std::string worst_name;
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    double diff = 0.0, base = 0.0;
    for (std::size_t i = 0; i < clean.rows.size(); ++i) {
      diff += std::abs(stabilized.rows[i].features[j] - clean.rows[i].features[j]);
      base += std::abs(clean.rows[i].features[j]);
    }
    const double rel = base > 0.0 ? diff / base : diff;
    if (rel > worst) worst = rel, worst_name = kFeatureNames[j];
  }

  const EvalConfig eval{ModelConfig{.seed = kSeed}};
  const auto with = run_lopo(stabilized.rows, eval);
  double without_pearson = 0.0;
  std::string without_note;
  if (raw.rows.size() < 4) {
    without_note = fmt::format("{} of 80 videos survive without stabilization", raw.rows.size());
  } else {
    const auto without = run_lopo(raw.rows, eval);
    without_pearson = without.pearson.value_or(0.0);
    without_note = fmt::format("{} videos", without.per_video.size());
  }
  const double drop = with.pearson.value_or(0.0) - without_pearson;
  return {worst < 0.05 && drop > 0.02 && stabilized_videos == stabilized.rows.size(),
          fmt::format("{} stabilized; worst feature deviation {:.2f}% ({}); Pearson {:.4f} stabilized vs {:.4f} "
                      "unstabilized ({}), drop {:.4f}",
                      stabilized_videos, 100.0 * worst, worst_name, with.pearson.value_or(0.0), without_pearson,
                      without_note, drop)};
}

// ---------------------------------------------------------------- 9

Outcome fullpoint_experiments() {
  if (!fs::exists(kFeatures)) return {false, "features from criterion 7 missing"};
  const auto rows = io::read_features_csv(kFeatures);
  std::set<std::string> whole;
  for (const auto& r : rows)
    if (r.gold_rating == std::floor(r.gold_rating)) whole.insert(r.video_id);

  const auto discard = kWork / "discard.json";
  if (run_cli(fmt::format("evaluate {} -o {} --fullpoint discard --seed {}", q(kFeatures), q(discard), kSeed)) != 0)
    return {false, "evaluate --fullpoint discard failed"};
  const auto discard_doc = json::parse(slurp(discard));
  std::set<std::string> kept;
  for (const auto& v : discard_doc["report"]["per_video"]) kept.insert(v["video_id"].get<std::string>());
  const bool discard_ok = kept == whole;

  const auto r1 = kWork / "round_a.json", r2 = kWork / "round_b.json";
  const auto round_cmd = [&](const fs::path& in, const fs::path& out) {
    return run_cli(fmt::format("evaluate {} -o {} --fullpoint round --repeats 100 --seed {}", q(in), q(out), kSeed));
  };
  if (round_cmd(kFeatures, r1) != 0 || round_cmd(kFeatures, r2) != 0) return {false, "evaluate --fullpoint round failed"};
  const bool reproducible = slurp(r1) == slurp(r2);
  const auto rr = json::parse(slurp(r1))["random_rounding"];

  // Whole-point labels only: every repeat sees the same data.
  std::vector<FeatureRow> integer_rows;
  for (const auto& r : rows)
    if (whole.count(r.video_id)) integer_rows.push_back(r);
  const auto integer_features = kWork / "integer_features.csv";
  io::write_features_csv(integer_features, integer_rows);
  const auto r3 = kWork / "round_integer.json";
  if (round_cmd(integer_features, r3) != 0) return {false, "evaluate --fullpoint round on whole-point labels failed"};
  const auto zero = json::parse(slurp(r3))["random_rounding"];
  const double se_mae = zero["mae"]["standard_error"], se_pearson = zero["pearson"]["standard_error"],
               se_icc = zero["icc"]["standard_error"];

  return {discard_ok && reproducible && rr["repeats"] == 100 && se_mae == 0.0 && se_pearson == 0.0 && se_icc == 0.0,
          fmt::format("discard keeps {}/{} videos (whole-point set match {}); round x100: MAE {:.4f} +- {:.4f}, "
                      "Pearson {:.4f} +- {:.4f}, rerun identical {}; whole-point-only SE {} / {} / {}",
                      kept.size(), rows.size(), discard_ok ? "yes" : "no", rr["mae"]["mean"].get<double>(),
                      rr["mae"]["standard_error"].get<double>(), rr["pearson"]["mean"].get<double>(),
                      rr["pearson"]["standard_error"].get<double>(), reproducible ? "yes" : "no", se_mae, se_pearson,
                      se_icc)};
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  fs::remove_all(kWork);
  fs::create_directories(kWork);

  const std::vector<Criterion> criteria{
      {1, "similarity transform recovery", 1.0, similarity_recovery},
      {2, "hysteresis oracle", 5.0, hysteresis_oracle},
      {3, "cycle designation", 1.0, cycle_designation},
      {4, "approximate entropy oracle", 10.0, apen_oracle},
      {5, "LASSO correctness", 10.0, lasso_checks},
      {6, "metric oracles", 2.0, metric_oracles},
      {7, "synthetic end-to-end", 120.0, synthetic_end_to_end},
      {8, "stabilization end-to-end", 120.0, stabilization_end_to_end},
      {9, "full-point experiments", 300.0, fullpoint_experiments},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.limit_s;
    const bool pass = out.pass && in_time;
    failed += !pass;
    std::cout << fmt::format("{} {} {}: {} [{:.2f} s, limit {:.0f} s{}]", pass ? "PASS" : "FAIL", c.id, c.name,
                             out.detail, secs, c.limit_s, in_time ? "" : ", too slow")
              << std::endl;
  }
  std::cout << fmt::format("{} of {} criteria passed", criteria.size() - static_cast<std::size_t>(failed),
                           criteria.size())
            << std::endl;
  if (failed == 0) fs::remove_all(kWork);
  return failed == 0 ? 0 : 1;
}
