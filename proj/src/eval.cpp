#include "bars/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "bars/error.hpp"
#include "bars/rng.hpp"

namespace bars {

namespace {

void check_pair(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "prediction and gold lengths differ");
  if (a.empty()) throw Error(ErrorCode::EmptyInput, "no predictions");
}

std::optional<double> try_pearson(std::span<const double> a, std::span<const double> b) {
  try {
    return pearson(a, b);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ZeroVariance) return std::nullopt;
    throw;
  }
}

std::optional<double> try_icc(const std::vector<std::vector<double>>& ratings) {
  try {
    return icc(ratings);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ZeroVariance) return std::nullopt;
    throw;
  }
}

/// Welford accumulator; identical samples give exactly zero spread.
class RunningStats {
 public:
  void add(double v) {
    ++n_;
    const double delta = v - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (v - mean_);
  }

  MeanWithError summary() const {
    MeanWithError out;
    out.samples = n_;
    out.mean = mean_;
    if (n_ > 1) out.standard_error = std::sqrt(m2_ / static_cast<double>(n_ - 1)) / std::sqrt(static_cast<double>(n_));
    return out;
  }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct FoldOutcome {
  std::vector<double> raw;  // one per test video
  double lambda = 0.0;
  bool converged = true;
  std::string failure;
};

FoldOutcome run_fold(std::span<const FeatureRow> dataset, const Fold& fold, const EvalConfig& config) {
  FoldOutcome out;
  try {
    const auto rows = static_cast<Eigen::Index>(fold.train.size());
    Eigen::MatrixXd x(rows, static_cast<Eigen::Index>(kFeatureCount));
    Eigen::VectorXd y(rows);
    std::vector<std::string> groups;
    for (Eigen::Index i = 0; i < rows; ++i) {
      const auto& row = dataset[fold.train[static_cast<std::size_t>(i)]];
      for (std::size_t j = 0; j < kFeatureCount; ++j) x(i, static_cast<Eigen::Index>(j)) = row.features[j];
      y(i) = row.gold_rating;
      groups.push_back(row.patient_id);
    }
    const auto trained = train_rating_model(x, y, groups, config.model,
                                            std::vector<std::string>(kFeatureNames.begin(), kFeatureNames.end()));
    out.lambda = trained.model.lambda;
    out.converged = trained.converged;
    for (std::size_t idx : fold.test) out.raw.push_back(predict_raw(trained.model, dataset[idx].features));
  } catch (const std::exception& e) {
    out.raw.clear();
    out.failure = e.what();
  }
  return out;
}

EvaluationReport assemble(std::span<const FeatureRow> dataset, const std::vector<Fold>& folds,
                          const std::vector<FoldOutcome>& outcomes) {
  EvaluationReport report;
  std::vector<std::optional<double>> raw(dataset.size());
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const auto& outcome = outcomes[f];
    report.folds.push_back({folds[f].patient_id, outcome.lambda, outcome.converged});
    if (!outcome.failure.empty()) {
      for (std::size_t idx : folds[f].test) report.excluded.push_back({dataset[idx].video_id, "lopo", outcome.failure});
      continue;
    }
    for (std::size_t t = 0; t < folds[f].test.size(); ++t) raw[folds[f].test[t]] = outcome.raw[t];
  }

  std::vector<double> gold, rounded, unrounded;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (!raw[i]) continue;
    if (!std::isfinite(*raw[i])) {
      report.excluded.push_back({dataset[i].video_id, "predict", "NonFinite: prediction is not finite"});
      continue;
    }
    const double r = round_to_bars(*raw[i]);
    report.per_video.push_back({dataset[i].video_id, dataset[i].patient_id, dataset[i].gold_rating, *raw[i], r});
    gold.push_back(dataset[i].gold_rating);
    rounded.push_back(r);
    unrounded.push_back(*raw[i]);
  }
  if (gold.empty()) throw Error(ErrorCode::EmptyResult, "every fold failed; nothing to evaluate");

  report.mae = mae(rounded, gold);
  report.pearson = try_pearson(rounded, gold);
  report.pearson_raw = try_pearson(unrounded, gold);
  if (gold.size() >= 2) {
    std::vector<std::vector<double>> pairs;
    for (std::size_t i = 0; i < gold.size(); ++i) pairs.push_back({gold[i], rounded[i]});
    report.icc = try_icc(pairs);
  }
  report.histogram = error_histogram(rounded, gold);
  report.frac_err_lt_1 = report.histogram.frac_err_lt_1;
  return report;
}

EvaluationReport lopo_impl(std::span<const FeatureRow> dataset, const EvalConfig& config, bool parallel) {
  const auto folds = lopo_folds(dataset);
  std::vector<FoldOutcome> outcomes(folds.size());
  const auto count = static_cast<std::ptrdiff_t>(folds.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::ptrdiff_t f = 0; f < count; ++f)
    outcomes[static_cast<std::size_t>(f)] = run_fold(dataset, folds[static_cast<std::size_t>(f)], config);
  return assemble(dataset, folds, outcomes);
}

}  // namespace

std::vector<Fold> lopo_folds(std::span<const FeatureRow> dataset) {
  std::map<std::string, std::vector<std::size_t>> by_patient;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset[i].patient_id.empty()) throw Error(ErrorCode::InvalidArgument, "row without a patient id");
    by_patient[dataset[i].patient_id].push_back(i);
  }
  if (by_patient.size() < 2) throw Error(ErrorCode::SinglePatient, "LOPO needs at least two patients");

  std::vector<Fold> folds;
  for (const auto& [patient, rows] : by_patient) {
    Fold fold;
    fold.patient_id = patient;
    fold.test = rows;
    for (std::size_t i = 0; i < dataset.size(); ++i)
      if (dataset[i].patient_id != patient) fold.train.push_back(i);
    folds.push_back(std::move(fold));
  }
  return folds;
}

double mae(std::span<const double> pred, std::span<const double> gold) {
  check_pair(pred, gold);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += std::abs(pred[i] - gold[i]);
  return sum / static_cast<double>(pred.size());
}

double pearson(std::span<const double> pred, std::span<const double> gold) {
  check_pair(pred, gold);
  const double n = static_cast<double>(pred.size());
  const double mp = std::accumulate(pred.begin(), pred.end(), 0.0) / n;
  const double mg = std::accumulate(gold.begin(), gold.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double a = pred[i] - mp;
    const double b = gold[i] - mg;
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw Error(ErrorCode::ZeroVariance, "correlation undefined for constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double icc(const std::vector<std::vector<double>>& ratings) {
  const std::size_t n = ratings.size();
  if (n < 2) throw Error(ErrorCode::IncompleteMatrix, "ICC needs at least two targets");
  const std::size_t k = ratings.front().size();
  if (k < 2) throw Error(ErrorCode::IncompleteMatrix, "ICC needs at least two raters");
  for (const auto& row : ratings) {
    if (row.size() != k) throw Error(ErrorCode::IncompleteMatrix, "ragged rating matrix");
    for (double v : row)
      if (!std::isfinite(v)) throw Error(ErrorCode::IncompleteMatrix, "missing rating");
  }

  const double nd = static_cast<double>(n);
  const double kd = static_cast<double>(k);
  std::vector<double> row_mean(n, 0.0), col_mean(k, 0.0);
  double grand = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      row_mean[i] += ratings[i][j] / kd;
      col_mean[j] += ratings[i][j] / nd;
      grand += ratings[i][j];
    }
  grand /= nd * kd;

  double ss_rows = 0.0, ss_cols = 0.0, ss_err = 0.0;
  for (double m : row_mean) ss_rows += (m - grand) * (m - grand);
  for (double m : col_mean) ss_cols += (m - grand) * (m - grand);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      const double e = ratings[i][j] - row_mean[i] - col_mean[j] + grand;
      ss_err += e * e;
    }
  const double bms = kd * ss_rows / (nd - 1.0);
  const double jms = nd * ss_cols / (kd - 1.0);
  const double ems = ss_err / ((nd - 1.0) * (kd - 1.0));

  const double denom = bms + (kd - 1.0) * ems + kd * (jms - ems) / nd;
  if (!(std::abs(denom) > 0.0)) throw Error(ErrorCode::ZeroVariance, "ICC undefined for a constant matrix");
  return (bms - ems) / denom;
}

ErrorHistogram error_histogram(std::span<const double> pred, std::span<const double> gold) {
  if (pred.size() != gold.size()) throw Error(ErrorCode::LengthMismatch, "prediction and gold lengths differ");
  ErrorHistogram h;
  if (pred.empty()) return h;
  std::size_t below_one = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = std::abs(pred[i] - gold[i]);
    const auto bin = std::min<long>(std::lround(2.0 * e), static_cast<long>(h.counts.size()) - 1);
    ++h.counts[static_cast<std::size_t>(bin)];
    if (e < 1.0) ++below_one;
  }
  h.frac_err_lt_1 = static_cast<double>(below_one) / static_cast<double>(pred.size());
  return h;
}

RangeAgreement within_range_rate(std::span<const double> pred, const RaterMatrix& raters, bool include_gold) {
  if (pred.size() != raters.size()) throw Error(ErrorCode::LengthMismatch, "one rater entry per prediction required");
  if (pred.empty()) throw Error(ErrorCode::EmptyInput, "no predictions");
  std::size_t within = 0, relaxed = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto& entry = raters[i];
    if (entry.specialists.empty()) throw Error(ErrorCode::EmptyRaters, "video " + entry.video_id + " has no specialist rating");
    auto [lo, hi] = std::minmax_element(entry.specialists.begin(), entry.specialists.end());
    double low = *lo, high = *hi;
    if (include_gold && entry.gold) {
      low = std::min(low, *entry.gold);
      high = std::max(high, *entry.gold);
    }
    if (pred[i] >= low && pred[i] <= high) ++within;
    if (pred[i] >= low - 0.5 && pred[i] <= high + 0.5) ++relaxed;
  }
  const double n = static_cast<double>(pred.size());
  return {static_cast<double>(within) / n, static_cast<double>(relaxed) / n};
}

void attach_rater_agreement(EvaluationReport& report, const RaterMatrix& raters) {
  std::map<std::string, const RaterEntry*> by_video;
  for (const auto& entry : raters) by_video[entry.video_id] = &entry;

  std::vector<double> pred;
  RaterMatrix matched;
  for (const auto& v : report.per_video) {
    const auto it = by_video.find(v.video_id);
    if (it == by_video.end()) continue;
    RaterEntry entry = *it->second;
    if (!entry.gold) entry.gold = v.gold;
    matched.push_back(std::move(entry));
    pred.push_back(v.predicted_rounded);
  }
  if (matched.empty()) return;
  report.within_range = within_range_rate(pred, matched, false);
  report.within_range_with_gold = within_range_rate(pred, matched, true);
}

std::vector<FeatureRow> fullpoint_discard(std::span<const FeatureRow> dataset) {
  std::vector<FeatureRow> out;
  for (const auto& row : dataset)
    if (row.gold_rating == std::floor(row.gold_rating)) out.push_back(row);
  if (out.empty()) throw Error(ErrorCode::EmptyResult, "no whole-point videos in the dataset");
  return out;
}

EvaluationReport run_lopo(std::span<const FeatureRow> dataset, const EvalConfig& config) {
  return lopo_impl(dataset, config, true);
}

EvaluationReport run_lopo_serial(std::span<const FeatureRow> dataset, const EvalConfig& config) {
  return lopo_impl(dataset, config, false);
}

std::vector<FeatureRow> random_round_labels(std::span<const FeatureRow> dataset, std::uint64_t seed,
                                            std::size_t repeat) {
  std::vector<FeatureRow> out(dataset.begin(), dataset.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double g = out[i].gold_rating;
    if (g == std::floor(g)) continue;
    Rng rng(stream_key(seed, {0x20d, repeat, i}));
    out[i].gold_rating = rng.coin() ? std::ceil(g) : std::floor(g);
  }
  return out;
}

RandomRoundingResult fullpoint_random_round(std::span<const FeatureRow> dataset, const EvalConfig& config,
                                            std::uint64_t seed, std::size_t repeats) {
  if (repeats < 1) throw Error(ErrorCode::InvalidArgument, "need at least one repeat");
  RunningStats mae_stats, pearson_stats, icc_stats;
  for (std::size_t k = 0; k < repeats; ++k) {
    const auto rounded = random_round_labels(dataset, seed, k);
    const auto report = run_lopo(rounded, config);
    mae_stats.add(report.mae);
    if (report.pearson) pearson_stats.add(*report.pearson);
    if (report.icc) icc_stats.add(*report.icc);
  }
  return {mae_stats.summary(), pearson_stats.summary(), icc_stats.summary(), repeats};
}

}  // namespace bars
