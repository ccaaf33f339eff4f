#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bars/features.hpp"
#include "bars/model.hpp"
#include "bars/signal.hpp"

namespace bars {

/// One video's features plus the labels the evaluation needs.
struct FeatureRow {
  std::string video_id;
  std::string patient_id;
  Hand hand = Hand::Right;
  double gold_rating = 0.0;
  std::array<double, kFeatureCount> features{};
};

struct Fold {
  std::string patient_id;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// One fold per patient, ordered by patient id.
std::vector<Fold> lopo_folds(std::span<const FeatureRow> dataset);

double mae(std::span<const double> pred, std::span<const double> gold);

/// Throws ZeroVariance when either input is constant.
double pearson(std::span<const double> pred, std::span<const double> gold);

/// ICC(2,1): two-way random effects, single rater, absolute agreement.
/// `ratings[i][k]` is rater k's score for target i.
double icc(const std::vector<std::vector<double>>& ratings);

struct ErrorHistogram {
  std::array<std::size_t, 9> counts{};  // |error| = 0, 0.5, ..., 4
  double frac_err_lt_1 = 0.0;
};

ErrorHistogram error_histogram(std::span<const double> pred, std::span<const double> gold);

/// Specialist ratings per video (plus the gold rating when known).
struct RaterEntry {
  std::string video_id;
  std::optional<double> gold;
  std::vector<double> specialists;
};

using RaterMatrix = std::vector<RaterEntry>;

struct RangeAgreement {
  double within = 0.0;   // min <= pred <= max
  double relaxed = 0.0;  // min - 0.5 <= pred <= max + 0.5
};

/// `pred[i]` is compared against `raters[i]`. With include_gold the gold
/// rating joins the specialist range.
RangeAgreement within_range_rate(std::span<const double> pred, const RaterMatrix& raters, bool include_gold = false);

/// Rows whose gold rating is a whole point.
std::vector<FeatureRow> fullpoint_discard(std::span<const FeatureRow> dataset);

struct EvalConfig {
  ModelConfig model;
};

struct VideoPrediction {
  std::string video_id;
  std::string patient_id;
  double gold = 0.0;
  double predicted_raw = 0.0;
  double predicted_rounded = 0.0;
};

struct Exclusion {
  std::string video_id;
  std::string stage;
  std::string reason;
};

struct FoldSummary {
  std::string patient_id;
  double lambda = 0.0;
  bool converged = true;
};

struct EvaluationReport {
  std::vector<VideoPrediction> per_video;
  std::vector<FoldSummary> folds;
  std::vector<Exclusion> excluded;
  double mae = 0.0;
  std::optional<double> pearson;      // nullopt when either side has zero variance
  std::optional<double> pearson_raw;  // on unrounded predictions, diagnostic
  std::optional<double> icc;          // ICC(2,1) between gold and rounded prediction
  ErrorHistogram histogram;
  double frac_err_lt_1 = 0.0;
  std::optional<RangeAgreement> within_range;            // specialists only
  std::optional<RangeAgreement> within_range_with_gold;  // gold joins the range
};

/// Leave-one-patient-out: per fold, train on every other patient and
/// predict the held-out patient's videos. Fold failures turn into exclusion
/// records for that fold's videos.
EvaluationReport run_lopo(std::span<const FeatureRow> dataset, const EvalConfig& config);

/// The LOPO loop with folds run one after another; reference for run_lopo.
EvaluationReport run_lopo_serial(std::span<const FeatureRow> dataset, const EvalConfig& config);

/// Adds within-range rates to a report, matching raters by video id.
void attach_rater_agreement(EvaluationReport& report, const RaterMatrix& raters);

struct MeanWithError {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t samples = 0;
};

struct RandomRoundingResult {
  MeanWithError mae;
  MeanWithError pearson;  // over repeats where Pearson is defined
  MeanWithError icc;
  std::size_t repeats = 0;
};

/// Each half-point gold label of repeat k rounds up or down with
/// probability 1/2, drawn from a stream keyed by (seed, k, video index).
std::vector<FeatureRow> random_round_labels(std::span<const FeatureRow> dataset, std::uint64_t seed, std::size_t repeat);

/// Random rounding repeated `repeats` times, a full LOPO run each time.
RandomRoundingResult fullpoint_random_round(std::span<const FeatureRow> dataset, const EvalConfig& config,
                                            std::uint64_t seed, std::size_t repeats = 100);

}  // namespace bars
