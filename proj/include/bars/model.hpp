#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace bars {

/// Per-column centring and scaling fitted on training rows. Columns with
/// zero spread get scale 1 and are flagged constant; their weight stays 0.
struct Standardizer {
  std::vector<double> means;
  std::vector<double> scales;
  std::vector<bool> constant;

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

Standardizer standardize_fit(const Eigen::MatrixXd& x);

struct LassoOptions {
  double tolerance = 1e-8;      // stop when the largest coefficient change falls below this
  int max_sweeps = 10'000;
  bool record_objective = false;
};

struct LassoFit {
  Eigen::VectorXd weights;
  double intercept = 0.0;
  int sweeps = 0;
  bool converged = false;          // false means the last iterate is reported
  std::vector<double> objective;   // per sweep, index 0 = starting point
};

/// (1/2n)||y - Xw - b||^2 + lambda ||w||_1 by cyclic coordinate descent
/// with soft thresholding, run on the centred Gram matrix. When a sweep
/// leaves the sign pattern unchanged, the exact minimizer on that support is
/// tried and kept if it does not raise the objective. The intercept is
/// unpenalized. Columns flagged in `excluded` keep weight 0. `warm_start`
/// seeds the coefficients.
LassoFit lasso_fit(const Eigen::MatrixXd& x_std, const Eigen::VectorXd& y, double lambda,
                   const LassoOptions& options = {}, const std::vector<bool>& excluded = {},
                   const Eigen::VectorXd* warm_start = nullptr);

double lasso_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                       double intercept, double lambda);

/// Smallest lambda at which every coefficient is exactly zero.
double lambda_max(const Eigen::MatrixXd& x_std, const Eigen::VectorXd& y);

/// `count` log-spaced values from lambda_max down to ratio * lambda_max.
std::vector<double> lambda_grid(double lambda_max, int count = 50, double ratio = 1e-4);

struct LambdaSelection {
  double lambda = 0.0;
  std::vector<double> cv_mse;  // per grid value
  int folds = 0;
};

/// Assigns rows to folds by a seeded shuffle. With `groups`, whole groups
/// are shuffled and dealt round-robin so no group spans two folds.
std::vector<int> assign_folds(std::size_t rows, int k_folds, std::uint64_t seed,
                              const std::vector<std::string>* groups = nullptr);

/// k-fold CV over a descending grid; each fold standardizes its own
/// training rows. Returns the grid value with the lowest mean validation
/// MSE, the larger lambda winning ties. With groups, k is capped at the
/// number of distinct groups.
LambdaSelection select_lambda(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::span<const double> grid,
                              int k_folds, std::uint64_t seed, const std::vector<std::string>* groups = nullptr);

struct RatingModel {
  std::vector<std::string> feature_names;
  std::vector<double> means;
  std::vector<double> scales;
  std::vector<double> weights;
  double intercept = 0.0;
  double lambda = 0.0;
};

/// Unrounded severity: intercept + sum w_j (f_j - mean_j) / scale_j.
double predict_raw(const RatingModel& model, std::span<const double> features);

/// Nearest half point (ties up), clamped to [0, 4].
double round_to_bars(double raw);

struct ModelConfig {
  int grid_size = 50;
  double grid_ratio = 1e-4;
  int folds = 5;
  std::uint64_t seed = 0;
};

struct TrainResult {
  RatingModel model;
  LambdaSelection selection;
  bool converged = true;
};

/// standardize -> choose lambda by grouped CV -> fit on all rows.
TrainResult train_rating_model(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                               const std::vector<std::string>& groups, const ModelConfig& config,
                               std::vector<std::string> feature_names);

}  // namespace bars
