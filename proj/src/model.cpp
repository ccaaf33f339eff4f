#include "bars/model.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <numeric>
#include <optional>

#include "bars/error.hpp"
#include "bars/rng.hpp"

namespace bars {

namespace {

double soft_threshold(double z, double lambda) {
  if (z > lambda) return z - lambda;
  if (z < -lambda) return z + lambda;
  return 0.0;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& x, const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
  return out;
}

Eigen::VectorXd take_rows(const Eigen::VectorXd& y, const std::vector<Eigen::Index>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = y(rows[i]);
  return out;
}

}  // namespace

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const {
  if (static_cast<std::size_t>(x.cols()) != means.size())
    throw Error(ErrorCode::LengthMismatch, "feature count differs from the standardizer");
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const auto jj = static_cast<std::size_t>(j);
    out.col(j) = (x.col(j).array() - means[jj]) / scales[jj];
  }
  return out;
}

Standardizer standardize_fit(const Eigen::MatrixXd& x) {
  if (x.rows() < 2) throw Error(ErrorCode::TooFewRows, "standardization needs at least two rows");
  Standardizer s;
  const double n = static_cast<double>(x.rows());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double mean = x.col(j).sum() / n;
    const double sd = std::sqrt((x.col(j).array() - mean).square().sum() / n);
    const bool flat = !(sd > 1e-12 * std::max(1.0, std::abs(mean)));
    s.means.push_back(mean);
    s.scales.push_back(flat ? 1.0 : sd);
    s.constant.push_back(flat);
  }
  return s;
}

double lasso_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                       double intercept, double lambda) {
  const Eigen::VectorXd r = (y - x * w).array() - intercept;
  return r.squaredNorm() / (2.0 * static_cast<double>(x.rows())) + lambda * w.lpNorm<1>();
}

namespace {

// Centred second moments. With the intercept profiled out the loss is
// yy/2 - c'w + w'Gw/2.
struct Moments {
  Eigen::MatrixXd gram;
  Eigen::VectorXd cross;
  Eigen::RowVectorXd x_mean;
  double y_mean = 0.0;
  double yy = 0.0;
};

Moments moments_of(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const double n = static_cast<double>(x.rows());
  Moments m;
  m.x_mean = x.colwise().mean();
  m.y_mean = y.mean();
  const Eigen::MatrixXd xc = x.rowwise() - m.x_mean;
  const Eigen::VectorXd yc = y.array() - m.y_mean;
  m.gram = xc.transpose() * xc / n;
  m.cross = xc.transpose() * yc / n;
  m.yy = yc.squaredNorm() / n;
  return m;
}

double moment_objective(const Moments& m, const Eigen::VectorXd& w, double lambda) {
  return 0.5 * m.yy - m.cross.dot(w) + 0.5 * w.dot(m.gram * w) + lambda * w.lpNorm<1>();
}

// Sign pattern of the iterate; -1, 0, +1 per coordinate.
std::vector<int> sign_pattern(const Eigen::VectorXd& w) {
  std::vector<int> s(static_cast<std::size_t>(w.size()));
  for (Eigen::Index j = 0; j < w.size(); ++j) s[static_cast<std::size_t>(j)] = (w(j) > 0.0) - (w(j) < 0.0);
  return s;
}

// Minimizer of the objective restricted to the current support with signs
// held fixed: G_AA w_A = c_A - lambda s_A.
std::optional<Eigen::VectorXd> support_solve(const Moments& m, const std::vector<int>& signs, double lambda) {
  std::vector<Eigen::Index> active;
  for (std::size_t j = 0; j < signs.size(); ++j)
    if (signs[j] != 0) active.push_back(static_cast<Eigen::Index>(j));
  if (active.empty()) return std::nullopt;
  const auto k = static_cast<Eigen::Index>(active.size());
  Eigen::MatrixXd g(k, k);
  Eigen::VectorXd rhs(k);
  for (Eigen::Index a = 0; a < k; ++a) {
    rhs(a) = m.cross(active[a]) - lambda * signs[static_cast<std::size_t>(active[a])];
    for (Eigen::Index b = 0; b < k; ++b) g(a, b) = m.gram(active[a], active[b]);
  }
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(g);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return std::nullopt;
  const Eigen::VectorXd sol = ldlt.solve(rhs);
  if (!sol.allFinite()) return std::nullopt;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(m.gram.rows());
  for (Eigen::Index a = 0; a < k; ++a) w(active[a]) = sol(a);
  return w;
}

}  // namespace

double lambda_max(const Eigen::MatrixXd& x_std, const Eigen::VectorXd& y) {
  // The first coordinate update from w = 0 soft-thresholds exactly these
  // values, so lambda >= lambda_max zeroes every weight.
  const Moments m = moments_of(x_std, y);
  return m.cross.size() == 0 ? 0.0 : m.cross.cwiseAbs().maxCoeff();
}

LassoFit lasso_fit(const Eigen::MatrixXd& x_std, const Eigen::VectorXd& y, double lambda,
                   const LassoOptions& options, const std::vector<bool>& excluded,
                   const Eigen::VectorXd* warm_start) {
  if (x_std.rows() != y.size()) throw Error(ErrorCode::LengthMismatch, "X and y row counts differ");
  if (x_std.rows() < 1) throw Error(ErrorCode::TooFewRows, "no rows to fit");
  if (!(lambda >= 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda must be >= 0");

  const Eigen::Index p = x_std.cols();
  const Moments m = moments_of(x_std, y);

  std::vector<bool> skip(static_cast<std::size_t>(p), false);
  for (Eigen::Index j = 0; j < p; ++j) {
    const auto jj = static_cast<std::size_t>(j);
    skip[jj] = (jj < excluded.size() && excluded[jj]) || !(m.gram(j, j) > 0.0);
  }

  LassoFit fit;
  fit.weights = Eigen::VectorXd::Zero(p);
  if (warm_start != nullptr && warm_start->size() == p) fit.weights = *warm_start;
  for (Eigen::Index j = 0; j < p; ++j)
    if (skip[static_cast<std::size_t>(j)]) fit.weights(j) = 0.0;

  // q = G w, kept in step with the weights.
  Eigen::VectorXd q = m.gram * fit.weights;
  auto intercept = [&] { return m.y_mean - m.x_mean.dot(fit.weights); };
  if (options.record_objective)
    fit.objective.push_back(lasso_objective(x_std, y, fit.weights, intercept(), lambda));

  std::vector<int> previous_signs = sign_pattern(fit.weights);
  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (skip[static_cast<std::size_t>(j)]) continue;
      const double old = fit.weights(j);
      const double gjj = m.gram(j, j);
      const double z = m.cross(j) - q(j) + gjj * old;
      const double updated = soft_threshold(z, lambda) / gjj;
      if (updated != old) {
        q += (updated - old) * m.gram.col(j);
        fit.weights(j) = updated;
        max_change = std::max(max_change, std::abs(updated - old));
      }
    }
    fit.sweeps = sweep + 1;
    const bool done = max_change < options.tolerance;

    // Once the sign pattern repeats, jump to the minimizer on that face and
    // keep it only if the objective does not go up.
    auto signs = sign_pattern(fit.weights);
    if (!done && signs == previous_signs) {
      if (auto candidate = support_solve(m, signs, lambda)) {
        // Stop at the first coordinate that would change sign; the face
        // objective falls monotonically along the way.
        double step = 1.0;
        Eigen::Index blocking = -1;
        for (Eigen::Index j = 0; j < p; ++j) {
          const double from = fit.weights(j), to = (*candidate)(j);
          if (from != 0.0 && (to == 0.0 || (to > 0.0) != (from > 0.0))) {
            const double t = from / (from - to);
            if (t < step) step = t, blocking = j;
          }
        }
        if (blocking >= 0) {
          *candidate = fit.weights + step * (*candidate - fit.weights);
          (*candidate)(blocking) = 0.0;
        }
        if (moment_objective(m, *candidate, lambda) <= moment_objective(m, fit.weights, lambda)) {
          fit.weights = *candidate;
          q = m.gram * fit.weights;
          signs = sign_pattern(fit.weights);
        }
      }
    }
    previous_signs = std::move(signs);

    if (options.record_objective)
      fit.objective.push_back(lasso_objective(x_std, y, fit.weights, intercept(), lambda));
    if (done) {
      fit.converged = true;
      break;
    }
  }
  fit.intercept = intercept();
  return fit;
}

std::vector<double> lambda_grid(double lambda_max, int count, double ratio) {
  if (count < 1) throw Error(ErrorCode::InvalidArgument, "grid needs at least one value");
  if (!(lambda_max > 0.0)) return {0.0};
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(count));
  if (count == 1) return {lambda_max};
  const double step = std::log(ratio) / static_cast<double>(count - 1);
  for (int i = 0; i < count; ++i) grid.push_back(lambda_max * std::exp(step * i));
  grid.front() = lambda_max;
  return grid;
}

std::vector<int> assign_folds(std::size_t rows, int k_folds, std::uint64_t seed,
                              const std::vector<std::string>* groups) {
  std::vector<int> fold(rows, 0);
  Rng rng(stream_key(seed, {0xf01d}));
  if (groups == nullptr) {
    std::vector<std::size_t> order(rows);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = rows; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t i = 0; i < rows; ++i) fold[order[i]] = static_cast<int>(i % static_cast<std::size_t>(k_folds));
    return fold;
  }

  std::vector<std::string> distinct(groups->begin(), groups->end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  for (std::size_t i = distinct.size(); i > 1; --i) std::swap(distinct[i - 1], distinct[rng.below(i)]);
  std::map<std::string, int> group_fold;
  for (std::size_t i = 0; i < distinct.size(); ++i)
    group_fold[distinct[i]] = static_cast<int>(i % static_cast<std::size_t>(k_folds));
  for (std::size_t i = 0; i < rows; ++i) fold[i] = group_fold.at((*groups)[i]);
  return fold;
}

LambdaSelection select_lambda(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::span<const double> grid,
                              int k_folds, std::uint64_t seed, const std::vector<std::string>* groups) {
  if (grid.empty()) throw Error(ErrorCode::InvalidArgument, "lambda grid is empty");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] < grid[i - 1])) throw Error(ErrorCode::InvalidArgument, "lambda grid must be sorted descending");
  if (k_folds < 2) throw Error(ErrorCode::InvalidArgument, "need at least two folds");
  const auto n = static_cast<std::size_t>(x.rows());
  if (n < static_cast<std::size_t>(k_folds)) throw Error(ErrorCode::TooFewRows, "fewer rows than folds");
  if (groups != nullptr) {
    if (groups->size() != n) throw Error(ErrorCode::LengthMismatch, "one group label per row required");
    std::vector<std::string> distinct(groups->begin(), groups->end());
    std::sort(distinct.begin(), distinct.end());
    const auto count = static_cast<int>(std::unique(distinct.begin(), distinct.end()) - distinct.begin());
    if (count < 2) throw Error(ErrorCode::TooFewRows, "grouped CV needs at least two groups");
    k_folds = std::min(k_folds, count);
  }

  const auto fold_of = assign_folds(n, k_folds, seed, groups);
  const auto grid_size = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd mse(k_folds, grid_size);
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(k_folds));

#pragma omp parallel for schedule(dynamic)
  for (int f = 0; f < k_folds; ++f) {
    try {
      std::vector<Eigen::Index> train, val;
      for (std::size_t i = 0; i < n; ++i)
        (fold_of[i] == f ? val : train).push_back(static_cast<Eigen::Index>(i));
      const Eigen::MatrixXd x_train = take_rows(x, train);
      const Eigen::VectorXd y_train = take_rows(y, train);
      const auto standardizer = standardize_fit(x_train);
      const Eigen::MatrixXd xs_train = standardizer.apply(x_train);
      const Eigen::MatrixXd xs_val = standardizer.apply(take_rows(x, val));
      const Eigen::VectorXd y_val = take_rows(y, val);

      Eigen::VectorXd warm = Eigen::VectorXd::Zero(x.cols());
      for (Eigen::Index g = 0; g < grid_size; ++g) {
        const auto fit = lasso_fit(xs_train, y_train, grid[static_cast<std::size_t>(g)], {}, standardizer.constant, &warm);
        warm = fit.weights;
        const Eigen::VectorXd resid = (y_val - xs_val * fit.weights).array() - fit.intercept;
        mse(f, g) = resid.squaredNorm() / static_cast<double>(val.size());
      }
    } catch (...) {
      failures[static_cast<std::size_t>(f)] = std::current_exception();
    }
  }
  for (const auto& failure : failures)
    if (failure) std::rethrow_exception(failure);

  LambdaSelection out;
  out.folds = k_folds;
  std::size_t best = 0;
  for (Eigen::Index g = 0; g < grid_size; ++g) {
    double total = 0.0;
    for (int f = 0; f < k_folds; ++f) total += mse(f, g);
    out.cv_mse.push_back(total / k_folds);
    if (out.cv_mse.back() < out.cv_mse[best]) best = static_cast<std::size_t>(g);
  }
  out.lambda = grid[best];
  return out;
}

double predict_raw(const RatingModel& model, std::span<const double> features) {
  if (features.size() != model.weights.size())
    throw Error(ErrorCode::LengthMismatch, "feature count differs from the model");
  double out = model.intercept;
  for (std::size_t j = 0; j < features.size(); ++j)
    out += model.weights[j] * (features[j] - model.means[j]) / model.scales[j];
  return out;
}

double round_to_bars(double raw) {
  if (!std::isfinite(raw)) throw Error(ErrorCode::NonFinite, "prediction is not finite");
  const double half_points = std::floor(raw * 2.0 + 0.5);
  return std::clamp(half_points / 2.0, 0.0, 4.0);
}

TrainResult train_rating_model(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                               const std::vector<std::string>& groups, const ModelConfig& config,
                               std::vector<std::string> feature_names) {
  if (x.rows() != y.size()) throw Error(ErrorCode::LengthMismatch, "X and y row counts differ");
  const auto standardizer = standardize_fit(x);
  const Eigen::MatrixXd xs = standardizer.apply(x);
  const auto grid = lambda_grid(lambda_max(xs, y), config.grid_size, config.grid_ratio);

  TrainResult out;
  out.selection = select_lambda(x, y, grid, config.folds, config.seed, &groups);
  const auto fit = lasso_fit(xs, y, out.selection.lambda, {}, standardizer.constant);
  out.converged = fit.converged;

  auto& m = out.model;
  m.feature_names = std::move(feature_names);
  m.means = standardizer.means;
  m.scales = standardizer.scales;
  m.weights.assign(fit.weights.data(), fit.weights.data() + fit.weights.size());
  m.intercept = fit.intercept;
  m.lambda = out.selection.lambda;
  return out;
}

}  // namespace bars
