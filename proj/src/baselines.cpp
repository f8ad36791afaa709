#include "balasso/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "balasso/error.hpp"

namespace balasso {

namespace {

// Smallest multiplier that zeroes every column: |x_j'y| <= lambda w_j / 2.
double lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
  const Eigen::VectorXd c = X.transpose() * y;
  double best = 0.0;
  for (Eigen::Index j = 0; j < c.size(); ++j)
    if (std::isfinite(w[j]) && w[j] > 0.0) best = std::max(best, 2.0 * std::abs(c[j]) / w[j]);
  return best;
}

Eigen::VectorXd path_lambda(double scale, const Eigen::VectorXd& w) {
  return w.unaryExpr([scale](double wj) {
    return std::isfinite(wj) ? scale * wj : std::numeric_limits<double>::infinity();
  });
}

}  // namespace

CrossValidatedFit cv_weighted_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& weights,
                                    RngHandle& rng, const CrossValidationConfig& cfg) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (y.size() != n || weights.size() != p) throw ParameterDomainError("cross-validation: dimension mismatch");
  if (cfg.folds < 2 || n < cfg.folds) throw ParameterDomainError("cross-validation needs 2 <= folds <= n");
  const double ratio = cfg.grid_ratio.value_or(n > p ? 1e-4 : 1e-2);
  if (cfg.grid_size < 1 || !(ratio > 0.0 && ratio < 1.0))
    throw ParameterDomainError("cross-validation: bad grid settings");

  CrossValidatedFit fit;
  const double top = lambda_max(X, y, weights);
  fit.grid.resize(cfg.grid_size);
  for (int k = 0; k < cfg.grid_size; ++k) {
    const double frac = cfg.grid_size == 1 ? 0.0 : static_cast<double>(k) / (cfg.grid_size - 1);
    fit.grid[k] = top > 0.0 ? top * std::pow(ratio, frac) : 0.0;
  }

  // Random fold labels: a shuffled 0,1,..,K-1,0,1,.. sequence.
  std::vector<int> fold(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) fold[static_cast<std::size_t>(i)] = static_cast<int>(i % cfg.folds);
  for (Eigen::Index i = n - 1; i > 0; --i) {
    const auto k = static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(i + 1));
    std::swap(fold[static_cast<std::size_t>(i)], fold[static_cast<std::size_t>(std::min(k, i))]);
  }

  fit.cv_error = Eigen::VectorXd::Zero(cfg.grid_size);
  for (int f = 0; f < cfg.folds; ++f) {
    std::vector<Eigen::Index> train, test;
    for (Eigen::Index i = 0; i < n; ++i) (fold[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
    const Eigen::MatrixXd Xtr = X(train, Eigen::all);
    const Eigen::VectorXd ytr = y(train);
    const Eigen::RowVectorXd xm = Xtr.colwise().mean();
    const double ym = ytr.mean();
    const Eigen::MatrixXd Xc = Xtr.rowwise() - xm;
    const Eigen::VectorXd yc = ytr.array() - ym;
    const Eigen::MatrixXd Xte = X(test, Eigen::all).rowwise() - xm;
    const Eigen::VectorXd yte = y(test).array() - ym;
    const WeightedLassoSolver solver(Xc, yc);
    Eigen::VectorXd warm = Eigen::VectorXd::Zero(p);
    for (int k = 0; k < cfg.grid_size; ++k) {
      warm = solver.solve(path_lambda(fit.grid[k], weights), cfg.solver, &warm).beta;
      fit.cv_error[k] += (yte - Xte * warm).squaredNorm();
    }
  }
  fit.cv_error /= static_cast<double>(n);

  Eigen::Index best = 0;
  fit.cv_error.minCoeff(&best);
  fit.lambda = fit.grid[best];
  const WeightedLassoSolver full(X, y);
  Eigen::VectorXd warm = Eigen::VectorXd::Zero(p);
  for (Eigen::Index k = 0; k <= best; ++k) warm = full.solve(path_lambda(fit.grid[k], weights), cfg.solver, &warm).beta;
  fit.beta = warm;
  return fit;
}

CrossValidatedFit cv_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, RngHandle& rng,
                           const CrossValidationConfig& cfg) {
  return cv_weighted_lasso(X, y, Eigen::VectorXd::Ones(X.cols()), rng, cfg);
}

CrossValidatedFit cv_adaptive_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, RngHandle& rng,
                                    const CrossValidationConfig& cfg) {
  Eigen::VectorXd initial;
  if (X.rows() > X.cols()) {
    Eigen::LLT<Eigen::MatrixXd> llt(X.transpose() * X);
    if (llt.info() != Eigen::Success)
      throw NumericalError("adaptive lasso: X'X is singular", condition_estimate(X.transpose() * X));
    initial = llt.solve(X.transpose() * y);
  } else {
    initial = cv_lasso(X, y, rng, cfg).beta;
  }
  const Eigen::VectorXd weights = initial.unaryExpr([](double b) {
    return b == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / std::abs(b);
  });
  return cv_weighted_lasso(X, y, weights, rng, cfg);
}

}  // namespace balasso
