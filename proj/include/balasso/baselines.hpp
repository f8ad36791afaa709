#pragma once

#include <optional>

#include <Eigen/Dense>

#include "balasso/rng.hpp"
#include "balasso/wlasso.hpp"

namespace balasso {

struct CrossValidationConfig {
  int folds = 5;
  int grid_size = 100;
  // Smallest lambda = ratio * largest; unset means 1e-4 when n > p and 1e-2 otherwise.
  std::optional<double> grid_ratio;
  SolverConfig solver;
};

struct CrossValidatedFit {
  Eigen::VectorXd beta;
  double lambda = 0.0;  // chosen overall multiplier
  Eigen::VectorXd grid;
  Eigen::VectorXd cv_error;  // mean held-out squared error per grid point
};

// Minimizes RSS + lambda * sum_j w_j |b_j| with lambda picked by K-fold
// cross-validation on a log-spaced grid, then refits on all rows. Infinite
// weights exclude a column. Each training fold is re-centered and its means
// applied to the held-out fold. X and y are expected centered.
CrossValidatedFit cv_weighted_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& weights,
                                    RngHandle& rng, const CrossValidationConfig& cfg = {});

CrossValidatedFit cv_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, RngHandle& rng,
                           const CrossValidationConfig& cfg = {});

// Weights 1/|b0|: b0 is least squares when n > p, else the cross-validated lasso.
CrossValidatedFit cv_adaptive_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, RngHandle& rng,
                                    const CrossValidationConfig& cfg = {});

}  // namespace balasso
