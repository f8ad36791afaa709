#pragma once

#include <vector>

#include <Eigen/Dense>

#include "balasso/groups.hpp"

namespace balasso {

// Convergence: stop once the largest coefficient change in a full sweep falls
// below `tolerance`. With `check_descent` set, the objective is evaluated after
// every sweep and an increase throws std::logic_error.
struct SolverConfig {
  double tolerance = 1e-8;
  long max_iterations = 100000;
  bool check_descent = false;
};

struct LassoSolution {
  Eigen::VectorXd beta;
  double objective = 0.0;
  long sweeps = 0;
};

// (y - X b)'(y - X b) + sum_j lambda_j |b_j|. No 1/2 on the residual sum of
// squares, so every soft-threshold amount below is lambda_j / 2.
struct WeightedL1Problem {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  Eigen::VectorXd lambda;
};

// 1/2 (b - center)' precision (b - center) + sum_j lambda_j |b_j|.
struct QuadraticL1Problem {
  Eigen::MatrixXd precision;
  Eigen::VectorXd center;
  Eigen::VectorXd lambda;
};

// (y - X b)'(y - X b) + sum_g lambda_g ||b_g||_2. A non-empty ancestry
// relation is rejected by solve_group_lasso.
struct GroupL1Problem {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  GroupMap groups;
  Eigen::VectorXd lambda;
  AncestryRelation ancestry;
};

// Cyclic coordinate descent for 1/2 b'Hb - c'b + sum_j w_j |b_j|, H symmetric
// positive semi-definite. Infinite weights pin a coordinate at zero.
class QuadraticCoordinateDescent {
 public:
  QuadraticCoordinateDescent(Eigen::MatrixXd hessian, Eigen::VectorXd linear);

  Eigen::Index dimension() const { return linear_.size(); }
  const Eigen::MatrixXd& hessian() const { return hessian_; }
  const Eigen::VectorXd& linear() const { return linear_; }

  // objective field = 1/2 b'Hb - c'b + sum w|b|
  LassoSolution minimize(const Eigen::VectorXd& weights, const SolverConfig& cfg,
                         const Eigen::VectorXd* warm_start = nullptr) const;
  double objective(const Eigen::VectorXd& beta, const Eigen::VectorXd& weights) const;

 private:
  Eigen::MatrixXd hessian_;
  Eigen::VectorXd linear_;
};

// Gram-form solver for WeightedL1Problem; build once, solve for many lambda.
class WeightedLassoSolver {
 public:
  WeightedLassoSolver(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

  Eigen::Index dimension() const { return cd_.dimension(); }
  const Eigen::MatrixXd& gram() const { return cd_.hessian(); }
  const Eigen::VectorXd& xty() const { return cd_.linear(); }
  double yty() const { return yty_; }

  LassoSolution solve(const Eigen::VectorXd& lambda, const SolverConfig& cfg = {},
                      const Eigen::VectorXd* warm_start = nullptr) const;
  double objective(const Eigen::VectorXd& beta, const Eigen::VectorXd& lambda) const;

 private:
  QuadraticCoordinateDescent cd_;
  double yty_;
};

class QuadraticLassoSolver {
 public:
  QuadraticLassoSolver(const Eigen::MatrixXd& precision, const Eigen::VectorXd& center);

  Eigen::Index dimension() const { return cd_.dimension(); }
  LassoSolution solve(const Eigen::VectorXd& lambda, const SolverConfig& cfg = {},
                      const Eigen::VectorXd* warm_start = nullptr) const;
  double objective(const Eigen::VectorXd& beta, const Eigen::VectorXd& lambda) const;

 private:
  QuadraticCoordinateDescent cd_;
  double offset_;  // 1/2 center' precision center
};

// Block coordinate descent for sum-of-squares + weighted group norms. Each
// block update is solved exactly through the eigendecomposition of the
// block's Gram matrix and a scalar root find on the block norm.
class GroupLassoSolver {
 public:
  GroupLassoSolver(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, GroupMap groups);

  // Gram form: objective b'Gb - 2c'b + yty + sum lambda ||b_g||.
  static GroupLassoSolver from_gram(Eigen::MatrixXd gram, Eigen::VectorXd xty, double yty, GroupMap groups);

  Eigen::Index dimension() const { return xty_.size(); }
  Eigen::Index n_groups() const { return static_cast<Eigen::Index>(groups_.size()); }
  const GroupMap& groups() const { return groups_; }

  LassoSolution solve(const Eigen::VectorXd& lambda, const SolverConfig& cfg = {},
                      const Eigen::VectorXd* warm_start = nullptr) const;
  double objective(const Eigen::VectorXd& beta, const Eigen::VectorXd& lambda) const;

 private:
  GroupLassoSolver(Eigen::MatrixXd gram, Eigen::VectorXd xty, double yty, GroupMap groups, int);

  struct Block {
    std::vector<Eigen::Index> columns;
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenvectors;
  };

  Eigen::MatrixXd gram_;
  Eigen::VectorXd xty_;
  double yty_;
  GroupMap groups_;
  std::vector<Block> blocks_;
};

LassoSolution solve_weighted_lasso(const WeightedL1Problem& problem, const SolverConfig& cfg = {},
                                   const Eigen::VectorXd* warm_start = nullptr);
LassoSolution solve_quadratic_lasso(const QuadraticL1Problem& problem, const SolverConfig& cfg = {},
                                    const Eigen::VectorXd* warm_start = nullptr);
LassoSolution solve_group_lasso(const GroupL1Problem& problem, const SolverConfig& cfg = {},
                                const Eigen::VectorXd* warm_start = nullptr);

// sign(z) max(|z| - threshold, 0); ties at the kink go to zero.
inline double soft_threshold(double z, double threshold) {
  if (z > threshold) return z - threshold;
  if (z < -threshold) return z + threshold;
  return 0.0;
}

}  // namespace balasso
