#include "balasso/wlasso.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "balasso/error.hpp"

namespace balasso {

namespace {

void require_penalties(const Eigen::VectorXd& lambda, Eigen::Index expected, const char* who) {
  if (lambda.size() != expected)
    throw ParameterDomainError(std::string(who) + ": expected " + std::to_string(expected) + " penalties, got " +
                               std::to_string(lambda.size()));
  for (Eigen::Index j = 0; j < lambda.size(); ++j)
    if (!(lambda[j] >= 0.0))
      throw ParameterDomainError(std::string(who) + ": penalty " + std::to_string(j) + " is negative or NaN");
}

void require_config(const SolverConfig& cfg) {
  if (!(cfg.tolerance > 0.0)) throw ParameterDomainError("solver tolerance must be positive");
  if (cfg.max_iterations <= 0) throw ParameterDomainError("solver max_iterations must be positive");
}

double weighted_l1(const Eigen::VectorXd& beta, const Eigen::VectorXd& weights) {
  double total = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j)
    if (beta[j] != 0.0) total += weights[j] * std::abs(beta[j]);
  return total;
}

void check_descent(double previous, double current, long sweep) {
  if (current > previous + 1e-10 * (1.0 + std::abs(previous)))
    throw std::logic_error("coordinate descent objective increased at sweep " + std::to_string(sweep) + ": " +
                           std::to_string(previous) + " -> " + std::to_string(current));
}

Eigen::VectorXd initial_point(const Eigen::VectorXd* warm_start, Eigen::Index p) {
  if (!warm_start) return Eigen::VectorXd::Zero(p);
  if (warm_start->size() != p) throw ParameterDomainError("warm start has the wrong dimension");
  return *warm_start;
}

}  // namespace

QuadraticCoordinateDescent::QuadraticCoordinateDescent(Eigen::MatrixXd hessian, Eigen::VectorXd linear)
    : hessian_(std::move(hessian)), linear_(std::move(linear)) {
  if (hessian_.rows() != hessian_.cols() || hessian_.rows() != linear_.size())
    throw ParameterDomainError("quadratic form dimensions disagree");
}

double QuadraticCoordinateDescent::objective(const Eigen::VectorXd& beta, const Eigen::VectorXd& weights) const {
  return 0.5 * beta.dot(hessian_ * beta) - linear_.dot(beta) + weighted_l1(beta, weights);
}

LassoSolution QuadraticCoordinateDescent::minimize(const Eigen::VectorXd& weights, const SolverConfig& cfg,
                                                   const Eigen::VectorXd* warm_start) const {
  require_config(cfg);
  const Eigen::Index p = dimension();
  Eigen::VectorXd beta = initial_point(warm_start, p);
  for (Eigen::Index j = 0; j < p; ++j)
    if (std::isinf(weights[j])) beta[j] = 0.0;
  Eigen::VectorXd hb = hessian_ * beta;
  double previous = cfg.check_descent ? objective(beta, weights) : 0.0;

  for (long sweep = 1; sweep <= cfg.max_iterations; ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      const double hjj = hessian_(j, j);
      double updated = 0.0;
      if (hjj > 0.0) {
        const double z = linear_[j] - hb[j] + hjj * beta[j];
        updated = soft_threshold(z, weights[j]) / hjj;
      }
      const double delta = updated - beta[j];
      if (delta != 0.0) {
        hb.noalias() += hessian_.col(j) * delta;
        beta[j] = updated;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    if (cfg.check_descent) {
      const double current = objective(beta, weights);
      check_descent(previous, current, sweep);
      previous = current;
    }
    if (max_change < cfg.tolerance) return {beta, objective(beta, weights), sweep};
  }
  throw NonConvergenceError("coordinate descent did not converge within " + std::to_string(cfg.max_iterations) +
                                " sweeps",
                            beta, cfg.max_iterations);
}

WeightedLassoSolver::WeightedLassoSolver(const Eigen::MatrixXd& X, const Eigen::VectorXd& y)
    : cd_([&] {
        if (X.rows() != y.size()) throw ParameterDomainError("design rows and response length disagree");
        Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(X.cols(), X.cols());
        gram.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose());
        return Eigen::MatrixXd(gram.selfadjointView<Eigen::Lower>());
      }(),
          X.transpose() * y),
      yty_(y.squaredNorm()) {}

LassoSolution WeightedLassoSolver::solve(const Eigen::VectorXd& lambda, const SolverConfig& cfg,
                                         const Eigen::VectorXd* warm_start) const {
  require_penalties(lambda, dimension(), "solve_weighted_lasso");
  // RSS + sum lambda|b| = 2 (1/2 b'Gb - c'b + sum lambda/2 |b|) + y'y
  LassoSolution sol = cd_.minimize(0.5 * lambda, cfg, warm_start);
  sol.objective = 2.0 * sol.objective + yty_;
  return sol;
}

double WeightedLassoSolver::objective(const Eigen::VectorXd& beta, const Eigen::VectorXd& lambda) const {
  return 2.0 * cd_.objective(beta, 0.5 * lambda) + yty_;
}

QuadraticLassoSolver::QuadraticLassoSolver(const Eigen::MatrixXd& precision, const Eigen::VectorXd& center)
    : cd_(precision, precision * center), offset_(0.5 * center.dot(precision * center)) {}

LassoSolution QuadraticLassoSolver::solve(const Eigen::VectorXd& lambda, const SolverConfig& cfg,
                                          const Eigen::VectorXd* warm_start) const {
  require_penalties(lambda, dimension(), "solve_quadratic_lasso");
  LassoSolution sol = cd_.minimize(lambda, cfg, warm_start);
  sol.objective += offset_;
  return sol;
}

double QuadraticLassoSolver::objective(const Eigen::VectorXd& beta, const Eigen::VectorXd& lambda) const {
  return cd_.objective(beta, lambda) + offset_;
}

GroupLassoSolver::GroupLassoSolver(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, GroupMap groups)
    : GroupLassoSolver(
          [&] {
            if (X.rows() != y.size()) throw ParameterDomainError("design rows and response length disagree");
            return Eigen::MatrixXd(X.transpose() * X);
          }(),
          X.transpose() * y, y.squaredNorm(), std::move(groups), 0) {}

GroupLassoSolver GroupLassoSolver::from_gram(Eigen::MatrixXd gram, Eigen::VectorXd xty, double yty, GroupMap groups) {
  return GroupLassoSolver(std::move(gram), std::move(xty), yty, std::move(groups), 0);
}

GroupLassoSolver::GroupLassoSolver(Eigen::MatrixXd gram, Eigen::VectorXd xty, double yty, GroupMap groups, int)
    : gram_(std::move(gram)), xty_(std::move(xty)), yty_(yty), groups_(std::move(groups)) {
  if (gram_.rows() != gram_.cols() || gram_.rows() != xty_.size())
    throw ParameterDomainError("group lasso: Gram matrix dimensions disagree");
  validate_partition(groups_, xty_.size());
  blocks_.reserve(groups_.size());
  for (const auto& cols : groups_) {
    const auto m = static_cast<Eigen::Index>(cols.size());
    Eigen::MatrixXd sub(m, m);
    for (Eigen::Index a = 0; a < m; ++a)
      for (Eigen::Index b = 0; b < m; ++b) sub(a, b) = gram_(cols[a], cols[b]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sub);
    blocks_.push_back({cols, eig.eigenvalues().cwiseMax(0.0), eig.eigenvectors()});
  }
}

double GroupLassoSolver::objective(const Eigen::VectorXd& beta, const Eigen::VectorXd& lambda) const {
  double penalty = 0.0;
  for (std::size_t g = 0; g < blocks_.size(); ++g) {
    double sq = 0.0;
    for (Eigen::Index c : blocks_[g].columns) sq += beta[c] * beta[c];
    if (sq > 0.0) penalty += lambda[static_cast<Eigen::Index>(g)] * std::sqrt(sq);
  }
  return beta.dot(gram_ * beta) - 2.0 * xty_.dot(beta) + yty_ + penalty;
}

namespace {

// Solve sum_i u_i^2 / (d_i t + a)^2 = 1 for t > 0, given ||u|| > a.
double block_norm_root(const Eigen::VectorXd& u, const Eigen::VectorXd& d, double a) {
  const auto f = [&](double t, double& slope) {
    double value = -1.0;
    slope = 0.0;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      const double denom = d[i] * t + a;
      const double term = u[i] * u[i] / (denom * denom);
      value += term;
      slope -= 2.0 * term * d[i] / denom;
    }
    return value;
  };
  // f is convex and decreasing, so Newton from t = 0 approaches the root monotonically from below.
  double slope;
  double probe = 1.0;
  for (int guard = 0; f(probe, slope) > 0.0; ++guard) {
    probe *= 2.0;
    if (guard > 2000)
      throw NumericalError("group lasso block is unbounded below (singular block Gram matrix)",
                           std::numeric_limits<double>::infinity());
  }
  double t = 0.0;
  for (int it = 0; it < 500; ++it) {
    const double value = f(t, slope);
    if (value <= 0.0 || slope >= 0.0) break;
    const double next = t - value / slope;
    if (next - t <= 1e-15 * std::max(1.0, t)) {
      t = next;
      break;
    }
    t = next;
  }
  return t;
}

}  // namespace

LassoSolution GroupLassoSolver::solve(const Eigen::VectorXd& lambda, const SolverConfig& cfg,
                                      const Eigen::VectorXd* warm_start) const {
  require_config(cfg);
  require_penalties(lambda, n_groups(), "solve_group_lasso");
  const Eigen::Index p = dimension();
  Eigen::VectorXd beta = initial_point(warm_start, p);
  for (std::size_t g = 0; g < blocks_.size(); ++g)
    if (std::isinf(lambda[static_cast<Eigen::Index>(g)]))
      for (Eigen::Index c : blocks_[g].columns) beta[c] = 0.0;
  Eigen::VectorXd gb = gram_ * beta;
  double previous = cfg.check_descent ? objective(beta, lambda) : 0.0;

  for (long sweep = 1; sweep <= cfg.max_iterations; ++sweep) {
    double max_change = 0.0;
    for (std::size_t g = 0; g < blocks_.size(); ++g) {
      const Block& block = blocks_[g];
      const auto m = static_cast<Eigen::Index>(block.columns.size());
      Eigen::VectorXd current(m), partial(m);
      for (Eigen::Index a = 0; a < m; ++a) current[a] = beta[block.columns[a]];
      // partial = X_g'(y - X_{-g} b_{-g})
      for (Eigen::Index a = 0; a < m; ++a) {
        const Eigen::Index c = block.columns[a];
        double own = 0.0;
        for (Eigen::Index b = 0; b < m; ++b) own += gram_(c, block.columns[b]) * current[b];
        partial[a] = xty_[c] - gb[c] + own;
      }
      const double half_penalty = 0.5 * lambda[static_cast<Eigen::Index>(g)];
      Eigen::VectorXd updated = Eigen::VectorXd::Zero(m);
      if (partial.norm() > half_penalty) {
        const Eigen::VectorXd u = block.eigenvectors.transpose() * partial;
        if (half_penalty == 0.0) {
          if (block.eigenvalues.minCoeff() <= 0.0)
            throw NumericalError("unpenalized group has a singular Gram block", std::numeric_limits<double>::infinity());
          updated = block.eigenvectors * u.cwiseQuotient(block.eigenvalues);
        } else {
          const double t = block_norm_root(u, block.eigenvalues, half_penalty);
          const Eigen::VectorXd shrink = (block.eigenvalues.array() + half_penalty / t).inverse().matrix();
          updated = block.eigenvectors * u.cwiseProduct(shrink);
        }
      }
      const Eigen::VectorXd delta = updated - current;
      if (delta.cwiseAbs().maxCoeff() > 0.0) {
        for (Eigen::Index a = 0; a < m; ++a) {
          if (delta[a] == 0.0) continue;
          gb.noalias() += gram_.col(block.columns[a]) * delta[a];
          beta[block.columns[a]] = updated[a];
        }
        max_change = std::max(max_change, delta.cwiseAbs().maxCoeff());
      }
    }
    if (cfg.check_descent) {
      const double current_obj = objective(beta, lambda);
      check_descent(previous, current_obj, sweep);
      previous = current_obj;
    }
    if (max_change < cfg.tolerance) return {beta, objective(beta, lambda), sweep};
  }
  throw NonConvergenceError("group coordinate descent did not converge within " + std::to_string(cfg.max_iterations) +
                                " sweeps",
                            beta, cfg.max_iterations);
}

LassoSolution solve_weighted_lasso(const WeightedL1Problem& problem, const SolverConfig& cfg,
                                   const Eigen::VectorXd* warm_start) {
  return WeightedLassoSolver(problem.X, problem.y).solve(problem.lambda, cfg, warm_start);
}

LassoSolution solve_quadratic_lasso(const QuadraticL1Problem& problem, const SolverConfig& cfg,
                                    const Eigen::VectorXd* warm_start) {
  if (problem.precision.rows() != problem.center.size())
    throw ParameterDomainError("solve_quadratic_lasso: precision and center dimensions disagree");
  return QuadraticLassoSolver(problem.precision, problem.center).solve(problem.lambda, cfg, warm_start);
}

LassoSolution solve_group_lasso(const GroupL1Problem& problem, const SolverConfig& cfg,
                                const Eigen::VectorXd* warm_start) {
  if (!problem.ancestry.empty())
    throw ParameterDomainError("solve_group_lasso: ancestry-structured (CAP) problems are not supported");
  return GroupLassoSolver(problem.X, problem.y, problem.groups).solve(problem.lambda, cfg, warm_start);
}

}  // namespace balasso
