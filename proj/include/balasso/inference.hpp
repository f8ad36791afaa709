#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "balasso/chain.hpp"
#include "balasso/dataset.hpp"
#include "balasso/gibbs_general.hpp"
#include "balasso/wlasso.hpp"

namespace balasso {

// Which penalty units (coefficients, or groups for grouped models) are active.
class SparsityPattern {
 public:
  SparsityPattern() = default;
  explicit SparsityPattern(Eigen::Index size);
  static SparsityPattern from_string(const std::string& bits);

  Eigen::Index size() const { return size_; }
  bool test(Eigen::Index i) const { return (words_[word(i)] >> bit(i)) & 1U; }
  void set(Eigen::Index i, bool value = true);
  Eigen::Index count() const;
  bool empty() const { return count() == 0; }

  // "0110": character i is unit i.
  std::string to_string() const;
  std::uint64_t hash() const;

  friend bool operator==(const SparsityPattern& a, const SparsityPattern& b) = default;
  friend bool operator<(const SparsityPattern& a, const SparsityPattern& b);

 private:
  static std::size_t word(Eigen::Index i) { return static_cast<std::size_t>(i) / 64; }
  static unsigned bit(Eigen::Index i) { return static_cast<unsigned>(i % 64); }

  std::vector<std::uint64_t> words_;
  Eigen::Index size_ = 0;
};

struct SparsityPatternHash {
  std::size_t operator()(const SparsityPattern& p) const { return static_cast<std::size_t>(p.hash()); }
};

// Conditional-mode solver for a fitted model: lambda (one entry per penalty
// unit) -> sparse coefficient vector.
class ModeSolver {
 public:
  virtual ~ModeSolver() = default;
  virtual Eigen::Index dimension() const = 0;
  virtual Eigen::Index n_penalties() const = 0;
  virtual LassoSolution solve(const Eigen::VectorXd& lambda, const SolverConfig& cfg,
                              const Eigen::VectorXd* warm_start) const = 0;
  // Unit i is active iff its coefficient (or any coefficient of its group) is nonzero.
  virtual SparsityPattern pattern(const Eigen::VectorXd& beta) const;
};

// Gaussian linear model: minimizes RSS + sum_j lambda_j |b_j|.
class LinearModeSolver final : public ModeSolver {
 public:
  explicit LinearModeSolver(const Dataset& data);
  Eigen::Index dimension() const override { return solver_.dimension(); }
  Eigen::Index n_penalties() const override { return solver_.dimension(); }
  LassoSolution solve(const Eigen::VectorXd& lambda, const SolverConfig& cfg,
                      const Eigen::VectorXd* warm_start) const override;

 private:
  WeightedLassoSolver solver_;
};

// Posterior mode of the LSA hierarchy at fixed lambda:
// 1/2 (b - center)' precision (b - center) + sum_j lambda_j |b_j|.
class LsaModeSolver final : public ModeSolver {
 public:
  explicit LsaModeSolver(const LsaSurrogate& surrogate);
  Eigen::Index dimension() const override { return solver_.dimension(); }
  Eigen::Index n_penalties() const override { return solver_.dimension(); }
  LassoSolution solve(const Eigen::VectorXd& lambda, const SolverConfig& cfg,
                      const Eigen::VectorXd* warm_start) const override;

 private:
  QuadraticLassoSolver solver_;
};

// Group analogue: 1/2 (b - center)' precision (b - center) + sum_g lambda_g ||b_g||.
class GroupModeSolver final : public ModeSolver {
 public:
  GroupModeSolver(const LsaSurrogate& surrogate, GroupMap groups);
  Eigen::Index dimension() const override { return solver_.dimension(); }
  Eigen::Index n_penalties() const override { return solver_.n_groups(); }
  LassoSolution solve(const Eigen::VectorXd& lambda, const SolverConfig& cfg,
                      const Eigen::VectorXd* warm_start) const override;
  SparsityPattern pattern(const Eigen::VectorXd& beta) const override;

 private:
  GroupLassoSolver solver_;
};

enum class PointStatistic { mean, median, eb_point };
std::string to_string(PointStatistic statistic);

struct SelectionResult {
  SparsityPattern pattern;
  Eigen::VectorXd beta;
  std::string strategy;
  Eigen::VectorXd lambda;       // plugged-in lambda (refit lambda for freq)
  Eigen::VectorXd frequencies;  // per-unit inclusion frequencies (freq only)
};

// Conditional modes beta_hat(lambda^(i)) for every kept draw, solved in draw
// order with warm starts.
struct ModePath {
  Eigen::MatrixXd beta;  // draws x p
  std::vector<SparsityPattern> patterns;
  Eigen::Index size() const { return beta.rows(); }
};

ModePath conditional_modes(const ChainStore& chains, const ModeSolver& solver, const SolverConfig& cfg = {});

// Coordinatewise mean/median of the lambda draws (square roots of lambda^2),
// or the empirical-Bayes point recorded with the chain.
Eigen::VectorXd summarize_lambda(const ChainStore& chains, PointStatistic statistic);

SelectionResult select_point(const ChainStore& chains, const ModeSolver& solver, PointStatistic statistic,
                             const SolverConfig& cfg = {});
SelectionResult select_point(const ChainStore& chains, const Dataset& data, PointStatistic statistic,
                             const SolverConfig& cfg = {});

// Units whose per-draw inclusion frequency is at least `threshold`; the
// coefficients are refit at the posterior-mean lambda with every other unit
// forced to zero.
SelectionResult select_freq(const ChainStore& chains, const ModeSolver& solver, double threshold = 0.5,
                            const SolverConfig& cfg = {});
SelectionResult select_freq(const ChainStore& chains, const ModeSolver& solver, const ModePath& path,
                            double threshold = 0.5, const SolverConfig& cfg = {});
SelectionResult select_freq(const ChainStore& chains, const Dataset& data, double threshold = 0.5,
                            const SolverConfig& cfg = {});

// Grouped models with an ancestry relation: select_point on the groups, then
// any selected group with an unselected ancestor is pinned at zero and the
// solve repeated until the selected set is closed under ancestry.
SelectionResult select_hierarchical(const ChainStore& chains, const GroupModeSolver& solver,
                                    const AncestryRelation& relation, PointStatistic statistic,
                                    const SolverConfig& cfg = {});

struct PatternProbability {
  SparsityPattern pattern;
  double probability = 0.0;
  long count = 0;
};

// Patterns sorted by decreasing probability (ties by pattern string).
std::vector<PatternProbability> estimate_pmp(const ModePath& path);
std::vector<PatternProbability> estimate_pmp(const ChainStore& chains, const ModeSolver& solver,
                                             const SolverConfig& cfg = {});

// Average over draws of X_new * beta_hat(lambda^(i)); X_new in model coordinates.
Eigen::VectorXd predict_bma(const ModePath& path, const Eigen::MatrixXd& X_new);
Eigen::VectorXd predict_bma(const ChainStore& chains, const ModeSolver& solver, const Eigen::MatrixXd& X_new,
                            const SolverConfig& cfg = {});

// Mean squared prediction error.
double compute_pse(const Eigen::VectorXd& predictions, const Eigen::VectorXd& actuals);

// CSV renderings for the command-line reporter.
std::string selection_csv(const SelectionResult& result, const std::vector<std::string>& names);
std::string pmp_csv(const std::vector<PatternProbability>& pmp, std::size_t limit = 0);

}  // namespace balasso
