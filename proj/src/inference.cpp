#include "balasso/inference.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "balasso/error.hpp"
#include "balasso/keyvalue.hpp"

namespace balasso {

SparsityPattern::SparsityPattern(Eigen::Index size) : words_((static_cast<std::size_t>(size) + 63) / 64, 0), size_(size) {}

SparsityPattern SparsityPattern::from_string(const std::string& bits) {
  SparsityPattern p(static_cast<Eigen::Index>(bits.size()));
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] != '0' && bits[i] != '1') throw ParameterDomainError("sparsity pattern: expected only 0/1 characters");
    p.set(static_cast<Eigen::Index>(i), bits[i] == '1');
  }
  return p;
}

void SparsityPattern::set(Eigen::Index i, bool value) {
  if (i < 0 || i >= size_) throw std::out_of_range("sparsity pattern index out of range");
  const std::uint64_t mask = std::uint64_t{1} << bit(i);
  if (value)
    words_[word(i)] |= mask;
  else
    words_[word(i)] &= ~mask;
}

Eigen::Index SparsityPattern::count() const {
  Eigen::Index c = 0;
  for (auto w : words_) c += std::popcount(w);
  return c;
}

std::string SparsityPattern::to_string() const {
  std::string s(static_cast<std::size_t>(size_), '0');
  for (Eigen::Index i = 0; i < size_; ++i)
    if (test(i)) s[static_cast<std::size_t>(i)] = '1';
  return s;
}

std::uint64_t SparsityPattern::hash() const {
  std::uint64_t h = fnv1a(std::to_string(size_));
  for (auto w : words_) {
    h ^= w + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

bool operator<(const SparsityPattern& a, const SparsityPattern& b) { return a.to_string() < b.to_string(); }

SparsityPattern ModeSolver::pattern(const Eigen::VectorXd& beta) const {
  SparsityPattern p(beta.size());
  for (Eigen::Index j = 0; j < beta.size(); ++j)
    if (beta[j] != 0.0) p.set(j);
  return p;
}

LinearModeSolver::LinearModeSolver(const Dataset& data) : solver_(data.X, data.y) {}

LassoSolution LinearModeSolver::solve(const Eigen::VectorXd& lambda, const SolverConfig& cfg,
                                      const Eigen::VectorXd* warm_start) const {
  return solver_.solve(lambda, cfg, warm_start);
}

LsaModeSolver::LsaModeSolver(const LsaSurrogate& surrogate) : solver_(surrogate.precision, surrogate.center) {}

LassoSolution LsaModeSolver::solve(const Eigen::VectorXd& lambda, const SolverConfig& cfg,
                                   const Eigen::VectorXd* warm_start) const {
  return solver_.solve(lambda, cfg, warm_start);
}

GroupModeSolver::GroupModeSolver(const LsaSurrogate& surrogate, GroupMap groups)
    : solver_(GroupLassoSolver::from_gram(surrogate.precision, surrogate.precision * surrogate.center,
                                          surrogate.center.dot(surrogate.precision * surrogate.center),
                                          std::move(groups))) {}

LassoSolution GroupModeSolver::solve(const Eigen::VectorXd& lambda, const SolverConfig& cfg,
                                     const Eigen::VectorXd* warm_start) const {
  // The Gram-form objective is twice the posterior-mode objective.
  return solver_.solve(2.0 * lambda, cfg, warm_start);
}

SparsityPattern GroupModeSolver::pattern(const Eigen::VectorXd& beta) const {
  SparsityPattern p(solver_.n_groups());
  for (Eigen::Index g = 0; g < solver_.n_groups(); ++g)
    for (Eigen::Index j : solver_.groups()[static_cast<std::size_t>(g)])
      if (beta[j] != 0.0) {
        p.set(g);
        break;
      }
  return p;
}

std::string to_string(PointStatistic statistic) {
  switch (statistic) {
    case PointStatistic::mean: return "mean";
    case PointStatistic::median: return "median";
    case PointStatistic::eb_point: return "eb";
  }
  return "unknown";
}

namespace {

void check_chain(const ChainStore& chains, const ModeSolver& solver) {
  if (chains.empty()) throw ParameterDomainError("inference needs a non-empty chain");
  if (chains.n_penalties() != solver.n_penalties() || chains.p() != solver.dimension())
    throw ParameterDomainError("chain dimensions (p=" + std::to_string(chains.p()) + ", penalties=" +
                               std::to_string(chains.n_penalties()) + ") do not match the model (p=" +
                               std::to_string(solver.dimension()) + ", penalties=" +
                               std::to_string(solver.n_penalties()) + ")");
}

LassoSolution solve_draw(const ModeSolver& solver, const Eigen::VectorXd& lambda, const SolverConfig& cfg,
                         const Eigen::VectorXd* warm, Eigen::Index draw) {
  try {
    return solver.solve(lambda, cfg, warm);
  } catch (const NonConvergenceError& e) {
    throw NonConvergenceError("conditional mode for draw " + std::to_string(draw + 1) + ": " + e.what(),
                              e.last_iterate(), e.iterations());
  }
}

}  // namespace

ModePath conditional_modes(const ChainStore& chains, const ModeSolver& solver, const SolverConfig& cfg) {
  check_chain(chains, solver);
  ModePath path;
  path.beta.resize(chains.size(), solver.dimension());
  path.patterns.reserve(static_cast<std::size_t>(chains.size()));
  Eigen::VectorXd warm;
  for (Eigen::Index i = 0; i < chains.size(); ++i) {
    const Eigen::VectorXd lambda = chains.lambda2(i).cwiseSqrt();
    const LassoSolution sol = solve_draw(solver, lambda, cfg, i ? &warm : nullptr, i);
    warm = sol.beta;
    path.beta.row(i) = sol.beta.transpose();
    path.patterns.push_back(solver.pattern(sol.beta));
  }
  return path;
}

Eigen::VectorXd summarize_lambda(const ChainStore& chains, PointStatistic statistic) {
  if (statistic == PointStatistic::eb_point) {
    if (!chains.eb_lambda) throw ParameterDomainError("chain carries no empirical-Bayes lambda (run eb-em or eb-sa)");
    return *chains.eb_lambda;
  }
  if (chains.empty()) throw ParameterDomainError("cannot summarize an empty chain");
  const Eigen::MatrixXd draws = chains.lambda_draws();
  if (statistic == PointStatistic::mean) return draws.colwise().mean().transpose();
  Eigen::VectorXd out(draws.cols());
  std::vector<double> column(static_cast<std::size_t>(draws.rows()));
  for (Eigen::Index j = 0; j < draws.cols(); ++j) {
    for (Eigen::Index i = 0; i < draws.rows(); ++i) column[static_cast<std::size_t>(i)] = draws(i, j);
    std::sort(column.begin(), column.end());
    const std::size_t n = column.size();
    out[j] = n % 2 ? column[n / 2] : 0.5 * (column[n / 2 - 1] + column[n / 2]);
  }
  return out;
}

SelectionResult select_point(const ChainStore& chains, const ModeSolver& solver, PointStatistic statistic,
                             const SolverConfig& cfg) {
  if (statistic != PointStatistic::eb_point) check_chain(chains, solver);
  SelectionResult r;
  r.strategy = to_string(statistic);
  r.lambda = summarize_lambda(chains, statistic);
  if (r.lambda.size() != solver.n_penalties()) throw ParameterDomainError("lambda point does not match the model");
  r.beta = solver.solve(r.lambda, cfg, nullptr).beta;
  r.pattern = solver.pattern(r.beta);
  return r;
}

SelectionResult select_point(const ChainStore& chains, const Dataset& data, PointStatistic statistic,
                             const SolverConfig& cfg) {
  return select_point(chains, LinearModeSolver(data), statistic, cfg);
}

SelectionResult select_freq(const ChainStore& chains, const ModeSolver& solver, const ModePath& path, double threshold,
                            const SolverConfig& cfg) {
  check_chain(chains, solver);
  if (path.size() != chains.size()) throw ParameterDomainError("mode path does not match the chain");
  const Eigen::Index units = solver.n_penalties();
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(units);
  for (const auto& p : path.patterns)
    for (Eigen::Index j = 0; j < units; ++j)
      if (p.test(j)) counts[j] += 1.0;

  SelectionResult r;
  r.strategy = "freq";
  r.frequencies = counts / static_cast<double>(path.size());
  r.lambda = summarize_lambda(chains, PointStatistic::mean);
  std::vector<bool> chosen(static_cast<std::size_t>(units));
  for (Eigen::Index j = 0; j < units; ++j) {
    chosen[static_cast<std::size_t>(j)] = r.frequencies[j] >= threshold;
    if (!chosen[static_cast<std::size_t>(j)]) r.lambda[j] = std::numeric_limits<double>::infinity();
  }
  r.beta = solver.solve(r.lambda, cfg, nullptr).beta;
  SparsityPattern got = solver.pattern(r.beta);
  // A chosen unit that the restricted refit still zeroes is refit unpenalized.
  bool refit = false;
  for (Eigen::Index j = 0; j < units; ++j)
    if (chosen[static_cast<std::size_t>(j)] && !got.test(j)) {
      r.lambda[j] = 0.0;
      refit = true;
    }
  if (refit) {
    r.beta = solver.solve(r.lambda, cfg, &r.beta).beta;
    got = solver.pattern(r.beta);
  }
  r.pattern = got;
  return r;
}

SelectionResult select_freq(const ChainStore& chains, const ModeSolver& solver, double threshold,
                            const SolverConfig& cfg) {
  return select_freq(chains, solver, conditional_modes(chains, solver, cfg), threshold, cfg);
}

SelectionResult select_freq(const ChainStore& chains, const Dataset& data, double threshold, const SolverConfig& cfg) {
  return select_freq(chains, LinearModeSolver(data), threshold, cfg);
}

SelectionResult select_hierarchical(const ChainStore& chains, const GroupModeSolver& solver,
                                    const AncestryRelation& relation, PointStatistic statistic,
                                    const SolverConfig& cfg) {
  validate_ancestry(relation, solver.n_penalties());
  SelectionResult r = select_point(chains, solver, statistic, cfg);
  r.strategy += "+hierarchy";
  for (;;) {
    bool pinned = false;
    for (const auto& [ancestor, descendant] : relation)
      if (r.pattern.test(descendant) && !r.pattern.test(ancestor)) {
        r.lambda[descendant] = std::numeric_limits<double>::infinity();
        pinned = true;
      }
    if (!pinned) return r;
    r.beta = solver.solve(r.lambda, cfg, &r.beta).beta;
    r.pattern = solver.pattern(r.beta);
  }
}

std::vector<PatternProbability> estimate_pmp(const ModePath& path) {
  if (path.size() == 0) throw ParameterDomainError("posterior model probabilities need at least one draw");
  std::unordered_map<SparsityPattern, long, SparsityPatternHash> counts;
  for (const auto& p : path.patterns) ++counts[p];
  std::vector<PatternProbability> out;
  out.reserve(counts.size());
  const double total = static_cast<double>(path.size());
  for (auto& [pattern, count] : counts) out.push_back({pattern, static_cast<double>(count) / total, count});
  std::sort(out.begin(), out.end(), [](const PatternProbability& a, const PatternProbability& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.pattern < b.pattern;
  });
  return out;
}

std::vector<PatternProbability> estimate_pmp(const ChainStore& chains, const ModeSolver& solver,
                                             const SolverConfig& cfg) {
  return estimate_pmp(conditional_modes(chains, solver, cfg));
}

Eigen::VectorXd predict_bma(const ModePath& path, const Eigen::MatrixXd& X_new) {
  if (path.size() == 0) throw ParameterDomainError("BMA prediction needs at least one draw");
  if (X_new.cols() != path.beta.cols())
    throw ParameterDomainError("prediction design has " + std::to_string(X_new.cols()) + " columns, model has " +
                               std::to_string(path.beta.cols()));
  const Eigen::VectorXd mean_beta = path.beta.colwise().mean().transpose();
  return X_new * mean_beta;
}

Eigen::VectorXd predict_bma(const ChainStore& chains, const ModeSolver& solver, const Eigen::MatrixXd& X_new,
                            const SolverConfig& cfg) {
  return predict_bma(conditional_modes(chains, solver, cfg), X_new);
}

double compute_pse(const Eigen::VectorXd& predictions, const Eigen::VectorXd& actuals) {
  if (predictions.size() != actuals.size())
    throw ParameterDomainError("PSE: " + std::to_string(predictions.size()) + " predictions for " +
                               std::to_string(actuals.size()) + " observations");
  if (predictions.size() == 0) throw ParameterDomainError("PSE of an empty set");
  return (predictions - actuals).squaredNorm() / static_cast<double>(predictions.size());
}

std::string selection_csv(const SelectionResult& result, const std::vector<std::string>& names) {
  std::ostringstream out;
  out << "variable,beta,selected";
  const bool freq = result.frequencies.size() == result.beta.size();
  if (freq) out << ",frequency";
  out << '\n';
  const bool per_coef = result.pattern.size() == result.beta.size();
  for (Eigen::Index j = 0; j < result.beta.size(); ++j) {
    const auto name = j < static_cast<Eigen::Index>(names.size()) ? names[static_cast<std::size_t>(j)]
                                                                   : "x" + std::to_string(j + 1);
    const bool on = per_coef ? result.pattern.test(j) : result.beta[j] != 0.0;
    out << name << ',' << format_double(result.beta[j]) << ',' << (on ? 1 : 0);
    if (freq) out << ',' << format_double(result.frequencies[j]);
    out << '\n';
  }
  return out.str();
}

std::string pmp_csv(const std::vector<PatternProbability>& pmp, std::size_t limit) {
  std::ostringstream out;
  out << "pattern,probability,count\n";
  const std::size_t n = limit ? std::min(limit, pmp.size()) : pmp.size();
  for (std::size_t i = 0; i < n; ++i)
    out << pmp[i].pattern.to_string() << ',' << format_double(pmp[i].probability) << ',' << pmp[i].count << '\n';
  return out.str();
}

}  // namespace balasso
