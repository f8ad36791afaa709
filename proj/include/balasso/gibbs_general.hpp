#pragma once

#include <optional>

#include <Eigen/Dense>

#include "balasso/chain.hpp"
#include "balasso/dataset.hpp"
#include "balasso/gibbs_linear.hpp"
#include "balasso/groups.hpp"
#include "balasso/rng.hpp"

namespace balasso {

// Quadratic stand-in for a log-likelihood around its maximizer:
//   -2 log L(b) ~ (b - center)' precision (b - center) + const.
// An unpenalized intercept, if one was fitted, is profiled out of `precision`
// and reported separately.
struct LsaSurrogate {
  Eigen::VectorXd center;
  Eigen::MatrixXd precision;
  std::optional<double> intercept;

  Eigen::Index p() const { return center.size(); }
};

void validate(const LsaSurrogate& surrogate);
std::uint64_t surrogate_fingerprint(const LsaSurrogate& surrogate);

struct NewtonConfig {
  double gradient_tolerance = 1e-8;
  long max_iterations = 200;
  double divergence_bound = 1e6;  // |coefficient| beyond this is treated as separation
};

// Logistic-regression MLE by damped Newton-Raphson; precision = X'WX at the
// optimum. Responses must be 0/1. Throws NonConvergenceError on separation.
LsaSurrogate fit_logistic_mle(const Dataset& data, bool fit_intercept, const NewtonConfig& cfg = {});

// Gaussian linear model: center = OLS, precision = X'X / sigma_hat^2 with the
// unbiased residual variance. Data must be centered.
LsaSurrogate fit_linear_lsa(const Dataset& data);

struct PseudoData {
  Eigen::MatrixXd X;  // symmetric square root of the precision
  Eigen::VectorXd y;  // X * center
};

PseudoData lsa_pseudo_data(const LsaSurrogate& surrogate);

// Sufficient statistics of the pseudo-data: gram = precision, xty = precision * center.
LinearModel lsa_linear_model(const LsaSurrogate& surrogate);

// Group structure with an optional hierarchy. With an empty relation this is
// the plain adaptive group lasso.
class CapStructure {
 public:
  CapStructure(GroupMap groups, AncestryRelation relation, Eigen::Index p);

  const GroupMap& groups() const { return groups_; }
  const AncestryRelation& relation() const { return relation_; }
  Eigen::Index n_groups() const { return static_cast<Eigen::Index>(groups_.size()); }
  Eigen::Index p() const { return p_; }

  // m_j
  Eigen::VectorXd group_sizes() const;
  // k_j = m_j + sum over direct descendants j -> j' of m_j'
  const Eigen::VectorXd& effective_sizes() const { return effective_sizes_; }
  // sigma_j^2 = (1/tau_j^2 + sum over direct ancestors j' -> j of 1/tau_j'^2)^{-1}
  Eigen::VectorXd group_variances(const Eigen::VectorXd& tau2) const;
  // || (beta_j, beta_j' for j -> j') ||
  Eigen::VectorXd penalty_norms(const Eigen::VectorXd& beta) const;

  const std::vector<Eigen::Index>& descendants(Eigen::Index j) const { return children_[static_cast<std::size_t>(j)]; }
  const std::vector<Eigen::Index>& ancestors(Eigen::Index j) const { return parents_[static_cast<std::size_t>(j)]; }

 private:
  GroupMap groups_;
  AncestryRelation relation_;
  Eigen::Index p_;
  std::vector<std::vector<Eigen::Index>> children_;
  std::vector<std::vector<Eigen::Index>> parents_;
  Eigen::VectorXd effective_sizes_;
};

// Start at the surrogate center with tau^2 = 1 and lambda^2 from the mode.
GibbsState initial_lsa_state(const LsaSurrogate& surrogate, const PenaltyMode& mode, Eigen::Index n_penalties);

// Per-coefficient BaLasso on the LSA surrogate; sigma^2 stays at 1.
void gibbs_step_lsa(GibbsState& state, const LsaSurrogate& surrogate, const PenaltyMode& mode, RngHandle& rng,
                    const FrozenBlocks& frozen = {});
// Adaptive group lasso: the structure's relation must be empty.
void gibbs_step_group(GibbsState& state, const CapStructure& structure, const LsaSurrogate& surrogate,
                      const PenaltyMode& mode, RngHandle& rng, const FrozenBlocks& frozen = {});
void gibbs_step_cap(GibbsState& state, const CapStructure& structure, const LsaSurrogate& surrogate,
                    const PenaltyMode& mode, RngHandle& rng, const FrozenBlocks& frozen = {});

ChainStore run_chain_lsa(const LsaSurrogate& surrogate, const PenaltyMode& mode, const ChainConfig& cfg);
ChainStore run_chain_group(const LsaSurrogate& surrogate, const GroupMap& groups, const PenaltyMode& mode,
                           const ChainConfig& cfg);
ChainStore run_chain_cap(const LsaSurrogate& surrogate, const CapStructure& structure, const PenaltyMode& mode,
                         const ChainConfig& cfg);

}  // namespace balasso
