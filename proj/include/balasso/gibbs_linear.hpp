#pragma once

#include <Eigen/Dense>

#include "balasso/chain.hpp"
#include "balasso/dataset.hpp"
#include "balasso/rng.hpp"

namespace balasso {

// only ever touches X'X, X'y and y'y; each is formed once per chain.
// only ever touches X'X, X'y and y'y, so they are formed once per chain.
struct LinearModel {
  Eigen::MatrixXd gram;
  Eigen::VectorXd xty;
  double yty = 0.0;
  Eigen::Index n = 0;

  Eigen::Index p() const { return xty.size(); }
  double rss(const Eigen::VectorXd& beta) const;
};

// Throws ParameterDomainError when y or a column of X is visibly uncentered.
LinearModel make_linear_model(const Dataset& data);

// Ridge start (unit ridge), sigma^2 = RSS/n at that start, tau^2 = 1,
// lambda^2 from the mode (default 1), delta from the mode (default 1).
GibbsState initial_linear_state(const LinearModel& model, const PenaltyMode& mode);

// One sweep: beta | rest (block), sigma^2 | rest, 1/tau_j^2 | rest, lambda_j^2 | rest.
// Frozen blocks keep their incoming value.
void gibbs_step_linear(GibbsState& state, const LinearModel& model, const PenaltyMode& mode, RngHandle& rng,
                       const FrozenBlocks& frozen = {});
GibbsState gibbs_step_linear(const GibbsState& state, const Dataset& data, const PenaltyMode& mode, RngHandle& rng);

ChainStore run_chain_linear(const Dataset& data, const PenaltyMode& mode, const ChainConfig& cfg);

}  // namespace balasso
