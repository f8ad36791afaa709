#pragma once

// Pieces shared by every Gibbs sampler: the tau^2 and lambda^2 updates and
// the burn-in / thinning / empirical-Bayes driver.

#include <cmath>
#include <utility>

#include "balasso/chain.hpp"
#include "balasso/distributions.hpp"
#include "balasso/error.hpp"
#include "balasso/rng.hpp"

namespace balasso::detail {

// |beta_j| and group norms are floored here before forming the inverse-Gaussian mean.
inline constexpr double kNormFloor = 1e-10;

// 1/tau_j^2 ~ InverseGaussian(lambda_j * scale / max(norm_j, floor), lambda_j^2).
void draw_tau2(GibbsState& state, const Eigen::VectorXd& norms, double scale, RngHandle& rng);

// lambda^2 update for the hierarchical and stochastic-approximation regimes.
// `sizes` holds k_j, the number of coefficients governed by penalty j.
void update_lambda2(GibbsState& state, const PenaltyMode& mode, const Eigen::VectorXd& sizes, RngHandle& rng);

// Starting lambda^2 (mode.lambda2 broadcast or 1) and delta.
void init_penalty(GibbsState& state, const PenaltyMode& mode, Eigen::Index n_penalties);

// Runs burn-in + kept draws of `step` (callable as step(GibbsState&, const PenaltyMode&, RngHandle&)).
template <class Step>
class ChainDriver {
 public:
  ChainDriver(const PenaltyMode& mode, const ChainConfig& cfg, Eigen::VectorXd sizes, Step step)
      : mode_(mode), cfg_(cfg), sizes_(std::move(sizes)), step_(std::move(step)), rng_(cfg.seed, cfg.stream) {}

  ChainStore run(GibbsState state, ChainStore store) {
    validate(mode_);
    validate(cfg_);
    if (cfg_.initial) state = *cfg_.initial;
    validate(state);
    store.reserve(cfg_.kept);

    if (mode_.kind == PenaltyKind::eb_em && !cfg_.frozen.lambda2) {
      PenaltyMode fixed = mode_;
      fixed.kind = PenaltyKind::fixed;
      for (long outer = 0; outer < mode_.em_outer_steps; ++outer) {
        Eigen::VectorXd tau_sum = Eigen::VectorXd::Zero(state.tau2.size());
        segment(state, fixed, mode_.em_burn_in, mode_.em_draws, 1, false,
                [&](const GibbsState& s) { tau_sum += s.tau2; });
        const Eigen::VectorXd mean_tau = tau_sum / static_cast<double>(mode_.em_draws);
        Eigen::VectorXd next(state.lambda2.size());
        if (mode_.shared_lambda) {
          next.setConstant((sizes_.array() + 1.0).sum() / mean_tau.sum());
        } else {
          next = (sizes_.array() + 1.0) / mean_tau.array();
        }
        double change = 0.0;
        for (Eigen::Index j = 0; j < next.size(); ++j)
          change = std::max(change, std::abs(std::sqrt(next[j]) - std::sqrt(state.lambda2[j])) /
                                        std::sqrt(state.lambda2[j]));
        state.lambda2 = next;
        if (change < mode_.em_tolerance) break;
      }
      segment(state, fixed, cfg_.burn_in, cfg_.kept, cfg_.thin, false, [&](const GibbsState& s) { store.append(s); });
      store.eb_lambda = state.lambda2.cwiseSqrt();
    } else {
      const bool estimate_delta =
          mode_.kind == PenaltyKind::hierarchical && !mode_.delta && !cfg_.frozen.lambda2;
      segment(state, mode_, cfg_.burn_in, cfg_.kept, cfg_.thin, estimate_delta,
              [&](const GibbsState& s) { store.append(s); });
      if (mode_.kind == PenaltyKind::eb_sa) store.eb_lambda = state.lambda2.cwiseSqrt();
    }
    store.delta = state.delta;
    return store;
  }

 private:
  template <class OnKept>
  void segment(GibbsState& state, const PenaltyMode& mode, long burn_in, long kept, long thin, bool estimate_delta,
               OnKept&& on_kept) {
    Eigen::VectorXd lambda_sum = Eigen::VectorXd::Zero(state.lambda2.size());
    long block = 0;
    for (long it = 0; it < burn_in; ++it) {
      step_(state, mode, rng_);
      if (!estimate_delta) continue;
      lambda_sum += state.lambda2;
      if (++block == mode.delta_block) {
        // delta = (#lambdas) r / sum_j E[lambda_j^2]
        const double units = mode.shared_lambda ? 1.0 : static_cast<double>(lambda_sum.size());
        const double total = mode.shared_lambda ? lambda_sum[0] : lambda_sum.sum();
        state.delta = units * mode.r / (total / static_cast<double>(block));
        lambda_sum.setZero();
        block = 0;
      }
    }
    for (long k = 0; k < kept; ++k) {
      for (long t = 0; t < thin; ++t) step_(state, mode, rng_);
      validate(state);
      on_kept(state);
    }
  }

  PenaltyMode mode_;
  ChainConfig cfg_;
  Eigen::VectorXd sizes_;
  Step step_;
  RngHandle rng_;
};

template <class Step>
ChainStore drive_chain(GibbsState initial, const PenaltyMode& mode, const ChainConfig& cfg, Eigen::VectorXd sizes,
                       Step step, ChainStore store) {
  ChainDriver<Step> driver(mode, cfg, std::move(sizes), std::move(step));
  return driver.run(std::move(initial), std::move(store));
}

}  // namespace balasso::detail
