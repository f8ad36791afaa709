#include "sampler_core.hpp"

#include <algorithm>
#include <limits>

namespace balasso::detail {

namespace {

// Keeps e^{2s} finite and positive.
constexpr double kLogLambdaBound = 300.0;

double clamp_log_lambda(double s, const PenaltyMode& mode, long iteration) {
  if (mode.sa_truncate) {
    const double box = static_cast<double>(iteration) + 1.0;
    s = std::clamp(s, -box, box);
  }
  return std::clamp(s, -kLogLambdaBound, kLogLambdaBound);
}

}  // namespace

void draw_tau2(GibbsState& state, const Eigen::VectorXd& norms, double scale, RngHandle& rng) {
  for (Eigen::Index j = 0; j < state.tau2.size(); ++j) {
    const double lambda = std::sqrt(state.lambda2[j]);
    const double mean = lambda * scale / std::max(norms[j], kNormFloor);
    const double inverse_tau2 = sample_inverse_gaussian({mean, state.lambda2[j]}, rng);
    double tau2 = 1.0 / inverse_tau2;
    if (!std::isfinite(tau2)) tau2 = std::numeric_limits<double>::max();
    state.tau2[j] = tau2;
  }
}

void update_lambda2(GibbsState& state, const PenaltyMode& mode, const Eigen::VectorXd& sizes, RngHandle& rng) {
  switch (mode.kind) {
    case PenaltyKind::fixed:
    case PenaltyKind::eb_em:
      return;
    case PenaltyKind::hierarchical: {
      // Gamma(r, delta) prior with tau_j^2 | lambda_j^2 ~ Gamma((k_j + 1)/2, lambda_j^2 / 2):
      // lambda_j^2 | tau_j^2 ~ Gamma(r + (k_j + 1)/2, delta + tau_j^2 / 2).
      if (mode.shared_lambda) {
        const double shape = mode.r + 0.5 * (sizes.array() + 1.0).sum();
        const double rate = state.delta + 0.5 * state.tau2.sum();
        state.lambda2.setConstant(sample_gamma(shape, rate, rng));
      } else {
        for (Eigen::Index j = 0; j < state.lambda2.size(); ++j)
          state.lambda2[j] = sample_gamma(mode.r + 0.5 * (sizes[j] + 1.0), state.delta + 0.5 * state.tau2[j], rng);
      }
      return;
    }
    case PenaltyKind::eb_sa: {
      ++state.iteration;
      const double step = mode.sa_step_scale / static_cast<double>(state.iteration);
      if (mode.shared_lambda) {
        double s = 0.5 * std::log(state.lambda2[0]);
        s += step * ((sizes.array() + 1.0).sum() - std::exp(2.0 * s) * state.tau2.sum());
        state.lambda2.setConstant(std::exp(2.0 * clamp_log_lambda(s, mode, state.iteration)));
      } else {
        for (Eigen::Index j = 0; j < state.lambda2.size(); ++j) {
          double s = 0.5 * std::log(state.lambda2[j]);
          s += step * ((sizes[j] + 1.0) - std::exp(2.0 * s) * state.tau2[j]);
          state.lambda2[j] = std::exp(2.0 * clamp_log_lambda(s, mode, state.iteration));
        }
      }
      return;
    }
  }
}

void init_penalty(GibbsState& state, const PenaltyMode& mode, Eigen::Index n_penalties) {
  if (mode.lambda2.size() == 0) {
    state.lambda2 = Eigen::VectorXd::Ones(n_penalties);
  } else if (mode.lambda2.size() == 1) {
    state.lambda2 = Eigen::VectorXd::Constant(n_penalties, mode.lambda2[0]);
  } else if (mode.lambda2.size() == n_penalties) {
    state.lambda2 = mode.lambda2;
  } else {
    throw ParameterDomainError("penalty mode: expected " + std::to_string(n_penalties) + " lambda^2 values, got " +
                               std::to_string(mode.lambda2.size()));
  }
  if (mode.shared_lambda) state.lambda2.setConstant(state.lambda2.mean());
  state.tau2 = Eigen::VectorXd::Ones(n_penalties);
  state.delta = mode.delta.value_or(1.0);
  state.iteration = 0;
}

}  // namespace balasso::detail
