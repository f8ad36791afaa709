#include "balasso/gibbs_linear.hpp"

#include <algorithm>
#include <cmath>

#include "balasso/distributions.hpp"
#include "balasso/error.hpp"
#include "sampler_core.hpp"

namespace balasso {

namespace {

constexpr double kCenteringTolerance = 1e-8;

void check_centered(const Dataset& data) {
  if (data.centered) return;
  const double scale = 1.0 + std::max(data.y.cwiseAbs().maxCoeff(), data.X.cwiseAbs().maxCoeff());
  if (max_abs_mean(data) > kCenteringTolerance * scale)
    throw ParameterDomainError("linear sampler needs centered data (call standardize first)");
}

}  // namespace

double LinearModel::rss(const Eigen::VectorXd& beta) const {
  return std::max(0.0, yty - 2.0 * beta.dot(xty) + beta.dot(gram * beta));
}

LinearModel make_linear_model(const Dataset& data) {
  if (data.n() < 2 || data.p() < 1) throw ParameterDomainError("linear sampler needs n >= 2 and p >= 1");
  if (data.y.size() != data.n()) throw ParameterDomainError("response length does not match the design");
  check_centered(data);
  LinearModel m;
  m.gram = data.X.transpose() * data.X;
  m.xty = data.X.transpose() * data.y;
  m.yty = data.y.squaredNorm();
  m.n = data.n();
  return m;
}

GibbsState initial_linear_state(const LinearModel& model, const PenaltyMode& mode) {
  GibbsState s;
  const Eigen::MatrixXd ridge = model.gram + Eigen::MatrixXd::Identity(model.p(), model.p());
  s.beta = ridge.llt().solve(model.xty);
  s.sigma2 = model.rss(s.beta) / static_cast<double>(model.n);
  if (!(s.sigma2 > 0.0)) s.sigma2 = std::max(model.yty / static_cast<double>(model.n), 1e-8);
  detail::init_penalty(s, mode, model.p());
  return s;
}

void gibbs_step_linear(GibbsState& state, const LinearModel& model, const PenaltyMode& mode, RngHandle& rng,
                       const FrozenBlocks& frozen) {
  const Eigen::Index p = model.p();
  if (!frozen.beta) {
    Eigen::MatrixXd A = model.gram;
    A.diagonal() += state.tau2.cwiseInverse();
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success)
      throw NumericalError("Cholesky of X'X + D_tau^{-1} failed", condition_estimate(A));
    state.beta = sample_mvn_from_factor(llt.solve(model.xty), llt, rng, std::sqrt(state.sigma2));
  }
  if (!frozen.sigma2) {
    const double penalty = (state.beta.array().square() / state.tau2.array()).sum();
    const double shape = 0.5 * static_cast<double>(model.n - 1) + 0.5 * static_cast<double>(p);
    state.sigma2 = sample_inverse_gamma(shape, 0.5 * model.rss(state.beta) + 0.5 * penalty, rng);
  }
  if (!frozen.tau2) detail::draw_tau2(state, state.beta.cwiseAbs(), std::sqrt(state.sigma2), rng);
  if (!frozen.lambda2) detail::update_lambda2(state, mode, Eigen::VectorXd::Ones(p), rng);
}

GibbsState gibbs_step_linear(const GibbsState& state, const Dataset& data, const PenaltyMode& mode, RngHandle& rng) {
  validate(state);
  GibbsState next = state;
  gibbs_step_linear(next, make_linear_model(data), mode, rng);
  return next;
}

ChainStore run_chain_linear(const Dataset& data, const PenaltyMode& mode, const ChainConfig& cfg) {
  const LinearModel model = make_linear_model(data);
  ChainStore store(model.p(), model.p());
  store.model = "linear";
  store.provenance.seed = cfg.seed;
  store.provenance.stream = cfg.stream;
  store.provenance.config = {{"model", "linear"}, {"data.fingerprint", to_hex(dataset_fingerprint(data))}};
  for (auto& kv : describe(mode)) store.provenance.config.push_back(kv);
  for (auto& kv : describe(cfg)) store.provenance.config.push_back(kv);

  const FrozenBlocks frozen = cfg.frozen;
  auto step = [&model, frozen](GibbsState& s, const PenaltyMode& m, RngHandle& rng) {
    gibbs_step_linear(s, model, m, rng, frozen);
  };
  return detail::drive_chain(initial_linear_state(model, mode), mode, cfg, Eigen::VectorXd::Ones(model.p()), step,
                             std::move(store));
}

}  // namespace balasso
