#include "balasso/chain.hpp"

#include <cmath>

#include "balasso/error.hpp"

namespace balasso {

std::string to_string(PenaltyKind kind) {
  switch (kind) {
    case PenaltyKind::fixed: return "fixed";
    case PenaltyKind::hierarchical: return "hierarchical";
    case PenaltyKind::eb_em: return "eb-em";
    case PenaltyKind::eb_sa: return "eb-sa";
  }
  return "unknown";
}

PenaltyKind parse_penalty_kind(const std::string& text) {
  if (text == "fixed") return PenaltyKind::fixed;
  if (text == "hierarchical") return PenaltyKind::hierarchical;
  if (text == "eb-em" || text == "eb_em" || text == "em") return PenaltyKind::eb_em;
  if (text == "eb-sa" || text == "eb_sa" || text == "sa") return PenaltyKind::eb_sa;
  throw ParameterDomainError("unknown penalty mode '" + text + "' (fixed | hierarchical | eb-em | eb-sa)");
}

void validate(const PenaltyMode& mode) {
  if (!(mode.r > 0.0)) throw ParameterDomainError("penalty mode: r must be positive");
  if (mode.delta && !(*mode.delta > 0.0)) throw ParameterDomainError("penalty mode: delta must be positive");
  if (mode.delta_block < 1) throw ParameterDomainError("penalty mode: delta_block must be >= 1");
  if (mode.em_outer_steps < 1 || mode.em_draws < 1 || mode.em_burn_in < 0)
    throw ParameterDomainError("penalty mode: EM step counts must be positive");
  if (!(mode.sa_step_scale > 0.0)) throw ParameterDomainError("penalty mode: SA step scale must be positive");
  for (Eigen::Index j = 0; j < mode.lambda2.size(); ++j)
    if (!(mode.lambda2[j] > 0.0) || !std::isfinite(mode.lambda2[j]))
      throw ParameterDomainError("penalty mode: lambda^2 values must be positive and finite");
  if (mode.kind == PenaltyKind::fixed && mode.lambda2.size() == 0)
    throw ParameterDomainError("penalty mode: fixed kind needs lambda^2 values");
}

KeyValues describe(const PenaltyMode& mode) {
  KeyValues kv{{"mode.kind", to_string(mode.kind)},
               {"mode.r", format_double(mode.r)},
               {"mode.delta", mode.delta ? format_double(*mode.delta) : std::string("eb1")},
               {"mode.shared_lambda", mode.shared_lambda ? "true" : "false"},
               {"mode.delta_block", std::to_string(mode.delta_block)}};
  if (mode.kind == PenaltyKind::eb_em) {
    kv.emplace_back("mode.em_outer_steps", std::to_string(mode.em_outer_steps));
    kv.emplace_back("mode.em_burn_in", std::to_string(mode.em_burn_in));
    kv.emplace_back("mode.em_draws", std::to_string(mode.em_draws));
    kv.emplace_back("mode.em_tolerance", format_double(mode.em_tolerance));
  }
  if (mode.kind == PenaltyKind::eb_sa) {
    kv.emplace_back("mode.sa_step_scale", format_double(mode.sa_step_scale));
    kv.emplace_back("mode.sa_truncate", mode.sa_truncate ? "true" : "false");
  }
  std::string init;
  for (Eigen::Index j = 0; j < mode.lambda2.size(); ++j) init += (j ? "," : "") + format_double(mode.lambda2[j]);
  kv.emplace_back("mode.lambda2", init.empty() ? "default" : init);
  return kv;
}

void validate(const GibbsState& state) {
  if (!(state.sigma2 > 0.0) || !std::isfinite(state.sigma2))
    throw ParameterDomainError("state: sigma^2 must be positive and finite");
  if (state.tau2.size() != state.lambda2.size())
    throw ParameterDomainError("state: tau^2 and lambda^2 lengths differ");
  for (Eigen::Index j = 0; j < state.tau2.size(); ++j) {
    if (!(state.tau2[j] > 0.0) || !std::isfinite(state.tau2[j]))
      throw ParameterDomainError("state: tau^2[" + std::to_string(j) + "] must be positive and finite");
    if (!(state.lambda2[j] > 0.0) || !std::isfinite(state.lambda2[j]))
      throw ParameterDomainError("state: lambda^2[" + std::to_string(j) + "] must be positive and finite");
  }
  if (!state.beta.allFinite()) throw ParameterDomainError("state: beta has non-finite entries");
  if (!(state.delta > 0.0)) throw ParameterDomainError("state: delta must be positive");
}

void validate(const ChainConfig& cfg) {
  if (cfg.burn_in < 0) throw ParameterDomainError("chain: burn-in must be non-negative");
  if (cfg.kept < 1) throw ParameterDomainError("chain: kept draws must be >= 1");
  if (cfg.thin < 1) throw ParameterDomainError("chain: thin must be >= 1");
}

KeyValues describe(const ChainConfig& cfg) {
  KeyValues kv{{"chain.burn_in", std::to_string(cfg.burn_in)},
               {"chain.kept", std::to_string(cfg.kept)},
               {"chain.thin", std::to_string(cfg.thin)},
               {"chain.seed", std::to_string(cfg.seed)},
               {"chain.stream", std::to_string(cfg.stream)}};
  const auto& f = cfg.frozen;
  if (f.beta || f.sigma2 || f.tau2 || f.lambda2)
    kv.emplace_back("chain.frozen", std::string(f.beta ? "beta;" : "") + (f.sigma2 ? "sigma2;" : "") +
                                        (f.tau2 ? "tau2;" : "") + (f.lambda2 ? "lambda2;" : ""));
  if (cfg.initial) kv.emplace_back("chain.initial", "custom");
  return kv;
}

ChainStore::ChainStore(Eigen::Index p, Eigen::Index n_penalties) : p_(p), n_penalties_(n_penalties) {}

void ChainStore::reserve(Eigen::Index draws) {
  const auto d = static_cast<std::size_t>(draws);
  beta_.reserve(d * static_cast<std::size_t>(p_));
  tau2_.reserve(d * static_cast<std::size_t>(n_penalties_));
  lambda2_.reserve(d * static_cast<std::size_t>(n_penalties_));
  sigma2_.reserve(d);
}

void ChainStore::append(const Eigen::VectorXd& beta, double sigma2, const Eigen::VectorXd& tau2,
                        const Eigen::VectorXd& lambda2) {
  if (beta.size() != p_ || tau2.size() != n_penalties_ || lambda2.size() != n_penalties_)
    throw ParameterDomainError("chain store: draw dimensions do not match the store");
  beta_.insert(beta_.end(), beta.data(), beta.data() + beta.size());
  tau2_.insert(tau2_.end(), tau2.data(), tau2.data() + tau2.size());
  lambda2_.insert(lambda2_.end(), lambda2.data(), lambda2.data() + lambda2.size());
  sigma2_.push_back(sigma2);
}

void ChainStore::append(const GibbsState& state) { append(state.beta, state.sigma2, state.tau2, state.lambda2); }

Eigen::Map<const Eigen::VectorXd> ChainStore::beta(Eigen::Index draw) const {
  return {beta_.data() + draw * p_, p_};
}
Eigen::Map<const Eigen::VectorXd> ChainStore::tau2(Eigen::Index draw) const {
  return {tau2_.data() + draw * n_penalties_, n_penalties_};
}
Eigen::Map<const Eigen::VectorXd> ChainStore::lambda2(Eigen::Index draw) const {
  return {lambda2_.data() + draw * n_penalties_, n_penalties_};
}

Eigen::MatrixXd ChainStore::lambda_draws() const {
  Eigen::MatrixXd out(size(), n_penalties_);
  for (Eigen::Index i = 0; i < size(); ++i) out.row(i) = lambda2(i).cwiseSqrt().transpose();
  return out;
}

Eigen::MatrixXd ChainStore::beta_draws() const {
  Eigen::MatrixXd out(size(), p_);
  for (Eigen::Index i = 0; i < size(); ++i) out.row(i) = beta(i).transpose();
  return out;
}

Eigen::VectorXd ChainStore::beta_column(Eigen::Index j) const {
  Eigen::VectorXd out(size());
  for (Eigen::Index i = 0; i < size(); ++i) out[i] = beta_[static_cast<std::size_t>(i * p_ + j)];
  return out;
}

std::uint64_t ChainStore::fingerprint() const {
  std::uint64_t h = provenance.config_hash();
  h = fnv1a(std::span<const double>(beta_), h);
  h = fnv1a(std::span<const double>(sigma2_), h);
  h = fnv1a(std::span<const double>(tau2_), h);
  h = fnv1a(std::span<const double>(lambda2_), h);
  if (eb_lambda) h = fnv1a(std::span<const double>(eb_lambda->data(), static_cast<std::size_t>(eb_lambda->size())), h);
  return h;
}

}  // namespace balasso
