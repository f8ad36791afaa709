#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "balasso/groups.hpp"
#include "balasso/keyvalue.hpp"

namespace balasso {

enum class PenaltyKind { fixed, hierarchical, eb_em, eb_sa };

std::string to_string(PenaltyKind kind);
PenaltyKind parse_penalty_kind(const std::string& text);

// How the shrinkage parameters lambda_j^2 are handled.
//
//  fixed         lambda^2 held at `lambda2`.
//  hierarchical  lambda_j^2 ~ Gamma(r, delta) prior, sampled inside the sweep.
//                delta is fixed when `delta` is set, otherwise re-estimated
//                during burn-in every `delta_block` sweeps by
//                delta = (#lambdas) r / sum_j E[lambda_j^2].
//  eb_em         Monte-Carlo EM: repeated fixed-lambda chains, each followed by
//                lambda_j^2 = (k_j + 1) / E[tau_j^2]  (k_j = 1 for a single coefficient).
//  eb_sa         one chain with the stochastic-approximation update on
//                s_j = log lambda_j:  s_j += a_n ((k_j + 1) - e^{2 s_j} tau_j^2),
//                a_n = sa_step_scale / n.
//
// `shared_lambda` ties all lambda_j together (ordinary Bayesian lasso).
struct PenaltyMode {
  PenaltyKind kind = PenaltyKind::hierarchical;
  double r = 0.1;
  std::optional<double> delta;
  bool shared_lambda = false;
  long delta_block = 200;

  long em_outer_steps = 20;
  long em_burn_in = 2000;
  long em_draws = 2000;
  double em_tolerance = 1e-2;

  double sa_step_scale = 1.0;
  bool sa_truncate = false;  // clamp s_j to [-(n+1), n+1] at iteration n

  Eigen::VectorXd lambda2;  // fixed values (fixed kind) or starting values; empty means 1
};

void validate(const PenaltyMode& mode);
KeyValues describe(const PenaltyMode& mode);

// One sampler state. sigma2 is pinned at 1 for pseudo-likelihood (LSA) models.
// tau2, lambda2 have one entry per penalty unit (coefficient or group).
struct GibbsState {
  Eigen::VectorXd beta;
  double sigma2 = 1.0;
  Eigen::VectorXd tau2;
  Eigen::VectorXd lambda2;
  double delta = 1.0;
  long iteration = 0;  // stochastic-approximation counter
};

using LinearGibbsState = GibbsState;
using GroupGibbsState = GibbsState;

// Throws ParameterDomainError unless sigma2, tau2, lambda2 are positive and finite.
void validate(const GibbsState& state);

// Blocks held at their current value during a sweep; used for conditional checks.
struct FrozenBlocks {
  bool beta = false;
  bool sigma2 = false;
  bool tau2 = false;
  bool lambda2 = false;
};

struct ChainConfig {
  long burn_in = 10000;
  long kept = 10000;
  long thin = 1;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  FrozenBlocks frozen;
  std::optional<GibbsState> initial;
};

void validate(const ChainConfig& cfg);
KeyValues describe(const ChainConfig& cfg);

struct ChainProvenance {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  KeyValues config;  // every setting that affects the draws
  std::uint64_t config_hash() const { return hash_key_values(config); }
};

// Append-only record of kept draws.
class ChainStore {
 public:
  ChainStore() = default;
  ChainStore(Eigen::Index p, Eigen::Index n_penalties);

  Eigen::Index size() const { return static_cast<Eigen::Index>(sigma2_.size()); }
  bool empty() const { return sigma2_.empty(); }
  Eigen::Index p() const { return p_; }
  Eigen::Index n_penalties() const { return n_penalties_; }

  void reserve(Eigen::Index draws);
  void append(const GibbsState& state);
  void append(const Eigen::VectorXd& beta, double sigma2, const Eigen::VectorXd& tau2, const Eigen::VectorXd& lambda2);

  Eigen::Map<const Eigen::VectorXd> beta(Eigen::Index draw) const;
  Eigen::Map<const Eigen::VectorXd> tau2(Eigen::Index draw) const;
  Eigen::Map<const Eigen::VectorXd> lambda2(Eigen::Index draw) const;
  double sigma2(Eigen::Index draw) const { return sigma2_.at(static_cast<std::size_t>(draw)); }

  // sqrt of the lambda^2 draws, one row per draw.
  Eigen::MatrixXd lambda_draws() const;
  Eigen::MatrixXd beta_draws() const;
  Eigen::VectorXd beta_column(Eigen::Index j) const;

  // Hash of every stored value and the provenance.
  std::uint64_t fingerprint() const;

  ChainProvenance provenance;
  std::string model = "linear";          // linear | lsa | group | cap
  std::optional<Eigen::VectorXd> eb_lambda;  // empirical-Bayes point (eb_em / eb_sa)
  double delta = 1.0;                    // final delta
  GroupMap groups;                       // empty for coefficient-level penalties
  AncestryRelation ancestry;

 private:
  Eigen::Index p_ = 0;
  Eigen::Index n_penalties_ = 0;
  std::vector<double> beta_;
  std::vector<double> sigma2_;
  std::vector<double> tau2_;
  std::vector<double> lambda2_;
};

}  // namespace balasso
