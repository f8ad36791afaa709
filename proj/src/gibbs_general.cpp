#include "balasso/gibbs_general.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "balasso/distributions.hpp"
#include "balasso/error.hpp"
#include "balasso/keyvalue.hpp"
#include "sampler_core.hpp"

namespace balasso {

void validate(const LsaSurrogate& surrogate) {
  const Eigen::Index p = surrogate.p();
  if (p < 1) throw ParameterDomainError("LSA surrogate is empty");
  if (surrogate.precision.rows() != p || surrogate.precision.cols() != p)
    throw ParameterDomainError("LSA surrogate: precision must be p x p");
  if (!surrogate.center.allFinite() || !surrogate.precision.allFinite())
    throw ParameterDomainError("LSA surrogate has non-finite entries");
  if ((surrogate.precision - surrogate.precision.transpose()).cwiseAbs().maxCoeff() >
      1e-9 * (1.0 + surrogate.precision.cwiseAbs().maxCoeff()))
    throw ParameterDomainError("LSA surrogate: precision is not symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(surrogate.precision);
  if (llt.info() != Eigen::Success)
    throw NumericalError("LSA surrogate: precision is not positive definite", condition_estimate(surrogate.precision));
}

std::uint64_t surrogate_fingerprint(const LsaSurrogate& s) {
  std::uint64_t h = fnv1a(std::span<const double>(s.center.data(), static_cast<std::size_t>(s.center.size())));
  h = fnv1a(std::span<const double>(s.precision.data(), static_cast<std::size_t>(s.precision.size())), h);
  if (s.intercept) h = fnv1a(std::span<const double>(&*s.intercept, 1), h);
  return h;
}

namespace {

double log_likelihood(const Eigen::VectorXd& y, const Eigen::VectorXd& eta) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    ll += y[i] * eta[i] - (std::max(eta[i], 0.0) + std::log1p(std::exp(-std::abs(eta[i]))));
  return ll;
}

Eigen::VectorXd logistic(const Eigen::VectorXd& eta) {
  return eta.unaryExpr([](double t) { return t >= 0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t)); });
}

}  // namespace

LsaSurrogate fit_logistic_mle(const Dataset& data, bool fit_intercept, const NewtonConfig& cfg) {
  const Eigen::Index n = data.n();
  const Eigen::Index p = data.p();
  if (n < 1 || p < 1 || data.y.size() != n) throw ParameterDomainError("logistic fit: empty or mismatched data");
  for (Eigen::Index i = 0; i < n; ++i)
    if (data.y[i] != 0.0 && data.y[i] != 1.0)
      throw ParameterDomainError("logistic fit: response must be 0/1 (row " + std::to_string(i + 1) + ")");

  const Eigen::Index offset = fit_intercept ? 1 : 0;
  Eigen::MatrixXd Z(n, p + offset);
  if (fit_intercept) Z.col(0).setOnes();
  Z.rightCols(p) = data.X;

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p + offset);
  Eigen::VectorXd eta = Z * theta;
  double ll = log_likelihood(data.y, eta);
  Eigen::MatrixXd H;
  long it = 0;
  for (;; ++it) {
    const Eigen::VectorXd mu = logistic(eta);
    const Eigen::VectorXd grad = Z.transpose() * (data.y - mu);
    const Eigen::VectorXd w = mu.array() * (1.0 - mu.array());
    H = Z.transpose() * w.asDiagonal() * Z;
    if (grad.cwiseAbs().maxCoeff() < cfg.gradient_tolerance) {
      if ((data.y - mu).cwiseAbs().maxCoeff() < 1e-6)
        throw NonConvergenceError("logistic fit: every observation fitted exactly (complete separation)", theta, it);
      break;
    }
    if (it >= cfg.max_iterations)
      throw NonConvergenceError("logistic fit: Newton did not reach the gradient tolerance in " +
                                    std::to_string(cfg.max_iterations) + " iterations",
                                theta, it);
    Eigen::LLT<Eigen::MatrixXd> llt(H);
    if (llt.info() != Eigen::Success) {
      if (theta.cwiseAbs().maxCoeff() > 10.0)
        throw NonConvergenceError("logistic fit: information matrix degenerated (likely separation)", theta, it);
      throw NumericalError("logistic fit: information matrix is singular (design not of full rank)",
                           condition_estimate(H));
    }
    const Eigen::VectorXd step = llt.solve(grad);
    double t = 1.0;
    Eigen::VectorXd candidate;
    double candidate_ll = -std::numeric_limits<double>::infinity();
    for (int halvings = 0; halvings < 40; ++halvings, t *= 0.5) {
      candidate = theta + t * step;
      candidate_ll = log_likelihood(data.y, Z * candidate);
      if (candidate_ll >= ll - 1e-12 * std::abs(ll)) break;
    }
    theta = candidate;
    eta = Z * theta;
    ll = candidate_ll;
    if (theta.cwiseAbs().maxCoeff() > cfg.divergence_bound)
      throw NonConvergenceError("logistic fit: coefficients diverge (complete or quasi-complete separation)", theta,
                                it + 1);
  }

  LsaSurrogate s;
  s.center = theta.tail(p);
  if (fit_intercept) {
    s.intercept = theta[0];
    // Marginal information of the slopes: Schur complement of the intercept entry.
    const Eigen::VectorXd h = H.col(0).tail(p);
    s.precision = H.bottomRightCorner(p, p) - h * h.transpose() / H(0, 0);
  } else {
    s.precision = H;
  }
  s.precision = 0.5 * (s.precision + s.precision.transpose()).eval();
  return s;
}

LsaSurrogate fit_linear_lsa(const Dataset& data) {
  const LinearModel m = make_linear_model(data);
  const Eigen::Index dof = m.n - m.p() - 1;
  if (dof < 1) throw ParameterDomainError("linear LSA needs n > p + 1");
  Eigen::LLT<Eigen::MatrixXd> llt(m.gram);
  if (llt.info() != Eigen::Success) throw NumericalError("linear LSA: X'X is singular", condition_estimate(m.gram));
  LsaSurrogate s;
  s.center = llt.solve(m.xty);
  const double sigma2 = m.rss(s.center) / static_cast<double>(dof);
  if (!(sigma2 > 0.0)) throw ParameterDomainError("linear LSA: zero residual variance (perfect fit)");
  s.precision = m.gram / sigma2;
  return s;
}

PseudoData lsa_pseudo_data(const LsaSurrogate& surrogate) {
  validate(surrogate);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(surrogate.precision);
  if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0.0)
    throw NumericalError("LSA pseudo-data: precision is not positive definite", condition_estimate(surrogate.precision));
  PseudoData out;
  out.X = eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
  out.y = out.X * surrogate.center;
  return out;
}

LinearModel lsa_linear_model(const LsaSurrogate& surrogate) {
  LinearModel m;
  m.gram = surrogate.precision;
  m.xty = surrogate.precision * surrogate.center;
  m.yty = surrogate.center.dot(m.xty);
  m.n = surrogate.p() + 1;
  return m;
}

CapStructure::CapStructure(GroupMap groups, AncestryRelation relation, Eigen::Index p)
    : groups_(std::move(groups)), relation_(std::move(relation)), p_(p) {
  validate_partition(groups_, p_);
  validate_ancestry(relation_, n_groups());
  const auto J = groups_.size();
  children_.assign(J, {});
  parents_.assign(J, {});
  std::set<std::pair<Eigen::Index, Eigen::Index>> seen;
  for (const auto& [a, d] : relation_) {
    if (!seen.insert({a, d}).second) continue;
    children_[static_cast<std::size_t>(a)].push_back(d);
    parents_[static_cast<std::size_t>(d)].push_back(a);
  }
  const Eigen::VectorXd m = group_sizes();
  effective_sizes_ = m;
  for (std::size_t j = 0; j < J; ++j)
    for (Eigen::Index c : children_[j]) effective_sizes_[static_cast<Eigen::Index>(j)] += m[c];
}

Eigen::VectorXd CapStructure::group_sizes() const {
  Eigen::VectorXd m(n_groups());
  for (Eigen::Index j = 0; j < n_groups(); ++j) m[j] = static_cast<double>(groups_[static_cast<std::size_t>(j)].size());
  return m;
}

Eigen::VectorXd CapStructure::group_variances(const Eigen::VectorXd& tau2) const {
  Eigen::VectorXd out(n_groups());
  for (Eigen::Index j = 0; j < n_groups(); ++j) {
    double precision = 1.0 / tau2[j];
    for (Eigen::Index a : ancestors(j)) precision += 1.0 / tau2[a];
    out[j] = 1.0 / precision;
  }
  return out;
}

Eigen::VectorXd CapStructure::penalty_norms(const Eigen::VectorXd& beta) const {
  Eigen::VectorXd squares(n_groups());
  for (Eigen::Index j = 0; j < n_groups(); ++j) {
    double s = 0.0;
    for (Eigen::Index i : groups_[static_cast<std::size_t>(j)]) s += beta[i] * beta[i];
    squares[j] = s;
  }
  Eigen::VectorXd out = squares;
  for (Eigen::Index j = 0; j < n_groups(); ++j)
    for (Eigen::Index c : descendants(j)) out[j] += squares[c];
  return out.cwiseSqrt();
}

GibbsState initial_lsa_state(const LsaSurrogate& surrogate, const PenaltyMode& mode, Eigen::Index n_penalties) {
  GibbsState s;
  s.beta = surrogate.center;
  s.sigma2 = 1.0;
  detail::init_penalty(s, mode, n_penalties);
  return s;
}

void gibbs_step_lsa(GibbsState& state, const LsaSurrogate& surrogate, const PenaltyMode& mode, RngHandle& rng,
                    const FrozenBlocks& frozen) {
  FrozenBlocks f = frozen;
  f.sigma2 = true;
  state.sigma2 = 1.0;
  gibbs_step_linear(state, lsa_linear_model(surrogate), mode, rng, f);
}

namespace {

// Blockwise beta update in the Gram form of the pseudo-data:
// beta_j | rest ~ N(A_j^{-1} r_j, A_j^{-1}), A_j = Q_jj + I / sigma_j^2,
// r_j = (Q center)_j - sum_{k not in j} Q_jk beta_k.
void draw_group_betas(GibbsState& state, const CapStructure& structure, const Eigen::MatrixXd& Q,
                      const Eigen::VectorXd& q_center, RngHandle& rng) {
  const Eigen::VectorXd variances = structure.group_variances(state.tau2);
  Eigen::VectorXd q_beta = Q * state.beta;
  for (Eigen::Index j = 0; j < structure.n_groups(); ++j) {
    const auto& cols = structure.groups()[static_cast<std::size_t>(j)];
    const auto m = static_cast<Eigen::Index>(cols.size());
    Eigen::MatrixXd A(m, m);
    Eigen::VectorXd rhs(m);
    Eigen::VectorXd old(m);
    for (Eigen::Index a = 0; a < m; ++a) {
      old[a] = state.beta[cols[static_cast<std::size_t>(a)]];
      for (Eigen::Index b = 0; b < m; ++b) A(a, b) = Q(cols[static_cast<std::size_t>(a)], cols[static_cast<std::size_t>(b)]);
    }
    for (Eigen::Index a = 0; a < m; ++a) {
      const Eigen::Index k = cols[static_cast<std::size_t>(a)];
      rhs[a] = q_center[k] - q_beta[k] + A.row(a).dot(old);
    }
    A.diagonal().array() += 1.0 / variances[j];
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success)
      throw NumericalError("Cholesky of group block " + std::to_string(j + 1) + " failed", condition_estimate(A));
    const Eigen::VectorXd draw = sample_mvn_from_factor(llt.solve(rhs), llt, rng);
    for (Eigen::Index a = 0; a < m; ++a) {
      const Eigen::Index k = cols[static_cast<std::size_t>(a)];
      const double change = draw[a] - old[a];
      if (change != 0.0) q_beta += Q.col(k) * change;
      state.beta[k] = draw[a];
    }
  }
}

void cap_sweep(GibbsState& state, const CapStructure& structure, const LsaSurrogate& surrogate,
               const Eigen::VectorXd& q_center, const PenaltyMode& mode, RngHandle& rng, const FrozenBlocks& frozen) {
  state.sigma2 = 1.0;
  if (!frozen.beta) draw_group_betas(state, structure, surrogate.precision, q_center, rng);
  if (!frozen.tau2) detail::draw_tau2(state, structure.penalty_norms(state.beta), 1.0, rng);
  if (!frozen.lambda2) detail::update_lambda2(state, mode, structure.effective_sizes(), rng);
}

void check_shapes(const GibbsState& state, const CapStructure& structure, const LsaSurrogate& surrogate) {
  if (structure.p() != surrogate.p() || state.beta.size() != surrogate.p())
    throw ParameterDomainError("group sampler: structure, surrogate and state dimensions disagree");
  if (state.tau2.size() != structure.n_groups() || state.lambda2.size() != structure.n_groups())
    throw ParameterDomainError("group sampler: need one tau^2 and lambda^2 per group");
}

ChainStore make_store(const char* model, const LsaSurrogate& surrogate, const CapStructure& structure,
                      const PenaltyMode& mode, const ChainConfig& cfg) {
  ChainStore store(surrogate.p(), structure.n_groups());
  store.model = model;
  store.groups = structure.groups();
  store.ancestry = structure.relation();
  store.provenance.seed = cfg.seed;
  store.provenance.stream = cfg.stream;
  store.provenance.config = {{"model", model}, {"data.fingerprint", to_hex(surrogate_fingerprint(surrogate))}};
  std::string groups;
  for (const auto& g : structure.groups()) {
    if (!groups.empty()) groups += ';';
    for (std::size_t i = 0; i < g.size(); ++i) groups += (i ? "," : "") + std::to_string(g[i]);
  }
  std::string relation;
  for (const auto& [a, d] : structure.relation())
    relation += (relation.empty() ? "" : ";") + std::to_string(a) + ">" + std::to_string(d);
  store.provenance.config.emplace_back("groups", groups);
  store.provenance.config.emplace_back("ancestry", relation);
  for (auto& kv : describe(mode)) store.provenance.config.push_back(kv);
  for (auto& kv : describe(cfg)) store.provenance.config.push_back(kv);
  return store;
}

}  // namespace

void gibbs_step_cap(GibbsState& state, const CapStructure& structure, const LsaSurrogate& surrogate,
                    const PenaltyMode& mode, RngHandle& rng, const FrozenBlocks& frozen) {
  check_shapes(state, structure, surrogate);
  cap_sweep(state, structure, surrogate, surrogate.precision * surrogate.center, mode, rng, frozen);
}

void gibbs_step_group(GibbsState& state, const CapStructure& structure, const LsaSurrogate& surrogate,
                      const PenaltyMode& mode, RngHandle& rng, const FrozenBlocks& frozen) {
  if (!structure.relation().empty())
    throw ParameterDomainError("group sampler: use gibbs_step_cap for structures with an ancestry relation");
  gibbs_step_cap(state, structure, surrogate, mode, rng, frozen);
}

ChainStore run_chain_lsa(const LsaSurrogate& surrogate, const PenaltyMode& mode, const ChainConfig& cfg) {
  validate(surrogate);
  const LinearModel model = lsa_linear_model(surrogate);
  const CapStructure singletons(singleton_groups(surrogate.p()), {}, surrogate.p());
  ChainStore store = make_store("lsa", surrogate, singletons, mode, cfg);
  store.groups.clear();
  FrozenBlocks frozen = cfg.frozen;
  frozen.sigma2 = true;
  auto step = [&model, frozen](GibbsState& s, const PenaltyMode& m, RngHandle& rng) {
    s.sigma2 = 1.0;
    gibbs_step_linear(s, model, m, rng, frozen);
  };
  return detail::drive_chain(initial_lsa_state(surrogate, mode, surrogate.p()), mode, cfg,
                             Eigen::VectorXd::Ones(surrogate.p()), step, std::move(store));
}

ChainStore run_chain_cap(const LsaSurrogate& surrogate, const CapStructure& structure, const PenaltyMode& mode,
                         const ChainConfig& cfg) {
  validate(surrogate);
  if (structure.p() != surrogate.p()) throw ParameterDomainError("CAP structure does not match the surrogate");
  ChainStore store = make_store(structure.relation().empty() ? "group" : "cap", surrogate, structure, mode, cfg);
  const Eigen::VectorXd q_center = surrogate.precision * surrogate.center;
  const FrozenBlocks frozen = cfg.frozen;
  auto step = [&, frozen](GibbsState& s, const PenaltyMode& m, RngHandle& rng) {
    cap_sweep(s, structure, surrogate, q_center, m, rng, frozen);
  };
  return detail::drive_chain(initial_lsa_state(surrogate, mode, structure.n_groups()), mode, cfg,
                             structure.effective_sizes(), step, std::move(store));
}

ChainStore run_chain_group(const LsaSurrogate& surrogate, const GroupMap& groups, const PenaltyMode& mode,
                           const ChainConfig& cfg) {
  return run_chain_cap(surrogate, CapStructure(groups, {}, surrogate.p()), mode, cfg);
}

}  // namespace balasso
