#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "balasso/error.hpp"
#include "balasso/gibbs_general.hpp"
#include "helpers.hpp"

using namespace balasso;
using namespace balasso::testing;

namespace {

LsaSurrogate surrogate(Eigen::VectorXd center, Eigen::MatrixXd precision) {
  return LsaSurrogate{std::move(center), std::move(precision), std::nullopt};
}

GibbsState frozen_start(const Eigen::VectorXd& beta, const Eigen::VectorXd& tau2) {
  GibbsState s;
  s.beta = beta;
  s.sigma2 = 1.0;
  s.tau2 = tau2;
  s.lambda2 = Eigen::VectorXd::Ones(tau2.size());
  return s;
}

PenaltyMode fixed_mode(Eigen::Index units) {
  PenaltyMode m;
  m.kind = PenaltyKind::fixed;
  m.lambda2 = Eigen::VectorXd::Ones(units);
  return m;
}

double logistic_loglik(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double a, double b) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double eta = a + b * x[i];
    ll += y[i] * eta - std::log1p(std::exp(eta));
  }
  return ll;
}

// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double worst = 0.0;
  while (i < a.size() && j < b.size()) {
    const double t = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= t) ++i;
    while (j < b.size() && b[j] <= t) ++j;
    worst = std::max(worst, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return worst;
}

}  // namespace

TEST_SUITE("gibbs_general") {

TEST_CASE("logistic MLE: a covariate independent of the response has zero slope") {
  Eigen::MatrixXd X(20, 1);
  Eigen::VectorXd y(20);
  for (int i = 0; i < 20; ++i) {
    X(i, 0) = (i % 2) ? 1.0 : -1.0;
    y[i] = (i / 2) % 2;
  }
  const LsaSurrogate s = fit_logistic_mle(make_dataset(X, y), true);
  CHECK(std::abs(s.center[0]) < 1e-8);
  REQUIRE(s.intercept.has_value());
  CHECK(std::abs(*s.intercept) < 1e-8);
}

TEST_CASE("logistic MLE satisfies the score equations") {
  RngHandle rng(1);
  const Eigen::MatrixXd X = gaussian_matrix(300, 4, rng);
  const Eigen::Vector4d beta(1.0, -0.5, 0.0, 0.8);
  Eigen::VectorXd y(300);
  for (int i = 0; i < 300; ++i) y[i] = rng.uniform() < 1.0 / (1.0 + std::exp(-(0.3 + X.row(i).dot(beta)))) ? 1.0 : 0.0;
  const LsaSurrogate s = fit_logistic_mle(make_dataset(X, y), true);
  REQUIRE(s.intercept.has_value());
  const Eigen::ArrayXd eta = (X * s.center).array() + *s.intercept;
  const Eigen::VectorXd resid = y.array() - 1.0 / (1.0 + (-eta).exp());
  CHECK((X.transpose() * resid).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(std::abs(resid.sum()) < 1e-6);
  // Precision is X'WX with the intercept profiled out: symmetric positive definite.
  CHECK((s.precision - s.precision.transpose()).norm() < 1e-10);
  CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(s.precision).eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("logistic MLE on six points matches a direct likelihood search") {
  Eigen::MatrixXd X(6, 1);
  X << -2.0, -1.0, 0.0, 0.5, 1.0, 2.0;
  const Eigen::VectorXd y = (Eigen::VectorXd(6) << 0, 1, 0, 1, 0, 1).finished();
  const LsaSurrogate s = fit_logistic_mle(make_dataset(X, y), true);

  // Zooming grid search over (intercept, slope).
  double a0 = 0.0, b0 = 0.0, width = 4.0;
  for (int level = 0; level < 7; ++level) {
    double best = -1e300, ba = a0, bb = b0;
    for (int i = -100; i <= 100; ++i)
      for (int k = -100; k <= 100; ++k) {
        const double a = a0 + width * i / 100.0, b = b0 + width * k / 100.0;
        const double ll = logistic_loglik(X.col(0), y, a, b);
        if (ll > best) best = ll, ba = a, bb = b;
      }
    a0 = ba;
    b0 = bb;
    width /= 20.0;
  }
  CHECK(std::abs(s.center[0] - b0) < 1e-4);
  CHECK(std::abs(*s.intercept - a0) < 1e-4);
}

TEST_CASE("perfectly separated data raise non-convergence") {
  Eigen::MatrixXd X(6, 1);
  X << -3, -2, -1, 1, 2, 3;
  const Eigen::VectorXd y = (Eigen::VectorXd(6) << 0, 0, 0, 1, 1, 1).finished();
  CHECK_THROWS_AS(fit_logistic_mle(make_dataset(X, y), true), NonConvergenceError);
  const Eigen::VectorXd bad = (Eigen::VectorXd(6) << 0, 2, 0, 1, 1, 1).finished();
  CHECK_THROWS_AS(fit_logistic_mle(make_dataset(X, bad), true), ParameterDomainError);
}

TEST_CASE("pseudo data: symmetric square root of the precision") {
  const PseudoData id = lsa_pseudo_data(surrogate(Eigen::Vector2d(1.5, -2.0), Eigen::Matrix2d::Identity()));
  CHECK((id.X - Eigen::Matrix2d::Identity()).norm() < 1e-12);
  CHECK((id.y - Eigen::Vector2d(1.5, -2.0)).norm() < 1e-12);

  const PseudoData diag = lsa_pseudo_data(surrogate(Eigen::Vector2d(1, 1), Eigen::Vector2d(4, 9).asDiagonal()));
  CHECK((diag.X - Eigen::MatrixXd(Eigen::Vector2d(2, 3).asDiagonal())).norm() < 1e-12);

  RngHandle rng(2);
  const Eigen::MatrixXd P = random_spd(3, rng);
  const PseudoData r = lsa_pseudo_data(surrogate(gaussian_vector(3, rng), P));
  CHECK((r.X.transpose() * r.X - P).norm() < 1e-10);
  CHECK((r.X - r.X.transpose()).norm() < 1e-10);
}

TEST_CASE("Gaussian LSA quadratic reproduces RSS differences") {
  RngHandle rng(3);
  const Eigen::MatrixXd X = center_columns(gaussian_matrix(50, 3, rng));
  const Eigen::VectorXd y = center(X * Eigen::Vector3d(1, 0, -1) + gaussian_vector(50, rng));
  const Dataset data = standardize(make_dataset(X, y), Standardization::center);
  const LsaSurrogate s = fit_linear_lsa(data);
  const double sigma2 = (y - X * s.center).squaredNorm() / (50.0 - 3.0 - 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd b1 = gaussian_vector(3, rng), b2 = gaussian_vector(3, rng);
    const double rss_diff = ((y - X * b1).squaredNorm() - (y - X * b2).squaredNorm()) / sigma2;
    const double q_diff = (b1 - s.center).dot(s.precision * (b1 - s.center)) -
                          (b2 - s.center).dot(s.precision * (b2 - s.center));
    CHECK(std::abs(rss_diff - q_diff) < 1e-8 * std::max(1.0, std::abs(rss_diff)));
  }
}

TEST_CASE("LSA step with identity precision and tau^2 frozen at 1") {
  const LsaSurrogate s = surrogate(Eigen::Vector2d(2.0, -1.0), Eigen::Matrix2d::Identity());
  ChainConfig cfg;
  cfg.burn_in = 0;
  cfg.kept = 100000;
  cfg.seed = 4;
  cfg.frozen.tau2 = true;
  cfg.initial = frozen_start(Eigen::Vector2d::Zero(), Eigen::Vector2d::Ones());
  const ChainStore chain = run_chain_lsa(s, fixed_mode(2), cfg);
  for (int j = 0; j < 2; ++j) {
    std::vector<double> col(static_cast<std::size_t>(chain.size()));
    for (Eigen::Index i = 0; i < chain.size(); ++i) col[static_cast<std::size_t>(i)] = chain.beta(i)[j];
    const Moments m = moments(col);
    CHECK(std::abs(m.mean - s.center[j] / 2.0) < 3.0 * m.mean_se);
    CHECK(m.variance == doctest::Approx(0.5).epsilon(0.02));
  }
  for (Eigen::Index i = 0; i < chain.size(); i += 1000) CHECK(chain.sigma2(i) == 1.0);
}

TEST_CASE("LSA step with a huge frozen tau^2 centres on the MLE") {
  const LsaSurrogate s = surrogate(Eigen::Vector2d(2.0, -1.0), (Eigen::Matrix2d() << 4, 1, 1, 3).finished());
  ChainConfig cfg;
  cfg.burn_in = 0;
  cfg.kept = 50000;
  cfg.seed = 5;
  cfg.frozen.tau2 = true;
  cfg.initial = frozen_start(Eigen::Vector2d::Zero(), Eigen::Vector2d::Constant(1e12));
  const ChainStore chain = run_chain_lsa(s, fixed_mode(2), cfg);
  const Eigen::VectorXd mean = chain.beta_draws().colwise().mean();
  CHECK((mean - s.center).cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("LSA with a zero MLE treats coordinates symmetrically") {
  const LsaSurrogate s = surrogate(Eigen::Vector2d::Zero(), 5.0 * Eigen::Matrix2d::Identity());
  PenaltyMode mode;
  mode.delta = 1.0;
  ChainConfig cfg;
  cfg.burn_in = 1000;
  cfg.kept = 3000;
  cfg.thin = 50;
  cfg.seed = 6;
  const ChainStore chain = run_chain_lsa(s, mode, cfg);
  std::vector<double> a, b;
  for (Eigen::Index i = 0; i < chain.size(); ++i) {
    a.push_back(std::sqrt(chain.lambda2(i)[0]));
    b.push_back(std::sqrt(chain.lambda2(i)[1]));
  }
  const double n = static_cast<double>(a.size());
  CHECK(ks_statistic(a, b) < 1.628 * std::sqrt(2.0 / n));
}

TEST_CASE("CAP structure: effective sizes, group variances and penalty norms") {
  const CapStructure cap({{0, 1}, {2, 3, 4}}, {{0, 1}}, 5);
  CHECK(cap.effective_sizes()[0] == 5.0);
  CHECK(cap.effective_sizes()[1] == 3.0);
  CHECK(cap.group_sizes()[0] == 2.0);
  const Eigen::VectorXd var = cap.group_variances(Eigen::Vector2d(1.0, 1.0));
  CHECK(var[0] == doctest::Approx(1.0));
  CHECK(var[1] == doctest::Approx(0.5));
  const Eigen::VectorXd norms = cap.penalty_norms((Eigen::VectorXd(5) << 3, 4, 0, 0, 12).finished());
  CHECK(norms[0] == doctest::Approx(13.0));
  CHECK(norms[1] == doctest::Approx(12.0));
  CHECK(cap.descendants(0) == std::vector<Eigen::Index>{1});
  CHECK(cap.ancestors(1) == std::vector<Eigen::Index>{0});

  CHECK_THROWS_AS(CapStructure({{0, 1}, {2}}, {{0, 1}, {1, 0}}, 3), ParameterDomainError);
  CHECK_THROWS_AS(CapStructure({{0, 1}, {1, 2}}, {}, 3), ParameterDomainError);
}

TEST_CASE("group step with tau^2 frozen: blockwise ridge posterior mean") {
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(4, 4);
  P.topLeftCorner(2, 2) << 3, 1, 1, 2;
  P.bottomRightCorner(2, 2) << 2, -0.5, -0.5, 1;
  const Eigen::Vector4d center(1.0, 2.0, -1.0, 0.5);
  const LsaSurrogate s = surrogate(center, P);
  const GroupMap groups{{0, 1}, {2, 3}};
  const Eigen::Vector2d tau2(0.5, 2.0);

  ChainConfig cfg;
  cfg.burn_in = 0;
  cfg.kept = 100000;
  cfg.seed = 7;
  cfg.frozen.tau2 = true;
  cfg.initial = frozen_start(Eigen::Vector4d::Zero(), tau2);
  const ChainStore chain = run_chain_group(s, groups, fixed_mode(2), cfg);
  const Eigen::MatrixXd draws = chain.beta_draws();
  for (int g = 0; g < 2; ++g) {
    const Eigen::Matrix2d Pg = P.block(2 * g, 2 * g, 2, 2);
    const Eigen::Vector2d oracle =
        (Pg + Eigen::Matrix2d::Identity() / tau2[g]).ldlt().solve(Pg * center.segment(2 * g, 2));
    for (int k = 0; k < 2; ++k) {
      const Eigen::VectorXd col = draws.col(2 * g + k);
      CHECK(std::abs(col.mean() - oracle[k]) < 3.0 * batch_mean_se(col));
    }
  }
}

TEST_CASE("CAP step with tau^2 frozen: ancestors tighten the descendant's prior variance") {
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(4, 4);
  P.topLeftCorner(2, 2) << 3, 1, 1, 2;
  P.bottomRightCorner(2, 2) << 2, -0.5, -0.5, 1;
  const Eigen::Vector4d center(1.0, 2.0, -1.0, 0.5);
  const CapStructure cap({{0, 1}, {2, 3}}, {{0, 1}}, 4);
  const Eigen::Vector2d tau2(0.5, 2.0);
  const Eigen::Vector2d sigma2 = cap.group_variances(tau2);
  CHECK(sigma2[1] == doctest::Approx(1.0 / (1.0 / 0.5 + 1.0 / 2.0)));

  ChainConfig cfg;
  cfg.burn_in = 0;
  cfg.kept = 100000;
  cfg.seed = 8;
  cfg.frozen.tau2 = true;
  cfg.initial = frozen_start(Eigen::Vector4d::Zero(), tau2);
  const ChainStore chain = run_chain_cap(surrogate(center, P), cap, fixed_mode(2), cfg);
  const Eigen::MatrixXd draws = chain.beta_draws();
  for (int g = 0; g < 2; ++g) {
    const Eigen::Matrix2d Pg = P.block(2 * g, 2 * g, 2, 2);
    const Eigen::Vector2d oracle =
        (Pg + Eigen::Matrix2d::Identity() / sigma2[g]).ldlt().solve(Pg * center.segment(2 * g, 2));
    for (int k = 0; k < 2; ++k) {
      const Eigen::VectorXd col = draws.col(2 * g + k);
      CHECK(std::abs(col.mean() - oracle[k]) < 3.0 * batch_mean_se(col));
    }
  }
}

TEST_CASE("singleton groups reproduce the per-coefficient LSA sampler") {
  RngHandle rng(9);
  const LsaSurrogate s = surrogate(Eigen::Vector3d(2.0, 0.1, -1.0), random_spd(3, rng));
  PenaltyMode mode;
  mode.delta = 0.5;
  ChainConfig cfg;
  cfg.burn_in = 2000;
  cfg.kept = 100000;
  cfg.seed = 10;
  const ChainStore lsa = run_chain_lsa(s, mode, cfg);
  cfg.seed = 11;
  const ChainStore grouped = run_chain_group(s, singleton_groups(3), mode, cfg);
  for (int j = 0; j < 3; ++j) {
    const Eigen::VectorXd a = lsa.beta_column(j), b = grouped.beta_column(j);
    CHECK(std::abs(a.mean() - b.mean()) < 3.0 * std::hypot(batch_mean_se(a), batch_mean_se(b)));
  }
}

TEST_CASE("CAP with an empty relation agrees with the group sampler") {
  RngHandle rng(12);
  const LsaSurrogate s = surrogate(Eigen::Vector4d(1.5, 1.0, 0.05, -0.1), random_spd(4, rng));
  const GroupMap groups{{0, 1}, {2, 3}};
  PenaltyMode mode;
  mode.delta = 0.5;
  ChainConfig cfg;
  cfg.burn_in = 2000;
  cfg.kept = 100000;
  cfg.seed = 13;
  const ChainStore group = run_chain_group(s, groups, mode, cfg);
  cfg.seed = 14;
  const ChainStore cap = run_chain_cap(s, CapStructure(groups, {}, 4), mode, cfg);
  for (int j = 0; j < 4; ++j) {
    const Eigen::VectorXd a = group.beta_column(j), b = cap.beta_column(j);
    CHECK(std::abs(a.mean() - b.mean()) < 3.0 * std::hypot(batch_mean_se(a), batch_mean_se(b)));
  }
  for (int g = 0; g < 2; ++g) {
    Eigen::VectorXd a(group.size()), b(cap.size());
    for (Eigen::Index i = 0; i < group.size(); ++i) a[i] = std::log(group.lambda2(i)[g]);
    for (Eigen::Index i = 0; i < cap.size(); ++i) b[i] = std::log(cap.lambda2(i)[g]);
    CHECK(std::abs(a.mean() - b.mean()) < 3.0 * std::hypot(batch_mean_se(a), batch_mean_se(b)));
  }
}

TEST_CASE("a group sitting exactly at zero still gets a finite positive tau^2") {
  const LsaSurrogate s = surrogate(Eigen::Vector4d(1, 1, 1, 1), Eigen::Matrix4d::Identity());
  const CapStructure structure({{0, 1}, {2, 3}}, {}, 4);
  GibbsState state = frozen_start(Eigen::Vector4d(1, 1, 0, 0), Eigen::Vector2d::Ones());
  FrozenBlocks frozen;
  frozen.beta = true;
  RngHandle rng(15);
  gibbs_step_group(state, structure, s, PenaltyMode{}, rng, frozen);
  CHECK(std::isfinite(state.tau2[1]));
  CHECK(state.tau2[1] > 0.0);
}

TEST_CASE("group step refuses an ancestry relation") {
  const LsaSurrogate s = surrogate(Eigen::Vector4d(1, 1, 1, 1), Eigen::Matrix4d::Identity());
  const CapStructure structure({{0, 1}, {2, 3}}, {{0, 1}}, 4);
  GibbsState state = frozen_start(Eigen::Vector4d(1, 1, 1, 1), Eigen::Vector2d::Ones());
  RngHandle rng(16);
  CHECK_THROWS_AS(gibbs_step_group(state, structure, s, PenaltyMode{}, rng), ParameterDomainError);
}

TEST_CASE("LSA chains are deterministic and record their structure") {
  const LsaSurrogate s = surrogate(Eigen::Vector4d(1.5, 1.0, 0.05, -0.1), 3.0 * Eigen::Matrix4d::Identity());
  const CapStructure cap({{0, 1}, {2, 3}}, {{0, 1}}, 4);
  ChainConfig cfg;
  cfg.burn_in = 200;
  cfg.kept = 300;
  cfg.seed = 17;
  const ChainStore a = run_chain_cap(s, cap, PenaltyMode{}, cfg);
  const ChainStore b = run_chain_cap(s, cap, PenaltyMode{}, cfg);
  CHECK(a.fingerprint() == b.fingerprint());
  CHECK(a.model == "cap");
  CHECK(a.groups == cap.groups());
  CHECK(a.ancestry == cap.relation());
  CHECK(a.n_penalties() == 2);
}

}  // TEST_SUITE
