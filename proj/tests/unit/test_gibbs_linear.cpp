#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "balasso/error.hpp"
#include "balasso/gibbs_linear.hpp"
#include "balasso/harness.hpp"
#include "balasso/inference.hpp"
#include "helpers.hpp"

using namespace balasso;
using namespace balasso::testing;

namespace {

Dataset centered_dataset(Eigen::MatrixXd X, Eigen::VectorXd y) {
  return standardize(make_dataset(std::move(X), std::move(y)), Standardization::center);
}

Dataset regression_data(Eigen::Index n, const Eigen::VectorXd& beta, double sigma, std::uint64_t seed) {
  RngHandle rng(seed);
  const Eigen::MatrixXd X = gaussian_matrix(n, beta.size(), rng);
  const Eigen::VectorXd y = X * beta + sigma * gaussian_vector(n, rng);
  return centered_dataset(X, y);
}

GibbsState state_for(const Eigen::VectorXd& beta, double sigma2, const Eigen::VectorXd& tau2,
                     const Eigen::VectorXd& lambda2, double delta = 1.0) {
  GibbsState s;
  s.beta = beta;
  s.sigma2 = sigma2;
  s.tau2 = tau2;
  s.lambda2 = lambda2;
  s.delta = delta;
  return s;
}

PenaltyMode fixed_mode(const Eigen::VectorXd& lambda2) {
  PenaltyMode m;
  m.kind = PenaltyKind::fixed;
  m.lambda2 = lambda2;
  return m;
}

}  // namespace

TEST_SUITE("gibbs_linear") {

TEST_CASE("one coefficient with tau^2 and sigma^2 frozen at 1: ridge posterior mean") {
  const Dataset data = regression_data(30, Eigen::VectorXd::Constant(1, 1.5), 1.0, 1);
  const double xtx = data.X.col(0).squaredNorm();
  const double oracle = data.X.col(0).dot(data.y) / (xtx + 1.0);
  const double sd = std::sqrt(1.0 / (xtx + 1.0));

  ChainConfig cfg;
  cfg.burn_in = 0;
  cfg.kept = 100000;
  cfg.seed = 2;
  cfg.frozen.sigma2 = cfg.frozen.tau2 = true;
  cfg.initial = state_for(Eigen::VectorXd::Zero(1), 1.0, Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1));
  const ChainStore chain = run_chain_linear(data, fixed_mode(Eigen::VectorXd::Ones(1)), cfg);
  const Eigen::VectorXd draws = chain.beta_column(0);
  CHECK(std::abs(draws.mean() - oracle) < 3.0 * sd / std::sqrt(100000.0));
  const double var = (draws.array() - draws.mean()).square().mean();
  CHECK(var == doctest::Approx(sd * sd).epsilon(0.02));
}

TEST_CASE("sigma^2 conditional: inverse gamma with the stated shape and scale") {
  const Dataset data = regression_data(40, Eigen::Vector3d(1.0, 0.0, -2.0), 1.5, 3);
  const Eigen::Vector3d beta(0.8, 0.1, -1.7);
  const Eigen::Vector3d tau2(0.5, 2.0, 4.0);
  const LinearModel model = make_linear_model(data);
  const double shape = (40.0 - 1.0) / 2.0 + 3.0 / 2.0;
  const double scale = model.rss(beta) / 2.0 + beta.cwiseAbs2().cwiseQuotient(tau2).sum() / 2.0;

  ChainConfig cfg;
  cfg.burn_in = 0;
  cfg.kept = 100000;
  cfg.seed = 4;
  cfg.frozen.beta = cfg.frozen.tau2 = true;
  cfg.initial = state_for(beta, 1.0, tau2, Eigen::Vector3d::Ones());
  const ChainStore chain = run_chain_linear(data, fixed_mode(Eigen::Vector3d::Ones()), cfg);
  std::vector<double> s2(static_cast<std::size_t>(chain.size()));
  for (Eigen::Index i = 0; i < chain.size(); ++i) s2[static_cast<std::size_t>(i)] = chain.sigma2(i);
  const Moments m = moments(s2);
  CHECK(std::abs(m.mean - scale / (shape - 1.0)) < 3.0 * m.mean_se);
}

TEST_CASE("1/tau^2 conditional: inverse Gaussian mean lambda sigma / |beta|") {
  const Dataset data = regression_data(30, Eigen::Vector2d(1.0, 0.5), 1.0, 5);
  const Eigen::Vector2d beta(0.7, -0.2);
  const double sigma2 = 1.44;
  const Eigen::Vector2d lambda2(4.0, 0.25);

  ChainConfig cfg;
  cfg.burn_in = 0;
  cfg.kept = 100000;
  cfg.seed = 6;
  cfg.frozen.beta = cfg.frozen.sigma2 = true;
  cfg.initial = state_for(beta, sigma2, Eigen::Vector2d::Ones(), lambda2);
  const ChainStore chain = run_chain_linear(data, fixed_mode(lambda2), cfg);
  for (int j = 0; j < 2; ++j) {
    std::vector<double> inv(static_cast<std::size_t>(chain.size()));
    for (Eigen::Index i = 0; i < chain.size(); ++i) inv[static_cast<std::size_t>(i)] = 1.0 / chain.tau2(i)[j];
    const Moments m = moments(inv);
    const double mu = std::sqrt(lambda2[j] * sigma2) / std::abs(beta[j]);
    CHECK(std::abs(m.mean - mu) < 3.0 * m.mean_se);
  }
}

TEST_CASE("lambda^2 conditional with tau^2 frozen: gamma(r + 1, delta + tau^2 / 2)") {
  const Dataset data = regression_data(30, Eigen::Vector2d(1.0, 0.0), 1.0, 7);
  const Eigen::Vector2d tau2(0.3, 5.0);
  PenaltyMode mode;
  mode.kind = PenaltyKind::hierarchical;
  mode.r = 0.1;
  mode.delta = 0.4;

  ChainConfig cfg;
  cfg.burn_in = 0;
  cfg.kept = 100000;
  cfg.seed = 8;
  cfg.frozen.tau2 = true;
  cfg.initial = state_for(Eigen::Vector2d::Zero(), 1.0, tau2, Eigen::Vector2d::Ones(), 0.4);
  const ChainStore chain = run_chain_linear(data, mode, cfg);
  for (int j = 0; j < 2; ++j) {
    std::vector<double> l2(static_cast<std::size_t>(chain.size()));
    for (Eigen::Index i = 0; i < chain.size(); ++i) l2[static_cast<std::size_t>(i)] = chain.lambda2(i)[j];
    const Moments m = moments(l2);
    CHECK(std::abs(m.mean - 1.1 / (0.4 + tau2[j] / 2.0)) < 3.0 * m.mean_se);
  }
}

TEST_CASE("fixed lambda leaves lambda^2 untouched") {
  const Dataset data = regression_data(30, Eigen::Vector2d(1.0, 0.0), 1.0, 9);
  ChainConfig cfg;
  cfg.burn_in = 10;
  cfg.kept = 50;
  const ChainStore chain = run_chain_linear(data, fixed_mode(Eigen::Vector2d(2.0, 3.0)), cfg);
  for (Eigen::Index i = 0; i < chain.size(); ++i) {
    CHECK(chain.lambda2(i)[0] == 2.0);
    CHECK(chain.lambda2(i)[1] == 3.0);
  }
}

TEST_CASE("huge fixed lambda shrinks the coefficient towards zero") {
  RngHandle rng(10);
  const Eigen::MatrixXd X = gaussian_matrix(50, 1, rng);
  const Dataset data = centered_dataset(X, 3.0 * X.col(0) + gaussian_vector(50, rng));
  const double ols = data.X.col(0).dot(data.y) / data.X.col(0).squaredNorm();
  ChainConfig cfg;
  cfg.seed = 11;
  const ChainStore chain = run_chain_linear(data, fixed_mode(Eigen::VectorXd::Constant(1, 1e8)), cfg);
  CHECK(chain.beta_column(0).cwiseAbs().mean() < 0.05 * std::abs(ols));
}

TEST_CASE("vanishing fixed lambda recovers least squares") {
  const Dataset data = regression_data(60, Eigen::Vector3d(2.0, -1.0, 0.5), 1.0, 12);
  const Eigen::VectorXd ols = (data.X.transpose() * data.X).ldlt().solve(data.X.transpose() * data.y);
  ChainConfig cfg;
  cfg.seed = 13;
  cfg.kept = 20000;
  const ChainStore chain = run_chain_linear(data, fixed_mode(Eigen::Vector3d::Constant(1e-10)), cfg);
  for (int j = 0; j < 3; ++j) {
    const Eigen::VectorXd col = chain.beta_column(j);
    CHECK(std::abs(col.mean() - ols[j]) < 3.0 * batch_mean_se(col));
  }
}

TEST_CASE("adaptive shrinkage on the two-coefficient example") {
  ScenarioSpec spec = default_spec(Scenario::fig2);
  RngHandle rng(spec.seed, 0);
  const GeneratedData data = generate_dataset(spec, 0, rng);
  ChainConfig cfg;
  cfg.seed = 14;
  const ChainStore chain = run_chain_linear(data.train, PenaltyMode{}, cfg);
  const Eigen::VectorXd median = summarize_lambda(chain, PointStatistic::median);
  CHECK(median[1] / median[0] > 10.0);
}

TEST_CASE("chains are deterministic in the seed and honour kept and thin") {
  const Dataset data = regression_data(40, Eigen::Vector3d(1.0, 0.0, 2.0), 1.0, 15);
  ChainConfig cfg;
  cfg.burn_in = 100;
  cfg.kept = 200;
  cfg.seed = 16;
  const ChainStore a = run_chain_linear(data, PenaltyMode{}, cfg);
  const ChainStore b = run_chain_linear(data, PenaltyMode{}, cfg);
  CHECK(a.fingerprint() == b.fingerprint());
  CHECK(a.size() == 200);
  cfg.seed = 17;
  CHECK(run_chain_linear(data, PenaltyMode{}, cfg).fingerprint() != a.fingerprint());

  cfg.kept = 1;
  CHECK(run_chain_linear(data, PenaltyMode{}, cfg).size() == 1);

  cfg.seed = 16;
  cfg.kept = 100;
  cfg.thin = 2;
  const ChainStore thinned = run_chain_linear(data, PenaltyMode{}, cfg);
  CHECK(thinned.size() == 100);
  for (Eigen::Index i = 0; i < 100; ++i) CHECK((thinned.beta(i) - a.beta(2 * i + 1)).norm() == 0.0);
}

TEST_CASE("every stored state satisfies the state invariants") {
  const Dataset data = regression_data(25, Eigen::VectorXd::Unit(6, 0) * 4.0, 0.5, 18);
  for (PenaltyKind kind : {PenaltyKind::hierarchical, PenaltyKind::eb_sa}) {
    PenaltyMode mode;
    mode.kind = kind;
    ChainConfig cfg;
    cfg.burn_in = 2000;
    cfg.kept = 2000;
    cfg.seed = 19;
    const ChainStore chain = run_chain_linear(data, mode, cfg);
    for (Eigen::Index i = 0; i < chain.size(); ++i) {
      REQUIRE(chain.sigma2(i) > 0.0);
      REQUIRE(chain.tau2(i).minCoeff() > 0.0);
      REQUIRE(chain.lambda2(i).minCoeff() > 0.0);
      REQUIRE(chain.beta(i).allFinite());
    }
  }
}

TEST_CASE("permuting columns permutes the posterior summaries") {
  const Dataset data = regression_data(80, Eigen::Vector3d(2.0, 0.0, -1.0), 1.0, 20);
  Eigen::MatrixXd Xp(80, 3);
  Xp << data.X.col(2), data.X.col(0), data.X.col(1);
  const Dataset permuted = centered_dataset(Xp, data.y);
  ChainConfig cfg;
  cfg.burn_in = 5000;
  cfg.kept = 100000;
  cfg.seed = 21;
  const ChainStore a = run_chain_linear(data, PenaltyMode{}, cfg);
  cfg.seed = 22;
  const ChainStore b = run_chain_linear(permuted, PenaltyMode{}, cfg);
  const int map[3] = {1, 2, 0};  // column j of data is column map[j] of permuted
  for (int j = 0; j < 3; ++j) {
    const Eigen::VectorXd x = a.beta_column(j), z = b.beta_column(map[j]);
    const double se = std::hypot(batch_mean_se(x), batch_mean_se(z));
    CHECK(std::abs(x.mean() - z.mean()) < 3.0 * se);
  }
}

TEST_CASE("empirical Bayes regimes record a lambda estimate that separates signal from noise") {
  ScenarioSpec spec = default_spec(Scenario::fig2);
  RngHandle rng(spec.seed, 0);
  const GeneratedData data = generate_dataset(spec, 0, rng);
  for (PenaltyKind kind : {PenaltyKind::eb_em, PenaltyKind::eb_sa}) {
    PenaltyMode mode;
    mode.kind = kind;
    mode.em_outer_steps = 8;
    ChainConfig cfg;
    cfg.burn_in = 5000;
    cfg.kept = 5000;
    cfg.seed = 23;
    const ChainStore chain = run_chain_linear(data.train, mode, cfg);
    REQUIRE(chain.eb_lambda.has_value());
    CHECK((*chain.eb_lambda)[1] > (*chain.eb_lambda)[0]);
  }
}

TEST_CASE("a single sweep on a dataset returns a new valid state") {
  const Dataset data = regression_data(30, Eigen::Vector2d(1.0, 0.0), 1.0, 24);
  const GibbsState start = initial_linear_state(make_linear_model(data), PenaltyMode{});
  RngHandle rng(25);
  const GibbsState next = gibbs_step_linear(start, data, PenaltyMode{}, rng);
  CHECK(next.beta.size() == 2);
  CHECK(next.sigma2 > 0.0);
  CHECK((next.beta - start.beta).norm() > 0.0);
}

TEST_CASE("uncentered data and bad configurations are rejected") {
  RngHandle rng(26);
  const Dataset raw = make_dataset(gaussian_matrix(20, 2, rng).array() + 5.0, gaussian_vector(20, rng));
  CHECK_THROWS_AS(make_linear_model(raw), ParameterDomainError);

  const Dataset data = regression_data(20, Eigen::Vector2d(1.0, 0.0), 1.0, 27);
  ChainConfig cfg;
  cfg.kept = 0;
  CHECK_THROWS_AS(run_chain_linear(data, PenaltyMode{}, cfg), ParameterDomainError);
  cfg.kept = 10;
  PenaltyMode mode;
  mode.r = -1.0;
  CHECK_THROWS_AS(run_chain_linear(data, mode, cfg), ParameterDomainError);
}

}  // TEST_SUITE
