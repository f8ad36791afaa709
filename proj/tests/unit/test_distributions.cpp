#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "balasso/distributions.hpp"
#include "balasso/error.hpp"
#include "balasso/rng.hpp"
#include "helpers.hpp"

using namespace balasso;
using namespace balasso::testing;

namespace {

constexpr long kDraws = 1000000;

double inverse_gaussian_density(double x, double mu, double shape) {
  if (x <= 0.0) return 0.0;
  return std::sqrt(shape / (2.0 * std::numbers::pi * x * x * x)) *
         std::exp(-shape * (x - mu) * (x - mu) / (2.0 * mu * mu * x));
}

}  // namespace

TEST_SUITE("distributions") {

TEST_CASE("Philox4x32-10 reproduces the published known-answer vectors") {
  using B = RngHandle::Block;
  CHECK(RngHandle::philox(B{0, 0, 0, 0}, {0, 0}) == B{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(RngHandle::philox(B{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        B{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(RngHandle::philox(B{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        B{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("identical seed and stream give identical sequences; other streams differ") {
  RngHandle a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  bool differs_stream = false, differs_seed = false;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    differs_stream |= x != c.next_u64();
    differs_seed |= x != d.next_u64();
  }
  CHECK(differs_stream);
  CHECK(differs_seed);

  RngHandle e(5, 1), f(5, 1);
  for (int i = 0; i < 100; ++i) {
    CHECK(sample_gamma(0.7, 1.3, e) == sample_gamma(0.7, 1.3, f));
    CHECK(sample_inverse_gaussian({0.5, 2.0}, e) == sample_inverse_gaussian({0.5, 2.0}, f));
  }
}

TEST_CASE("uniform draws stay inside the open unit interval with uniform moments") {
  RngHandle rng(11);
  const auto xs = draws(kDraws, [&] { return rng.uniform(); });
  CHECK(*std::min_element(xs.begin(), xs.end()) > 0.0);
  CHECK(*std::max_element(xs.begin(), xs.end()) < 1.0);
  const Moments m = moments(xs);
  CHECK(std::abs(m.mean - 0.5) < 5.0 * m.mean_se);
  CHECK(m.variance == doctest::Approx(1.0 / 12.0).epsilon(0.01));
}

TEST_CASE("standard normal moments") {
  RngHandle rng(12);
  const Moments m = moments(draws(kDraws, [&] { return rng.normal(); }));
  CHECK(std::abs(m.mean) < 5.0 * m.mean_se);
  CHECK(std::abs(m.variance - 1.0) < 5.0 * std::sqrt(2.0 / kDraws));
}

TEST_CASE("inverse Gaussian: mean and variance at (2, 4)") {
  RngHandle rng(1);
  const Moments m = moments(draws(kDraws, [&] { return sample_inverse_gaussian({2.0, 4.0}, rng); }));
  CHECK(std::abs(m.mean - 2.0) < 0.01);
  CHECK(std::abs(m.mean - 2.0) < 5.0 * m.mean_se);
  CHECK(std::abs(m.variance - 2.0) < 0.05);
}

TEST_CASE("inverse Gaussian CDF matches quadrature of the density") {
  RngHandle rng(2);
  std::vector<double> xs = draws(kDraws, [&] { return sample_inverse_gaussian({1.0, 1.0}, rng); });
  std::sort(xs.begin(), xs.end());
  double worst = 0.0;
  for (double x : {0.1, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0}) {
    const double oracle = simpson([](double t) { return inverse_gaussian_density(t, 1.0, 1.0); }, 0.0, x);
    const double empirical =
        static_cast<double>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin()) / static_cast<double>(xs.size());
    worst = std::max(worst, std::abs(empirical - oracle));
  }
  CHECK(worst < 0.005);
}

TEST_CASE("inverse Gaussian stays finite and positive for extreme mean/shape ratios") {
  RngHandle rng(3);
  for (double mu : {1e-8, 1e-3, 1.0, 1e3, 1e8, 1e12}) {
    for (double shape : {1e-6, 1.0, 1e6}) {
      for (int i = 0; i < 200; ++i) {
        const double x = sample_inverse_gaussian({mu, shape}, rng);
        REQUIRE(std::isfinite(x));
        REQUIRE(x > 0.0);
      }
    }
  }
  // Large mean/shape: the draw approaches the Levy limit shape / Z^2, median shape / 0.4549.
  std::vector<double> xs = draws(200000, [&] { return sample_inverse_gaussian({1e12, 2.0}, rng); });
  std::nth_element(xs.begin(), xs.begin() + 100000, xs.end());
  CHECK(xs[100000] == doctest::Approx(2.0 / 0.454936423119572).epsilon(0.02));
}

TEST_CASE("gamma moments and tail, rate parameterization") {
  RngHandle rng(4);
  const Moments a = moments(draws(kDraws, [&] { return sample_gamma(3.0, 2.0, rng); }));
  CHECK(std::abs(a.mean - 1.5) < 0.01);
  CHECK(std::abs(a.mean - 1.5) < 5.0 * a.mean_se);
  CHECK(a.variance == doctest::Approx(0.75).epsilon(0.01));

  const auto e = draws(kDraws, [&] { return sample_gamma(1.0, 1.0, rng); });
  const double tail = static_cast<double>(std::count_if(e.begin(), e.end(), [](double x) { return x > 1.0; })) / kDraws;
  CHECK(std::abs(tail - std::exp(-1.0)) < 0.005);

  const Moments c = moments(draws(kDraws, [&] { return sample_gamma(0.1, 0.1, rng); }));
  CHECK(std::abs(c.mean - 1.0) < 5.0 * c.mean_se);
  CHECK(std::abs(c.variance - 10.0) < 0.5);
}

TEST_CASE("inverse gamma mean equals scale / (shape - 1)") {
  RngHandle rng(5);
  const Moments m = moments(draws(kDraws, [&] { return sample_inverse_gamma(5.0, 8.0, rng); }));
  CHECK(std::abs(m.mean - 2.0) < 5.0 * m.mean_se);
  CHECK(m.variance == doctest::Approx(64.0 / (16.0 * 3.0)).epsilon(0.03));
}

TEST_CASE("samplers reject parameters outside their domain") {
  RngHandle rng(6);
  CHECK_THROWS_AS(sample_gamma(0.0, 1.0, rng), ParameterDomainError);
  CHECK_THROWS_AS(sample_gamma(1.0, -1.0, rng), ParameterDomainError);
  CHECK_THROWS_AS(sample_inverse_gamma(-1.0, 1.0, rng), ParameterDomainError);
  CHECK_THROWS_AS(sample_inverse_gaussian({0.0, 1.0}, rng), ParameterDomainError);
  CHECK_THROWS_AS(sample_inverse_gaussian({1.0, 0.0}, rng), ParameterDomainError);
  CHECK_THROWS_AS(sample_inverse_gaussian({std::nan(""), 1.0}, rng), ParameterDomainError);
}

TEST_CASE("multivariate normal: identity, diagonal and correlated precisions") {
  RngHandle rng(7);
  constexpr long n = kDraws;

  auto covariance_of = [&](const Eigen::VectorXd& mean, const Eigen::MatrixXd& precision, Eigen::VectorXd& avg) {
    const Eigen::Index p = mean.size();
    avg = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(p, p);
    for (long i = 0; i < n; ++i) {
      const Eigen::VectorXd x = sample_mvn(mean, precision, rng);
      avg += x;
      second.noalias() += x * x.transpose();
    }
    avg /= static_cast<double>(n);
    return Eigen::MatrixXd(second / static_cast<double>(n) - avg * avg.transpose());
  };

  Eigen::VectorXd avg;
  const Eigen::MatrixXd c1 = covariance_of(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3), avg);
  for (int j = 0; j < 3; ++j) CHECK(std::abs(c1(j, j) - 1.0) < 0.01);

  const Eigen::MatrixXd c2 = covariance_of(Eigen::VectorXd::Ones(2), 4.0 * Eigen::MatrixXd::Identity(2, 2), avg);
  CHECK((avg.array() - 1.0).abs().maxCoeff() < 0.01);
  CHECK(std::abs(c2(0, 0) - 0.25) < 0.01);
  CHECK(std::abs(c2(1, 1) - 0.25) < 0.01);

  Eigen::Matrix2d precision;
  precision << 2, 1, 1, 2;
  Eigen::Matrix2d oracle;  // direct 2x2 inverse
  oracle << 2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0, 2.0 / 3.0;
  const Eigen::MatrixXd c3 = covariance_of(Eigen::VectorXd::Zero(2), precision, avg);
  CHECK((c3 - oracle).cwiseAbs().maxCoeff() < 0.01);

  Eigen::Matrix3d spd;
  spd << 3.0, 0.8, -0.4, 0.8, 2.0, 0.3, -0.4, 0.3, 1.5;
  const Eigen::MatrixXd c4 = covariance_of(Eigen::VectorXd::Zero(3), spd, avg);
  CHECK((c4 - Eigen::MatrixXd(spd.inverse())).norm() < 0.02);
}

TEST_CASE("multivariate normal with an indefinite precision reports conditioning") {
  RngHandle rng(8);
  Eigen::Matrix2d bad;
  bad << 1, 2, 2, 1;
  try {
    (void)sample_mvn(Eigen::VectorXd::Zero(2), bad, rng);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::isinf(e.condition()));
  }
}

}  // TEST_SUITE
