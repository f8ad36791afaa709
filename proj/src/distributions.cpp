#include "balasso/distributions.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "balasso/error.hpp"

namespace balasso {

namespace {

void require_positive(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value))
    throw ParameterDomainError(std::string(what) + " must be positive and finite, got " + std::to_string(value));
}

// Marsaglia-Tsang for shape >= 1, returns a Gamma(shape, 1) draw.
double gamma_unit_large_shape(double shape, RngHandle& rng) {
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

}  // namespace

double condition_estimate(const Eigen::MatrixXd& symmetric) {
  if (symmetric.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetric, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

double sample_inverse_gaussian(const InverseGaussianParams& params, RngHandle& rng) {
  require_positive(params.shape, "inverse-Gaussian shape");
  if (!(params.mean > 0.0) || std::isnan(params.mean))
    throw ParameterDomainError("inverse-Gaussian mean must be positive, got " + std::to_string(params.mean));
  const double nu = rng.normal();
  const double y = nu * nu;
  if (std::isinf(params.mean)) return params.shape / y;
  const double mu = params.mean;
  // w = mu y / shape; smaller root x1 = mu / (1 + w/2 + sqrt(w^2/4 + w)).
  const double w = mu * y / params.shape;
  const double x1 = mu / (1.0 + 0.5 * w + std::sqrt(w * (0.25 * w + 1.0)));
  const double u = rng.uniform();
  double x = (u * (mu + x1) <= mu) ? x1 : mu * (mu / x1);
  if (!(x > 0.0)) x = std::numeric_limits<double>::min();
  if (std::isinf(x)) x = std::numeric_limits<double>::max();
  return x;
}

double sample_gamma(double shape, double rate, RngHandle& rng) {
  require_positive(shape, "gamma shape");
  require_positive(rate, "gamma rate");
  double draw;
  if (shape >= 1.0) {
    draw = gamma_unit_large_shape(shape, rng);
  } else {
    // Gamma(a) = Gamma(a+1) U^{1/a}, evaluated in log space so tiny shapes do not underflow early.
    const double g = gamma_unit_large_shape(shape + 1.0, rng);
    draw = std::exp(std::log(g) + std::log(rng.uniform()) / shape);
    if (!(draw > 0.0)) draw = std::numeric_limits<double>::min();
  }
  return draw / rate;
}

double sample_inverse_gamma(double shape, double scale, RngHandle& rng) {
  require_positive(scale, "inverse-gamma scale");
  return scale / sample_gamma(shape, 1.0, rng);
}

Eigen::VectorXd sample_mvn_from_factor(const Eigen::VectorXd& mean, const Eigen::LLT<Eigen::MatrixXd>& factor,
                                       RngHandle& rng, double scale) {
  Eigen::VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  // L' u = z gives Cov(u) = (L L')^{-1}.
  factor.matrixU().solveInPlace(z);
  return mean + scale * z;
}

Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& precision, RngHandle& rng) {
  if (precision.rows() != precision.cols() || precision.rows() != mean.size())
    throw ParameterDomainError("sample_mvn: precision must be square and match the mean dimension");
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success)
    throw NumericalError("sample_mvn: Cholesky of the precision matrix failed", condition_estimate(precision));
  return sample_mvn_from_factor(mean, llt, rng);
}

}  // namespace balasso
