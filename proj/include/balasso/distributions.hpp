#pragma once

#include <Eigen/Dense>

#include "balasso/rng.hpp"

namespace balasso {

struct InverseGaussianParams {
  double mean;   // mu
  double shape;  // lambda
};

// Inverse-Gaussian draw, density sqrt(shape/(2 pi)) x^{-3/2} exp{-shape (x-mean)^2 / (2 mean^2 x)}.
// Michael-Schucany-Haas transform, written in a form that stays accurate as
// mean/shape grows (the mean -> inf limit is the Levy distribution shape/Z^2).
double sample_inverse_gaussian(const InverseGaussianParams& params, RngHandle& rng);

// Gamma with density proportional to x^{shape-1} e^{-rate x}. Rate, not scale.
double sample_gamma(double shape, double rate, RngHandle& rng);

// Inverse-gamma with density proportional to x^{-shape-1} e^{-scale/x}.
double sample_inverse_gamma(double shape, double scale, RngHandle& rng);

// Draw from N(mean, precision^{-1}) through the Cholesky factor of the
// precision; the inverse is never formed.
Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& precision, RngHandle& rng);

// Same, for a caller that already holds the lower Cholesky factor L (L L' = precision).
// `scale` multiplies the noise term, i.e. the covariance becomes scale^2 * precision^{-1}.
Eigen::VectorXd sample_mvn_from_factor(const Eigen::VectorXd& mean, const Eigen::LLT<Eigen::MatrixXd>& factor,
                                       RngHandle& rng, double scale = 1.0);

}  // namespace balasso
