#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "balasso/rng.hpp"

namespace balasso::testing {

inline Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, RngHandle& rng) {
  Eigen::MatrixXd M(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) M(i, j) = rng.normal();
  return M;
}

inline Eigen::VectorXd gaussian_vector(Eigen::Index size, RngHandle& rng) {
  return gaussian_matrix(size, 1, rng).col(0);
}

inline Eigen::MatrixXd center_columns(const Eigen::MatrixXd& M) { return M.rowwise() - M.colwise().mean(); }

inline Eigen::VectorXd center(const Eigen::VectorXd& v) { return v.array() - v.mean(); }

// Centered columns rescaled to unit Euclidean norm.
inline Eigen::MatrixXd unit_norm_columns(const Eigen::MatrixXd& M) {
  Eigen::MatrixXd C = center_columns(M);
  for (Eigen::Index j = 0; j < C.cols(); ++j) C.col(j) /= C.col(j).norm();
  return C;
}

inline Eigen::MatrixXd random_spd(Eigen::Index p, RngHandle& rng) {
  const Eigen::MatrixXd A = gaussian_matrix(p, p, rng);
  return A * A.transpose() + static_cast<double>(p) * Eigen::MatrixXd::Identity(p, p);
}

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
  double mean_se = 0.0;  // standard error of the mean
};

inline Moments moments(const std::vector<double>& xs) {
  Moments m;
  const double n = static_cast<double>(xs.size());
  for (double x : xs) m.mean += x;
  m.mean /= n;
  for (double x : xs) m.variance += (x - m.mean) * (x - m.mean);
  m.variance /= n - 1.0;
  m.mean_se = std::sqrt(m.variance / n);
  return m;
}

inline std::vector<double> draws(long count, const std::function<double()>& draw) {
  std::vector<double> xs(static_cast<std::size_t>(count));
  for (auto& x : xs) x = draw();
  return xs;
}

// Composite Simpson rule on [a, b] with an even number of panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int panels = 20000) {
  const double h = (b - a) / panels;
  double sum = f(a) + f(b);
  for (int i = 1; i < panels; ++i) sum += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return sum * h / 3.0;
}

// Standard error of a mean computed from batch means, for autocorrelated chains.
inline double batch_mean_se(const Eigen::VectorXd& series, Eigen::Index batches = 50) {
  const Eigen::Index size = series.size() / batches;
  Eigen::VectorXd means(batches);
  for (Eigen::Index b = 0; b < batches; ++b) means[b] = series.segment(b * size, size).mean();
  const double centre = means.mean();
  const double var = (means.array() - centre).square().sum() / static_cast<double>(batches - 1);
  return std::sqrt(var / static_cast<double>(batches));
}

}  // namespace balasso::testing
