#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "balasso/groups.hpp"

namespace balasso {

// Response vector plus design matrix. After centering, y and every column of X
// have zero mean; the removed means (and scales, if standardized) are kept so
// new observations can be mapped into the same coordinates.
struct Dataset {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  std::string response_name = "y";
  std::vector<std::string> predictor_names;
  std::optional<GroupMap> groups;

  bool centered = false;
  bool standardized = false;
  double y_center = 0.0;
  Eigen::VectorXd x_center;  // empty until centered
  Eigen::VectorXd x_scale;   // empty until scaled

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index p() const { return X.cols(); }
};

Dataset make_dataset(Eigen::MatrixXd X, Eigen::VectorXd y);

enum class Standardization { center, center_and_scale };

// Centering an already-centered dataset returns it unchanged. Scaling divides
// each column by its sample standard deviation (n - 1 denominator); the
// response is centered but never scaled.
Dataset standardize(const Dataset& data, Standardization mode);

// Map raw predictor rows into the coordinates of a standardized dataset.
Eigen::MatrixXd to_model_coordinates(const Dataset& fitted, const Eigen::MatrixXd& X_raw);
// Undo response centering.
Eigen::VectorXd to_response_scale(const Dataset& fitted, const Eigen::VectorXd& prediction);

std::uint64_t dataset_fingerprint(const Dataset& data);

// Max absolute column mean of X and |mean(y)|.
double max_abs_mean(const Dataset& data);

struct CsvSchema {
  std::string response;
  std::vector<std::string> predictors;  // empty: every column except the response
  std::vector<std::size_t> drop_rows;   // 1-based data-row numbers (header excluded)
  bool require_response = true;
};

// Comma-separated numeric table with a header row. Row numbers in errors are
// 1-based data rows (the header is row 0); columns are 1-based.
Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);
Dataset parse_csv(const std::string& text, const CsvSchema& schema);

}  // namespace balasso
