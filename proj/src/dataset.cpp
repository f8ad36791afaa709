#include "balasso/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "balasso/error.hpp"
#include "balasso/keyvalue.hpp"

namespace balasso {

Dataset make_dataset(Eigen::MatrixXd X, Eigen::VectorXd y) {
  if (X.rows() != y.size()) throw ParameterDomainError("design rows and response length disagree");
  Dataset d;
  d.X = std::move(X);
  d.y = std::move(y);
  for (Eigen::Index j = 0; j < d.X.cols(); ++j) d.predictor_names.push_back("x" + std::to_string(j + 1));
  return d;
}

Dataset standardize(const Dataset& data, Standardization mode) {
  if (data.n() < 2) throw ParameterDomainError("standardize needs at least two observations");
  Dataset out = data;
  if (!out.centered) {
    out.y_center = out.y.mean();
    out.y.array() -= out.y_center;
    out.x_center = out.X.colwise().mean().transpose();
    out.X.rowwise() -= out.x_center.transpose();
    out.centered = true;
  }
  if (mode == Standardization::center_and_scale && !out.standardized) {
    out.x_scale.resize(out.p());
    for (Eigen::Index j = 0; j < out.p(); ++j) {
      const double sd = std::sqrt(out.X.col(j).squaredNorm() / static_cast<double>(out.n() - 1));
      if (!(sd > 0.0)) {
        const std::string name = j < static_cast<Eigen::Index>(out.predictor_names.size())
                                     ? out.predictor_names[static_cast<std::size_t>(j)]
                                     : std::to_string(j + 1);
        throw ParameterDomainError("column '" + name + "' has zero variance and cannot be scaled");
      }
      out.x_scale[j] = sd;
      out.X.col(j) /= sd;
    }
    out.standardized = true;
  }
  return out;
}

Eigen::MatrixXd to_model_coordinates(const Dataset& fitted, const Eigen::MatrixXd& X_raw) {
  if (X_raw.cols() != fitted.p()) throw ParameterDomainError("new design has the wrong number of columns");
  Eigen::MatrixXd out = X_raw;
  if (fitted.centered) out.rowwise() -= fitted.x_center.transpose();
  if (fitted.standardized) out = out.array().rowwise() / fitted.x_scale.transpose().array();
  return out;
}

Eigen::VectorXd to_response_scale(const Dataset& fitted, const Eigen::VectorXd& prediction) {
  return prediction.array() + fitted.y_center;
}

std::uint64_t dataset_fingerprint(const Dataset& data) {
  std::uint64_t h = fnv1a(std::span<const double>(data.y.data(), static_cast<std::size_t>(data.y.size())));
  h = fnv1a(std::span<const double>(data.X.data(), static_cast<std::size_t>(data.X.size())), h);
  h = fnv1a(std::to_string(data.n()) + "x" + std::to_string(data.p()) + (data.centered ? "c" : "") +
                (data.standardized ? "s" : ""),
            h);
  return h;
}

double max_abs_mean(const Dataset& data) {
  double worst = data.n() ? std::abs(data.y.mean()) : 0.0;
  if (data.n() && data.p()) worst = std::max(worst, data.X.colwise().mean().cwiseAbs().maxCoeff());
  return worst;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      fields.push_back(current);
      current.clear();
    } else if (c != '\r') {
      current += c;
    }
  }
  fields.push_back(current);
  for (auto& f : fields) {
    const auto first = f.find_first_not_of(" \t");
    const auto last = f.find_last_not_of(" \t");
    f = (first == std::string::npos) ? std::string{} : f.substr(first, last - first + 1);
  }
  return fields;
}

}  // namespace

Dataset parse_csv(const std::string& text, const CsvSchema& schema) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("CSV input is empty", 0, 0);
  const auto header = split_fields(line);

  auto column_of = [&](const std::string& name) -> std::optional<std::size_t> {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };

  std::optional<std::size_t> response_col;
  if (!schema.response.empty()) response_col = column_of(schema.response);
  if (schema.require_response && !response_col)
    throw ParseError("response column '" + schema.response + "' not found in header", 0, 0);

  std::vector<std::size_t> predictor_cols;
  std::vector<std::string> predictor_names;
  if (schema.predictors.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (response_col && c == *response_col) continue;
      if (!schema.response.empty() && header[c] == schema.response) continue;
      predictor_cols.push_back(c);
      predictor_names.push_back(header[c]);
    }
  } else {
    for (const auto& name : schema.predictors) {
      const auto col = column_of(name);
      if (!col) throw ParseError("predictor column '" + name + "' not found in header", 0, 0);
      predictor_cols.push_back(*col);
      predictor_names.push_back(name);
    }
  }

  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> missing_rows;
  std::size_t data_row = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++data_row;
    const auto fields = split_fields(line);
    if (fields.size() != header.size())
      throw ParseError("row " + std::to_string(data_row) + " (line " + std::to_string(data_row + 1) + ") has " +
                           std::to_string(fields.size()) + " fields, header has " + std::to_string(header.size()),
                       data_row, 0);
    if (std::find(schema.drop_rows.begin(), schema.drop_rows.end(), data_row) != schema.drop_rows.end()) continue;
    std::vector<double> values(fields.size(), 0.0);
    bool missing = false;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const bool used = (response_col && c == *response_col) ||
                        std::find(predictor_cols.begin(), predictor_cols.end(), c) != predictor_cols.end();
      if (!used) continue;
      const std::string& f = fields[c];
      if (f.empty() || f == "NA" || f == "NaN" || f == "nan") {
        missing = true;
        continue;
      }
      try {
        values[c] = parse_double(f);
      } catch (const std::invalid_argument&) {
        throw ParseError("non-numeric value '" + f + "' at row " + std::to_string(data_row) + ", column " +
                             std::to_string(c + 1) + " (" + header[c] + ")",
                         data_row, c + 1);
      }
    }
    if (missing) {
      missing_rows.push_back(data_row);
      continue;
    }
    rows.push_back(std::move(values));
  }
  if (!missing_rows.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing_rows.size(); ++i) list += (i ? ", " : "") + std::to_string(missing_rows[i]);
    throw ParseError("rows with missing cells: " + list, missing_rows.front(), 0);
  }

  Dataset d;
  d.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(predictor_cols.size()));
  d.y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t k = 0; k < predictor_cols.size(); ++k)
      d.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = rows[r][predictor_cols[k]];
    if (response_col) d.y[static_cast<Eigen::Index>(r)] = rows[r][*response_col];
  }
  if (!response_col) d.y.resize(0);
  d.response_name = schema.response.empty() ? "y" : schema.response;
  d.predictor_names = std::move(predictor_names);
  return d;
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), schema);
}

}  // namespace balasso
