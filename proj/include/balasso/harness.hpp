#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "balasso/chain.hpp"
#include "balasso/dataset.hpp"
#include "balasso/groups.hpp"
#include "balasso/inference.hpp"
#include "balasso/rng.hpp"

namespace balasso {

enum class Scenario { fig2, ex1, ex2, ex3, ex4_small, ex4_large, ex7, ex8, ex9 };

std::string to_string(Scenario scenario);
Scenario parse_scenario(const std::string& text);

enum class ModelFamily { linear, logistic, group, cap };
ModelFamily family_of(Scenario scenario);

// One simulation study. Defaults follow the scenario; n_test > 0 adds an
// independent prediction set of that size.
struct ScenarioSpec {
  Scenario scenario = Scenario::ex1;
  Eigen::Index n = 120;
  double sigma = 1.0;
  long replications = 100;
  std::uint64_t seed = 1;
  Eigen::Index n_test = 0;
  long burn_in = 10000;
  long kept = 10000;
  PenaltyMode mode;  // regime of the main chain (hierarchical, r = 0.1, EB1 delta by default)
};

// Fills the scenario's default n, sigma and n_test (prediction scenarios use n_test = n).
ScenarioSpec default_spec(Scenario scenario);
void validate(const ScenarioSpec& spec);
KeyValues describe(const ScenarioSpec& spec);

// True coefficients and design correlation for a scenario.
Eigen::VectorXd true_coefficients(Scenario scenario);
Eigen::MatrixXd ar1_correlation(Eigen::Index p, double rho);
// ex2 design correlation; throws NumericalError (with the matrix in the message) unless SPD.
Eigen::MatrixXd example2_correlation();

struct GeneratedData {
  Dataset train;               // centered, except for logistic scenarios (intercept kept in the model)
  Eigen::MatrixXd test_X;      // model coordinates (training means removed)
  Eigen::VectorXd test_y;      // raw responses
  SparsityPattern truth;       // over coefficients, or over groups for grouped scenarios
  Eigen::VectorXd beta;        // data-generating coefficients
  GroupMap groups;             // empty for ungrouped scenarios
  AncestryRelation relation;   // non-empty only for ex9
};

GeneratedData generate_dataset(const ScenarioSpec& spec, long replication, RngHandle& rng);

// Method names accepted by run_experiment:
//   lasso, alasso          cross-validated baselines (Gaussian scenarios)
//   freq, median, mean, eb BaLasso selection strategies
//   bma                    BaLasso model averaging (prediction)
//   blasso                 single-lambda Bayesian lasso, model-averaged
//   balasso                the scenario's headline BaLasso (mean strategy; group/CAP rule for ex8/ex9)
std::vector<std::string> available_methods(Scenario scenario);
std::vector<std::string> parse_methods(const std::string& csv);

struct MethodSummary {
  std::string scenario;
  std::string method;
  long replications = 0;
  long completed = 0;
  long failures = 0;
  long correct = 0;
  double correct_se = 0.0;    // Monte-Carlo s.e. of the count
  double mean_zero = 0.0;     // unselected units (coefficients, or groups)
  double mean_pse = std::numeric_limits<double>::quiet_NaN();
  double pse_se = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> failure_messages;
};

struct ReportTable {
  ScenarioSpec spec;
  std::vector<MethodSummary> rows;
  double seconds = 0.0;

  const MethodSummary* find(const std::string& method) const;
  std::string to_csv() const;
  std::string to_text() const;
};

struct ExperimentOptions {
  int threads = 0;              // 0: hardware concurrency
  std::optional<std::filesystem::path> out;  // report.csv, report.txt, meta.txt, chains/
  long saved_chain_replications = 1;          // chains written for the first k replications
  bool progress = false;        // one line per finished replication on stderr
};

// Per-replication outcome of one method.
struct MethodOutcome {
  bool ok = false;
  std::string error;
  bool selects = true;  // false for prediction-only methods (bma, blasso)
  bool correct = false;
  double zero_count = 0.0;
  std::optional<double> pse;
};

struct ReplicationResult {
  std::vector<MethodOutcome> outcomes;  // same order as the method list
  std::vector<std::pair<std::string, ChainStore>> chains;
};

ReplicationResult run_replication(const ScenarioSpec& spec, const std::vector<std::string>& methods, long replication,
                                  bool keep_chains = false);

ReportTable run_experiment(const ScenarioSpec& spec, const std::vector<std::string>& methods,
                           const ExperimentOptions& options = {});

}  // namespace balasso
