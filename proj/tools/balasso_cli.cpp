#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "balasso/balasso.hpp"

namespace fs = std::filesystem;
using namespace balasso;

namespace {

struct ChainOptions {
  std::string mode = "hierarchical";
  double r = 0.1;
  std::optional<double> delta;
  long burn_in = 10000;
  long draws = 10000;
  long thin = 1;
  std::uint64_t seed = 1;
};

void add_chain_options(CLI::App& cmd, ChainOptions& o) {
  cmd.add_option("--mode", o.mode, "lambda regime: hierarchical | eb-em | eb-sa | fixed")->capture_default_str();
  cmd.add_option("--r", o.r, "gamma prior shape r")->capture_default_str();
  cmd.add_option("--delta", o.delta, "gamma prior rate delta (default: estimated during burn-in)");
  cmd.add_option("--burnin", o.burn_in, "burn-in sweeps")->capture_default_str();
  cmd.add_option("--draws", o.draws, "kept draws")->capture_default_str();
  cmd.add_option("--thin", o.thin, "thinning interval")->capture_default_str();
  cmd.add_option("--seed", o.seed, "random seed")->capture_default_str();
}

PenaltyMode penalty_mode(const ChainOptions& o) {
  PenaltyMode m;
  m.kind = parse_penalty_kind(o.mode);
  m.r = o.r;
  m.delta = o.delta;
  if (m.kind == PenaltyKind::fixed) throw ParameterDomainError("--mode fixed needs lambda values; use the library API");
  return m;
}

ChainConfig chain_config(const ChainOptions& o) {
  ChainConfig c;
  c.burn_in = o.burn_in;
  c.kept = o.draws;
  c.thin = o.thin;
  c.seed = o.seed;
  return c;
}

struct DataOptions {
  std::string response = "y";
  std::vector<std::string> predictors;
  std::vector<std::size_t> drop_rows;
  bool scale = false;
};

void add_data_options(CLI::App& cmd, DataOptions& o) {
  cmd.add_option("--response", o.response, "response column name")->capture_default_str();
  cmd.add_option("--predictors", o.predictors, "predictor columns (default: all others)")->delimiter(',');
  cmd.add_option("--drop-rows", o.drop_rows, "1-based data rows to drop")->delimiter(',');
  cmd.add_flag("--scale", o.scale, "scale predictors to unit variance after centering");
}

Dataset load_training(const std::string& path, const DataOptions& o) {
  CsvSchema schema;
  schema.response = o.response;
  schema.predictors = o.predictors;
  schema.drop_rows = o.drop_rows;
  return standardize(load_csv(path, schema), o.scale ? Standardization::center_and_scale : Standardization::center);
}

void print_selection(const SelectionResult& r, const Dataset& data) {
  std::printf("%-14s", (r.strategy + ":").c_str());
  for (Eigen::Index j = 0; j < r.beta.size(); ++j)
    if (r.beta[j] != 0.0) std::printf(" %s", data.predictor_names[static_cast<std::size_t>(j)].c_str());
  std::printf("\n");
}

int cmd_run(const std::string& scenario, Eigen::Index n, std::optional<double> sigma, long reps,
            const std::vector<std::string>& methods, std::optional<Eigen::Index> n_test, const ChainOptions& chain,
            const std::string& out, int threads, long saved_chains, bool progress) {
  ScenarioSpec spec = default_spec(parse_scenario(scenario));
  if (n > 0) spec.n = n;
  if (sigma) spec.sigma = *sigma;
  if (n_test) spec.n_test = *n_test;
  spec.replications = reps;
  spec.seed = chain.seed;
  spec.burn_in = chain.burn_in;
  spec.kept = chain.draws;
  spec.mode = penalty_mode(chain);
  ExperimentOptions options;
  options.threads = threads;
  options.progress = progress;
  options.saved_chain_replications = saved_chains;
  if (!out.empty()) options.out = fs::path(out);
  std::string joined;
  for (const auto& m : methods) joined += m + ",";
  const auto method_list = methods.empty() ? available_methods(spec.scenario) : parse_methods(joined);
  const ReportTable table = run_experiment(spec, method_list, options);
  std::cout << table.to_text();
  for (const auto& row : table.rows)
    for (const auto& msg : row.failure_messages) std::cerr << row.method << ": " << msg << '\n';
  return 0;
}

int cmd_fit(const std::string& data_path, const DataOptions& data_opts, const ChainOptions& chain,
            const std::string& out, std::size_t top_models) {
  const Dataset data = load_training(data_path, data_opts);
  const ChainStore store = run_chain_linear(data, penalty_mode(chain), chain_config(chain));
  const LinearModeSolver solver(data);
  const ModePath path = conditional_modes(store, solver);
  std::vector<SelectionResult> results{select_freq(store, solver, path), select_point(store, solver, PointStatistic::median),
                                       select_point(store, solver, PointStatistic::mean)};
  if (store.eb_lambda) results.push_back(select_point(store, solver, PointStatistic::eb_point));
  const auto pmp = estimate_pmp(path);

  std::printf("n=%ld p=%ld draws=%ld\n", static_cast<long>(data.n()), static_cast<long>(data.p()),
              static_cast<long>(store.size()));
  const Eigen::VectorXd lambda = summarize_lambda(store, PointStatistic::mean);
  for (Eigen::Index j = 0; j < data.p(); ++j)
    std::printf("  %-16s posterior mean beta %10.4f  mean lambda %10.4f\n",
                data.predictor_names[static_cast<std::size_t>(j)].c_str(), store.beta_column(j).mean(), lambda[j]);
  for (const auto& r : results) print_selection(r, data);
  std::printf("top models (PMP):\n");
  for (std::size_t i = 0; i < std::min(top_models, pmp.size()); ++i)
    std::printf("  %s  %.4f\n", pmp[i].pattern.to_string().c_str(), pmp[i].probability);

  if (!out.empty()) {
    const fs::path dir(out);
    const RunManifest manifest = save_chain(store, dir / "chain");
    write_chain_csv(store, dir / "chains" / "main.csv");
    std::string report;
    for (const auto& r : results) {
      std::string csv = selection_csv(r, data.predictor_names);
      const auto eol = csv.find('\n');
      std::string body = csv.substr(eol + 1);
      std::string prefixed;
      std::size_t pos = 0;
      while (pos < body.size()) {
        const auto next = body.find('\n', pos);
        prefixed += r.strategy + "," + body.substr(pos, next - pos) + "\n";
        pos = next + 1;
      }
      if (report.empty()) report = "strategy," + csv.substr(0, eol) + "\n";
      report += prefixed;
    }
    write_text_file(dir / "report.csv", report);
    write_text_file(dir / "pmp.csv", pmp_csv(pmp));
    KeyValues meta{{"command", "fit"},
                   {"data", data_path},
                   {"data_fingerprint", to_hex(dataset_fingerprint(data))},
                   {"config_hash", to_hex(manifest.config_hash)},
                   {"software_version", software_version()},
                   {"created", manifest.created}};
    for (const auto& kv : store.provenance.config) meta.push_back(kv);
    write_text_file(dir / "meta.txt", format_key_values(meta));
  }
  return 0;
}

int cmd_predict(const std::string& train_path, const std::string& test_path, const DataOptions& data_opts,
                const std::string& strategy, const ChainOptions& chain, const std::string& out) {
  const Dataset train = load_training(train_path, data_opts);
  CsvSchema schema;
  schema.response = data_opts.response;
  schema.predictors = train.predictor_names;
  schema.require_response = false;
  const Dataset test = load_csv(test_path, schema);
  const Eigen::MatrixXd X_new = to_model_coordinates(train, test.X);

  PenaltyMode mode = penalty_mode(chain);
  if (strategy == "eb" && mode.kind == PenaltyKind::hierarchical) mode.kind = PenaltyKind::eb_sa;
  const ChainStore store = run_chain_linear(train, mode, chain_config(chain));
  const LinearModeSolver solver(train);
  Eigen::VectorXd fitted;
  if (strategy == "bma") {
    fitted = predict_bma(store, solver, X_new);
  } else if (strategy == "mean" || strategy == "median" || strategy == "eb") {
    const PointStatistic stat = strategy == "mean"     ? PointStatistic::mean
                                : strategy == "median" ? PointStatistic::median
                                                       : PointStatistic::eb_point;
    fitted = X_new * select_point(store, solver, stat).beta;
  } else if (strategy == "freq") {
    fitted = X_new * select_freq(store, solver).beta;
  } else {
    throw ParameterDomainError("unknown strategy '" + strategy + "' (bma | mean | median | freq | eb)");
  }
  const Eigen::VectorXd predictions = to_response_scale(train, fitted);

  std::string csv = "row,prediction" + std::string(test.y.size() ? ",actual" : "") + "\n";
  for (Eigen::Index i = 0; i < predictions.size(); ++i) {
    csv += std::to_string(i + 1) + "," + format_double(predictions[i]);
    if (test.y.size()) csv += "," + format_double(test.y[i]);
    csv += "\n";
  }
  if (test.y.size()) std::printf("PSE (%s) = %.6f over %ld rows\n", strategy.c_str(), compute_pse(predictions, test.y),
                                 static_cast<long>(test.y.size()));
  if (out.empty()) {
    std::cout << csv;
  } else {
    const fs::path dir(out);
    write_text_file(dir / "predictions.csv", csv);
    write_chain_csv(store, dir / "chains" / "main.csv");
    KeyValues meta{{"command", "predict"},      {"train", train_path},
                   {"test", test_path},         {"strategy", strategy},
                   {"software_version", software_version()}, {"created", utc_timestamp()}};
    for (const auto& kv : store.provenance.config) meta.push_back(kv);
    meta.emplace_back("config_hash", to_hex(store.provenance.config_hash()));
    if (test.y.size()) meta.emplace_back("pse", format_double(compute_pse(predictions, test.y)));
    write_text_file(dir / "meta.txt", format_key_values(meta));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian adaptive lasso: samplers, selection, model averaging and simulation studies"};
  app.set_config("--config", "", "key = value file; [run], [fit], [predict] sections hold subcommand settings");
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "replicate a simulation scenario and write a report");
  std::string scenario = "ex1", run_out;
  std::vector<std::string> methods;
  Eigen::Index run_n = 0;
  std::optional<double> sigma;
  std::optional<Eigen::Index> n_test;
  long reps = 100, saved_chains = 1;
  int threads = 0;
  bool progress = false;
  ChainOptions run_chain;
  run->add_option("--scenario", scenario, "fig2 | ex1 | ex2 | ex3 | ex4-small | ex4-large | ex7 | ex8 | ex9")
      ->capture_default_str();
  run->add_option("--n", run_n, "training sample size (default: scenario's)");
  run->add_option("--sigma", sigma, "noise standard deviation (default: scenario's)");
  run->add_option("--n-test", n_test, "prediction-set size");
  run->add_option("--reps", reps, "replications")->capture_default_str();
  run->add_option("--methods", methods,
                 "comma-separated: lasso,alasso,freq,median,mean,eb,bma,blasso,balasso (default: all the scenario supports)")
      ->delimiter(',');
  run->add_option("--out", run_out, "output directory (report.csv, report.txt, meta.txt, chains/)");
  run->add_option("--threads", threads, "worker threads (0: all cores)")->capture_default_str();
  run->add_option("--save-chains", saved_chains, "write chains for the first k replications")->capture_default_str();
  run->add_flag("--progress", progress, "report each finished replication on stderr");
  add_chain_options(*run, run_chain);

  // fit
  auto* fit = app.add_subcommand("fit", "sample the posterior for a CSV dataset and report selections");
  std::string fit_data, fit_out;
  std::size_t top_models = 5;
  DataOptions fit_data_opts;
  ChainOptions fit_chain;
  fit->add_option("--data", fit_data, "training CSV with a header row")->required();
  fit->add_option("--out", fit_out, "output directory");
  fit->add_option("--top", top_models, "number of models listed by posterior model probability")->capture_default_str();
  add_data_options(*fit, fit_data_opts);
  add_chain_options(*fit, fit_chain);

  // predict
  auto* predict = app.add_subcommand("predict", "fit on one CSV and predict the rows of another");
  std::string train_path, test_path, strategy = "bma", predict_out;
  DataOptions predict_data_opts;
  ChainOptions predict_chain;
  predict->add_option("--train", train_path, "training CSV")->required();
  predict->add_option("--test", test_path, "CSV of rows to predict (response column optional)")->required();
  predict->add_option("--strategy", strategy, "bma | mean | median | freq | eb")->capture_default_str();
  predict->add_option("--out", predict_out, "output directory (predictions.csv, meta.txt, chains/)");
  add_data_options(*predict, predict_data_opts);
  add_chain_options(*predict, predict_chain);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run)
      return cmd_run(scenario, run_n, sigma, reps, methods, n_test, run_chain, run_out, threads, saved_chains,
                     progress);
    if (*fit) return cmd_fit(fit_data, fit_data_opts, fit_chain, fit_out, top_models);
    if (*predict) return cmd_predict(train_path, test_path, predict_data_opts, strategy, predict_chain, predict_out);
  } catch (const std::exception& e) {
    std::cerr << "balasso: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
