#include "balasso/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "balasso/baselines.hpp"
#include "balasso/error.hpp"
#include "balasso/gibbs_general.hpp"
#include "balasso/gibbs_linear.hpp"
#include "balasso/persistence.hpp"

namespace balasso {

namespace {

struct ScenarioName {
  Scenario scenario;
  const char* name;
};

constexpr ScenarioName kScenarioNames[] = {
    {Scenario::fig2, "fig2"},           {Scenario::ex1, "ex1"},
    {Scenario::ex2, "ex2"},             {Scenario::ex3, "ex3"},
    {Scenario::ex4_small, "ex4-small"}, {Scenario::ex4_large, "ex4-large"},
    {Scenario::ex7, "ex7"},             {Scenario::ex8, "ex8"},
    {Scenario::ex9, "ex9"},
};

// Standard-normal tertile boundary, Phi^{-1}(2/3).
constexpr double kTertile = 0.43072729929545756;

// Streams per replication: data, cross-validation folds, three chains.
constexpr std::uint64_t kStreamsPerReplication = 8;
enum StreamSlot : std::uint64_t { kData = 0, kFolds = 1, kMainChain = 2, kEbChain = 3, kSingleLambdaChain = 4 };

std::uint64_t stream_for(long replication, StreamSlot slot) {
  return static_cast<std::uint64_t>(replication) * kStreamsPerReplication + slot;
}

Eigen::MatrixXd correlated_normals(Eigen::Index n, const Eigen::MatrixXd& correlation, RngHandle& rng) {
  const Eigen::LLT<Eigen::MatrixXd> llt(correlation);
  Eigen::MatrixXd Z(n, correlation.rows());
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < Z.cols(); ++j) Z(i, j) = rng.normal();
  return Z * llt.matrixL().transpose();
}

Eigen::MatrixXd scenario_correlation(Scenario s) {
  switch (s) {
    case Scenario::fig2: return Eigen::MatrixXd::Identity(2, 2);
    case Scenario::ex2: return example2_correlation();
    case Scenario::ex3:
    case Scenario::ex4_large: return ar1_correlation(100, 0.5);
    case Scenario::ex8: return ar1_correlation(15, 0.5);
    case Scenario::ex9: return ar1_correlation(4, 0.5);
    default: return ar1_correlation(8, 0.5);
  }
}

// Two indicator columns per 3-level factor (levels 2 and 3; level 1 is the baseline).
Eigen::MatrixXd factor_dummies(const Eigen::MatrixXd& latent) {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(latent.rows(), 2 * latent.cols());
  for (Eigen::Index i = 0; i < latent.rows(); ++i)
    for (Eigen::Index f = 0; f < latent.cols(); ++f) {
      const double z = latent(i, f);
      if (z > kTertile)
        D(i, 2 * f + 1) = 1.0;
      else if (z >= -kTertile)
        D(i, 2 * f) = 1.0;
    }
  return D;
}

// Main-effect dummies followed by the four products for every factor pair (a < b).
Eigen::MatrixXd interaction_design(const Eigen::MatrixXd& dummies, Eigen::Index factors) {
  const Eigen::Index pairs = factors * (factors - 1) / 2;
  Eigen::MatrixXd X(dummies.rows(), 2 * factors + 4 * pairs);
  X.leftCols(2 * factors) = dummies;
  Eigen::Index col = 2 * factors;
  for (Eigen::Index a = 0; a < factors; ++a)
    for (Eigen::Index b = a + 1; b < factors; ++b)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) X.col(col++) = dummies.col(2 * a + k).cwiseProduct(dummies.col(2 * b + l));
  return X;
}

void interaction_structure(Eigen::Index factors, GroupMap& groups, AncestryRelation& relation) {
  groups.clear();
  relation.clear();
  for (Eigen::Index f = 0; f < factors; ++f) groups.push_back({2 * f, 2 * f + 1});
  Eigen::Index col = 2 * factors;
  for (Eigen::Index a = 0; a < factors; ++a)
    for (Eigen::Index b = a + 1; b < factors; ++b) {
      const auto g = static_cast<Eigen::Index>(groups.size());
      groups.push_back({col, col + 1, col + 2, col + 3});
      col += 4;
      relation.emplace_back(a, g);
      relation.emplace_back(b, g);
    }
}

Eigen::MatrixXd raw_design(Scenario s, Eigen::Index n, RngHandle& rng) {
  const Eigen::MatrixXd latent = correlated_normals(n, scenario_correlation(s), rng);
  if (s == Scenario::ex8) return factor_dummies(latent);
  if (s == Scenario::ex9) return interaction_design(factor_dummies(latent), 4);
  return latent;
}

Eigen::VectorXd draw_response(Scenario s, const Eigen::MatrixXd& X, const Eigen::VectorXd& beta, double sigma,
                              RngHandle& rng) {
  Eigen::VectorXd eta = X * beta;
  Eigen::VectorXd y(X.rows());
  if (s == Scenario::ex7) {
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double prob = 1.0 / (1.0 + std::exp(-(5.0 + eta[i])));
      y[i] = rng.uniform() < prob ? 1.0 : 0.0;
    }
    return y;
  }
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = eta[i] + sigma * rng.normal();
  return y;
}

SparsityPattern truth_pattern(const Eigen::VectorXd& beta, const GroupMap& groups) {
  if (groups.empty()) {
    SparsityPattern p(beta.size());
    for (Eigen::Index j = 0; j < beta.size(); ++j)
      if (beta[j] != 0.0) p.set(j);
    return p;
  }
  SparsityPattern p(static_cast<Eigen::Index>(groups.size()));
  for (std::size_t g = 0; g < groups.size(); ++g)
    for (Eigen::Index j : groups[g])
      if (beta[j] != 0.0) p.set(static_cast<Eigen::Index>(g));
  return p;
}

}  // namespace

std::string to_string(Scenario scenario) {
  for (const auto& e : kScenarioNames)
    if (e.scenario == scenario) return e.name;
  return "unknown";
}

Scenario parse_scenario(const std::string& text) {
  for (const auto& e : kScenarioNames)
    if (text == e.name) return e.scenario;
  if (text == "ex4_small") return Scenario::ex4_small;
  if (text == "ex4_large") return Scenario::ex4_large;
  throw ParameterDomainError("unknown scenario '" + text +
                             "' (fig2, ex1, ex2, ex3, ex4-small, ex4-large, ex7, ex8, ex9)");
}

ModelFamily family_of(Scenario scenario) {
  switch (scenario) {
    case Scenario::ex7: return ModelFamily::logistic;
    case Scenario::ex8: return ModelFamily::group;
    case Scenario::ex9: return ModelFamily::cap;
    default: return ModelFamily::linear;
  }
}

ScenarioSpec default_spec(Scenario scenario) {
  ScenarioSpec s;
  s.scenario = scenario;
  switch (scenario) {
    case Scenario::fig2: s.n = 50; break;
    case Scenario::ex1: s.n = 120; break;
    case Scenario::ex2: s.n = 300; break;
    case Scenario::ex3: s.n = 100; break;
    case Scenario::ex4_small: s.n = 200; s.n_test = 200; break;
    case Scenario::ex4_large: s.n = 200; s.n_test = 200; s.sigma = 3.0; break;
    case Scenario::ex7:
    case Scenario::ex8: s.n = 500; break;
    case Scenario::ex9: s.n = 200; break;
  }
  return s;
}

void validate(const ScenarioSpec& spec) {
  const Eigen::Index p = true_coefficients(spec.scenario).size();
  if (spec.n < 3) throw ParameterDomainError("scenario: n must be at least 3");
  if (family_of(spec.scenario) != ModelFamily::linear && spec.n <= p + 1)
    throw ParameterDomainError("scenario " + to_string(spec.scenario) + ": n must exceed p + 1 = " +
                               std::to_string(p + 1) + " for the maximum-likelihood surrogate");
  if (!(spec.sigma > 0.0) || !std::isfinite(spec.sigma)) throw ParameterDomainError("scenario: sigma must be positive");
  if (spec.replications < 1) throw ParameterDomainError("scenario: replications must be >= 1");
  if (spec.n_test < 0) throw ParameterDomainError("scenario: n_test must be non-negative");
  if (spec.burn_in < 0 || spec.kept < 1) throw ParameterDomainError("scenario: bad chain lengths");
  validate(spec.mode);
}

KeyValues describe(const ScenarioSpec& spec) {
  KeyValues kv{{"scenario", to_string(spec.scenario)},
                {"n", std::to_string(spec.n)},
                {"sigma", format_double(spec.sigma)},
                {"replications", std::to_string(spec.replications)},
                {"seed", std::to_string(spec.seed)},
                {"n_test", std::to_string(spec.n_test)},
                {"burn_in", std::to_string(spec.burn_in)},
                {"kept", std::to_string(spec.kept)}};
  for (auto& e : describe(spec.mode)) kv.push_back(e);
  return kv;
}

Eigen::VectorXd true_coefficients(Scenario scenario) {
  Eigen::VectorXd b;
  switch (scenario) {
    case Scenario::fig2: b = Eigen::Vector2d(3.0, 0.0); break;
    case Scenario::ex1:
    case Scenario::ex7:
      b.resize(8);
      b << 3, 1.5, 0, 0, 2, 0, 0, 0;
      break;
    case Scenario::ex2: b = Eigen::Vector4d(5.6, 5.6, 5.6, 0.0); break;
    case Scenario::ex3:
      b = Eigen::VectorXd::Zero(100);
      for (int j = 10; j <= 100; j += 10) b[j - 1] = 5.0;
      break;
    case Scenario::ex4_small:
      b.resize(8);
      b << 3, 1.5, 0.1, 0.1, 2, 0, 0, 0;
      break;
    case Scenario::ex4_large:
      b = Eigen::VectorXd::Zero(100);
      for (int j = 10; j <= 100; j += 10) b[j - 1] = j <= 50 ? 0.5 : 5.0;
      break;
    case Scenario::ex8:
      b = Eigen::VectorXd::Zero(30);
      b.segment(0, 2) << -1.2, 1.8;
      b.segment(4, 2) << 1.0, 0.5;
      b.segment(8, 2) << 1.0, 1.0;
      break;
    case Scenario::ex9:
      b = Eigen::VectorXd::Zero(32);
      b.segment(0, 2) << 3, 2;
      b.segment(2, 2) << 3, 2;
      b.segment(8, 4) << 1, 1.5, 2, 2.5;  // first interaction group: factors 1 x 2
      break;
  }
  return b;
}

Eigen::MatrixXd ar1_correlation(Eigen::Index p, double rho) {
  Eigen::MatrixXd C(p, p);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index k = 0; k < p; ++k) C(j, k) = std::pow(rho, static_cast<double>(std::abs(j - k)));
  return C;
}

Eigen::MatrixXd example2_correlation() {
  Eigen::MatrixXd C = Eigen::MatrixXd::Identity(4, 4);
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k)
      if (j != k) C(j, k) = -0.39;
  for (int j = 0; j < 3; ++j) C(j, 3) = C(3, j) = 0.23;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(C);
  if (eig.eigenvalues().minCoeff() <= 0.0) {
    std::ostringstream dump;
    dump << C;
    throw NumericalError("ex2 correlation matrix is not positive definite:\n" + dump.str(),
                         condition_estimate(C));
  }
  return C;
}

GeneratedData generate_dataset(const ScenarioSpec& spec, long replication, RngHandle& rng) {
  (void)replication;
  GeneratedData out;
  out.beta = true_coefficients(spec.scenario);
  if (spec.scenario == Scenario::ex8) {
    for (Eigen::Index f = 0; f < 15; ++f) out.groups.push_back({2 * f, 2 * f + 1});
  } else if (spec.scenario == Scenario::ex9) {
    interaction_structure(4, out.groups, out.relation);
  }
  out.truth = truth_pattern(out.beta, out.groups);

  const Eigen::MatrixXd X = raw_design(spec.scenario, spec.n, rng);
  const Eigen::VectorXd y = draw_response(spec.scenario, X, out.beta, spec.sigma, rng);
  Dataset raw = make_dataset(X, y);
  if (!out.groups.empty()) raw.groups = out.groups;
  out.train = family_of(spec.scenario) == ModelFamily::logistic ? raw : standardize(raw, Standardization::center);

  if (spec.n_test > 0) {
    const Eigen::MatrixXd Xt = raw_design(spec.scenario, spec.n_test, rng);
    out.test_y = draw_response(spec.scenario, Xt, out.beta, spec.sigma, rng);
    out.test_X = out.train.centered ? to_model_coordinates(out.train, Xt) : Xt;
  }
  return out;
}

std::vector<std::string> available_methods(Scenario scenario) {
  switch (family_of(scenario)) {
    case ModelFamily::linear: return {"lasso", "alasso", "freq", "median", "mean", "eb", "bma", "blasso", "balasso"};
    case ModelFamily::logistic:
    case ModelFamily::group: return {"freq", "median", "mean", "eb", "balasso"};
    case ModelFamily::cap: return {"median", "mean", "eb", "balasso"};
  }
  return {};
}

std::vector<std::string> parse_methods(const std::string& csv) {
  std::vector<std::string> out;
  std::istringstream in(csv);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto a = item.find_first_not_of(" \t");
    if (a == std::string::npos) continue;
    const auto b = item.find_last_not_of(" \t");
    out.push_back(item.substr(a, b - a + 1));
  }
  if (out.empty()) throw ParameterDomainError("method list is empty");
  return out;
}

namespace {

// Lazily built per-replication fits shared by the requested methods.
class ReplicationContext {
 public:
  ReplicationContext(const ScenarioSpec& spec, long replication)
      : spec_(spec), replication_(replication), family_(family_of(spec.scenario)) {
    RngHandle rng(spec.seed, stream_for(replication, kData));
    data_ = generate_dataset(spec, replication, rng);
  }

  const GeneratedData& data() const { return data_; }
  ModelFamily family() const { return family_; }

  const ModeSolver& solver() {
    if (!solver_) {
      switch (family_) {
        case ModelFamily::linear: solver_ = std::make_unique<LinearModeSolver>(data_.train); break;
        case ModelFamily::logistic: solver_ = std::make_unique<LsaModeSolver>(surrogate()); break;
        case ModelFamily::group:
        case ModelFamily::cap: solver_ = std::make_unique<GroupModeSolver>(surrogate(), data_.groups); break;
      }
    }
    return *solver_;
  }

  const LsaSurrogate& surrogate() {
    if (!surrogate_) {
      surrogate_ = family_ == ModelFamily::logistic ? fit_logistic_mle(data_.train, true) : fit_linear_lsa(data_.train);
    }
    return *surrogate_;
  }

  const ChainStore& main_chain() { return chain(main_, spec_.mode, kMainChain); }

  const ChainStore& eb_chain() {
    PenaltyMode mode = spec_.mode;
    mode.kind = PenaltyKind::eb_sa;
    return chain(eb_, mode, kEbChain);
  }

  const ChainStore& single_lambda_chain() {
    PenaltyMode mode = spec_.mode;
    mode.shared_lambda = true;
    return chain(single_, mode, kSingleLambdaChain);
  }

  const ModePath& main_path() {
    if (!main_path_) main_path_ = conditional_modes(main_chain(), solver());
    return *main_path_;
  }

  const ModePath& single_lambda_path() {
    if (!single_path_) single_path_ = conditional_modes(single_lambda_chain(), solver());
    return *single_path_;
  }

  std::vector<std::pair<std::string, ChainStore>> chains() const {
    std::vector<std::pair<std::string, ChainStore>> out;
    if (main_) out.emplace_back("main", *main_);
    if (eb_) out.emplace_back("eb", *eb_);
    if (single_) out.emplace_back("blasso", *single_);
    return out;
  }

  RngHandle fold_rng() const { return RngHandle(spec_.seed, stream_for(replication_, kFolds)); }

 private:
  const ChainStore& chain(std::optional<ChainStore>& slot, const PenaltyMode& mode, StreamSlot stream) {
    if (slot) return *slot;
    ChainConfig cfg;
    cfg.burn_in = spec_.burn_in;
    cfg.kept = spec_.kept;
    cfg.seed = spec_.seed;
    cfg.stream = stream_for(replication_, stream);
    switch (family_) {
      case ModelFamily::linear: slot = run_chain_linear(data_.train, mode, cfg); break;
      case ModelFamily::logistic: slot = run_chain_lsa(surrogate(), mode, cfg); break;
      case ModelFamily::group: slot = run_chain_group(surrogate(), data_.groups, mode, cfg); break;
      case ModelFamily::cap:
        slot = run_chain_cap(surrogate(), CapStructure(data_.groups, data_.relation, data_.beta.size()), mode, cfg);
        break;
    }
    return *slot;
  }

  const ScenarioSpec& spec_;
  long replication_;
  ModelFamily family_;
  GeneratedData data_;
  std::optional<LsaSurrogate> surrogate_;
  std::unique_ptr<ModeSolver> solver_;
  std::optional<ChainStore> main_, eb_, single_;
  std::optional<ModePath> main_path_, single_path_;
};

void score_selection(MethodOutcome& out, const SparsityPattern& pattern, const GeneratedData& data) {
  out.correct = pattern == data.truth;
  out.zero_count = static_cast<double>(pattern.size() - pattern.count());
}

void score_prediction(MethodOutcome& out, const Eigen::VectorXd& fitted, const ReplicationContext& ctx) {
  if (ctx.data().test_y.size() == 0 || ctx.family() != ModelFamily::linear) return;
  out.pse = compute_pse(to_response_scale(ctx.data().train, fitted), ctx.data().test_y);
}

MethodOutcome run_method(const std::string& method, ReplicationContext& ctx) {
  MethodOutcome out;
  const auto& data = ctx.data();
  const bool cap = ctx.family() == ModelFamily::cap;
  auto point = [&](const ChainStore& chains, PointStatistic stat) {
    if (cap) {
      return select_hierarchical(chains, static_cast<const GroupModeSolver&>(ctx.solver()), data.relation, stat);
    }
    return select_point(chains, ctx.solver(), stat);
  };
  auto finish_selection = [&](const SelectionResult& r) {
    score_selection(out, r.pattern, data);
    if (data.test_X.size()) score_prediction(out, data.test_X * r.beta, ctx);
  };

  if (method == "lasso" || method == "alasso") {
    if (ctx.family() != ModelFamily::linear) throw ParameterDomainError(method + " baseline needs a Gaussian scenario");
    RngHandle rng = ctx.fold_rng();
    const CrossValidatedFit fit = method == "lasso" ? cv_lasso(data.train.X, data.train.y, rng)
                                                    : cv_adaptive_lasso(data.train.X, data.train.y, rng);
    score_selection(out, ctx.solver().pattern(fit.beta), data);
    if (data.test_X.size()) score_prediction(out, data.test_X * fit.beta, ctx);
  } else if (method == "freq") {
    if (cap) throw ParameterDomainError("freq selection is not defined for hierarchical (CAP) structures");
    finish_selection(select_freq(ctx.main_chain(), ctx.solver(), ctx.main_path()));
  } else if (method == "median") {
    finish_selection(point(ctx.main_chain(), PointStatistic::median));
  } else if (method == "mean" || method == "balasso") {
    finish_selection(point(ctx.main_chain(), PointStatistic::mean));
  } else if (method == "eb") {
    finish_selection(point(ctx.eb_chain(), PointStatistic::eb_point));
  } else if (method == "bma" || method == "blasso") {
    if (ctx.family() != ModelFamily::linear) throw ParameterDomainError(method + " prediction needs a Gaussian scenario");
    out.selects = false;
    const ModePath& path = method == "bma" ? ctx.main_path() : ctx.single_lambda_path();
    if (data.test_X.size()) score_prediction(out, predict_bma(path, data.test_X), ctx);
  } else {
    throw ParameterDomainError("unknown method '" + method + "'");
  }
  out.ok = true;
  return out;
}

}  // namespace

ReplicationResult run_replication(const ScenarioSpec& spec, const std::vector<std::string>& methods, long replication,
                                  bool keep_chains) {
  ReplicationResult result;
  result.outcomes.resize(methods.size());
  std::optional<ReplicationContext> ctx;
  try {
    ctx.emplace(spec, replication);
  } catch (const std::exception& e) {
    for (auto& o : result.outcomes) o.error = std::string("data generation: ") + e.what();
    return result;
  }
  for (std::size_t m = 0; m < methods.size(); ++m) {
    try {
      result.outcomes[m] = run_method(methods[m], *ctx);
    } catch (const std::exception& e) {
      result.outcomes[m] = MethodOutcome{};
      result.outcomes[m].error = e.what();
    }
  }
  if (keep_chains) result.chains = ctx->chains();
  return result;
}

const MethodSummary* ReportTable::find(const std::string& method) const {
  for (const auto& r : rows)
    if (r.method == method) return &r;
  return nullptr;
}

namespace {

std::string cell(double v, int digits = 4) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string ReportTable::to_csv() const {
  std::ostringstream out;
  out << "scenario,method,n,sigma,replications,completed,failures,correct,correct_se,mean_zero,mean_pse,pse_se\n";
  for (const auto& r : rows)
    out << r.scenario << ',' << r.method << ',' << spec.n << ',' << format_double(spec.sigma) << ','
        << r.replications << ',' << r.completed << ',' << r.failures << ','
        << (std::isnan(r.mean_zero) ? std::string() : std::to_string(r.correct)) << ','
        << cell(r.correct_se) << ',' << cell(r.mean_zero) << ',' << cell(r.mean_pse) << ',' << cell(r.pse_se)
        << '\n';
  return out.str();
}

std::string ReportTable::to_text() const {
  std::ostringstream out;
  char line[256];
  out << "scenario " << to_string(spec.scenario) << "  n=" << spec.n << "  sigma=" << format_double(spec.sigma)
      << "  replications=" << spec.replications << "  seed=" << spec.seed << "  (" << cell(seconds, 1) << " s)\n";
  std::snprintf(line, sizeof line, "%-10s %9s %9s %8s %12s %10s\n", "method", "correct", "(s.e.)", "zeros",
                "PSE", "(s.e.)");
  out << line;
  for (const auto& r : rows) {
    const std::string correct = std::isnan(r.mean_zero) ? std::string() : std::to_string(r.correct);
    std::snprintf(line, sizeof line, "%-10s %9s %9s %8s %12s %10s", r.method.c_str(), correct.c_str(),
                  cell(r.correct_se, 2).c_str(), cell(r.mean_zero, 2).c_str(), cell(r.mean_pse, 4).c_str(),
                  cell(r.pse_se, 4).c_str());
    out << line;
    if (r.failures) out << "  [" << r.failures << " failed]";
    out << '\n';
  }
  return out.str();
}

ReportTable run_experiment(const ScenarioSpec& spec, const std::vector<std::string>& methods,
                           const ExperimentOptions& options) {
  validate(spec);
  if (methods.empty()) throw ParameterDomainError("run_experiment needs at least one method");
  const auto allowed = available_methods(spec.scenario);
  for (const auto& m : methods)
    if (std::find(allowed.begin(), allowed.end(), m) == allowed.end())
      throw ParameterDomainError("method '" + m + "' is not available for scenario " + to_string(spec.scenario));

  const auto start = std::chrono::steady_clock::now();
  std::vector<ReplicationResult> results(static_cast<std::size_t>(spec.replications));
  std::atomic<long> next{0};
  std::mutex log_mutex;
  long finished = 0;
  const long keep = options.out ? options.saved_chain_replications : 0;
  auto worker = [&]() {
    for (long r = next++; r < spec.replications; r = next++) {
      results[static_cast<std::size_t>(r)] = run_replication(spec, methods, r, r < keep);
      if (options.progress) {
        std::lock_guard lock(log_mutex);
        ++finished;
        std::cerr << to_string(spec.scenario) << ": replication " << finished << "/" << spec.replications
                  << " done\n";
      }
    }
  };
  int threads = options.threads > 0 ? options.threads : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, static_cast<int>(std::min<long>(spec.replications, 256)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  ReportTable table;
  table.spec = spec;
  for (std::size_t m = 0; m < methods.size(); ++m) {
    MethodSummary s;
    s.scenario = to_string(spec.scenario);
    s.method = methods[m];
    s.replications = spec.replications;
    double zeros = 0.0, pse = 0.0, pse_sq = 0.0;
    long pse_count = 0, selections = 0;
    for (std::size_t r = 0; r < results.size(); ++r) {
      const MethodOutcome& o = results[r].outcomes[m];
      if (!o.ok) {
        ++s.failures;
        s.failure_messages.push_back("replication " + std::to_string(r + 1) + ": " + o.error);
        continue;
      }
      ++s.completed;
      if (o.selects) {
        ++selections;
        s.correct += o.correct ? 1 : 0;
        zeros += o.zero_count;
      }
      if (o.pse) {
        ++pse_count;
        pse += *o.pse;
        pse_sq += *o.pse * *o.pse;
      }
    }
    if (selections > 0) {
      const double rate = static_cast<double>(s.correct) / static_cast<double>(selections);
      s.correct_se = std::sqrt(static_cast<double>(selections) * rate * (1.0 - rate));
      s.mean_zero = zeros / static_cast<double>(selections);
    } else {
      s.correct_se = std::numeric_limits<double>::quiet_NaN();
      s.mean_zero = std::numeric_limits<double>::quiet_NaN();
    }
    if (pse_count > 0) {
      s.mean_pse = pse / static_cast<double>(pse_count);
      const double var = pse_count > 1 ? (pse_sq - pse_count * s.mean_pse * s.mean_pse) / (pse_count - 1) : 0.0;
      s.pse_se = std::sqrt(std::max(var, 0.0) / static_cast<double>(pse_count));
    }
    table.rows.push_back(std::move(s));
  }
  table.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (options.out) {
    const auto& dir = *options.out;
    write_text_file(dir / "report.csv", table.to_csv());
    write_text_file(dir / "report.txt", table.to_text());
    KeyValues meta = describe(spec);
    std::string list;
    for (const auto& m : methods) list += (list.empty() ? "" : ",") + m;
    meta.emplace_back("methods", list);
    meta.emplace_back("config_hash", to_hex(hash_key_values(meta)));
    meta.emplace_back("software_version", software_version());
    meta.emplace_back("created", utc_timestamp());
    meta.emplace_back("seconds", cell(table.seconds, 3));
    for (const auto& row : table.rows)
      for (auto msg : row.failure_messages) {
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        meta.emplace_back("failure." + row.method, msg);
      }
    write_text_file(dir / "meta.txt", format_key_values(meta));
    for (long r = 0; r < keep && r < spec.replications; ++r) {
      char name[64];
      for (const auto& [label, store] : results[static_cast<std::size_t>(r)].chains) {
        std::snprintf(name, sizeof name, "rep%03ld_%s.csv", r + 1, label.c_str());
        write_chain_csv(store, dir / "chains" / name);
      }
    }
  }
  return table;
}

}  // namespace balasso
