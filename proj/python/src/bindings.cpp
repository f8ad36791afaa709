#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "balasso/balasso.hpp"

namespace py = pybind11;
using namespace balasso;

namespace {

PenaltyMode make_mode(const std::string& kind, double r, std::optional<double> delta, bool shared_lambda) {
  PenaltyMode mode;
  mode.kind = parse_penalty_kind(kind);
  mode.r = r;
  mode.delta = delta;
  mode.shared_lambda = shared_lambda;
  return mode;
}

Dataset centered(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  return standardize(make_dataset(X, y), Standardization::center);
}

// A centered training set together with its chain.
struct Fit {
  Dataset data;
  ChainStore chain;

  SelectionResult select(const std::string& strategy) const {
    if (strategy == "freq") return select_freq(chain, data);
    if (strategy == "mean") return select_point(chain, data, PointStatistic::mean);
    if (strategy == "median") return select_point(chain, data, PointStatistic::median);
    if (strategy == "eb") return select_point(chain, data, PointStatistic::eb_point);
    throw ParameterDomainError("unknown strategy '" + strategy + "' (freq, mean, median, eb)");
  }

  Eigen::VectorXd predict(const Eigen::MatrixXd& X_raw) const {
    const LinearModeSolver solver(data);
    return to_response_scale(data, predict_bma(chain, solver, to_model_coordinates(data, X_raw)));
  }
};

py::dict selection_dict(const SelectionResult& s) {
  py::dict d;
  d["strategy"] = s.strategy;
  d["pattern"] = s.pattern.to_string();
  d["beta"] = s.beta;
  d["lambda"] = s.lambda;
  if (s.frequencies.size()) d["frequencies"] = s.frequencies;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bayesian adaptive lasso: samplers, selection and simulation harness";

  py::register_exception<ParameterDomainError>(m, "ParameterDomainError", PyExc_ValueError);
  py::register_exception<NonConvergenceError>(m, "NonConvergenceError", PyExc_RuntimeError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<ChecksumError>(m, "ChecksumError", PyExc_IOError);
  py::register_exception<ManifestError>(m, "ManifestError", PyExc_IOError);

  m.attr("__version__") = software_version();

  m.def(
      "solve_weighted_lasso",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& lam) {
        return solve_weighted_lasso({X, y, lam}).beta;
      },
      py::arg("X"), py::arg("y"), py::arg("lam"), "Minimizer of ||y - Xb||^2 + sum_j lam_j |b_j|.");

  m.def(
      "sample_inverse_gaussian",
      [](double mean, double shape, long size, std::uint64_t seed) {
        RngHandle rng(seed);
        Eigen::VectorXd out(size);
        for (long i = 0; i < size; ++i) out[i] = sample_inverse_gaussian({mean, shape}, rng);
        return out;
      },
      py::arg("mean"), py::arg("shape"), py::arg("size"), py::arg("seed") = 0);

  py::class_<ChainStore>(m, "Chain")
      .def_property_readonly("size", &ChainStore::size)
      .def_property_readonly("beta", &ChainStore::beta_draws)
      .def_property_readonly("lam", &ChainStore::lambda_draws)
      .def_property_readonly("sigma2",
                             [](const ChainStore& c) {
                               Eigen::VectorXd v(c.size());
                               for (Eigen::Index i = 0; i < c.size(); ++i) v[i] = c.sigma2(i);
                               return v;
                             })
      .def_readonly("delta", &ChainStore::delta)
      .def_readonly("model", &ChainStore::model)
      .def_property_readonly("config_hash", [](const ChainStore& c) { return to_hex(c.provenance.config_hash()); })
      .def("save", [](const ChainStore& c, const std::filesystem::path& dir) { save_chain(c, dir); })
      .def_static("load", &load_chain, py::arg("directory"))
      .def("summarize_lambda", [](const ChainStore& c, const std::string& stat) {
        if (stat == "mean") return summarize_lambda(c, PointStatistic::mean);
        if (stat == "median") return summarize_lambda(c, PointStatistic::median);
        return summarize_lambda(c, PointStatistic::eb_point);
      });

  py::class_<Fit>(m, "Fit")
      .def_property_readonly("chain", [](const Fit& f) { return f.chain; })
      .def("select", [](const Fit& f, const std::string& strategy) { return selection_dict(f.select(strategy)); },
           py::arg("strategy") = "mean")
      .def("predict", &Fit::predict, py::arg("X"), "Model-averaged predictions for raw predictor rows.");

  m.def(
      "fit",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, long burn_in, long kept, std::uint64_t seed,
         const std::string& penalty, double r, std::optional<double> delta, bool shared_lambda) {
        Fit f;
        f.data = centered(X, y);
        ChainConfig cfg;
        cfg.burn_in = burn_in;
        cfg.kept = kept;
        cfg.seed = seed;
        py::gil_scoped_release release;
        f.chain = run_chain_linear(f.data, make_mode(penalty, r, delta, shared_lambda), cfg);
        return f;
      },
      py::arg("X"), py::arg("y"), py::arg("burn_in") = 10000, py::arg("kept") = 10000, py::arg("seed") = 1,
      py::arg("penalty") = "hierarchical", py::arg("r") = 0.1, py::arg("delta") = py::none(),
      py::arg("shared_lambda") = false, "Run the linear-model Gibbs sampler on centered data.");

  m.def(
      "generate",
      [](const std::string& scenario, std::optional<long> n, std::uint64_t seed, long replication) {
        ScenarioSpec spec = default_spec(parse_scenario(scenario));
        if (n) spec.n = *n;
        RngHandle rng(seed, static_cast<std::uint64_t>(replication) * 8);
        const GeneratedData g = generate_dataset(spec, replication, rng);
        py::dict d;
        d["X"] = g.train.X;
        d["y"] = g.train.y;
        d["beta"] = g.beta;
        d["truth"] = g.truth.to_string();
        if (g.test_X.size()) {
          d["X_test"] = g.test_X;
          d["y_test"] = g.test_y;
        }
        return d;
      },
      py::arg("scenario"), py::arg("n") = py::none(), py::arg("seed") = 1, py::arg("replication") = 0,
      "Training data (centered model coordinates) of one simulation replication.");

  m.def(
      "run_experiment",
      [](const std::string& scenario, const std::vector<std::string>& methods, long replications,
         std::uint64_t seed, std::optional<long> n, std::optional<double> sigma, long burn_in, long kept,
         int threads) {
        ScenarioSpec spec = default_spec(parse_scenario(scenario));
        spec.replications = replications;
        spec.seed = seed;
        if (n) spec.n = *n;
        if (sigma) spec.sigma = *sigma;
        spec.burn_in = burn_in;
        spec.kept = kept;
        ExperimentOptions opt;
        opt.threads = threads;
        ReportTable t;
        {
          py::gil_scoped_release release;
          t = run_experiment(spec, methods.empty() ? available_methods(spec.scenario) : methods, opt);
        }
        py::list rows;
        for (const auto& r : t.rows) {
          py::dict d;
          d["method"] = r.method;
          d["replications"] = r.replications;
          d["completed"] = r.completed;
          d["failures"] = r.failures;
          d["correct"] = r.correct;
          d["correct_se"] = r.correct_se;
          d["mean_zero"] = r.mean_zero;
          d["mean_pse"] = r.mean_pse;
          d["pse_se"] = r.pse_se;
          rows.append(d);
        }
        return rows;
      },
      py::arg("scenario"), py::arg("methods") = std::vector<std::string>{}, py::arg("replications") = 100,
      py::arg("seed") = 1, py::arg("n") = py::none(), py::arg("sigma") = py::none(), py::arg("burn_in") = 10000,
      py::arg("kept") = 10000, py::arg("threads") = 0);

  m.def("available_methods", [](const std::string& scenario) { return available_methods(parse_scenario(scenario)); });
}
