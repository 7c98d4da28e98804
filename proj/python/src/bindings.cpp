#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "catebench/cli.hpp"
#include "catebench/dataset.hpp"
#include "catebench/error.hpp"
#include "catebench/forest.hpp"
#include "catebench/linreg.hpp"
#include "catebench/synth.hpp"
#include "catebench/tlearner.hpp"
#include "catebench/treatcount.hpp"

namespace py = pybind11;
using namespace catebench;

namespace {

py::object to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json from_python(const py::object& o) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

TrainingSet training_set(const std::vector<std::vector<double>>& x, const std::vector<double>& y) {
  return TrainingSet(x, y);
}

TreeParams tree_params(int max_depth, int min_samples_split, int min_samples_leaf) {
  return TreeParams{max_depth, min_samples_split, min_samples_leaf};
}

py::dict summary_dict(const GroupSummary& s) {
  py::dict d;
  d["n_treated"] = s.n_treated;
  d["n_control"] = s.n_control;
  d["mean_y_treated"] = s.mean_y_treated;
  d["mean_y_control"] = s.mean_y_control;
  d["mean_x1_treated"] = s.mean_x1_treated;
  d["mean_x1_control"] = s.mean_x1_control;
  return d;
}

SchemaConfig schema_of(const std::map<std::string, std::string>& columns, double bin_width) {
  SchemaConfig cfg;
  for (const auto& [field, name] : columns) {
    if (!cfg.columns.contains(field)) throw Error(ErrorKind::SchemaError, "unknown schema field '" + field + "'");
    cfg.columns[field] = name;
  }
  cfg.bin_width = bin_width;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "T-learner treatment-effect estimation (C++ core)";

  static py::exception<Error> error_type(m, "CatebenchError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object err = py::reinterpret_borrow<py::object>(error_type)(std::string(e.what()));
      err.attr("kind") = std::string(to_string(e.kind()));
      err.attr("detail") = e.detail();
      PyErr_SetObject(error_type.ptr(), err.ptr());
    }
  });

  // dataset
  py::class_<StudentRecord>(m, "StudentRecord")
      .def(py::init([](std::string id, double x1, int x2, double y, std::map<std::string, int> aux) {
             StudentRecord r{std::move(id), x1, x2, y, std::move(aux)};
             for (auto f : kAuxFeatures) r.aux.try_emplace(std::string(f), 0);
             return r;
           }),
           py::arg("id"), py::arg("x1"), py::arg("x2"), py::arg("y"), py::arg("aux") = std::map<std::string, int>{})
      .def_readwrite("id", &StudentRecord::id)
      .def_readwrite("x1", &StudentRecord::x1)
      .def_readwrite("x2", &StudentRecord::x2)
      .def_readwrite("y", &StudentRecord::y)
      .def_readwrite("aux", &StudentRecord::aux)
      .def_property_readonly("treated", &StudentRecord::treated)
      .def("__eq__", [](const StudentRecord& a, const StudentRecord& b) { return a == b; })
      .def("__repr__", [](const StudentRecord& r) {
        std::ostringstream s;
        s << "StudentRecord(id='" << r.id << "', x1=" << r.x1 << ", x2=" << r.x2 << ", y=" << r.y << ")";
        return s.str();
      });

  py::class_<Cohort>(m, "Cohort")
      .def(py::init<std::vector<StudentRecord>, double>(), py::arg("records"), py::arg("bin_width") = 1.0)
      .def("__len__", &Cohort::size)
      .def("__getitem__", &Cohort::operator[])
      .def("__eq__", [](const Cohort& a, const Cohort& b) { return a == b; })
      .def_property_readonly("records", &Cohort::records)
      .def_property_readonly("treated", &Cohort::treated)
      .def_property_readonly("control", &Cohort::control)
      .def_property_readonly("groups", &Cohort::groups)
      .def_property_readonly("bin_width", &Cohort::bin_width)
      .def("bin_values", &Cohort::bin_values)
      .def("covariate", &Cohort::covariate, py::arg("k"))
      .def("members", [](const Cohort& c, double bin) {
        const auto span = c.members(bin);
        return std::vector<std::size_t>(span.begin(), span.end());
      });

  m.def("to_deviation", [](const std::vector<double>& raw) { return to_deviation(raw); }, py::arg("raw_scores"));
  m.def("summarize", [](const Cohort& c) { return summary_dict(summarize(c)); }, py::arg("cohort"));
  m.def(
      "load_cohort",
      [](const std::string& path, const std::map<std::string, std::string>& columns, double bin_width) {
        auto res = load_cohort(path, schema_of(columns, bin_width));
        return py::make_tuple(std::move(res.cohort), res.dropped);
      },
      py::arg("path"), py::arg("columns") = std::map<std::string, std::string>{}, py::arg("bin_width") = 1.0,
      "Returns (cohort, dropped_row_count).");
  m.def(
      "save_cohort",
      [](const Cohort& c, const std::string& path, const std::map<std::string, std::string>& columns) {
        save_cohort(c, path, schema_of(columns, c.bin_width()));
      },
      py::arg("cohort"), py::arg("path"), py::arg("columns") = std::map<std::string, std::string>{});

  // forest
  py::class_<RegressionTree>(m, "RegressionTree")
      .def("predict", [](const RegressionTree& t, const std::vector<double>& x) { return t.predict(x); })
      .def_property_readonly("depth", &RegressionTree::depth)
      .def_property_readonly("node_count", [](const RegressionTree& t) { return t.nodes().size(); })
      .def(
          "export_text", [](const RegressionTree& t, const std::vector<std::string>& names) { return tree_report_text(t, names); },
          py::arg("feature_names") = std::vector<std::string>{})
      .def(
          "export_json",
          [](const RegressionTree& t, const std::vector<std::string>& names) { return to_python(tree_report_json(t, names)); },
          py::arg("feature_names") = std::vector<std::string>{});

  py::class_<RegressionForest>(m, "RegressionForest")
      .def("predict", [](const RegressionForest& f, const std::vector<double>& x) { return f.predict(x); })
      .def_property_readonly("n_trees", &RegressionForest::n_trees)
      .def_property_readonly("trees", &RegressionForest::trees);

  m.def(
      "fit_tree",
      [](const std::vector<std::vector<double>>& x, const std::vector<double>& y, int max_depth, int min_samples_split,
         int min_samples_leaf) {
        return fit_tree(training_set(x, y), tree_params(max_depth, min_samples_split, min_samples_leaf));
      },
      py::arg("x"), py::arg("y"), py::arg("max_depth") = 2, py::arg("min_samples_split") = 2,
      py::arg("min_samples_leaf") = 1);
  m.def(
      "fit_forest",
      [](const std::vector<std::vector<double>>& x, const std::vector<double>& y, std::size_t n_trees,
         std::uint64_t seed, int max_depth, int min_samples_split, int min_samples_leaf, bool bootstrap,
         std::size_t max_features, unsigned threads) {
        const auto rows = training_set(x, y);
        const auto params = tree_params(max_depth, min_samples_split, min_samples_leaf);
        py::gil_scoped_release release;
        return fit_forest(rows, params, ForestOptions{n_trees, seed, bootstrap, max_features, threads});
      },
      py::arg("x"), py::arg("y"), py::arg("n_trees") = 100, py::arg("seed") = 0, py::arg("max_depth") = 2,
      py::arg("min_samples_split") = 2, py::arg("min_samples_leaf") = 1, py::arg("bootstrap") = true,
      py::arg("max_features") = 0, py::arg("threads") = 0);

  // learners
  py::class_<LearnerConfig>(m, "LearnerConfig")
      .def(py::init([](int max_depth, int min_samples_split, int min_samples_leaf, std::size_t n_trees,
                       std::uint64_t seed, bool bootstrap, std::size_t max_features, unsigned threads) {
             return LearnerConfig{tree_params(max_depth, min_samples_split, min_samples_leaf), n_trees, seed,
                                  bootstrap, max_features, threads};
           }),
           py::arg("max_depth") = 2, py::arg("min_samples_split") = 2, py::arg("min_samples_leaf") = 1,
           py::arg("n_trees") = 100, py::arg("seed") = 0, py::arg("bootstrap") = true, py::arg("max_features") = 0,
           py::arg("threads") = 0)
      .def_readwrite("n_trees", &LearnerConfig::n_trees)
      .def_readwrite("seed", &LearnerConfig::seed)
      .def_readwrite("bootstrap", &LearnerConfig::bootstrap)
      .def_readwrite("threads", &LearnerConfig::threads)
      .def("to_dict", [](const LearnerConfig& c) { return to_python(to_json(c)); });

  py::class_<TLearnerModel>(m, "TLearnerModel")
      .def_readonly("mu1", &TLearnerModel::mu1)
      .def_readonly("mu0", &TLearnerModel::mu0)
      .def_readonly("n_treated", &TLearnerModel::n_treated)
      .def_readonly("n_control", &TLearnerModel::n_control)
      .def("cate_tau", &cate_tau, py::arg("x1"))
      .def("ate", &ate, py::arg("cohort"))
      .def("att", &att, py::arg("cohort"))
      .def("atu", &atu, py::arg("cohort"))
      .def(
          "effect_report", [](const TLearnerModel& m, const Cohort& c) { return to_python(effect_report_json(effect_report(m, c))); },
          py::arg("cohort"));

  m.def(
      "fit_t_learner",
      [](const Cohort& c, const LearnerConfig& cfg) {
        py::gil_scoped_release release;
        return fit_t_learner(c, cfg);
      },
      py::arg("cohort"), py::arg("config") = LearnerConfig{});

  py::class_<TLearner2Model>(m, "TLearner2Model")
      .def_readonly("mu1", &TLearner2Model::mu1)
      .def_readonly("mu0", &TLearner2Model::mu0)
      .def_readonly("n_treated", &TLearner2Model::n_treated)
      .def_readonly("n_control", &TLearner2Model::n_control)
      .def_readonly("observed_dose_min", &TLearner2Model::observed_dose_min)
      .def_readonly("observed_dose_max", &TLearner2Model::observed_dose_max)
      .def("phi", &phi, py::arg("cohort"), py::arg("x1"), py::arg("x2"))
      .def("phi_summand", &phi_summand, py::arg("x1"), py::arg("x2"))
      .def("att2", &att2, py::arg("cohort"))
      .def(
          "check_base_independence",
          [](const TLearner2Model& m, const Cohort& c, const std::vector<int>& probe) {
            const auto r = check_base_independence(m, c, probe);
            py::list violations;
            for (const auto& v : r.violations) violations.append(py::make_tuple(v.record, v.x2, v.at_zero, v.at_probe));
            py::dict d;
            d["checks"] = r.checks;
            d["violations"] = violations;
            d["passed"] = r.passed();
            return d;
          },
          py::arg("cohort"), py::arg("probe_x2"))
      .def(
          "phi_surface",
          [](const TLearner2Model& m, const Cohort& c, std::vector<double> x1_bins, std::vector<int> x2_values,
             unsigned threads) { return to_python(surface_json(phi_surface(m, c, x1_bins, x2_values, threads))); },
          py::arg("cohort"), py::arg("x1_bins"), py::arg("x2_values"), py::arg("threads") = 1);

  m.def(
      "fit_t_learner2",
      [](const Cohort& c, const LearnerConfig& cfg) {
        py::gil_scoped_release release;
        return fit_t_learner2(c, cfg);
      },
      py::arg("cohort"), py::arg("config") = LearnerConfig{});
  m.def("default_probe_x2", &default_probe_x2, py::arg("cohort"));

  // linreg
  py::class_<OlsFit>(m, "OlsFit")
      .def_readonly("coefficients", &OlsFit::coefficients)
      .def_readonly("intercept", &OlsFit::intercept)
      .def_readonly("r_squared", &OlsFit::r_squared)
      .def_readonly("n", &OlsFit::n)
      .def("predict", [](const OlsFit& f, const std::vector<double>& x) { return f.predict(x); });

  m.def(
      "ols_fit", [](const std::vector<std::vector<double>>& x, const std::vector<double>& y) { return ols_fit(x, y); },
      py::arg("design"), py::arg("targets"));
  m.def(
      "tau_dose_regression",
      [](const Cohort& c, const TLearnerModel& model) {
        auto reg = tau_dose_regression(c, model);
        py::list scatter;
        for (const auto& r : reg.scatter) scatter.append(py::make_tuple(r.x2, r.tau, r.x1_bin));
        return py::make_tuple(reg.fit, scatter);
      },
      py::arg("cohort"), py::arg("model"), "Returns (fit, [(x2, tau, x1_bin), ...]).");

  // synth
  py::class_<Scenario>(m, "Scenario")
      .def(py::init([](const py::dict& fields) { return Scenario::from_json(from_python(fields)); }),
           py::arg("fields") = py::dict())
      .def("to_dict", [](const Scenario& s) { return to_python(to_json(s)); })
      .def("expected_treated_fraction", &expected_treated_fraction);

  m.def("biased_scenario", &biased_scenario);
  m.def("field_study_scenario", &field_study_scenario);
  m.def("dose_response_scenario", &dose_response_scenario);

  py::class_<GroundTruth>(m, "GroundTruth")
      .def_readonly("y0", &GroundTruth::y0)
      .def_readonly("y1", &GroundTruth::y1)
      .def_readonly("effect", &GroundTruth::effect)
      .def_readonly("dose", &GroundTruth::dose)
      .def_readonly("noise", &GroundTruth::noise)
      .def_readonly("treated", &GroundTruth::treated)
      .def_readonly("ate", &GroundTruth::ate)
      .def_readonly("att", &GroundTruth::att)
      .def("true_tau", [](const GroundTruth& t, double x1) { return true_effects(t, TrueTau{x1}); }, py::arg("x1"))
      .def(
          "true_tau_dose", [](const GroundTruth& t, double x1, int x2) { return true_effects(t, TrueTauDose{x1, x2}); },
          py::arg("x1"), py::arg("x2"));

  m.def(
      "generate",
      [](const Scenario& s, std::uint64_t seed) {
        auto syn = generate(s, seed);
        return py::make_tuple(std::move(syn.cohort), std::move(syn.truth));
      },
      py::arg("scenario"), py::arg("seed") = 0, "Returns (cohort, ground_truth).");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a catebench subcommand; returns (exit_code, stdout, stderr).");
}
