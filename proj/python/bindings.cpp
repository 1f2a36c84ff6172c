#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "geonet/bench.hpp"
#include "geonet/data.hpp"
#include "geonet/errors.hpp"
#include "geonet/model.hpp"
#include "geonet/trainer.hpp"

namespace py = pybind11;
using namespace geonet;

namespace {

py::array_t<double> to_numpy(const Matrix& M) {
  py::array_t<double> out({M.rows, M.cols});
  std::copy(M.values.begin(), M.values.end(), out.mutable_data());
  return out;
}

Matrix from_numpy(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw DataError("expected a 2-D array");
  Matrix M(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), M.values.begin());
  return M;
}

Dataset dataset_from_arrays(const py::array_t<double>& X, const py::array_t<double>& Y,
                            std::vector<std::string> feature_names,
                            std::vector<std::string> target_names) {
  Dataset ds;
  ds.X = from_numpy(X);
  ds.Y = from_numpy(Y);
  if (feature_names.empty())
    for (std::size_t j = 0; j < ds.X.cols; ++j) feature_names.push_back("x" + std::to_string(j + 1));
  if (target_names.empty())
    for (std::size_t q = 0; q < ds.Y.cols; ++q) target_names.push_back("y" + std::to_string(q + 1));
  ds.feature_names = std::move(feature_names);
  ds.target_names = std::move(target_names);
  ds.validate();
  return ds;
}

TrainConfig make_config(const std::string& variant, double tau, double mu, int t_max,
                        int l_max, double tol, const py::object& scopes,
                        std::uint64_t seed, const std::string& fallback) {
  TrainConfig cfg;
  cfg.variant = variant_from_string(variant);
  cfg.tau = tau;
  cfg.mu = mu;
  cfg.t_max = t_max;
  cfg.l_max = l_max;
  cfg.tol = tol;
  cfg.seed = seed;
  cfg.fallback = fallback_from_string(fallback);
  if (py::isinstance<py::str>(scopes)) {
    cfg.scopes = ScopeSchedule::parse(scopes.cast<std::string>());
  } else {
    cfg.scopes.scales = scopes.cast<std::vector<double>>();
  }
  cfg.validate();
  return cfg;
}

} // namespace

PYBIND11_MODULE(_geonet, m) {
  m.doc() = "Geometric constructive networks: incremental randomized regression models";

  py::register_exception<ConfigError>(m, "GeonetConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "GeonetDataError", PyExc_ValueError);
  py::register_exception<IoError>(m, "GeonetIoError", PyExc_IOError);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init(&dataset_from_arrays), py::arg("X"), py::arg("Y"),
           py::arg("feature_names") = std::vector<std::string>{},
           py::arg("target_names") = std::vector<std::string>{})
      .def_property_readonly("X", [](const Dataset& ds) { return to_numpy(ds.X); })
      .def_property_readonly("Y", [](const Dataset& ds) { return to_numpy(ds.Y); })
      .def_readonly("feature_names", &Dataset::feature_names)
      .def_readonly("target_names", &Dataset::target_names)
      .def("__len__", &Dataset::size)
      .def("__repr__", [](const Dataset& ds) {
        return "<Dataset n=" + std::to_string(ds.size()) + " d=" + std::to_string(ds.dims()) +
               " m=" + std::to_string(ds.targets()) + ">";
      });

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init(&make_config), py::arg("variant") = "lightgcnet2", py::arg("tau") = 0.5,
           py::arg("mu") = 0.5, py::arg("t_max") = 20, py::arg("l_max") = 100,
           py::arg("tol") = 0.05, py::arg("scopes") = py::cast(std::vector<double>{1.0}),
           py::arg("seed") = 0, py::arg("fallback") = "accept_best")
      .def_readwrite("tau", &TrainConfig::tau)
      .def_readwrite("mu", &TrainConfig::mu)
      .def_readwrite("t_max", &TrainConfig::t_max)
      .def_readwrite("l_max", &TrainConfig::l_max)
      .def_readwrite("tol", &TrainConfig::tol)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_property(
          "variant", [](const TrainConfig& c) { return to_string(c.variant); },
          [](TrainConfig& c, const std::string& v) { c.variant = variant_from_string(v); })
      .def_property(
          "scopes", [](const TrainConfig& c) { return c.scopes.scales; },
          [](TrainConfig& c, const std::vector<double>& s) { c.scopes.scales = s; })
      .def("to_json", &TrainConfig::to_json)
      .def_static("from_json", &TrainConfig::from_json);

  py::class_<GeoNet>(m, "GeoNet")
      .def_property_readonly("node_count", &GeoNet::node_count)
      .def_property_readonly("input_dim", &GeoNet::input_dim)
      .def_property_readonly("output_dim", &GeoNet::output_dim)
      .def_readonly("variant", &GeoNet::variant)
      .def_readonly("seed", &GeoNet::seed)
      .def_property_readonly("beta", [](const GeoNet& net) { return to_numpy(net.beta); })
      .def("predict",
           [](const GeoNet& net, const py::array_t<double>& X) {
             return to_numpy(predict(net, from_numpy(X)));
           })
      .def("predict_normalized",
           [](const GeoNet& net, const py::array_t<double>& X) {
             return to_numpy(predict_normalized(net, from_numpy(X)));
           })
      .def("to_json", &serialize)
      .def_static("from_json", &deserialize)
      .def("save", &save_model, py::arg("path"))
      .def_static("load", &load_model, py::arg("path"));

  py::class_<TraceRow>(m, "TraceRow")
      .def_readonly("L", &TraceRow::L)
      .def_readonly("scale_used", &TraceRow::scale_used)
      .def_readonly("candidates_drawn", &TraceRow::candidates_drawn)
      .def_readonly("candidates_passing", &TraceRow::candidates_passing)
      .def_readonly("best_margin", &TraceRow::best_margin)
      .def_readonly("chosen_delta", &TraceRow::chosen_delta)
      .def_readonly("train_rmse", &TraceRow::train_rmse)
      .def_readonly("test_rmse", &TraceRow::test_rmse)
      .def_readonly("fallback_used", &TraceRow::fallback_used);

  py::class_<TrainTrace>(m, "TrainTrace")
      .def_readonly("rows", &TrainTrace::rows)
      .def_property_readonly("status",
                             [](const TrainTrace& t) { return to_string(t.status); })
      .def("first_crossing",
           [](const TrainTrace& t, double thr) -> std::optional<int> {
             return t.first_crossing(thr);
           })
      .def("to_csv", [](const TrainTrace& t) { return trace_to_csv(t); });

  py::class_<TrainResult>(m, "TrainResult")
      .def_readonly("model", &TrainResult::model)
      .def_readonly("trace", &TrainResult::trace)
      .def_property_readonly("status",
                             [](const TrainResult& r) { return to_string(r.status); })
      .def_readonly("train_rmse", &TrainResult::final_train_rmse)
      .def_readonly("test_rmse", &TrainResult::final_test_rmse);

  py::enum_<Sampling>(m, "Sampling")
      .value("Grid", Sampling::Grid)
      .value("Uniform", Sampling::Uniform);
  m.def("gen_function", &gen_function, py::arg("n"), py::arg("seed") = 0,
        py::arg("sampling") = Sampling::Uniform);
  m.def(
      "gen_grinding_surrogate",
      [](std::size_t n, std::uint64_t seed, double noise_sd) {
        return gen_grinding_surrogate({n, seed, noise_sd});
      },
      py::arg("n"), py::arg("seed") = 0, py::arg("noise_sd") = 0.0);
  m.def("grinding_surrogate_target", &grinding_surrogate_target);
  m.def("function_target", &function_target);
  m.def("load_csv", &load_csv, py::arg("path"), py::arg("targets") = 1);
  m.def("save_csv", &save_csv, py::arg("dataset"), py::arg("path"));
  m.def("split", &split, py::arg("dataset"), py::arg("train_fraction"), py::arg("seed"));
  m.def(
      "train",
      [](const TrainConfig& cfg, const Dataset& train_set, const Dataset* test_set) {
        return train(cfg, train_set, test_set);
      },
      py::arg("config"), py::arg("train_set"), py::arg("test_set") = nullptr);
  m.def("gamma", &geonet::gamma, py::arg("L"), py::arg("tau") = 0.5, py::arg("mu") = 0.5);
  m.def("node_utilization", &node_utilization);
  m.def(
      "rmse",
      [](const py::array_t<double>& Y, const py::array_t<double>& Yhat) {
        return rmse(from_numpy(Y), from_numpy(Yhat));
      },
      py::arg("Y"), py::arg("Yhat"));
  m.def(
      "run_experiment_json",
      [](const std::string& spec_json, int jobs, bool zero_times) {
        const ExperimentSpec spec = ExperimentSpec::from_json(spec_json);
        RunOptions options;
        options.jobs = jobs;
        options.zero_times = zero_times;
        return report_to_json(run_experiment(spec, options), std::nullopt);
      },
      py::arg("spec_json"), py::arg("jobs") = 1, py::arg("zero_times") = false,
      "Run a repeated experiment from a JSON spec string; returns the report as JSON.");
}
