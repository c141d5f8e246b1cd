#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "windfc/config.hpp"
#include "windfc/error.hpp"
#include "windfc/evaluate.hpp"
#include "windfc/gradsuite.hpp"
#include "windfc/pipeline.hpp"
#include "windfc/synthdata.hpp"

namespace py = pybind11;
using namespace windfc;

namespace {

SynthSpec synth_spec(std::size_t n_turbines, std::size_t n_days, std::uint64_t seed, double invalid_fraction,
                     double daily_amplitude, double noise_std) {
  SynthSpec s;
  s.n_turbines = n_turbines;
  s.n_days = n_days;
  s.seed = seed;
  s.invalid_fraction = invalid_fraction;
  s.daily_amplitude = daily_amplitude;
  s.noise_std = noise_std;
  return s;
}

py::dict report_dict(const MetricReport& r) {
  py::dict d;
  d["model"] = r.model;
  d["farm_score"] = r.farm_score;
  d["n_samples"] = r.samples.size();
  std::vector<double> scores;
  for (const auto& s : r.samples) scores.push_back(s.score);
  d["sample_scores"] = scores;
  return d;
}

std::vector<std::uint8_t> as_mask(const std::vector<bool>& v) { return {v.begin(), v.end()}; }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Wind-power forecasting toolkit";

  static py::exception<Error> error(m, "WindfcError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_static("from_text", &RunConfig::from_text)
      .def_static("load", &RunConfig::load)
      .def("to_text", &RunConfig::to_text)
      .def("save", &RunConfig::save)
      .def("validate", &RunConfig::validate)
      .def("set_seed", &RunConfig::set_seed)
      .def("override", &RunConfig::apply_override, py::arg("assignment"))
      .def("resolve", &RunConfig::resolve)
      .def_readwrite("precision", &RunConfig::precision)
      .def_property(
          "data_path", [](const RunConfig& c) { return c.data.path; },
          [](RunConfig& c, const std::string& p) { c.data.path = p; })
      .def_property(
          "output_dir", [](const RunConfig& c) { return c.paths.output_dir; },
          [](RunConfig& c, const std::string& p) { c.paths.output_dir = p; })
      .def("__repr__", &RunConfig::to_text);

  m.def(
      "synth_csv",
      [](std::size_t n_turbines, std::size_t n_days, std::uint64_t seed, double invalid_fraction,
         double daily_amplitude, double noise_std) {
        return generate_csv(synth_spec(n_turbines, n_days, seed, invalid_fraction, daily_amplitude, noise_std));
      },
      py::arg("n_turbines") = 2, py::arg("n_days") = 20, py::arg("seed") = 2022, py::arg("invalid_fraction") = 0.0,
      py::arg("daily_amplitude") = 150.0, py::arg("noise_std") = 25.0,
      "Synthetic SCADA CSV text in the SDWPF column layout.");

  m.def(
      "write_synth_csv",
      [](const std::string& path, std::size_t n_turbines, std::size_t n_days, std::uint64_t seed,
         double invalid_fraction) {
        write_synth_csv(path, synth_spec(n_turbines, n_days, seed, invalid_fraction, 150.0, 25.0));
      },
      py::arg("path"), py::arg("n_turbines") = 2, py::arg("n_days") = 20, py::arg("seed") = 2022,
      py::arg("invalid_fraction") = 0.0);

  m.def(
      "inspect",
      [](const RunConfig& config) {
        const auto s = summarize(load_dataset(config), config.data.schema);
        py::dict d;
        d["n_turbines"] = s.n_turbines;
        d["n_days"] = s.n_days;
        d["n_steps"] = s.n_steps;
        d["absent_pct"] = s.absent_pct;
        d["invalid_pct"] = s.invalid_pct;
        py::dict roles;
        for (const auto& r : s.roles) {
          py::dict rd;
          rd["column"] = r.column;
          rd["missing_pct"] = r.missing_pct;
          rd["invalid_pct"] = r.invalid_pct;
          roles[py::str(r.role)] = rd;
        }
        d["roles"] = roles;
        return d;
      },
      py::arg("config"), "Dataset summary for the configured CSV.");

  m.def(
      "train",
      [](const RunConfig& config) {
        std::ostringstream log;
        TrainOutcome out;
        {
          py::gil_scoped_release release;
          out = run_train(config, log);
        }
        py::dict d;
        d["epoch_loss"] = out.epoch_loss;
        d["optimizer_steps"] = out.optimizer_steps;
        d["skipped_batches"] = out.skipped_batches;
        d["artifacts"] = out.artifacts;
        d["log"] = log.str();
        return d;
      },
      py::arg("config"), "Trains and writes artifacts to the output directory.");

  m.def(
      "predict",
      [](const RunConfig& config, std::optional<std::size_t> input_begin) {
        const Forecast f = run_predict(config, input_begin);
        py::array_t<double> values({f.turbine_ids.size(), f.horizon});
        std::copy(f.values.begin(), f.values.end(), values.mutable_data());
        py::dict d;
        d["turbine_ids"] = f.turbine_ids;
        d["first_target_step"] = f.first_target_step;
        d["values"] = values;
        return d;
      },
      py::arg("config"), py::arg("input_begin") = py::none(),
      "Post-processed forecast [turbines, horizon] in kW from saved artifacts.");

  m.def(
      "evaluate",
      [](const RunConfig& config) {
        std::ostringstream out;
        BacktestResult r;
        {
          py::gil_scoped_release release;
          r = run_evaluate(config, out);
        }
        py::dict d;
        d["model"] = report_dict(r.model);
        d["persistence"] = report_dict(r.persistence);
        d["sample_starts"] = r.sample_starts;
        d["table"] = out.str();
        return d;
      },
      py::arg("config"), "Backtests the saved model against persistence on the validation split.");

  m.def(
      "grad_suite",
      [](std::size_t trials, std::uint64_t seed, bool include_model) {
        GradSuiteOptions o;
        o.trials = trials;
        o.seed = seed;
        o.include_model = include_model;
        const auto report = run_grad_suite(o);
        py::list checks;
        for (const auto& c : report.checks) {
          py::dict d;
          d["op"] = c.op;
          d["trials"] = c.trials;
          d["max_rel_error"] = c.max_rel_error;
          d["tolerance"] = c.tolerance;
          d["passed"] = c.passed;
          checks.append(d);
        }
        return checks;
      },
      py::arg("trials") = 100, py::arg("seed") = 2022, py::arg("include_model") = true);

  m.def(
      "masked_mae",
      [](const std::vector<double>& pred, const std::vector<double>& truth, const std::vector<bool>& valid) {
        return masked_mae(pred, truth, as_mask(valid));
      },
      py::arg("pred"), py::arg("truth"), py::arg("valid"));
  m.def(
      "masked_rmse",
      [](const std::vector<double>& pred, const std::vector<double>& truth, const std::vector<bool>& valid) {
        return masked_rmse(pred, truth, as_mask(valid));
      },
      py::arg("pred"), py::arg("truth"), py::arg("valid"));
  m.def(
      "score_sample",
      [](const std::map<int, std::vector<double>>& preds, const std::map<int, std::vector<double>>& truths,
         const std::map<int, std::vector<bool>>& valid, double unit_divisor) {
        std::map<int, std::vector<std::uint8_t>> masks;
        for (const auto& [id, v] : valid) masks[id] = as_mask(v);
        return score_sample(preds, truths, masks, {unit_divisor, true}).score;
      },
      py::arg("preds"), py::arg("truths"), py::arg("valid"), py::arg("unit_divisor") = 1000.0);

  m.def(
      "param_count", [](const RunConfig& config) { return param_count(config.model); }, py::arg("config"));
}
