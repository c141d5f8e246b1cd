// windfc: command-line front end for the wind power forecasting pipeline.

#include <cstdint>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "windfc/autodiff/ops.hpp"
#include "windfc/config.hpp"
#include "windfc/error.hpp"
#include "windfc/gradsuite.hpp"
#include "windfc/pipeline.hpp"
#include "windfc/synthdata.hpp"

namespace {

int cmd_gradcheck(const std::string& fault, std::size_t trials) {
  windfc::GradSuiteOptions options;
  options.trials = trials;
  if (!fault.empty()) windfc::ad::debug::break_backward(fault);
  const auto report = windfc::run_grad_suite(options);
  windfc::ad::debug::clear_broken_backward();
  for (const auto& c : report.checks) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << std::left << std::setw(18) << c.op << " max rel err "
              << std::scientific << std::setprecision(3) << c.max_rel_error << " (tol " << c.tolerance << ", "
              << std::defaultfloat << c.elements << " elements)\n";
  }
  std::cout << "runtime " << std::fixed << std::setprecision(2) << report.seconds << " s\n";
  return report.all_passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wind power forecasting: train, predict and evaluate an encoder forecaster"};
  app.require_subcommand(0, 1);

  std::string config_path;
  bool show_config = false;
  std::optional<std::uint64_t> seed;
  std::string output_dir;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_flag("--show-config", show_config, "Print the effective configuration and exit");
  app.add_option("--seed", seed, "Override every seed");
  app.add_option("--output-dir", output_dir, "Directory for artifacts and reports");
  app.add_option("overrides", overrides, "Config overrides as dotted.key=value");

  auto* inspect = app.add_subcommand("inspect", "Summarize the dataset");
  auto* train = app.add_subcommand("train", "Fit scaler, daily profile and model; write artifacts");
  auto* predict = app.add_subcommand("predict", "Forecast the steps after an input window");
  std::optional<std::size_t> input_begin;
  predict->add_option("--input-begin", input_begin, "Global step of the first input step (default: last window)");
  auto* evaluate = app.add_subcommand("evaluate", "Backtest against persistence on the validation days");
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference checks of every autodiff primitive");
  std::string fault;
  std::size_t trials = 100;
  gradcheck->add_option("--inject-fault", fault, "Corrupt one primitive's backward pass (negative control)")
      ->check(CLI::IsMember(windfc::grad_suite_ops()));
  gradcheck->add_option("--trials", trials, "Random shapes per primitive")->check(CLI::PositiveNumber);

  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset in the SCADA CSV layout");
  windfc::SynthSpec spec;
  std::string synth_out;
  synth->add_option("output", synth_out, "CSV path")->required();
  synth->add_option("--turbines", spec.n_turbines, "Number of turbines");
  synth->add_option("--days", spec.n_days, "Number of days");
  synth->add_option("--invalid-fraction", spec.invalid_fraction, "Share of steps made invalid");
  synth->add_option("--daily-amplitude", spec.daily_amplitude, "Daily power swing in kW");
  synth->add_option("--noise-std", spec.noise_std, "Power noise in kW");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // help and version requests exit 0; usage errors exit 2
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    windfc::RunConfig config = config_path.empty() ? windfc::RunConfig{} : windfc::RunConfig::load(config_path);
    for (const auto& o : overrides) config.apply_override(o);
    if (seed) config.set_seed(*seed);
    if (!output_dir.empty()) config.paths.output_dir = output_dir;

    if (show_config) {
      std::cout << config.to_text();
      return 0;
    }
    if (*synth) {
      if (seed) spec.seed = *seed;
      windfc::write_synth_csv(synth_out, spec);
      std::cout << "wrote " << spec.n_turbines << " turbines x " << spec.n_days << " days to " << synth_out << "\n";
      return 0;
    }
    if (*gradcheck) return cmd_gradcheck(fault, trials);
    if (*inspect) {
      const auto series = windfc::load_dataset(config);
      windfc::print_summary(std::cout, windfc::summarize(series, config.data.schema));
      return 0;
    }
    if (*train) {
      const auto outcome = windfc::run_train(config, std::cout);
      for (const auto& path : outcome.artifacts) std::cout << "wrote " << path << "\n";
      return 0;
    }
    if (*predict) {
      const auto forecast = windfc::run_predict(config, input_begin);
      windfc::echo_config(config);
      const std::string path = config.resolve(config.paths.forecast);
      windfc::write_forecast_csv(path, forecast);
      std::cout << "wrote " << forecast.turbine_ids.size() << " x " << forecast.horizon << " forecasts to " << path
                << "\n";
      return 0;
    }
    if (*evaluate) {
      windfc::run_evaluate(config, std::cout);
      std::cout << "wrote " << config.resolve(config.paths.report) << " and "
                << config.resolve(config.paths.persistence_report) << "\n";
      return 0;
    }
    std::cout << app.help();
    return 0;
  } catch (const windfc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
