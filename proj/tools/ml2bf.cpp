#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ml2bf/ml2bf.hpp"

#ifndef ML2BF_VERSION
#define ML2BF_VERSION "0.1.0-unknown"
#endif

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

}  // namespace

int main(int argc, char **argv) {
  using namespace ml2bf;
  CLI::App app{"Bayes factors from maximum-likelihood priors: experiment harness", "ml2bf"};
  app.set_version_flag("--version", std::string(ML2BF_VERSION));

  std::string experiment;
  std::string dataset;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> replicates;
  std::optional<std::string> out_dir;
  std::optional<std::string> methods;
  std::optional<int> threads;
  std::vector<std::string> sets;

  app.add_option("experiment", experiment, "table1, figure_ortho, figure_ar1, figure_diag, anova, shibata or bf")
      ->required();
  app.add_option("dataset", dataset, "CSV data set (bf only)");
  app.add_option("--config", config_path, "INI file with key = value settings");
  app.add_option("--seed", seed, "Master seed (unsigned 64-bit)");
  app.add_option("--replicates", replicates, "Monte Carlo replicates");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--methods", methods, "Comma list from ml,lb,bic,bicprior,zs,zslaplace,ghat,aic");
  app.add_option("--threads", threads, "Worker threads");
  app.add_option("--set", sets, "Extra key=value setting; repeatable, wins over the config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    harness::Settings values;
    if (!config_path.empty()) values = harness::Settings(harness::load_ini(config_path));
    for (const auto &kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      values.set(harness::trim(kv.substr(0, eq)), harness::trim(kv.substr(eq + 1)));
    }
    if (seed) values.set("seed", std::to_string(*seed));
    if (replicates) values.set("replicates", std::to_string(*replicates));
    if (out_dir) values.set("out", *out_dir);
    if (methods) values.set("methods", *methods);
    if (threads) values.set("threads", std::to_string(*threads));
    if (!dataset.empty()) {
      if (experiment != "bf") throw ConfigError("a dataset argument is only accepted by 'bf'");
      values.set("dataset", dataset);
    }

    const auto cfg = harness::make_config(experiment, std::move(values));
    const auto report = harness::run_experiment(cfg, ML2BF_VERSION);
    for (const auto &f : report.outputs) std::cout << (std::filesystem::path(cfg.output_dir) / f).string() << '\n';
    return kExitOk;
  } catch (const ConfigError &e) {
    std::cerr << "ml2bf: config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InputError &e) {
    std::cerr << "ml2bf: input error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError &e) {
    std::cerr << "ml2bf: numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception &e) {
    std::cerr << "ml2bf: " << e.what() << '\n';
    return kExitNumerical;
  }
}
