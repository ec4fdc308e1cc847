#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ml2bf/anova.hpp"
#include "ml2bf/errors.hpp"
#include "ml2bf/harness/config.hpp"
#include "ml2bf/harness/experiments.hpp"
#include "ml2bf/harness/io.hpp"
#include "ml2bf/modelspace.hpp"
#include "ml2bf/shibata.hpp"

namespace ml2bf::harness {

/// Files written by one run, relative to the output directory.
struct RunReport {
  std::vector<std::string> outputs;
  std::map<std::string, std::string> effective;
};

namespace detail {

template <typename T>
std::string join(const std::vector<T> &v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_same_v<T, std::string>) {
      out += v[i];
    } else {
      out += format_number(static_cast<double>(v[i]));
    }
  }
  return out;
}

inline std::string method_list(const std::vector<PriorMethod> &methods) {
  std::vector<std::string> names;
  for (const auto &m : methods) names.push_back(m.name());
  return join(names);
}

inline void common_effective(const ExperimentConfig &cfg, RunReport &report) {
  report.effective["experiment"] = cfg.experiment;
  if (cfg.seed) report.effective["seed"] = std::to_string(*cfg.seed);
  report.effective["replicates"] = std::to_string(cfg.replicates);
  report.effective["threads"] = std::to_string(cfg.threads);
}

}  // namespace detail

inline Table1Config table1_config(const ExperimentConfig &cfg, RunReport &report) {
  const Settings &s = cfg.overrides;
  const std::string profile = s.get_string("profile", "published");
  Table1Config t;
  if (profile == "published") {
    t = table1_published_profile();
  } else if (profile != "exact") {
    throw ConfigError("table1 profile must be 'published' or 'exact'");
  }
  t.seed = cfg.require_seed();
  t.replicates = cfg.replicates;
  t.threads = cfg.threads;
  t.sample_sizes = s.get_ints("sample_sizes", t.sample_sizes);
  t.correlations = s.get_doubles("correlations", t.correlations);
  const auto beta = s.get_doubles("beta", {t.beta(0), t.beta(1)});
  if (beta.size() != 2) throw ConfigError("table1 beta needs two entries");
  t.beta = {beta[0], beta[1]};
  t.alpha = s.get_double("alpha", t.alpha);
  t.share_noise_across_n = s.get_bool("share_noise_across_n", t.share_noise_across_n);
  if (!cfg.methods.empty()) {
    t.methods = cfg.methods;
    t.model_priors.clear();
  }
  if (const auto mp = s.raw("model_prior")) {
    t.model_priors.assign(t.methods.size(), parse_prior(*mp));
  }
  report.effective["profile"] = profile;
  report.effective["sample_sizes"] = detail::join(t.sample_sizes);
  report.effective["correlations"] = detail::join(t.correlations);
  report.effective["beta"] = detail::join(beta);
  report.effective["alpha"] = format_number(t.alpha);
  report.effective["share_noise_across_n"] = t.share_noise_across_n ? "true" : "false";
  report.effective["methods"] = detail::method_list(t.methods);
  std::vector<std::string> priors;
  for (std::size_t i = 0; i < t.methods.size(); ++i) priors.push_back(prior_name(t.prior_for(i)));
  report.effective["model_priors"] = detail::join(priors);
  return t;
}

inline FigureConfig figure_config(const ExperimentConfig &cfg, RunReport &report) {
  const Settings &s = cfg.overrides;
  FigureConfig f;
  f.design = cfg.experiment == "figure_ortho" ? FigureConfig::Design::orthogonal : FigureConfig::Design::ar1;
  if (const auto d = s.raw("design")) {
    if (*d == "orthogonal") {
      f.design = FigureConfig::Design::orthogonal;
    } else if (*d == "ar1") {
      f.design = FigureConfig::Design::ar1;
    } else {
      throw ConfigError("design must be 'orthogonal' or 'ar1'");
    }
  }
  f.seed = cfg.require_seed();
  f.replicates = cfg.replicates;
  f.threads = cfg.threads;
  f.n = s.get_int("n", f.n);
  f.rho = s.get_double("rho", f.rho);
  f.alpha = s.get_double("alpha", f.alpha);
  f.sigma2 = s.get_double("sigma2", f.sigma2);
  f.g_values = s.get_doubles("g_values", f.g_values);
  f.k_values = s.get_ints("k_values", f.k_values);
  if (const auto mp = s.raw("model_prior")) f.model_prior = parse_prior(*mp);
  if (!cfg.methods.empty()) f.methods = cfg.methods;
  if (!(f.sigma2 > 0.0)) throw ConfigError("sigma2 must be positive");
  report.effective["design"] = f.design_name();
  report.effective["n"] = std::to_string(f.n);
  report.effective["p"] = std::to_string(f.p);
  report.effective["rho"] = format_number(f.rho);
  report.effective["alpha"] = format_number(f.alpha);
  report.effective["sigma2"] = format_number(f.sigma2);
  report.effective["g_values"] = detail::join(f.g_values);
  report.effective["k_values"] = detail::join(f.k_values);
  report.effective["model_prior"] = prior_name(f.model_prior);
  report.effective["methods"] = detail::method_list(f.methods);
  return f;
}

inline shibata::ShibataConfig shibata_config(const ExperimentConfig &cfg, RunReport &report) {
  const Settings &s = cfg.overrides;
  const int preset = s.get_int("preset", 1);
  shibata::ShibataConfig c = shibata::ShibataConfig::preset(preset);
  c.n = s.get_int("n", c.n);
  c.k = s.get_int("k", c.k);
  c.sigma2 = s.get_double("sigma2", c.sigma2);
  c.refit_per_model = s.get_bool("refit_per_model", c.refit_per_model);
  c.aic_penalty = s.get_double("aic_penalty", c.aic_penalty);
  c.loss = shibata::parse_loss(s.get_string("loss", shibata::loss_name(c.loss)));
  c.seed = cfg.require_seed();
  c.replicates = cfg.replicates;
  c.threads = cfg.threads;
  if (!cfg.methods.empty()) throw ConfigError("shibata runs its own fixed method set; drop --methods");
  c.check();
  report.effective["preset"] = std::to_string(preset);
  report.effective["n"] = std::to_string(c.n);
  report.effective["k"] = std::to_string(c.k);
  report.effective["sigma2"] = format_number(c.sigma2);
  report.effective["refit_per_model"] = c.refit_per_model ? "true" : "false";
  report.effective["aic_penalty"] = format_number(c.aic_penalty);
  report.effective["loss"] = shibata::loss_name(c.loss);
  return c;
}

inline anova::Method parse_anova_method(const std::string &v) {
  if (v == "fixed_normal") return anova::Method::fixed_normal;
  if (v == "bic_r") return anova::Method::bic_r;
  if (v == "ml2" || v == "ml") return anova::Method::ml2;
  throw ConfigError("anova method must be fixed_normal, bic_r or ml2, got '" + v + "'");
}

inline void write_table1(const std::vector<Table1Row> &rows, const std::filesystem::path &path) {
  CsvTable t({"n", "r", "method", "avg_prob", "se", "replicates", "model_prior"});
  for (const auto &r : rows) t.row().cell(r.n).cell(r.r).cell(r.method).cell(r.avg_prob).cell(r.se).cell(r.replicates).cell(r.model_prior);
  t.save(path);
}

inline void write_figure_loss(const std::vector<FigureLossRow> &rows, const std::filesystem::path &path) {
  CsvTable t({"design", "g", "k", "method", "selector", "avg_loss", "se", "replicates"});
  for (const auto &r : rows)
    t.row().cell(r.design).cell(r.g).cell(r.k).cell(r.method).cell(r.selector).cell(r.avg_loss).cell(r.se).cell(r.replicates);
  t.save(path);
}

inline void write_figure_diag(const std::vector<FigureDiagRow> &rows, const std::filesystem::path &path) {
  CsvTable t({"design", "g", "k", "method", "entropy", "se_entropy", "mpm_match_rate", "se_mpm_match", "avg_mpm_size",
              "se_mpm_size", "hpm_match_rate", "se_hpm_match", "replicates"});
  for (const auto &r : rows) {
    t.row().cell(r.design).cell(r.g).cell(r.k).cell(r.method).cell(r.entropy).cell(r.se_entropy).cell(r.mpm_match_rate)
        .cell(r.se_mpm_match).cell(r.avg_mpm_size).cell(r.se_mpm_size).cell(r.hpm_match_rate).cell(r.se_hpm_match)
        .cell(r.replicates);
  }
  t.save(path);
}

inline void write_shibata(const std::vector<shibata::ShibataRow> &rows, const std::filesystem::path &path) {
  CsvTable t({"scenario", "method", "selector", "avg_loss", "avg_size", "replicates", "seed", "se_loss", "se_size",
              "avg_coef_loss", "se_coef_loss", "avg_integral_loss", "se_integral_loss"});
  for (const auto &r : rows) {
    t.row().cell(r.scenario).cell(shibata::method_name(r.method)).cell(shibata::selector_name(r.selector))
        .cell(r.avg_loss).cell(r.avg_size).cell(r.replicates).cell(r.seed).cell(r.se_loss).cell(r.se_size)
        .cell(r.avg_coef_loss).cell(r.se_coef_loss).cell(r.avg_integral_loss).cell(r.se_integral_loss);
  }
  t.save(path);
}

inline void write_anova(const std::vector<anova::TrajectoryRow> &rows, const std::filesystem::path &path) {
  CsvTable t({"p", "method", "avg_prob_true", "replicates", "se"});
  for (const auto &r : rows) t.row().cell(r.p).cell(anova::method_name(r.method)).cell(r.avg_prob_true).cell(r.replicates).cell(r.se);
  t.save(path);
}

inline nlohmann::json bf_json(const std::vector<BfResult> &results) {
  nlohmann::json out = nlohmann::json::array();
  auto one_based = [](const Model &m) {
    std::vector<int> v;
    for (int j : m) v.push_back(j + 1);
    return v;
  };
  for (const auto &r : results) {
    out.push_back({{"method", r.method},
                   {"hpm", one_based(r.hpm)},
                   {"mpm", one_based(r.mpm)},
                   {"inclusion_probs", r.inclusion},
                   {"entropy", entropy(r.posterior)},
                   {"posterior", to_json(r.posterior)}});
  }
  return out;
}

/// Runs the configured experiment and writes its CSV/JSON files plus the
/// sidecar `<experiment>.meta.json`.
inline RunReport run_experiment(const ExperimentConfig &cfg, const std::string &version) {
  RunReport report;
  detail::common_effective(cfg, report);
  const auto dir = prepare_output_dir(cfg.output_dir);
  const Settings &s = cfg.overrides;

  if (cfg.experiment == "table1") {
    const auto t = table1_config(cfg, report);
    s.reject_unused();
    write_table1(run_table1(t), dir / "table1.csv");
    report.outputs.push_back("table1.csv");
  } else if (cfg.experiment == "figure_ortho" || cfg.experiment == "figure_ar1" || cfg.experiment == "figure_diag") {
    const auto f = figure_config(cfg, report);
    s.reject_unused();
    const auto result = run_figure_sims(f);
    if (cfg.experiment != "figure_diag") {
      write_figure_loss(result.loss, dir / (cfg.experiment + ".csv"));
      report.outputs.push_back(cfg.experiment + ".csv");
      write_figure_diag(result.diag, dir / (cfg.experiment + "_diag.csv"));
      report.outputs.push_back(cfg.experiment + "_diag.csv");
    } else {
      write_figure_diag(result.diag, dir / "figure_diag.csv");
      report.outputs.push_back("figure_diag.csv");
    }
  } else if (cfg.experiment == "anova") {
    const int r = s.get_int("r", 3);
    const auto p_grid = s.get_ints("p_grid", {10, 100, 1000, 10000});
    const std::string tau = s.get_string("tau2", "null");
    std::optional<anova::AnovaTruth> truth;
    if (tau != "null") {
      truth = anova::AnovaTruth{Settings::parse_double("tau2", tau)};
      if (!(truth->tau2 >= 0.0)) throw ConfigError("tau2 must be non-negative");
    }
    std::vector<anova::Method> methods;
    for (const auto &m : split(s.get_string("anova_methods", "fixed_normal,bic_r,ml2"), ','))
      methods.push_back(parse_anova_method(m));
    if (!cfg.methods.empty()) throw ConfigError("anova uses anova_methods, not --methods");
    s.reject_unused();
    report.effective["r"] = std::to_string(r);
    report.effective["p_grid"] = detail::join(p_grid);
    report.effective["tau2"] = tau;
    std::vector<std::string> names;
    for (auto m : methods) names.push_back(anova::method_name(m));
    report.effective["anova_methods"] = detail::join(names);
    write_anova(anova::simulate_consistency(truth, r, p_grid, cfg.replicates, cfg.require_seed(), methods),
                dir / "anova.csv");
    report.outputs.push_back("anova.csv");
  } else if (cfg.experiment == "shibata") {
    const auto c = shibata_config(cfg, report);
    s.reject_unused();
    write_shibata(shibata::run_shibata(c), dir / "shibata.csv");
    report.outputs.push_back("shibata.csv");
  } else if (cfg.experiment == "bf") {
    auto methods = cfg.methods.empty()
                       ? std::vector<PriorMethod>{PriorMethod::ml2(), PriorMethod::lb(), PriorMethod::bic(),
                                                  PriorMethod::bic_prior(), PriorMethod::zs(), PriorMethod::ghat()}
                       : cfg.methods;
    const auto prior = parse_prior(s.get_string("model_prior", "uniform_over_models"));
    s.reject_unused();
    report.effective["dataset"] = cfg.dataset;
    report.effective["methods"] = detail::method_list(methods);
    report.effective["model_prior"] = prior_name(prior);
    const Dataset data = load_dataset_csv(cfg.dataset);
    save_json(dir / "bf.json", bf_json(run_bf(data, methods, prior)));
    report.outputs.push_back("bf.json");
  } else {
    throw ConfigError("unknown experiment '" + cfg.experiment + "'");
  }

  save_json(dir / (cfg.experiment + ".meta.json"), sidecar(cfg, version, report.effective, report.outputs));
  report.outputs.push_back(cfg.experiment + ".meta.json");
  return report;
}

}  // namespace ml2bf::harness
