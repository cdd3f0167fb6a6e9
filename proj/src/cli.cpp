#include "irt/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "irt/analysis.hpp"
#include "irt/error.hpp"
#include "irt/io.hpp"
#include "irt/synthetic.hpp"
#include "irt/variational.hpp"

namespace irt::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string responses;
  std::string format = "csv";
  std::uint64_t seed = 0;
  FitConfig fit;
  std::optional<double> sigma_alpha;
  bool sweep = false;
  double percentile = 75.0;
  double gamma_threshold = 0.5;
  std::string exclude_responders;
  std::optional<Eigen::Index> exclude_top_k;
  bool exclude_unanimous = false;
  double stability_threshold = 0.02;
  std::string out_dir;
  bool fail_on_degenerate = false;
  // simulate
  std::string generator;
  bool canonical = false;
  // analyze
  std::string fit_json;
  std::string truth_dir;
};

ResponseFormat parse_format(const std::string& f) {
  if (f == "csv") return ResponseFormat::Csv;
  if (f == "jsonl") return ResponseFormat::Jsonl;
  throw ConfigError("unknown format '" + f + "' (expected csv or jsonl)");
}

void require_input_file(const std::string& path, const char* flag) {
  if (path.empty()) throw ConfigError(std::string(flag) + " is required");
  if (!fs::is_regular_file(path)) throw IoError("cannot read " + path);
}

void prepare_out_dir(const std::string& dir) {
  if (dir.empty()) throw ConfigError("--out is required");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir);
}

std::vector<std::string> split_ids(const std::string& ids) {
  std::vector<std::string> out;
  std::stringstream ss(ids);
  std::string id;
  while (std::getline(ss, id, ',')) {
    if (!id.empty()) out.push_back(id);
  }
  return out;
}

struct FitOutcome {
  FitResult fit;
  FitMetadata meta;
};

// Writes the resolved configuration before any optimisation so a crashed run
// still records what it was asked to do.
void write_provisional_fit_json(const Options& o, const std::string& command,
                                const FitConfig& config) {
  nlohmann::json j;
  j["command"] = command;
  j["status"] = "running";
  j["responses"] = o.responses;
  j["seed"] = config.seed;
  j["config"] = fit_config_to_json(config);
  j["sigma_alpha"] = o.sigma_alpha ? nlohmann::json(*o.sigma_alpha) : nlohmann::json(nullptr);
  j["sweep"] = o.sweep;
  write_text_file(fs::path(o.out_dir) / "fit.json", j.dump(2) + "\n");
}

FitOutcome run_fit(const ResponseMatrix& data, const Options& o, const std::string& command,
                   std::ostream& out) {
  FitOutcome r;
  r.meta.command = command;
  r.meta.responses_path = o.responses;
  if (o.sweep) {
    auto sweep = sweep_sigma_alpha(data, o.fit);
    for (const auto& run : sweep.runs) {
      out << "sigma_alpha " << fixed6(run.sigma_alpha) << " final_elbo " << fixed6(run.final_elbo)
          << (run.degenerate ? " degenerate" : "") << '\n';
    }
    r.meta.chosen_sigma = sweep.chosen_sigma;
    r.meta.sweep_runs = sweep.runs;
    r.fit = std::move(sweep.best);
  } else {
    const PriorConfig prior{o.sigma_alpha.value_or(0.4)};
    r.fit = fit(data, prior, o.fit);
    r.meta.chosen_sigma = prior.log_alpha_sigma;
  }
  out << "final_elbo " << fixed6(r.fit.final_elbo) << " theta_star " << fixed6(r.fit.theta_star)
      << (r.fit.degenerate ? " degenerate" : "") << '\n';
  return r;
}

int finish(const FitResult& fit, const Options& o) {
  return (fit.degenerate && o.fail_on_degenerate) ? kDegenerate : kOk;
}

int cmd_fit(const Options& o, const std::string& command, std::ostream& out) {
  require_input_file(o.responses, "--responses");
  const auto format = parse_format(o.format);
  const auto data = load_responses(o.responses, format);
  prepare_out_dir(o.out_dir);
  write_provisional_fit_json(o, command, o.fit);
  auto [fit, meta] = run_fit(data, o, command, out);
  write_report(o.out_dir, data, fit, meta, dataset_summaries(fit, data, o.gamma_threshold));
  return finish(fit, o);
}

int cmd_simulate(const Options& o, std::ostream& out, bool seed_given) {
  GeneratorSpec spec;
  if (o.canonical) {
    spec = canonical_fixture_spec();
  } else {
    require_input_file(o.generator, "--config");
    spec = generator_from_json(read_json_file(o.generator));
  }
  if (seed_given) spec.seed = o.seed;
  prepare_out_dir(o.out_dir);
  const fs::path dir(o.out_dir);
  write_text_file(dir / "generator.json", generator_to_json(spec).dump(2) + "\n");
  const auto truth = sample_truth(spec);
  const auto data = simulate_responses(truth, spec.seed + 1);
  std::ostringstream ss;
  write_responses_csv(ss, data);
  write_text_file(dir / "responses.csv", ss.str());
  write_truth(dir, truth);
  out << "simulated " << data.n_responders() << " responders x " << data.n_items() << " items\n";
  return kOk;
}

nlohmann::json recovery_to_json(const RecoveryReport& r) {
  nlohmann::json datasets = nlohmann::json::array();
  for (const auto& d : r.datasets) {
    datasets.push_back({{"dataset_id", d.dataset_id},
                        {"true_leh_p75", d.true_leh_p75},
                        {"fit_leh_p75", d.fit_leh_p75}});
  }
  return {{"pearson_theta", r.pearson_theta},
          {"spearman_theta", r.spearman_theta},
          {"pearson_beta", r.pearson_beta},
          {"pearson_log_alpha", r.pearson_log_alpha},
          {"pearson_leh", r.pearson_leh},
          {"mae_theta", r.mae_theta},
          {"mae_beta", r.mae_beta},
          {"mae_log_alpha", r.mae_log_alpha},
          {"mae_leh", r.mae_leh},
          {"leh_rank_matches", r.leh_rank_matches},
          {"datasets", datasets}};
}

int cmd_analyze(const Options& o, std::ostream& out) {
  require_input_file(o.responses, "--responses");
  require_input_file(o.fit_json, "--fit");
  const auto data = load_responses(o.responses, parse_format(o.format));
  const auto stored = read_json_file(o.fit_json);
  const auto fit = fit_from_json(stored, data);
  prepare_out_dir(o.out_dir);
  const fs::path dir(o.out_dir);
  const auto summaries = dataset_summaries(fit, data, o.gamma_threshold);
  std::ostringstream items, responders, datasets;
  write_items_csv(items, data, fit);
  write_responders_csv(responders, data, fit);
  write_datasets_csv(datasets, summaries);
  write_text_file(dir / "items.csv", items.str());
  write_text_file(dir / "responders.csv", responders.str());
  write_text_file(dir / "datasets.csv", datasets.str());

  const auto split = guessing_filter(fit, o.gamma_threshold);
  std::ostringstream pairs;
  pairs << "responder_id,theta_mu,mean_accuracy\n";
  for (const auto& p : ability_accuracy_pairs(fit, data)) {
    pairs << data.responder_ids()[static_cast<std::size_t>(p.responder)] << ','
          << fixed6(p.theta) << ',' << fixed6(p.accuracy) << '\n';
  }
  write_text_file(dir / "ability_accuracy.csv", pairs.str());

  nlohmann::json analysis = {{"theta_star", fit.theta_star},
                             {"gamma_threshold", o.gamma_threshold},
                             {"gamma_kept_fraction", split.kept_fraction},
                             {"gamma_kept", split.kept.size()},
                             {"gamma_filtered", split.filtered.size()}};
  const auto unanimous = unanimous_items(data);
  analysis["unanimous_all_correct"] = unanimous.all_correct.size();
  analysis["unanimous_all_incorrect"] = unanimous.all_incorrect.size();
  if (!o.truth_dir.empty()) {
    const auto truth = read_truth(o.truth_dir);
    const auto recovery = recovery_metrics(truth, fit);
    analysis["recovery"] = recovery_to_json(recovery);
    out << "recovery pearson_beta " << fixed6(recovery.pearson_beta) << " pearson_log_alpha "
        << fixed6(recovery.pearson_log_alpha) << " spearman_theta "
        << fixed6(recovery.spearman_theta) << " leh_rank_matches " << recovery.leh_rank_matches
        << '\n';
  }
  write_text_file(dir / "analysis.json", analysis.dump(2) + "\n");
  out << "gamma kept fraction " << fixed6(split.kept_fraction) << '\n';
  return kOk;
}

int cmd_stability(const Options& o, std::ostream& out) {
  require_input_file(o.responses, "--responses");
  const auto data = load_responses(o.responses, parse_format(o.format));
  prepare_out_dir(o.out_dir);
  write_provisional_fit_json(o, "stability", o.fit);
  auto full = run_fit(data, o, "stability", out);

  std::vector<Eigen::Index> drop_responders;
  std::vector<Eigen::Index> drop_items;
  std::string name = "none";
  if (!o.exclude_responders.empty()) {
    name = "exclude-responders";
    for (const auto& id : split_ids(o.exclude_responders)) {
      const auto& ids = data.responder_ids();
      const auto it = std::find(ids.begin(), ids.end(), id);
      if (it == ids.end()) throw InputError("unknown responder id '" + id + "'");
      drop_responders.push_back(it - ids.begin());
    }
  } else if (o.exclude_top_k) {
    name = "exclude-top-" + std::to_string(*o.exclude_top_k);
    drop_responders = top_k_responders(full.fit, *o.exclude_top_k);
  } else if (o.exclude_unanimous) {
    name = "exclude-unanimous";
    drop_items = unanimous_items(data).all();
  }
  if (data.n_responders() - static_cast<Eigen::Index>(drop_responders.size()) < 2) {
    throw ConfigError("exclusion leaves fewer than 2 responders");
  }
  if (static_cast<Eigen::Index>(drop_items.size()) >= data.n_items()) {
    throw ConfigError("exclusion removes every item");
  }

  const bool empty = drop_responders.empty() && drop_items.empty();
  const ResponseMatrix reduced =
      empty ? data : data.without_responders(drop_responders).without_items(drop_items);
  FitResult excluded;
  if (empty) {
    excluded = full.fit;
  } else {
    // The reduced fit reuses the prior scale the full fit settled on.
    excluded = fit(reduced, full.fit.prior, full.fit.config);
  }
  out << "excluded " << drop_responders.size() << " responders, " << drop_items.size()
      << " items\n";

  std::vector<NamedStability> reports;
  for (const auto statistic : {Statistic::Leh, Statistic::LogAlpha}) {
    NamedStability s{name, statistic, o.percentile,
                     stability_check(full.fit, data, excluded, reduced, statistic, o.percentile,
                                     o.stability_threshold)};
    out << (statistic == Statistic::Leh ? "leh" : "log_alpha") << " pearson "
        << fixed6(s.report.pearson_r) << " median_abs_diff " << fixed6(s.report.median_abs_diff)
        << '\n';
    reports.push_back(std::move(s));
  }
  write_report(o.out_dir, data, full.fit, full.meta,
               dataset_summaries(full.fit, data, o.gamma_threshold), reports);
  FitMetadata meta = full.meta;
  meta.command = "stability-excluded";
  write_report(fs::path(o.out_dir) / "excluded", reduced, excluded, meta,
               dataset_summaries(excluded, reduced, o.gamma_threshold));
  return (full.fit.degenerate || excluded.degenerate) && o.fail_on_degenerate ? kDegenerate : kOk;
}

void add_fit_options(CLI::App* app, Options& o) {
  app->add_option("--responses", o.responses, "Long-format response file");
  app->add_option("--format", o.format, "csv or jsonl")->check(CLI::IsMember({"csv", "jsonl"}));
  app->add_option("--seed", o.seed, "Random seed");
  app->add_option("--steps", o.fit.steps, "Optimisation steps")->check(CLI::PositiveNumber);
  app->add_option("--lr", o.fit.learning_rate, "Adam learning rate")->check(CLI::PositiveNumber);
  app->add_option("--mc-samples", o.fit.mc_samples, "Monte Carlo samples per step")
      ->check(CLI::PositiveNumber);
  app->add_option("--eval-samples", o.fit.eval_samples, "Samples for the final ELBO estimate")
      ->check(CLI::PositiveNumber);
  app->add_option("--weight-scale", o.fit.weight_scale,
                  "Numerator of inverse-dataset-size weights (<= 0: n_items / n_datasets)");
  auto* sigma = app->add_option("--sigma-alpha", o.sigma_alpha, "Prior sd of log alpha");
  auto* sweep = app->add_flag("--sweep", o.sweep, "Search sigma_alpha over 0.25..0.50");
  sigma->excludes(sweep);
  app->add_option("--gamma-threshold", o.gamma_threshold, "Guessing filter threshold")
      ->check(CLI::Range(0.0, 1.0));
  app->add_option("--out", o.out_dir, "Output directory");
  app->add_flag("--fail-on-degenerate", o.fail_on_degenerate, "Exit 3 on a degenerate fit");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Variational 3PL IRT fitting and test-set headroom analysis", "irtvi"};
  app.require_subcommand(1);

  auto* fit_cmd = app.add_subcommand("fit", "Fit the 3PL model and write a report");
  add_fit_options(fit_cmd, o);
  auto* sweep_cmd = app.add_subcommand("sweep", "Fit over the sigma_alpha grid, keep the best");
  add_fit_options(sweep_cmd, o);
  auto* stab_cmd = app.add_subcommand("stability", "Compare a full fit with an exclusion refit");
  add_fit_options(stab_cmd, o);
  stab_cmd->add_option("--percentile", o.percentile, "Per-dataset percentile")
      ->check(CLI::Range(0.0, 100.0));
  stab_cmd->add_option("--threshold", o.stability_threshold, "Flag datasets differing by more");
  auto* ex_ids = stab_cmd->add_option("--exclude-responders", o.exclude_responders,
                                      "Comma-separated responder ids");
  auto* ex_top = stab_cmd->add_option("--exclude-top-k", o.exclude_top_k,
                                      "Drop the k highest-ability responders");
  auto* ex_una = stab_cmd->add_flag("--exclude-unanimous", o.exclude_unanimous,
                                    "Drop items every responder got right or wrong");
  ex_ids->excludes(ex_top)->excludes(ex_una);
  ex_top->excludes(ex_una);

  auto* sim_cmd = app.add_subcommand("simulate", "Sample ground truth and responses");
  sim_cmd->add_option("--config", o.generator, "Generator spec JSON");
  auto* canonical = sim_cmd->add_flag("--canonical", o.canonical, "Use the built-in fixture");
  auto* sim_seed = sim_cmd->add_option("--seed", o.seed, "Overrides the generator seed");
  sim_cmd->add_option("--out", o.out_dir, "Output directory");
  canonical->excludes(sim_cmd->get_option("--config"));

  auto* an_cmd = app.add_subcommand("analyze", "Recompute summaries from fit.json + responses");
  an_cmd->add_option("--responses", o.responses, "Long-format response file");
  an_cmd->add_option("--format", o.format, "csv or jsonl")->check(CLI::IsMember({"csv", "jsonl"}));
  an_cmd->add_option("--fit", o.fit_json, "fit.json from a previous run");
  an_cmd->add_option("--truth", o.truth_dir, "Directory with truth_*.csv for recovery metrics");
  an_cmd->add_option("--gamma-threshold", o.gamma_threshold, "Guessing filter threshold")
      ->check(CLI::Range(0.0, 1.0));
  an_cmd->add_option("--out", o.out_dir, "Output directory");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: input-error: " << e.what() << '\n';
    return kInputError;
  }

  o.fit.seed = o.seed;
  try {
    if (fit_cmd->parsed()) return cmd_fit(o, "fit", out);
    if (sweep_cmd->parsed()) {
      o.sweep = true;
      o.sigma_alpha.reset();
      return cmd_fit(o, "sweep", out);
    }
    if (stab_cmd->parsed()) return cmd_stability(o, out);
    if (sim_cmd->parsed()) return cmd_simulate(o, out, sim_seed->count() > 0);
    if (an_cmd->parsed()) return cmd_analyze(o, out);
  } catch (const NoValidRunError& e) {
    err << "error: " << e.category() << ": " << e.what() << '\n';
    return kDegenerate;
  } catch (const IoError& e) {
    err << "error: " << e.category() << ": " << e.what() << '\n';
    return kIoError;
  } catch (const Error& e) {
    err << "error: " << e.category() << ": " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception& e) {
    err << "error: input-error: " << e.what() << '\n';
    return kInputError;
  }
  return kOk;
}

}  // namespace irt::cli
