#include "catebench/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "catebench/dataset.hpp"
#include "catebench/error.hpp"
#include "catebench/format.hpp"
#include "catebench/forest.hpp"
#include "catebench/linreg.hpp"
#include "catebench/synth.hpp"
#include "catebench/tlearner.hpp"
#include "catebench/treatcount.hpp"

namespace catebench {
namespace {

struct Flags {
  std::string input;
  std::string out;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> depth;
  std::optional<std::size_t> trees;
  std::optional<std::string> x2;
  std::optional<std::string> x1;
  std::optional<double> bin;
  unsigned threads = 0;
  bool no_bootstrap = false;
  bool quiet = false;
};

/// Fully resolved settings of one invocation.
struct RunConfig {
  std::string subcommand;
  std::string input;
  std::string out;
  SchemaConfig schema;
  LearnerConfig learner;
  std::optional<std::vector<int>> x2;
  std::optional<std::vector<double>> x1;
  bool quiet = false;
};

template <class T>
T parse_value(const std::string& key, const std::string& text) {
  try {
    if constexpr (std::is_floating_point_v<T>) {
      return static_cast<T>(parse_real(text));
    } else {
      const auto v = parse_integer(text);
      if (v < 0) throw std::invalid_argument("negative");
      return static_cast<T>(v);
    }
  } catch (const std::invalid_argument&) {
    throw Error(ErrorKind::InvalidArgument, key + ": invalid value '" + text + "'");
  }
}

// Precedence: command-line flag > config file > CATEBENCH_SEED > default.
RunConfig resolve(const std::string& subcommand, const Flags& f) {
  RunConfig rc;
  rc.subcommand = subcommand;
  rc.input = f.input;
  rc.out = f.out;
  rc.quiet = f.quiet;
  rc.learner.threads = f.threads;

  std::map<std::string, std::string> kv;
  if (!f.config.empty() && subcommand != "synth") kv = parse_key_values(read_text_file(f.config));
  rc.schema = SchemaConfig::from_key_values(kv);

  if (const char* env = std::getenv("CATEBENCH_SEED"); env && *env) {
    rc.learner.seed = parse_value<std::uint64_t>("CATEBENCH_SEED", env);
  }
  for (const auto& [key, value] : kv) {
    if (key == "seed") rc.learner.seed = parse_value<std::uint64_t>(key, value);
    else if (key == "depth") rc.learner.tree.max_depth = parse_value<int>(key, value);
    else if (key == "trees") rc.learner.n_trees = parse_value<std::size_t>(key, value);
    else if (key == "min_samples_split") rc.learner.tree.min_samples_split = parse_value<int>(key, value);
    else if (key == "min_samples_leaf") rc.learner.tree.min_samples_leaf = parse_value<int>(key, value);
    else if (key == "max_features") rc.learner.max_features = parse_value<std::size_t>(key, value);
    else if (key == "bootstrap") rc.learner.bootstrap = value == "true" || value == "1";
    else if (key == "x2") rc.x2 = parse_int_list(value);
    else if (key == "x1") rc.x1 = parse_real_list(value);
    else if (key == "bin" || key.rfind("column.", 0) == 0) continue;  // consumed by the schema
    else throw Error(ErrorKind::InvalidArgument, "config: unknown key '" + key + "'");
  }

  if (f.seed) rc.learner.seed = *f.seed;
  if (f.depth) rc.learner.tree.max_depth = *f.depth;
  if (f.trees) rc.learner.n_trees = *f.trees;
  if (f.no_bootstrap) rc.learner.bootstrap = false;
  if (f.bin) {
    if (!(*f.bin > 0.0)) throw Error(ErrorKind::InvalidArgument, "--bin must be positive");
    rc.schema.bin_width = *f.bin;
  }
  try {
    if (f.x2) rc.x2 = parse_int_list(*f.x2);
    if (f.x1) rc.x1 = parse_real_list(*f.x1);
  } catch (const std::invalid_argument& e) {
    throw Error(ErrorKind::InvalidArgument, e.what());
  }
  rc.learner.tree.validate();
  if (rc.learner.n_trees == 0) throw Error(ErrorKind::InvalidArgument, "trees must be positive");
  return rc;
}

std::string path_in(const RunConfig& rc, const std::string& name) {
  return (std::filesystem::path(rc.out) / name).string();
}

void prepare_output(const RunConfig& rc) {
  if (rc.out.empty()) throw Error(ErrorKind::InvalidArgument, "--out is required");
  std::error_code ec;
  std::filesystem::create_directories(rc.out, ec);
  if (ec || !std::filesystem::is_directory(rc.out)) {
    throw Error(ErrorKind::IoError, "cannot create output directory '" + rc.out + "'");
  }
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string fixed2(const std::optional<double>& v) { return v ? fixed2(*v) : "n/a"; }

LoadResult load(const RunConfig& rc) {
  if (rc.input.empty()) throw Error(ErrorKind::InvalidArgument, "--input is required");
  return load_cohort(rc.input, rc.schema);
}

void mirror(const RunConfig& rc, std::ostream& out, const std::string& text) {
  if (!rc.quiet) out << text;
}

int cmd_summarize(const RunConfig& rc, std::ostream& out) {
  const auto loaded = load(rc);
  prepare_output(rc);
  const auto s = summarize(loaded.cohort);

  nlohmann::json j = {{"n", loaded.cohort.size()},
                      {"dropped", loaded.dropped},
                      {"n_treated", s.n_treated},
                      {"n_control", s.n_control},
                      {"mean_y_treated", optional_json(s.mean_y_treated)},
                      {"mean_y_control", optional_json(s.mean_y_control)},
                      {"mean_x1_treated", optional_json(s.mean_x1_treated)},
                      {"mean_x1_control", optional_json(s.mean_x1_control)}};
  std::string text;
  text += "records: " + std::to_string(loaded.cohort.size()) + " (dropped " + std::to_string(loaded.dropped) + ")\n";
  text += "treated (x2 >= 1): n=" + std::to_string(s.n_treated) + "  mean y=" + fixed2(s.mean_y_treated) +
          "  mean x1=" + fixed2(s.mean_x1_treated) + "\n";
  text += "control (x2 == 0): n=" + std::to_string(s.n_control) + "  mean y=" + fixed2(s.mean_y_control) +
          "  mean x1=" + fixed2(s.mean_x1_control) + "\n";
  if (s.mean_y_treated && s.mean_y_control) {
    j["naive_difference"] = *s.mean_y_treated - *s.mean_y_control;
    text += "naive difference (treated - control): " + fixed2(*s.mean_y_treated - *s.mean_y_control) + "\n";
  }
  write_text_file(path_in(rc, "summary.json"), dump(j));
  write_text_file(path_in(rc, "summary.txt"), text);
  mirror(rc, out, text);
  return kExitOk;
}

int cmd_cate(const RunConfig& rc, std::ostream& out) {
  const auto loaded = load(rc);
  prepare_output(rc);
  const auto model = fit_t_learner(loaded.cohort, rc.learner);
  const auto report = effect_report(model, loaded.cohort);

  write_text_file(path_in(rc, "effect_report.csv"), effect_report_csv(report));
  write_text_file(path_in(rc, "effect_report.json"), dump(effect_report_json(report)));
  write_text_file(path_in(rc, "summary.json"), dump(effect_summary_json(report)));
  mirror(rc, out,
         "ATE=" + format_real(report.ate) + " ATT=" + format_real(report.att) + " ATU=" + format_real(report.atu) +
             " (n=" + std::to_string(report.n) + ", treated=" + std::to_string(report.n_treated) +
             ", control=" + std::to_string(report.n_control) + ")\n");
  return kExitOk;
}

int cmd_phi(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  const auto loaded = load(rc);
  prepare_output(rc);
  const auto& cohort = loaded.cohort;
  const auto model = fit_t_learner2(cohort, rc.learner);

  const auto grid_x2 = rc.x2 ? *rc.x2 : default_probe_x2(cohort);
  std::vector<int> probe{0};
  probe.insert(probe.end(), grid_x2.begin(), grid_x2.end());
  for (int v : default_probe_x2(cohort)) probe.push_back(v);
  const auto independence = check_base_independence(model, cohort, probe);

  const auto x1_bins = rc.x1 ? *rc.x1 : cohort.bin_values();
  std::vector<double> binned;
  for (double v : x1_bins) binned.push_back(cohort.bin_of(v));
  const auto surface = phi_surface(model, cohort, binned, grid_x2, rc.learner.threads);
  const double att_two = att2(model, cohort);

  nlohmann::json summary = {{"att2", att_two},
                            {"n", cohort.size()},
                            {"n_treated", model.n_treated},
                            {"n_control", model.n_control},
                            {"seed", rc.learner.seed},
                            {"params", to_json(rc.learner)},
                            {"observed_dose_min", model.observed_dose_min},
                            {"observed_dose_max", model.observed_dose_max},
                            {"missing_cells", surface.missing},
                            {"independence",
                             {{"checks", independence.checks},
                              {"violations", independence.violations.size()},
                              {"passed", independence.passed()}}}};
  write_text_file(path_in(rc, "summary.json"), dump(summary));
  if (!independence.passed()) {
    const auto& v = independence.violations.front();
    err << "base response depends on x2: record " << v.record << ", x2=" << v.x2 << " ("
        << independence.violations.size() << " violations)\n";
    return kExitInconsistent;
  }
  write_text_file(path_in(rc, "phi_surface.csv"), surface_csv(surface));
  write_text_file(path_in(rc, "phi_matrix.json"), dump(surface_json(surface)));
  mirror(rc, out,
         "ATT2=" + format_real(att_two) + " surface " + std::to_string(surface.x1_values.size()) + "x" +
             std::to_string(surface.x2_values.size()) + " (" + std::to_string(surface.missing) + " missing)\n");
  return kExitOk;
}

int cmd_tree(const RunConfig& rc, std::ostream& out) {
  const auto loaded = load(rc);
  prepare_output(rc);
  const auto& cohort = loaded.cohort;
  if (cohort.empty()) throw Error(ErrorKind::EmptyInput, "no usable records");

  std::vector<std::string> names{rc.schema.column("proficiency"), rc.schema.column("f2f")};
  for (auto f : kAuxFeatures) names.push_back(rc.schema.column(std::string(f)));
  TrainingSet rows(names.size());
  for (const auto& r : cohort.records()) {
    std::vector<double> x{r.x1, static_cast<double>(r.x2)};
    for (auto f : kAuxFeatures) x.push_back(static_cast<double>(r.aux.at(std::string(f))));
    rows.add(x, r.y);
  }
  const auto tree = fit_tree(rows, rc.learner.tree);
  const auto text = tree_report_text(tree, names);
  nlohmann::json j = {{"params",
                       {{"max_depth", rc.learner.tree.max_depth},
                        {"min_samples_split", rc.learner.tree.min_samples_split},
                        {"min_samples_leaf", rc.learner.tree.min_samples_leaf}}},
                      {"features", names},
                      {"tree", tree_report_json(tree, names)}};
  write_text_file(path_in(rc, "tree.txt"), text);
  write_text_file(path_in(rc, "tree.json"), dump(j));
  mirror(rc, out, text);
  return kExitOk;
}

int cmd_dose_reg(const RunConfig& rc, std::ostream& out) {
  const auto loaded = load(rc);
  prepare_output(rc);
  if (loaded.cohort.treated().empty()) {
    throw Error(ErrorKind::RankDeficient, "x2 is 0 for every record; the dose regression does not apply");
  }
  const auto model = fit_t_learner(loaded.cohort, rc.learner);
  const auto reg = tau_dose_regression(loaded.cohort, model);
  auto j = to_json(reg.fit);
  j["regressors"] = {"x1", "x2"};
  j["seed"] = rc.learner.seed;
  write_text_file(path_in(rc, "ols.json"), dump(j));
  write_text_file(path_in(rc, "tau_scatter.csv"), scatter_csv(reg.scatter));
  mirror(rc, out,
         "tau = " + format_real(reg.fit.coefficients[0]) + "*x1 + " + format_real(reg.fit.coefficients[1]) +
             "*x2 + " + format_real(reg.fit.intercept) + " (r2=" + format_real(reg.fit.r_squared) + ")\n");
  return kExitOk;
}

int cmd_synth(const RunConfig& rc, const Flags& f, std::ostream& out) {
  const Scenario scenario = f.config.empty() ? Scenario{} : Scenario::from_file(f.config);
  prepare_output(rc);
  const auto synth = generate(scenario, rc.learner.seed);
  save_cohort(synth.cohort, path_in(rc, "cohort.csv"));
  write_text_file(path_in(rc, "cohort.truth.json"), dump(truth_json(synth.truth, synth.cohort)));
  mirror(rc, out,
         "generated " + std::to_string(synth.cohort.size()) + " records (" +
             std::to_string(synth.cohort.treated().size()) + " treated), true ATE=" + format_real(synth.truth.ate) +
             "\n");
  return kExitOk;
}

int exit_code_for(const Error& e, const std::string& subcommand) {
  switch (e.kind()) {
    case ErrorKind::EmptyArm: return kExitEmptyArm;
    case ErrorKind::RankDeficient:
    case ErrorKind::Underdetermined: return subcommand == "dose-reg" ? kExitRankDeficient : kExitFailure;
    case ErrorKind::ParseError:
    case ErrorKind::SchemaError:
    case ErrorKind::IoError:
    case ErrorKind::InvalidScenario:
    case ErrorKind::InvalidArgument:
    case ErrorKind::EmptyInput:
    case ErrorKind::EmptyBin:
    case ErrorKind::DomainError:
    case ErrorKind::EmptyOrSingleton:
    case ErrorKind::ZeroVariance: return kExitInput;
    default: return kExitFailure;
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Treatment-effect estimation with one- and two-variable T-learners", "catebench"};
  app.require_subcommand(1);
  Flags flags;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"summarize", "Group sizes and naive treated/control means"},
      {"cate", "One-variable T-learner: tau(x1), ATE, ATT, ATU"},
      {"phi", "Two-variable T-learner: phi(x1, x2) surface and ATT2"},
      {"tree", "Diagnostic regression tree over the seven count features"},
      {"dose-reg", "OLS of tau(x1) on (x1, x2) with scatter export"},
      {"synth", "Generate a synthetic cohort with ground truth"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--input", flags.input, "Cohort CSV");
    sub->add_option("--out", flags.out, "Output directory")->required();
    sub->add_option("--config", flags.config, name == "synth" ? "Scenario file" : "Run config (key=value)");
    sub->add_option("--seed", flags.seed, "Random seed (default 0, env CATEBENCH_SEED)");
    sub->add_option("--depth", flags.depth, "Maximum tree depth");
    sub->add_option("--trees", flags.trees, "Trees per forest");
    sub->add_option("--x2", flags.x2, "Dose values, e.g. 1,2,3,5,10,14 or 1-14");
    sub->add_option("--x1", flags.x1, "Covariate bins for the phi surface");
    sub->add_option("--bin", flags.bin, "Covariate bin width");
    sub->add_option("--threads", flags.threads, "Worker threads (0 = all cores)");
    sub->add_flag("--no-bootstrap", flags.no_bootstrap, "Fit every tree on the full arm");
    sub->add_flag("--quiet", flags.quiet, "Do not mirror results to stdout");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "catebench: " << e.what() << "\n";
    return kExitInput;
  }

  std::string subcommand;
  for (const auto* sub : app.get_subcommands()) subcommand = sub->get_name();

  try {
    const auto rc = resolve(subcommand, flags);
    if (subcommand == "summarize") return cmd_summarize(rc, out);
    if (subcommand == "cate") return cmd_cate(rc, out);
    if (subcommand == "phi") return cmd_phi(rc, out, err);
    if (subcommand == "tree") return cmd_tree(rc, out);
    if (subcommand == "dose-reg") return cmd_dose_reg(rc, out);
    if (subcommand == "synth") return cmd_synth(rc, flags, out);
  } catch (const Error& e) {
    err << "catebench " << subcommand << ": " << e.what() << "\n";
    return exit_code_for(e, subcommand);
  } catch (const std::exception& e) {
    err << "catebench " << subcommand << ": " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace catebench
