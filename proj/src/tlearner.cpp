#include "catebench/tlearner.hpp"

#include <array>
#include <map>

#include "catebench/error.hpp"
#include "catebench/format.hpp"
#include "catebench/rng.hpp"

namespace catebench {

ForestOptions LearnerConfig::forest_options(int arm) const {
  ForestOptions o;
  o.n_trees = n_trees;
  o.seed = stream_seed(seed, static_cast<std::uint64_t>(arm));
  o.bootstrap = bootstrap;
  o.max_features = max_features;
  o.threads = threads;
  return o;
}

nlohmann::json to_json(const LearnerConfig& config) {
  return {{"seed", config.seed},
          {"n_trees", config.n_trees},
          {"max_depth", config.tree.max_depth},
          {"min_samples_split", config.tree.min_samples_split},
          {"min_samples_leaf", config.tree.min_samples_leaf},
          {"bootstrap", config.bootstrap},
          {"max_features", config.max_features}};
}

TLearnerModel fit_t_learner(const Cohort& cohort, const LearnerConfig& config) {
  if (cohort.treated().empty()) throw Error(ErrorKind::EmptyArm, "R1");
  if (cohort.control().empty()) throw Error(ErrorKind::EmptyArm, "R0");

  TrainingSet treated(1);
  TrainingSet control(1);
  for (auto i : cohort.treated()) treated.add(std::array{cohort.covariate(i)}, cohort[i].y);
  for (auto j : cohort.control()) control.add(std::array{cohort.covariate(j)}, cohort[j].y);

  return TLearnerModel{fit_forest(treated, config.tree, config.forest_options(1)),
                       fit_forest(control, config.tree, config.forest_options(0)), config, treated.size(),
                       control.size()};
}

double cate_tau(const TLearnerModel& model, double x1) {
  return model.mu1.predict({x1}) - model.mu0.predict({x1});
}

double ate(const TLearnerModel& model, const Cohort& cohort) {
  if (cohort.empty()) throw Error(ErrorKind::EmptyInput, "empty cohort");
  // Predictions depend only on the bin, so evaluate each bin once.
  std::map<double, double> tau;
  for (const auto& [bin, members] : cohort.groups()) tau.emplace(bin, cate_tau(model, bin));
  double sum = 0.0;
  for (std::size_t k = 0; k < cohort.size(); ++k) sum += tau.at(cohort.covariate(k));
  return sum / static_cast<double>(cohort.size());
}

double att(const TLearnerModel& model, const Cohort& cohort) {
  const auto& r1 = cohort.treated();
  if (r1.empty()) throw Error(ErrorKind::EmptyArm, "R1");
  double sum = 0.0;
  for (auto i : r1) sum += cohort[i].y - model.mu0.predict({cohort.covariate(i)});
  return sum / static_cast<double>(r1.size());
}

double atu(const TLearnerModel& model, const Cohort& cohort) {
  const auto& r0 = cohort.control();
  if (r0.empty()) throw Error(ErrorKind::EmptyArm, "R0");
  double sum = 0.0;
  for (auto j : r0) sum += model.mu1.predict({cohort.covariate(j)}) - cohort[j].y;
  return sum / static_cast<double>(r0.size());
}

EffectReport effect_report(const TLearnerModel& model, const Cohort& cohort) {
  EffectReport report;
  for (const auto& [bin, members] : cohort.groups()) {
    EffectRow row;
    row.x1 = bin;
    row.mu0 = model.mu0.predict({bin});
    row.mu1 = model.mu1.predict({bin});
    row.tau = row.mu1 - row.mu0;
    report.rows.push_back(row);
  }
  report.ate = ate(model, cohort);
  report.att = cohort.treated().empty() ? 0.0 : att(model, cohort);
  report.atu = cohort.control().empty() ? 0.0 : atu(model, cohort);
  report.n = cohort.size();
  report.n_treated = cohort.treated().size();
  report.n_control = cohort.control().size();
  report.config = model.config;
  return report;
}

std::string effect_report_csv(const EffectReport& report) {
  std::string out = "x1,mu0,mu1,tau\n";
  for (const auto& r : report.rows) {
    out += format_real(r.x1) + ',' + format_real(r.mu0) + ',' + format_real(r.mu1) + ',' + format_real(r.tau) + '\n';
  }
  return out;
}

nlohmann::json effect_summary_json(const EffectReport& report) {
  return {{"ate", report.ate},
          {"att", report.att},
          {"atu", report.atu},
          {"n", report.n},
          {"n_treated", report.n_treated},
          {"n_control", report.n_control},
          {"seed", report.config.seed},
          {"params", to_json(report.config)}};
}

nlohmann::json effect_report_json(const EffectReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) rows.push_back({{"x1", r.x1}, {"mu0", r.mu0}, {"mu1", r.mu1}, {"tau", r.tau}});
  return {{"rows", rows}, {"summary", effect_summary_json(report)}};
}

}  // namespace catebench
