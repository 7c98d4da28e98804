#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "catebench/dataset.hpp"
#include "catebench/forest.hpp"

namespace catebench {

/// Settings shared by both response-function forests of a T-learner.
struct LearnerConfig {
  TreeParams tree;  // depth 2 by default
  std::size_t n_trees = 100;
  std::uint64_t seed = 0;
  bool bootstrap = true;
  std::size_t max_features = 0;
  unsigned threads = 0;

  // Options for the forest of one arm. Each arm draws from its own stream
  // of `seed` (0 for controls, 1 for treated), identically in the one- and
  // two-variable learners.
  ForestOptions forest_options(int arm) const;
};

nlohmann::json to_json(const LearnerConfig& config);

/// Response functions mu1 (treated) and mu0 (control) over the binned x1.
struct TLearnerModel {
  RegressionForest mu1;
  RegressionForest mu0;
  LearnerConfig config;
  std::size_t n_treated = 0;
  std::size_t n_control = 0;
};

TLearnerModel fit_t_learner(const Cohort& cohort, const LearnerConfig& config = {});

// mu1(x1) - mu0(x1).
double cate_tau(const TLearnerModel& model, double x1);

// Mean over every record of mu1(x1_k) - mu0(x1_k).
double ate(const TLearnerModel& model, const Cohort& cohort);
// Mean over treated records of y_i - mu0(x1_i).
double att(const TLearnerModel& model, const Cohort& cohort);
// Mean over control records of mu1(x1_j) - y_j.
double atu(const TLearnerModel& model, const Cohort& cohort);

struct EffectRow {
  double x1 = 0.0;
  double mu0 = 0.0;
  double mu1 = 0.0;
  double tau = 0.0;
};

struct EffectReport {
  std::vector<EffectRow> rows;  // ascending x1, one per populated bin
  double ate = 0.0;
  double att = 0.0;
  double atu = 0.0;
  std::size_t n = 0;
  std::size_t n_treated = 0;
  std::size_t n_control = 0;
  LearnerConfig config;
};

EffectReport effect_report(const TLearnerModel& model, const Cohort& cohort);

std::string effect_report_csv(const EffectReport& report);       // x1,mu0,mu1,tau
nlohmann::json effect_report_json(const EffectReport& report);   // rows + summary
nlohmann::json effect_summary_json(const EffectReport& report);  // {ate, att, atu, n, ...}

}  // namespace catebench
