#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "catebench/dataset.hpp"

namespace catebench {

enum class SelectionKind { Constant, Logistic };
enum class DoseKind { Geometric, Uniform };
enum class BaseKind { Constant, LinearX1 };
enum class EffectKind { Constant, LinearX1, LinearDose };

/// Treatment probability as a function of x1.
///   Constant:  p
///   Logistic:  1 / (1 + exp(-(intercept + slope * (x1 - x1_mean))))
/// A negative slope makes weaker students more likely to seek help.
struct Selection {
  SelectionKind kind = SelectionKind::Logistic;
  double p = 0.5;
  double intercept = 0.0;
  double slope = 0.0;

  double probability(double x1, double x1_mean) const;
};

/// Dose (x2) distribution of treated records on 1..max_dose. Geometric is
/// truncated: P(d) proportional to p (1 - p)^(d - 1).
///
/// A nonzero x1_slope (geometric only) moves p on the logit scale with
/// x1 - x1_mean; a positive slope gives stronger students fewer sessions.
struct DoseDistribution {
  DoseKind kind = DoseKind::Geometric;
  double p = 0.3;
  int max_dose = 14;
  double x1_slope = 0.0;

  double pmf(int dose) const;  // ignores x1_slope
  double mean() const;
  // The distribution for one value of x1, with the slope folded into p.
  DoseDistribution given_x1(double x1, double x1_mean) const;
};

/// mu0_true(x1) = a + b * x1   (Constant ignores b).
struct BaseResponse {
  BaseKind kind = BaseKind::LinearX1;
  double a = 10.0;
  double b = 0.8;

  double operator()(double x1) const;
};

/// effect_true(x1, x2):
///   Constant    a
///   LinearX1    a + b * x1
///   LinearDose  a + b * x2
struct EffectFunction {
  EffectKind kind = EffectKind::Constant;
  double a = 3.0;
  double b = 0.0;

  double operator()(double x1, int x2) const;
};

struct Scenario {
  std::size_t n = 1389;
  double x1_mean = 50.0;
  double x1_sd = 10.0;
  double x1_resolution = 1.0;  // x1 rounded to this grid; 0 keeps it continuous
  Selection selection;
  DoseDistribution dose;
  BaseResponse mu0;
  EffectFunction effect;
  double noise_sd = 5.0;

  void validate() const;  // throws InvalidScenario naming the field

  // Keys mirror the field names: n, x1_mean, x1_sd, x1_resolution,
  // selection (constant|logistic), selection_p, selection_intercept,
  // selection_slope, dose (geometric|uniform), dose_p, max_dose, dose_x1_slope,
  // mu0 (constant|linear_x1), mu0_a, mu0_b,
  // effect (constant|linear_x1|linear_dose), effect_a, effect_b, noise_sd.
  static Scenario from_key_values(const std::map<std::string, std::string>& kv);
  static Scenario from_json(const nlohmann::json& j);
  // Reads JSON when the file starts with '{', key=value text otherwise.
  static Scenario from_file(const std::string& path);
};

nlohmann::json to_json(const Scenario& s);

// Expected share of treated records, by quadrature over the x1 normal.
double expected_treated_fraction(const Scenario& s);

// Logistic intercept giving the requested expected treated fraction.
double calibrate_intercept(Scenario s, double treated_fraction);

// Cohort-shaped scenario: 1,389 records with 91 treated in expectation,
// negative selection slope, constant positive effect.
Scenario field_study_scenario();

// The biased scenario used for the naive-comparison inversion check:
// n = 10,000, negative selection slope, constant effect +3.
Scenario biased_scenario();

// Dose-response scenario for the tau-on-dose regression: n = 10,000,
// constant selection, weaker students draw more sessions, effect 1 + x2.
Scenario dose_response_scenario();

/// Potential outcomes retained next to a generated cohort. Controls carry a
/// latent dose drawn from the same distribution, so y1 is defined for them.
struct GroundTruth {
  std::vector<double> y0;        // noise-free mu0_true(x1)
  std::vector<double> y1;        // y0 + effect_true(x1, dose)
  std::vector<double> effect;    // effect_true(x1, dose)
  std::vector<int> dose;         // assigned dose (treated) or latent dose
  std::vector<double> noise;
  std::vector<bool> treated;
  double ate = 0.0;              // mean of effect over all records
  double att = 0.0;              // mean of effect over treated records
  Scenario scenario;
  std::uint64_t seed = 0;
};

struct Synthetic {
  Cohort cohort;
  GroundTruth truth;
};

// Observed y = (treated ? y1 : y0) + noise.
Synthetic generate(const Scenario& scenario, std::uint64_t seed);

struct TrueAte {};
struct TrueAtt {};
struct TrueTau {
  double x1;
};
struct TrueTauDose {
  double x1;
  int x2;
};
using TruthQuery = std::variant<TrueAte, TrueAtt, TrueTau, TrueTauDose>;

// Closed-form truth: ATE / ATT are the finite-sample averages stored in the
// ground truth; tau(x1) averages the effect over the dose distribution;
// tau(x1, x2) is the effect function itself.
double true_effects(const GroundTruth& truth, const TruthQuery& query);

nlohmann::json truth_json(const GroundTruth& truth, const Cohort& cohort);

}  // namespace catebench
