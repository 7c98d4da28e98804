#include "catebench/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "catebench/error.hpp"
#include "catebench/format.hpp"

namespace catebench {

double Selection::probability(double x1, double x1_mean) const {
  if (kind == SelectionKind::Constant) return p;
  return 1.0 / (1.0 + std::exp(-(intercept + slope * (x1 - x1_mean))));
}

double DoseDistribution::pmf(int dose) const {
  if (dose < 1 || dose > max_dose) return 0.0;
  if (kind == DoseKind::Uniform) return 1.0 / max_dose;
  const double norm = 1.0 - std::pow(1.0 - p, max_dose);
  return p * std::pow(1.0 - p, dose - 1) / norm;
}

double DoseDistribution::mean() const {
  double m = 0.0;
  for (int d = 1; d <= max_dose; ++d) m += d * pmf(d);
  return m;
}

DoseDistribution DoseDistribution::given_x1(double x1, double x1_mean) const {
  DoseDistribution d = *this;
  d.x1_slope = 0.0;
  if (kind == DoseKind::Geometric && x1_slope != 0.0 && p < 1.0) {
    const double logit = std::log(p / (1.0 - p)) + x1_slope * (x1 - x1_mean);
    d.p = std::clamp(1.0 / (1.0 + std::exp(-logit)), 1e-12, 1.0);
  }
  return d;
}

double BaseResponse::operator()(double x1) const {
  return kind == BaseKind::Constant ? a : a + b * x1;
}

double EffectFunction::operator()(double x1, int x2) const {
  switch (kind) {
    case EffectKind::Constant: return a;
    case EffectKind::LinearX1: return a + b * x1;
    case EffectKind::LinearDose: return a + b * x2;
  }
  return a;
}

void Scenario::validate() const {
  auto bad = [](const std::string& field, const std::string& why) {
    throw Error(ErrorKind::InvalidScenario, field + ": " + why);
  };
  if (n == 0) bad("n", "must be positive");
  if (!std::isfinite(x1_mean)) bad("x1_mean", "must be finite");
  if (!(x1_sd >= 0.0) || !std::isfinite(x1_sd)) bad("x1_sd", "must be >= 0");
  if (!(x1_resolution >= 0.0) || !std::isfinite(x1_resolution)) bad("x1_resolution", "must be >= 0");
  if (selection.kind == SelectionKind::Constant && !(selection.p >= 0.0 && selection.p <= 1.0)) {
    bad("selection_p", "must lie in [0, 1]");
  }
  if (!std::isfinite(selection.intercept)) bad("selection_intercept", "must be finite");
  if (!std::isfinite(selection.slope)) bad("selection_slope", "must be finite");
  if (dose.max_dose < 1) bad("max_dose", "must be >= 1");
  if (dose.kind == DoseKind::Geometric && !(dose.p > 0.0 && dose.p <= 1.0)) bad("dose_p", "must lie in (0, 1]");
  if (!std::isfinite(dose.x1_slope)) bad("dose_x1_slope", "must be finite");
  if (dose.kind == DoseKind::Uniform && dose.x1_slope != 0.0) bad("dose_x1_slope", "applies to geometric doses only");
  if (!std::isfinite(mu0.a)) bad("mu0_a", "must be finite");
  if (!std::isfinite(mu0.b)) bad("mu0_b", "must be finite");
  if (!std::isfinite(effect.a)) bad("effect_a", "must be finite");
  if (!std::isfinite(effect.b)) bad("effect_b", "must be finite");
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) bad("noise_sd", "must be >= 0");
}

namespace {

double real_field(const std::string& key, const std::string& value) {
  try {
    return parse_real(value);
  } catch (const std::invalid_argument&) {
    throw Error(ErrorKind::InvalidScenario, key + ": '" + value + "' is not a number");
  }
}

long long int_field(const std::string& key, const std::string& value) {
  try {
    return parse_integer(value);
  } catch (const std::invalid_argument&) {
    throw Error(ErrorKind::InvalidScenario, key + ": '" + value + "' is not an integer");
  }
}

}  // namespace

Scenario Scenario::from_key_values(const std::map<std::string, std::string>& kv) {
  Scenario s;
  for (const auto& [key, value] : kv) {
    if (key == "n") {
      const auto v = int_field(key, value);
      if (v <= 0) throw Error(ErrorKind::InvalidScenario, "n: must be positive");
      s.n = static_cast<std::size_t>(v);
    } else if (key == "x1_mean") {
      s.x1_mean = real_field(key, value);
    } else if (key == "x1_sd") {
      s.x1_sd = real_field(key, value);
    } else if (key == "x1_resolution") {
      s.x1_resolution = real_field(key, value);
    } else if (key == "selection") {
      if (value == "constant") s.selection.kind = SelectionKind::Constant;
      else if (value == "logistic") s.selection.kind = SelectionKind::Logistic;
      else throw Error(ErrorKind::InvalidScenario, "selection: unknown kind '" + value + "'");
    } else if (key == "selection_p") {
      s.selection.p = real_field(key, value);
    } else if (key == "selection_intercept") {
      s.selection.intercept = real_field(key, value);
    } else if (key == "selection_slope") {
      s.selection.slope = real_field(key, value);
    } else if (key == "dose") {
      if (value == "geometric") s.dose.kind = DoseKind::Geometric;
      else if (value == "uniform") s.dose.kind = DoseKind::Uniform;
      else throw Error(ErrorKind::InvalidScenario, "dose: unknown kind '" + value + "'");
    } else if (key == "dose_p") {
      s.dose.p = real_field(key, value);
    } else if (key == "max_dose") {
      const auto v = int_field(key, value);
      if (v < 1 || v > 1'000'000) throw Error(ErrorKind::InvalidScenario, "max_dose: must be >= 1");
      s.dose.max_dose = static_cast<int>(v);
    } else if (key == "dose_x1_slope") {
      s.dose.x1_slope = real_field(key, value);
    } else if (key == "mu0") {
      if (value == "constant") s.mu0.kind = BaseKind::Constant;
      else if (value == "linear_x1") s.mu0.kind = BaseKind::LinearX1;
      else throw Error(ErrorKind::InvalidScenario, "mu0: unknown kind '" + value + "'");
    } else if (key == "mu0_a") {
      s.mu0.a = real_field(key, value);
    } else if (key == "mu0_b") {
      s.mu0.b = real_field(key, value);
    } else if (key == "effect") {
      if (value == "constant") s.effect.kind = EffectKind::Constant;
      else if (value == "linear_x1") s.effect.kind = EffectKind::LinearX1;
      else if (value == "linear_dose") s.effect.kind = EffectKind::LinearDose;
      else throw Error(ErrorKind::InvalidScenario, "effect: unknown kind '" + value + "'");
    } else if (key == "effect_a") {
      s.effect.a = real_field(key, value);
    } else if (key == "effect_b") {
      s.effect.b = real_field(key, value);
    } else if (key == "noise_sd") {
      s.noise_sd = real_field(key, value);
    } else {
      throw Error(ErrorKind::InvalidScenario, key + ": unknown field");
    }
  }
  s.validate();
  return s;
}

Scenario Scenario::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorKind::InvalidScenario, "scenario: expected a JSON object");
  std::map<std::string, std::string> kv;
  for (const auto& [key, value] : j.items()) {
    if (value.is_string()) kv[key] = value.get<std::string>();
    else if (value.is_number() || value.is_boolean()) kv[key] = value.dump();
    else throw Error(ErrorKind::InvalidScenario, key + ": expected a scalar");
  }
  return from_key_values(kv);
}

Scenario Scenario::from_file(const std::string& path) {
  const auto text = read_text_file(path);
  const auto body = trim(text);
  if (!body.empty() && body.front() == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::InvalidScenario, std::string("scenario: ") + e.what());
    }
    return from_json(j);
  }
  try {
    return from_key_values(parse_key_values(text));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ParseError) throw Error(ErrorKind::InvalidScenario, "scenario: " + e.detail());
    throw;
  }
}

nlohmann::json to_json(const Scenario& s) {
  auto selection = s.selection.kind == SelectionKind::Constant ? "constant" : "logistic";
  auto dose = s.dose.kind == DoseKind::Geometric ? "geometric" : "uniform";
  auto mu0 = s.mu0.kind == BaseKind::Constant ? "constant" : "linear_x1";
  const char* effect = "constant";
  if (s.effect.kind == EffectKind::LinearX1) effect = "linear_x1";
  if (s.effect.kind == EffectKind::LinearDose) effect = "linear_dose";
  return {{"n", s.n},
          {"x1_mean", s.x1_mean},
          {"x1_sd", s.x1_sd},
          {"x1_resolution", s.x1_resolution},
          {"selection", selection},
          {"selection_p", s.selection.p},
          {"selection_intercept", s.selection.intercept},
          {"selection_slope", s.selection.slope},
          {"dose", dose},
          {"dose_p", s.dose.p},
          {"max_dose", s.dose.max_dose},
          {"dose_x1_slope", s.dose.x1_slope},
          {"mu0", mu0},
          {"mu0_a", s.mu0.a},
          {"mu0_b", s.mu0.b},
          {"effect", effect},
          {"effect_a", s.effect.a},
          {"effect_b", s.effect.b},
          {"noise_sd", s.noise_sd}};
}

double expected_treated_fraction(const Scenario& s) {
  if (s.selection.kind == SelectionKind::Constant) return s.selection.p;
  if (s.x1_sd == 0.0) return s.selection.probability(s.x1_mean, s.x1_mean);
  // Composite Simpson over +-10 sd of the normal density.
  constexpr int kIntervals = 4000;
  const double lo = -10.0;
  const double h = 20.0 / kIntervals;
  double acc = 0.0;
  for (int i = 0; i <= kIntervals; ++i) {
    const double z = lo + i * h;
    const double w = (i == 0 || i == kIntervals) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    const double density = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    acc += w * density * s.selection.probability(s.x1_mean + s.x1_sd * z, s.x1_mean);
  }
  return acc * h / 3.0;
}

double calibrate_intercept(Scenario s, double treated_fraction) {
  if (!(treated_fraction > 0.0 && treated_fraction < 1.0)) {
    throw Error(ErrorKind::InvalidScenario, "selection_intercept: target fraction must lie in (0, 1)");
  }
  s.selection.kind = SelectionKind::Logistic;
  double lo = -50.0;
  double hi = 50.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    s.selection.intercept = mid;
    (expected_treated_fraction(s) < treated_fraction ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Scenario field_study_scenario() {
  Scenario s;
  s.n = 1389;
  s.selection.kind = SelectionKind::Logistic;
  s.selection.slope = -0.08;
  s.selection.intercept = calibrate_intercept(s, 91.0 / 1389.0);
  s.effect = {EffectKind::Constant, 3.0, 0.0};
  return s;
}

Scenario biased_scenario() {
  Scenario s;
  s.n = 10000;
  s.selection.kind = SelectionKind::Logistic;
  s.selection.slope = -0.15;
  s.selection.intercept = calibrate_intercept(s, 0.2);
  s.effect = {EffectKind::Constant, 3.0, 0.0};
  return s;
}

Scenario dose_response_scenario() {
  Scenario s;
  s.n = 10000;
  s.selection = {SelectionKind::Constant, 0.3, 0.0, 0.0};
  s.dose = {DoseKind::Geometric, 0.3, 14, 0.5};
  s.effect = {EffectKind::LinearDose, 1.0, 1.0};
  s.noise_sd = 2.0;
  return s;
}

namespace {

int draw_dose(const DoseDistribution& d, double u) {
  double cdf = 0.0;
  for (int dose = 1; dose < d.max_dose; ++dose) {
    cdf += d.pmf(dose);
    if (u < cdf) return dose;
  }
  return d.max_dose;
}

}  // namespace

Synthetic generate(const Scenario& scenario, std::uint64_t seed) {
  scenario.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> standard_normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  GroundTruth truth;
  truth.scenario = scenario;
  truth.seed = seed;
  std::vector<StudentRecord> records;
  records.reserve(scenario.n);

  double effect_sum = 0.0;
  double treated_effect_sum = 0.0;
  std::size_t n_treated = 0;
  for (std::size_t k = 0; k < scenario.n; ++k) {
    // Fixed draw order per record: x1, selection, dose, noise.
    double x1 = scenario.x1_mean + scenario.x1_sd * standard_normal(rng);
    if (scenario.x1_resolution > 0.0) x1 = std::round(x1 / scenario.x1_resolution) * scenario.x1_resolution;
    const bool treated = uniform(rng) < scenario.selection.probability(x1, scenario.x1_mean);
    const int dose = draw_dose(scenario.dose.given_x1(x1, scenario.x1_mean), uniform(rng));
    const double noise = scenario.noise_sd * standard_normal(rng);

    const double y0 = scenario.mu0(x1);
    const double effect = scenario.effect(x1, dose);
    const double y1 = y0 + effect;

    StudentRecord r;
    r.id = "s" + std::to_string(k + 1);
    r.x1 = x1;
    r.x2 = treated ? dose : 0;
    r.y = (treated ? y1 : y0) + noise;
    for (auto f : kAuxFeatures) r.aux[std::string(f)] = 0;
    records.push_back(std::move(r));

    truth.y0.push_back(y0);
    truth.y1.push_back(y1);
    truth.effect.push_back(effect);
    truth.dose.push_back(dose);
    truth.noise.push_back(noise);
    truth.treated.push_back(treated);
    effect_sum += effect;
    if (treated) {
      treated_effect_sum += effect;
      ++n_treated;
    }
  }
  truth.ate = effect_sum / static_cast<double>(scenario.n);
  truth.att = n_treated ? treated_effect_sum / static_cast<double>(n_treated) : 0.0;
  return Synthetic{Cohort(std::move(records)), std::move(truth)};
}

double true_effects(const GroundTruth& truth, const TruthQuery& query) {
  const auto& s = truth.scenario;
  return std::visit(
      [&](const auto& q) -> double {
        using Q = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<Q, TrueAte>) {
          if (truth.effect.empty()) throw Error(ErrorKind::OutOfSupport, "empty ground truth");
          return truth.ate;
        } else if constexpr (std::is_same_v<Q, TrueAtt>) {
          if (std::find(truth.treated.begin(), truth.treated.end(), true) == truth.treated.end()) {
            throw Error(ErrorKind::OutOfSupport, "no treated records");
          }
          return truth.att;
        } else if constexpr (std::is_same_v<Q, TrueTau>) {
          if (!std::isfinite(q.x1)) throw Error(ErrorKind::OutOfSupport, "x1 must be finite");
          const auto dose = s.dose.given_x1(q.x1, s.x1_mean);
          double tau = 0.0;
          for (int d = 1; d <= dose.max_dose; ++d) tau += dose.pmf(d) * s.effect(q.x1, d);
          return tau;
        } else {
          if (!std::isfinite(q.x1)) throw Error(ErrorKind::OutOfSupport, "x1 must be finite");
          if (q.x2 < 1 || q.x2 > s.dose.max_dose) {
            throw Error(ErrorKind::OutOfSupport, "x2 must lie in 1.." + std::to_string(s.dose.max_dose));
          }
          return s.effect(q.x1, q.x2);
        }
      },
      query);
}

nlohmann::json truth_json(const GroundTruth& truth, const Cohort& cohort) {
  nlohmann::json records = nlohmann::json::array();
  for (std::size_t k = 0; k < truth.y0.size(); ++k) {
    records.push_back({{"id", cohort[k].id},
                       {"treated", static_cast<bool>(truth.treated[k])},
                       {"dose", truth.dose[k]},
                       {"y0", truth.y0[k]},
                       {"y1", truth.y1[k]},
                       {"effect", truth.effect[k]},
                       {"noise", truth.noise[k]}});
  }
  return {{"seed", truth.seed},
          {"scenario", to_json(truth.scenario)},
          {"ate", truth.ate},
          {"att", truth.att},
          {"records", records}};
}

}  // namespace catebench
