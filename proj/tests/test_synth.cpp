#include <doctest.h>

#include <bit>
#include <cmath>

#include "catebench/error.hpp"
#include "catebench/format.hpp"
#include "catebench/synth.hpp"
#include "helpers.hpp"

using namespace catebench;

namespace {

ErrorKind scenario_error(const std::map<std::string, std::string>& kv, std::string* detail = nullptr) {
  try {
    Scenario::from_key_values(kv);
  } catch (const Error& e) {
    if (detail) *detail = e.detail();
    return e.kind();
  }
  FAIL("expected an invalid scenario");
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("noiseless zero-effect outcomes lie on the base surface") {
  Scenario s;
  s.n = 500;
  s.effect = {EffectKind::Constant, 0.0, 0.0};
  s.noise_sd = 0.0;
  const auto syn = generate(s, 1);
  for (std::size_t k = 0; k < syn.cohort.size(); ++k) CHECK(syn.cohort[k].y == s.mu0(syn.cohort[k].x1));
  CHECK(syn.truth.ate == 0.0);
  CHECK(true_effects(syn.truth, TrueAte{}) == 0.0);
}

TEST_CASE("negative selection with a positive effect inverts the naive gap") {
  const auto syn = generate(biased_scenario(), 4);
  const auto s = summarize(syn.cohort);
  CHECK(*s.mean_y_treated < *s.mean_y_control);
  CHECK(*s.mean_x1_treated < *s.mean_x1_control);
  CHECK(syn.truth.ate == doctest::Approx(3.0));
  CHECK(syn.cohort.size() == 10000);
  const double share = double(s.n_treated) / syn.cohort.size();
  CHECK(share == doctest::Approx(0.2).epsilon(0.1));
}

TEST_CASE("observed outcomes are consistent with potential outcomes") {
  const auto syn = generate(testing::small_dose_cohort(0).truth.scenario, 12);
  for (std::size_t k = 0; k < syn.cohort.size(); ++k) {
    const bool t = syn.truth.treated[k];
    CHECK(syn.cohort[k].treated() == t);
    const double expected = (t ? syn.truth.y1[k] : syn.truth.y0[k]) + syn.truth.noise[k];
    CHECK(std::bit_cast<std::uint64_t>(syn.cohort[k].y) == std::bit_cast<std::uint64_t>(expected));
    CHECK(syn.truth.y1[k] == syn.truth.y0[k] + syn.truth.effect[k]);
    if (t) CHECK(syn.cohort[k].x2 == syn.truth.dose[k]);
    else CHECK(syn.cohort[k].x2 == 0);
    CHECK(syn.truth.dose[k] >= 1);
  }
}

TEST_CASE("closed-form truth queries") {
  Scenario constant;
  const auto a = generate(constant, 2);
  CHECK(true_effects(a.truth, TrueTau{31.0}) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(true_effects(a.truth, TrueTau{64.0}) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(true_effects(a.truth, TrueAtt{}) == 3.0);

  Scenario dose;
  dose.dose = {DoseKind::Uniform, 0.3, 10, 0.0};
  dose.effect = {EffectKind::LinearDose, 1.0, 0.5};
  const auto b = generate(dose, 2);
  CHECK(true_effects(b.truth, TrueTauDose{50.0, 4}) == 3.0);
  CHECK(true_effects(b.truth, TrueTau{50.0}) == doctest::Approx(1.0 + 0.5 * 5.5));
  CHECK_THROWS_AS(true_effects(b.truth, TrueTauDose{50.0, 0}), Error);
  CHECK_THROWS_AS(true_effects(b.truth, TrueTauDose{50.0, 11}), Error);

  long double ate = 0;
  for (double e : b.truth.effect) ate += e;
  CHECK(b.truth.ate == doctest::Approx(static_cast<double>(ate / b.truth.effect.size())));
}

TEST_CASE("generation is reproducible per seed") {
  const auto s = field_study_scenario();
  const auto a = generate(s, 77);
  const auto b = generate(s, 77);
  const auto c = generate(s, 78);
  CHECK(a.cohort == b.cohort);
  CHECK_FALSE(a.cohort == c.cohort);
  CHECK(a.cohort.size() == 1389);
  CHECK(a.cohort[0].id == "s1");
}

TEST_CASE("field-study scenario calibrates the treated share") {
  const auto s = field_study_scenario();
  CHECK(expected_treated_fraction(s) == doctest::Approx(91.0 / 1389.0).epsilon(1e-9));
  CHECK(s.selection.slope < 0.0);
  std::size_t treated = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) treated += generate(s, seed).cohort.treated().size();
  CHECK(std::abs(treated / 10.0 - 91.0) < 15.0);
}

TEST_CASE("dose distributions") {
  DoseDistribution geo;
  double total = 0.0;
  for (int d = 1; d <= geo.max_dose; ++d) total += geo.pmf(d);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(geo.pmf(0) == 0.0);
  CHECK(geo.pmf(15) == 0.0);
  CHECK(geo.pmf(1) > geo.pmf(2));

  geo.x1_slope = 0.5;
  CHECK(geo.given_x1(50.0, 50.0).p == doctest::Approx(0.3));
  CHECK(geo.given_x1(40.0, 50.0).mean() > geo.given_x1(60.0, 50.0).mean());
  CHECK(geo.given_x1(40.0, 50.0).x1_slope == 0.0);

  const DoseDistribution uni{DoseKind::Uniform, 0.3, 4, 0.0};
  CHECK(uni.pmf(3) == 0.25);
  CHECK(uni.mean() == 2.5);
}

TEST_CASE("scenario validation names the offending field") {
  std::string detail;
  CHECK(scenario_error({{"noise_sd", "-1"}}, &detail) == ErrorKind::InvalidScenario);
  CHECK(detail.rfind("noise_sd", 0) == 0);
  CHECK(scenario_error({{"n", "0"}}, &detail) == ErrorKind::InvalidScenario);
  CHECK(detail.rfind("n:", 0) == 0);
  CHECK(scenario_error({{"dose_p", "1.5"}}, &detail) == ErrorKind::InvalidScenario);
  CHECK(detail.rfind("dose_p", 0) == 0);
  CHECK(scenario_error({{"colour", "blue"}}, &detail) == ErrorKind::InvalidScenario);
  CHECK(detail.rfind("colour", 0) == 0);
  CHECK(scenario_error({{"effect", "quadratic"}}) == ErrorKind::InvalidScenario);
  CHECK(scenario_error({{"dose", "uniform"}, {"dose_x1_slope", "0.2"}}) == ErrorKind::InvalidScenario);
  CHECK(scenario_error({{"x1_sd", "abc"}}) == ErrorKind::InvalidScenario);
  CHECK_THROWS_AS(calibrate_intercept(Scenario{}, 1.5), Error);
}

TEST_CASE("scenario text and json forms agree") {
  const auto kv = Scenario::from_key_values({{"n", "250"},
                                             {"selection", "constant"},
                                             {"selection_p", "0.4"},
                                             {"effect", "linear_dose"},
                                             {"effect_b", "0.5"},
                                             {"dose_x1_slope", "0.1"}});
  CHECK(kv.n == 250);
  CHECK(kv.selection.kind == SelectionKind::Constant);
  const auto back = Scenario::from_json(to_json(kv));
  CHECK(to_json(back) == to_json(kv));
  CHECK(generate(back, 5).cohort == generate(kv, 5).cohort);

  const auto dir = testing::scratch_dir("scenario");
  write_text_file((dir / "s.json").string(), to_json(kv).dump());
  CHECK(to_json(Scenario::from_file((dir / "s.json").string())) == to_json(kv));
  write_text_file((dir / "s.txt").string(), "# comment\nn = 250\nselection=constant\nselection_p=0.4\n");
  CHECK(Scenario::from_file((dir / "s.txt").string()).n == 250);
}

TEST_CASE("truth json lists every record") {
  const auto syn = generate(Scenario{.n = 20}, 3);
  const auto j = truth_json(syn.truth, syn.cohort);
  CHECK(j["records"].size() == 20);
  CHECK(j["records"][0]["id"] == "s1");
  CHECK(j["seed"] == 3);
  CHECK(j["scenario"]["n"] == 20);
  CHECK(j["ate"] == syn.truth.ate);
}
