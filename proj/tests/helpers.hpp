#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "catebench/dataset.hpp"
#include "catebench/synth.hpp"

namespace testing {

inline catebench::StudentRecord record(std::string id, double x1, int x2, double y) {
  catebench::StudentRecord r;
  r.id = std::move(id);
  r.x1 = x1;
  r.x2 = x2;
  r.y = y;
  return r;
}

// Cohort from (x1, x2, y) triples with ids "r0", "r1", ...
inline catebench::Cohort cohort_of(const std::vector<std::tuple<double, int, double>>& rows, double bin = 1.0) {
  std::vector<catebench::StudentRecord> records;
  for (const auto& [x1, x2, y] : rows) records.push_back(record("r" + std::to_string(records.size()), x1, x2, y));
  return catebench::Cohort(std::move(records), bin);
}

// A moderately sized synthetic cohort with both arms well populated and a
// dose-dependent effect, so the two-variable learner has something to fit.
inline catebench::Synthetic small_dose_cohort(std::uint64_t seed, std::size_t n = 400) {
  catebench::Scenario s;
  s.n = n;
  s.selection.kind = catebench::SelectionKind::Logistic;
  s.selection.intercept = -0.5;
  s.selection.slope = -0.1;
  s.dose.max_dose = 8;
  s.effect.kind = catebench::EffectKind::LinearDose;
  s.effect.a = 1.0;
  s.effect.b = 0.5;
  s.noise_sd = 3.0;
  return catebench::generate(s, seed);
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("catebench_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
