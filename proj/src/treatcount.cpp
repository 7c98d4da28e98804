#include "catebench/treatcount.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <cstdint>
#include <set>
#include <thread>

#include "catebench/error.hpp"
#include "catebench/format.hpp"

namespace catebench {

TLearner2Model fit_t_learner2(const Cohort& cohort, const LearnerConfig& config) {
  if (cohort.treated().empty()) throw Error(ErrorKind::EmptyArm, "R1");
  if (cohort.control().empty()) throw Error(ErrorKind::EmptyArm, "R0");

  TrainingSet treated(2);
  TrainingSet control(2);
  int dose_min = cohort[cohort.treated().front()].x2;
  int dose_max = dose_min;
  for (auto i : cohort.treated()) {
    const auto& r = cohort[i];
    treated.add(std::array{cohort.covariate(i), static_cast<double>(r.x2)}, r.y);
    dose_min = std::min(dose_min, r.x2);
    dose_max = std::max(dose_max, r.x2);
  }
  // Controls have x2 == 0 by the partition; the zero is written explicitly.
  for (auto j : cohort.control()) control.add(std::array{cohort.covariate(j), 0.0}, cohort[j].y);

  return TLearner2Model{fit_forest(treated, config.tree, config.forest_options(1)),
                        fit_forest(control, config.tree, config.forest_options(0)),
                        config,
                        treated.size(),
                        control.size(),
                        dose_min,
                        dose_max};
}

IndependenceReport check_base_independence(const TLearner2Model& model, const Cohort& cohort,
                                           const std::vector<int>& probe_x2) {
  IndependenceReport report;
  for (std::size_t k = 0; k < cohort.size(); ++k) {
    const double x1 = cohort.covariate(k);
    const double base = model.mu0.predict({x1, 0.0});
    for (int v : probe_x2) {
      const double probed = model.mu0.predict({x1, static_cast<double>(v)});
      ++report.checks;
      if (std::bit_cast<std::uint64_t>(probed) != std::bit_cast<std::uint64_t>(base)) {
        report.violations.push_back({k, v, base, probed});
      }
    }
  }
  return report;
}

double phi(const TLearner2Model& model, const Cohort& cohort, double x1, int x2) {
  if (x2 < 1) throw Error(ErrorKind::DomainError, "phi is defined for x2 >= 1, got " + std::to_string(x2));
  const auto members = cohort.members(x1);
  if (members.empty()) throw Error(ErrorKind::EmptyBin, "no records in bin " + format_real(x1));
  double sum = 0.0;
  for (auto k : members) {
    const double xk = cohort.covariate(k);
    sum += model.mu1.predict({xk, static_cast<double>(x2)}) - model.mu0.predict({xk, static_cast<double>(cohort[k].x2)});
  }
  return sum / static_cast<double>(members.size());
}

double phi_summand(const TLearner2Model& model, double x1, int x2) {
  if (x2 < 1) throw Error(ErrorKind::DomainError, "phi is defined for x2 >= 1, got " + std::to_string(x2));
  return model.mu1.predict({x1, static_cast<double>(x2)}) - model.mu0.predict({x1, 0.0});
}

double att2(const TLearner2Model& model, const Cohort& cohort) {
  const auto& r1 = cohort.treated();
  if (r1.empty()) throw Error(ErrorKind::EmptyArm, "R1");
  double sum = 0.0;
  for (auto i : r1) sum += cohort[i].y - model.mu0.predict({cohort.covariate(i), static_cast<double>(cohort[i].x2)});
  return sum / static_cast<double>(r1.size());
}

CateSurface phi_surface(const TLearner2Model& model, const Cohort& cohort, std::vector<double> x1_bins,
                        std::vector<int> x2_values, unsigned threads) {
  for (int v : x2_values) {
    if (v < 1) throw Error(ErrorKind::DomainError, "surface x2 values must be >= 1, got " + std::to_string(v));
  }
  std::sort(x1_bins.begin(), x1_bins.end());
  x1_bins.erase(std::unique(x1_bins.begin(), x1_bins.end()), x1_bins.end());
  std::sort(x2_values.begin(), x2_values.end());
  x2_values.erase(std::unique(x2_values.begin(), x2_values.end()), x2_values.end());

  CateSurface s;
  s.x1_values = std::move(x1_bins);
  s.x2_values = std::move(x2_values);
  s.observed_dose_min = model.observed_dose_min;
  s.observed_dose_max = model.observed_dose_max;
  s.phi.assign(s.x1_values.size(), std::vector<std::optional<double>>(s.x2_values.size()));

  const std::size_t cols = s.x2_values.size();
  const std::size_t cells = s.x1_values.size() * cols;
  auto eval = [&](std::size_t cell) {
    const std::size_t i = cell / cols;
    const std::size_t j = cell % cols;
    try {
      s.phi[i][j] = phi(model, cohort, s.x1_values[i], s.x2_values[j]);
    } catch (const Error&) {
      s.phi[i][j].reset();
    }
  };

  unsigned workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, cells));
  if (workers <= 1) {
    for (std::size_t c = 0; c < cells; ++c) eval(c);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t c = next++; c < cells; c = next++) eval(c);
      });
    }
    for (auto& t : pool) t.join();
  }

  for (const auto& row : s.phi) s.missing += static_cast<std::size_t>(std::count(row.begin(), row.end(), std::nullopt));
  return s;
}

std::string surface_csv(const CateSurface& surface) {
  std::string out = "x1,x2,phi\n";
  for (std::size_t i = 0; i < surface.x1_values.size(); ++i) {
    for (std::size_t j = 0; j < surface.x2_values.size(); ++j) {
      out += format_real(surface.x1_values[i]) + ',' + std::to_string(surface.x2_values[j]) + ',';
      if (surface.phi[i][j]) out += format_real(*surface.phi[i][j]);
      out += '\n';
    }
  }
  return out;
}

nlohmann::json surface_json(const CateSurface& surface) {
  nlohmann::json matrix = nlohmann::json::array();
  for (const auto& row : surface.phi) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& cell : row) r.push_back(cell ? nlohmann::json(*cell) : nlohmann::json(nullptr));
    matrix.push_back(std::move(r));
  }
  nlohmann::json flags = nlohmann::json::array();
  for (std::size_t j = 0; j < surface.x2_values.size(); ++j) flags.push_back(surface.extrapolated(j));
  return {{"x1_values", surface.x1_values},
          {"x2_values", surface.x2_values},
          {"phi", matrix},
          {"extrapolation_flags", flags},
          {"observed_dose_min", surface.observed_dose_min},
          {"observed_dose_max", surface.observed_dose_max},
          {"missing", surface.missing}};
}

std::vector<int> default_probe_x2(const Cohort& cohort) {
  std::set<int> probe{1, 2, 3, 5, 10, 14};
  int max_dose = 0;
  for (const auto& r : cohort.records()) max_dose = std::max(max_dose, r.x2);
  for (int v = 1; v <= max_dose; ++v) probe.insert(v);
  return {probe.begin(), probe.end()};
}

}  // namespace catebench
