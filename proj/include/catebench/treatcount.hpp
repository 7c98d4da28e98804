#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <json.hpp>

#include "catebench/dataset.hpp"
#include "catebench/forest.hpp"
#include "catebench/tlearner.hpp"

namespace catebench {

/// Two-variable T-learner over (x1, x2).
///
/// mu1 is fit on treated rows (x1, x2 >= 1); mu0 on control rows, whose dose
/// column is identically 0. A constant column never yields a split candidate,
/// so mu0 cannot depend on the dose.
struct TLearner2Model {
  RegressionForest mu1;
  RegressionForest mu0;
  LearnerConfig config;
  std::size_t n_treated = 0;
  std::size_t n_control = 0;
  int observed_dose_min = 0;
  int observed_dose_max = 0;
};

TLearner2Model fit_t_learner2(const Cohort& cohort, const LearnerConfig& config = {});

struct IndependenceViolation {
  std::size_t record = 0;
  int x2 = 0;
  double at_zero = 0.0;
  double at_probe = 0.0;
};

struct IndependenceReport {
  std::size_t checks = 0;
  std::vector<IndependenceViolation> violations;
  bool passed() const noexcept { return violations.empty(); }
};

// Witnesses mu0(x1_k, v) == mu0(x1_k, 0) bit for bit for every record k and
// probe v.
IndependenceReport check_base_independence(const TLearner2Model& model, const Cohort& cohort,
                                           const std::vector<int>& probe_x2);

// Average over S_{x1} of mu1(x1_k, x2) - mu0(x1_k, x2_k). Requires x2 >= 1.
double phi(const TLearner2Model& model, const Cohort& cohort, double x1, int x2);

// The single summand mu1(x1, x2) - mu0(x1, 0), equal to phi() on any
// populated bin.
double phi_summand(const TLearner2Model& model, double x1, int x2);

// Mean over treated records of y_i - mu0(x1_i, x2_i).
double att2(const TLearner2Model& model, const Cohort& cohort);

struct CateSurface {
  std::vector<double> x1_values;  // ascending
  std::vector<int> x2_values;     // ascending
  // phi[i][j] at (x1_values[i], x2_values[j]); absent when phi() failed.
  std::vector<std::vector<std::optional<double>>> phi;
  std::size_t missing = 0;
  int observed_dose_min = 0;
  int observed_dose_max = 0;

  // True where x2 lies outside the treated arm's observed dose range.
  bool extrapolated(std::size_t column) const noexcept {
    return x2_values[column] < observed_dose_min || x2_values[column] > observed_dose_max;
  }
};

// Cells are evaluated in parallel when threads != 1; the result does not
// depend on the evaluation order.
CateSurface phi_surface(const TLearner2Model& model, const Cohort& cohort, std::vector<double> x1_bins,
                        std::vector<int> x2_values, unsigned threads = 1);

std::string surface_csv(const CateSurface& surface);          // x1,x2,phi (long form)
nlohmann::json surface_json(const CateSurface& surface);      // matrix form

// {1..max observed dose} plus the dose counts plotted in the reference
// figure (1, 2, 3, 5, 10, 14), sorted and deduplicated.
std::vector<int> default_probe_x2(const Cohort& cohort);

}  // namespace catebench
