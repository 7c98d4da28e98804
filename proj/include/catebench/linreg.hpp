#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "catebench/dataset.hpp"
#include "catebench/tlearner.hpp"

namespace catebench {

struct OlsFit {
  std::vector<double> coefficients;  // aligned with the design columns
  double intercept = 0.0;
  double r_squared = 0.0;  // 1 - SSE/SST, defined as 1 when SST == 0
  std::size_t n = 0;

  double predict(std::span<const double> x) const;
};

// Condition number of X'X above which the Cholesky route is abandoned in
// favour of column-pivoted QR on X.
inline constexpr double kOlsConditionLimit = 1e12;

/// Least squares with an intercept. Requires n > p + 1 and a full-rank
/// design (constant column included).
OlsFit ols_fit(const std::vector<std::vector<double>>& design, std::span<const double> targets);

nlohmann::json to_json(const OlsFit& fit);

struct ScatterRow {
  int x2 = 0;
  double tau = 0.0;
  double x1_bin = 0.0;
};

struct DoseRegression {
  OlsFit fit;                       // tau ~ x1 + x2
  std::vector<ScatterRow> scatter;  // one row per record, cohort order
};

// Regresses tau(x1_k) on (x1_k, x2_k) over every record of the cohort.
DoseRegression tau_dose_regression(const Cohort& cohort, const TLearnerModel& model);

std::string scatter_csv(std::span<const ScatterRow> rows);  // x2,tau,x1_bin

}  // namespace catebench
