#include "catebench/linreg.hpp"

#include <cmath>
#include <map>

#include <Eigen/Dense>

#include "catebench/error.hpp"
#include "catebench/format.hpp"

namespace catebench {

double OlsFit::predict(std::span<const double> x) const {
  if (x.size() != coefficients.size()) throw Error(ErrorKind::DimensionMismatch, "wrong regressor count");
  double y = intercept;
  for (std::size_t i = 0; i < x.size(); ++i) y += coefficients[i] * x[i];
  return y;
}

OlsFit ols_fit(const std::vector<std::vector<double>>& design, std::span<const double> targets) {
  const std::size_t n = design.size();
  if (n != targets.size()) {
    throw Error(ErrorKind::DimensionMismatch,
                std::to_string(n) + " design rows but " + std::to_string(targets.size()) + " targets");
  }
  const std::size_t p = n ? design.front().size() : 0;
  if (n <= p + 1) {
    throw Error(ErrorKind::Underdetermined,
                "need more than " + std::to_string(p + 1) + " rows, got " + std::to_string(n));
  }

  // Column 0 is the constant.
  Eigen::MatrixXd X(n, p + 1);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (design[i].size() != p) throw Error(ErrorKind::DimensionMismatch, "ragged design row " + std::to_string(i));
    X(i, 0) = 1.0;
    for (std::size_t j = 0; j < p; ++j) X(i, j + 1) = design[i][j];
    y(i) = targets[i];
  }

  const Eigen::MatrixXd gram = X.transpose() * X;
  const Eigen::VectorXd rhs = X.transpose() * y;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  const bool well_conditioned = lo > 0.0 && hi / lo <= kOlsConditionLimit;

  Eigen::VectorXd beta;
  if (well_conditioned) {
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) throw Error(ErrorKind::RankDeficient, "normal matrix is not positive definite");
    beta = llt.solve(rhs);
  } else {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    // The pivoted QR works on X itself, whose condition is the square root
    // of the Gram matrix's.
    qr.setThreshold(1.0 / std::sqrt(kOlsConditionLimit));
    if (qr.rank() < static_cast<Eigen::Index>(p + 1)) {
      throw Error(ErrorKind::RankDeficient, "design has rank " + std::to_string(qr.rank()) + " < " +
                                                std::to_string(p + 1) + " (a regressor is constant or collinear)");
    }
    beta = qr.solve(y);
  }

  OlsFit fit;
  fit.n = n;
  const double ybar = y.mean();
  const double sst = (y.array() - ybar).square().sum();
  if (sst == 0.0) {
    // Constant target: the exact solution is the constant itself.
    fit.coefficients.assign(p, 0.0);
    fit.intercept = ybar;
    fit.r_squared = 1.0;
    return fit;
  }
  fit.intercept = beta(0);
  fit.coefficients.assign(beta.data() + 1, beta.data() + p + 1);
  const double sse = (y - X * beta).squaredNorm();
  fit.r_squared = std::clamp(1.0 - sse / sst, 0.0, 1.0);
  return fit;
}

nlohmann::json to_json(const OlsFit& fit) {
  return {{"coefficients", fit.coefficients}, {"intercept", fit.intercept}, {"r_squared", fit.r_squared}, {"n", fit.n}};
}

DoseRegression tau_dose_regression(const Cohort& cohort, const TLearnerModel& model) {
  std::map<double, double> tau;
  for (const auto& [bin, members] : cohort.groups()) tau.emplace(bin, cate_tau(model, bin));

  DoseRegression out;
  std::vector<std::vector<double>> design;
  std::vector<double> targets;
  design.reserve(cohort.size());
  targets.reserve(cohort.size());
  out.scatter.reserve(cohort.size());
  for (std::size_t k = 0; k < cohort.size(); ++k) {
    const double bin = cohort.covariate(k);
    const double t = tau.at(bin);
    design.push_back({bin, static_cast<double>(cohort[k].x2)});
    targets.push_back(t);
    out.scatter.push_back({cohort[k].x2, t, bin});
  }
  out.fit = ols_fit(design, targets);
  return out;
}

std::string scatter_csv(std::span<const ScatterRow> rows) {
  std::string out = "x2,tau,x1_bin\n";
  for (const auto& r : rows) out += std::to_string(r.x2) + ',' + format_real(r.tau) + ',' + format_real(r.x1_bin) + '\n';
  return out;
}

}  // namespace catebench
