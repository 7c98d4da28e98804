#pragma once

// Reference implementations used to check the library. They share no code
// with src/ and favour the most literal formulation over speed.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "catebench/dataset.hpp"
#include "catebench/forest.hpp"
#include "catebench/tlearner.hpp"
#include "catebench/treatcount.hpp"

namespace oracle {

// Two-pass mean and population sd in long double.
inline std::vector<double> deviation(const std::vector<double>& raw) {
  long double sum = 0;
  for (double v : raw) sum += v;
  const long double mean = sum / raw.size();
  long double ss = 0;
  for (double v : raw) ss += (v - mean) * (v - mean);
  const long double sd = std::sqrt(ss / raw.size());
  std::vector<double> out;
  for (double v : raw) out.push_back(static_cast<double>(10.0L * (v - mean) / sd + 50.0L));
  return out;
}

inline long double mean_of(const std::vector<double>& v) {
  long double s = 0;
  for (double x : v) s += x;
  return s / v.size();
}

inline long double population_sd(const std::vector<double>& v) {
  const long double m = mean_of(v);
  long double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / v.size());
}

// Sum of squared deviations from the mean, computed in long double.
inline long double sse(const std::vector<double>& ys) {
  if (ys.empty()) return 0;
  long double s = 0;
  for (double y : ys) s += y;
  const long double m = s / ys.size();
  long double out = 0;
  for (double y : ys) out += (y - m) * (y - m);
  return out;
}

struct SplitChoice {
  std::size_t feature;
  double threshold;
};

// Enumerates every (feature, midpoint) pair on the rows of one node and
// returns the minimizer of left SSE + right SSE. Candidates within
// tie_tolerance * node SSE of the minimum are tied; the lowest feature and
// then the lowest threshold wins.
inline std::optional<SplitChoice> exhaustive_split(const catebench::TrainingSet& rows,
                                                   const std::vector<std::size_t>& node_rows, int min_leaf,
                                                   double tie_tolerance) {
  struct Scored {
    std::size_t feature;
    double threshold;
    long double sse;
  };
  std::vector<Scored> all;
  std::vector<double> node_ys;
  for (auto r : node_rows) node_ys.push_back(rows.outcome(r));
  const long double node_sse = sse(node_ys);

  for (std::size_t f = 0; f < rows.feature_count(); ++f) {
    std::set<double> distinct;
    for (auto r : node_rows) distinct.insert(rows.value(r, f));
    for (auto it = distinct.begin(); std::next(it) != distinct.end(); ++it) {
      const double lo = *it;
      const double hi = *std::next(it);
      double t = lo + (hi - lo) / 2.0;
      if (!(t > lo)) t = hi;
      std::vector<double> left, right;
      for (auto r : node_rows) (rows.value(r, f) < t ? left : right).push_back(rows.outcome(r));
      if (static_cast<int>(left.size()) < min_leaf || static_cast<int>(right.size()) < min_leaf) continue;
      all.push_back({f, t, sse(left) + sse(right)});
    }
  }
  if (all.empty()) return std::nullopt;
  long double best = all.front().sse;
  for (const auto& s : all) best = std::min(best, s.sse);
  std::optional<SplitChoice> pick;
  for (const auto& s : all) {
    if (s.sse > best + tie_tolerance * node_sse) continue;
    if (!pick || s.feature < pick->feature || (s.feature == pick->feature && s.threshold < pick->threshold)) {
      pick = SplitChoice{s.feature, s.threshold};
    }
  }
  return pick;
}

struct TreeAudit {
  std::size_t nodes_checked = 0;
  std::size_t mismatches = 0;
};

// Routes the training rows through a fitted tree and, at every node, checks
// the node statistics and that the split (or the decision to stop) agrees
// with exhaustive_split.
inline TreeAudit audit_tree(const catebench::RegressionTree& tree, const catebench::TrainingSet& rows,
                            const catebench::TreeParams& params) {
  TreeAudit audit;
  const auto& nodes = tree.nodes();
  std::vector<std::vector<std::size_t>> members(nodes.size());
  std::vector<int> depth(nodes.size(), 0);
  for (std::size_t r = 0; r < rows.size(); ++r) members[0].push_back(r);

  for (std::size_t i = 0; i < nodes.size(); ++i) {
    ++audit.nodes_checked;
    const auto& node = nodes[i];
    const auto& here = members[i];
    std::vector<double> ys;
    for (auto r : here) ys.push_back(rows.outcome(r));
    bool ok = node.n == here.size() && !here.empty() && std::abs(node.mean - mean_of(ys)) <= 1e-9;

    const bool constant = std::all_of(ys.begin(), ys.end(), [&](double y) { return y == ys.front(); });
    const bool must_stop = constant || depth[i] >= params.max_depth ||
                           static_cast<int>(here.size()) < params.min_samples_split;
    const auto expected =
        must_stop ? std::nullopt
                  : exhaustive_split(rows, here, params.min_samples_leaf, catebench::kSplitTieTolerance);

    if (!expected) {
      ok = ok && node.is_leaf();
    } else if (node.is_leaf()) {
      ok = false;
    } else {
      ok = ok && node.split->feature == expected->feature && node.split->threshold == expected->threshold;
      for (auto r : here) {
        const auto child = rows.value(r, node.split->feature) < node.split->threshold ? node.left : node.right;
        members[child].push_back(r);
      }
      depth[node.left] = depth[node.right] = depth[i] + 1;
    }
    if (!ok) ++audit.mismatches;
    if (!ok) break;
  }
  return audit;
}

// Minimum-norm least-squares solution via complete orthogonal decomposition
// of the augmented design [1, X].
struct LeastSquares {
  double intercept;
  std::vector<double> coefficients;
};

inline LeastSquares pseudo_inverse_ols(const std::vector<std::vector<double>>& design, const std::vector<double>& y) {
  const auto n = static_cast<Eigen::Index>(design.size());
  const auto p = static_cast<Eigen::Index>(design.front().size());
  Eigen::MatrixXd x(n, p + 1);
  Eigen::VectorXd t(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    for (Eigen::Index j = 0; j < p; ++j) x(i, j + 1) = design[i][j];
    t(i) = y[i];
  }
  const Eigen::VectorXd beta = x.completeOrthogonalDecomposition().solve(t);
  LeastSquares out{beta(0), {}};
  for (Eigen::Index j = 0; j < p; ++j) out.coefficients.push_back(beta(j + 1));
  return out;
}

// Straight-line re-summation of the aggregate estimators from per-record
// predictions.
inline double resum_ate(const catebench::TLearnerModel& m, const catebench::Cohort& c) {
  long double s = 0;
  for (std::size_t k = 0; k < c.size(); ++k) {
    const double x = c.covariate(k);
    s += m.mu1.predict({x}) - m.mu0.predict({x});
  }
  return static_cast<double>(s / c.size());
}

inline double resum_att(const catebench::TLearnerModel& m, const catebench::Cohort& c) {
  long double s = 0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (c[k].x2 < 1) continue;
    s += c[k].y - m.mu0.predict({c.covariate(k)});
    ++n;
  }
  return static_cast<double>(s / n);
}

inline double resum_atu(const catebench::TLearnerModel& m, const catebench::Cohort& c) {
  long double s = 0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (c[k].x2 != 0) continue;
    s += m.mu1.predict({c.covariate(k)}) - c[k].y;
    ++n;
  }
  return static_cast<double>(s / n);
}

inline double resum_att2(const catebench::TLearner2Model& m, const catebench::Cohort& c) {
  long double s = 0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (c[k].x2 < 1) continue;
    s += c[k].y - m.mu0.predict({c.covariate(k), static_cast<double>(c[k].x2)});
    ++n;
  }
  return static_cast<double>(s / n);
}

// The bin average over S_{x1}, evaluated literally with each member's own
// observed dose in the base-response term.
inline double phi_aggregate(const catebench::TLearner2Model& m, const catebench::Cohort& c, double bin, int x2) {
  long double s = 0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (c.covariate(k) != bin) continue;
    const double x = c.covariate(k);
    s += m.mu1.predict({x, static_cast<double>(x2)}) - m.mu0.predict({x, static_cast<double>(c[k].x2)});
    ++n;
  }
  return static_cast<double>(s / n);
}

}  // namespace oracle
