#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace catebench {

struct TreeParams {
  int max_depth = 2;
  int min_samples_split = 2;
  int min_samples_leaf = 1;

  void validate() const;
  friend bool operator==(const TreeParams&, const TreeParams&) = default;
};

/// Row-major feature matrix with one outcome per row.
class TrainingSet {
 public:
  explicit TrainingSet(std::size_t feature_count);
  TrainingSet(const std::vector<std::vector<double>>& rows, std::span<const double> outcomes);

  void add(std::span<const double> features, double outcome);

  std::size_t size() const noexcept { return outcomes_.size(); }
  bool empty() const noexcept { return outcomes_.empty(); }
  std::size_t feature_count() const noexcept { return feature_count_; }
  double value(std::size_t row, std::size_t feature) const noexcept { return values_[row * feature_count_ + feature]; }
  std::span<const double> row(std::size_t i) const noexcept { return {values_.data() + i * feature_count_, feature_count_}; }
  double outcome(std::size_t i) const noexcept { return outcomes_[i]; }
  std::span<const double> outcomes() const noexcept { return outcomes_; }

 private:
  std::size_t feature_count_;
  std::vector<double> values_;
  std::vector<double> outcomes_;
};

struct Split {
  std::size_t feature = 0;
  double threshold = 0.0;  // a sample goes left iff value < threshold
  friend bool operator==(const Split&, const Split&) = default;
};

struct TreeNode {
  std::optional<Split> split;
  std::size_t n = 0;
  double mean = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;

  bool is_leaf() const noexcept { return !split.has_value(); }
};

/// Nodes are stored in breadth-first order; index 0 is the root.
class RegressionTree {
 public:
  RegressionTree(std::vector<TreeNode> nodes, std::size_t feature_count);

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  const TreeNode& root() const noexcept { return nodes_.front(); }
  std::size_t feature_count() const noexcept { return feature_count_; }
  int depth() const;

  std::size_t leaf_for(std::span<const double> x) const;
  double predict(std::span<const double> x) const { return nodes_[leaf_for(x)].mean; }

 private:
  std::vector<TreeNode> nodes_;
  std::size_t feature_count_;
};

// Child SSE values within this fraction of the node SSE count as tied; ties
// go to the lowest feature index, then the lowest threshold.
inline constexpr double kSplitTieTolerance = 1e-10;

RegressionTree fit_tree(const TrainingSet& rows, const TreeParams& params = {});

// Grows a tree on `sample` (row indices, repeats allowed). `feature_rng_seed`
// enables per-split feature subsampling of `max_features` candidates.
RegressionTree fit_tree_on(const TrainingSet& rows, std::span<const std::size_t> sample, const TreeParams& params,
                           std::size_t max_features = 0, std::uint64_t feature_rng_seed = 0);

struct ForestOptions {
  std::size_t n_trees = 100;
  std::uint64_t seed = 0;
  bool bootstrap = true;
  std::size_t max_features = 0;  // 0: every feature is a split candidate
  unsigned threads = 0;          // 0: hardware concurrency
};

class RegressionForest {
 public:
  RegressionForest(std::vector<RegressionTree> trees, std::size_t feature_count, TreeParams params = {},
                   ForestOptions options = {});

  const std::vector<RegressionTree>& trees() const noexcept { return trees_; }
  std::size_t n_trees() const noexcept { return trees_.size(); }
  std::size_t feature_count() const noexcept { return feature_count_; }
  std::uint64_t seed() const noexcept { return options_.seed; }
  const TreeParams& params() const noexcept { return params_; }
  const ForestOptions& options() const noexcept { return options_; }

  double predict(std::span<const double> x) const;
  double predict(std::initializer_list<double> x) const { return predict(std::span<const double>(x.begin(), x.size())); }

 private:
  std::vector<RegressionTree> trees_;
  std::size_t feature_count_;
  TreeParams params_;
  ForestOptions options_;
};

RegressionForest fit_forest(const TrainingSet& rows, const TreeParams& params = {}, const ForestOptions& options = {});

// One line per node, depth first, indented by depth. Node ids are the
// breadth-first storage indices. Internal nodes show `<name> < <threshold>`;
// leaves omit it.
std::string tree_report_text(const RegressionTree& tree, const std::vector<std::string>& feature_names = {});
nlohmann::json tree_report_json(const RegressionTree& tree, const std::vector<std::string>& feature_names = {});

}  // namespace catebench
