#include "catebench/forest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <deque>
#include <numeric>
#include <random>
#include <thread>

#include "catebench/error.hpp"
#include "catebench/format.hpp"
#include "catebench/rng.hpp"

namespace catebench {

void TreeParams::validate() const {
  if (max_depth < 1) throw Error(ErrorKind::InvalidArgument, "max_depth must be >= 1");
  if (min_samples_split < 2) throw Error(ErrorKind::InvalidArgument, "min_samples_split must be >= 2");
  if (min_samples_leaf < 1) throw Error(ErrorKind::InvalidArgument, "min_samples_leaf must be >= 1");
}

TrainingSet::TrainingSet(std::size_t feature_count) : feature_count_(feature_count) {
  if (feature_count == 0) throw Error(ErrorKind::DimensionMismatch, "feature count must be positive");
}

TrainingSet::TrainingSet(const std::vector<std::vector<double>>& rows, std::span<const double> outcomes)
    : feature_count_(rows.empty() ? 0 : rows.front().size()) {
  if (rows.empty()) throw Error(ErrorKind::EmptyInput, "no training rows");
  if (rows.size() != outcomes.size()) {
    throw Error(ErrorKind::DimensionMismatch, std::to_string(rows.size()) + " rows but " +
                                                  std::to_string(outcomes.size()) + " outcomes");
  }
  if (feature_count_ == 0) throw Error(ErrorKind::DimensionMismatch, "feature vectors are empty");
  values_.reserve(rows.size() * feature_count_);
  outcomes_.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) add(rows[i], outcomes[i]);
}

void TrainingSet::add(std::span<const double> features, double outcome) {
  if (features.size() != feature_count_) {
    throw Error(ErrorKind::DimensionMismatch, "row has " + std::to_string(features.size()) + " features, expected " +
                                                  std::to_string(feature_count_));
  }
  values_.insert(values_.end(), features.begin(), features.end());
  outcomes_.push_back(outcome);
}

RegressionTree::RegressionTree(std::vector<TreeNode> nodes, std::size_t feature_count)
    : nodes_(std::move(nodes)), feature_count_(feature_count) {
  if (nodes_.empty()) throw Error(ErrorKind::EmptyInput, "tree has no nodes");
  const auto count = static_cast<std::int32_t>(nodes_.size());
  for (const auto& node : nodes_) {
    if (node.is_leaf()) {
      if (node.left != -1 || node.right != -1) throw Error(ErrorKind::InvalidArgument, "leaf with children");
      continue;
    }
    if (node.split->feature >= feature_count_) throw Error(ErrorKind::DimensionMismatch, "split feature out of range");
    if (node.left <= 0 || node.right <= 0 || node.left >= count || node.right >= count) {
      throw Error(ErrorKind::InvalidArgument, "child index out of range");
    }
    if (nodes_[node.left].n + nodes_[node.right].n != node.n) {
      throw Error(ErrorKind::InvalidArgument, "child counts do not add up to the parent count");
    }
  }
}

int RegressionTree::depth() const {
  std::vector<int> d(nodes_.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (!nodes_[i].is_leaf()) {
      d[nodes_[i].left] = d[i] + 1;
      d[nodes_[i].right] = d[i] + 1;
    }
  }
  return deepest;
}

std::size_t RegressionTree::leaf_for(std::span<const double> x) const {
  if (x.size() != feature_count_) {
    throw Error(ErrorKind::DimensionMismatch, "expected " + std::to_string(feature_count_) + " features, got " +
                                                  std::to_string(x.size()));
  }
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& s = *nodes_[i].split;
    i = static_cast<std::size_t>(x[s.feature] < s.threshold ? nodes_[i].left : nodes_[i].right);
  }
  return i;
}

namespace {

struct Candidate {
  std::size_t feature;
  double threshold;
  double sse;
  std::size_t n_left;
};

// Midpoint of two consecutive distinct values, nudged up when rounding would
// put it on the lower value (the routing rule needs lo < t <= hi).
double midpoint(double lo, double hi) {
  const double t = lo + (hi - lo) / 2.0;
  return t > lo ? t : hi;
}

// Best split of the rows in `idx`, or nullopt when no admissible candidate
// exists. `order` is scratch space.
std::optional<Candidate> best_split(const TrainingSet& rows, std::span<const std::size_t> idx,
                                    std::span<const std::size_t> features, const TreeParams& params, double mean,
                                    std::vector<std::size_t>& order) {
  const std::size_t m = idx.size();
  const auto min_leaf = static_cast<std::size_t>(params.min_samples_leaf);

  double total_sum = 0.0;
  double total_sq = 0.0;
  for (auto r : idx) {
    const double c = rows.outcome(r) - mean;
    total_sum += c;
    total_sq += c * c;
  }

  std::vector<Candidate> candidates;
  for (auto f : features) {
    order.assign(idx.begin(), idx.end());
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return rows.value(a, f) < rows.value(b, f); });
    double left_sum = 0.0;
    double left_sq = 0.0;
    for (std::size_t i = 0; i + 1 < m; ++i) {
      const double c = rows.outcome(order[i]) - mean;
      left_sum += c;
      left_sq += c * c;
      const double lo = rows.value(order[i], f);
      const double hi = rows.value(order[i + 1], f);
      if (!(lo < hi)) continue;
      const std::size_t n_left = i + 1;
      const std::size_t n_right = m - n_left;
      if (n_left < min_leaf || n_right < min_leaf) continue;
      const double right_sum = total_sum - left_sum;
      const double sse_left = left_sq - left_sum * left_sum / static_cast<double>(n_left);
      const double sse_right = (total_sq - left_sq) - right_sum * right_sum / static_cast<double>(n_right);
      candidates.push_back({f, midpoint(lo, hi), std::max(0.0, sse_left) + std::max(0.0, sse_right), n_left});
    }
  }
  if (candidates.empty()) return std::nullopt;

  double min_sse = candidates.front().sse;
  for (const auto& c : candidates) min_sse = std::min(min_sse, c.sse);
  const double tol = kSplitTieTolerance * total_sq;
  const Candidate* chosen = nullptr;
  for (const auto& c : candidates) {
    if (c.sse > min_sse + tol) continue;
    if (!chosen || c.feature < chosen->feature ||
        (c.feature == chosen->feature && c.threshold < chosen->threshold)) {
      chosen = &c;
    }
  }
  return *chosen;
}

}  // namespace

RegressionTree fit_tree_on(const TrainingSet& rows, std::span<const std::size_t> sample, const TreeParams& params,
                           std::size_t max_features, std::uint64_t feature_rng_seed) {
  params.validate();
  if (sample.empty()) throw Error(ErrorKind::EmptyInput, "no training rows");
  const std::size_t p = rows.feature_count();
  const bool subsample = max_features > 0 && max_features < p;
  std::mt19937_64 feature_rng(feature_rng_seed);

  struct Pending {
    std::size_t node;
    std::vector<std::size_t> idx;
    int depth;
  };

  std::vector<TreeNode> nodes;
  std::deque<Pending> queue;
  nodes.emplace_back();
  queue.push_back({0, std::vector<std::size_t>(sample.begin(), sample.end()), 0});

  std::vector<std::size_t> all_features(p);
  std::iota(all_features.begin(), all_features.end(), std::size_t{0});
  std::vector<std::size_t> order;

  while (!queue.empty()) {
    Pending item = std::move(queue.front());
    queue.pop_front();
    const auto& idx = item.idx;
    const std::size_t m = idx.size();

    double sum = 0.0;
    for (auto r : idx) sum += rows.outcome(r);
    const double mean = sum / static_cast<double>(m);
    nodes[item.node].n = m;
    nodes[item.node].mean = mean;

    const double first = rows.outcome(idx.front());
    const bool constant = std::all_of(idx.begin(), idx.end(), [&](std::size_t r) { return rows.outcome(r) == first; });
    if (constant || item.depth >= params.max_depth || m < static_cast<std::size_t>(params.min_samples_split)) {
      continue;
    }

    std::vector<std::size_t> features = all_features;
    if (subsample) {
      std::shuffle(features.begin(), features.end(), feature_rng);
      features.resize(max_features);
      std::sort(features.begin(), features.end());
    }
    const auto split = best_split(rows, idx, features, params, mean, order);
    if (!split) continue;

    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    left.reserve(split->n_left);
    right.reserve(m - split->n_left);
    for (auto r : idx) (rows.value(r, split->feature) < split->threshold ? left : right).push_back(r);

    const auto left_id = static_cast<std::int32_t>(nodes.size());
    nodes[item.node].split = Split{split->feature, split->threshold};
    nodes[item.node].left = left_id;
    nodes[item.node].right = left_id + 1;
    nodes.emplace_back();
    nodes.emplace_back();
    queue.push_back({static_cast<std::size_t>(left_id), std::move(left), item.depth + 1});
    queue.push_back({static_cast<std::size_t>(left_id) + 1, std::move(right), item.depth + 1});
  }
  return RegressionTree(std::move(nodes), p);
}

RegressionTree fit_tree(const TrainingSet& rows, const TreeParams& params) {
  if (rows.empty()) throw Error(ErrorKind::EmptyInput, "no training rows");
  std::vector<std::size_t> all(rows.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return fit_tree_on(rows, all, params);
}

RegressionForest::RegressionForest(std::vector<RegressionTree> trees, std::size_t feature_count, TreeParams params,
                                   ForestOptions options)
    : trees_(std::move(trees)), feature_count_(feature_count), params_(params), options_(options) {
  if (trees_.empty()) throw Error(ErrorKind::EmptyInput, "forest has no trees");
  for (const auto& t : trees_) {
    if (t.feature_count() != feature_count_) throw Error(ErrorKind::DimensionMismatch, "tree feature count differs");
  }
  options_.n_trees = trees_.size();
}

double RegressionForest::predict(std::span<const double> x) const {
  if (x.size() != feature_count_) {
    throw Error(ErrorKind::DimensionMismatch, "expected " + std::to_string(feature_count_) + " features, got " +
                                                  std::to_string(x.size()));
  }
  double sum = 0.0;
  for (const auto& t : trees_) sum += t.predict(x);
  return sum / static_cast<double>(trees_.size());
}

RegressionForest fit_forest(const TrainingSet& rows, const TreeParams& params, const ForestOptions& options) {
  params.validate();
  if (rows.empty()) throw Error(ErrorKind::EmptyInput, "no training rows");
  if (options.n_trees == 0) throw Error(ErrorKind::InvalidArgument, "n_trees must be positive");

  const std::size_t n = rows.size();
  auto grow = [&](std::size_t t) {
    // Stream 2t drives the bootstrap draw, stream 2t+1 feature subsampling.
    std::vector<std::size_t> sample(n);
    if (options.bootstrap) {
      std::mt19937_64 rng(stream_seed(options.seed, 2 * t));
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      for (auto& s : sample) s = pick(rng);
    } else {
      std::iota(sample.begin(), sample.end(), std::size_t{0});
    }
    return fit_tree_on(rows, sample, params, options.max_features, stream_seed(options.seed, 2 * t + 1));
  };

  std::vector<std::optional<RegressionTree>> grown(options.n_trees);
  unsigned workers = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, options.n_trees));
  if (workers <= 1) {
    for (std::size_t t = 0; t < options.n_trees; ++t) grown[t].emplace(grow(t));
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        (void)w;
        for (std::size_t t = next++; t < options.n_trees; t = next++) {
          try {
            grown[t].emplace(grow(t));
          } catch (...) {
            if (!failed.exchange(true)) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

  std::vector<RegressionTree> trees;
  trees.reserve(options.n_trees);
  for (auto& g : grown) trees.push_back(std::move(*g));
  return RegressionForest(std::move(trees), rows.feature_count(), params, options);
}

namespace {

std::string feature_name(const std::vector<std::string>& names, std::size_t f) {
  return f < names.size() ? names[f] : "f" + std::to_string(f);
}

void check_names(const RegressionTree& tree, const std::vector<std::string>& names) {
  if (!names.empty() && names.size() != tree.feature_count()) {
    throw Error(ErrorKind::DimensionMismatch, std::to_string(names.size()) + " feature names for " +
                                                  std::to_string(tree.feature_count()) + " features");
  }
}

std::string one_decimal(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

void render(const RegressionTree& tree, const std::vector<std::string>& names, std::size_t id, int depth,
            std::string& out) {
  const auto& node = tree.nodes()[id];
  out.append(static_cast<std::size_t>(depth) * 2, ' ');
  out += 'n' + std::to_string(id) + ": ";
  if (!node.is_leaf()) {
    out += feature_name(names, node.split->feature) + " < " + format_real(node.split->threshold) + " | ";
  }
  out += "n=" + std::to_string(node.n) + " | mean=" + one_decimal(node.mean) + '\n';
  if (!node.is_leaf()) {
    render(tree, names, static_cast<std::size_t>(node.left), depth + 1, out);
    render(tree, names, static_cast<std::size_t>(node.right), depth + 1, out);
  }
}

nlohmann::json node_json(const RegressionTree& tree, const std::vector<std::string>& names, std::size_t id) {
  const auto& node = tree.nodes()[id];
  nlohmann::json j;
  j["id"] = id;
  if (node.is_leaf()) {
    j["split"] = nullptr;
  } else {
    j["split"] = {{"feature", node.split->feature},
                  {"name", feature_name(names, node.split->feature)},
                  {"threshold", node.split->threshold}};
  }
  j["n"] = node.n;
  j["mean"] = node.mean;
  if (!node.is_leaf()) {
    j["left"] = node_json(tree, names, static_cast<std::size_t>(node.left));
    j["right"] = node_json(tree, names, static_cast<std::size_t>(node.right));
  }
  return j;
}

}  // namespace

std::string tree_report_text(const RegressionTree& tree, const std::vector<std::string>& feature_names) {
  check_names(tree, feature_names);
  std::string out;
  render(tree, feature_names, 0, 0, out);
  return out;
}

nlohmann::json tree_report_json(const RegressionTree& tree, const std::vector<std::string>& feature_names) {
  check_names(tree, feature_names);
  return node_json(tree, feature_names, 0);
}

}  // namespace catebench
