#include "bli/ltr.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bli {
namespace {

struct SplitCandidate {
  double gain = 0.0;
  double threshold = 0.0;
  double left_g = 0.0;
  double left_h = 0.0;
  bool found = false;
};

struct NodeSums {
  double g = 0.0;
  double h = 0.0;
};

double score_term(double g, double h, double lambda) {
  const double denom = h + lambda;
  return denom > 0.0 ? g * g / denom : 0.0;
}

double leaf_weight(double g, double h, double lambda) {
  const double denom = h + lambda;
  return denom > 0.0 ? -g / denom : 0.0;
}

// Threshold strictly above `lo` and at most `hi`, so that x < threshold
// separates the two values.
double split_point(double lo, double hi) {
  const double mid = 0.5 * (lo + hi);
  return mid > lo ? mid : hi;
}

// Per-row inputs of one tree level for the binned columns.
struct RowState {
  double g = 0.0;
  double h = 0.0;
  int slot = -1;  // open node index, -1 when the row's node is closed
};

struct BinSums {
  double g = 0.0;
  double h = 0.0;
  std::uint32_t count = 0;
};

// One row of a presorted column, carrying its gradients so that a node's
// rows can be scanned without touching other arrays.
struct SortedEntry {
  double value;
  double g;
  double h;
  std::uint32_t row;
};

struct Segment {
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Best split over one node's rows visited in ascending value order, with the
// sums of all rows of equal value applied together.
class SplitScan {
 public:
  SplitScan(const NodeSums& total, const GbdtParams& params)
      : total_(total), params_(params), parent_(score_term(total.g, total.h, params.l2_leaf_reg)) {}

  void add(double value, double g, double h) {
    if (seen_ && value != last_) consider(value);
    gl_ += g;
    hl_ += h;
    last_ = value;
    seen_ = true;
  }

  const SplitCandidate& best() const { return best_; }

 private:
  void consider(double next) {
    const double gr = total_.g - gl_;
    const double hr = total_.h - hl_;
    if (hl_ < params_.min_child_weight || hr < params_.min_child_weight) return;
    const double lambda = params_.l2_leaf_reg;
    const double gain = 0.5 * (score_term(gl_, hl_, lambda) + score_term(gr, hr, lambda) - parent_);
    if (gain > best_.gain) best_ = SplitCandidate{gain, split_point(last_, next), gl_, hl_, true};
  }

  NodeSums total_;
  const GbdtParams& params_;
  double parent_;
  double gl_ = 0.0;
  double hl_ = 0.0;
  double last_ = 0.0;
  bool seen_ = false;
  SplitCandidate best_;
};

// Feature columns are prepared once and reused by every boosting round.
// Columns with few distinct values are coded as indices into their sorted
// distinct values and accumulated per (node, value) in row order. The rest
// are presorted; each tree keeps their rows grouped by node in value order,
// splitting the groups stably as the tree grows. Both visit the same split
// points as a plain sorted scan.
class TreeBuilder {
 public:
  explicit TreeBuilder(const Eigen::MatrixXd& x) : n_rows_(static_cast<std::size_t>(x.rows())), columns_(&x) {
    const auto n_features = static_cast<std::size_t>(x.cols());
    levels_.resize(n_features);
    bins_.resize(n_features);
    order_.resize(n_features);
    for (std::size_t f = 0; f < n_features; ++f) {
      const double* column = x.col(static_cast<Eigen::Index>(f)).data();
      auto& levels = levels_[f];
      levels.assign(column, column + n_rows_);
      std::sort(levels.begin(), levels.end());
      levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
      if (levels.size() < 2) continue;  // constant column, never split on
      if (levels.size() <= kMaxBins) {
        auto& bins = bins_[f];
        bins.resize(n_rows_);
        for (std::size_t r = 0; r < n_rows_; ++r) {
          bins[r] = static_cast<std::uint32_t>(std::lower_bound(levels.begin(), levels.end(), column[r]) - levels.begin());
        }
      } else {
        auto& order = order_[f];
        order.resize(n_rows_);
        std::iota(order.begin(), order.end(), std::uint32_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [column](std::uint32_t a, std::uint32_t b) { return column[a] < column[b]; });
        levels.clear();
        sorted_features_.push_back(f);
      }
    }
  }

  // Fits one tree and reports the leaf every row ended up in.
  RegressionTree fit(std::span<const double> g, std::span<const double> h, const GbdtParams& params,
                     unsigned threads, std::vector<int>* row_leaf = nullptr) const {
    if (n_rows_ == 0) throw DataError("cannot fit a tree on zero rows");
    if (g.size() != n_rows_ || h.size() != n_rows_) throw InvariantError("fit_tree: gradient length differs from rows");
    const double lambda = params.l2_leaf_reg;
    const std::size_t n_features = levels_.size();

    RegressionTree tree;
    std::vector<NodeSums> sums;
    NodeSums root;
    for (std::size_t r = 0; r < n_rows_; ++r) {
      root.g += g[r];
      root.h += h[r];
    }
    tree.nodes.emplace_back();
    sums.push_back(root);
    std::vector<int> node_of_row(n_rows_, 0);
    std::vector<int> open{0};
    std::vector<RowState> state(n_rows_);
    for (std::size_t r = 0; r < n_rows_; ++r) {
      state[r].g = g[r];
      state[r].h = h[r];
    }

    // Rows of every presorted column, grouped by open node (segments[k]).
    auto& sorted = sorted_;
    auto& scratch = scratch_;
    sorted.resize(sorted_features_.size());
    scratch.resize(sorted_features_.size());
    parallel_for(sorted_features_.size(), threads, [&](std::size_t s, unsigned) {
      const std::size_t f = sorted_features_[s];
      const auto& order = order_[f];
      auto& entries = sorted[s];
      entries.resize(n_rows_);
      for (std::size_t i = 0; i < n_rows_; ++i) {
        const std::uint32_t r = order[i];
        entries[i] = SortedEntry{(*columns_)(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(f)), g[r], h[r], r};
      }
      scratch[s].resize(n_rows_);
    });
    std::vector<Segment> segments{Segment{0, n_rows_}};
    std::vector<char> goes_left(n_rows_, 0);

    for (std::size_t depth = 0; depth < params.max_depth && !open.empty(); ++depth) {
      std::vector<int> slot_of_node(tree.nodes.size(), -1);
      for (std::size_t k = 0; k < open.size(); ++k) slot_of_node[static_cast<std::size_t>(open[k])] = static_cast<int>(k);
      for (std::size_t r = 0; r < n_rows_; ++r) state[r].slot = slot_of_node[static_cast<std::size_t>(node_of_row[r])];
      std::vector<std::size_t> sorted_index(n_features, sorted_features_.size());
      for (std::size_t s = 0; s < sorted_features_.size(); ++s) sorted_index[sorted_features_[s]] = s;

      // best[f][k]: best split of open node k on feature f.
      std::vector<std::vector<SplitCandidate>> best(n_features);
      parallel_for(n_features, threads, [&](std::size_t f, unsigned) {
        auto& result = best[f];
        result.assign(open.size(), SplitCandidate{});
        if (sorted_index[f] < sorted_features_.size()) {
          const auto& entries = sorted[sorted_index[f]];
          for (std::size_t k = 0; k < open.size(); ++k) {
            SplitScan scan(sums[static_cast<std::size_t>(open[k])], params);
            for (std::size_t i = segments[k].begin; i < segments[k].end; ++i) {
              scan.add(entries[i].value, entries[i].g, entries[i].h);
            }
            result[k] = scan.best();
          }
          return;
        }
        const auto& bins = bins_[f];
        if (bins.empty()) return;
        const auto& levels = levels_[f];
        const std::size_t nb = levels.size();
        std::vector<BinSums> acc(open.size() * nb);
        for (std::size_t r = 0; r < n_rows_; ++r) {
          const RowState& row = state[r];
          if (row.slot < 0) continue;
          BinSums& b = acc[static_cast<std::size_t>(row.slot) * nb + bins[r]];
          b.g += row.g;
          b.h += row.h;
          ++b.count;
        }
        for (std::size_t k = 0; k < open.size(); ++k) {
          SplitScan scan(sums[static_cast<std::size_t>(open[k])], params);
          const BinSums* node_bins = acc.data() + k * nb;
          for (std::size_t b = 0; b < nb; ++b) {
            if (node_bins[b].count != 0) scan.add(levels[b], node_bins[b].g, node_bins[b].h);
          }
          result[k] = scan.best();
        }
      });

      std::vector<int> next_open;
      std::vector<char> split_here(tree.nodes.size(), 0);
      std::vector<std::size_t> split_slots;
      for (std::size_t k = 0; k < open.size(); ++k) {
        std::size_t best_feature = n_features;
        for (std::size_t f = 0; f < n_features; ++f) {
          if (!best[f][k].found) continue;
          if (best_feature == n_features || best[f][k].gain > best[best_feature][k].gain) best_feature = f;
        }
        if (best_feature == n_features) continue;
        const SplitCandidate& split = best[best_feature][k];
        const auto node = static_cast<std::size_t>(open[k]);
        const NodeSums total = sums[node];
        const int left = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        sums.push_back(NodeSums{split.left_g, split.left_h});
        sums.push_back(NodeSums{total.g - split.left_g, total.h - split.left_h});
        TreeNode& parent = tree.nodes[node];
        parent.feature = static_cast<int>(best_feature);
        parent.threshold = split.threshold;
        parent.left = left;
        parent.right = left + 1;
        split_here[node] = 1;
        split_slots.push_back(k);
        next_open.push_back(left);
        next_open.push_back(left + 1);
      }
      std::vector<std::size_t> left_count(open.size(), 0);
      for (std::size_t r = 0; r < n_rows_; ++r) {
        const auto node = static_cast<std::size_t>(node_of_row[r]);
        if (!split_here[node]) continue;
        const TreeNode& parent = tree.nodes[node];
        const double v = (*columns_)(static_cast<Eigen::Index>(r), parent.feature);
        goes_left[r] = v < parent.threshold ? 1 : 0;
        node_of_row[r] = goes_left[r] ? parent.left : parent.right;
        if (goes_left[r]) ++left_count[static_cast<std::size_t>(state[r].slot)];
      }
      open = std::move(next_open);

      if (depth + 1 < params.max_depth && !open.empty() && !sorted_features_.empty()) {
        std::vector<Segment> next_segments;
        std::size_t cursor = 0;
        for (std::size_t k : split_slots) {
          const std::size_t size = segments[k].end - segments[k].begin;
          next_segments.push_back(Segment{cursor, cursor + left_count[k]});
          next_segments.push_back(Segment{cursor + left_count[k], cursor + size});
          cursor += size;
        }
        parallel_for(sorted_features_.size(), threads, [&](std::size_t s, unsigned) {
          const auto& from = sorted[s];
          auto& to = scratch[s];
          for (std::size_t j = 0; j < split_slots.size(); ++j) {
            const Segment& seg = segments[split_slots[j]];
            std::size_t l = next_segments[2 * j].begin;
            std::size_t r = next_segments[2 * j + 1].begin;
            for (std::size_t i = seg.begin; i < seg.end; ++i) {
              if (goes_left[from[i].row]) {
                to[l++] = from[i];
              } else {
                to[r++] = from[i];
              }
            }
          }
          std::swap(sorted[s], scratch[s]);
        });
        segments = std::move(next_segments);
      }
    }

    for (std::size_t n = 0; n < tree.nodes.size(); ++n) {
      if (tree.nodes[n].is_leaf()) tree.nodes[n].value = leaf_weight(sums[n].g, sums[n].h, lambda);
    }
    if (row_leaf != nullptr) *row_leaf = std::move(node_of_row);
    return tree;
  }

 private:
  static constexpr std::size_t kMaxBins = 1024;

  std::size_t n_rows_;
  const Eigen::MatrixXd* columns_;
  std::vector<std::vector<double>> levels_;        // sorted distinct values of binned columns
  std::vector<std::vector<std::uint32_t>> bins_;   // binned columns: row -> index into levels_
  std::vector<std::vector<std::uint32_t>> order_;  // presorted columns: rows by ascending value
  std::vector<std::size_t> sorted_features_;
  // Per-tree working storage, kept between calls to avoid reallocating it.
  mutable std::vector<std::vector<SortedEntry>> sorted_;
  mutable std::vector<std::vector<SortedEntry>> scratch_;
};

void require_schema(const GbdtModel& model, Eigen::Index columns) {
  if (model.schema_fingerprint != FeatureSchema::fingerprint()) {
    throw SchemaMismatchError(fmt::format("model schema fingerprint '{}' does not match features '{}'",
                                          model.schema_fingerprint, FeatureSchema::fingerprint()));
  }
  if (columns != static_cast<Eigen::Index>(kFeatureCount)) {
    throw SchemaMismatchError(fmt::format("expected {} feature columns, got {}", kFeatureCount, columns));
  }
}

}  // namespace

void GbdtParams::validate() const {
  std::vector<std::string> problems;
  if (n_trees < 1) problems.emplace_back("n_trees must be >= 1");
  if (max_depth < 1) problems.emplace_back("max_depth must be >= 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) problems.emplace_back("learning_rate must be in (0, 1]");
  if (!(l2_leaf_reg >= 0.0)) problems.emplace_back("l2_leaf_reg must be >= 0");
  if (!(min_child_weight >= 0.0)) problems.emplace_back("min_child_weight must be >= 0");
  if (!(sigma > 0.0)) problems.emplace_back("sigma must be > 0");
  if (!problems.empty()) {
    std::string message = "invalid GBDT parameters:";
    for (const auto& p : problems) message += " " + p + ";";
    throw ConfigError(message);
  }
}

std::size_t RegressionTree::leaf_index(std::span<const double> row) const {
  std::size_t n = 0;
  while (!nodes[n].is_leaf()) {
    const TreeNode& node = nodes[n];
    n = static_cast<std::size_t>(row[static_cast<std::size_t>(node.feature)] < node.threshold ? node.left : node.right);
  }
  return n;
}

std::size_t RegressionTree::depth() const {
  std::size_t deepest = 0;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [n, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (!nodes[n].is_leaf()) {
      stack.emplace_back(static_cast<std::size_t>(nodes[n].left), d + 1);
      stack.emplace_back(static_cast<std::size_t>(nodes[n].right), d + 1);
    }
  }
  return deepest;
}

RegressionTree fit_tree(const Eigen::MatrixXd& features, std::span<const double> g, std::span<const double> h,
                        const GbdtParams& params, unsigned threads) {
  if (features.rows() == 0) throw DataError("cannot fit a tree on zero rows");
  return TreeBuilder(features).fit(g, h, params, threads);
}

TrainResult train(std::span<const RankingGroup> groups, const GbdtParams& params, const TrainOptions& options) {
  params.validate();
  std::vector<std::size_t> offset(groups.size() + 1, 0);
  std::size_t trainable = 0;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (groups[i].features.cols() != static_cast<Eigen::Index>(kFeatureCount)) {
      throw SchemaMismatchError("training group has the wrong number of feature columns");
    }
    offset[i + 1] = offset[i] + groups[i].size();
    if (groups[i].has_positive() && groups[i].has_negative()) ++trainable;
  }
  if (trainable == 0) {
    throw DataError("no trainable group: every group needs at least one positive and one negative candidate");
  }
  const std::size_t n_rows = offset.back();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(kFeatureCount));
  for (std::size_t i = 0; i < groups.size(); ++i) {
    x.middleRows(static_cast<Eigen::Index>(offset[i]), static_cast<Eigen::Index>(groups[i].size())) = groups[i].features;
  }

  TrainResult result;
  GbdtModel& model = result.model;
  model.params = params;
  model.schema_fingerprint = FeatureSchema::fingerprint();
  model.mask = options.mask;

  std::vector<double> scores(n_rows, model.base_score);
  std::vector<std::vector<double>> group_scores(groups.size());
  auto refresh_group_scores = [&] {
    for (std::size_t i = 0; i < groups.size(); ++i) {
      group_scores[i].assign(scores.begin() + static_cast<std::ptrdiff_t>(offset[i]),
                             scores.begin() + static_cast<std::ptrdiff_t>(offset[i + 1]));
    }
  };
  refresh_group_scores();
  result.initial_map = mean_ap(groups, group_scores).map;

  const TreeBuilder builder(x);
  std::vector<double> g(n_rows);
  std::vector<double> h(n_rows);
  std::vector<int> row_leaf;
  for (std::size_t round = 0; round < params.n_trees; ++round) {
    std::fill(g.begin(), g.end(), 0.0);
    std::fill(h.begin(), h.end(), 0.0);
    parallel_for(groups.size(), options.threads, [&](std::size_t i, unsigned) {
      const auto& group = groups[i];
      if (!group.has_positive() || !group.has_negative()) return;
      const auto lambdas = compute_lambdas(group_scores[i], group.labels, params.sigma);
      std::copy(lambdas.g.begin(), lambdas.g.end(), g.begin() + static_cast<std::ptrdiff_t>(offset[i]));
      std::copy(lambdas.h.begin(), lambdas.h.end(), h.begin() + static_cast<std::ptrdiff_t>(offset[i]));
    });
    RegressionTree tree = builder.fit(g, h, params, options.threads, &row_leaf);
    for (std::size_t r = 0; r < n_rows; ++r) {
      scores[r] += params.learning_rate * tree.nodes[static_cast<std::size_t>(row_leaf[r])].value;
    }
    model.trees.push_back(std::move(tree));
    refresh_group_scores();
    result.map_trace.push_back(mean_ap(groups, group_scores).map);
  }
  return result;
}

std::vector<double> predict(const GbdtModel& model, const RowMatrix& features) {
  require_schema(model, features.cols());
  std::vector<double> out(static_cast<std::size_t>(features.rows()), model.base_score);
  for (Eigen::Index r = 0; r < features.rows(); ++r) {
    const std::span<const double> row(features.row(r).data(), kFeatureCount);
    double s = model.base_score;
    for (const auto& tree : model.trees) s += model.params.learning_rate * tree.predict(row);
    out[static_cast<std::size_t>(r)] = s;
  }
  return out;
}

std::vector<std::vector<double>> predict_groups(const GbdtModel& model, std::span<const RankingGroup> groups) {
  std::vector<std::vector<double>> out;
  out.reserve(groups.size());
  for (const auto& g : groups) out.push_back(predict(model, g.features));
  return out;
}

}  // namespace bli
