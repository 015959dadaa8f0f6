#pragma once

// Listwise learning to rank with gradient-boosted regression trees. Pairwise
// logistic gradients are weighted by the change in average precision caused
// by swapping the pair (LambdaMART with a MAP objective).

#include "bli/features.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bli {

// Raised when a model is applied to features of a different layout.
class SchemaMismatchError : public DataError {
 public:
  using DataError::DataError;
};

struct GbdtParams {
  std::size_t n_trees = 200;
  std::size_t max_depth = 3;
  double learning_rate = 0.1;
  double min_child_weight = 1.0;
  double l2_leaf_reg = 1.0;
  double sigma = 1.0;
  std::uint64_t seed = 0;  // no stochastic component yet; recorded with the model

  void validate() const;  // throws ConfigError

  friend bool operator==(const GbdtParams&, const GbdtParams&) = default;
};

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaves only

  bool is_leaf() const { return feature < 0; }
};

// Binary tree stored as a node array with the root at index 0. A row goes
// left iff row[feature] < threshold.
struct RegressionTree {
  std::vector<TreeNode> nodes;

  std::size_t leaf_index(std::span<const double> row) const;
  double predict(std::span<const double> row) const { return nodes[leaf_index(row)].value; }
  std::size_t depth() const;
};

struct GbdtModel {
  std::vector<RegressionTree> trees;
  GbdtParams params;
  std::string schema_fingerprint;
  double base_score = 0.0;
  FeatureMask mask;
  std::optional<double> mix;  // tuned retriever mixing weight, if any
};

// Positions of `scores` by descending score, ties by ascending position.
std::vector<std::size_t> rank_order(std::span<const double> scores);

// Labels listed in ranked order; 0 when there are no positives.
double average_precision(std::span<const std::uint8_t> ranked_labels);

struct MapResult {
  double map = 0.0;
  std::size_t groups_used = 0;
  std::size_t groups_without_positive = 0;
};

// Mean AP over groups with at least one positive, each ranked by its scores.
MapResult mean_ap(std::span<const RankingGroup> groups, std::span<const std::vector<double>> scores);

// AP after swapping ranked positions i and j minus AP before.
double delta_ap(std::span<const std::uint8_t> ranked_labels, std::size_t i, std::size_t j);

struct Lambdas {
  std::vector<double> g;  // gradient per candidate
  std::vector<double> h;  // second-order weight per candidate
};

Lambdas compute_lambdas(std::span<const double> scores, std::span<const std::uint8_t> labels, double sigma);

// Exact greedy second-order tree fit on a column-major rows x features matrix.
RegressionTree fit_tree(const Eigen::MatrixXd& features, std::span<const double> g, std::span<const double> h,
                        const GbdtParams& params, unsigned threads = 0);

struct TrainOptions {
  FeatureMask mask;  // recorded in the model; features must already be masked
  unsigned threads = 0;
};

struct TrainResult {
  GbdtModel model;
  double initial_map = 0.0;        // MAP of the input (retrieval) order
  std::vector<double> map_trace;   // training MAP after each round
};

TrainResult train(std::span<const RankingGroup> groups, const GbdtParams& params, const TrainOptions& options = {});

// Scores rows of a candidates x kFeatureCount matrix. Throws
// SchemaMismatchError if the model was trained on another feature layout.
std::vector<double> predict(const GbdtModel& model, const RowMatrix& features);
std::vector<std::vector<double>> predict_groups(const GbdtModel& model, std::span<const RankingGroup> groups);

// JSON document; see README for the field list.
void save_model(const GbdtModel& model, const std::filesystem::path& path);
GbdtModel load_model(const std::filesystem::path& path);
std::string model_to_json(const GbdtModel& model);
GbdtModel model_from_json(std::string_view text);

void save_trace(std::span<const double> map_trace, const std::filesystem::path& path);

// Min-max normalizes both score lists within each group (a constant list
// becomes 0.5) and returns mix * ranker + (1 - mix) * retriever.
std::vector<std::vector<double>> combine_with_retriever(std::span<const std::vector<double>> ranker,
                                                        std::span<const std::vector<double>> retriever,
                                                        double mix);

}  // namespace bli
