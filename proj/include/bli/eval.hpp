#pragma once

// Evaluation and error analysis: P@1 overall and per source POS, frequency
// difference of predictions, per-POS Spearman correlation of frequency ranks,
// PCA coordinates and per-example explanations.

#include "bli/features.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bli {

// Position of the top-scored candidate, ties by candidate position.
std::size_t top_index(std::span<const double> scores);

struct PrecisionReport {
  double p_at_1 = 0.0;
  std::size_t n_eval = 0;
  std::size_t correct = 0;
  std::size_t gold_missed = 0;  // counted as failures
};

PrecisionReport precision_at_1(std::span<const RankingGroup> groups, std::span<const std::vector<double>> scores);

struct BucketAccuracy {
  std::size_t n = 0;
  double accuracy = 0.0;
};

// Groups bucketed by source POS; empty buckets are omitted.
std::map<UPos, BucketAccuracy> per_pos_accuracy(std::span<const RankingGroup> groups,
                                                std::span<const std::vector<double>> scores, const PosTable& pos_src);

struct FrequencyGap {
  double gold = 0.0;       // mean over all (source, gold) pairs
  double predicted = 0.0;  // mean over evaluated (or only wrong) top-1 predictions
  std::size_t n_gold = 0;
  std::size_t n_predicted = 0;
};

struct FrequencyDiffReport {
  FrequencyGap zipf;      // |zipf_src - zipf_other|
  FrequencyGap log_rank;  // |log2(1+rank_src) - log2(1+rank_other)|
};

FrequencyDiffReport freq_diff_report(std::span<const RankingGroup> groups, std::span<const std::vector<double>> scores,
                                     const TranslationDictionary& dict, const FrequencyTable& freq_src,
                                     const FrequencyTable& freq_tgt, bool errors_only = false);

// Pearson correlation of midranks. nullopt when either input is constant.
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

struct CorrelationCell {
  std::size_t n = 0;
  std::optional<double> rho;  // nullopt: fewer than min_n pairs or undefined
};

// Spearman of (source rank, gold rank) per source POS, one pair per source
// using its lowest-id gold target. Every tag has a cell.
std::map<UPos, CorrelationCell> pos_freq_correlation(const TranslationDictionary& dict,
                                                     const FrequencyTable& freq_src, const FrequencyTable& freq_tgt,
                                                     const PosTable& pos_src, std::size_t min_n = 10);

// Mean-centred projection onto the two leading principal components. Each
// component is signed so its largest-magnitude loading is positive.
Eigen::MatrixXd pca_project(const Eigen::MatrixXd& points);

struct Explanation {
  std::string src;
  std::string prediction;
  std::uint32_t rank_src = 0;
  std::uint32_t rank_pred = 0;
  std::string pos_src;
  std::string pos_pred;
  double score = 0.0;
  bool correct = false;
};

std::vector<Explanation> explain_predictions(std::span<const RankingGroup> groups,
                                             std::span<const std::vector<double>> scores, const Vocabulary& src,
                                             const Vocabulary& tgt, const LexicalTables& tables);

void save_explanations(std::span<const Explanation> rows, const std::filesystem::path& path);
void save_per_pos(const std::map<UPos, BucketAccuracy>& buckets, const std::filesystem::path& path);
// One row per language pair label, one column per POS tag; "NA" marks cells
// without a value.
void save_correlation_grid(std::span<const std::pair<std::string, std::map<UPos, CorrelationCell>>> rows,
                           const std::filesystem::path& path);

}  // namespace bli
