#pragma once

// Exact nearest-neighbour retrieval over aligned embedding spaces: Procrustes
// alignment, cosine and CSLS scoring, top-K candidate lists, mutual nearest
// neighbours, dictionary augmentation, hard negatives and hubness.
//
// All scans use a fixed tiling of the similarity matrix that does not depend on
// the worker count, and cross-worker reductions are order-independent, so every
// result is bitwise identical for any number of threads.

#include "bli/corpus.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace bli {

enum class Metric { kCosine, kCsls };

std::string_view metric_name(Metric metric);
std::optional<Metric> parse_metric(std::string_view name);

struct SimilarityParams {
  std::size_t k_csls = 10;
  std::size_t top_k = 50;

  // Throws ConfigError unless 1 <= k_csls <= min(n_src, n_tgt) and 1 <= top_k <= n_tgt.
  void validate(std::size_t n_src, std::size_t n_tgt) const;
};

struct Candidate {
  WordId target = 0;
  double score = 0.0;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

// Per source word: candidates by descending score, ties by ascending target id.
struct CandidateSet {
  std::map<WordId, std::vector<Candidate>> lists;

  const std::vector<Candidate>* find(WordId src) const;
  std::size_t size() const { return lists.size(); }
};

// Mean cosine of each source to its k_csls nearest targets (r_src) and of each
// target to its k_csls nearest sources (r_tgt).
struct NeighborhoodMeans {
  std::vector<double> r_src;
  std::vector<double> r_tgt;
};

struct RetrievalOptions {
  Metric metric = Metric::kCsls;
  unsigned threads = 0;
  // Sources to retrieve for; all source words when empty. CSLS neighbourhoods
  // always use the full spaces.
  std::vector<WordId> queries;
};

struct RetrievalResult {
  CandidateSet candidates;
  NeighborhoodMeans means;  // filled for Metric::kCsls only
};

// Orthogonal W minimizing ||XW - Y||_F over the seed pairs (one row per pair).
Eigen::MatrixXd align_procrustes(const EmbeddingSpace& src, const EmbeddingSpace& tgt,
                                 const TranslationDictionary& seed);

// Maps every row through W and renormalizes.
EmbeddingSpace apply_mapping(const EmbeddingSpace& space, const Eigen::MatrixXd& w);

// For each query row, the mean of its k largest dot products with index rows.
// A query is not excluded from its own neighbourhood.
std::vector<double> knn_mean_similarity(const EmbeddingSpace& queries, const EmbeddingSpace& index,
                                        std::size_t k, unsigned threads = 0);

// Both CSLS correction terms from a single scan of the similarity matrix.
NeighborhoodMeans neighborhood_means(const EmbeddingSpace& src, const EmbeddingSpace& tgt,
                                     std::size_t k, unsigned threads = 0);

double csls_score(std::span<const double> x, std::span<const double> y, double r_x, double r_y);

RetrievalResult retrieve_topk(const EmbeddingSpace& src, const EmbeddingSpace& tgt,
                              const SimilarityParams& params, const RetrievalOptions& options = {});

struct MinedPair {
  WordId src = 0;
  WordId tgt = 0;
  double score = 0.0;
};

// Pairs that are each other's CSLS argmax, by descending score.
std::vector<MinedPair> mutual_nn_pairs(const EmbeddingSpace& src, const EmbeddingSpace& tgt,
                                       const SimilarityParams& params, unsigned threads = 0);

struct AugmentResult {
  TranslationDictionary dict;
  std::size_t added = 0;
  std::size_t shortfall = 0;
};

AugmentResult augment_dictionary(const TranslationDictionary& seed, std::span<const MinedPair> mined,
                                 std::size_t n_aug);

struct LabeledPair {
  WordId src = 0;
  WordId tgt = 0;
  int label = 0;

  friend bool operator==(const LabeledPair&, const LabeledPair&) = default;
};

// One positive row per (source, gold) pair, each followed by the n_neg
// best-scoring non-gold candidates of that source.
std::vector<LabeledPair> mine_hard_negatives(const TranslationDictionary& dict, const CandidateSet& cands,
                                             std::size_t n_neg = 20);

// N_k(y) for every target: how many candidate lists contain y.
std::vector<double> k_occurrence(const CandidateSet& cands, std::size_t n_tgt);

// Standardized third central moment; 0 for a constant sample.
double skewness(std::span<const double> values);

// Skewness of the k-occurrence distribution of targets under `metric`.
double hubness_skew(const EmbeddingSpace& src, const EmbeddingSpace& tgt, std::size_t k, Metric metric,
                    std::size_t k_csls = 10, unsigned threads = 0);

// "src<TAB>cand<TAB>score" with 6-decimal scores, grouped by source.
void save_candidates(const CandidateSet& cands, const Vocabulary& src, const Vocabulary& tgt,
                     const std::filesystem::path& path);
CandidateSet load_candidates(const std::filesystem::path& path, const Vocabulary& src, const Vocabulary& tgt);

void save_labeled_pairs(std::span<const LabeledPair> pairs, const Vocabulary& src, const Vocabulary& tgt,
                        const std::filesystem::path& path);

}  // namespace bli
