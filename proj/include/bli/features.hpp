#pragma once

// Per-candidate lexical feature vectors and the ranking groups the LTR model
// trains and predicts on.

#include "bli/corpus.hpp"
#include "bli/retrieval.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace bli {

inline constexpr std::size_t kFeatureCount = 46;

// Column layout of a feature vector.
namespace col {
inline constexpr std::size_t kCsls = 0;
inline constexpr std::size_t kExtLogit = 1;
inline constexpr std::size_t kExtPresent = 2;
inline constexpr std::size_t kZipfSrc = 3;
inline constexpr std::size_t kZipfCand = 4;
inline constexpr std::size_t kZipfDiff = 5;     // src - cand
inline constexpr std::size_t kZipfAbsDiff = 6;
inline constexpr std::size_t kLogRankSrc = 7;   // log2(1 + rank)
inline constexpr std::size_t kLogRankCand = 8;
inline constexpr std::size_t kPosMatch = 9;
inline constexpr std::size_t kPosSrc = 10;      // one-hot, kPosTagCount wide
inline constexpr std::size_t kPosCand = kPosSrc + kPosTagCount;
}  // namespace col

static_assert(col::kPosCand + kPosTagCount == kFeatureCount);

using FeatureVector = std::array<double, kFeatureCount>;

struct FeatureSchema {
  static const std::array<std::string, kFeatureCount>& names();
  // Stable hash of the ordered column names; models record it so that a
  // model is never applied to differently laid out features.
  static std::string fingerprint();
};

// Feature groups that can be switched off for ablations. Disabled columns are
// zeroed; the schema length never changes.
struct FeatureMask {
  bool external = true;
  bool frequency = true;
  bool pos = true;

  bool enabled(std::size_t column) const;
  std::vector<std::string> disabled_groups() const;
  static FeatureMask from_disabled_groups(std::span<const std::string> groups);

  friend bool operator==(const FeatureMask&, const FeatureMask&) = default;
};

struct LexicalTables {
  const FrequencyTable& freq_src;
  const FrequencyTable& freq_tgt;
  const PosTable& pos_src;
  const PosTable& pos_tgt;
};

// Logits of an external reranker, keyed by (source id, target id).
class ExternalScores {
 public:
  void set(WordId src, WordId tgt, double logit) { scores_[key(src, tgt)] = logit; }
  std::optional<double> find(WordId src, WordId tgt) const;
  std::size_t size() const { return scores_.size(); }

 private:
  static std::uint64_t key(WordId src, WordId tgt) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(src)) << 32) | static_cast<std::uint32_t>(tgt);
  }
  std::unordered_map<std::uint64_t, double> scores_;
};

struct ExternalScoresLoadResult {
  ExternalScores scores;
  std::size_t duplicates = 0;
  std::size_t out_of_vocab = 0;
};

// "src<TAB>cand<TAB>logit"; a repeated key keeps the last value.
ExternalScoresLoadResult load_external_scores(const std::filesystem::path& path, const Vocabulary& src,
                                              const Vocabulary& tgt);

// 1 where the candidate is a gold translation of `src`.
std::vector<std::uint8_t> label_candidates(WordId src, std::span<const WordId> candidates,
                                           const TranslationDictionary& dict);

FeatureVector featurize_pair(WordId src, WordId cand, double csls, std::optional<double> ext,
                             const LexicalTables& tables, const FeatureMask& mask = {});

struct RankingGroup {
  WordId src = 0;
  std::vector<WordId> candidates;    // retrieval order
  std::vector<std::uint8_t> labels;  // all 0 when unknown
  RowMatrix features;                // candidates.size() x kFeatureCount
  std::vector<double> csls;
  bool gold_missed = false;          // labelled source whose gold was not retrieved

  std::size_t size() const { return candidates.size(); }
  bool has_positive() const;
  bool has_negative() const;
};

struct GroupOptions {
  const TranslationDictionary* dict = nullptr;  // labels; none for inference
  const ExternalScores* external = nullptr;
  FeatureMask mask;
  unsigned threads = 0;
};

// One group per source, in the order given. Throws DataError if a source has
// no candidate list.
std::vector<RankingGroup> build_groups(std::span<const WordId> sources, const CandidateSet& cands,
                                       const LexicalTables& tables, const GroupOptions& options = {});

// Debug export: src, cand, label, then one column per schema feature.
void save_feature_matrix(std::span<const RankingGroup> groups, const Vocabulary& src, const Vocabulary& tgt,
                         const std::filesystem::path& path);

}  // namespace bli
