#pragma once

// Synthetic bilingual worlds: a source space, a rotated and perturbed target
// space, a one-to-one gold dictionary, and correlated frequency and POS
// tables. Every artifact is reproducible from the seed.

#include "bli/corpus.hpp"

#include <filesystem>
#include <map>
#include <utility>
#include <vector>

namespace bli {

std::map<UPos, double> default_pos_distribution();

struct SynthConfig {
  std::size_t vocab_n = 2000;
  std::size_t dim = 64;
  double noise_sigma = 0.1;       // per-coordinate Gaussian noise on target vectors
  std::size_t hub_count = 0;      // target vectors replaced by subset means
  std::size_t hub_subset = 50;    // vectors averaged per hub
  double anisotropy = 0.5;        // weight of a direction shared by all source vectors
  double zipf_exponent = 1.0;
  double rank_noise = 1.0;        // half-width of uniform noise on ln(rank) for gold targets
  std::map<UPos, double> pos_distribution = default_pos_distribution();
  double pos_match_prob = 0.9;    // probability a gold target keeps its source's tag
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthWorld {
  EmbeddingSpace src;  // normalized
  EmbeddingSpace tgt;  // normalized, not aligned to src
  TranslationDictionary gold;  // i -> i
  std::vector<std::uint64_t> counts_src;
  std::vector<std::uint64_t> counts_tgt;
  FrequencyTable freq_src;
  FrequencyTable freq_tgt;
  PosTable pos_src;
  PosTable pos_tgt;
  Eigen::MatrixXd rotation;    // target = source * rotation before noise
  std::vector<WordId> hubs;    // target ids overwritten by hub vectors
};

SynthWorld gen_bilingual_world(const SynthConfig& cfg);

// Random split of the dictionary's sources; test gets round(fraction * n).
std::pair<TranslationDictionary, TranslationDictionary> split_dictionary(const TranslationDictionary& dict,
                                                                         double test_fraction, std::uint64_t seed);

// Paths written by write_world, relative to its output directory.
namespace world_files {
inline constexpr const char* kSrcVectors = "src.vec";
inline constexpr const char* kTgtVectors = "tgt.vec";
inline constexpr const char* kGold = "gold.tsv";
inline constexpr const char* kTrain = "train.tsv";
inline constexpr const char* kTest = "test.tsv";
inline constexpr const char* kSrcFreq = "src.freq.tsv";
inline constexpr const char* kTgtFreq = "tgt.freq.tsv";
inline constexpr const char* kSrcPos = "src.pos.tsv";
inline constexpr const char* kTgtPos = "tgt.pos.tsv";
}  // namespace world_files

void write_world(const SynthWorld& world, const std::filesystem::path& dir, double test_fraction,
                 std::uint64_t seed);

// Deterministic 64-bit generator seeded per named component, so streams do
// not shift when another component draws more numbers.
std::uint64_t component_seed(std::uint64_t seed, std::string_view component);

}  // namespace bli
