#pragma once

// Lexical resources for one language pair: word vectors, seed/test
// dictionaries, frequency lists and part-of-speech tables.

#include "bli/common.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace bli {

// NFC-normalizes UTF-8 text. Invalid UTF-8 is returned unchanged.
std::string nfc(std::string_view utf8);

class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> words);

  // Appends `word` unless present; returns its id and whether it was new.
  std::pair<WordId, bool> add(std::string word);
  std::optional<WordId> lookup(std::string_view word) const;

  const std::string& word(WordId id) const { return words_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& words() const { return words_; }
  std::size_t size() const { return words_.size(); }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };
  std::vector<std::string> words_;
  std::unordered_map<std::string, WordId, Hash, std::equal_to<>> index_;
};

struct EmbeddingSpace {
  Vocabulary vocab;
  RowMatrix matrix;  // row i is the vector of word i
  bool normalized = false;

  Eigen::Index dim() const { return matrix.cols(); }
  std::size_t size() const { return vocab.size(); }
};

struct EmbeddingLoadResult {
  EmbeddingSpace space;
  std::vector<std::string> duplicates;  // tokens seen again after their first row
};

// Text vector format: "<count> <dim>" header, then "<token> <v1> ... <vd>" rows.
EmbeddingLoadResult load_embeddings(const std::filesystem::path& path,
                                    std::optional<std::size_t> max_vocab = std::nullopt);
void save_embeddings(const EmbeddingSpace& space, const std::filesystem::path& path);

struct NormalizeResult {
  EmbeddingSpace space;
  std::size_t zero_rows = 0;
};

// Scales each nonzero row to unit L2 norm. Rows already at unit norm are
// left bit-for-bit unchanged, so the operation is exactly idempotent.
NormalizeResult normalize_rows(EmbeddingSpace space);

// source id -> sorted, deduplicated target ids. Iteration is by ascending
// source id, so the structure does not depend on input line order.
struct TranslationDictionary {
  std::map<WordId, std::vector<WordId>> entries;

  bool contains(WordId src) const { return entries.count(src) != 0; }
  const std::vector<WordId>* targets(WordId src) const;
  bool is_gold(WordId src, WordId tgt) const;
  std::size_t pair_count() const;
  std::vector<WordId> sources() const;
  void add(WordId src, WordId tgt);
};

struct DictionaryLoadResult {
  TranslationDictionary dict;
  std::size_t pairs_read = 0;
  std::size_t oov_src = 0;
  std::size_t oov_tgt = 0;
};

DictionaryLoadResult load_dictionary(const std::filesystem::path& path, const Vocabulary& src,
                                     const Vocabulary& tgt);
void save_dictionary(const TranslationDictionary& dict, const Vocabulary& src,
                     const Vocabulary& tgt, const std::filesystem::path& path);

struct FrequencyTable {
  std::vector<double> zipf;         // by word id; 0 for unlisted words
  std::vector<std::uint32_t> rank;  // by word id; 1 = most frequent, vocab size if unlisted
  std::vector<bool> listed;
  std::uint64_t total_tokens = 0;
};

struct FrequencyLoadResult {
  FrequencyTable table;
  std::size_t out_of_vocab = 0;
};

// "word<TAB>count" lines. zipf = max(0, log10(count / total * 1e9)).
FrequencyLoadResult load_frequency_table(const std::filesystem::path& path,
                                         const Vocabulary& vocab);
// Builds a table directly from per-word counts (0 = unlisted).
FrequencyTable frequency_table_from_counts(std::span<const std::uint64_t> counts,
                                           std::uint64_t total_tokens);
// Writes "word<TAB>count" for every word with a nonzero count.
void save_frequency_counts(const Vocabulary& vocab, std::span<const std::uint64_t> counts,
                           const std::filesystem::path& path);

// Universal POS tags, plus UNK for words with no entry.
enum class UPos : std::uint8_t {
  kAdj, kAdp, kAdv, kAux, kCconj, kDet, kIntj, kNoun, kNum,
  kPart, kPron, kPropn, kPunct, kSconj, kSym, kVerb, kX, kUnk,
};
inline constexpr std::size_t kPosTagCount = 18;

std::string_view pos_name(UPos tag);
std::optional<UPos> parse_pos(std::string_view name);
const std::array<UPos, kPosTagCount>& all_pos_tags();

struct PosTable {
  std::vector<UPos> tag;  // by word id
  UPos operator[](WordId id) const { return tag.at(static_cast<std::size_t>(id)); }
};

struct PosLoadResult {
  PosTable table;
  std::size_t unknown_tags = 0;
  std::size_t out_of_vocab = 0;
};

PosLoadResult load_pos_table(const std::filesystem::path& path, const Vocabulary& vocab);
void save_pos_table(const PosTable& table, const Vocabulary& vocab, const std::filesystem::path& path);

}  // namespace bli
