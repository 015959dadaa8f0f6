#include "bli/corpus.hpp"

#include <fmt/format.h>
#include <unicode/normalizer2.h>
#include <unicode/utf8.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>

namespace bli {
namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open '{}' for reading", path.string()));
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot open '{}' for writing", path.string()));
  return out;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

std::vector<std::string_view> split_whitespace(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j])) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::optional<double> parse_double(std::string_view s) {
  double value = 0.0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

template <typename T>
std::optional<T> parse_integer(std::string_view s) {
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

bool is_skippable_tsv_line(std::string_view line) { return line.empty() || line.front() == '#'; }

// Splits a TSV line that must contain exactly `fields` fields.
std::optional<std::vector<std::string_view>> split_tabs(std::string_view line, std::size_t fields) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string_view::npos ? line.npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  if (out.size() != fields) return std::nullopt;
  return out;
}

constexpr std::array<std::string_view, kPosTagCount> kPosNames = {
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM",
    "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X", "UNK"};

}  // namespace

std::string nfc(std::string_view utf8) {
  if (std::all_of(utf8.begin(), utf8.end(), [](char c) { return static_cast<unsigned char>(c) < 0x80; })) {
    return std::string(utf8);
  }
  for (int32_t i = 0, n = static_cast<int32_t>(utf8.size()); i < n;) {
    UChar32 c;
    U8_NEXT(utf8.data(), i, n, c);
    if (c < 0) return std::string(utf8);
  }
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* normalizer = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) return std::string(utf8);
  const icu::UnicodeString text = icu::UnicodeString::fromUTF8(
      icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  if (text.isBogus()) return std::string(utf8);
  icu::UnicodeString normalized = normalizer->normalize(text, status);
  if (U_FAILURE(status)) return std::string(utf8);
  std::string out;
  normalized.toUTF8String(out);
  return out;
}

Vocabulary::Vocabulary(std::vector<std::string> words) {
  for (auto& w : words) {
    if (!add(std::move(w)).second) throw DataError("duplicate word in vocabulary");
  }
}

std::pair<WordId, bool> Vocabulary::add(std::string word) {
  if (auto it = index_.find(word); it != index_.end()) return {it->second, false};
  const auto id = static_cast<WordId>(words_.size());
  index_.emplace(word, id);
  words_.push_back(std::move(word));
  return {id, true};
}

std::optional<WordId> Vocabulary::lookup(std::string_view word) const {
  if (auto it = index_.find(word); it != index_.end()) return it->second;
  return std::nullopt;
}

EmbeddingLoadResult load_embeddings(const std::filesystem::path& path,
                                    std::optional<std::size_t> max_vocab) {
  auto in = open_input(path);
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw DataError(fmt::format("{}: empty file, expected header", path.string()));
  ++line_no;
  const auto header = split_whitespace(line);
  std::optional<std::size_t> count;
  std::optional<std::size_t> dim;
  if (header.size() == 2) {
    count = parse_integer<std::size_t>(header[0]);
    dim = parse_integer<std::size_t>(header[1]);
  }
  if (!count || !dim || *dim == 0) {
    throw DataError(fmt::format("{}:1: malformed header '{}', expected '<count> <dim>'", path.string(), line));
  }
  const std::size_t keep = max_vocab ? std::min(*max_vocab, *count) : *count;

  EmbeddingLoadResult result;
  std::vector<double> values;
  values.reserve(keep * *dim);
  std::size_t rows_read = 0;
  while (result.space.vocab.size() < keep && std::getline(in, line)) {
    ++line_no;
    const auto fields = split_whitespace(line);
    if (fields.empty()) continue;
    ++rows_read;
    if (rows_read > *count) {
      throw DataError(fmt::format("{}:{}: more rows than the {} declared in the header", path.string(), line_no, *count));
    }
    if (fields.size() != *dim + 1) {
      throw DataError(fmt::format("{}:{}: expected {} values, found {}", path.string(), line_no, *dim,
                                  fields.size() - 1));
    }
    std::string token = nfc(fields[0]);
    auto [id, inserted] = result.space.vocab.add(token);
    if (!inserted) {
      result.duplicates.push_back(std::move(token));
      continue;
    }
    for (std::size_t j = 1; j <= *dim; ++j) {
      auto v = parse_double(fields[j]);
      if (!v) {
        throw DataError(fmt::format("{}:{}: non-numeric value '{}' in column {}", path.string(), line_no,
                                    fields[j], j));
      }
      values.push_back(*v);
    }
  }
  if (result.space.vocab.size() < keep && rows_read < *count) {
    throw DataError(fmt::format("{}: header declares {} rows, found {}", path.string(), *count, rows_read));
  }
  if (!max_vocab) {
    while (std::getline(in, line)) {
      ++line_no;
      if (!split_whitespace(line).empty()) {
        throw DataError(fmt::format("{}:{}: more rows than the {} declared in the header", path.string(),
                                    line_no, *count));
      }
    }
  }
  for (const auto& d : result.duplicates) {
    log::warn(fmt::format("{}: duplicate token '{}' ignored, first occurrence kept", path.string(), d));
  }
  const auto n = static_cast<Eigen::Index>(result.space.vocab.size());
  result.space.matrix = Eigen::Map<RowMatrix>(values.data(), n, static_cast<Eigen::Index>(*dim));
  return result;
}

void save_embeddings(const EmbeddingSpace& space, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << space.size() << ' ' << space.dim() << '\n';
  std::string row;
  for (std::size_t i = 0; i < space.size(); ++i) {
    row = space.vocab.word(static_cast<WordId>(i));
    for (Eigen::Index j = 0; j < space.dim(); ++j) {
      row += ' ';
      row += format_shortest(space.matrix(static_cast<Eigen::Index>(i), j));
    }
    row += '\n';
    out << row;
  }
  if (!out) throw DataError(fmt::format("failed writing '{}'", path.string()));
}

NormalizeResult normalize_rows(EmbeddingSpace space) {
  NormalizeResult result;
  for (Eigen::Index i = 0; i < space.matrix.rows(); ++i) {
    auto row = space.matrix.row(i);
    const double norm = row.norm();
    if (norm == 0.0) {
      ++result.zero_rows;
    } else if (std::abs(norm - 1.0) > 1e-14) {
      row /= norm;
    }
  }
  space.normalized = true;
  result.space = std::move(space);
  return result;
}

const std::vector<WordId>* TranslationDictionary::targets(WordId src) const {
  auto it = entries.find(src);
  return it == entries.end() ? nullptr : &it->second;
}

bool TranslationDictionary::is_gold(WordId src, WordId tgt) const {
  const auto* t = targets(src);
  return t != nullptr && std::binary_search(t->begin(), t->end(), tgt);
}

std::size_t TranslationDictionary::pair_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : entries) n += t.size();
  return n;
}

std::vector<WordId> TranslationDictionary::sources() const {
  std::vector<WordId> out;
  out.reserve(entries.size());
  for (const auto& [s, _] : entries) out.push_back(s);
  return out;
}

void TranslationDictionary::add(WordId src, WordId tgt) {
  auto& t = entries[src];
  auto it = std::lower_bound(t.begin(), t.end(), tgt);
  if (it == t.end() || *it != tgt) t.insert(it, tgt);
}

DictionaryLoadResult load_dictionary(const std::filesystem::path& path, const Vocabulary& src,
                                     const Vocabulary& tgt) {
  auto in = open_input(path);
  DictionaryLoadResult result;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = chomp(raw);
    if (is_skippable_tsv_line(line)) continue;
    const auto fields = split_tabs(line, 2);
    if (!fields) {
      throw DataError(fmt::format("{}:{}: expected 'source<TAB>target'", path.string(), line_no));
    }
    ++result.pairs_read;
    const auto s = src.lookup(nfc((*fields)[0]));
    const auto t = tgt.lookup(nfc((*fields)[1]));
    if (!s) ++result.oov_src;
    if (!t) ++result.oov_tgt;
    if (s && t) result.dict.add(*s, *t);
  }
  if (result.oov_src + result.oov_tgt > 0) {
    log::info(fmt::format("{}: skipped pairs with {} OOV sources and {} OOV targets", path.string(),
                          result.oov_src, result.oov_tgt));
  }
  return result;
}

void save_dictionary(const TranslationDictionary& dict, const Vocabulary& src, const Vocabulary& tgt,
                     const std::filesystem::path& path) {
  auto out = open_output(path);
  for (const auto& [s, targets] : dict.entries) {
    for (WordId t : targets) out << src.word(s) << '\t' << tgt.word(t) << '\n';
  }
  if (!out) throw DataError(fmt::format("failed writing '{}'", path.string()));
}

FrequencyTable frequency_table_from_counts(std::span<const std::uint64_t> counts,
                                           std::uint64_t total_tokens) {
  const std::size_t n = counts.size();
  FrequencyTable table;
  table.total_tokens = total_tokens;
  table.zipf.assign(n, 0.0);
  table.rank.assign(n, static_cast<std::uint32_t>(n));
  table.listed.assign(n, false);
  std::vector<std::uint32_t> order;
  for (std::size_t i = 0; i < n; ++i) {
    if (counts[i] == 0) continue;
    table.listed[i] = true;
    order.push_back(static_cast<std::uint32_t>(i));
    const double per_billion = static_cast<double>(counts[i]) / static_cast<double>(total_tokens) * 1e9;
    table.zipf[i] = std::max(0.0, std::log10(per_billion));
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return counts[a] > counts[b]; });
  for (std::size_t r = 0; r < order.size(); ++r) table.rank[order[r]] = static_cast<std::uint32_t>(r + 1);
  return table;
}

FrequencyLoadResult load_frequency_table(const std::filesystem::path& path, const Vocabulary& vocab) {
  auto in = open_input(path);
  std::vector<std::uint64_t> counts(vocab.size(), 0);
  std::uint64_t total = 0;
  FrequencyLoadResult result;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = chomp(raw);
    if (is_skippable_tsv_line(line)) continue;
    const auto fields = split_tabs(line, 2);
    if (!fields) throw DataError(fmt::format("{}:{}: expected 'word<TAB>count'", path.string(), line_no));
    const auto count = parse_integer<std::uint64_t>((*fields)[1]);
    if (!count || *count == 0) {
      throw DataError(fmt::format("{}:{}: count must be a positive integer, got '{}'", path.string(), line_no,
                                  (*fields)[1]));
    }
    total += *count;
    if (auto id = vocab.lookup(nfc((*fields)[0]))) {
      counts[static_cast<std::size_t>(*id)] += *count;
    } else {
      ++result.out_of_vocab;
    }
  }
  result.table = frequency_table_from_counts(counts, std::max<std::uint64_t>(total, 1));
  return result;
}

void save_frequency_counts(const Vocabulary& vocab, std::span<const std::uint64_t> counts,
                           const std::filesystem::path& path) {
  auto out = open_output(path);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] > 0) out << vocab.word(static_cast<WordId>(i)) << '\t' << counts[i] << '\n';
  }
  if (!out) throw DataError(fmt::format("failed writing '{}'", path.string()));
}

std::string_view pos_name(UPos tag) { return kPosNames.at(static_cast<std::size_t>(tag)); }

std::optional<UPos> parse_pos(std::string_view name) {
  for (std::size_t i = 0; i < kPosNames.size(); ++i) {
    if (kPosNames[i] == name) return static_cast<UPos>(i);
  }
  return std::nullopt;
}

const std::array<UPos, kPosTagCount>& all_pos_tags() {
  static const auto tags = [] {
    std::array<UPos, kPosTagCount> out{};
    for (std::size_t i = 0; i < kPosTagCount; ++i) out[i] = static_cast<UPos>(i);
    return out;
  }();
  return tags;
}

PosLoadResult load_pos_table(const std::filesystem::path& path, const Vocabulary& vocab) {
  auto in = open_input(path);
  PosLoadResult result;
  result.table.tag.assign(vocab.size(), UPos::kUnk);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = chomp(raw);
    if (is_skippable_tsv_line(line)) continue;
    const auto fields = split_tabs(line, 2);
    if (!fields) {
      log::warn(fmt::format("{}:{}: expected 'word<TAB>UPOS', line ignored", path.string(), line_no));
      continue;
    }
    auto tag = parse_pos((*fields)[1]);
    if (!tag || *tag == UPos::kUnk) {
      ++result.unknown_tags;
      log::warn(fmt::format("{}:{}: unknown tag '{}' mapped to X", path.string(), line_no, (*fields)[1]));
      tag = UPos::kX;
    }
    if (auto id = vocab.lookup(nfc((*fields)[0]))) {
      result.table.tag[static_cast<std::size_t>(*id)] = *tag;
    } else {
      ++result.out_of_vocab;
    }
  }
  return result;
}

void save_pos_table(const PosTable& table, const Vocabulary& vocab, const std::filesystem::path& path) {
  auto out = open_output(path);
  for (std::size_t i = 0; i < table.tag.size(); ++i) {
    if (table.tag[i] != UPos::kUnk) out << vocab.word(static_cast<WordId>(i)) << '\t' << pos_name(table.tag[i]) << '\n';
  }
  if (!out) throw DataError(fmt::format("failed writing '{}'", path.string()));
}

}  // namespace bli
