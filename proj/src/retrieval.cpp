#include "bli/retrieval.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

namespace bli {
namespace {

using Eigen::Index;

// Fixed tile shape of the similarity matrix. Every dot product is computed by
// a GEMM of the same shape no matter how tiles are spread across workers.
constexpr Index kRowBlock = 256;
constexpr Index kColBlock = 2048;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_scannable(const EmbeddingSpace& a, const EmbeddingSpace& b) {
  if (!a.normalized || !b.normalized) throw ConfigError("embedding spaces must be row-normalized");
  if (a.dim() != b.dim()) {
    throw ConfigError(fmt::format("embedding dimension mismatch: {} vs {}", a.dim(), b.dim()));
  }
}

std::vector<Index> all_rows(std::size_t n) {
  std::vector<Index> rows(n);
  std::iota(rows.begin(), rows.end(), Index{0});
  return rows;
}

// Calls visit(worker, first query position, first column, tile) for every
// tile of a[rows] * b^T. A task owns a block of query rows and walks the
// column blocks in ascending order.
template <typename Visit>
void scan_tiles(const RowMatrix& a, std::span<const Index> rows, const RowMatrix& b, unsigned threads,
                Visit&& visit) {
  const auto n_rows = static_cast<Index>(rows.size());
  const auto n_tasks = static_cast<std::size_t>((n_rows + kRowBlock - 1) / kRowBlock);
  parallel_for(n_tasks, threads, [&](std::size_t task, unsigned worker) {
    const Index q0 = static_cast<Index>(task) * kRowBlock;
    const Index nq = std::min(kRowBlock, n_rows - q0);
    RowMatrix block(nq, a.cols());
    for (Index i = 0; i < nq; ++i) block.row(i) = a.row(rows[static_cast<std::size_t>(q0 + i)]);
    RowMatrix tile;
    for (Index c0 = 0; c0 < b.rows(); c0 += kColBlock) {
      const Index nc = std::min(kColBlock, b.rows() - c0);
      tile.resize(nq, nc);
      tile.noalias() = block * b.middleRows(c0, nc).transpose();
      visit(worker, q0, c0, static_cast<const RowMatrix&>(tile));
    }
  });
}

// A slot holds the k largest values seen so far in ascending order; slot[0]
// is the admission threshold.
inline void push_top(double* slot, std::size_t k, double v) {
  if (!(v > slot[0])) return;
  std::size_t i = 0;
  while (i + 1 < k && slot[i + 1] < v) {
    slot[i] = slot[i + 1];
    ++i;
  }
  slot[i] = v;
}

// The slot content depends only on the multiset of values pushed, so the
// descending-order sum is reproducible.
inline double slot_mean(const double* slot, std::size_t k) {
  double sum = 0.0;
  for (std::size_t i = k; i-- > 0;) sum += slot[i];
  return sum / static_cast<double>(k);
}

struct Scored {
  double score;
  WordId id;
};

inline bool better(double score, WordId id, const Scored& other) {
  return score > other.score || (score == other.score && id < other.id);
}

// Same layout as push_top, worst entry first.
inline void push_scored(Scored* slot, std::size_t k, double score, WordId id) {
  if (!better(score, id, slot[0])) return;
  std::size_t i = 0;
  while (i + 1 < k && better(score, id, slot[i + 1])) {
    slot[i] = slot[i + 1];
    ++i;
  }
  slot[i] = Scored{score, id};
}

// Long lists use a binary heap instead, still with the worst entry at slot[0].
constexpr std::size_t kHeapFrom = 16;

inline bool worse_first(const Scored& a, const Scored& b) { return better(a.score, a.id, b); }

inline void push_best(Scored* slot, std::size_t k, double score, WordId id) {
  if (k < kHeapFrom) {
    push_scored(slot, k, score, id);
    return;
  }
  if (!better(score, id, slot[0])) return;
  std::pop_heap(slot, slot + k, worse_first);
  slot[k - 1] = Scored{score, id};
  std::push_heap(slot, slot + k, worse_first);
}

// Restores the ascending layout after push_best.
inline void finish_best(Scored* slot, std::size_t k) {
  if (k >= kHeapFrom) std::sort(slot, slot + k, [](const Scored& a, const Scored& b) { return worse_first(b, a); });
}

constexpr Scored kEmptyScored{kNegInf, std::numeric_limits<WordId>::max()};

std::vector<Scored> best_targets(const EmbeddingSpace& src, const EmbeddingSpace& tgt,
                                 std::span<const Index> rows, std::size_t k, Metric metric,
                                 const NeighborhoodMeans* means, unsigned threads) {
  std::vector<Scored> slots(rows.size() * k, kEmptyScored);
  scan_tiles(src.matrix, rows, tgt.matrix, threads,
             [&](unsigned, Index q0, Index c0, const RowMatrix& tile) {
               for (Index i = 0; i < tile.rows(); ++i) {
                 Scored* slot = &slots[static_cast<std::size_t>(q0 + i) * k];
                 const double* p = tile.row(i).data();
                 if (metric == Metric::kCosine) {
                   for (Index j = 0; j < tile.cols(); ++j) {
                     if (p[j] >= slot[0].score) push_best(slot, k, p[j], static_cast<WordId>(c0 + j));
                   }
                 } else {
                   const double rs = means->r_src[static_cast<std::size_t>(rows[static_cast<std::size_t>(q0 + i)])];
                   const double* rt = means->r_tgt.data() + c0;
                   for (Index j = 0; j < tile.cols(); ++j) {
                     const double s = 2.0 * p[j] - rs - rt[j];
                     if (s >= slot[0].score) push_best(slot, k, s, static_cast<WordId>(c0 + j));
                   }
                 }
               }
             });
  for (std::size_t q = 0; q < rows.size(); ++q) finish_best(&slots[q * k], k);
  return slots;
}

// Cosine shortlist kept for some sources during the neighbourhood scan.
struct Shortlists {
  std::vector<std::ptrdiff_t> slot_of;  // by source id; -1 when not kept
  std::size_t m = 0;
  std::vector<Scored> slots;
};

NeighborhoodMeans scan_neighborhoods(const EmbeddingSpace& src, const EmbeddingSpace& tgt, std::size_t k,
                                     unsigned threads, Shortlists* shortlists) {
  if (k < 1 || k > std::min(src.size(), tgt.size())) {
    throw ConfigError(fmt::format("k must be in [1, {}], got {}", std::min(src.size(), tgt.size()), k));
  }
  const std::size_t n_src = src.size();
  const std::size_t n_tgt = tgt.size();
  const unsigned workers = resolve_threads(threads);
  const auto rows = all_rows(n_src);

  std::vector<double> row_slots(n_src * k, kNegInf);
  std::vector<std::vector<double>> col_slots(workers);
  scan_tiles(src.matrix, rows, tgt.matrix, workers,
             [&](unsigned worker, Index q0, Index c0, const RowMatrix& tile) {
               auto& cols = col_slots[worker];
               if (cols.empty()) cols.assign(n_tgt * k, kNegInf);
               for (Index i = 0; i < tile.rows(); ++i) {
                 double* rslot = &row_slots[static_cast<std::size_t>(q0 + i) * k];
                 const double* p = tile.row(i).data();
                 double* cslot = &cols[static_cast<std::size_t>(c0) * k];
                 for (Index j = 0; j < tile.cols(); ++j, cslot += k) {
                   const double v = p[j];
                   if (v > rslot[0]) push_top(rslot, k, v);
                   if (v > cslot[0]) push_top(cslot, k, v);
                 }
                 if (shortlists == nullptr) continue;
                 const auto at = shortlists->slot_of[static_cast<std::size_t>(q0 + i)];
                 if (at < 0) continue;
                 const std::size_t m = shortlists->m;
                 Scored* slot = &shortlists->slots[static_cast<std::size_t>(at) * m];
                 for (Index j = 0; j < tile.cols(); ++j) {
                   if (p[j] >= slot[0].score) push_best(slot, m, p[j], static_cast<WordId>(c0 + j));
                 }
               }
             });

  NeighborhoodMeans means;
  means.r_src.resize(n_src);
  for (std::size_t s = 0; s < n_src; ++s) means.r_src[s] = slot_mean(&row_slots[s * k], k);
  means.r_tgt.resize(n_tgt);
  std::vector<double> merged(k);
  for (std::size_t t = 0; t < n_tgt; ++t) {
    std::fill(merged.begin(), merged.end(), kNegInf);
    for (const auto& cols : col_slots) {
      if (cols.empty()) continue;
      for (std::size_t i = 0; i < k; ++i) push_top(merged.data(), k, cols[t * k + i]);
    }
    means.r_tgt[t] = slot_mean(merged.data(), k);
  }
  return means;
}

// Cosine shortlist length per query, as a multiple of top_k.
constexpr std::size_t kShortlistFactor = 4;
constexpr std::size_t kShortlistBudgetBytes = std::size_t{512} << 20;

}  // namespace

std::string_view metric_name(Metric metric) { return metric == Metric::kCosine ? "cosine" : "csls"; }

std::optional<Metric> parse_metric(std::string_view name) {
  if (name == "cosine") return Metric::kCosine;
  if (name == "csls") return Metric::kCsls;
  return std::nullopt;
}

void SimilarityParams::validate(std::size_t n_src, std::size_t n_tgt) const {
  if (k_csls < 1 || k_csls > std::min(n_src, n_tgt)) {
    throw ConfigError(fmt::format("k_csls must be in [1, {}], got {}", std::min(n_src, n_tgt), k_csls));
  }
  if (top_k < 1 || top_k > n_tgt) {
    throw ConfigError(fmt::format("top_k must be in [1, {}], got {}", n_tgt, top_k));
  }
}

const std::vector<Candidate>* CandidateSet::find(WordId src) const {
  auto it = lists.find(src);
  return it == lists.end() ? nullptr : &it->second;
}

Eigen::MatrixXd align_procrustes(const EmbeddingSpace& src, const EmbeddingSpace& tgt,
                                 const TranslationDictionary& seed) {
  if (src.dim() != tgt.dim()) {
    throw ConfigError(fmt::format("cannot align spaces of dimension {} and {}", src.dim(), tgt.dim()));
  }
  const std::size_t m = seed.pair_count();
  if (m == 0) throw ConfigError("Procrustes alignment needs a non-empty seed dictionary");
  const Index d = src.dim();
  Eigen::MatrixXd x(static_cast<Index>(m), d);
  Eigen::MatrixXd y(static_cast<Index>(m), d);
  Index row = 0;
  for (const auto& [s, targets] : seed.entries) {
    for (WordId t : targets) {
      x.row(row) = src.matrix.row(s);
      y.row(row) = tgt.matrix.row(t);
      ++row;
    }
  }
  const Eigen::MatrixXd cross = x.transpose() * y;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

EmbeddingSpace apply_mapping(const EmbeddingSpace& space, const Eigen::MatrixXd& w) {
  if (w.rows() != space.dim() || w.cols() != space.dim()) {
    throw ConfigError(fmt::format("mapping is {}x{} but space dimension is {}", w.rows(), w.cols(), space.dim()));
  }
  EmbeddingSpace mapped;
  mapped.vocab = space.vocab;
  mapped.matrix = space.matrix * w;
  return normalize_rows(std::move(mapped)).space;
}

std::vector<double> knn_mean_similarity(const EmbeddingSpace& queries, const EmbeddingSpace& index,
                                        std::size_t k, unsigned threads) {
  require_scannable(queries, index);
  if (k < 1 || k > index.size()) {
    throw ConfigError(fmt::format("k must be in [1, {}], got {}", index.size(), k));
  }
  const auto rows = all_rows(queries.size());
  std::vector<double> slots(queries.size() * k, kNegInf);
  scan_tiles(queries.matrix, rows, index.matrix, threads,
             [&](unsigned, Index q0, Index, const RowMatrix& tile) {
               for (Index i = 0; i < tile.rows(); ++i) {
                 double* slot = &slots[static_cast<std::size_t>(q0 + i) * k];
                 const double* p = tile.row(i).data();
                 for (Index j = 0; j < tile.cols(); ++j) push_top(slot, k, p[j]);
               }
             });
  std::vector<double> means(queries.size());
  for (std::size_t q = 0; q < queries.size(); ++q) means[q] = slot_mean(&slots[q * k], k);
  return means;
}

NeighborhoodMeans neighborhood_means(const EmbeddingSpace& src, const EmbeddingSpace& tgt, std::size_t k,
                                     unsigned threads) {
  require_scannable(src, tgt);
  return scan_neighborhoods(src, tgt, k, threads, nullptr);
}

double csls_score(std::span<const double> x, std::span<const double> y, double r_x, double r_y) {
  double dot = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * y[i];
  return 2.0 * dot - r_x - r_y;
}

RetrievalResult retrieve_topk(const EmbeddingSpace& src, const EmbeddingSpace& tgt,
                              const SimilarityParams& params, const RetrievalOptions& options) {
  require_scannable(src, tgt);
  params.validate(src.size(), tgt.size());
  std::vector<Index> rows;
  if (options.queries.empty()) {
    rows = all_rows(src.size());
  } else {
    for (WordId q : options.queries) {
      if (q < 0 || static_cast<std::size_t>(q) >= src.size()) {
        throw DataError(fmt::format("query id {} outside source vocabulary", q));
      }
      rows.push_back(q);
    }
  }

  RetrievalResult result;
  const std::size_t k = params.top_k;
  auto emit = [&](Index row, const Scored* slot) {
    std::vector<Candidate> list(k);
    for (std::size_t i = 0; i < k; ++i) list[i] = Candidate{slot[k - 1 - i].id, slot[k - 1 - i].score};
    result.candidates.lists[static_cast<WordId>(row)] = std::move(list);
  };
  if (options.metric == Metric::kCosine) {
    const auto slots = best_targets(src, tgt, rows, k, options.metric, nullptr, options.threads);
    for (std::size_t q = 0; q < rows.size(); ++q) emit(rows[q], &slots[q * k]);
    return result;
  }

  // CSLS in one pass over the similarity matrix: the neighbourhood scan also
  // keeps a cosine shortlist per query. A target outside the shortlist scores
  // at most 2 * (worst shortlisted cosine) - r_src - min(r_tgt), so a query
  // whose k-th CSLS score beats that bound is exact; the rest are rescanned.
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  Shortlists shortlists;
  shortlists.m = std::min(tgt.size(), kShortlistFactor * k);
  const bool fused = rows.size() * shortlists.m * sizeof(Scored) <= kShortlistBudgetBytes;
  if (fused) {
    shortlists.slot_of.assign(src.size(), -1);
    for (std::size_t q = 0; q < rows.size(); ++q) shortlists.slot_of[static_cast<std::size_t>(rows[q])] = static_cast<std::ptrdiff_t>(q);
    shortlists.slots.assign(rows.size() * shortlists.m, kEmptyScored);
  }
  result.means = scan_neighborhoods(src, tgt, params.k_csls, options.threads, fused ? &shortlists : nullptr);
  if (!fused) {
    const auto slots = best_targets(src, tgt, rows, k, options.metric, &result.means, options.threads);
    for (std::size_t q = 0; q < rows.size(); ++q) emit(rows[q], &slots[q * k]);
    return result;
  }

  const double rt_min = *std::min_element(result.means.r_tgt.begin(), result.means.r_tgt.end());
  const bool complete = shortlists.m == tgt.size();
  const std::size_t m = shortlists.m;
  std::vector<Index> rescan;
  std::vector<Scored> slot(k);
  for (std::size_t q = 0; q < rows.size(); ++q) {
    const Scored* cos = &shortlists.slots[q * m];
    const double rs = result.means.r_src[static_cast<std::size_t>(rows[q])];
    std::fill(slot.begin(), slot.end(), kEmptyScored);
    for (std::size_t i = 0; i < m; ++i) {
      const double s = 2.0 * cos[i].score - rs - result.means.r_tgt[static_cast<std::size_t>(cos[i].id)];
      push_best(slot.data(), k, s, cos[i].id);
    }
    finish_best(slot.data(), k);
    const double bound = 2.0 * cos[0].score - rs - rt_min;
    if (complete || slot[0].score > bound) {
      emit(rows[q], slot.data());
    } else {
      rescan.push_back(rows[q]);
    }
  }
  if (!rescan.empty()) {
    log::debug(fmt::format("CSLS shortlist bound failed for {} of {} queries; rescanning them", rescan.size(), rows.size()));
    const auto slots = best_targets(src, tgt, rescan, k, options.metric, &result.means, options.threads);
    for (std::size_t q = 0; q < rescan.size(); ++q) emit(rescan[q], &slots[q * k]);
  }
  return result;
}

std::vector<MinedPair> mutual_nn_pairs(const EmbeddingSpace& src, const EmbeddingSpace& tgt,
                                       const SimilarityParams& params, unsigned threads) {
  require_scannable(src, tgt);
  params.validate(src.size(), tgt.size());
  const auto means = neighborhood_means(src, tgt, params.k_csls, threads);
  const unsigned workers = resolve_threads(threads);
  const auto rows = all_rows(src.size());
  const std::size_t n_tgt = tgt.size();

  std::vector<Scored> forward(src.size(), kEmptyScored);
  std::vector<std::vector<Scored>> backward(workers);
  scan_tiles(src.matrix, rows, tgt.matrix, workers,
             [&](unsigned worker, Index q0, Index c0, const RowMatrix& tile) {
               auto& back = backward[worker];
               if (back.empty()) back.assign(n_tgt, kEmptyScored);
               for (Index i = 0; i < tile.rows(); ++i) {
                 const auto s_id = static_cast<WordId>(q0 + i);
                 const double rs = means.r_src[static_cast<std::size_t>(s_id)];
                 const double* p = tile.row(i).data();
                 Scored& fwd = forward[static_cast<std::size_t>(s_id)];
                 for (Index j = 0; j < tile.cols(); ++j) {
                   const auto t_id = static_cast<WordId>(c0 + j);
                   const double s = 2.0 * p[j] - rs - means.r_tgt[static_cast<std::size_t>(t_id)];
                   if (better(s, t_id, fwd)) fwd = Scored{s, t_id};
                   Scored& bwd = back[static_cast<std::size_t>(t_id)];
                   if (better(s, s_id, bwd)) bwd = Scored{s, s_id};
                 }
               }
             });
  std::vector<Scored> best_source(n_tgt, kEmptyScored);
  for (const auto& back : backward) {
    if (back.empty()) continue;
    for (std::size_t t = 0; t < n_tgt; ++t) {
      if (better(back[t].score, back[t].id, best_source[t])) best_source[t] = back[t];
    }
  }

  std::vector<MinedPair> pairs;
  for (std::size_t s = 0; s < src.size(); ++s) {
    const Scored& f = forward[s];
    if (best_source[static_cast<std::size_t>(f.id)].id == static_cast<WordId>(s)) {
      pairs.push_back(MinedPair{static_cast<WordId>(s), f.id, f.score});
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const MinedPair& a, const MinedPair& b) { return a.score > b.score; });
  return pairs;
}

AugmentResult augment_dictionary(const TranslationDictionary& seed, std::span<const MinedPair> mined,
                                 std::size_t n_aug) {
  AugmentResult result;
  result.dict = seed;
  for (const MinedPair& p : mined) {
    if (result.added >= n_aug) break;
    if (result.dict.contains(p.src)) continue;
    result.dict.add(p.src, p.tgt);
    ++result.added;
  }
  result.shortfall = n_aug - result.added;
  if (result.shortfall > 0) {
    log::warn(fmt::format("augmentation requested {} pairs but only {} were available", n_aug, result.added));
  }
  return result;
}

std::vector<LabeledPair> mine_hard_negatives(const TranslationDictionary& dict, const CandidateSet& cands,
                                             std::size_t n_neg) {
  std::vector<LabeledPair> rows;
  std::size_t saturated = 0;
  for (const auto& [src, gold] : dict.entries) {
    const auto* list = cands.find(src);
    if (list == nullptr) throw DataError(fmt::format("no candidates for dictionary source id {}", src));
    std::vector<WordId> negatives;
    for (const Candidate& c : *list) {
      if (negatives.size() >= n_neg) break;
      if (!std::binary_search(gold.begin(), gold.end(), c.target)) negatives.push_back(c.target);
    }
    if (negatives.empty() && n_neg > 0) ++saturated;
    for (WordId g : gold) {
      rows.push_back(LabeledPair{src, g, 1});
      for (WordId n : negatives) rows.push_back(LabeledPair{src, n, 0});
    }
  }
  if (saturated > 0) {
    log::warn(fmt::format("{} sources have only gold candidates; no negatives mined for them", saturated));
  }
  return rows;
}

std::vector<double> k_occurrence(const CandidateSet& cands, std::size_t n_tgt) {
  std::vector<double> counts(n_tgt, 0.0);
  for (const auto& [_, list] : cands.lists) {
    for (const Candidate& c : list) counts.at(static_cast<std::size_t>(c.target)) += 1.0;
  }
  return counts;
}

double skewness(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double m2 = 0.0;
  double m3 = 0.0;
  for (double v : values) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= n;
  m3 /= n;
  if (m2 <= 0.0) return 0.0;
  return m3 / std::pow(m2, 1.5);
}

double hubness_skew(const EmbeddingSpace& src, const EmbeddingSpace& tgt, std::size_t k, Metric metric,
                    std::size_t k_csls, unsigned threads) {
  if (k < 1) throw ConfigError("hubness k must be at least 1");
  SimilarityParams params;
  params.k_csls = k_csls;
  params.top_k = k;
  RetrievalOptions options;
  options.metric = metric;
  options.threads = threads;
  const auto result = retrieve_topk(src, tgt, params, options);
  const auto counts = k_occurrence(result.candidates, tgt.size());
  return skewness(counts);
}

void save_candidates(const CandidateSet& cands, const Vocabulary& src, const Vocabulary& tgt,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot open '{}' for writing", path.string()));
  fmt::memory_buffer buf;
  for (const auto& [s, list] : cands.lists) {
    for (const Candidate& c : list) {
      fmt::format_to(std::back_inserter(buf), "{}\t{}\t{:.6f}\n", src.word(s), tgt.word(c.target), c.score);
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    buf.clear();
  }
  if (!out) throw DataError(fmt::format("failed writing '{}'", path.string()));
}

CandidateSet load_candidates(const std::filesystem::path& path, const Vocabulary& src, const Vocabulary& tgt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open '{}' for reading", path.string()));
  CandidateSet cands;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = chomp(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == line.npos ? line.npos : line.find('\t', t1 + 1);
    if (t2 == line.npos || line.find('\t', t2 + 1) != line.npos) {
      throw DataError(fmt::format("{}:{}: expected 'src<TAB>cand<TAB>score'", path.string(), line_no));
    }
    const auto s = src.lookup(nfc(line.substr(0, t1)));
    const auto t = tgt.lookup(nfc(line.substr(t1 + 1, t2 - t1 - 1)));
    if (!s || !t) throw DataError(fmt::format("{}:{}: word not in vocabulary", path.string(), line_no));
    const std::string score_text(line.substr(t2 + 1));
    char* end = nullptr;
    const double score = std::strtod(score_text.c_str(), &end);
    if (end != score_text.c_str() + score_text.size() || !std::isfinite(score)) {
      throw DataError(fmt::format("{}:{}: bad score '{}'", path.string(), line_no, score_text));
    }
    auto& list = cands.lists[*s];
    if (!list.empty() && score > list.back().score) {
      throw DataError(fmt::format("{}:{}: candidates of a source must be in descending score order",
                                  path.string(), line_no));
    }
    for (const Candidate& c : list) {
      if (c.target == *t) throw DataError(fmt::format("{}:{}: duplicate candidate", path.string(), line_no));
    }
    list.push_back(Candidate{*t, score});
  }
  return cands;
}

void save_labeled_pairs(std::span<const LabeledPair> pairs, const Vocabulary& src, const Vocabulary& tgt,
                        const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot open '{}' for writing", path.string()));
  for (const LabeledPair& p : pairs) out << src.word(p.src) << '\t' << tgt.word(p.tgt) << '\t' << p.label << '\n';
  if (!out) throw DataError(fmt::format("failed writing '{}'", path.string()));
}

}  // namespace bli
