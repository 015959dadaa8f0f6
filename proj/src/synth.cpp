#include "bli/synth.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace bli {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

using Rng = std::mt19937_64;

Rng stream(std::uint64_t seed, std::string_view component) { return Rng(component_seed(seed, component)); }

Vocabulary surface_forms(char prefix, std::size_t n) {
  const int width = static_cast<int>(std::to_string(n > 0 ? n - 1 : 0).size());
  std::vector<std::string> words(n);
  for (std::size_t i = 0; i < n; ++i) words[i] = fmt::format("{}{:0{}d}", prefix, i, width);
  return Vocabulary(std::move(words));
}

Eigen::MatrixXd random_orthogonal(std::size_t d, Rng& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd a(d, d);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  // Fixing the signs of R's diagonal makes Q Haar-distributed and unique.
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

void normalize_in_place(RowMatrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double norm = m.row(i).norm();
    if (norm > 0.0) m.row(i) /= norm;
  }
}

std::vector<std::uint64_t> zipf_counts(std::span<const std::uint32_t> rank, double exponent) {
  const double n = static_cast<double>(rank.size());
  const double scale = 1e4 * std::pow(n, exponent);
  std::vector<std::uint64_t> counts(rank.size());
  for (std::size_t i = 0; i < rank.size(); ++i) {
    const double c = scale / std::pow(static_cast<double>(rank[i]), exponent);
    counts[i] = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(c)));
  }
  return counts;
}

std::uint64_t sum(std::span<const std::uint64_t> v) { return std::accumulate(v.begin(), v.end(), std::uint64_t{0}); }

}  // namespace

std::uint64_t component_seed(std::uint64_t seed, std::string_view component) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : component) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(seed) ^ h);
}

std::map<UPos, double> default_pos_distribution() {
  return {{UPos::kNoun, 0.35}, {UPos::kVerb, 0.20}, {UPos::kAdj, 0.15},  {UPos::kAdv, 0.08},
          {UPos::kPropn, 0.07}, {UPos::kNum, 0.03}, {UPos::kAdp, 0.02},  {UPos::kPron, 0.02},
          {UPos::kDet, 0.02},  {UPos::kAux, 0.01},  {UPos::kCconj, 0.01}, {UPos::kSconj, 0.01},
          {UPos::kPart, 0.01}, {UPos::kIntj, 0.01}, {UPos::kX, 0.01}};
}

void SynthConfig::validate() const {
  if (vocab_n < 2) throw ConfigError("synth: vocab_n must be at least 2");
  if (dim < 1) throw ConfigError("synth: dim must be at least 1");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw ConfigError("synth: noise_sigma must be >= 0");
  if (hub_count > vocab_n) throw ConfigError("synth: hub_count exceeds vocab_n");
  if (hub_count > 0 && (hub_subset < 1 || hub_subset > vocab_n)) {
    throw ConfigError("synth: hub_subset must be in [1, vocab_n]");
  }
  if (!(anisotropy >= 0.0) || !std::isfinite(anisotropy)) throw ConfigError("synth: anisotropy must be >= 0");
  if (!(zipf_exponent > 0.0) || !std::isfinite(zipf_exponent)) throw ConfigError("synth: zipf_exponent must be > 0");
  if (!(rank_noise >= 0.0) || !std::isfinite(rank_noise)) throw ConfigError("synth: rank_noise must be >= 0");
  if (!(pos_match_prob >= 0.0 && pos_match_prob <= 1.0)) throw ConfigError("synth: pos_match_prob must be in [0, 1]");
  double total = 0.0;
  for (const auto& [tag, p] : pos_distribution) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw ConfigError(fmt::format("synth: bad probability for {}", pos_name(tag)));
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError(fmt::format("synth: POS probabilities sum to {}, not 1", total));
}

SynthWorld gen_bilingual_world(const SynthConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.vocab_n;
  const auto d = static_cast<Eigen::Index>(cfg.dim);
  const auto rows = static_cast<Eigen::Index>(n);
  SynthWorld world;

  {
    Rng rng = stream(cfg.seed, "source-vectors");
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(cfg.dim)));
    Eigen::RowVectorXd shared(d);
    for (Eigen::Index j = 0; j < d; ++j) shared(j) = normal(rng);
    shared.normalize();
    RowMatrix m(rows, d);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) m(i, j) = normal(rng);
    }
    m.rowwise() += cfg.anisotropy * shared;
    normalize_in_place(m);
    world.src = EmbeddingSpace{surface_forms('s', n), std::move(m), true};
  }

  {
    Rng rng = stream(cfg.seed, "rotation");
    world.rotation = random_orthogonal(cfg.dim, rng);
  }

  {
    Rng rng = stream(cfg.seed, "target-noise");
    std::normal_distribution<double> normal(0.0, 1.0);
    RowMatrix m = world.src.matrix * world.rotation;
    if (cfg.noise_sigma > 0.0) {
      for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) m(i, j) += cfg.noise_sigma * normal(rng);
      }
    }
    normalize_in_place(m);
    world.tgt = EmbeddingSpace{surface_forms('t', n), std::move(m), true};
  }

  if (cfg.hub_count > 0) {
    Rng rng = stream(cfg.seed, "hubs");
    std::vector<WordId> ids(n);
    std::iota(ids.begin(), ids.end(), WordId{0});
    std::shuffle(ids.begin(), ids.end(), rng);
    world.hubs.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(cfg.hub_count));
    std::sort(world.hubs.begin(), world.hubs.end());
    const RowMatrix original = world.tgt.matrix;
    for (WordId hub : world.hubs) {
      std::shuffle(ids.begin(), ids.end(), rng);
      Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(d);
      for (std::size_t k = 0; k < cfg.hub_subset; ++k) mean += original.row(ids[k]);
      const double norm = mean.norm();
      if (norm > 0.0) mean /= norm;
      world.tgt.matrix.row(hub) = mean;
    }
  }

  for (std::size_t i = 0; i < n; ++i) world.gold.add(static_cast<WordId>(i), static_cast<WordId>(i));

  {
    Rng rng = stream(cfg.seed, "frequencies");
    std::vector<WordId> order(n);
    std::iota(order.begin(), order.end(), WordId{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::uint32_t> rank_src(n);
    for (std::size_t r = 0; r < n; ++r) rank_src[static_cast<std::size_t>(order[r])] = static_cast<std::uint32_t>(r + 1);

    std::uniform_real_distribution<double> jitter(-cfg.rank_noise, cfg.rank_noise);
    std::vector<double> key(n);
    for (std::size_t i = 0; i < n; ++i) key[i] = std::log(static_cast<double>(rank_src[i])) + jitter(rng);
    std::iota(order.begin(), order.end(), WordId{0});
    std::stable_sort(order.begin(), order.end(), [&](WordId a, WordId b) {
      return key[static_cast<std::size_t>(a)] < key[static_cast<std::size_t>(b)];
    });
    std::vector<std::uint32_t> rank_tgt(n);
    for (std::size_t r = 0; r < n; ++r) rank_tgt[static_cast<std::size_t>(order[r])] = static_cast<std::uint32_t>(r + 1);

    world.counts_src = zipf_counts(rank_src, cfg.zipf_exponent);
    world.counts_tgt = zipf_counts(rank_tgt, cfg.zipf_exponent);
    world.freq_src = frequency_table_from_counts(world.counts_src, sum(world.counts_src));
    world.freq_tgt = frequency_table_from_counts(world.counts_tgt, sum(world.counts_tgt));
  }

  {
    Rng rng = stream(cfg.seed, "pos");
    std::vector<double> weights;
    std::vector<UPos> tags;
    for (const auto& [tag, p] : cfg.pos_distribution) {
      tags.push_back(tag);
      weights.push_back(p);
    }
    std::discrete_distribution<std::size_t> draw(weights.begin(), weights.end());
    std::bernoulli_distribution keep(cfg.pos_match_prob);
    world.pos_src.tag.resize(n);
    world.pos_tgt.tag.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      world.pos_src.tag[i] = tags[draw(rng)];
      // Both draws always happen so the stream does not depend on the outcome.
      const bool same = keep(rng);
      const UPos other = tags[draw(rng)];
      world.pos_tgt.tag[i] = same ? world.pos_src.tag[i] : other;
    }
  }
  return world;
}

std::pair<TranslationDictionary, TranslationDictionary> split_dictionary(const TranslationDictionary& dict,
                                                                         double test_fraction, std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction <= 1.0)) throw ConfigError("test fraction must be in [0, 1]");
  std::vector<WordId> sources = dict.sources();
  Rng rng = stream(seed, "dictionary-split");
  std::shuffle(sources.begin(), sources.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(sources.size())));
  std::pair<TranslationDictionary, TranslationDictionary> out;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    auto& part = i < n_test ? out.second : out.first;
    part.entries[sources[i]] = *dict.targets(sources[i]);
  }
  return out;
}

void write_world(const SynthWorld& world, const std::filesystem::path& dir, double test_fraction, std::uint64_t seed) {
  namespace wf = world_files;
  std::filesystem::create_directories(dir);
  const auto [train, test] = split_dictionary(world.gold, test_fraction, seed);
  save_embeddings(world.src, dir / wf::kSrcVectors);
  save_embeddings(world.tgt, dir / wf::kTgtVectors);
  save_dictionary(world.gold, world.src.vocab, world.tgt.vocab, dir / wf::kGold);
  save_dictionary(train, world.src.vocab, world.tgt.vocab, dir / wf::kTrain);
  save_dictionary(test, world.src.vocab, world.tgt.vocab, dir / wf::kTest);
  save_frequency_counts(world.src.vocab, world.counts_src, dir / wf::kSrcFreq);
  save_frequency_counts(world.tgt.vocab, world.counts_tgt, dir / wf::kTgtFreq);
  save_pos_table(world.pos_src, world.src.vocab, dir / wf::kSrcPos);
  save_pos_table(world.pos_tgt, world.tgt.vocab, dir / wf::kTgtPos);
}

}  // namespace bli
