#include "bli/features.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace bli {

const std::array<std::string, kFeatureCount>& FeatureSchema::names() {
  static const auto table = [] {
    std::array<std::string, kFeatureCount> n;
    n[col::kCsls] = "csls";
    n[col::kExtLogit] = "ext_logit";
    n[col::kExtPresent] = "ext_present";
    n[col::kZipfSrc] = "zipf_src";
    n[col::kZipfCand] = "zipf_cand";
    n[col::kZipfDiff] = "zipf_diff";
    n[col::kZipfAbsDiff] = "zipf_absdiff";
    n[col::kLogRankSrc] = "log_rank_src";
    n[col::kLogRankCand] = "log_rank_cand";
    n[col::kPosMatch] = "pos_match";
    for (UPos tag : all_pos_tags()) {
      const auto i = static_cast<std::size_t>(tag);
      n[col::kPosSrc + i] = fmt::format("pos_src_{}", pos_name(tag));
      n[col::kPosCand + i] = fmt::format("pos_cand_{}", pos_name(tag));
    }
    return n;
  }();
  return table;
}

std::string FeatureSchema::fingerprint() {
  // FNV-1a over "name,name,...".
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& name : names()) {
    for (char c : name + ",") {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
  }
  return fmt::format("fnv1a64:{:016x}", h);
}

bool FeatureMask::enabled(std::size_t column) const {
  if (column == col::kExtLogit || column == col::kExtPresent) return external;
  if (column >= col::kZipfSrc && column <= col::kLogRankCand) return frequency;
  if (column >= col::kPosMatch) return pos;
  return true;
}

std::vector<std::string> FeatureMask::disabled_groups() const {
  std::vector<std::string> out;
  if (!external) out.emplace_back("external");
  if (!frequency) out.emplace_back("frequency");
  if (!pos) out.emplace_back("pos");
  return out;
}

FeatureMask FeatureMask::from_disabled_groups(std::span<const std::string> groups) {
  FeatureMask mask;
  for (const auto& g : groups) {
    if (g == "external") {
      mask.external = false;
    } else if (g == "frequency") {
      mask.frequency = false;
    } else if (g == "pos") {
      mask.pos = false;
    } else {
      throw DataError(fmt::format("unknown feature group '{}'", g));
    }
  }
  return mask;
}

std::optional<double> ExternalScores::find(WordId src, WordId tgt) const {
  auto it = scores_.find(key(src, tgt));
  if (it == scores_.end()) return std::nullopt;
  return it->second;
}

ExternalScoresLoadResult load_external_scores(const std::filesystem::path& path, const Vocabulary& src,
                                              const Vocabulary& tgt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open '{}' for reading", path.string()));
  ExternalScoresLoadResult result;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = chomp(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == line.npos ? line.npos : line.find('\t', t1 + 1);
    if (t2 == line.npos || line.find('\t', t2 + 1) != line.npos) {
      throw DataError(fmt::format("{}:{}: expected 'src<TAB>cand<TAB>logit'", path.string(), line_no));
    }
    const std::string value(line.substr(t2 + 1));
    char* end = nullptr;
    const double logit = std::strtod(value.c_str(), &end);
    if (value.empty() || end != value.c_str() + value.size() || !std::isfinite(logit)) {
      throw DataError(fmt::format("{}:{}: logit must be a finite number, got '{}'", path.string(), line_no, value));
    }
    const auto s = src.lookup(nfc(line.substr(0, t1)));
    const auto t = tgt.lookup(nfc(line.substr(t1 + 1, t2 - t1 - 1)));
    if (!s || !t) {
      ++result.out_of_vocab;
      continue;
    }
    if (result.scores.find(*s, *t)) {
      ++result.duplicates;
      log::warn(fmt::format("{}:{}: duplicate score for '{}', keeping the last", path.string(), line_no,
                            line.substr(0, t2)));
    }
    result.scores.set(*s, *t, logit);
  }
  return result;
}

std::vector<std::uint8_t> label_candidates(WordId src, std::span<const WordId> candidates,
                                           const TranslationDictionary& dict) {
  if (candidates.empty()) throw DataError(fmt::format("empty candidate list for source id {}", src));
  std::vector<std::uint8_t> labels(candidates.size(), 0);
  for (std::size_t i = 0; i < candidates.size(); ++i) labels[i] = dict.is_gold(src, candidates[i]) ? 1 : 0;
  return labels;
}

FeatureVector featurize_pair(WordId src, WordId cand, double csls, std::optional<double> ext,
                             const LexicalTables& tables, const FeatureMask& mask) {
  FeatureVector f{};
  const auto s = static_cast<std::size_t>(src);
  const auto c = static_cast<std::size_t>(cand);
  f[col::kCsls] = csls;
  f[col::kExtLogit] = ext.value_or(0.0);
  f[col::kExtPresent] = ext ? 1.0 : 0.0;
  const double zs = tables.freq_src.zipf.at(s);
  const double zc = tables.freq_tgt.zipf.at(c);
  f[col::kZipfSrc] = zs;
  f[col::kZipfCand] = zc;
  f[col::kZipfDiff] = zs - zc;
  f[col::kZipfAbsDiff] = std::abs(zs - zc);
  f[col::kLogRankSrc] = std::log2(1.0 + static_cast<double>(tables.freq_src.rank.at(s)));
  f[col::kLogRankCand] = std::log2(1.0 + static_cast<double>(tables.freq_tgt.rank.at(c)));
  const UPos ps = tables.pos_src[src];
  const UPos pc = tables.pos_tgt[cand];
  f[col::kPosMatch] = ps == pc ? 1.0 : 0.0;
  f[col::kPosSrc + static_cast<std::size_t>(ps)] = 1.0;
  f[col::kPosCand + static_cast<std::size_t>(pc)] = 1.0;
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (!mask.enabled(i)) f[i] = 0.0;
  }
  return f;
}

bool RankingGroup::has_positive() const {
  return std::any_of(labels.begin(), labels.end(), [](std::uint8_t l) { return l != 0; });
}

bool RankingGroup::has_negative() const {
  return std::any_of(labels.begin(), labels.end(), [](std::uint8_t l) { return l == 0; });
}

std::vector<RankingGroup> build_groups(std::span<const WordId> sources, const CandidateSet& cands,
                                       const LexicalTables& tables, const GroupOptions& options) {
  for (WordId s : sources) {
    if (cands.find(s) == nullptr) throw DataError(fmt::format("no candidates for source id {}", s));
  }
  std::vector<RankingGroup> groups(sources.size());
  parallel_for(sources.size(), options.threads, [&](std::size_t g, unsigned) {
    RankingGroup& group = groups[g];
    group.src = sources[g];
    const auto& list = *cands.find(group.src);
    for (const Candidate& c : list) {
      group.candidates.push_back(c.target);
      group.csls.push_back(c.score);
    }
    if (options.dict != nullptr) {
      group.labels = label_candidates(group.src, group.candidates, *options.dict);
      group.gold_missed = options.dict->contains(group.src) && !group.has_positive();
    } else {
      if (group.candidates.empty()) throw DataError(fmt::format("empty candidate list for source id {}", group.src));
      group.labels.assign(group.candidates.size(), 0);
    }
    group.features.resize(static_cast<Eigen::Index>(group.size()), static_cast<Eigen::Index>(kFeatureCount));
    for (std::size_t i = 0; i < group.size(); ++i) {
      std::optional<double> ext;
      if (options.external != nullptr) ext = options.external->find(group.src, group.candidates[i]);
      const auto f = featurize_pair(group.src, group.candidates[i], group.csls[i], ext, tables, options.mask);
      for (std::size_t j = 0; j < kFeatureCount; ++j) {
        group.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f[j];
      }
    }
  });
  return groups;
}

void save_feature_matrix(std::span<const RankingGroup> groups, const Vocabulary& src, const Vocabulary& tgt,
                         const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot open '{}' for writing", path.string()));
  out << "src\tcand\tlabel";
  for (const auto& name : FeatureSchema::names()) out << '\t' << name;
  out << '\n';
  for (const RankingGroup& g : groups) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      out << src.word(g.src) << '\t' << tgt.word(g.candidates[i]) << '\t' << int{g.labels[i]};
      for (Eigen::Index j = 0; j < g.features.cols(); ++j) {
        out << '\t' << format_shortest(g.features(static_cast<Eigen::Index>(i), j));
      }
      out << '\n';
    }
  }
  if (!out) throw DataError(fmt::format("failed writing '{}'", path.string()));
}

}  // namespace bli
