#include "bli/eval.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace bli {
namespace {

void require_parallel(std::span<const RankingGroup> groups, std::span<const std::vector<double>> scores) {
  if (groups.size() != scores.size()) throw InvariantError("one score list per group required");
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].size() != scores[g].size() || groups[g].size() == 0) {
      throw InvariantError(fmt::format("group {} has {} candidates but {} scores", g, groups[g].size(), scores[g].size()));
    }
  }
}

std::vector<double> midranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && v[order[j]] == v[order[i]]) ++j;
    // Positions i..j-1 share the average of ranks i+1..j.
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) ranks[order[t]] = rank;
    i = j;
  }
  return ranks;
}

double log_rank(std::uint32_t rank) { return std::log2(1.0 + static_cast<double>(rank)); }

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot open '{}' for writing", path.string()));
  return out;
}

}  // namespace

std::size_t top_index(std::span<const double> scores) {
  if (scores.empty()) throw InvariantError("top_index of an empty list");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

PrecisionReport precision_at_1(std::span<const RankingGroup> groups, std::span<const std::vector<double>> scores) {
  require_parallel(groups, scores);
  PrecisionReport report;
  report.n_eval = groups.size();
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].gold_missed) ++report.gold_missed;
    if (groups[g].labels[top_index(scores[g])] != 0) ++report.correct;
  }
  if (report.n_eval > 0) report.p_at_1 = static_cast<double>(report.correct) / static_cast<double>(report.n_eval);
  return report;
}

std::map<UPos, BucketAccuracy> per_pos_accuracy(std::span<const RankingGroup> groups,
                                                std::span<const std::vector<double>> scores, const PosTable& pos_src) {
  require_parallel(groups, scores);
  std::map<UPos, std::pair<std::size_t, std::size_t>> counts;  // tag -> (n, correct)
  for (std::size_t g = 0; g < groups.size(); ++g) {
    auto& [n, correct] = counts[pos_src[groups[g].src]];
    ++n;
    if (groups[g].labels[top_index(scores[g])] != 0) ++correct;
  }
  std::map<UPos, BucketAccuracy> out;
  for (const auto& [tag, c] : counts) {
    out[tag] = BucketAccuracy{c.first, static_cast<double>(c.second) / static_cast<double>(c.first)};
  }
  return out;
}

FrequencyDiffReport freq_diff_report(std::span<const RankingGroup> groups, std::span<const std::vector<double>> scores,
                                     const TranslationDictionary& dict, const FrequencyTable& freq_src,
                                     const FrequencyTable& freq_tgt, bool errors_only) {
  require_parallel(groups, scores);
  FrequencyDiffReport report;
  for (const auto& [s, targets] : dict.entries) {
    const auto si = static_cast<std::size_t>(s);
    for (WordId t : targets) {
      const auto ti = static_cast<std::size_t>(t);
      report.zipf.gold += std::abs(freq_src.zipf.at(si) - freq_tgt.zipf.at(ti));
      report.log_rank.gold += std::abs(log_rank(freq_src.rank.at(si)) - log_rank(freq_tgt.rank.at(ti)));
      ++report.zipf.n_gold;
    }
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const std::size_t top = top_index(scores[g]);
    if (errors_only && groups[g].labels[top] != 0) continue;
    const auto si = static_cast<std::size_t>(groups[g].src);
    const auto ti = static_cast<std::size_t>(groups[g].candidates[top]);
    report.zipf.predicted += std::abs(freq_src.zipf.at(si) - freq_tgt.zipf.at(ti));
    report.log_rank.predicted += std::abs(log_rank(freq_src.rank.at(si)) - log_rank(freq_tgt.rank.at(ti)));
    ++report.zipf.n_predicted;
  }
  report.log_rank.n_gold = report.zipf.n_gold;
  report.log_rank.n_predicted = report.zipf.n_predicted;
  for (FrequencyGap* gap : {&report.zipf, &report.log_rank}) {
    if (gap->n_gold > 0) gap->gold /= static_cast<double>(gap->n_gold);
    if (gap->n_predicted > 0) gap->predicted /= static_cast<double>(gap->n_predicted);
  }
  return report;
}

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvariantError("spearman: inputs differ in length");
  if (x.size() < 2) throw InvariantError("spearman: need at least two observations");
  const auto rx = midranks(x);
  const auto ry = midranks(y);
  // Midranks of n items always average (n + 1) / 2.
  const double mean = 0.5 * static_cast<double>(x.size() + 1);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::map<UPos, CorrelationCell> pos_freq_correlation(const TranslationDictionary& dict,
                                                     const FrequencyTable& freq_src, const FrequencyTable& freq_tgt,
                                                     const PosTable& pos_src, std::size_t min_n) {
  std::map<UPos, std::pair<std::vector<double>, std::vector<double>>> buckets;
  for (const auto& [s, targets] : dict.entries) {
    if (targets.empty()) continue;
    auto& [xs, ys] = buckets[pos_src[s]];
    xs.push_back(static_cast<double>(freq_src.rank.at(static_cast<std::size_t>(s))));
    ys.push_back(static_cast<double>(freq_tgt.rank.at(static_cast<std::size_t>(targets.front()))));
  }
  std::map<UPos, CorrelationCell> grid;
  for (UPos tag : all_pos_tags()) {
    CorrelationCell cell;
    if (auto it = buckets.find(tag); it != buckets.end()) {
      cell.n = it->second.first.size();
      if (cell.n >= min_n && cell.n >= 2) cell.rho = spearman(it->second.first, it->second.second);
    }
    grid[tag] = cell;
  }
  return grid;
}

Eigen::MatrixXd pca_project(const Eigen::MatrixXd& points) {
  if (points.cols() < 2) throw ConfigError("PCA needs at least two dimensions");
  if (points.rows() < 2) throw ConfigError("PCA needs at least two points");
  const Eigen::RowVectorXd mean = points.colwise().mean();
  const Eigen::MatrixXd centred = points.rowwise() - mean;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centred, Eigen::ComputeThinV);
  Eigen::MatrixXd components = svd.matrixV().leftCols(2);
  for (Eigen::Index c = 0; c < 2; ++c) {
    Eigen::Index largest = 0;
    components.col(c).cwiseAbs().maxCoeff(&largest);
    if (components(largest, c) < 0.0) components.col(c) *= -1.0;
  }
  return centred * components;
}

std::vector<Explanation> explain_predictions(std::span<const RankingGroup> groups,
                                             std::span<const std::vector<double>> scores, const Vocabulary& src,
                                             const Vocabulary& tgt, const LexicalTables& tables) {
  require_parallel(groups, scores);
  std::vector<Explanation> rows;
  rows.reserve(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const RankingGroup& group = groups[g];
    const std::size_t top = top_index(scores[g]);
    const WordId pred = group.candidates[top];
    Explanation e;
    e.src = src.word(group.src);
    e.prediction = tgt.word(pred);
    e.rank_src = tables.freq_src.rank.at(static_cast<std::size_t>(group.src));
    e.rank_pred = tables.freq_tgt.rank.at(static_cast<std::size_t>(pred));
    e.pos_src = pos_name(tables.pos_src[group.src]);
    e.pos_pred = pos_name(tables.pos_tgt[pred]);
    e.score = scores[g][top];
    e.correct = group.labels[top] != 0;
    rows.push_back(std::move(e));
  }
  return rows;
}

void save_explanations(std::span<const Explanation> rows, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "src\tprediction\trank_src\trank_pred\tpos_src\tpos_pred\tscore\tcorrect\n";
  for (const auto& r : rows) {
    out << fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{:.6f}\t{}\n", r.src, r.prediction, r.rank_src, r.rank_pred, r.pos_src,
                       r.pos_pred, r.score, r.correct ? 1 : 0);
  }
  if (!out) throw DataError(fmt::format("failed writing '{}'", path.string()));
}

void save_per_pos(const std::map<UPos, BucketAccuracy>& buckets, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "pos\tn\tp_at_1\n";
  for (const auto& [tag, b] : buckets) out << fmt::format("{}\t{}\t{:.2f}\n", pos_name(tag), b.n, 100.0 * b.accuracy);
  if (!out) throw DataError(fmt::format("failed writing '{}'", path.string()));
}

void save_correlation_grid(std::span<const std::pair<std::string, std::map<UPos, CorrelationCell>>> rows,
                           const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "pair";
  for (UPos tag : all_pos_tags()) out << '\t' << pos_name(tag);
  out << '\n';
  for (const auto& [label, cells] : rows) {
    out << label;
    for (UPos tag : all_pos_tags()) {
      auto it = cells.find(tag);
      if (it == cells.end() || !it->second.rho) {
        out << "\tNA";
      } else {
        out << fmt::format("\t{:.4f}", *it->second.rho);
      }
    }
    out << '\n';
  }
  if (!out) throw DataError(fmt::format("failed writing '{}'", path.string()));
}

}  // namespace bli
