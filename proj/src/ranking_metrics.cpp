#include "bli/ltr.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bli {
namespace {

// Prefix statistics of a ranked label list: positives[r] counts positives in
// positions 0..r, recip[r] sums 1/(m+1) over positive positions m <= r.
struct SwapTable {
  std::vector<double> positives;
  std::vector<double> recip;
  double total = 0.0;

  explicit SwapTable(std::span<const std::uint8_t> ranked) : positives(ranked.size()), recip(ranked.size()) {
    double c = 0.0;
    double r = 0.0;
    for (std::size_t m = 0; m < ranked.size(); ++m) {
      if (ranked[m] != 0) {
        c += 1.0;
        r += 1.0 / static_cast<double>(m + 1);
      }
      positives[m] = c;
      recip[m] = r;
    }
    total = c;
  }

  double delta(std::span<const std::uint8_t> ranked, std::size_t i, std::size_t j) const {
    if (i > j) std::swap(i, j);
    const bool up = ranked[i] != 0;
    const bool down = ranked[j] != 0;
    if (up == down || total == 0.0) return 0.0;
    const double a = static_cast<double>(i + 1);
    const double b = static_cast<double>(j + 1);
    const double between = recip[j - 1] - recip[i];
    if (up) {
      // Positive at i moves down to j; positives in between lose one.
      return (positives[j] / b - positives[i] / a - between) / total;
    }
    // Positive at j moves up to i; positives in between gain one.
    return ((positives[i] + 1.0) / a - positives[j] / b + between) / total;
  }
};

}  // namespace

std::vector<std::size_t> rank_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

double average_precision(std::span<const std::uint8_t> ranked_labels) {
  double hits = 0.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < ranked_labels.size(); ++k) {
    if (ranked_labels[k] == 0) continue;
    hits += 1.0;
    sum += hits / static_cast<double>(k + 1);
  }
  return hits == 0.0 ? 0.0 : sum / hits;
}

MapResult mean_ap(std::span<const RankingGroup> groups, std::span<const std::vector<double>> scores) {
  if (groups.size() != scores.size()) throw InvariantError("mean_ap: one score list per group required");
  MapResult result;
  double sum = 0.0;
  std::vector<std::uint8_t> ranked;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& group = groups[g];
    if (scores[g].size() != group.size()) throw InvariantError("mean_ap: score list length differs from group");
    if (!group.has_positive()) {
      ++result.groups_without_positive;
      continue;
    }
    const auto order = rank_order(scores[g]);
    ranked.resize(order.size());
    for (std::size_t r = 0; r < order.size(); ++r) ranked[r] = group.labels[order[r]];
    sum += average_precision(ranked);
    ++result.groups_used;
  }
  if (result.groups_used > 0) result.map = sum / static_cast<double>(result.groups_used);
  return result;
}

double delta_ap(std::span<const std::uint8_t> ranked_labels, std::size_t i, std::size_t j) {
  if (i >= ranked_labels.size() || j >= ranked_labels.size() || i == j) {
    throw InvariantError(fmt::format("delta_ap: invalid positions {} and {} for {} items", i, j, ranked_labels.size()));
  }
  return SwapTable(ranked_labels).delta(ranked_labels, i, j);
}

Lambdas compute_lambdas(std::span<const double> scores, std::span<const std::uint8_t> labels, double sigma) {
  const std::size_t n = scores.size();
  if (labels.size() != n) throw InvariantError("compute_lambdas: scores and labels differ in length");
  Lambdas out{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};

  const auto order = rank_order(scores);
  std::vector<std::size_t> position(n);
  std::vector<std::uint8_t> ranked(n);
  for (std::size_t r = 0; r < n; ++r) {
    position[order[r]] = r;
    ranked[r] = labels[order[r]];
  }
  const SwapTable table(ranked);
  if (table.total == 0.0 || table.total == static_cast<double>(n)) return out;

  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] == 0) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (labels[j] != 0) continue;
      const double weight = std::abs(table.delta(ranked, position[i], position[j]));
      const double rho = 1.0 / (1.0 + std::exp(sigma * (scores[i] - scores[j])));
      const double grad = sigma * rho * weight;
      const double hess = sigma * sigma * rho * (1.0 - rho) * weight;
      out.g[i] -= grad;
      out.g[j] += grad;
      out.h[i] += hess;
      out.h[j] += hess;
    }
  }
  return out;
}

std::vector<std::vector<double>> combine_with_retriever(std::span<const std::vector<double>> ranker,
                                                        std::span<const std::vector<double>> retriever,
                                                        double mix) {
  if (ranker.size() != retriever.size()) throw InvariantError("combine_with_retriever: group counts differ");
  if (!(mix >= 0.0 && mix <= 1.0)) throw ConfigError(fmt::format("mix must be in [0, 1], got {}", mix));
  auto normalize = [](const std::vector<double>& v) {
    std::vector<double> out(v.size(), 0.5);
    if (v.empty()) return out;
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double span = *hi - *lo;
    if (span > 0.0) {
      for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - *lo) / span;
    }
    return out;
  };
  std::vector<std::vector<double>> combined(ranker.size());
  for (std::size_t g = 0; g < ranker.size(); ++g) {
    if (ranker[g].size() != retriever[g].size()) throw InvariantError("combine_with_retriever: list lengths differ");
    const auto r = normalize(ranker[g]);
    const auto c = normalize(retriever[g]);
    combined[g].resize(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) combined[g][i] = mix * r[i] + (1.0 - mix) * c[i];
  }
  return combined;
}

}  // namespace bli
