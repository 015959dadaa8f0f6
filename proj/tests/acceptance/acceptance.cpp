// Acceptance checks 1-10. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Pass criterion numbers as arguments to run a subset.

#include "bli/cli.hpp"
#include "bli/eval.hpp"
#include "bli/features.hpp"
#include "bli/ltr.hpp"
#include "bli/retrieval.hpp"
#include "bli/synth.hpp"

#include "support.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace {

using namespace bli;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = false;
  std::string detail;
};

// 1. CSLS retrieval against pointwise scores.

std::vector<double> brute_means(const Eigen::MatrixXd& q, const Eigen::MatrixXd& index, std::size_t k) {
  std::vector<double> out(static_cast<std::size_t>(q.rows()));
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    std::vector<double> sims(static_cast<std::size_t>(index.rows()));
    for (Eigen::Index j = 0; j < index.rows(); ++j) sims[static_cast<std::size_t>(j)] = q.row(i).dot(index.row(j));
    std::sort(sims.begin(), sims.end(), std::greater<>());
    out[static_cast<std::size_t>(i)] = std::accumulate(sims.begin(), sims.begin() + static_cast<long>(k), 0.0) / static_cast<double>(k);
  }
  return out;
}

Verdict csls_oracle() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::size_t mismatches = 0;
  std::size_t checked = 0;
  for (std::uint64_t inst = 0; inst < 20; ++inst) {
    const auto src = testing::random_space(200, 32, 1000 + inst, "s");
    const auto tgt = testing::random_space(300, 32, 2000 + inst, "t");
    std::vector<std::vector<double>> xs(200);
    std::vector<std::vector<double>> ys(300);
    for (Eigen::Index i = 0; i < 200; ++i) xs[static_cast<std::size_t>(i)].assign(src.matrix.row(i).begin(), src.matrix.row(i).end());
    for (Eigen::Index i = 0; i < 300; ++i) ys[static_cast<std::size_t>(i)].assign(tgt.matrix.row(i).begin(), tgt.matrix.row(i).end());
    for (std::size_t k : {1, 5, 10}) {
      const auto r_src = brute_means(src.matrix, tgt.matrix, k);
      const auto r_tgt = brute_means(tgt.matrix, src.matrix, k);
      for (std::size_t top_k : {std::size_t{50}, std::size_t{300}}) {
        SimilarityParams p;
        p.k_csls = k;
        p.top_k = top_k;
        const auto result = retrieve_topk(src, tgt, p);
        for (WordId s = 0; s < 200; ++s) {
          std::vector<std::pair<double, WordId>> all;
          for (WordId t = 0; t < 300; ++t) all.emplace_back(csls_score(xs[s], ys[t], r_src[s], r_tgt[t]), t);
          std::stable_sort(all.begin(), all.end(), [](auto& a, auto& b) { return a.first > b.first; });
          const auto& got = result.candidates.lists.at(s);
          if (got.size() != top_k) {
            ++mismatches;
            continue;
          }
          for (std::size_t i = 0; i < top_k; ++i) {
            ++checked;
            const double oracle_score = all[i].first;
            worst = std::max(worst, std::abs(got[i].score - oracle_score));
            const bool same = got[i].target == all[i].second;
            const bool tie = std::abs(oracle_score - all[std::min(i + 1, all.size() - 1)].first) < 1e-9 ||
                             (i > 0 && std::abs(oracle_score - all[i - 1].first) < 1e-9);
            if (!same && !tie) ++mismatches;
          }
        }
      }
    }
  }
  const double t = seconds_since(t0);
  return {mismatches == 0 && worst <= 1e-6 && t < 5.0,
          fmt::format("{} candidates, {} mismatches, max |score diff| {:.2e}, {:.2f}s", checked, mismatches, worst, t)};
}

// 2. Hubness reduction.

double p_at_1_identity(const CandidateSet& c) {
  std::size_t ok = 0;
  for (const auto& [s, list] : c.lists) ok += !list.empty() && list[0].target == s ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(c.size());
}

SynthConfig hub_world(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.vocab_n = 2000;
  cfg.dim = 64;
  cfg.hub_count = 20;
  cfg.hub_subset = 50;
  cfg.anisotropy = 0.5;
  cfg.noise_sigma = 0.2;
  cfg.seed = seed;
  return cfg;
}

Verdict hubness() {
  const auto t0 = Clock::now();
  int skew_wins = 0;
  int p1_wins = 0;
  std::string rows;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto w = gen_bilingual_world(hub_world(seed));
    const auto src = apply_mapping(w.src, align_procrustes(w.src, w.tgt, w.gold));
    SimilarityParams p;
    p.top_k = 10;
    RetrievalOptions cos_opts;
    cos_opts.metric = Metric::kCosine;
    const auto rc = retrieve_topk(src, w.tgt, p, cos_opts);
    const auto rs = retrieve_topk(src, w.tgt, p);
    const double sc = skewness(k_occurrence(rc.candidates, 2000));
    const double ss = skewness(k_occurrence(rs.candidates, 2000));
    const double pc = p_at_1_identity(rc.candidates);
    const double ps = p_at_1_identity(rs.candidates);
    skew_wins += ss < sc ? 1 : 0;
    p1_wins += ps >= pc ? 1 : 0;
    rows += fmt::format("\n    seed {}: skew cos {:.2f} csls {:.2f}, P@1 cos {:.3f} csls {:.3f}", seed, sc, ss, pc, ps);
  }
  const double t = seconds_since(t0);
  return {skew_wins >= 9 && p1_wins >= 9 && t < 60.0,
          fmt::format("skew lower {}/10, P@1 not worse {}/10, {:.1f}s{}", skew_wins, p1_wins, t, rows)};
}

// 3. Delta AP.

double ap_recompute(const std::vector<std::uint8_t>& ranked) {
  double hits = 0.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    if (ranked[k] == 0) continue;
    double above = 0.0;
    for (std::size_t m = 0; m <= k; ++m) above += ranked[m];
    sum += above / static_cast<double>(k + 1);
    hits += 1.0;
  }
  return hits == 0.0 ? 0.0 : sum / hits;
}

Verdict delta_ap_exact() {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> normal;
  double worst_delta = 0.0;
  double worst_sum = 0.0;
  std::size_t swaps = 0;
  for (std::size_t n = 1; n <= 8; ++n) {
    for (unsigned pattern = 0; pattern < (1U << n); ++pattern) {
      std::vector<std::uint8_t> labels(n);
      for (std::size_t i = 0; i < n; ++i) labels[i] = (pattern >> i) & 1U;
      for (int rep = 0; rep < 30; ++rep) {
        std::vector<double> scores(n);
        for (auto& s : scores) s = normal(rng);
        std::vector<std::uint8_t> ranked;
        for (auto idx : rank_order(scores)) ranked.push_back(labels[idx]);
        const double base = ap_recompute(ranked);
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = i + 1; j < n; ++j) {
            auto swapped = ranked;
            std::swap(swapped[i], swapped[j]);
            worst_delta = std::max(worst_delta, std::abs(delta_ap(ranked, i, j) - (ap_recompute(swapped) - base)));
            ++swaps;
          }
        }
        const auto l = compute_lambdas(scores, labels, 1.0);
        worst_sum = std::max(worst_sum, std::abs(std::accumulate(l.g.begin(), l.g.end(), 0.0)));
      }
    }
  }
  return {worst_delta <= 1e-12 && worst_sum <= 1e-12,
          fmt::format("{} swaps, max delta error {:.1e}, max |sum lambda| {:.1e}", swaps, worst_delta, worst_sum)};
}

// 4. Ranker learnability.

std::vector<RankingGroup> separable_groups(std::size_t count, std::uint64_t seed, WordId first_id) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> gold_value(1.0, 2.0);
  std::uniform_real_distribution<double> other_value(-1.0, 0.99);
  std::vector<RankingGroup> groups;
  for (std::size_t g = 0; g < count; ++g) {
    RankingGroup group;
    group.src = first_id + static_cast<WordId>(g);
    group.features = RowMatrix::Zero(50, static_cast<Eigen::Index>(kFeatureCount));
    const std::size_t gold = rng() % 50;
    for (std::size_t i = 0; i < 50; ++i) {
      group.candidates.push_back(static_cast<WordId>(i));
      group.labels.push_back(i == gold ? 1 : 0);
      const double noise = normal(rng);
      group.csls.push_back(noise);
      const auto row = static_cast<Eigen::Index>(i);
      group.features(row, col::kCsls) = noise;
      group.features(row, col::kZipfDiff) = i == gold ? gold_value(rng) : other_value(rng);
    }
    groups.push_back(std::move(group));
  }
  return groups;
}

Verdict learnability() {
  const auto t0 = Clock::now();
  const auto train_groups = separable_groups(500, 4, 0);
  const auto held_out = separable_groups(500, 5, 500);
  GbdtParams params;
  const auto result = train(train_groups, params);
  const double train_map = mean_ap(train_groups, predict_groups(result.model, train_groups)).map;
  const double held_map = mean_ap(held_out, predict_groups(result.model, held_out)).map;
  const double t = seconds_since(t0);
  return {train_map >= 0.99 && held_map >= 0.95 && t < 120.0,
          fmt::format("{} trees depth {} lr {}: train MAP {:.4f}, held-out MAP {:.4f}, {:.1f}s", params.n_trees,
                      params.max_depth, params.learning_rate, train_map, held_map, t)};
}

// 5 and 7. Lexical features on held-out sources.

struct LexicalRun {
  double rho = 0.0;
  double pos_match = 0.0;
  double p_csls = 0.0;
  double p_full = 0.0;
  double p_ablated = 0.0;
  double dz_csls = 0.0;
  double dz_full = 0.0;
  double dz_gold = 0.0;
};

std::vector<RankingGroup> trainable(std::vector<RankingGroup> groups) {
  std::erase_if(groups, [](const RankingGroup& g) { return !g.has_positive() || !g.has_negative(); });
  return groups;
}

LexicalRun lexical_world(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.noise_sigma = 0.22;
  cfg.anisotropy = 0.5;
  cfg.seed = seed;
  const auto w = gen_bilingual_world(cfg);
  LexicalRun run;
  std::vector<double> rs;
  std::vector<double> rt;
  std::size_t match = 0;
  for (std::size_t i = 0; i < cfg.vocab_n; ++i) {
    rs.push_back(w.freq_src.rank[i]);
    rt.push_back(w.freq_tgt.rank[i]);
    match += w.pos_src.tag[i] == w.pos_tgt.tag[i] ? 1 : 0;
  }
  run.rho = spearman(rs, rt).value_or(0.0);
  run.pos_match = static_cast<double>(match) / static_cast<double>(cfg.vocab_n);

  const auto [train_dict, test_dict] = split_dictionary(w.gold, 0.5, seed);
  const auto src = apply_mapping(w.src, align_procrustes(w.src, w.tgt, train_dict));
  const auto cands = retrieve_topk(src, w.tgt, SimilarityParams{}).candidates;
  const LexicalTables tables{w.freq_src, w.freq_tgt, w.pos_src, w.pos_tgt};
  const auto train_sources = train_dict.sources();
  const auto test_sources = test_dict.sources();

  auto fit = [&](const FeatureMask& mask) {
    GroupOptions train_opts;
    train_opts.dict = &train_dict;
    train_opts.mask = mask;
    GroupOptions test_opts = train_opts;
    test_opts.dict = &test_dict;
    const auto model = train(trainable(build_groups(train_sources, cands, tables, train_opts)), GbdtParams{},
                             TrainOptions{mask, 0})
                           .model;
    auto test_groups = build_groups(test_sources, cands, tables, test_opts);
    auto scores = predict_groups(model, test_groups);
    return std::make_pair(std::move(test_groups), std::move(scores));
  };
  const auto [groups, full_scores] = fit(FeatureMask{});
  const auto [ablated_groups, ablated_scores] = fit(FeatureMask{false, false, false});
  std::vector<std::vector<double>> csls_scores;
  for (const auto& g : groups) csls_scores.push_back(g.csls);

  run.p_csls = precision_at_1(groups, csls_scores).p_at_1;
  run.p_full = precision_at_1(groups, full_scores).p_at_1;
  run.p_ablated = precision_at_1(ablated_groups, ablated_scores).p_at_1;
  const auto fc = freq_diff_report(groups, csls_scores, test_dict, w.freq_src, w.freq_tgt);
  const auto ff = freq_diff_report(groups, full_scores, test_dict, w.freq_src, w.freq_tgt);
  run.dz_csls = fc.zipf.predicted;
  run.dz_full = ff.zipf.predicted;
  run.dz_gold = ff.zipf.gold;
  return run;
}

std::vector<LexicalRun> lexical_runs() {
  static std::vector<LexicalRun> runs;
  if (runs.empty()) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) runs.push_back(lexical_world(seed));
  }
  return runs;
}

Verdict lexical_features() {
  const auto t0 = Clock::now();
  const auto runs = lexical_runs();
  int wins = 0;
  int ablation_smaller = 0;
  int regime = 0;
  std::string rows;
  for (std::size_t s = 0; s < runs.size(); ++s) {
    const auto& r = runs[s];
    const bool in_regime = r.rho > 0.5 && r.p_csls >= 0.4 && r.p_csls <= 0.7;
    regime += in_regime ? 1 : 0;
    wins += in_regime && r.p_full - r.p_csls >= 0.05 ? 1 : 0;
    ablation_smaller += r.p_ablated - r.p_csls < r.p_full - r.p_csls ? 1 : 0;
    rows += fmt::format("\n    seed {}: rho {:.2f} pos match {:.3f}, P@1 csls {:.3f} full {:.3f} scores-only {:.3f}", s,
                        r.rho, r.pos_match, r.p_csls, r.p_full, r.p_ablated);
  }
  return {wins >= 9 && ablation_smaller >= 9,
          fmt::format("in regime {}/10, full beats CSLS by >= 5 points {}/10, ablation gain smaller {}/10, {:.1f}s{}",
                      regime, wins, ablation_smaller, seconds_since(t0), rows)};
}

Verdict frequency_difference() {
  const auto runs = lexical_runs();
  int ok = 0;
  std::string rows;
  for (std::size_t s = 0; s < runs.size(); ++s) {
    const auto& r = runs[s];
    ok += r.dz_full <= r.dz_csls && std::abs(r.dz_full - r.dz_gold) <= 0.5 ? 1 : 0;
    rows += fmt::format("\n    seed {}: mean |dzipf| csls {:.3f} ranker {:.3f} gold {:.3f}", s, r.dz_csls, r.dz_full,
                        r.dz_gold);
  }
  return {ok >= 8, fmt::format("{}/10 seeds{}", ok, rows)};
}

// 6. Procrustes recovery.

Verdict procrustes() {
  auto cfg = hub_world(0);
  cfg.noise_sigma = 0.0;
  cfg.hub_count = 0;
  const auto w = gen_bilingual_world(cfg);
  const auto map = align_procrustes(w.src, w.tgt, w.gold);
  const double err = (map - w.rotation).cwiseAbs().maxCoeff();
  SimilarityParams p;
  p.top_k = 1;
  RetrievalOptions opts;
  opts.metric = Metric::kCosine;
  const double p1 = p_at_1_identity(retrieve_topk(apply_mapping(w.src, map), w.tgt, p, opts).candidates);
  return {err < 1e-5 && p1 == 1.0, fmt::format("max |W - Q| {:.2e}, cosine P@1 {:.4f}", err, p1)};
}

// 8. Spearman.

std::vector<double> midranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double below = 0.0;
    double equal = 0.0;
    for (double u : v) {
      below += u < v[i] ? 1.0 : 0.0;
      equal += u == v[i] ? 1.0 : 0.0;
    }
    r[i] = below + (equal + 1.0) / 2.0;
  }
  return r;
}

std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  return sab / std::sqrt(saa * sbb);
}

Verdict spearman_oracle() {
  const std::vector<double> x{1, 2, 3, 4};
  const std::vector<double> y{1, 3, 2, 4};
  const auto worked = spearman(x, y);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  std::size_t undefined_mismatch = 0;
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t n = 3 + rng() % 60;
    const bool ties = inst % 2 == 0;
    std::vector<double> a(n);
    std::vector<double> b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = ties ? static_cast<double>(rng() % 5) : normal(rng);
      b[i] = ties ? static_cast<double>(rng() % 4) + 0.5 * a[i] : normal(rng) + 0.5 * a[i];
    }
    const auto got = spearman(a, b);
    const auto want = pearson(midranks(a), midranks(b));
    if (got.has_value() != want.has_value()) {
      ++undefined_mismatch;
      continue;
    }
    if (got) worst = std::max(worst, std::abs(*got - *want));
  }
  const bool exact = worked && *worked == 0.8;
  return {exact && worst <= 1e-9 && undefined_mismatch == 0,
          fmt::format("worked example {}, max deviation {:.1e} over 100 instances", worked ? fmt::format("{}", *worked) : "undefined",
                      worst)};
}

// 9. Determinism and persistence.

int invoke(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  if (code != 0) fmt::print(stderr, "bli {} failed ({}): {}\n", args.front(), code, err.str());
  return code;
}

bool run_pipeline(const fs::path& root, const std::string& threads) {
  const auto world = root / "world";
  const auto out = root / "out";
  if (invoke({"synth", "--out-dir", world.string(), "--vocab-n", "1000", "--seed", "11", "--threads", threads}) != 0) {
    return false;
  }
  auto p = [&](const char* f) { return (world / f).string(); };
  const std::vector<std::string> common{
      "--src-emb",  p(world_files::kSrcVectors), "--tgt-emb",    p(world_files::kTgtVectors),
      "--train-dict", p(world_files::kTrain),    "--test-dict",  p(world_files::kTest),
      "--src-freq", p(world_files::kSrcFreq),    "--tgt-freq",   p(world_files::kTgtFreq),
      "--src-pos",  p(world_files::kSrcPos),     "--tgt-pos",    p(world_files::kTgtPos),
      "--align",    "--out-dir",                 out.string(),   "--seed", "11",
      "--threads",  threads,                     "--log-level",  "error"};
  for (const char* step : {"retrieve", "train", "eval"}) {
    std::vector<std::string> args{step};
    args.insert(args.end(), common.begin(), common.end());
    if (std::string(step) != "retrieve") {
      args.push_back("--candidates");
      args.push_back((out / "candidates.tsv").string());
    }
    if (invoke(args) != 0) return false;
  }
  return true;
}

std::vector<std::string> compare_trees(const fs::path& a, const fs::path& b) {
  std::vector<std::string> diffs;
  std::set<fs::path> names;
  for (const auto& root : {a, b}) {
    for (const auto& e : fs::recursive_directory_iterator(root)) {
      if (e.is_regular_file() && e.path().filename() != "run.log") names.insert(fs::relative(e.path(), root));
    }
  }
  for (const auto& rel : names) {
    if (!fs::exists(a / rel) || !fs::exists(b / rel) || testing::slurp(a / rel) != testing::slurp(b / rel)) {
      diffs.push_back(rel.string());
    }
  }
  return diffs;
}

Verdict determinism() {
  const auto t0 = Clock::now();
  testing::TempDir dir("acceptance");
  const bool ran = run_pipeline(dir / "a", "1") && run_pipeline(dir / "b", "1") && run_pipeline(dir / "c", "8");
  if (!ran) return {false, "pipeline failed"};
  const auto rerun = compare_trees(dir / "a", dir / "b");
  const auto threads = compare_trees(dir / "a", dir / "c");
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir / "a")) files += e.is_regular_file() ? 1 : 0;

  const auto model = load_model(dir / "a" / "out" / "model.json");
  const auto copy = dir / "copy.json";
  save_model(model, copy);
  const auto back = load_model(copy);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal;
  RowMatrix rows(1000, static_cast<Eigen::Index>(kFeatureCount));
  for (Eigen::Index i = 0; i < rows.size(); ++i) rows.data()[i] = normal(rng);
  const auto pa = predict(model, rows);
  const auto pb = predict(back, rows);
  std::size_t differing = 0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    differing += std::bit_cast<std::uint64_t>(pa[i]) != std::bit_cast<std::uint64_t>(pb[i]) ? 1 : 0;
  }
  std::string detail = fmt::format("{} files; rerun diffs {}, threads 1 vs 8 diffs {}, round-trip differing predictions {}/1000, {:.1f}s",
                                    files, rerun.size(), threads.size(), differing, seconds_since(t0));
  for (const auto& d : rerun) detail += "\n    rerun differs: " + d;
  for (const auto& d : threads) detail += "\n    threads differ: " + d;
  return {rerun.empty() && threads.empty() && differing == 0, detail};
}

// 10. Performance floor.

Verdict performance() {
  const auto src = testing::random_space(5000, 300, 71, "s");
  const auto tgt = testing::random_space(200000, 300, 72, "t");
  RetrievalOptions opts;
  opts.threads = 8;
  const auto t0 = Clock::now();
  const auto result = retrieve_topk(src, tgt, SimilarityParams{}, opts);
  const double t = seconds_since(t0);
  bool complete = result.candidates.size() == 5000;
  for (const auto& [s, list] : result.candidates.lists) complete = complete && list.size() == 50;
  return {complete && t < 30.0,
          fmt::format("5000 x 200000 x 300, top-50 CSLS, 8 threads on {} hardware threads: {:.1f}s", std::thread::hardware_concurrency(), t)};
}

}  // namespace

int main(int argc, char** argv) {
  log::set_level(log::Level::kError);
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"CSLS oracle equivalence", csls_oracle},
      {"hubness reduction", hubness},
      {"delta AP exactness", delta_ap_exact},
      {"ranker learnability", learnability},
      {"lexical features help", lexical_features},
      {"Procrustes recovery", procrustes},
      {"frequency-difference analysis", frequency_difference},
      {"Spearman oracle", spearman_oracle},
      {"determinism and persistence", determinism},
      {"performance floor", performance},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i) + 1;
    if (!selected.empty() && selected.count(number) == 0) continue;
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += v.pass ? 0 : 1;
    fmt::print("criterion {}: {} {}: {}\n", number, v.pass ? "PASS" : "FAIL", criteria[i].first, v.detail);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
