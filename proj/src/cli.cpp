#include "bli/cli.hpp"

#include "bli/eval.hpp"

#include <CLI11.hpp>
#include <fmt/chrono.h>
#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <ostream>
#include <set>

namespace bli::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

bool loads_embeddings(Command c) { return c != Command::kSynth; }

struct Resources {
  EmbeddingSpace src;
  EmbeddingSpace tgt;
  TranslationDictionary train;
  TranslationDictionary test;
  FrequencyTable freq_src;
  FrequencyTable freq_tgt;
  PosTable pos_src;
  PosTable pos_tgt;
  std::optional<ExternalScores> external;

  LexicalTables tables() const { return LexicalTables{freq_src, freq_tgt, pos_src, pos_tgt}; }
};

EmbeddingSpace load_space(const fs::path& path, std::optional<std::size_t> max_vocab) {
  auto loaded = load_embeddings(path, max_vocab);
  if (!loaded.duplicates.empty()) {
    log::warn(fmt::format("{}: {} duplicate tokens kept at their first row", path.string(), loaded.duplicates.size()));
  }
  auto normalized = normalize_rows(std::move(loaded.space));
  if (normalized.zero_rows > 0) {
    log::warn(fmt::format("{}: {} zero vectors left unnormalized", path.string(), normalized.zero_rows));
  }
  return std::move(normalized.space);
}

TranslationDictionary load_dict(const fs::path& path, const Resources& r) {
  auto loaded = load_dictionary(path, r.src.vocab, r.tgt.vocab);
  if (loaded.oov_src + loaded.oov_tgt > 0) {
    log::info(fmt::format("{}: skipped {} pairs with an unknown source and {} with an unknown target", path.string(),
                          loaded.oov_src, loaded.oov_tgt));
  }
  return std::move(loaded.dict);
}

FrequencyTable empty_frequency(std::size_t n) {
  FrequencyTable t;
  t.zipf.assign(n, 0.0);
  t.rank.assign(n, static_cast<std::uint32_t>(n));
  t.listed.assign(n, false);
  return t;
}

FrequencyTable load_freq(const fs::path& path, const Vocabulary& vocab) {
  if (path.empty()) return empty_frequency(vocab.size());
  return load_frequency_table(path, vocab).table;
}

PosTable load_pos(const fs::path& path, const Vocabulary& vocab) {
  if (path.empty()) return PosTable{std::vector<UPos>(vocab.size(), UPos::kUnk)};
  auto loaded = load_pos_table(path, vocab);
  if (loaded.unknown_tags > 0) log::warn(fmt::format("{}: {} unknown tags mapped to X", path.string(), loaded.unknown_tags));
  return std::move(loaded.table);
}

Resources load_resources(const RunConfig& config, bool lexical) {
  Resources r;
  r.src = load_space(config.src_emb, config.max_vocab);
  r.tgt = load_space(config.tgt_emb, config.max_vocab);
  if (!config.train_dict.empty()) r.train = load_dict(config.train_dict, r);
  if (!config.test_dict.empty()) r.test = load_dict(config.test_dict, r);
  if (config.align) {
    const Eigen::MatrixXd w = align_procrustes(r.src, r.tgt, r.train);
    r.src = apply_mapping(r.src, w);
  }
  if (lexical) {
    r.freq_src = load_freq(config.src_freq, r.src.vocab);
    r.freq_tgt = load_freq(config.tgt_freq, r.tgt.vocab);
    r.pos_src = load_pos(config.src_pos, r.src.vocab);
    r.pos_tgt = load_pos(config.tgt_pos, r.tgt.vocab);
  }
  if (!config.external.empty()) {
    auto loaded = load_external_scores(config.external, r.src.vocab, r.tgt.vocab);
    if (loaded.out_of_vocab > 0) log::info(fmt::format("external scores: {} out-of-vocabulary rows", loaded.out_of_vocab));
    r.external = std::move(loaded.scores);
  }
  return r;
}

RetrievalResult retrieve(const RunConfig& config, const Resources& r, std::vector<WordId> queries) {
  RetrievalOptions options;
  options.metric = config.metric;
  options.threads = config.threads;
  options.queries = std::move(queries);
  return retrieve_topk(r.src, r.tgt, config.sim, options);
}

// Candidates from the configured file, or retrieved in-process for `sources`.
CandidateSet candidates_for(const RunConfig& config, const Resources& r, const std::vector<WordId>& sources) {
  if (!config.candidates.empty()) return load_candidates(config.candidates, r.src.vocab, r.tgt.vocab);
  return retrieve(config, r, sources).candidates;
}

fs::path model_path(const RunConfig& config) {
  return config.model.empty() ? config.out_dir / "model.json" : config.model;
}

void write_json(const json& doc, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot open '{}' for writing", path.string()));
  out << doc.dump(2) << '\n';
  if (!out) throw DataError(fmt::format("failed writing '{}'", path.string()));
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::vector<std::vector<double>> csls_lists(std::span<const RankingGroup> groups) {
  std::vector<std::vector<double>> out;
  out.reserve(groups.size());
  for (const auto& g : groups) out.push_back(g.csls);
  return out;
}

std::vector<WordId> union_sources(const TranslationDictionary& a, const TranslationDictionary& b) {
  std::set<WordId> s;
  for (const auto& [src, _] : a.entries) s.insert(src);
  for (const auto& [src, _] : b.entries) s.insert(src);
  return {s.begin(), s.end()};
}

TranslationDictionary merged(const TranslationDictionary& a, const TranslationDictionary& b) {
  TranslationDictionary out = a;
  for (const auto& [src, targets] : b.entries) {
    for (WordId t : targets) out.add(src, t);
  }
  return out;
}

GroupOptions group_options(const RunConfig& config, const Resources& r, const TranslationDictionary* dict,
                           const FeatureMask& mask) {
  GroupOptions options;
  options.dict = dict;
  options.external = r.external ? &*r.external : nullptr;
  options.mask = mask;
  options.threads = config.threads;
  return options;
}

double tune_mix(const RunConfig& config, const Resources& r, const TranslationDictionary& dict,
                const CandidateSet& cands, std::ostream& out) {
  auto [fit_dict, held_dict] = split_dictionary(dict, 0.1, config.seed);
  if (held_dict.entries.empty() || fit_dict.entries.empty()) {
    throw DataError("training dictionary too small to hold out sources for --tune-mix");
  }
  const auto fit_sources = fit_dict.sources();
  const auto held_sources = held_dict.sources();
  const auto fit_groups =
      build_groups(fit_sources, cands, r.tables(), group_options(config, r, &fit_dict, config.mask));
  const auto held_groups =
      build_groups(held_sources, cands, r.tables(), group_options(config, r, &held_dict, config.mask));
  TrainOptions options{config.mask, config.threads};
  const auto model = train(fit_groups, config.gbdt, options).model;
  const auto ranker = predict_groups(model, held_groups);
  const auto retriever = csls_lists(held_groups);
  double best_mix = 0.1;
  double best_p1 = -1.0;
  for (int step = 1; step <= 9; ++step) {
    const double mix = step / 10.0;
    const double p1 = precision_at_1(held_groups, combine_with_retriever(ranker, retriever, mix)).p_at_1;
    out << fmt::format("mix {:.1f}: held-out P@1x100 {:.2f}\n", mix, 100.0 * p1);
    if (p1 > best_p1) {
      best_p1 = p1;
      best_mix = mix;
    }
  }
  return best_mix;
}

void check_path(std::vector<std::string>& problems, std::string_view field, const fs::path& path, bool required) {
  if (path.empty()) {
    if (required) problems.push_back(fmt::format("{}: required", field));
    return;
  }
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) problems.push_back(fmt::format("{}: '{}' is not a readable file", field, path.string()));
}

}  // namespace

std::string_view command_name(Command command) {
  switch (command) {
    case Command::kRetrieve: return "retrieve";
    case Command::kMine: return "mine";
    case Command::kTrain: return "train";
    case Command::kEval: return "eval";
    case Command::kAnalyze: return "analyze";
    case Command::kSynth: return "synth";
  }
  return "?";
}

std::vector<std::string> RunConfig::problems(Command command) const {
  std::vector<std::string> p;
  const bool embeddings = loads_embeddings(command);
  if (embeddings) {
    check_path(p, "src_emb", src_emb, true);
    check_path(p, "tgt_emb", tgt_emb, true);
    if (max_vocab && *max_vocab == 0) p.emplace_back("max_vocab: must be >= 1");
    if (sim.k_csls < 1) p.emplace_back("k_csls: must be >= 1");
    if (sim.top_k < 1) p.emplace_back("top_k: must be >= 1");
  }
  const bool needs_train = command == Command::kMine || command == Command::kTrain || (embeddings && align);
  const bool needs_test = command == Command::kEval;
  if (embeddings) {
    check_path(p, "train_dict", train_dict, needs_train);
    check_path(p, "test_dict", test_dict, needs_test);
    check_path(p, "external", external, false);
  }
  if (command == Command::kRetrieve && dict_queries && train_dict.empty() && test_dict.empty()) {
    p.emplace_back("dict_queries: needs train_dict or test_dict");
  }
  if (command == Command::kMine || command == Command::kTrain || command == Command::kEval) {
    check_path(p, "candidates", candidates, false);
  }
  if (command == Command::kTrain || command == Command::kAnalyze) {
    const bool need_freq = command == Command::kAnalyze || mask.frequency;
    const bool need_pos = command == Command::kAnalyze || mask.pos;
    check_path(p, "src_freq", src_freq, need_freq);
    check_path(p, "tgt_freq", tgt_freq, need_freq);
    check_path(p, "src_pos", src_pos, need_pos);
    check_path(p, "tgt_pos", tgt_pos, need_pos);
  }
  if (command == Command::kEval) {
    check_path(p, "src_freq", src_freq, false);
    check_path(p, "tgt_freq", tgt_freq, false);
    check_path(p, "src_pos", src_pos, false);
    check_path(p, "tgt_pos", tgt_pos, false);
    check_path(p, "model", model.empty() ? out_dir / "model.json" : model, true);
  }
  if (command == Command::kAnalyze) {
    if (train_dict.empty() && test_dict.empty()) p.emplace_back("train_dict/test_dict: analyze needs a dictionary");
    if (min_n < 2) p.emplace_back("min_n: must be >= 2");
  }
  if (command == Command::kMine && n_neg < 1) p.emplace_back("n_neg: must be >= 1");
  if (command == Command::kTrain) {
    try {
      gbdt.validate();
    } catch (const ConfigError& e) {
      p.emplace_back(e.what());
    }
    if (tune_mix && mix) p.emplace_back("tune_mix: cannot be combined with an explicit mix");
  }
  if (mix && !(*mix >= 0.0 && *mix <= 1.0)) p.push_back(fmt::format("mix: must be in [0, 1], got {}", *mix));
  if (command == Command::kSynth) {
    try {
      synth.validate();
    } catch (const ConfigError& e) {
      p.emplace_back(e.what());
    }
    if (!(test_fraction >= 0.0 && test_fraction <= 1.0)) p.emplace_back("test_fraction: must be in [0, 1]");
  }
  std::error_code ec;
  if (fs::exists(out_dir, ec) && !fs::is_directory(out_dir, ec)) {
    p.push_back(fmt::format("out_dir: '{}' exists and is not a directory", out_dir.string()));
  }
  return p;
}

void RunConfig::validate(Command command) const {
  const auto found = problems(command);
  if (found.empty()) return;
  std::string message = fmt::format("invalid configuration for '{}':", command_name(command));
  for (const auto& line : found) message += "\n  " + line;
  throw ConfigError(message);
}

void cmd_retrieve(const RunConfig& config, std::ostream& out) {
  config.validate(Command::kRetrieve);
  const Resources r = load_resources(config, false);
  config.sim.validate(r.src.size(), r.tgt.size());
  std::vector<WordId> queries;
  if (config.dict_queries) queries = union_sources(r.train, r.test);
  const RetrievalResult result = retrieve(config, r, queries);

  constexpr std::size_t kHubK = 10;
  double skew = 0.0;
  if (queries.empty() && config.sim.top_k >= kHubK) {
    CandidateSet top;
    for (const auto& [s, list] : result.candidates.lists) {
      top.lists[s].assign(list.begin(), list.begin() + static_cast<std::ptrdiff_t>(std::min(kHubK, list.size())));
    }
    skew = skewness(k_occurrence(top, r.tgt.size()));
  } else {
    skew = hubness_skew(r.src, r.tgt, std::min(kHubK, r.tgt.size()), config.metric, config.sim.k_csls, config.threads);
  }

  const TranslationDictionary& gold = r.test.entries.empty() ? r.train : r.test;
  std::size_t evaluated = 0;
  std::size_t missed = 0;
  for (const auto& [s, targets] : gold.entries) {
    const auto* list = result.candidates.find(s);
    if (list == nullptr) continue;
    ++evaluated;
    const bool hit = std::any_of(list->begin(), list->end(), [&](const Candidate& c) { return gold.is_gold(s, c.target); });
    if (!hit) ++missed;
  }

  fs::create_directories(config.out_dir);
  const fs::path cand_path = config.candidates.empty() ? config.out_dir / "candidates.tsv" : config.candidates;
  save_candidates(result.candidates, r.src.vocab, r.tgt.vocab, cand_path);
  json report;
  report["metric"] = metric_name(config.metric);
  report["k_csls"] = config.sim.k_csls;
  report["top_k"] = config.sim.top_k;
  report["aligned"] = config.align;
  report["n_queries"] = result.candidates.size();
  report["hubness_skew_k10"] = skew;
  report["gold_sources"] = evaluated;
  report["gold_missed"] = missed;
  report["gold_missed_rate"] = evaluated > 0 ? json(static_cast<double>(missed) / static_cast<double>(evaluated)) : json(nullptr);
  write_json(report, config.out_dir / "retrieval.json");
  out << fmt::format("retrieved {} sources x {} candidates ({})\n", result.candidates.size(), config.sim.top_k,
                     metric_name(config.metric));
  out << fmt::format("hubness skew (N_10): {:.4f}\n", skew);
  if (evaluated > 0) out << fmt::format("gold missed: {} of {}\n", missed, evaluated);
}

void cmd_mine(const RunConfig& config, std::ostream& out) {
  config.validate(Command::kMine);
  const Resources r = load_resources(config, false);
  if (config.candidates.empty()) config.sim.validate(r.src.size(), r.tgt.size());
  const auto cands = candidates_for(config, r, r.train.sources());
  const auto rows = mine_hard_negatives(r.train, cands, config.n_neg);
  fs::create_directories(config.out_dir);
  save_labeled_pairs(rows, r.src.vocab, r.tgt.vocab, config.out_dir / "hard_negatives.tsv");
  const auto positives = static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const LabeledPair& p) { return p.label == 1; }));
  out << fmt::format("wrote {} rows ({} positives)\n", rows.size(), positives);
}

void cmd_train(const RunConfig& config, std::ostream& out) {
  config.validate(Command::kTrain);
  const Resources r = load_resources(config, true);
  if (config.candidates.empty()) config.sim.validate(r.src.size(), r.tgt.size());

  TranslationDictionary dict = r.train;
  json report;
  if (config.mode == Mode::kSemi) {
    const auto mined = mutual_nn_pairs(r.src, r.tgt, config.sim, config.threads);
    const auto augmented = augment_dictionary(r.train, mined, config.n_aug);
    if (augmented.shortfall > 0) {
      log::warn(fmt::format("augmentation added {} of {} requested pairs", augmented.added, config.n_aug));
    }
    dict = augmented.dict;
    report["augmented_pairs"] = augmented.added;
    report["augmentation_shortfall"] = augmented.shortfall;
    out << fmt::format("augmented the seed dictionary with {} mutual nearest neighbour pairs\n", augmented.added);
  }
  const auto sources = dict.sources();
  const auto cands = candidates_for(config, r, sources);

  std::optional<double> mix = config.mix;
  if (config.tune_mix) mix = tune_mix(config, r, dict, cands, out);

  const auto groups = build_groups(sources, cands, r.tables(), group_options(config, r, &dict, config.mask));
  const auto trainable =
      static_cast<std::size_t>(std::count_if(groups.begin(), groups.end(), [](const RankingGroup& g) {
        return g.has_positive() && g.has_negative();
      }));
  const auto missed =
      static_cast<std::size_t>(std::count_if(groups.begin(), groups.end(), [](const RankingGroup& g) { return g.gold_missed; }));
  if (trainable == 0) {
    throw DataError(fmt::format("no trainable group among {} sources: {} have no gold translation among their {} "
                                "candidates; increase top_k or check the alignment",
                                groups.size(), missed, config.sim.top_k));
  }
  TrainOptions options{config.mask, config.threads};
  GbdtParams params = config.gbdt;
  params.seed = config.seed;
  TrainResult result = train(groups, params, options);
  result.model.mix = mix;

  fs::create_directories(config.out_dir);
  save_model(result.model, model_path(config));
  save_trace(result.map_trace, config.out_dir / "trace.tsv");
  std::size_t rows = 0;
  for (const auto& g : groups) rows += g.size();
  report["groups"] = groups.size();
  report["trainable_groups"] = trainable;
  report["gold_missed"] = missed;
  report["rows"] = rows;
  report["initial_map"] = result.initial_map;
  report["final_map"] = result.map_trace.back();
  report["mix"] = optional_number(mix);
  report["disabled_groups"] = config.mask.disabled_groups();
  write_json(report, config.out_dir / "train_report.json");
  out << fmt::format("trained {} trees on {} groups ({} rows)\n", result.model.trees.size(), trainable, rows);
  out << fmt::format("train MAP: {:.4f} -> {:.4f}\n", result.initial_map, result.map_trace.back());
}

void cmd_eval(const RunConfig& config, std::ostream& out) {
  config.validate(Command::kEval);
  const GbdtModel model = load_model(model_path(config));
  {
    std::vector<std::string> missing;
    if (model.mask.frequency && (config.src_freq.empty() || config.tgt_freq.empty())) {
      missing.emplace_back("src_freq/tgt_freq: required by the model's frequency features");
    }
    if (model.mask.pos && (config.src_pos.empty() || config.tgt_pos.empty())) {
      missing.emplace_back("src_pos/tgt_pos: required by the model's POS features");
    }
    if (!missing.empty()) {
      std::string message = "invalid configuration for 'eval':";
      for (const auto& m : missing) message += "\n  " + m;
      throw ConfigError(message);
    }
  }
  const Resources r = load_resources(config, true);
  if (config.candidates.empty()) config.sim.validate(r.src.size(), r.tgt.size());
  const auto sources = r.test.sources();
  if (sources.empty()) throw DataError("test dictionary has no in-vocabulary pairs");
  const auto cands = candidates_for(config, r, sources);
  const auto groups = build_groups(sources, cands, r.tables(), group_options(config, r, &r.test, model.mask));

  const auto ranker = predict_groups(model, groups);
  const auto retriever = csls_lists(groups);
  const std::optional<double> mix = config.mix ? config.mix : model.mix;
  const auto primary = mix ? combine_with_retriever(ranker, retriever, *mix) : ranker;

  const auto p1 = precision_at_1(groups, primary);
  const auto p1_ranker = precision_at_1(groups, ranker);
  const auto p1_retriever = precision_at_1(groups, retriever);
  const auto per_pos = per_pos_accuracy(groups, primary, r.pos_src);
  const auto freq = freq_diff_report(groups, primary, r.test, r.freq_src, r.freq_tgt);
  const auto freq_retriever = freq_diff_report(groups, retriever, r.test, r.freq_src, r.freq_tgt);
  const auto freq_errors = freq_diff_report(groups, primary, r.test, r.freq_src, r.freq_tgt, true);

  fs::create_directories(config.out_dir);
  json report;
  report["n_eval"] = p1.n_eval;
  report["correct"] = p1.correct;
  report["gold_missed"] = p1.gold_missed;
  report["p_at_1"] = p1.p_at_1;
  report["p_at_1_x100"] = fmt::format("{:.2f}", 100.0 * p1.p_at_1);
  report["p_at_1_ranker"] = p1_ranker.p_at_1;
  report["p_at_1_retriever"] = p1_retriever.p_at_1;
  report["mix"] = optional_number(mix);
  report["disabled_groups"] = model.mask.disabled_groups();
  json pos = json::object();
  for (const auto& [tag, b] : per_pos) pos[std::string(pos_name(tag))] = {{"n", b.n}, {"p_at_1", b.accuracy}};
  report["per_pos"] = pos;
  auto gap_json = [](const FrequencyGap& g) {
    return json{{"gold", g.gold}, {"predicted", g.predicted}, {"n_gold", g.n_gold}, {"n_predicted", g.n_predicted}};
  };
  report["freq_diff"] = {{"zipf", gap_json(freq.zipf)},
                         {"log_rank", gap_json(freq.log_rank)},
                         {"retriever_zipf", gap_json(freq_retriever.zipf)},
                         {"retriever_log_rank", gap_json(freq_retriever.log_rank)},
                         {"errors_zipf", gap_json(freq_errors.zipf)},
                         {"errors_log_rank", gap_json(freq_errors.log_rank)}};
  write_json(report, config.out_dir / "report.json");
  save_per_pos(per_pos, config.out_dir / "per_pos.tsv");
  save_explanations(explain_predictions(groups, primary, r.src.vocab, r.tgt.vocab, r.tables()),
                    config.out_dir / "explanations.tsv");

  out << fmt::format("P@1x100: {:.2f}\n", 100.0 * p1.p_at_1);
  out << fmt::format("retriever P@1x100: {:.2f}\n", 100.0 * p1_retriever.p_at_1);
  out << fmt::format("evaluated {} sources, gold not retrieved for {}\n", p1.n_eval, p1.gold_missed);
}

void cmd_analyze(const RunConfig& config, std::ostream& out) {
  config.validate(Command::kAnalyze);
  const Resources r = load_resources(config, true);
  const TranslationDictionary dict = merged(r.train, r.test);
  const auto grid = pos_freq_correlation(dict, r.freq_src, r.freq_tgt, r.pos_src, config.min_n);

  std::vector<WordId> queries;
  for (const auto& word : config.pca_words) {
    const auto id = r.src.vocab.lookup(nfc(word));
    if (!id) throw DataError(fmt::format("PCA word '{}' is not in the source vocabulary", word));
    if (!dict.contains(*id)) throw DataError(fmt::format("PCA word '{}' has no gold translation", word));
    queries.push_back(*id);
  }
  CandidateSet cands;
  if (!queries.empty()) {
    config.sim.validate(r.src.size(), r.tgt.size());
    cands = retrieve(config, r, queries).candidates;
  }

  fs::create_directories(config.out_dir);
  const std::vector<std::pair<std::string, std::map<UPos, CorrelationCell>>> rows{{config.pair_label, grid}};
  save_correlation_grid(rows, config.out_dir / "pos_freq_spearman.tsv");
  std::size_t defined = 0;
  for (const auto& [tag, cell] : grid) defined += cell.rho ? 1 : 0;
  out << fmt::format("correlation grid: {} of {} tags with at least {} pairs\n", defined, grid.size(), config.min_n);

  if (!queries.empty()) {
    const fs::path path = config.out_dir / "pca.tsv";
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw DataError(fmt::format("cannot open '{}' for writing", path.string()));
    file << "query\tword\trole\tx\ty\n";
    for (WordId q : queries) {
      const WordId gold = dict.targets(q)->front();
      const auto& list = *cands.find(q);
      Eigen::MatrixXd points(static_cast<Eigen::Index>(2 + list.size()), r.src.dim());
      points.row(0) = r.src.matrix.row(q);
      points.row(1) = r.tgt.matrix.row(gold);
      for (std::size_t i = 0; i < list.size(); ++i) {
        points.row(static_cast<Eigen::Index>(2 + i)) = r.tgt.matrix.row(list[i].target);
      }
      const Eigen::MatrixXd xy = pca_project(points);
      const std::string& query = r.src.vocab.word(q);
      auto emit = [&](Eigen::Index row, const std::string& word, std::string_view role) {
        file << fmt::format("{}\t{}\t{}\t{:.6f}\t{:.6f}\n", query, word, role, xy(row, 0), xy(row, 1));
      };
      emit(0, query, "source");
      emit(1, r.tgt.vocab.word(gold), "gold");
      for (std::size_t i = 0; i < list.size(); ++i) {
        emit(static_cast<Eigen::Index>(2 + i), r.tgt.vocab.word(list[i].target), "candidate");
      }
    }
    if (!file) throw DataError(fmt::format("failed writing '{}'", path.string()));
    out << fmt::format("PCA coordinates for {} words\n", queries.size());
  }
}

void cmd_synth(const RunConfig& config, std::ostream& out) {
  config.validate(Command::kSynth);
  SynthConfig cfg = config.synth;
  cfg.seed = config.seed;
  const SynthWorld world = gen_bilingual_world(cfg);
  write_world(world, config.out_dir, config.test_fraction, config.seed);
  out << fmt::format("wrote a {}-word world (d={}, noise {}, {} hubs) to {}\n", cfg.vocab_n, cfg.dim, cfg.noise_sigma,
                     cfg.hub_count, config.out_dir.string());
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) != nullptr) return 2;
  if (dynamic_cast<const CLI::Error*>(&e) != nullptr) return 2;
  if (dynamic_cast<const DataError*>(&e) != nullptr) return 3;
  if (dynamic_cast<const fs::filesystem_error*>(&e) != nullptr) return 3;
  return 4;
}

namespace {

// Accepts config keys spelled with underscores as well as dashes.
class FlatConfig : public CLI::ConfigBase {
 public:
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    auto items = CLI::ConfigBase::from_config(input);
    for (auto& item : items) std::replace(item.name.begin(), item.name.end(), '_', '-');
    return items;
  }
};

std::string timestamp() {
  return fmt::format("{:%Y-%m-%dT%H:%M:%S}", std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now()));
}

void write_run_log(const fs::path& dir, std::span<const std::string> args, const std::string& started, int code) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return;
  std::ofstream log_file(dir / "run.log", std::ios::binary | std::ios::app);
  if (!log_file) return;
  std::string line;
  for (const auto& a : args) line += (line.empty() ? "" : " ") + a;
  log_file << fmt::format("start {}\nend {}\nargs {}\nexit {}\n", started, timestamp(), line, code);
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  RunConfig config;
  CLI::App app{"Bilingual lexicon induction: retrieval, lexical-feature reranking and analysis", "bli"};
  app.set_config("--config", "", "Flat key = value configuration file; command-line flags take precedence");
  app.config_formatter(std::make_shared<FlatConfig>());
  app.require_subcommand(1, 1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::string metric = "csls";
  std::string mode = "supervised";
  std::size_t max_vocab = 0;
  double mix = -1.0;
  std::string pca_words;
  std::string log_level = "info";
  bool no_pos = false;
  bool no_freq = false;
  bool no_external = false;

  app.add_option("--src-emb", config.src_emb, "Source word vectors (text format)");
  app.add_option("--tgt-emb", config.tgt_emb, "Target word vectors (text format)");
  app.add_option("--max-vocab", max_vocab, "Keep only the first N vectors of each file (0 = all)");
  app.add_option("--train-dict", config.train_dict, "Training (seed) dictionary TSV");
  app.add_option("--test-dict", config.test_dict, "Test dictionary TSV");
  app.add_option("--src-freq", config.src_freq, "Source word counts TSV");
  app.add_option("--tgt-freq", config.tgt_freq, "Target word counts TSV");
  app.add_option("--src-pos", config.src_pos, "Source POS table TSV");
  app.add_option("--tgt-pos", config.tgt_pos, "Target POS table TSV");
  app.add_option("--external", config.external, "External reranker logits TSV (src, cand, logit)");
  app.add_option("--candidates", config.candidates, "Candidate TSV: written by retrieve, read by other commands");
  app.add_option("--model", config.model, "Model file (default <out-dir>/model.json)");
  app.add_option("--out-dir", config.out_dir, "Output directory")->capture_default_str();
  app.add_option("--metric", metric, "Retrieval metric: csls or cosine")->capture_default_str();
  app.add_option("--k-csls", config.sim.k_csls, "CSLS neighbourhood size")->capture_default_str();
  app.add_option("--top-k", config.sim.top_k, "Candidates per source")->capture_default_str();
  app.add_flag("--align", config.align, "Procrustes-align the source space on the training dictionary");
  app.add_flag("--dict-queries", config.dict_queries, "retrieve: only dictionary sources instead of the whole vocabulary");
  app.add_option("--mode", mode, "train: supervised or semi")->capture_default_str();
  app.add_option("--n-aug", config.n_aug, "semi mode: mined pairs added to the seed dictionary")->capture_default_str();
  app.add_option("--n-neg", config.n_neg, "mine: hard negatives per positive")->capture_default_str();
  app.add_option("--n-trees", config.gbdt.n_trees, "Boosting rounds")->capture_default_str();
  app.add_option("--max-depth", config.gbdt.max_depth, "Tree depth")->capture_default_str();
  app.add_option("--learning-rate", config.gbdt.learning_rate, "Shrinkage")->capture_default_str();
  app.add_option("--min-child-weight", config.gbdt.min_child_weight, "Minimum hessian per child")->capture_default_str();
  app.add_option("--l2-leaf-reg", config.gbdt.l2_leaf_reg, "L2 penalty on leaf values")->capture_default_str();
  app.add_option("--sigma", config.gbdt.sigma, "Logistic steepness of the pairwise loss")->capture_default_str();
  app.add_flag("--no-pos", no_pos, "Zero the POS feature columns");
  app.add_flag("--no-freq", no_freq, "Zero the frequency feature columns");
  app.add_flag("--no-external", no_external, "Zero the external reranker columns");
  app.add_option("--mix", mix, "Weight of the ranker in the linear combination with CSLS, in [0, 1]");
  app.add_flag("--tune-mix", config.tune_mix, "train: pick the combination weight on 10% held-out training sources");
  app.add_option("--pca-words", pca_words, "analyze: comma-separated source words to export PCA coordinates for");
  app.add_option("--pair-label", config.pair_label, "analyze: row label of the correlation grid")->capture_default_str();
  app.add_option("--min-n", config.min_n, "analyze: minimum pairs per POS cell")->capture_default_str();
  app.add_option("--vocab-n", config.synth.vocab_n, "synth: words per language")->capture_default_str();
  app.add_option("--dim", config.synth.dim, "synth: vector dimension")->capture_default_str();
  app.add_option("--noise-sigma", config.synth.noise_sigma, "synth: target noise")->capture_default_str();
  app.add_option("--hub-count", config.synth.hub_count, "synth: injected hubs")->capture_default_str();
  app.add_option("--hub-subset", config.synth.hub_subset, "synth: vectors averaged per hub")->capture_default_str();
  app.add_option("--anisotropy", config.synth.anisotropy, "synth: shared direction weight")->capture_default_str();
  app.add_option("--zipf-exponent", config.synth.zipf_exponent, "synth: Zipf exponent")->capture_default_str();
  app.add_option("--rank-noise", config.synth.rank_noise, "synth: log-rank noise of gold targets")->capture_default_str();
  app.add_option("--pos-match-prob", config.synth.pos_match_prob, "synth: P(gold shares POS)")->capture_default_str();
  app.add_option("--test-fraction", config.test_fraction, "synth: share of sources in the test dictionary")
      ->capture_default_str();
  app.add_option("--threads", config.threads, "Worker threads (0 = all cores)")->envname("BLI_THREADS");
  app.add_option("--seed", config.seed, "Seed for every random choice")->capture_default_str();
  app.add_option("--log-level", log_level, "debug, info, warning, error or silent")->capture_default_str();

  struct Sub {
    Command command;
    const char* help;
  };
  const Sub subs[] = {
      {Command::kRetrieve, "Exact top-k retrieval; writes candidates.tsv and retrieval.json"},
      {Command::kMine, "Hard negatives for the training dictionary; writes hard_negatives.tsv"},
      {Command::kTrain, "Train the lexical-feature ranker; writes model.json, trace.tsv, train_report.json"},
      {Command::kEval, "Rank test candidates; writes report.json, per_pos.tsv, explanations.tsv"},
      {Command::kAnalyze, "Per-POS frequency rank correlation grid and PCA coordinates"},
      {Command::kSynth, "Generate a synthetic bilingual world"},
  };
  std::vector<std::pair<CLI::App*, Command>> commands;
  for (const auto& s : subs) {
    commands.emplace_back(app.add_subcommand(std::string(command_name(s.command)), s.help)->fallthrough(), s.command);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  const std::string started = timestamp();
  int code = 0;
  Command command = Command::kSynth;
  for (const auto& [sub, c] : commands) {
    if (sub->parsed()) command = c;
  }
  try {
    std::vector<std::string> problems;
    if (auto m = parse_metric(metric)) {
      config.metric = *m;
    } else {
      problems.push_back(fmt::format("metric: unknown metric '{}'", metric));
    }
    if (mode == "supervised") {
      config.mode = Mode::kSupervised;
    } else if (mode == "semi") {
      config.mode = Mode::kSemi;
    } else {
      problems.push_back(fmt::format("mode: expected supervised or semi, got '{}'", mode));
    }
    static const std::map<std::string, log::Level> levels{{"debug", log::Level::kDebug},
                                                          {"info", log::Level::kInfo},
                                                          {"warning", log::Level::kWarning},
                                                          {"error", log::Level::kError},
                                                          {"silent", log::Level::kSilent}};
    if (auto it = levels.find(log_level); it != levels.end()) {
      log::set_level(it->second);
    } else {
      problems.push_back(fmt::format("log_level: unknown level '{}'", log_level));
    }
    if (max_vocab > 0) config.max_vocab = max_vocab;
    if (app.count("--mix") > 0) config.mix = mix;
    config.mask = FeatureMask{!no_external, !no_freq, !no_pos};
    std::string word;
    for (char c : pca_words + ",") {
      if (c == ',') {
        if (!word.empty()) config.pca_words.push_back(word);
        word.clear();
      } else {
        word += c;
      }
    }
    if (!problems.empty()) {
      for (const auto& p : config.problems(command)) problems.push_back(p);
      std::string message = fmt::format("invalid configuration for '{}':", command_name(command));
      for (const auto& line : problems) message += "\n  " + line;
      throw ConfigError(message);
    }
    switch (command) {
      case Command::kRetrieve: cmd_retrieve(config, out); break;
      case Command::kMine: cmd_mine(config, out); break;
      case Command::kTrain: cmd_train(config, out); break;
      case Command::kEval: cmd_eval(config, out); break;
      case Command::kAnalyze: cmd_analyze(config, out); break;
      case Command::kSynth: cmd_synth(config, out); break;
    }
  } catch (const std::exception& e) {
    code = exit_code_for(e);
    err << "error: " << e.what() << '\n';
  }
  write_run_log(config.out_dir, args, started, code);
  return code;
}

}  // namespace bli::cli
