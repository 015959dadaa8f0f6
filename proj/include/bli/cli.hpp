#pragma once

// Batch driver: align, retrieve, augment, featurize, train, rank, evaluate
// and analyze, one subcommand per stage.

#include "bli/features.hpp"
#include "bli/ltr.hpp"
#include "bli/retrieval.hpp"
#include "bli/synth.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bli::cli {

enum class Mode { kSupervised, kSemi };

enum class Command { kRetrieve, kMine, kTrain, kEval, kAnalyze, kSynth };

std::string_view command_name(Command command);

struct RunConfig {
  std::filesystem::path src_emb;
  std::filesystem::path tgt_emb;
  std::optional<std::size_t> max_vocab;
  std::filesystem::path train_dict;
  std::filesystem::path test_dict;
  std::filesystem::path src_freq;
  std::filesystem::path tgt_freq;
  std::filesystem::path src_pos;
  std::filesystem::path tgt_pos;
  std::filesystem::path external;
  std::filesystem::path candidates;  // input of mine/train/eval; retrieve writes here when set
  std::filesystem::path model;       // train writes, eval reads; defaults to <out_dir>/model.json
  std::filesystem::path out_dir = ".";

  SimilarityParams sim;
  Metric metric = Metric::kCsls;
  bool align = false;          // Procrustes on the training dictionary before retrieval
  bool dict_queries = false;   // retrieve only for dictionary sources

  GbdtParams gbdt;
  FeatureMask mask;
  std::optional<double> mix;
  bool tune_mix = false;
  Mode mode = Mode::kSupervised;
  std::size_t n_aug = 4000;
  std::size_t n_neg = 20;

  std::vector<std::string> pca_words;
  std::string pair_label = "src-tgt";
  std::size_t min_n = 10;

  SynthConfig synth;
  double test_fraction = 0.2;

  unsigned threads = 0;
  std::uint64_t seed = 0;

  // Every problem for `command`, one message per offending field. Touches
  // nothing on disk except existence checks.
  std::vector<std::string> problems(Command command) const;
  // Throws ConfigError listing all problems at once.
  void validate(Command command) const;
};

void cmd_retrieve(const RunConfig& config, std::ostream& out);
void cmd_mine(const RunConfig& config, std::ostream& out);
void cmd_train(const RunConfig& config, std::ostream& out);
void cmd_eval(const RunConfig& config, std::ostream& out);
void cmd_analyze(const RunConfig& config, std::ostream& out);
void cmd_synth(const RunConfig& config, std::ostream& out);

// Parses arguments (without the program name), runs the subcommand and
// returns the process exit code: 0 success, 2 configuration error, 3 data
// error, 4 internal invariant violation.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

// Exit code for an exception escaping a command.
int exit_code_for(const std::exception& e);

}  // namespace bli::cli
