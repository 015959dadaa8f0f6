#include "bli/cli.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <json.hpp>

#include <sstream>

namespace bli::cli {
namespace {

namespace fs = std::filesystem;
using testing::slurp;
using testing::TempDir;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> resources(const fs::path& world, const fs::path& out) {
  auto p = [&](const char* f) { return (world / f).string(); };
  return {"--src-emb",  p(world_files::kSrcVectors), "--tgt-emb",   p(world_files::kTgtVectors),
          "--train-dict", p(world_files::kTrain),    "--test-dict", p(world_files::kTest),
          "--src-freq", p(world_files::kSrcFreq),    "--tgt-freq",  p(world_files::kTgtFreq),
          "--src-pos",  p(world_files::kSrcPos),     "--tgt-pos",   p(world_files::kTgtPos),
          "--align",    "--out-dir",                 out.string(),  "--log-level", "error"};
}

std::vector<std::string> cat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

class CliPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("cli");
    const auto r = invoke({"synth", "--out-dir", (dir_->path() / "world").string(), "--vocab-n", "400", "--dim", "16",
                           "--noise-sigma", "0.15", "--test-fraction", "0.5", "--seed", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  static void TearDownTestSuite() { delete dir_; }

  static fs::path world() { return dir_->path() / "world"; }
  static fs::path out(const std::string& name) { return dir_->path() / name; }

  static Outcome pipeline(const fs::path& dest, const std::vector<std::string>& extra) {
    for (const char* step : {"retrieve", "train", "eval"}) {
      auto args = cat({step}, resources(world(), dest));
      args = cat(args, extra);
      if (std::string(step) != "retrieve") args = cat(args, {"--candidates", (dest / "candidates.tsv").string()});
      if (std::string(step) == "train") args = cat(args, {"--n-trees", "20"});
      auto r = invoke(args);
      if (r.code != 0) return r;
    }
    return {0, "", ""};
  }

  static TempDir* dir_;
};

TempDir* CliPipeline::dir_ = nullptr;

TEST_F(CliPipeline, EndToEndWritesReportsAndLog) {
  const auto dest = out("e2e");
  const auto r = pipeline(dest, {});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"candidates.tsv", "retrieval.json", "model.json", "trace.tsv", "train_report.json",
                        "report.json", "per_pos.tsv", "explanations.tsv", "run.log"}) {
    EXPECT_TRUE(fs::exists(dest / f)) << f;
  }
  const auto report = nlohmann::json::parse(slurp(dest / "report.json"));
  EXPECT_EQ(report["n_eval"], 200);
  EXPECT_GT(report["p_at_1"].get<double>(), 0.5);
  const auto log = slurp(dest / "run.log");
  EXPECT_NE(log.find("args eval"), std::string::npos);
  EXPECT_NE(log.find("exit 0"), std::string::npos);

  const auto eval = invoke(cat({"eval"}, resources(world(), out("e2e-eval"))));
  EXPECT_EQ(eval.code, 2) << "model defaults to <out-dir>/model.json, absent here";
  const auto again = invoke(cat(cat({"eval"}, resources(world(), dest)),
                                {"--candidates", (dest / "candidates.tsv").string()}));
  ASSERT_EQ(again.code, 0) << again.err;
  EXPECT_NE(again.out.find("P@1x100: "), std::string::npos);

  const auto analyze = invoke(cat(cat({"analyze"}, resources(world(), dest)), {"--pca-words", "s000,s001"}));
  ASSERT_EQ(analyze.code, 0) << analyze.err;
  const auto grid = slurp(dest / "pos_freq_spearman.tsv");
  EXPECT_EQ(grid.substr(0, 9), "pair\tADJ\t");
  EXPECT_NE(grid.find("\nsrc-tgt\t"), std::string::npos);
  const auto pca = slurp(dest / "pca.tsv");
  EXPECT_EQ(std::count(pca.begin(), pca.end(), '\n'), 1 + 2 * 52);
}

TEST_F(CliPipeline, RerunsAndThreadCountsAreByteIdentical) {
  const auto a = out("det-a");
  const auto b = out("det-b");
  ASSERT_EQ(pipeline(a, {"--threads", "1"}).code, 0);
  ASSERT_EQ(pipeline(b, {"--threads", "5"}).code, 0);
  for (const auto& entry : fs::directory_iterator(a)) {
    const auto name = entry.path().filename().string();
    if (name == "run.log") continue;
    EXPECT_EQ(slurp(entry.path()), slurp(b / name)) << name;
  }
}

TEST_F(CliPipeline, SemiModeWithoutAugmentationEqualsSupervised) {
  const auto sup = out("sup");
  const auto semi = out("semi");
  const auto base = cat({"train"}, resources(world(), sup));
  ASSERT_EQ(invoke(cat(base, {"--n-trees", "5"})).code, 0);
  const auto r = invoke(cat(cat({"train"}, resources(world(), semi)), {"--n-trees", "5", "--mode", "semi", "--n-aug", "0"}));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(sup / "model.json"), slurp(semi / "model.json"));
  const auto aug = invoke(cat(cat({"train"}, resources(world(), out("semi2"))), {"--n-trees", "5", "--mode", "semi", "--n-aug", "50"}));
  ASSERT_EQ(aug.code, 0) << aug.err;
  const auto report = nlohmann::json::parse(slurp(out("semi2") / "train_report.json"));
  EXPECT_EQ(report["augmented_pairs"], 50);
}

TEST_F(CliPipeline, AblationFlagsAreRecordedInTheModel) {
  const auto dest = out("ablate");
  const auto r = invoke(cat(cat({"train"}, resources(world(), dest)), {"--n-trees", "3", "--no-pos", "--no-freq"}));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto model = nlohmann::json::parse(slurp(dest / "model.json"));
  EXPECT_EQ(model["schema"]["disabled_groups"], nlohmann::json({"frequency", "pos"}));
  auto eval = resources(world(), dest);
  for (const char* drop : {"--src-pos", "--tgt-pos", "--src-freq", "--tgt-freq"}) {
    auto it = std::find(eval.begin(), eval.end(), drop);
    eval.erase(it, it + 2);
  }
  const auto e = invoke(cat({"eval"}, eval));
  EXPECT_EQ(e.code, 0) << e.err;
}

TEST_F(CliPipeline, ConfigFileValuesYieldToFlags) {
  const auto dest = out("cfg");
  std::ostringstream text;
  text << "src_emb = " << (world() / world_files::kSrcVectors).string() << "\n"
       << "tgt-emb = " << (world() / world_files::kTgtVectors).string() << "\n"
       << "top_k = 7\nout-dir = " << dest.string() << "\nlog-level = error\n";
  const auto cfg = dir_->write("run.ini", text.str());
  ASSERT_EQ(invoke({"retrieve", "--config", cfg.string()}).code, 0);
  auto lines = slurp(dest / "candidates.tsv");
  EXPECT_EQ(std::count(lines.begin(), lines.end(), '\n'), 400 * 7);
  ASSERT_EQ(invoke({"retrieve", "--config", cfg.string(), "--top-k", "3"}).code, 0);
  lines = slurp(dest / "candidates.tsv");
  EXPECT_EQ(std::count(lines.begin(), lines.end(), '\n'), 400 * 3);
}

TEST_F(CliPipeline, DataErrorsExitWithThree) {
  const auto bad = dir_->write("bad.vec", "2 3\na 1 2 3\n");
  const auto r = invoke({"retrieve", "--src-emb", bad.string(), "--tgt-emb", (world() / "tgt.vec").string(),
                         "--out-dir", out("bad").string(), "--log-level", "silent"});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("header declares 2 rows"), std::string::npos) << r.err;
}

TEST(CliValidation, AllProblemsReportedAtOnceBeforeAnyWrite) {
  TempDir dir("cli-bad");
  const auto dest = dir / "never";
  const auto r = invoke({"train", "--out-dir", dest.string(), "--learning-rate", "0", "--mix", "3", "--metric", "l2"});
  EXPECT_EQ(r.code, 2);
  for (const char* field : {"metric", "src_emb", "tgt_emb", "train_dict", "learning_rate", "mix"}) {
    EXPECT_NE(r.err.find(field), std::string::npos) << field << " missing from: " << r.err;
  }
  EXPECT_FALSE(fs::exists(dest));
}

TEST(CliValidation, ParseErrorsAndHelp) {
  EXPECT_EQ(invoke({}).code, 2);
  EXPECT_EQ(invoke({"frobnicate"}).code, 2);
  EXPECT_EQ(invoke({"retrieve", "--top-k", "many"}).code, 2);
  const auto help = invoke({"--help"});
  EXPECT_EQ(help.code, 0);
  EXPECT_NE(help.out.find("retrieve"), std::string::npos);
}

TEST(CliValidation, ProblemsCoverSynthRanges) {
  RunConfig config;
  config.synth.vocab_n = 1;
  config.test_fraction = 2.0;
  const auto p = config.problems(Command::kSynth);
  EXPECT_EQ(p.size(), 2u);
  EXPECT_THROW(config.validate(Command::kSynth), ConfigError);
  EXPECT_TRUE(RunConfig{}.problems(Command::kSynth).empty());
}

TEST(ExitCodes, MapErrorKinds) {
  EXPECT_EQ(exit_code_for(ConfigError("x")), 2);
  EXPECT_EQ(exit_code_for(DataError("x")), 3);
  EXPECT_EQ(exit_code_for(SchemaMismatchError("x")), 3);
  EXPECT_EQ(exit_code_for(InvariantError("x")), 4);
  EXPECT_EQ(exit_code_for(std::runtime_error("x")), 4);
}

}  // namespace
}  // namespace bli::cli
