#include "bli/corpus.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace bli {
namespace {

using testing::TempDir;

TEST(Nfc, ComposesDecomposedAccents) {
  EXPECT_EQ(nfc("e\xCC\x81"), "\xC3\xA9");
  EXPECT_EQ(nfc("plain"), "plain");
  EXPECT_EQ(nfc("\xFF\xFE"), "\xFF\xFE");
}

TEST(Vocabulary, AddIsIdempotent) {
  Vocabulary v;
  EXPECT_EQ(v.add("a"), std::make_pair(WordId{0}, true));
  EXPECT_EQ(v.add("b"), std::make_pair(WordId{1}, true));
  EXPECT_EQ(v.add("a"), std::make_pair(WordId{0}, false));
  EXPECT_EQ(v.size(), 2u);
  EXPECT_FALSE(v.lookup("c"));
  EXPECT_THROW(Vocabulary({"x", "x"}), DataError);
}

TEST(Embeddings, LoadsAndNormalizesTokens) {
  TempDir dir("emb");
  const auto path = dir.write("v.vec", "3 2\ncafe\xCC\x81 1 0\nb 0.5 -2\nc 3 4\n");
  const auto loaded = load_embeddings(path);
  ASSERT_EQ(loaded.space.size(), 3u);
  EXPECT_EQ(loaded.space.dim(), 2);
  EXPECT_TRUE(loaded.space.vocab.lookup("caf\xC3\xA9"));
  EXPECT_DOUBLE_EQ(loaded.space.matrix(1, 1), -2.0);
  EXPECT_FALSE(loaded.space.normalized);
}

TEST(Embeddings, MaxVocabKeepsLeadingRows) {
  TempDir dir("emb");
  const auto path = dir.write("v.vec", "3 1\na 1\nb 2\nc 3\n");
  const auto loaded = load_embeddings(path, 2);
  EXPECT_EQ(loaded.space.size(), 2u);
  EXPECT_FALSE(loaded.space.vocab.lookup("c"));
}

TEST(Embeddings, DuplicateTokensKeepFirstRow) {
  TempDir dir("emb");
  const auto path = dir.write("v.vec", "3 1\na 1\na 2\nb 3\n");
  const auto loaded = load_embeddings(path);
  EXPECT_EQ(loaded.space.size(), 2u);
  EXPECT_EQ(loaded.duplicates, std::vector<std::string>{"a"});
  EXPECT_DOUBLE_EQ(loaded.space.matrix(0, 0), 1.0);
}

TEST(Embeddings, MalformedInputsAreDataErrors) {
  TempDir dir("emb");
  EXPECT_THROW(load_embeddings(dir.write("a.vec", "")), DataError);
  EXPECT_THROW(load_embeddings(dir.write("b.vec", "two 2\na 1 2\n")), DataError);
  EXPECT_THROW(load_embeddings(dir.write("c.vec", "1 2\na 1\n")), DataError);
  EXPECT_THROW(load_embeddings(dir.write("d.vec", "1 2\na 1 x\n")), DataError);
  EXPECT_THROW(load_embeddings(dir.write("e.vec", "2 1\na 1\n")), DataError);
  EXPECT_THROW(load_embeddings(dir.write("f.vec", "1 1\na 1\nb 2\n")), DataError);
  EXPECT_THROW(load_embeddings(dir / "missing.vec"), DataError);
}

TEST(Embeddings, SaveLoadRoundTripIsExact) {
  TempDir dir("emb");
  const auto space = testing::random_space(20, 7, 3);
  save_embeddings(space, dir / "r.vec");
  const auto back = load_embeddings(dir / "r.vec").space;
  EXPECT_EQ(back.vocab.words(), space.vocab.words());
  EXPECT_TRUE(back.matrix == space.matrix);
}

TEST(Normalize, UnitRowsAndExactIdempotence) {
  auto space = testing::random_space(50, 9, 4);
  for (Eigen::Index i = 0; i < space.matrix.rows(); ++i) EXPECT_NEAR(space.matrix.row(i).norm(), 1.0, 1e-12);
  const auto again = normalize_rows(space).space;
  EXPECT_TRUE(again.matrix == space.matrix);
}

TEST(Normalize, ZeroRowsAreCountedAndLeftAlone) {
  EmbeddingSpace space;
  space.vocab = Vocabulary({"a", "b"});
  space.matrix = RowMatrix::Zero(2, 3);
  space.matrix(1, 2) = 5.0;
  const auto result = normalize_rows(space);
  EXPECT_EQ(result.zero_rows, 1u);
  EXPECT_TRUE(result.space.matrix.row(0).isZero());
  EXPECT_DOUBLE_EQ(result.space.matrix(1, 2), 1.0);
}

TEST(Dictionary, LoadIsInsensitiveToLineOrder) {
  TempDir dir("dict");
  const Vocabulary src({"a", "b", "c"});
  const Vocabulary tgt({"x", "y", "z"});
  const auto one = load_dictionary(dir.write("1.tsv", "a\tx\nb\ty\na\tz\nq\tx\n"), src, tgt);
  const auto two = load_dictionary(dir.write("2.tsv", "q\tx\na\tz\r\n# comment\nb\ty\na\tx\na\tx\n"), src, tgt);
  EXPECT_EQ(one.dict.entries, two.dict.entries);
  EXPECT_EQ(one.oov_src, 1u);
  EXPECT_EQ(one.dict.pair_count(), 3u);
  EXPECT_EQ(*one.dict.targets(0), (std::vector<WordId>{0, 2}));
  EXPECT_TRUE(one.dict.is_gold(1, 1));
  EXPECT_FALSE(one.dict.is_gold(2, 1));
  EXPECT_THROW(load_dictionary(dir.write("3.tsv", "a x\n"), src, tgt), DataError);
}

TEST(Dictionary, SaveLoadRoundTrip) {
  TempDir dir("dict");
  const Vocabulary src({"a", "b"});
  const Vocabulary tgt({"x", "y"});
  TranslationDictionary d;
  d.add(1, 0);
  d.add(0, 1);
  d.add(0, 0);
  save_dictionary(d, src, tgt, dir / "d.tsv");
  EXPECT_EQ(load_dictionary(dir / "d.tsv", src, tgt).dict.entries, d.entries);
}

TEST(Frequency, TotalsIncludeOutOfVocabularyAndSumRepeats) {
  TempDir dir("freq");
  const Vocabulary vocab({"a", "b", "c"});
  const auto loaded = load_frequency_table(dir.write("f.tsv", "b\t500\na\t300\nzz\t100\nb\t100\n"), vocab);
  const auto& t = loaded.table;
  EXPECT_EQ(t.total_tokens, 1000u);
  EXPECT_EQ(loaded.out_of_vocab, 1u);
  EXPECT_NEAR(t.zipf[1], std::log10(0.6 * 1e9), 1e-12);
  EXPECT_NEAR(t.zipf[0], std::log10(0.3 * 1e9), 1e-12);
  EXPECT_EQ(t.rank[1], 1u);
  EXPECT_EQ(t.rank[0], 2u);
  EXPECT_EQ(t.rank[2], 3u);
  EXPECT_FALSE(t.listed[2]);
  EXPECT_DOUBLE_EQ(t.zipf[2], 0.0);
}

TEST(Frequency, RejectsBadCounts) {
  TempDir dir("freq");
  const Vocabulary vocab({"a"});
  EXPECT_THROW(load_frequency_table(dir.write("a.tsv", "a\t0\n"), vocab), DataError);
  EXPECT_THROW(load_frequency_table(dir.write("b.tsv", "a\t-3\n"), vocab), DataError);
  EXPECT_THROW(load_frequency_table(dir.write("c.tsv", "a\t1.5\n"), vocab), DataError);
  EXPECT_THROW(load_frequency_table(dir.write("d.tsv", "a\n"), vocab), DataError);
}

TEST(Frequency, ZipfIsClampedAtZero) {
  const std::vector<std::uint64_t> counts{1, 0};
  const auto t = frequency_table_from_counts(counts, 100'000'000'000ULL);
  EXPECT_DOUBLE_EQ(t.zipf[0], 0.0);
  EXPECT_TRUE(t.listed[0]);
}

TEST(Pos, NamesRoundTripAndUnknownTagsBecomeX) {
  for (UPos tag : all_pos_tags()) EXPECT_EQ(parse_pos(pos_name(tag)), tag);
  EXPECT_FALSE(parse_pos("noun"));
  TempDir dir("pos");
  const Vocabulary vocab({"a", "b", "c"});
  const auto loaded = load_pos_table(dir.write("p.tsv", "a\tNOUN\nb\tFOO\nq\tVERB\n"), vocab);
  EXPECT_EQ(loaded.table[0], UPos::kNoun);
  EXPECT_EQ(loaded.table[1], UPos::kX);
  EXPECT_EQ(loaded.table[2], UPos::kUnk);
  EXPECT_EQ(loaded.unknown_tags, 1u);
  EXPECT_EQ(loaded.out_of_vocab, 1u);
  save_pos_table(loaded.table, vocab, dir / "q.tsv");
  EXPECT_EQ(load_pos_table(dir / "q.tsv", vocab).table.tag, loaded.table.tag);
}

}  // namespace
}  // namespace bli
