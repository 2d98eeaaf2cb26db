#include "test_util.hpp"

#include <sstream>

using namespace seqot;

using Tokens = std::vector<std::string>;

namespace {

// Paraphrase fixture: lexically disjoint sentences with nearby embeddings,
// plus an unrelated sentence.
EmbeddingTable paraphrase_table() {
  return EmbeddingTable({"do", "want", "have", "lunch", "us", "would", "like", "join", "meal", "we", "stock",
                         "market", "fell", "sharply"},
                        Matrix{{1.0, 0.1, 0.0, 0.0},
                               {0.9, 0.3, 0.1, 0.0},
                               {0.8, 0.2, 0.2, 0.0},
                               {0.1, 1.0, 0.1, 0.0},
                               {0.2, 0.1, 1.0, 0.0},
                               {1.0, 0.2, 0.1, 0.0},
                               {0.9, 0.35, 0.05, 0.0},
                               {0.8, 0.25, 0.25, 0.0},
                               {0.15, 0.95, 0.1, 0.0},
                               {0.25, 0.1, 0.95, 0.0},
                               {0.0, 0.0, 0.1, 1.0},
                               {0.0, 0.1, 0.0, 1.0},
                               {0.1, 0.0, 0.0, 0.9},
                               {0.0, 0.0, 0.2, 1.0}});
}

}  // namespace

TEST(ScorePair, IdenticalSentences) {
  const EmbeddingTable t = paraphrase_table();
  const Tokens s{"do", "want", "lunch", "us"};
  const ScoreRecord r = score_pair(s, s, nullptr, t, ScoreOptions{}, 1);
  ASSERT_TRUE(r.ot_seq);
  EXPECT_LE(*r.ot_seq, 1e-6);
  for (double b : r.bleu) EXPECT_DOUBLE_EQ(b, 1.0);
  EXPECT_EQ(r.hard_match, s.size());
  EXPECT_FALSE(r.ot_copy);
  EXPECT_FALSE(r.len_src);
}

TEST(ScorePair, ParaphraseBeatsUnrelatedSentence) {
  const EmbeddingTable t = paraphrase_table();
  const Tokens hyp{"do", "want", "have", "lunch", "us"};
  const Tokens para{"would", "like", "join", "we", "meal"};
  const Tokens other{"stock", "market", "fell", "sharply"};
  const ScoreRecord a = score_pair(hyp, para, nullptr, t, ScoreOptions{}, 1);
  const ScoreRecord b = score_pair(hyp, other, nullptr, t, ScoreOptions{}, 2);
  for (int n = 2; n <= 4; ++n) EXPECT_EQ(a.bleu[static_cast<std::size_t>(n - 1)], 0.0);
  EXPECT_EQ(a.hard_match, 0u);
  ASSERT_TRUE(a.ot_seq && b.ot_seq);
  EXPECT_LT(*a.ot_seq, *b.ot_seq);
}

TEST(ScorePair, SourceLegIsCopyLoss) {
  const EmbeddingTable t = paraphrase_table();
  const Tokens hyp{"do", "want", "lunch"}, ref{"would", "like", "meal"}, src{"we", "join", "lunch", "us"};
  const ScoreRecord r = score_pair(hyp, ref, &src, t, ScoreOptions{}, 1);
  ASSERT_TRUE(r.ot_copy);
  EXPECT_EQ(*r.len_src, 4u);
  const double expected =
      copy_ot_loss(embed_tokens(hyp, t), embed_tokens(src, t), CostKind::cosine, SolverConfig{}).loss;
  EXPECT_EQ(*r.ot_copy, expected);
}

TEST(ScorePair, DegenerateWhenNothingEmbeds) {
  const EmbeddingTable t = paraphrase_table();
  const ScoreRecord r = score_pair({"zzz"}, {"qqq"}, nullptr, t, ScoreOptions{}, 1);
  EXPECT_EQ(r.status, RecordStatus::degenerate);
  EXPECT_FALSE(r.ot_seq);
  EXPECT_TRUE(r.failed());
  const ScoreRecord e = score_pair({}, {}, nullptr, t, ScoreOptions{}, 1);
  EXPECT_EQ(e.status, RecordStatus::degenerate);
}

TEST(ScorePair, SolverFailureOmitsValues) {
  const EmbeddingTable t = paraphrase_table();
  ScoreOptions opt;
  opt.cost = CostKind::squared_euclidean;
  opt.solver_config.beta = 1e-5;
  const ScoreRecord r = score_pair({"do", "stock"}, {"market", "lunch"}, nullptr, t, opt, 1);
  EXPECT_EQ(r.status, RecordStatus::numerical_failure);
  EXPECT_FALSE(r.ot_seq);
  const std::string line = format_record(r);
  EXPECT_NE(line.find("\t-\t-\t"), std::string::npos) << line;
  EXPECT_NE(line.find("numerical_failure"), std::string::npos);
}

TEST(FormatRecord, FieldOrder) {
  ScoreRecord r;
  r.pair_id = 3;
  r.ot_seq = 0.25;
  r.bleu = {1.0, 0.5, 0.0, 0.0};
  r.hard_match = 2;
  r.len_hyp = 4;
  r.len_ref = 5;
  EXPECT_EQ(format_record(r), "3\t0.25\t-\t1\t0.5\t0\t0\t2\t4\t5\t-\tok");
}

TEST(ScoreCorpus, IdenticalCorpora) {
  const EmbeddingTable t = paraphrase_table();
  const std::vector<std::string> lines{"do want lunch", "stock market fell sharply"};
  const CorpusResult r = score_corpus_lines(lines, lines, nullptr, t, ScoreOptions{});
  ASSERT_EQ(r.records.size(), 2u);
  ASSERT_TRUE(r.summary.mean_ot_seq);
  EXPECT_LE(*r.summary.mean_ot_seq, 1e-6);
  EXPECT_DOUBLE_EQ(r.summary.corpus_bleu4, 1.0);
  EXPECT_EQ(r.summary.failures, 0u);
}

TEST(ScoreCorpus, LineCountMismatchNamesCounts) {
  const EmbeddingTable t = paraphrase_table();
  try {
    score_corpus_lines({"a", "b", "c"}, {"a", "b", "c", "d"}, nullptr, t, ScoreOptions{});
    FAIL();
  } catch (const InputError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find('3'), std::string::npos);
    EXPECT_NE(msg.find('4'), std::string::npos);
  }
}

TEST(ScoreCorpus, SummaryMeansAndThreadInvariance) {
  const EmbeddingTable t = paraphrase_table();
  const std::vector<std::string> hyp{"do want lunch", "we join us", "stock fell", "meal lunch us", "zzz",
                                     "would like have"};
  const std::vector<std::string> ref{"would like meal", "us join", "market fell sharply", "lunch", "qqq",
                                     "do want have lunch"};
  ScoreOptions one;
  ScoreOptions four;
  four.threads = 4;
  const CorpusResult a = score_corpus_lines(hyp, ref, nullptr, t, one);
  const CorpusResult b = score_corpus_lines(hyp, ref, nullptr, t, four);
  std::ostringstream sa, sb;
  write_corpus(sa, a);
  write_corpus(sb, b);
  EXPECT_EQ(sa.str(), sb.str());

  double sum = 0.0;
  int count = 0;
  for (const ScoreRecord& r : a.records)
    if (r.ot_seq) sum += *r.ot_seq, ++count;
  EXPECT_NEAR(*a.summary.mean_ot_seq, sum / count, 1e-12);
  EXPECT_EQ(a.summary.failures, 1u);
  EXPECT_EQ(sa.str().rfind(kRecordHeader, 0), 0u);
}

TEST(GammaSweep, Examples) {
  const std::vector<SweepRow> rows = gamma_sweep({1.0, 2.0, 3.0}, {4.0, 5.0, 6.0}, {0.0, 0.5});
  EXPECT_EQ(rows[0].mean_loss, 5.0);
  EXPECT_DOUBLE_EQ(rows[1].mean_loss, 6.0);
  const auto single = gamma_sweep({3.0}, {2.0}, {1.0});
  ASSERT_EQ(single.size(), 1u);
  EXPECT_EQ(single[0].gamma, 1.0);
  EXPECT_EQ(single[0].mean_loss, 5.0);
  const auto& grid = default_gamma_grid();
  EXPECT_NE(std::find(grid.begin(), grid.end(), 0.1), grid.end());
  EXPECT_THROW(gamma_sweep({}, {}, {0.1}), std::invalid_argument);
  EXPECT_THROW(gamma_sweep({1.0}, {1.0, 2.0}, {0.1}), std::invalid_argument);
}

TEST(CompareMatchings, TaxonomyOnSmallFixture) {
  std::mt19937_64 rng(71);
  const CostMatrix c = seqot::testing::random_cosine_cost(4, 4, rng);
  const MatchingReport r = compare_matchings({"a", "b", "c", "a"}, {"a", "d", "a", "e"}, c);
  EXPECT_EQ(r.hard_match, 2u);
  EXPECT_EQ(r.assignment.assignment.size(), 4u);
  ASSERT_TRUE(r.ot.distance);
  EXPECT_LE(*r.ot.distance, r.assignment_mean + 1e-6);
  EXPECT_NEAR(*r.ot.distance, r.assignment_mean, 1e-4);
  std::ostringstream os;
  write_matching(os, r);
  EXPECT_EQ(os.str().rfind(kMatchHeader, 0), 0u);
  EXPECT_NE(os.str().find("#plan"), std::string::npos);
}
