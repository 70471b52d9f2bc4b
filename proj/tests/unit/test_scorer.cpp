#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "qfsum/error.hpp"
#include "qfsum/scorer.hpp"
#include "synthetic.hpp"

namespace qfsum {
namespace {

std::vector<std::vector<std::string>> words_of(std::initializer_list<const char*> texts) {
  std::vector<std::vector<std::string>> out;
  for (const char* t : texts) out.push_back(normalized_words(t));
  return out;
}

TEST(Overlap, CountsSharedTypes) {
  OverlapScorer s;
  EXPECT_EQ(s.score_pair("a b c", "b c d").value, 2.0);
  EXPECT_EQ(s.score_pair("a a b", "a").value, 1.0);
  EXPECT_EQ(s.score_pair("", "a").value, 0.0);
  EXPECT_EQ(s.score_pair("The Cat", "the cat").value, 2.0);
  EXPECT_EQ(s.score_pair("a", "b").scorer_id, "overlap");
}

TEST(Tfidf, MatchesHandComputedCosine) {
  const auto docs = words_of({"a b", "b c"});
  auto stats = std::make_shared<CorpusStatistics>(CorpusStatistics::fit(docs));
  TfidfCosineScorer s(stats);
  const double idf_a = std::log(1.0 + 2.0 / 2.0);
  const double idf_b = std::log(1.0 + 2.0 / 3.0);
  EXPECT_NEAR(s.idf("a"), idf_a, 1e-15);
  EXPECT_NEAR(s.idf("b"), idf_b, 1e-15);
  EXPECT_NEAR(s.idf("zzz"), std::log(3.0), 1e-15);
  const double expected = idf_b * idf_b / (idf_a * idf_a + idf_b * idf_b);
  EXPECT_NEAR(s.score_pair("a b", "b c").value, expected, 1e-12);
  EXPECT_NEAR(s.score_pair("a b", "a b").value, 1.0, 1e-12);
  EXPECT_EQ(s.score_pair("", "a b").value, 0.0);
  // Repeated terms scale tf.
  const double v1 = 2 * idf_a, v2 = idf_b;
  EXPECT_NEAR(s.score_pair("a a b", "a").value, v1 / std::sqrt(v1 * v1 + v2 * v2), 1e-12);
}

TEST(Bm25, MatchesHandComputedScore) {
  const auto docs = words_of({"a b", "b c c", "d"});
  const auto units = words_of({"a b", "b c c", "d", "a"});
  auto stats = std::make_shared<CorpusStatistics>(CorpusStatistics::fit(docs, units));
  EXPECT_DOUBLE_EQ(stats->average_length(), 7.0 / 4.0);
  Bm25Scorer s(stats);
  auto idf = [](double n, double df) { return std::log(1.0 + (n - df + 0.5) / (df + 0.5)); };
  auto term = [](double tf, double len, double avg) {
    return tf * (1.2 + 1.0) / (tf + 1.2 * (1.0 - 0.75 + 0.75 * len / avg));
  };
  const double avg = 7.0 / 4.0;
  // Query "c b b": distinct terms c and b; text "b c c" has length 3.
  const double expected = idf(3, 1) * term(2, 3, avg) + idf(3, 2) * term(1, 3, avg);
  EXPECT_NEAR(s.score_pair("c b b", "b c c").value, expected, 1e-12);
  EXPECT_EQ(s.score_pair("", "b c c").value, 0.0);
  EXPECT_EQ(s.score_pair("zzz", "b c c").value, 0.0);
}

TEST(Bm25, IsDirectional) {
  const auto docs = words_of({"a b", "b c c", "d"});
  auto stats = std::make_shared<CorpusStatistics>(CorpusStatistics::fit(docs));
  Bm25Scorer s(stats);
  EXPECT_NE(s.score_pair("a", "a b c d").value, s.score_pair("a b c d", "a").value);
}

TEST(Statistics, UnfittedScorersThrow) {
  EXPECT_THROW(TfidfCosineScorer(nullptr).score_pair("a", "b"), UnfittedStatistics);
  EXPECT_THROW(Bm25Scorer(std::make_shared<CorpusStatistics>()).score_pair("a", "b"), UnfittedStatistics);
  EXPECT_THROW(make_builtin_scorer(BuiltinScorerKind::Bm25)->score_pair("a", "b"), UnfittedStatistics);
  EXPECT_NO_THROW(make_builtin_scorer(BuiltinScorerKind::Overlap)->score_pair("a", "b"));
}

TEST(Statistics, FitTopicUsesDocumentsForDfAndSentencesForLength) {
  testing::SyntheticParams p;
  p.topics = 1;
  p.documents = 3;
  p.sentences = 4;
  p.words_per_sentence = 10;
  const auto topic = testing::synthetic_topics(p).front();
  const auto stats = CorpusStatistics::fit_topic(topic);
  EXPECT_EQ(stats.num_documents(), 3u);
  EXPECT_DOUBLE_EQ(stats.average_length(), 10.0);
  const auto first = topic.documents[0].sentences[0].tokens[0].normalized;
  std::size_t df = 0;
  for (const auto& d : topic.documents) {
    bool found = false;
    for (const auto& s : d.sentences)
      for (const auto& t : s.tokens) found = found || t.normalized == first;
    df += found;
  }
  EXPECT_EQ(stats.document_frequency(first), df);
}

TEST(Factory, ParsesNames) {
  EXPECT_EQ(parse_builtin_scorer("overlap"), BuiltinScorerKind::Overlap);
  EXPECT_EQ(parse_builtin_scorer("tfidf"), BuiltinScorerKind::TfidfCosine);
  EXPECT_EQ(parse_builtin_scorer("tfidf_cosine"), BuiltinScorerKind::TfidfCosine);
  EXPECT_EQ(parse_builtin_scorer("bm25"), BuiltinScorerKind::Bm25);
  EXPECT_THROW(parse_builtin_scorer("roberta"), InvalidConfig);
}

TEST(Batch, EqualsPairwiseScoring) {
  testing::SyntheticParams p;
  p.topics = 1;
  const auto topic = testing::synthetic_topics(p).front();
  auto stats = std::make_shared<CorpusStatistics>(CorpusStatistics::fit_topic(topic));
  std::vector<TextPair> pairs;
  for (const auto& d : topic.documents)
    for (const auto& s : d.sentences) pairs.emplace_back(topic.query.combined, s.raw);
  for (auto kind : {BuiltinScorerKind::Overlap, BuiltinScorerKind::TfidfCosine, BuiltinScorerKind::Bm25}) {
    const auto scorer = make_builtin_scorer(kind, stats);
    const auto batch = scorer->score_batch(pairs);
    ASSERT_EQ(batch.size(), pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i)
      EXPECT_EQ(batch[i].value, scorer->score_pair(pairs[i].first, pairs[i].second).value);
  }
}

TEST(Symmetry, OverlapAndTfidfAreSymmetricOnRandomText) {
  testing::SyntheticParams p;
  p.topics = 2;
  const auto topics = testing::synthetic_topics(p);
  auto stats = std::make_shared<CorpusStatistics>(CorpusStatistics::fit_topic(topics[0]));
  OverlapScorer overlap;
  TfidfCosineScorer tfidf(stats);
  std::vector<std::string> sentences;
  for (const auto& t : topics)
    for (const auto& d : t.documents)
      for (const auto& s : d.sentences) sentences.push_back(s.raw);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) {
    const auto& a = sentences[rng() % sentences.size()];
    const auto& b = sentences[rng() % sentences.size()];
    EXPECT_EQ(overlap.score_pair(a, b).value, overlap.score_pair(b, a).value);
    const double ab = tfidf.score_pair(a, b).value;
    EXPECT_NEAR(ab, tfidf.score_pair(b, a).value, 1e-12);
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0 + 1e-12);
  }
}

TEST(Bindings, ResolveRoles) {
  OverlapScorer a;
  OverlapScorer b;
  ScorerBindings bindings{&a, &b};
  EXPECT_EQ(&bindings.get(ScorerRole::QueryRelevance), &a);
  EXPECT_EQ(&bindings.get(ScorerRole::Paraphrase), &b);
  EXPECT_EQ(to_string(ScorerRole::Paraphrase), "paraphrase");
}

}  // namespace
}  // namespace qfsum
