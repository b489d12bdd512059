#include <doctest.h>

#include <cmath>

#include "rvq/nbsvm.hpp"

using namespace rvq;

namespace {

std::vector<LabeledExample> separated_corpus() {
  return {{"pos", "a"}, {"pos", "a"}, {"neg", "b"}, {"neg", "b"}};
}

}  // namespace

TEST_CASE("nbsvm: perfectly separated counts give opposite-sign ratios and accuracy 1") {
  const NbSvmModel m = nbsvm_fit(separated_corpus(), 1);
  const int ia = m.index.at("a");
  const int ib = m.index.at("b");
  CHECK(m.r(ia) > 0.0);
  CHECK(m.r(ib) < 0.0);
  CHECK(m.pos_label == "pos");  // lexicographically larger of {neg, pos}
  const EvalMetrics metrics = nbsvm_evaluate(m, separated_corpus());
  CHECK(metrics.accuracy == 1.0);
  CHECK(metrics.f1 == 1.0);
}

TEST_CASE("nbsvm: hand-computed log-count ratio with add-one smoothing") {
  // p = (2, 0), q = (0, 2): r = (log 3, -log 3).
  const NbSvmModel m = nbsvm_fit(separated_corpus(), 1);
  CHECK(m.r(m.index.at("a")) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(m.r(m.index.at("b")) == doctest::Approx(-std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("nbsvm: duplicating documents preserves ratio signs and ordering") {
  // Exact r-invariance under duplication does not hold with add-one
  // smoothing ((2p+1)/||2p+1|| != (p+1)/||p+1||); what duplication does
  // preserve is the sign structure and the relative ordering of features.
  std::vector<LabeledExample> corpus = {
      {"pos", "good fine"}, {"pos", "good"}, {"neg", "bad"}, {"neg", "bad poor"}};
  std::vector<LabeledExample> doubled = corpus;
  doubled.insert(doubled.end(), corpus.begin(), corpus.end());
  const NbSvmModel m1 = nbsvm_fit(corpus, 1);
  const NbSvmModel m2 = nbsvm_fit(doubled, 1);
  for (const auto& [gram, id1] : m1.index) {
    const int id2 = m2.index.at(gram);
    CHECK(std::signbit(m1.r(id1)) == std::signbit(m2.r(id2)));
  }
  for (const auto& [ga, ia] : m1.index)
    for (const auto& [gb, ib] : m1.index) {
      if (m1.r(ia) < m1.r(ib))
        CHECK(m2.r(m2.index.at(ga)) < m2.r(m2.index.at(gb)));
    }
}

TEST_CASE("nbsvm: trigram features separate phrase-level classes") {
  std::vector<LabeledExample> corpus;
  for (int i = 0; i < 10; ++i) {
    corpus.push_back({"q", "what is the point " + std::to_string(i)});
    corpus.push_back({"s", "this movie was great " + std::to_string(i)});
  }
  const NbSvmModel m = nbsvm_fit(corpus, 3);
  CHECK(m.predict("what is the reason") == "q");
  CHECK(m.predict("this movie was fun") == "s");
  CHECK(nbsvm_evaluate(m, corpus).accuracy == 1.0);
}

TEST_CASE("nbsvm: a single-class corpus is an error") {
  std::vector<LabeledExample> corpus = {{"pos", "a"}, {"pos", "b"}};
  CHECK_THROWS_AS(nbsvm_fit(corpus, 1), std::invalid_argument);
}

TEST_CASE("extract_ngrams produces all orders up to the requested one") {
  const auto grams = extract_ngrams("a b c", 3);
  // 3 unigrams + 2 bigrams + 1 trigram
  CHECK(grams.size() == 6);
}
