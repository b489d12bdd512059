#include "rvq/evalsuite.hpp"

#include <algorithm>
#include <cmath>

#include "rvq/trainer.hpp"

namespace rvq {

LatentMatrix Scorer::encode_input(const TokenSequence& x) const {
  if (x.ids.empty()) throw std::invalid_argument("conditional_score: empty input sentence");
  TokenSequence trimmed = truncate_sequence(x, model_.cfg.max_len);
  return apply_bottleneck(model_, encode(model_, trimmed));
}

double Scorer::score_given_latent(const LatentMatrix& post, const TokenSequence& y) const {
  if (y.ids.empty()) throw std::invalid_argument("conditional_score: empty target sentence");
  TokenSequence trimmed = truncate_sequence(y, model_.cfg.max_len);
  const double lp = sequence_log_prob(model_, post, trimmed.ids);
  if (!length_normalize_) return lp;
  return lp / static_cast<double>(trimmed.ids.size() + 1);
}

double Scorer::conditional_score(const TokenSequence& x, const TokenSequence& y) const {
  return score_given_latent(encode_input(x), y);
}

ScoredPair Scorer::score_pair(const TokenSequence& x, const TokenSequence& y) const {
  ScoredPair pair;
  pair.x = x;
  pair.y = y;
  const TokenSequence tx = truncate_sequence(x, model_.cfg.max_len);
  const TokenSequence ty = truncate_sequence(y, model_.cfg.max_len);
  const LatentMatrix pre_x = encode(model_, tx);
  const LatentMatrix pre_y = encode(model_, ty);
  const LatentMatrix post_x = apply_bottleneck(model_, pre_x);
  const LatentMatrix post_y = apply_bottleneck(model_, pre_y);
  pair.log_p_y_given_x = score_given_latent(post_x, ty);
  pair.log_p_x_given_y = score_given_latent(post_y, tx);
  const Mat& fx = post_bottleneck_features_ ? post_x.heads : pre_x.heads;
  const Mat& fy = post_bottleneck_features_ ? post_y.heads : pre_y.heads;
  pair.enc_x = Eigen::Map<const Eigen::VectorXf>(fx.data(), fx.size()).cast<double>();
  pair.enc_y = Eigen::Map<const Eigen::VectorXf>(fy.data(), fy.size()).cast<double>();
  return pair;
}

Eigen::VectorXd identification_features(const ScoredPair& pair, FeatureMode mode) {
  const double a = pair.log_p_y_given_x;
  const double b = pair.log_p_x_given_y;
  if (mode == FeatureMode::ScoreOnly) {
    Eigen::VectorXd f(4);
    f << a, b, a + b, std::abs(a - b);
    return f;
  }
  if (pair.enc_x.size() == 0 || pair.enc_x.size() != pair.enc_y.size())
    throw std::invalid_argument("identification_features: latents not populated");
  const Eigen::Index d = pair.enc_x.size();
  Eigen::VectorXd f(4 + 1 + 2 * d);
  f(0) = a;
  f(1) = b;
  f(2) = a + b;
  f(3) = std::abs(a - b);
  const double nx = pair.enc_x.norm();
  const double ny = pair.enc_y.norm();
  f(4) = (nx > 0.0 && ny > 0.0) ? pair.enc_x.dot(pair.enc_y) / (nx * ny) : 0.0;
  f.segment(5, d) = (pair.enc_x - pair.enc_y).cwiseAbs();
  f.segment(5 + d, d) = pair.enc_x.cwiseProduct(pair.enc_y);
  return f;
}

BatchScorer model_batch_scorer(const Scorer& scorer) {
  return [&scorer](const TokenSequence& x, const std::vector<const TokenSequence*>& candidates) {
    const LatentMatrix post = scorer.encode_input(x);
    std::vector<double> scores;
    scores.reserve(candidates.size());
    for (const auto* y : candidates) scores.push_back(scorer.score_given_latent(post, *y));
    return scores;
  };
}

double rank_eval(const BatchScorer& score, const std::vector<RankTask>& tasks,
                 const std::vector<TokenSequence>& pool, int negatives, std::uint64_t seed) {
  if (tasks.empty()) throw std::invalid_argument("rank_eval: no tasks");
  if (negatives < 1) throw std::invalid_argument("rank_eval: negatives must be >= 1");
  if (static_cast<int>(pool.size()) <= negatives)
    throw std::invalid_argument("rank_eval: distractor pool must exceed the negative count");

  Rng rng(seed);
  long successes = 0;
  for (const auto& task : tasks) {
    // Negatives drawn without replacement, excluding x and y.
    std::vector<const TokenSequence*> eligible;
    eligible.reserve(pool.size());
    for (const auto& cand : pool) {
      if (cand.text == task.x.text || cand.text == task.y.text) continue;
      eligible.push_back(&cand);
    }
    if (static_cast<int>(eligible.size()) < negatives)
      throw std::invalid_argument("rank_eval: insufficient distractor pool after exclusions");
    for (int i = 0; i < negatives; ++i) {
      const std::size_t j =
          static_cast<std::size_t>(i) + rng.index(eligible.size() - static_cast<std::size_t>(i));
      std::swap(eligible[static_cast<std::size_t>(i)], eligible[j]);
    }

    std::vector<const TokenSequence*> candidates;
    candidates.push_back(&task.y);
    for (int i = 0; i < negatives; ++i) candidates.push_back(eligible[static_cast<std::size_t>(i)]);
    const std::vector<double> scores = score(task.x, candidates);
    for (int i = 1; i <= negatives; ++i) {
      if (scores[0] > scores[static_cast<std::size_t>(i)]) ++successes;  // ties fail
    }
  }
  return static_cast<double>(successes) /
         (static_cast<double>(tasks.size()) * static_cast<double>(negatives));
}

namespace {

Row decoder_last_logits(const Model& m, const LatentMatrix& z, const std::vector<int>& prefix) {
  NoGradGuard ng;
  Var h = decoder_hidden(m, constant(Mat(z.heads)), prefix);
  Var logits = linear(slice_rows(h, h.rows() - 1, 1), m.out_w, m.out_b);
  return logits.value().row(0);
}

}  // namespace

Generation generate(const Model& model, const Vocabulary& vocab, const TokenSequence& x,
                    GenMode mode, double temperature, int max_out_len, Rng& rng) {
  if (mode == GenMode::Sample && !(temperature > 0.0))
    throw std::invalid_argument("generate: sampling temperature must be > 0");
  if (max_out_len < 1) throw std::invalid_argument("generate: max_out_len must be >= 1");

  TokenSequence input = truncate_sequence(x, model.cfg.max_len);
  const LatentMatrix z = apply_bottleneck(model, encode(model, input));

  std::vector<int> prefix = {Vocabulary::kBos};
  std::vector<int> out_ids;
  while (static_cast<int>(out_ids.size()) < max_out_len) {
    Row logits = decoder_last_logits(model, z, prefix);
    logits(0, Vocabulary::kPad) = -1e30f;
    logits(0, Vocabulary::kBos) = -1e30f;
    if (out_ids.empty()) logits(0, Vocabulary::kEos) = -1e30f;  // never emit empty output

    int next;
    if (mode == GenMode::Greedy) {
      next = 0;
      for (Index j = 1; j < logits.cols(); ++j)
        if (logits(0, j) > logits(0, next)) next = static_cast<int>(j);
    } else {
      // softmax(logits / tau) sampled by inverse CDF in double
      const Index v = logits.cols();
      const double mx = static_cast<double>(logits.maxCoeff());
      std::vector<double> weights(static_cast<std::size_t>(v));
      double total = 0.0;
      for (Index j = 0; j < v; ++j) {
        const double w = std::exp((static_cast<double>(logits(0, j)) - mx) / temperature);
        weights[static_cast<std::size_t>(j)] = w;
        total += w;
      }
      const double u = rng.uniform() * total;
      double acc = 0.0;
      next = static_cast<int>(v) - 1;
      for (Index j = 0; j < v; ++j) {
        acc += weights[static_cast<std::size_t>(j)];
        if (u < acc) {
          next = static_cast<int>(j);
          break;
        }
      }
    }
    if (next == Vocabulary::kEos) break;
    out_ids.push_back(next);
    prefix.push_back(next);
  }

  Generation gen;
  gen.seq.ids = out_ids;
  gen.seq.text = vocab.decode_ids(out_ids);
  gen.log_prob = sequence_log_prob(model, z, out_ids);
  return gen;
}

CalibrationResult calibrate_temperature(const std::function<double(double)>& overlap_at_tau,
                                        double target, double tolerance, int max_iter,
                                        double tau_lo, double tau_hi) {
  if (!(target > 0.0 && target < 100.0))
    throw std::invalid_argument("calibrate_temperature: target must lie in (0, 100)");
  if (tolerance < 0.0) throw std::invalid_argument("calibrate_temperature: negative tolerance");

  CalibrationResult best;
  int evals = 0;
  auto probe = [&](double tau) {
    const double overlap = overlap_at_tau(tau);
    ++evals;
    if (evals == 1 || std::abs(overlap - target) < std::abs(best.overlap - target)) {
      best.tau = tau;
      best.overlap = overlap;
    }
    return overlap;
  };

  const double f_lo = probe(tau_lo);  // coldest: highest overlap
  if (std::abs(f_lo - target) <= tolerance)
    return {tau_lo, f_lo, evals, true};
  const double f_hi = probe(tau_hi);  // hottest: lowest overlap
  if (std::abs(f_hi - target) <= tolerance)
    return {tau_hi, f_hi, evals, true};
  if (target > std::max(f_lo, f_hi) || target < std::min(f_lo, f_hi))
    throw CalibrationRangeError(std::min(f_lo, f_hi), std::max(f_lo, f_hi), tau_lo, tau_hi,
                                target);

  double lo = tau_lo, hi = tau_hi;
  while (evals < max_iter) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = probe(mid);
    if (std::abs(f_mid - target) <= tolerance)
      return {mid, f_mid, evals, true};
    if (f_mid > target)
      lo = mid;  // still too much overlap: heat up
    else
      hi = mid;
  }
  best.iterations = evals;
  best.within_tolerance = std::abs(best.overlap - target) <= tolerance;
  return best;
}

std::function<double(double)> model_overlap_fn(const Model& model, const Vocabulary& vocab,
                                               const std::vector<TokenSequence>& sample,
                                               std::uint64_t seed, int max_out_len) {
  if (sample.empty()) throw std::invalid_argument("model_overlap_fn: empty corpus sample");
  return [&model, &vocab, sample, seed, max_out_len](double tau) {
    double total = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
      Rng rng = Rng::for_stream(seed, streams::kGenerate, i);
      const Generation gen =
          generate(model, vocab, sample[i], GenMode::Sample, tau, max_out_len, rng);
      total += bleu(gen.seq.text, {sample[i].text},
                    BleuConfig{.char_level_tokens = vocab.char_level()});
    }
    return total / static_cast<double>(sample.size());
  };
}

std::vector<std::pair<TokenSequence, TokenSequence>> filter_pairs(
    const std::vector<std::pair<TokenSequence, TokenSequence>>& pairs, double max_ratio) {
  if (!(max_ratio > 1.0)) throw std::invalid_argument("filter_pairs: ratio must exceed 1");
  std::vector<std::pair<TokenSequence, TokenSequence>> kept;
  for (const auto& [x, y] : pairs) {
    const double lx = static_cast<double>(x.ids.size());
    const double ly = static_cast<double>(y.ids.size());
    if (lx == 0.0 || ly == 0.0) continue;
    const double ratio = std::max(lx, ly) / std::min(lx, ly);
    if (ratio < max_ratio) kept.push_back({x, y});
  }
  return kept;
}

std::vector<LabeledExample> augment_corpus(const Model& model, const Vocabulary& vocab,
                                           const std::vector<LabeledExample>& corpus,
                                           double temperature, std::uint64_t seed,
                                           int max_out_len) {
  if (!(temperature > 0.0)) throw std::invalid_argument("augment_corpus: temperature must be > 0");
  std::vector<LabeledExample> out;
  out.reserve(corpus.size() * 2);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& ex = corpus[i];
    out.push_back(ex);
    Rng rng = Rng::for_stream(seed, streams::kGenerate, i);
    const Generation gen = generate(model, vocab, vocab.encode_text(ex.text), GenMode::Sample,
                                    temperature, max_out_len, rng);
    out.push_back({ex.label, gen.seq.text});
  }
  return out;
}

}  // namespace rvq
