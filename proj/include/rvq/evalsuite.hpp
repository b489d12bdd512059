#pragma once

#include <Eigen/Dense>

#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rvq/bleu.hpp"
#include "rvq/model.hpp"
#include "rvq/nbsvm.hpp"
#include "rvq/rng.hpp"
#include "rvq/vocab.hpp"

namespace rvq {

// Sentence pair with conditional log-probabilities and the flattened encoder
// latents that feed the identification features.
struct ScoredPair {
  TokenSequence x, y;
  double log_p_y_given_x = 0.0;
  double log_p_x_given_y = 0.0;
  Eigen::VectorXd enc_x, enc_y;  // flattened H x d_head latent
};

enum class FeatureMode { ScoreOnly, ScorePlusLatent };

inline FeatureMode feature_mode_from_name(const std::string& s) {
  if (s == "score-only") return FeatureMode::ScoreOnly;
  if (s == "score+latent") return FeatureMode::ScorePlusLatent;
  throw std::invalid_argument("unknown feature mode: " + s);
}

// Immutable-model scoring surface. conditional_score(x, y) = log P(y | z(x))
// with z the variant's bottleneck output; optionally per-token normalized.
class Scorer {
 public:
  Scorer(const Model& model, bool length_normalize = false,
         bool post_bottleneck_features = false)
      : model_(model),
        length_normalize_(length_normalize),
        post_bottleneck_features_(post_bottleneck_features) {}

  const Model& model() const { return model_; }

  LatentMatrix encode_input(const TokenSequence& x) const;
  double score_given_latent(const LatentMatrix& post, const TokenSequence& y) const;
  double conditional_score(const TokenSequence& x, const TokenSequence& y) const;
  ScoredPair score_pair(const TokenSequence& x, const TokenSequence& y) const;

 private:
  const Model& model_;
  bool length_normalize_;
  bool post_bottleneck_features_;
};

// score-only: [logP(y|x), logP(x|y), sum, |difference|]
// score+latent appends cosine(enc_x, enc_y), |enc_x - enc_y| and
// enc_x (.) enc_y elementwise: 4 + 1 + 2*(H*d_head) features.
Eigen::VectorXd identification_features(const ScoredPair& pair, FeatureMode mode);

// Paraphrase ranking against sampled non-paraphrases. The scorer receives
// one x and the candidate list (positive first) and returns their scores;
// a comparison succeeds only when the positive scores strictly higher.
struct RankTask {
  TokenSequence x, y;
};

using BatchScorer = std::function<std::vector<double>(
    const TokenSequence& x, const std::vector<const TokenSequence*>& candidates)>;

BatchScorer model_batch_scorer(const Scorer& scorer);

double rank_eval(const BatchScorer& score, const std::vector<RankTask>& tasks,
                 const std::vector<TokenSequence>& pool, int negatives, std::uint64_t seed);

// ---------------------------------------------------------------------------
// generation
// ---------------------------------------------------------------------------

enum class GenMode { Greedy, Sample };

struct Generation {
  TokenSequence seq;
  double log_prob = 0.0;  // log P(seq | z(x)) at temperature 1
};

// Greedy argmax or softmax(logits / tau) sampling; stops at EOS or after
// max_out_len tokens. PAD/BOS are masked out, EOS is masked at the first
// step so the output is never empty.
Generation generate(const Model& model, const Vocabulary& vocab, const TokenSequence& x,
                    GenMode mode, double temperature, int max_out_len, Rng& rng);

// ---------------------------------------------------------------------------
// temperature calibration
// ---------------------------------------------------------------------------

struct CalibrationResult {
  double tau = 0.0;
  double overlap = 0.0;
  int iterations = 0;
  bool within_tolerance = false;
};

class CalibrationRangeError : public std::runtime_error {
 public:
  CalibrationRangeError(double lo_overlap, double hi_overlap, double tau_lo, double tau_hi,
                        double target)
      : std::runtime_error("calibration target " + std::to_string(target) +
                           " outside achievable overlap interval [" +
                           std::to_string(lo_overlap) + ", " + std::to_string(hi_overlap) +
                           "] for tau in [" + std::to_string(tau_lo) + ", " +
                           std::to_string(tau_hi) + "]"),
        lo_overlap(lo_overlap),
        hi_overlap(hi_overlap),
        tau_lo(tau_lo),
        tau_hi(tau_hi) {}
  double lo_overlap, hi_overlap, tau_lo, tau_hi;
};

// Bisection over tau assuming overlap decreases with temperature. Stops as
// soon as |overlap - target| <= tolerance or after max_iter evaluations;
// unreachable targets raise CalibrationRangeError with the achievable
// interval endpoints.
CalibrationResult calibrate_temperature(const std::function<double(double)>& overlap_at_tau,
                                        double target, double tolerance, int max_iter = 20,
                                        double tau_lo = 0.1, double tau_hi = 3.0);

// Mean self-BLEU of sampled generations against their inputs; the sampling
// seed per sentence is fixed across tau (common random numbers).
std::function<double(double)> model_overlap_fn(const Model& model, const Vocabulary& vocab,
                                               const std::vector<TokenSequence>& sample,
                                               std::uint64_t seed, int max_out_len);

// ---------------------------------------------------------------------------
// pair filtering & augmentation
// ---------------------------------------------------------------------------

// Keeps pairs with token-length ratio max/min strictly under max_ratio.
std::vector<std::pair<TokenSequence, TokenSequence>> filter_pairs(
    const std::vector<std::pair<TokenSequence, TokenSequence>>& pairs, double max_ratio);

// Doubles the corpus: every example contributes itself plus a sampled
// paraphrase with the same label, adjacent in the output.
std::vector<LabeledExample> augment_corpus(const Model& model, const Vocabulary& vocab,
                                           const std::vector<LabeledExample>& corpus,
                                           double temperature, std::uint64_t seed,
                                           int max_out_len);

}  // namespace rvq
