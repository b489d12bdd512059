#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rvq/model.hpp"
#include "rvq/noise.hpp"
#include "rvq/optim.hpp"

namespace rvq {

struct TrainConfig {
  int batch_size = 8;
  long total_steps = 1000;
  ScheduleConfig schedule{64, 400, 1.0};
  double beta = 0.25;       // commitment weight
  bool commitment = true;   // strict paper-text minimalism disables this
  double lambda = 1.0;      // alpha^2 penalty weight
  double drop_p = 0.1;      // DN-AE noising
  int shuffle_window = 3;
  std::uint64_t seed = 1;
  AdamConfig adam;
  double clip_norm = 1.0;
  int dead_code_steps = 1000;
  int warmup_sentences = 100;  // codebook-init sample
  long checkpoint_every = 0;   // 0 = final only
};

struct TrainRecord {
  long step = 0;
  double nll = 0.0;
  double commit = 0.0;
  double penalty = 0.0;
  double alpha = 0.0;
  double usage_entropy = 0.0;
  double lr = 0.0;
  double total() const { return nll + commit + penalty; }
};

struct TrainReport {
  std::vector<TrainRecord> records;
  void save_tsv(const std::string& path, const std::string& header) const;
};

// Graph-level loss composition shared by training and gradient verification:
// mean-per-token NLL + beta commitment (mean per sentence) + lambda alpha^2.
template <typename S>
struct BatchLossT {
  VarT<S> total, nll, commit, penalty;
  std::vector<std::pair<Index, RowT<S>>> assignments;  // (code, e_h) pairs for EMA
  MatT<S> encoder_heads;                               // batch head vectors (reseed pool)
  std::vector<double> sentence_nll;                    // per-token NLL per sentence
  long quantizer_calls = 0;
};

template <typename S>
BatchLossT<S> batch_loss(const ModelT<S>& m, const std::vector<const std::vector<int>*>& inputs,
                         const std::vector<const std::vector<int>*>& targets, S beta,
                         bool commitment_enabled) {
  if (inputs.empty() || inputs.size() != targets.size())
    throw std::invalid_argument("batch_loss: empty or mismatched batch");
  BatchLossT<S> out;
  const Index dh = m.cfg.d_latent_head();
  out.encoder_heads.resize(static_cast<Index>(inputs.size()) * m.cfg.quant_heads, dh);

  std::vector<VarT<S>> nll_terms, commit_terms;
  long total_tokens = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    VarT<S> e = encode_var(m, *inputs[i]);
    out.encoder_heads.middleRows(static_cast<Index>(i) * m.cfg.quant_heads, m.cfg.quant_heads) =
        e.value();
    VarT<S> z;
    if (m.variant == Variant::DnAe) {
      z = e;
    } else {
      auto [zq, qr] = quantize_combine(e, m.codebook, m.gate);
      z = zq;
      ++out.quantizer_calls;
      for (Index h = 0; h < m.cfg.quant_heads; ++h)
        out.assignments.emplace_back(qr.indices[static_cast<std::size_t>(h)],
                                     RowT<S>(e.value().row(h)));
      if (commitment_enabled && beta > S(0))
        commit_terms.push_back(commitment_loss(e, qr.quantized, beta));
    }
    const std::vector<int> tgt = targets_with_eos<S>(*targets[i]);
    VarT<S> nll_i = nll_sum(decoder_logits(m, z, *targets[i]), tgt);
    out.sentence_nll.push_back(static_cast<double>(nll_i.scalar()) /
                               static_cast<double>(tgt.size()));
    total_tokens += static_cast<long>(tgt.size());
    nll_terms.push_back(nll_i);
  }

  out.nll = scale(add_many(nll_terms), S(1) / static_cast<S>(total_tokens));
  out.commit = commit_terms.empty()
                   ? scalar_constant<S>(S(0))
                   : scale(add_many(commit_terms), S(1) / static_cast<S>(inputs.size()));
  out.penalty = (m.variant == Variant::DnAe) ? scalar_constant<S>(S(0)) : gate_penalty(m.gate);
  out.total = add(add(out.nll, out.commit), out.penalty);
  return out;
}

// Single-writer training loop over a fixed corpus. Each step's batch and
// noise draws are pure functions of (seed, step), so a resumed run replays
// the exact trajectory.
class Trainer {
 public:
  Trainer(Model& model, const TrainConfig& cfg);

  // Gaussian codebook init scaled to the RMS of the first warmup sentences'
  // encoder outputs; skipped when resuming from a checkpoint.
  void init_codebook_from(const std::vector<TokenSequence>& corpus);

  TrainRecord step(const std::vector<TokenSequence>& corpus);
  TrainRecord step_batch(const std::vector<const TokenSequence*>& batch);

  long current_step() const { return step_; }
  void set_step(long s) { step_ = s; }
  long quantizer_calls() const { return quantizer_calls_; }
  double last_grad_norm() const { return last_grad_norm_; }

  const TrainConfig& config() const { return cfg_; }
  std::vector<AdamState>& adam_states() { return adam_; }

 private:
  Model& model_;
  TrainConfig cfg_;
  std::vector<AdamState> adam_;  // parallel to model_.params
  long step_ = 0;
  long quantizer_calls_ = 0;
  double last_grad_norm_ = 0.0;
};

// One sentence per line, UTF-8. Empty-after-tokenization lines are skipped
// and over-long ones right-truncated; both are counted and warned once.
struct CorpusStats {
  long kept = 0;
  long truncated = 0;
  long skipped_empty = 0;
};

std::vector<std::string> read_lines(const std::string& path);
std::vector<TokenSequence> load_corpus(const std::string& path, const Vocabulary& vocab,
                                       int max_len, CorpusStats* stats = nullptr);
TokenSequence truncate_sequence(TokenSequence seq, int max_len, bool* truncated = nullptr);

double assignment_entropy(const std::vector<std::pair<Index, RowT<float>>>& assignments,
                          Index codebook_size);

}  // namespace rvq
