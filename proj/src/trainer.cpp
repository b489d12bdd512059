#include "rvq/trainer.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <stdexcept>

namespace rvq {

void TrainReport::save_tsv(const std::string& path, const std::string& header) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write train report: " + path);
  out << "# " << header << "\n";
  out << "step\tnll\tcommit\tpenalty\talpha\tusage_entropy\tlr\n";
  char buf[64];
  for (const auto& r : records) {
    out << r.step;
    for (double v : {r.nll, r.commit, r.penalty, r.alpha, r.usage_entropy, r.lr}) {
      std::snprintf(buf, sizeof buf, "%.8g", v);
      out << '\t' << buf;
    }
    out << '\n';
  }
}

Trainer::Trainer(Model& model, const TrainConfig& cfg) : model_(model), cfg_(cfg) {
  cfg_.schedule.d_model = model.cfg.d_model;
  adam_.reserve(model_.params.size());
  for (const auto& [name, p] : model_.params)
    adam_.push_back(AdamState::zeros(p.rows(), p.cols(), cfg_.adam));
}

void Trainer::init_codebook_from(const std::vector<TokenSequence>& corpus) {
  if (model_.variant == Variant::DnAe) return;
  const std::size_t n =
      std::min<std::size_t>(corpus.size(), static_cast<std::size_t>(cfg_.warmup_sentences));
  Mat warmup(static_cast<Index>(n) * model_.cfg.quant_heads, model_.cfg.d_latent_head());
  {
    NoGradGuard ng;
    for (std::size_t i = 0; i < n; ++i) {
      warmup.middleRows(static_cast<Index>(i) * model_.cfg.quant_heads, model_.cfg.quant_heads) =
          encode_var(model_, corpus[i].ids).value();
    }
  }
  Rng rng = Rng::for_stream(cfg_.seed, streams::kCodebookInit);
  init_codebook(model_.codebook, warmup, rng);
}

TrainRecord Trainer::step(const std::vector<TokenSequence>& corpus) {
  if (corpus.empty()) throw std::invalid_argument("train step: empty corpus");
  Rng rng = Rng::for_stream(cfg_.seed, streams::kBatch, static_cast<std::uint64_t>(step_ + 1));
  std::vector<const TokenSequence*> batch;
  batch.reserve(static_cast<std::size_t>(cfg_.batch_size));
  for (int b = 0; b < cfg_.batch_size; ++b) batch.push_back(&corpus[rng.index(corpus.size())]);
  return step_batch(batch);
}

TrainRecord Trainer::step_batch(const std::vector<const TokenSequence*>& batch) {
  if (batch.empty()) throw std::invalid_argument("train step: empty batch");
  const long s = step_ + 1;

  // DN-AE reconstructs the clean sentence from a noised input.
  std::vector<std::vector<int>> noised;
  std::vector<const std::vector<int>*> inputs, targets;
  if (model_.variant == Variant::DnAe) {
    Rng noise_rng = Rng::for_stream(cfg_.seed, streams::kNoise, static_cast<std::uint64_t>(s));
    for (const auto* seq : batch)
      noised.push_back(noise_sequence(*seq, noise_rng, cfg_.drop_p, cfg_.shuffle_window).ids);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      inputs.push_back(&noised[i]);
      targets.push_back(&batch[i]->ids);
    }
  } else {
    for (const auto* seq : batch) {
      inputs.push_back(&seq->ids);
      targets.push_back(&seq->ids);
    }
  }

  BatchLossT<float> loss =
      batch_loss(model_, inputs, targets, static_cast<float>(cfg_.beta), cfg_.commitment);
  quantizer_calls_ += loss.quantizer_calls;
  for (std::size_t i = 0; i < loss.sentence_nll.size(); ++i) {
    if (!std::isfinite(loss.sentence_nll[i]))
      throw std::runtime_error("train step " + std::to_string(s) +
                               ": NaN loss on sentence: " + batch[i]->text);
  }

  backward(loss.total);

  // Global-norm gradient clipping.
  double norm2 = 0.0;
  std::vector<Mat> grads(model_.params.size());
  for (std::size_t i = 0; i < model_.params.size(); ++i) {
    grads[i] = model_.params[i].second.grad();
    for (Index r = 0; r < grads[i].rows(); ++r)
      for (Index c = 0; c < grads[i].cols(); ++c)
        norm2 += static_cast<double>(grads[i](r, c)) * static_cast<double>(grads[i](r, c));
  }
  last_grad_norm_ = std::sqrt(norm2);
  if (cfg_.clip_norm > 0.0 && last_grad_norm_ > cfg_.clip_norm) {
    const float scale_factor = static_cast<float>(cfg_.clip_norm / last_grad_norm_);
    for (auto& g : grads) g *= scale_factor;
  }

  const double lr = noam_lr(s, cfg_.schedule);
  for (std::size_t i = 0; i < model_.params.size(); ++i)
    adam_step(model_.params[i].first, model_.params[i].second.node().value, grads[i], adam_[i],
              lr);

  double entropy = 0.0;
  if (model_.variant != Variant::DnAe) {
    ema_update(model_.codebook, loss.assignments);
    Rng dead_rng = Rng::for_stream(cfg_.seed, streams::kDeadCode, static_cast<std::uint64_t>(s));
    const int reseeded =
        reseed_dead_codes(model_.codebook, loss.encoder_heads, cfg_.dead_code_steps, dead_rng);
    if (reseeded > 0)
      std::cerr << "step " << s << ": reseeded " << reseeded << " dead codebook entries\n";
    entropy = assignment_entropy(loss.assignments, model_.codebook.size());
  }

  step_ = s;
  TrainRecord rec;
  rec.step = s;
  rec.nll = static_cast<double>(loss.nll.scalar());
  rec.commit = static_cast<double>(loss.commit.scalar());
  rec.penalty = static_cast<double>(loss.penalty.scalar());
  double alpha = 0.0;
  if (model_.variant != Variant::DnAe) {
    for (Index h = 0; h < model_.cfg.quant_heads; ++h)
      alpha += static_cast<double>(model_.gate.alpha(h));
    alpha /= static_cast<double>(model_.cfg.quant_heads);
  }
  rec.alpha = alpha;
  rec.usage_entropy = entropy;
  rec.lr = lr;
  return rec;
}

double assignment_entropy(const std::vector<std::pair<Index, RowT<float>>>& assignments,
                          Index codebook_size) {
  if (assignments.empty()) return 0.0;
  std::vector<double> counts(static_cast<std::size_t>(codebook_size), 0.0);
  for (const auto& [idx, e] : assignments) counts[static_cast<std::size_t>(idx)] += 1.0;
  const double total = static_cast<double>(assignments.size());
  double h = 0.0;
  for (double c : counts) {
    if (c <= 0.0) continue;
    const double p = c / total;
    h -= p * std::log(p);
  }
  return h;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

TokenSequence truncate_sequence(TokenSequence seq, int max_len, bool* truncated) {
  if (static_cast<int>(seq.ids.size()) > max_len) {
    seq.ids.resize(static_cast<std::size_t>(max_len));
    if (truncated) *truncated = true;
  }
  return seq;
}

std::vector<TokenSequence> load_corpus(const std::string& path, const Vocabulary& vocab,
                                       int max_len, CorpusStats* stats) {
  CorpusStats local;
  std::vector<TokenSequence> corpus;
  for (const auto& line : read_lines(path)) {
    TokenSequence seq = vocab.encode_text(line);
    if (seq.ids.empty()) {
      ++local.skipped_empty;
      continue;
    }
    bool truncated = false;
    seq = truncate_sequence(std::move(seq), max_len, &truncated);
    if (truncated) ++local.truncated;
    ++local.kept;
    corpus.push_back(std::move(seq));
  }
  if (local.truncated > 0)
    std::cerr << "warning: right-truncated " << local.truncated << " sentences longer than "
              << max_len << " tokens in " << path << "\n";
  if (local.skipped_empty > 0)
    std::cerr << "warning: skipped " << local.skipped_empty << " empty lines in " << path << "\n";
  if (stats) *stats = local;
  return corpus;
}

}  // namespace rvq
