#pragma once

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rvq/codebook.hpp"
#include "rvq/graph.hpp"
#include "rvq/quantizer.hpp"
#include "rvq/rng.hpp"
#include "rvq/types.hpp"
#include "rvq/vocab.hpp"

namespace rvq {

enum class Variant { ResidualVqvae, PlainVqvae, DnAe };

inline std::string variant_name(Variant v) {
  switch (v) {
    case Variant::ResidualVqvae: return "residual-vqvae";
    case Variant::PlainVqvae: return "plain-vqvae";
    case Variant::DnAe: return "dn-ae";
  }
  return "residual-vqvae";
}

inline Variant variant_from_name(const std::string& s) {
  if (s == "residual-vqvae") return Variant::ResidualVqvae;
  if (s == "plain-vqvae") return Variant::PlainVqvae;
  if (s == "dn-ae") return Variant::DnAe;
  throw std::invalid_argument("unknown variant: " + s);
}

struct ModelConfig {
  int d_model = 64;
  int n_layers = 2;
  int n_attn_heads = 4;
  int d_ff = 256;
  int latent_positions = 4;  // L appended fixed positions
  int quant_heads = 2;       // H quantizer heads
  int codebook_size = 256;   // K
  float gate_init = 0.0f;    // unconstrained g; alpha = sigmoid(g)
  int max_len = 32;
  bool char_level = false;
  bool per_head_gate = false;
  int vocab_size = 0;

  // The L*d_model encoder output splits into H contiguous head vectors.
  int d_latent_head() const { return latent_positions * d_model / quant_heads; }

  void validate() const {
    if (d_model <= 0 || n_layers <= 0 || d_ff <= 0 || max_len <= 0)
      throw std::invalid_argument("model config: dimensions must be positive");
    if (n_attn_heads <= 0 || d_model % n_attn_heads != 0)
      throw std::invalid_argument("model config: d_model must be divisible by attention heads");
    if (latent_positions <= 0 || quant_heads <= 0 ||
        (latent_positions * d_model) % quant_heads != 0)
      throw std::invalid_argument(
          "model config: L*d_model must split into H equal head vectors");
    if (codebook_size < 2) throw std::invalid_argument("model config: K must be >= 2");
    if (vocab_size < Vocabulary::kReserved)
      throw std::invalid_argument("model config: vocabulary not set");
  }
};

namespace streams {
constexpr std::uint64_t kModelInit = 1;
constexpr std::uint64_t kCodebookInit = 2;
constexpr std::uint64_t kBatch = 3;
constexpr std::uint64_t kNoise = 4;
constexpr std::uint64_t kDeadCode = 5;
constexpr std::uint64_t kGenerate = 6;
}  // namespace streams

// H head-vectors extracted from the encoder's fixed positions; the decoder's
// attention memory. Pre-bottleneck rows are e_h, post-bottleneck rows z_h.
template <typename S>
struct LatentMatrixT {
  MatT<S> heads;  // H x d_latent_head
  bool post_bottleneck = false;
};

using LatentMatrix = LatentMatrixT<float>;

template <typename S>
struct AttentionBlockT {
  VarT<S> wq, bq, wk, bk, wv, bv, wo, bo;
};

template <typename S>
struct EncoderLayerT {
  AttentionBlockT<S> attn;
  VarT<S> ln1_g, ln1_b;
  VarT<S> ff1_w, ff1_b, ff2_w, ff2_b;
  VarT<S> ln2_g, ln2_b;
};

template <typename S>
struct DecoderLayerT {
  AttentionBlockT<S> self_attn;
  VarT<S> ln1_g, ln1_b;
  AttentionBlockT<S> cross_attn;  // wk/wv map latent rows (d_latent_head) to d_model
  VarT<S> ln2_g, ln2_b;
  VarT<S> ff1_w, ff1_b, ff2_w, ff2_b;
  VarT<S> ln3_g, ln3_b;
};

template <typename S>
struct ModelT {
  ModelConfig cfg;
  Variant variant = Variant::ResidualVqvae;

  VarT<S> tok_emb;     // V x d_model
  VarT<S> latent_emb;  // L x d_model, learned slot embeddings (no positional code)
  std::vector<EncoderLayerT<S>> encoder;
  std::vector<DecoderLayerT<S>> decoder;
  VarT<S> out_w, out_b;  // d_model x V, 1 x V
  ResidualGateT<S> gate;
  CodebookT<S> codebook;
  MatT<S> pos_enc;  // sinusoidal table, (max_len + 2) x d_model

  std::vector<std::pair<std::string, VarT<S>>> params;  // gradient-trained leaves

  static ModelT init(const ModelConfig& cfg, Variant variant, std::uint64_t seed);
};

using Model = ModelT<float>;

namespace detail {

template <typename S>
MatT<S> sinusoidal_positions(Index rows, Index d_model) {
  MatT<S> pe(rows, d_model);
  for (Index pos = 0; pos < rows; ++pos) {
    for (Index i = 0; i < d_model; ++i) {
      const double exponent = static_cast<double>(2 * (i / 2)) / static_cast<double>(d_model);
      const double angle = static_cast<double>(pos) / std::pow(10000.0, exponent);
      pe(pos, i) = static_cast<S>((i % 2 == 0) ? std::sin(angle) : std::cos(angle));
    }
  }
  return pe;
}

template <typename S>
MatT<S> xavier_uniform(Index rows, Index cols, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  MatT<S> m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = static_cast<S>(rng.uniform(-bound, bound));
  return m;
}

template <typename S>
MatT<S> normal_matrix(Index rows, Index cols, double stddev, Rng& rng) {
  MatT<S> m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = static_cast<S>(rng.normal(0.0, stddev));
  return m;
}

// Additive causal mask: 0 on and below the diagonal, -1e9 above. The large
// negative underflows to an exact zero attention weight, which is what makes
// the causality contract bit-exact.
template <typename S>
MatT<S> causal_mask(Index n) {
  MatT<S> m = MatT<S>::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) m(i, j) = static_cast<S>(-1e9);
  return m;
}

}  // namespace detail

template <typename S>
ModelT<S> ModelT<S>::init(const ModelConfig& cfg, Variant variant, std::uint64_t seed) {
  cfg.validate();
  ModelT<S> m;
  m.cfg = cfg;
  m.variant = variant;
  Rng rng = Rng::for_stream(seed, streams::kModelInit);

  auto reg = [&m](const std::string& name, VarT<S> v) {
    m.params.emplace_back(name, v);
    return v;
  };
  auto lin = [&rng, &reg](const std::string& name, Index in, Index out) {
    VarT<S> w = reg(name + ".w", parameter(detail::xavier_uniform<S>(in, out, rng)));
    VarT<S> b = reg(name + ".b", parameter<S>(MatT<S>::Zero(1, out)));
    return std::make_pair(w, b);
  };
  auto norm = [&reg](const std::string& name, Index d, VarT<S>& g, VarT<S>& b) {
    g = reg(name + ".g", parameter<S>(MatT<S>::Ones(1, d)));
    b = reg(name + ".b", parameter<S>(MatT<S>::Zero(1, d)));
  };
  auto attn = [&lin](const std::string& name, Index d_model, Index d_kv) {
    AttentionBlockT<S> blk;
    std::tie(blk.wq, blk.bq) = lin(name + ".q", d_model, d_model);
    std::tie(blk.wk, blk.bk) = lin(name + ".k", d_kv, d_model);
    std::tie(blk.wv, blk.bv) = lin(name + ".v", d_kv, d_model);
    std::tie(blk.wo, blk.bo) = lin(name + ".o", d_model, d_model);
    return blk;
  };

  const double emb_std = 1.0 / std::sqrt(static_cast<double>(cfg.d_model));
  m.tok_emb = reg("embed.tokens",
                  parameter(detail::normal_matrix<S>(cfg.vocab_size, cfg.d_model, emb_std, rng)));
  m.latent_emb = reg("embed.latent_slots",
                     parameter(detail::normal_matrix<S>(cfg.latent_positions, cfg.d_model,
                                                        emb_std, rng)));

  for (int l = 0; l < cfg.n_layers; ++l) {
    const std::string p = "encoder." + std::to_string(l);
    EncoderLayerT<S> layer;
    layer.attn = attn(p + ".attn", cfg.d_model, cfg.d_model);
    norm(p + ".ln1", cfg.d_model, layer.ln1_g, layer.ln1_b);
    std::tie(layer.ff1_w, layer.ff1_b) = lin(p + ".ff1", cfg.d_model, cfg.d_ff);
    std::tie(layer.ff2_w, layer.ff2_b) = lin(p + ".ff2", cfg.d_ff, cfg.d_model);
    norm(p + ".ln2", cfg.d_model, layer.ln2_g, layer.ln2_b);
    m.encoder.push_back(std::move(layer));
  }
  for (int l = 0; l < cfg.n_layers; ++l) {
    const std::string p = "decoder." + std::to_string(l);
    DecoderLayerT<S> layer;
    layer.self_attn = attn(p + ".self", cfg.d_model, cfg.d_model);
    norm(p + ".ln1", cfg.d_model, layer.ln1_g, layer.ln1_b);
    layer.cross_attn = attn(p + ".cross", cfg.d_model, cfg.d_latent_head());
    norm(p + ".ln2", cfg.d_model, layer.ln2_g, layer.ln2_b);
    std::tie(layer.ff1_w, layer.ff1_b) = lin(p + ".ff1", cfg.d_model, cfg.d_ff);
    std::tie(layer.ff2_w, layer.ff2_b) = lin(p + ".ff2", cfg.d_ff, cfg.d_model);
    norm(p + ".ln3", cfg.d_model, layer.ln3_g, layer.ln3_b);
    m.decoder.push_back(std::move(layer));
  }
  std::tie(m.out_w, m.out_b) = lin("out", cfg.d_model, cfg.vocab_size);

  AlphaMode mode = AlphaMode::Free;
  if (variant == Variant::PlainVqvae) mode = AlphaMode::ForcedZero;
  m.gate = ResidualGateT<S>::create(static_cast<S>(cfg.gate_init), S(1), mode, cfg.quant_heads,
                                    cfg.per_head_gate);
  m.params.emplace_back("gate.g", m.gate.g);

  m.codebook = CodebookT<S>::create(cfg.codebook_size, cfg.d_latent_head());
  m.pos_enc = detail::sinusoidal_positions<S>(cfg.max_len + 2, cfg.d_model);
  return m;
}

// ---------------------------------------------------------------------------
// forward
// ---------------------------------------------------------------------------

template <typename S>
VarT<S> linear(const VarT<S>& x, const VarT<S>& w, const VarT<S>& b) {
  return add(matmul(x, w), b);
}

template <typename S>
VarT<S> multi_head_attention(const VarT<S>& queries, const VarT<S>& memory,
                             const AttentionBlockT<S>& blk, int n_heads,
                             const MatT<S>* mask = nullptr) {
  const Index d_model = blk.wq.cols();
  const Index dh = d_model / n_heads;
  const S inv_sqrt_dh = static_cast<S>(1.0 / std::sqrt(static_cast<double>(dh)));
  VarT<S> q = linear(queries, blk.wq, blk.bq);
  VarT<S> k = linear(memory, blk.wk, blk.bk);
  VarT<S> v = linear(memory, blk.wv, blk.bv);
  std::vector<VarT<S>> heads;
  heads.reserve(static_cast<std::size_t>(n_heads));
  for (int h = 0; h < n_heads; ++h) {
    VarT<S> qh = slice_cols(q, h * dh, dh);
    VarT<S> kh = slice_cols(k, h * dh, dh);
    VarT<S> vh = slice_cols(v, h * dh, dh);
    VarT<S> scores = scale(matmul(qh, transpose(kh)), inv_sqrt_dh);
    if (mask != nullptr) scores = add(scores, constant(MatT<S>(*mask)));
    heads.push_back(matmul(softmax_rows(scores), vh));
  }
  return linear(concat_cols(heads), blk.wo, blk.bo);
}

template <typename S>
VarT<S> feed_forward(const VarT<S>& x, const VarT<S>& w1, const VarT<S>& b1, const VarT<S>& w2,
                     const VarT<S>& b2) {
  return linear(relu(linear(x, w1, b1)), w2, b2);
}

// Encoder over the token sequence extended with the L latent slots; returns
// the final-layer states of those slots reshaped into H head vectors.
template <typename S>
VarT<S> encode_var(const ModelT<S>& m, const std::vector<int>& ids) {
  if (ids.empty()) throw std::invalid_argument("encode: empty sequence");
  if (static_cast<int>(ids.size()) > m.cfg.max_len)
    throw std::invalid_argument("encode: sequence exceeds max input length");
  const Index t = static_cast<Index>(ids.size());
  VarT<S> emb = scale(embedding(m.tok_emb, ids), static_cast<S>(std::sqrt(double(m.cfg.d_model))));
  emb = add(emb, constant(MatT<S>(m.pos_enc.topRows(t))));
  VarT<S> x = concat_rows(emb, m.latent_emb);
  for (const auto& layer : m.encoder) {
    VarT<S> a = multi_head_attention(x, x, layer.attn, m.cfg.n_attn_heads);
    x = layer_norm(add(x, a), layer.ln1_g, layer.ln1_b);
    VarT<S> f = feed_forward(x, layer.ff1_w, layer.ff1_b, layer.ff2_w, layer.ff2_b);
    x = layer_norm(add(x, f), layer.ln2_g, layer.ln2_b);
  }
  VarT<S> latent = slice_rows(x, t, m.cfg.latent_positions);
  return reshape(latent, m.cfg.quant_heads, m.cfg.d_latent_head());
}

// Decoder hidden states for the given input ids attending over the latent
// memory z (H x d_latent_head).
template <typename S>
VarT<S> decoder_hidden(const ModelT<S>& m, const VarT<S>& z, const std::vector<int>& input_ids) {
  const Index t = static_cast<Index>(input_ids.size());
  const MatT<S> mask = detail::causal_mask<S>(t);
  VarT<S> x = scale(embedding(m.tok_emb, input_ids),
                    static_cast<S>(std::sqrt(double(m.cfg.d_model))));
  x = add(x, constant(MatT<S>(m.pos_enc.topRows(t))));
  for (const auto& layer : m.decoder) {
    VarT<S> a = multi_head_attention(x, x, layer.self_attn, m.cfg.n_attn_heads, &mask);
    x = layer_norm(add(x, a), layer.ln1_g, layer.ln1_b);
    VarT<S> c = multi_head_attention(x, z, layer.cross_attn, m.cfg.n_attn_heads);
    x = layer_norm(add(x, c), layer.ln2_g, layer.ln2_b);
    VarT<S> f = feed_forward(x, layer.ff1_w, layer.ff1_b, layer.ff2_w, layer.ff2_b);
    x = layer_norm(add(x, f), layer.ln3_g, layer.ln3_b);
  }
  return x;
}

// Teacher-forced logits: row t scores target position t of (y, EOS).
template <typename S>
VarT<S> decoder_logits(const ModelT<S>& m, const VarT<S>& z, const std::vector<int>& y_ids) {
  if (y_ids.empty()) throw std::invalid_argument("decoder_logits: empty target");
  std::vector<int> input;
  input.reserve(y_ids.size() + 1);
  input.push_back(Vocabulary::kBos);
  input.insert(input.end(), y_ids.begin(), y_ids.end());
  return linear(decoder_hidden(m, z, input), m.out_w, m.out_b);
}

template <typename S>
std::vector<int> targets_with_eos(const std::vector<int>& y_ids) {
  std::vector<int> t = y_ids;
  t.push_back(Vocabulary::kEos);
  return t;
}

// Next-token distributions at every prefix position (row i conditions on
// prefix[0..i]). The prefix must begin with BOS.
template <typename S>
MatT<S> decode_distributions(const ModelT<S>& m, const LatentMatrixT<S>& z,
                             const std::vector<int>& prefix) {
  if (prefix.empty() || prefix.front() != Vocabulary::kBos)
    throw std::invalid_argument("decode_step: prefix must begin with BOS");
  NoGradGuard ng;
  VarT<S> logits = linear(decoder_hidden(m, constant(MatT<S>(z.heads)), prefix), m.out_w, m.out_b);
  return softmax_rows(logits).value();
}

// Distribution over the token following the full prefix.
template <typename S>
RowT<S> decode_step(const ModelT<S>& m, const LatentMatrixT<S>& z, const std::vector<int>& prefix) {
  MatT<S> dists = decode_distributions(m, z, prefix);
  return dists.row(dists.rows() - 1);
}

// log P(y | z), base e, summed over positions of (y, EOS); always <= 0.
template <typename S>
double sequence_log_prob(const ModelT<S>& m, const LatentMatrixT<S>& z,
                         const std::vector<int>& y_ids) {
  if (y_ids.empty()) throw std::invalid_argument("sequence_log_prob: empty target");
  NoGradGuard ng;
  VarT<S> logits = decoder_logits(m, constant(MatT<S>(z.heads)), y_ids);
  const std::vector<int> targets = targets_with_eos<S>(y_ids);
  const MatT<S>& x = logits.value();
  double total = 0.0;
  for (Index i = 0; i < x.rows(); ++i) {
    const double mx = static_cast<double>(x.row(i).maxCoeff());
    double denom = 0.0;
    for (Index j = 0; j < x.cols(); ++j) denom += std::exp(static_cast<double>(x(i, j)) - mx);
    total += static_cast<double>(x(i, targets[static_cast<std::size_t>(i)])) - mx - std::log(denom);
  }
  return total;
}

// Value-level encoder wrapper (inference surface).
template <typename S>
LatentMatrixT<S> encode(const ModelT<S>& m, const TokenSequence& x) {
  NoGradGuard ng;
  LatentMatrixT<S> out;
  out.heads = encode_var(m, x.ids).value();
  out.post_bottleneck = false;
  return out;
}

// Applies the model's bottleneck to a pre-bottleneck latent (inference
// surface). DN-AE feeds the continuous latent straight through.
template <typename S>
LatentMatrixT<S> apply_bottleneck(const ModelT<S>& m, const LatentMatrixT<S>& pre) {
  if (pre.post_bottleneck)
    throw std::invalid_argument("apply_bottleneck: latent is already post-bottleneck");
  LatentMatrixT<S> out;
  out.post_bottleneck = true;
  if (m.variant == Variant::DnAe) {
    out.heads = pre.heads;
    return out;
  }
  NoGradGuard ng;
  auto [z, qr] = quantize_combine(constant(MatT<S>(pre.heads)), m.codebook, m.gate);
  out.heads = z.value();
  return out;
}

}  // namespace rvq
