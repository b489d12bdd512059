#include <doctest.h>

#include <cmath>

#include "rvq/model.hpp"
#include "support/toy_corpus.hpp"

using namespace rvq;

namespace {

ModelConfig small_config(int vocab_size) {
  ModelConfig cfg;
  cfg.d_model = 16;
  cfg.n_layers = 2;
  cfg.n_attn_heads = 4;
  cfg.d_ff = 32;
  cfg.latent_positions = 2;
  cfg.quant_heads = 2;
  cfg.codebook_size = 8;
  cfg.max_len = 12;
  cfg.vocab_size = vocab_size;
  return cfg;
}

Model small_model(std::uint64_t seed = 5) {
  return Model::init(small_config(20), Variant::ResidualVqvae, seed);
}

}  // namespace

TEST_CASE("config validation rejects bad head splits") {
  ModelConfig cfg = small_config(20);
  cfg.quant_heads = 3;  // 2*16 not divisible by 3
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = small_config(20);
  cfg.n_attn_heads = 3;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = small_config(20);
  cfg.codebook_size = 1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("encode: deterministic, fixed-size, and input-sensitive") {
  Model m = small_model();
  const std::vector<int> x = {5, 6, 7, 8};

  NoGradGuard ng;
  const Mat e1 = encode_var(m, x).value();
  const Mat e2 = encode_var(m, x).value();
  CHECK((e1 - e2).cwiseAbs().maxCoeff() == 0.0f);  // bit-identical

  // Fixed-size contract across lengths 1..max.
  for (int len = 1; len <= m.cfg.max_len; ++len) {
    std::vector<int> ids(static_cast<std::size_t>(len), 5);
    const Mat e = encode_var(m, ids).value();
    CHECK(e.rows() == m.cfg.quant_heads);
    CHECK(e.cols() == m.cfg.d_latent_head());
  }

  // One-token difference changes the latent.
  std::vector<int> x2 = x;
  x2[2] = 9;
  CHECK((encode_var(m, x2).value() - e1).cwiseAbs().maxCoeff() > 0.0f);

  // Position encoding makes token order matter.
  std::vector<int> x3 = {6, 5, 7, 8};
  CHECK((encode_var(m, x3).value() - e1).cwiseAbs().maxCoeff() > 0.0f);
}

TEST_CASE("encode: empty sequence and over-long input are errors") {
  Model m = small_model();
  CHECK_THROWS_AS(encode_var(m, {}), std::invalid_argument);
  std::vector<int> too_long(static_cast<std::size_t>(m.cfg.max_len + 1), 5);
  CHECK_THROWS_AS(encode_var(m, too_long), std::invalid_argument);
}

TEST_CASE("decode_step: normalized distribution, BOS required, entropy bound") {
  Model m = small_model();
  LatentMatrix z = apply_bottleneck(m, encode(m, TokenSequence{{5, 6, 7}, ""}));

  const Row dist = decode_step(m, z, {Vocabulary::kBos, 5, 6});
  double total = 0.0, entropy = 0.0;
  for (Index j = 0; j < dist.cols(); ++j) {
    total += static_cast<double>(dist(0, j));
    if (dist(0, j) > 0.0f)
      entropy -= static_cast<double>(dist(0, j)) * std::log(static_cast<double>(dist(0, j)));
  }
  CHECK(std::abs(total - 1.0) <= 1e-5);
  CHECK(entropy <= std::log(static_cast<double>(m.cfg.vocab_size)) + 1e-9);

  CHECK_THROWS_AS(decode_step(m, z, {5, 6}), std::invalid_argument);
}

TEST_CASE("decode: appending a token leaves earlier distributions bit-identical") {
  Model m = small_model();
  LatentMatrix z = apply_bottleneck(m, encode(m, TokenSequence{{5, 6, 7, 8}, ""}));

  const std::vector<int> prefix = {Vocabulary::kBos, 5, 6, 7};
  const Mat before = decode_distributions(m, z, prefix);
  std::vector<int> longer = prefix;
  longer.push_back(9);
  const Mat after = decode_distributions(m, z, longer);
  for (Index i = 0; i < before.rows(); ++i)
    for (Index j = 0; j < before.cols(); ++j) CHECK(before(i, j) == after(i, j));

  // Perturbing a later token leaves earlier rows bit-identical too.
  std::vector<int> perturbed = longer;
  perturbed[4] = 11;
  const Mat after2 = decode_distributions(m, z, perturbed);
  for (Index i = 0; i + 1 < after.rows(); ++i)
    for (Index j = 0; j < after.cols(); ++j) CHECK(after(i, j) == after2(i, j));
}

TEST_CASE("sequence_log_prob: uniform decoder scores -(|y|+1) log V") {
  Model m = small_model();
  // Zeroed output projection forces uniform next-token distributions.
  m.out_w.node().value.setZero();
  m.out_b.node().value.setZero();
  LatentMatrix z = apply_bottleneck(m, encode(m, TokenSequence{{5, 6}, ""}));
  const std::vector<int> y = {5, 6, 7};
  const double lp = sequence_log_prob(m, z, y);
  const double expected = -static_cast<double>(y.size() + 1) *
                          std::log(static_cast<double>(m.cfg.vocab_size));
  CHECK(lp == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("sequence_log_prob is non-positive for arbitrary targets") {
  Model m = small_model();
  LatentMatrix z = apply_bottleneck(m, encode(m, TokenSequence{{5, 9, 14}, ""}));
  for (std::uint64_t s = 0; s < 10; ++s) {
    Rng rng(s);
    std::vector<int> y;
    const int len = rng.uniform_int(1, 8);
    for (int i = 0; i < len; ++i) y.push_back(rng.uniform_int(4, 19));
    CHECK(sequence_log_prob(m, z, y) <= 0.0);
  }
}
