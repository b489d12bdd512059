#include "rvq/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace rvq {

namespace {

using nlohmann::json;

json to_json_obj(const RunConfig& c) {
  json j;
  j["model"] = {{"d_model", c.model.d_model},
                {"n_layers", c.model.n_layers},
                {"n_attn_heads", c.model.n_attn_heads},
                {"d_ff", c.model.d_ff},
                {"latent_positions", c.model.latent_positions},
                {"quant_heads", c.model.quant_heads},
                {"codebook_size", c.model.codebook_size},
                {"gate_init", c.model.gate_init},
                {"max_len", c.model.max_len},
                {"char_level", c.model.char_level},
                {"per_head_gate", c.model.per_head_gate},
                {"vocab_size", c.model.vocab_size}};
  j["train"] = {{"batch_size", c.train.batch_size},
                {"total_steps", c.train.total_steps},
                {"warmup_steps", c.train.schedule.warmup_steps},
                {"lr_scale", c.train.schedule.scale},
                {"beta", c.train.beta},
                {"commitment", c.train.commitment},
                {"lambda", c.train.lambda},
                {"drop_p", c.train.drop_p},
                {"shuffle_window", c.train.shuffle_window},
                {"seed", c.train.seed},
                {"adam_beta1", c.train.adam.beta1},
                {"adam_beta2", c.train.adam.beta2},
                {"adam_eps", c.train.adam.eps},
                {"clip_norm", c.train.clip_norm},
                {"dead_code_steps", c.train.dead_code_steps},
                {"warmup_sentences", c.train.warmup_sentences},
                {"checkpoint_every", c.train.checkpoint_every}};
  j["variant"] = variant_name(c.variant);
  j["alpha_fixed"] = c.alpha_fixed;
  j["eval"] = {{"temperature", c.temperature},
               {"target_bleu", c.target_bleu},
               {"tolerance", c.tolerance},
               {"max_len_ratio", c.max_len_ratio},
               {"features", c.features},
               {"length_normalize", c.length_normalize}};
  j["vocab"] = {{"min_count", c.min_count}, {"max_vocab", c.max_vocab}};
  return j;
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void from_json_obj(const json& j, RunConfig& c) {
  if (j.contains("model")) {
    const json& m = j.at("model");
    maybe(m, "d_model", c.model.d_model);
    maybe(m, "n_layers", c.model.n_layers);
    maybe(m, "n_attn_heads", c.model.n_attn_heads);
    maybe(m, "d_ff", c.model.d_ff);
    maybe(m, "latent_positions", c.model.latent_positions);
    maybe(m, "quant_heads", c.model.quant_heads);
    maybe(m, "codebook_size", c.model.codebook_size);
    maybe(m, "gate_init", c.model.gate_init);
    maybe(m, "max_len", c.model.max_len);
    maybe(m, "char_level", c.model.char_level);
    maybe(m, "per_head_gate", c.model.per_head_gate);
    maybe(m, "vocab_size", c.model.vocab_size);
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    maybe(t, "batch_size", c.train.batch_size);
    maybe(t, "total_steps", c.train.total_steps);
    maybe(t, "warmup_steps", c.train.schedule.warmup_steps);
    maybe(t, "lr_scale", c.train.schedule.scale);
    maybe(t, "beta", c.train.beta);
    maybe(t, "commitment", c.train.commitment);
    maybe(t, "lambda", c.train.lambda);
    maybe(t, "drop_p", c.train.drop_p);
    maybe(t, "shuffle_window", c.train.shuffle_window);
    maybe(t, "seed", c.train.seed);
    maybe(t, "adam_beta1", c.train.adam.beta1);
    maybe(t, "adam_beta2", c.train.adam.beta2);
    maybe(t, "adam_eps", c.train.adam.eps);
    maybe(t, "clip_norm", c.train.clip_norm);
    maybe(t, "dead_code_steps", c.train.dead_code_steps);
    maybe(t, "warmup_sentences", c.train.warmup_sentences);
    maybe(t, "checkpoint_every", c.train.checkpoint_every);
  }
  if (j.contains("variant")) c.variant = variant_from_name(j.at("variant").get<std::string>());
  maybe(j, "alpha_fixed", c.alpha_fixed);
  if (j.contains("eval")) {
    const json& e = j.at("eval");
    maybe(e, "temperature", c.temperature);
    maybe(e, "target_bleu", c.target_bleu);
    maybe(e, "tolerance", c.tolerance);
    maybe(e, "max_len_ratio", c.max_len_ratio);
    maybe(e, "features", c.features);
    maybe(e, "length_normalize", c.length_normalize);
  }
  if (j.contains("vocab")) {
    const json& v = j.at("vocab");
    maybe(v, "min_count", c.min_count);
    maybe(v, "max_vocab", c.max_vocab);
  }
}

}  // namespace

std::string RunConfig::to_json() const { return to_json_obj(*this).dump(); }

RunConfig RunConfig::from_json(const std::string& js) {
  RunConfig c;
  from_json_obj(json::parse(js), c);
  return c;
}

void RunConfig::merge_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("invalid config file " + path + ": " + e.what());
  }
  from_json_obj(j, *this);
}

std::uint64_t RunConfig::config_hash() const { return fnv1a(to_json()); }

std::string RunConfig::report_header(std::uint64_t seed) const {
  std::ostringstream os;
  os << "config=" << std::hex << config_hash() << std::dec << " seed=" << seed;
  return os.str();
}

AlphaMode RunConfig::gate_mode() const {
  if (variant == Variant::PlainVqvae) return AlphaMode::ForcedZero;
  if (alpha_fixed == "0") return AlphaMode::ForcedZero;
  if (alpha_fixed == "1") return AlphaMode::ForcedOne;
  if (alpha_fixed == "free") return AlphaMode::Free;
  throw std::invalid_argument("alpha-fixed must be one of 0, 1, free");
}

void RunConfig::apply_gate_mode(Model& m) const { m.gate.mode = gate_mode(); }

}  // namespace rvq
