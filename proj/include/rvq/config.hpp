#pragma once

#include <cstdint>
#include <string>

#include "rvq/model.hpp"
#include "rvq/trainer.hpp"

namespace rvq {

// Effective run configuration: defaults, then config file, then command-line
// overrides. The canonical JSON form is embedded in every checkpoint and
// report header, so a run is reproducible from its artifacts.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  Variant variant = Variant::ResidualVqvae;
  std::string alpha_fixed = "free";  // "0" | "1" | "free"

  // evaluation defaults
  double temperature = 1.0;
  double target_bleu = 20.9;
  double tolerance = 0.5;
  double max_len_ratio = 1.2;
  std::string features = "score-only";
  bool length_normalize = false;

  // vocabulary build
  int min_count = 1;
  int max_vocab = 50000;

  std::string to_json() const;                        // canonical single line
  static RunConfig from_json(const std::string& js);  // full round-trip
  void merge_json_file(const std::string& path);      // partial overrides
  std::uint64_t config_hash() const;
  std::string report_header(std::uint64_t seed) const;

  // Gate mode implied by variant and the alpha-fixed override.
  AlphaMode gate_mode() const;
  void apply_gate_mode(Model& m) const;
};

}  // namespace rvq
