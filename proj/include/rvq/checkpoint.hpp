#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rvq/config.hpp"
#include "rvq/model.hpp"
#include "rvq/optim.hpp"

namespace rvq {

// Binary checkpoint, magic "RVQV1": a text header (config JSON, vocabulary
// hash, step count) followed by named little-endian float32 arrays covering
// every trainable parameter, the codebook with its EMA accumulators, and the
// Adam moments. Round-trips are bit-exact; a vocabulary hash mismatch on
// load is a refusal.
inline constexpr const char* kCheckpointMagic = "RVQV1";

void save_checkpoint(const std::string& path, const Model& model,
                     const std::vector<AdamState>& adam, long step,
                     const RunConfig& config, std::uint64_t vocab_hash);

struct LoadedCheckpoint {
  RunConfig config;
  long step = 0;
  std::uint64_t vocab_hash = 0;
  Model model;
  std::vector<AdamState> adam;  // parallel to model.params
};

LoadedCheckpoint load_checkpoint(const std::string& path, std::uint64_t expected_vocab_hash);

}  // namespace rvq
