#pragma once

#include <cstdint>
#include <string>

#include "rvq/checkpoint.hpp"
#include "rvq/config.hpp"
#include "rvq/vocab.hpp"

namespace rvq::cli {

// Checkpoint plus the vocabulary it was trained with; loading verifies the
// vocabulary-file hash recorded in the checkpoint.
struct ModelBundle {
  Vocabulary vocab;
  LoadedCheckpoint ck;
};

ModelBundle load_bundle(const std::string& checkpoint_path, const std::string& vocab_path);

struct TrainArgs {
  std::string corpus;
  std::string outdir;
  std::string resume;      // checkpoint to continue from
  std::string vocab_path;  // defaults to <outdir>/vocab.txt
  RunConfig cfg;           // defaults + config file + CLI overrides, already merged
};

struct EvalArgs {
  std::string checkpoint;
  std::string vocab;
  std::string out;  // empty = stdout
  std::uint64_t seed = 1;
  bool length_normalize = false;
};

int cmd_train(const TrainArgs& args);
int cmd_score(const EvalArgs& args, const std::string& pairs_path);
int cmd_rank(const EvalArgs& args, const std::string& pairs_path, const std::string& pool_path,
             int negatives);
int cmd_identify(const EvalArgs& args, const std::string& train_pairs,
                 const std::string& test_pairs, const std::string& features, double l2);
int cmd_sts(const EvalArgs& args, const std::string& train_pairs, const std::string& test_pairs,
            double l2);
int cmd_generate(const EvalArgs& args, const std::string& input_path, const std::string& mode,
                 double temperature, int max_out_len, const std::string& pairs_path,
                 double max_len_ratio);
int cmd_calibrate(const EvalArgs& args, const std::string& input_path, double target_bleu,
                  double tolerance, int sample_size);
int cmd_augment(const EvalArgs& args, const std::string& labeled_in, double temperature);
int cmd_nbsvm_eval(const std::string& train_path, const std::string& test_path, int order,
                   double reg, int epochs, const std::string& out, std::uint64_t seed);

int run_cli(int argc, char** argv);

}  // namespace rvq::cli
