#include <CLI11.hpp>

#include <iostream>

#include "rvq/cli.hpp"

namespace rvq::cli {

namespace {

void add_eval_flags(CLI::App* cmd, EvalArgs& args) {
  cmd->add_option("--checkpoint", args.checkpoint, "trained model checkpoint")->required();
  cmd->add_option("--vocab", args.vocab, "vocabulary file (one token per line)")->required();
  cmd->add_option("--out", args.out, "report path (default stdout)");
  cmd->add_option("--seed", args.seed, "random seed echoed in the report header");
  cmd->add_flag("--length-normalize", args.length_normalize,
                "use per-token conditional scores");
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"residual vector-quantized sequence autoencoder for monolingual paraphrasing"};
  app.require_subcommand(1);

  // train
  TrainArgs train;
  std::string config_file;
  // Config-file values sit between defaults and flags, so the file is merged
  // before CLI11 writes explicitly-passed options over it.
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) {
      train.cfg.merge_json_file(argv[i + 1]);
    } else if (arg.rfind("--config=", 0) == 0) {
      train.cfg.merge_json_file(arg.substr(9));
    }
  }
  std::string variant = variant_name(train.cfg.variant);
  auto* t = app.add_subcommand("train", "train a model on a one-sentence-per-line corpus");
  t->add_option("--corpus", train.corpus, "training corpus")->required();
  t->add_option("--outdir", train.outdir, "output directory")->required();
  t->add_option("--config", config_file, "JSON config file (overridden by flags)");
  t->add_option("--resume", train.resume, "checkpoint to continue from");
  t->add_option("--vocab", train.vocab_path, "vocabulary file (default <outdir>/vocab.txt)");
  t->add_option("--seed", train.cfg.train.seed, "training seed");
  t->add_option("--variant", variant, "residual-vqvae | plain-vqvae | dn-ae");
  t->add_option("--alpha-fixed", train.cfg.alpha_fixed, "force alpha: 0 | 1 | free");
  t->add_option("--steps", train.cfg.train.total_steps, "total training steps");
  t->add_option("--batch-size", train.cfg.train.batch_size, "sentences per step");
  t->add_option("--d-model", train.cfg.model.d_model, "model width");
  t->add_option("--layers", train.cfg.model.n_layers, "encoder/decoder layers");
  t->add_option("--attn-heads", train.cfg.model.n_attn_heads, "attention heads");
  t->add_option("--ffn", train.cfg.model.d_ff, "feed-forward width");
  t->add_option("--latent-positions", train.cfg.model.latent_positions,
                "appended fixed positions L");
  t->add_option("--quant-heads", train.cfg.model.quant_heads, "quantizer heads H");
  t->add_option("--codebook-size", train.cfg.model.codebook_size, "codebook entries K");
  t->add_option("--max-len", train.cfg.model.max_len, "max input length (right truncation)");
  t->add_flag("--char-level", train.cfg.model.char_level, "character-level tokenization");
  t->add_option("--warmup", train.cfg.train.schedule.warmup_steps, "learning-rate warmup steps");
  t->add_option("--lr-scale", train.cfg.train.schedule.scale, "learning-rate scale");
  t->add_option("--beta", train.cfg.train.beta, "commitment weight");
  t->add_option("--lambda", train.cfg.train.lambda, "alpha^2 penalty weight");
  t->add_option("--drop-p", train.cfg.train.drop_p, "DN-AE word-drop probability");
  t->add_option("--shuffle-window", train.cfg.train.shuffle_window, "DN-AE shuffle window");
  t->add_option("--checkpoint-every", train.cfg.train.checkpoint_every,
                "periodic checkpoint cadence (0 = final only)");
  t->add_option("--min-count", train.cfg.min_count, "vocabulary frequency cutoff");
  t->add_option("--max-vocab", train.cfg.max_vocab, "vocabulary size cap");

  // score
  EvalArgs score_args;
  std::string score_pairs;
  auto* sc = app.add_subcommand("score", "conditional log-probabilities for sentence pairs");
  add_eval_flags(sc, score_args);
  sc->add_option("--pairs", score_pairs, "TSV (sentence1, sentence2[, label])")->required();

  // rank
  EvalArgs rank_args;
  std::string rank_pairs, rank_pool;
  int negatives = 100;
  auto* rk = app.add_subcommand("rank", "paraphrase ranking against sampled non-paraphrases");
  add_eval_flags(rk, rank_args);
  rk->add_option("--pairs", rank_pairs, "positive pairs TSV")->required();
  rk->add_option("--pool", rank_pool, "distractor pool corpus")->required();
  rk->add_option("--negatives", negatives, "non-paraphrases per pair");

  // identify
  EvalArgs id_args;
  std::string id_pairs, id_test_pairs, id_features = "score-only";
  double id_l2 = 1.0;
  auto* idc = app.add_subcommand("identify", "logistic-regression paraphrase identification");
  add_eval_flags(idc, id_args);
  idc->add_option("--pairs", id_pairs, "labeled training pairs TSV")->required();
  idc->add_option("--test-pairs", id_test_pairs, "held-out pairs (default: report on training)");
  idc->add_option("--features", id_features, "score-only | score+latent");
  idc->add_option("--l2", id_l2, "logistic L2 weight");

  // sts
  EvalArgs sts_args;
  std::string sts_pairs, sts_test_pairs;
  double sts_l2 = 1.0;
  auto* st = app.add_subcommand("sts", "ridge-regression similarity (Pearson report)");
  add_eval_flags(st, sts_args);
  st->add_option("--pairs", sts_pairs, "score-labeled training pairs TSV")->required();
  st->add_option("--test-pairs", sts_test_pairs, "held-out pairs");
  st->add_option("--l2", sts_l2, "ridge L2 weight");

  // generate
  EvalArgs gen_args;
  std::string gen_input, gen_pairs, gen_mode = "greedy";
  double gen_temperature = 1.0;
  double gen_ratio = 1.2;
  int gen_max_len = 0;
  auto* gn = app.add_subcommand("generate", "paraphrase generation (greedy or sampled)");
  add_eval_flags(gn, gen_args);
  gn->add_option("--input", gen_input, "corpus to paraphrase (one sentence per line)");
  gn->add_option("--pairs", gen_pairs, "evaluation pairs TSV (generate from col 1, BLEU vs col 2)");
  gn->add_option("--mode", gen_mode, "greedy | sample");
  gn->add_option("--temperature", gen_temperature, "sampling temperature");
  gn->add_option("--max-out-len", gen_max_len, "generation cap (default: model max length)");
  gn->add_option("--max-len-ratio", gen_ratio, "length-ratio filter for --pairs mode");

  // calibrate
  EvalArgs cal_args;
  std::string cal_input;
  double cal_target = 20.9, cal_tol = 0.5;
  int cal_sample = 100;
  auto* cal = app.add_subcommand("calibrate",
                                 "find the sampling temperature hitting a target self-BLEU");
  add_eval_flags(cal, cal_args);
  cal->add_option("--input", cal_input, "calibration corpus")->required();
  cal->add_option("--target-bleu", cal_target, "target overlap with the input");
  cal->add_option("--tolerance", cal_tol, "acceptable |overlap - target|");
  cal->add_option("--sample-size", cal_sample, "sentences used per temperature probe");

  // augment
  EvalArgs aug_args;
  std::string aug_in;
  double aug_temperature = 1.0;
  auto* ag = app.add_subcommand("augment", "double a labeled corpus by paraphrasing");
  add_eval_flags(ag, aug_args);
  ag->add_option("--labeled", aug_in, "labeled TSV (label, sentence)")->required();
  ag->add_option("--temperature", aug_temperature, "sampling temperature");

  // nbsvm-eval
  std::string nb_train, nb_test, nb_out;
  int nb_order = 3, nb_epochs = 100;
  double nb_reg = 0.1;
  std::uint64_t nb_seed = 1;
  auto* nb = app.add_subcommand("nbsvm-eval", "NB-SVM classification accuracy/F1");
  nb->add_option("--train", nb_train, "labeled training TSV")->required();
  nb->add_option("--test", nb_test, "labeled test TSV")->required();
  nb->add_option("--order", nb_order, "n-gram order");
  nb->add_option("--c", nb_reg, "regularization constant");
  nb->add_option("--epochs", nb_epochs, "training epochs");
  nb->add_option("--out", nb_out, "report path (default stdout)");
  nb->add_option("--seed", nb_seed, "seed echoed in the report header");

  CLI11_PARSE(app, argc, argv);

  try {
    if (t->parsed()) {
      train.cfg.variant = variant_from_name(variant);
      return cmd_train(train);
    }
    if (sc->parsed()) return cmd_score(score_args, score_pairs);
    if (rk->parsed()) return cmd_rank(rank_args, rank_pairs, rank_pool, negatives);
    if (idc->parsed()) return cmd_identify(id_args, id_pairs, id_test_pairs, id_features, id_l2);
    if (st->parsed()) return cmd_sts(sts_args, sts_pairs, sts_test_pairs, sts_l2);
    if (gn->parsed()) {
      if (gen_input.empty() && gen_pairs.empty())
        throw std::runtime_error("generate: provide --input or --pairs");
      return cmd_generate(gen_args, gen_input, gen_mode, gen_temperature, gen_max_len, gen_pairs,
                          gen_ratio);
    }
    if (cal->parsed()) return cmd_calibrate(cal_args, cal_input, cal_target, cal_tol, cal_sample);
    if (ag->parsed()) return cmd_augment(aug_args, aug_in, aug_temperature);
    if (nb->parsed())
      return cmd_nbsvm_eval(nb_train, nb_test, nb_order, nb_reg, nb_epochs, nb_out, nb_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace rvq::cli
