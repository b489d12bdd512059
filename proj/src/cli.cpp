#include "rvq/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "rvq/evalsuite.hpp"
#include "rvq/regression.hpp"
#include "rvq/trainer.hpp"
#include "rvq/tsv.hpp"

namespace rvq::cli {

namespace fs = std::filesystem;

namespace {

struct Report {
  std::ofstream file;
  std::ostream* os;

  Report(const std::string& path, const std::string& header) {
    if (path.empty()) {
      os = &std::cout;
    } else {
      file.open(path, std::ios::binary);
      if (!file) throw std::runtime_error("cannot write report: " + path);
      os = &file;
    }
    *os << "# " << header << '\n';
  }
  std::ostream& out() { return *os; }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::vector<TokenSequence> encode_lines(const std::vector<std::string>& lines,
                                        const Vocabulary& vocab, int max_len) {
  std::vector<TokenSequence> out;
  for (const auto& line : lines) {
    TokenSequence seq = vocab.encode_text(line);
    if (seq.ids.empty()) continue;
    out.push_back(truncate_sequence(std::move(seq), max_len));
  }
  return out;
}

}  // namespace

ModelBundle load_bundle(const std::string& checkpoint_path, const std::string& vocab_path) {
  const std::uint64_t vocab_hash = hash_file_bytes(vocab_path);
  LoadedCheckpoint ck = load_checkpoint(checkpoint_path, vocab_hash);
  Vocabulary vocab = Vocabulary::load_file(vocab_path, ck.config.model.char_level);
  if (vocab.size() != ck.config.model.vocab_size)
    throw std::runtime_error("vocabulary size does not match checkpoint config");
  return {std::move(vocab), std::move(ck)};
}

int cmd_train(const TrainArgs& args) {
  if (args.outdir.empty()) throw std::runtime_error("train: --outdir is required");
  fs::create_directories(args.outdir);
  const std::string vocab_path =
      args.vocab_path.empty() ? (fs::path(args.outdir) / "vocab.txt").string() : args.vocab_path;

  RunConfig cfg = args.cfg;
  std::unique_ptr<Model> model;
  std::unique_ptr<Trainer> trainer;
  std::unique_ptr<Vocabulary> vocab;
  long start_step = 0;

  if (!args.resume.empty()) {
    const std::uint64_t vocab_hash = hash_file_bytes(vocab_path);
    LoadedCheckpoint ck = load_checkpoint(args.resume, vocab_hash);
    const long requested_steps = cfg.train.total_steps;
    cfg = ck.config;
    cfg.train.total_steps = std::max(requested_steps, ck.config.train.total_steps);
    vocab = std::make_unique<Vocabulary>(Vocabulary::load_file(vocab_path, cfg.model.char_level));
    model = std::make_unique<Model>(std::move(ck.model));
    trainer = std::make_unique<Trainer>(*model, cfg.train);
    trainer->adam_states() = std::move(ck.adam);
    trainer->set_step(ck.step);
    start_step = ck.step;
  } else {
    const std::vector<std::string> lines = read_lines(args.corpus);
    vocab = std::make_unique<Vocabulary>(
        Vocabulary::build(lines, cfg.model.char_level, cfg.min_count, cfg.max_vocab));
    vocab->save_file(vocab_path);
    cfg.model.vocab_size = vocab->size();
    model = std::make_unique<Model>(Model::init(cfg.model, cfg.variant, cfg.train.seed));
    cfg.apply_gate_mode(*model);
    trainer = std::make_unique<Trainer>(*model, cfg.train);
  }

  CorpusStats stats;
  const std::vector<TokenSequence> corpus =
      load_corpus(args.corpus, *vocab, cfg.model.max_len, &stats);
  if (corpus.empty()) throw std::runtime_error("train: corpus has no usable sentences");
  if (args.resume.empty()) trainer->init_codebook_from(corpus);

  const std::uint64_t vocab_hash = hash_file_bytes(vocab_path);
  const std::string ckpt_path = (fs::path(args.outdir) / "checkpoint.rvq").string();
  TrainReport report;
  for (long s = start_step + 1; s <= cfg.train.total_steps; ++s) {
    TrainRecord rec = trainer->step(corpus);
    report.records.push_back(rec);
    if (s % 100 == 0 || s == cfg.train.total_steps)
      std::cerr << "step " << s << " nll " << fmt(rec.nll) << " commit " << fmt(rec.commit)
                << " penalty " << fmt(rec.penalty) << " alpha " << fmt(rec.alpha) << " lr "
                << rec.lr << "\n";
    if (cfg.train.checkpoint_every > 0 && s % cfg.train.checkpoint_every == 0 &&
        s != cfg.train.total_steps) {
      const std::string path =
          (fs::path(args.outdir) / ("checkpoint-" + std::to_string(s) + ".rvq")).string();
      save_checkpoint(path, *model, trainer->adam_states(), s, cfg, vocab_hash);
    }
  }
  save_checkpoint(ckpt_path, *model, trainer->adam_states(), trainer->current_step(), cfg,
                  vocab_hash);
  report.save_tsv((fs::path(args.outdir) / "train_report.tsv").string(),
                  cfg.report_header(cfg.train.seed));
  std::cerr << "wrote " << ckpt_path << "\n";
  return 0;
}

int cmd_score(const EvalArgs& args, const std::string& pairs_path) {
  ModelBundle bundle = load_bundle(args.checkpoint, args.vocab);
  const Scorer scorer(bundle.ck.model, args.length_normalize);
  const auto rows = read_pairs_tsv(pairs_path);
  Report report(args.out, bundle.ck.config.report_header(args.seed));
  report.out() << "sentence1\tsentence2\tlog_p_y_given_x\tlog_p_x_given_y\n";
  for (const auto& row : rows) {
    const TokenSequence x = bundle.vocab.encode_text(row.sentence1);
    const TokenSequence y = bundle.vocab.encode_text(row.sentence2);
    const double xy = scorer.conditional_score(x, y);
    const double yx = scorer.conditional_score(y, x);
    report.out() << row.sentence1 << '\t' << row.sentence2 << '\t' << fmt(xy) << '\t' << fmt(yx)
                 << '\n';
  }
  return 0;
}

int cmd_rank(const EvalArgs& args, const std::string& pairs_path, const std::string& pool_path,
             int negatives) {
  ModelBundle bundle = load_bundle(args.checkpoint, args.vocab);
  const Scorer scorer(bundle.ck.model, args.length_normalize);
  std::vector<RankTask> tasks;
  for (const auto& row : read_pairs_tsv(pairs_path))
    tasks.push_back({bundle.vocab.encode_text(row.sentence1),
                     bundle.vocab.encode_text(row.sentence2)});
  const std::vector<TokenSequence> pool =
      encode_lines(read_lines(pool_path), bundle.vocab, bundle.ck.config.model.max_len);
  const double fraction =
      rank_eval(model_batch_scorer(scorer), tasks, pool, negatives, args.seed);
  Report report(args.out, bundle.ck.config.report_header(args.seed));
  report.out() << "metric\tvalue\n";
  report.out() << "tasks\t" << tasks.size() << '\n';
  report.out() << "negatives\t" << negatives << '\n';
  report.out() << "rank_fraction\t" << fmt(fraction) << '\n';
  return 0;
}

namespace {

struct PairDataset {
  std::vector<ScoredPair> pairs;
  std::vector<std::string> labels;
};

PairDataset score_pair_file(const Scorer& scorer, const Vocabulary& vocab,
                            const std::string& path, bool require_label) {
  PairDataset ds;
  for (const auto& row : read_pairs_tsv(path)) {
    if (require_label && !row.has_label)
      throw std::runtime_error(path + ": expected a label/score column");
    ds.pairs.push_back(
        scorer.score_pair(vocab.encode_text(row.sentence1), vocab.encode_text(row.sentence2)));
    ds.labels.push_back(row.label);
  }
  return ds;
}

}  // namespace

int cmd_identify(const EvalArgs& args, const std::string& train_pairs,
                 const std::string& test_pairs, const std::string& features, double l2) {
  ModelBundle bundle = load_bundle(args.checkpoint, args.vocab);
  const FeatureMode mode = feature_mode_from_name(features);
  const Scorer scorer(bundle.ck.model, args.length_normalize);

  const PairDataset train = score_pair_file(scorer, bundle.vocab, train_pairs, true);
  if (train.pairs.empty()) throw std::runtime_error("identify: no training pairs");
  Eigen::MatrixXd x(static_cast<Eigen::Index>(train.pairs.size()),
                    identification_features(train.pairs[0], mode).size());
  std::vector<int> y;
  for (std::size_t i = 0; i < train.pairs.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = identification_features(train.pairs[i], mode);
    y.push_back(std::stoi(train.labels[i]) != 0 ? 1 : 0);
  }
  const LinearModel lm = fit_logistic(x, y, l2);

  const PairDataset eval =
      test_pairs.empty() ? train : score_pair_file(scorer, bundle.vocab, test_pairs, true);
  long correct = 0;
  for (std::size_t i = 0; i < eval.pairs.size(); ++i) {
    const int pred = lm.classify(identification_features(eval.pairs[i], mode));
    if (pred == (std::stoi(eval.labels[i]) != 0 ? 1 : 0)) ++correct;
  }
  Report report(args.out, bundle.ck.config.report_header(args.seed));
  report.out() << "metric\tvalue\n";
  report.out() << "pairs\t" << eval.pairs.size() << '\n';
  report.out() << "accuracy\t"
               << fmt(static_cast<double>(correct) / static_cast<double>(eval.pairs.size()))
               << '\n';
  return 0;
}

int cmd_sts(const EvalArgs& args, const std::string& train_pairs, const std::string& test_pairs,
            double l2) {
  ModelBundle bundle = load_bundle(args.checkpoint, args.vocab);
  const Scorer scorer(bundle.ck.model, args.length_normalize);
  const FeatureMode mode = feature_mode_from_name(bundle.ck.config.features);

  const PairDataset train = score_pair_file(scorer, bundle.vocab, train_pairs, true);
  if (train.pairs.empty()) throw std::runtime_error("sts: no training pairs");
  Eigen::MatrixXd x(static_cast<Eigen::Index>(train.pairs.size()),
                    identification_features(train.pairs[0], mode).size());
  Eigen::VectorXd y(static_cast<Eigen::Index>(train.pairs.size()));
  for (std::size_t i = 0; i < train.pairs.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = identification_features(train.pairs[i], mode);
    y(static_cast<Eigen::Index>(i)) = std::stod(train.labels[i]);
  }
  const LinearModel lm = fit_ridge(x, y, l2);

  const PairDataset eval =
      test_pairs.empty() ? train : score_pair_file(scorer, bundle.vocab, test_pairs, true);
  std::vector<double> predictions, labels;
  for (std::size_t i = 0; i < eval.pairs.size(); ++i) {
    predictions.push_back(lm.predict(identification_features(eval.pairs[i], mode)));
    labels.push_back(std::stod(eval.labels[i]));
  }
  Report report(args.out, bundle.ck.config.report_header(args.seed));
  report.out() << "metric\tvalue\n";
  report.out() << "pairs\t" << eval.pairs.size() << '\n';
  report.out() << "pearson\t" << fmt(pearson(predictions, labels)) << '\n';
  return 0;
}

int cmd_generate(const EvalArgs& args, const std::string& input_path, const std::string& mode,
                 double temperature, int max_out_len, const std::string& pairs_path,
                 double max_len_ratio) {
  ModelBundle bundle = load_bundle(args.checkpoint, args.vocab);
  const Model& model = bundle.ck.model;
  const GenMode gen_mode = mode == "greedy" ? GenMode::Greedy : GenMode::Sample;
  if (mode != "greedy" && mode != "sample")
    throw std::runtime_error("generate: --mode must be greedy or sample");
  const int out_len = max_out_len > 0 ? max_out_len : model.cfg.max_len;

  Report report(args.out, bundle.ck.config.report_header(args.seed));
  if (pairs_path.empty()) {
    report.out() << "input\toutput\tlogprob\n";
    const auto lines = read_lines(input_path);
    std::size_t idx = 0;
    for (const auto& line : lines) {
      const TokenSequence x = bundle.vocab.encode_text(line);
      if (x.ids.empty()) continue;
      Rng rng = Rng::for_stream(args.seed, streams::kGenerate, idx++);
      const Generation gen = generate(model, bundle.vocab, x, gen_mode, temperature, out_len, rng);
      report.out() << line << '\t' << gen.seq.text << '\t' << fmt(gen.log_prob) << '\n';
    }
    return 0;
  }

  // Pairs mode: length-ratio filter, generate from sentence1, BLEU vs sentence2.
  std::vector<std::pair<TokenSequence, TokenSequence>> pairs;
  for (const auto& row : read_pairs_tsv(pairs_path))
    pairs.push_back({bundle.vocab.encode_text(row.sentence1),
                     bundle.vocab.encode_text(row.sentence2)});
  const auto kept = filter_pairs(pairs, max_len_ratio);
  report.out() << "input\treference\toutput\tbleu\n";
  const BleuConfig bleu_cfg{.char_level_tokens = bundle.vocab.char_level()};
  double total_bleu = 0.0;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    Rng rng = Rng::for_stream(args.seed, streams::kGenerate, i);
    const Generation gen =
        generate(model, bundle.vocab, kept[i].first, gen_mode, temperature, out_len, rng);
    const double score = bleu(gen.seq.text, {kept[i].second.text}, bleu_cfg);
    total_bleu += score;
    report.out() << kept[i].first.text << '\t' << kept[i].second.text << '\t' << gen.seq.text
                 << '\t' << fmt(score) << '\n';
  }
  report.out() << "# kept_pairs " << kept.size() << " of " << pairs.size() << ", mean_bleu "
               << fmt(kept.empty() ? 0.0 : total_bleu / static_cast<double>(kept.size())) << '\n';
  return 0;
}

int cmd_calibrate(const EvalArgs& args, const std::string& input_path, double target_bleu,
                  double tolerance, int sample_size) {
  ModelBundle bundle = load_bundle(args.checkpoint, args.vocab);
  std::vector<TokenSequence> sample =
      encode_lines(read_lines(input_path), bundle.vocab, bundle.ck.config.model.max_len);
  if (static_cast<int>(sample.size()) > sample_size)
    sample.resize(static_cast<std::size_t>(sample_size));
  if (sample.size() < 50)
    throw std::runtime_error("calibrate: corpus sample must contain at least 50 sentences");

  const auto overlap = model_overlap_fn(bundle.ck.model, bundle.vocab, sample, args.seed,
                                        bundle.ck.config.model.max_len);
  try {
    const CalibrationResult res = calibrate_temperature(overlap, target_bleu, tolerance);
    Report report(args.out, bundle.ck.config.report_header(args.seed));
    report.out() << "metric\tvalue\n";
    report.out() << "tau\t" << fmt(res.tau) << '\n';
    report.out() << "overlap\t" << fmt(res.overlap) << '\n';
    report.out() << "iterations\t" << res.iterations << '\n';
    report.out() << "within_tolerance\t" << (res.within_tolerance ? 1 : 0) << '\n';
    return res.within_tolerance ? 0 : 3;
  } catch (const CalibrationRangeError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
}

int cmd_augment(const EvalArgs& args, const std::string& labeled_in, double temperature) {
  ModelBundle bundle = load_bundle(args.checkpoint, args.vocab);
  const auto corpus = read_labeled_tsv(labeled_in);
  const auto augmented =
      augment_corpus(bundle.ck.model, bundle.vocab, corpus, temperature, args.seed,
                     bundle.ck.config.model.max_len);
  if (args.out.empty()) throw std::runtime_error("augment: --out is required");
  write_labeled_tsv(args.out, augmented, bundle.ck.config.report_header(args.seed));
  std::cerr << "augmented " << corpus.size() << " -> " << augmented.size() << " examples\n";
  return 0;
}

int cmd_nbsvm_eval(const std::string& train_path, const std::string& test_path, int order,
                   double reg, int epochs, const std::string& out, std::uint64_t seed) {
  const auto train = read_labeled_tsv(train_path);
  const auto test = read_labeled_tsv(test_path);
  const NbSvmModel model = nbsvm_fit(train, order, reg, epochs);
  const EvalMetrics metrics = nbsvm_evaluate(model, test);
  std::ostringstream header;
  header << "config=" << std::hex
         << fnv1a("nbsvm order=" + std::to_string(order) + " reg=" + std::to_string(reg) +
                  " epochs=" + std::to_string(epochs))
         << std::dec << " seed=" << seed;
  Report report(out, header.str());
  report.out() << "metric\tvalue\n";
  report.out() << "train_examples\t" << train.size() << '\n';
  report.out() << "test_examples\t" << test.size() << '\n';
  report.out() << "accuracy\t" << fmt(metrics.accuracy) << '\n';
  report.out() << "f1\t" << fmt(metrics.f1) << '\n';
  return 0;
}

}  // namespace rvq::cli
