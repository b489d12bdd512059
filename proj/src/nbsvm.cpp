#include "rvq/nbsvm.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "rvq/vocab.hpp"

namespace rvq {

std::vector<std::string> extract_ngrams(const std::string& text, int order) {
  const std::vector<std::string> tokens = tokenize(text, /*char_level=*/false);
  std::vector<std::string> grams;
  for (int n = 1; n <= order; ++n) {
    if (static_cast<int>(tokens.size()) < n) break;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
      std::string key = tokens[i];
      for (int j = 1; j < n; ++j) {
        key += '\x1f';
        key += tokens[i + static_cast<std::size_t>(j)];
      }
      grams.push_back(std::move(key));
    }
  }
  return grams;
}

namespace {

// Binarized presence indices for one document, deduplicated.
std::vector<int> doc_feature_ids(const NbSvmModel& m, const std::string& text) {
  std::set<int> ids;
  for (const auto& g : extract_ngrams(text, m.order)) {
    auto it = m.index.find(g);
    if (it != m.index.end()) ids.insert(it->second);
  }
  return {ids.begin(), ids.end()};
}

}  // namespace

NbSvmModel nbsvm_fit(const std::vector<LabeledExample>& corpus, int order, double reg,
                     int epochs) {
  if (order < 1) throw std::invalid_argument("nbsvm_fit: order must be >= 1");
  std::set<std::string> labels;
  for (const auto& ex : corpus) labels.insert(ex.label);
  if (labels.size() != 2)
    throw std::invalid_argument("nbsvm_fit: exactly two classes required, got " +
                                std::to_string(labels.size()));

  NbSvmModel m;
  m.order = order;
  m.neg_label = *labels.begin();
  m.pos_label = *std::next(labels.begin());

  // Per-class binarized document counts over the n-gram vocabulary.
  std::vector<double> pos_counts, neg_counts;
  for (const auto& ex : corpus) {
    std::set<std::string> seen(  // presence, not frequency
        [&] {
          auto grams = extract_ngrams(ex.text, order);
          return std::set<std::string>(grams.begin(), grams.end());
        }());
    for (const auto& g : seen) {
      auto it = m.index.find(g);
      int id;
      if (it == m.index.end()) {
        id = static_cast<int>(m.ngrams.size());
        m.index.emplace(g, id);
        m.ngrams.push_back(g);
        pos_counts.push_back(0.0);
        neg_counts.push_back(0.0);
      } else {
        id = it->second;
      }
      if (ex.label == m.pos_label)
        pos_counts[static_cast<std::size_t>(id)] += 1.0;
      else
        neg_counts[static_cast<std::size_t>(id)] += 1.0;
    }
  }

  // r = log((p+1)/||p+1||_1) - log((q+1)/||q+1||_1)
  const Eigen::Index v = static_cast<Eigen::Index>(m.ngrams.size());
  double pos_norm = 0.0, neg_norm = 0.0;
  for (Eigen::Index j = 0; j < v; ++j) {
    pos_norm += pos_counts[static_cast<std::size_t>(j)] + 1.0;
    neg_norm += neg_counts[static_cast<std::size_t>(j)] + 1.0;
  }
  m.r.resize(v);
  for (Eigen::Index j = 0; j < v; ++j) {
    m.r(j) = std::log((pos_counts[static_cast<std::size_t>(j)] + 1.0) / pos_norm) -
             std::log((neg_counts[static_cast<std::size_t>(j)] + 1.0) / neg_norm);
  }

  // Hinge training on r-scaled indicators. Starting from all-ones weights
  // makes the initial decision the pure naive-Bayes score.
  std::vector<std::vector<int>> feats;
  std::vector<double> y;
  feats.reserve(corpus.size());
  for (const auto& ex : corpus) {
    feats.push_back(doc_feature_ids(m, ex.text));
    y.push_back(ex.label == m.pos_label ? 1.0 : -1.0);
  }
  const double n = static_cast<double>(corpus.size());
  m.weights = Eigen::VectorXd::Ones(v);
  m.bias = 0.0;
  for (int epoch = 1; epoch <= epochs; ++epoch) {
    Eigen::VectorXd grad = reg * m.weights;
    double grad_b = 0.0;
    for (std::size_t i = 0; i < feats.size(); ++i) {
      double score = m.bias;
      for (int id : feats[i]) score += m.weights(id) * m.r(id);
      if (y[i] * score < 1.0) {
        for (int id : feats[i]) grad(id) -= y[i] * m.r(id) / n;
        grad_b -= y[i] / n;
      }
    }
    const double lr = 1.0 / (reg * (static_cast<double>(epoch) + 10.0));
    m.weights -= lr * grad;
    m.bias -= lr * grad_b;
  }
  return m;
}

double NbSvmModel::score(const std::string& text) const {
  double s = bias;
  for (int id : doc_feature_ids(*this, text)) s += weights(id) * r(id);
  return s;
}

std::string NbSvmModel::predict(const std::string& text) const {
  return score(text) >= 0.0 ? pos_label : neg_label;
}

EvalMetrics nbsvm_evaluate(const NbSvmModel& model, const std::vector<LabeledExample>& test) {
  if (test.empty()) throw std::invalid_argument("nbsvm_evaluate: empty test set");
  long correct = 0, tp = 0, fp = 0, fn = 0;
  for (const auto& ex : test) {
    const std::string pred = model.predict(ex.text);
    if (pred == ex.label) ++correct;
    const bool pred_pos = pred == model.pos_label;
    const bool true_pos = ex.label == model.pos_label;
    if (pred_pos && true_pos) ++tp;
    if (pred_pos && !true_pos) ++fp;
    if (!pred_pos && true_pos) ++fn;
  }
  EvalMetrics metrics;
  metrics.accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
  const double denom = 2.0 * tp + fp + fn;
  metrics.f1 = denom > 0.0 ? 2.0 * tp / denom : 0.0;
  return metrics;
}

}  // namespace rvq
