#pragma once

#include <Eigen/Dense>

#include <string>
#include <unordered_map>
#include <vector>

namespace rvq {

struct LabeledExample {
  std::string label;
  std::string text;
};

// Linear classifier over binarized word n-gram indicators scaled by the
// naive-Bayes log-count ratio r, trained with deterministic full-batch
// subgradient descent on the L2-regularized hinge loss. Binary only; the
// lexicographically larger label is the positive class.
struct NbSvmModel {
  int order = 3;
  std::vector<std::string> ngrams;               // index -> key
  std::unordered_map<std::string, int> index;    // key -> index
  Eigen::VectorXd r;                             // log-count ratio, add-one smoothed
  Eigen::VectorXd weights;
  double bias = 0.0;
  std::string neg_label, pos_label;

  std::string predict(const std::string& text) const;
  double score(const std::string& text) const;  // >= 0 classifies positive
};

NbSvmModel nbsvm_fit(const std::vector<LabeledExample>& corpus, int order, double reg = 0.1,
                     int epochs = 100);

struct EvalMetrics {
  double accuracy = 0.0;
  double f1 = 0.0;  // for the positive class
};

EvalMetrics nbsvm_evaluate(const NbSvmModel& model, const std::vector<LabeledExample>& test);

std::vector<std::string> extract_ngrams(const std::string& text, int order);

}  // namespace rvq
