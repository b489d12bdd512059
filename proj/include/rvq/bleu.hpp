#pragma once

#include <string>
#include <vector>

namespace rvq {

// Sentence BLEU in [0, 100]: geometric mean of clipped n-gram precisions
// times brevity penalty. Zero matches at order 1 score 0; higher orders with
// zero matches take add-one smoothing on numerator and denominator.
struct BleuConfig {
  int max_order = 4;
  bool smooth_add_one = true;
  bool case_fold = false;
  bool char_level_tokens = false;  // tokenization rule for the string overloads
};

double bleu_tokens(const std::vector<std::string>& candidate,
                   const std::vector<std::vector<std::string>>& references,
                   const BleuConfig& cfg = {});

double bleu(const std::string& candidate, const std::vector<std::string>& references,
            const BleuConfig& cfg = {});

}  // namespace rvq
