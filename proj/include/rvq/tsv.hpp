#pragma once

#include <string>
#include <utility>
#include <vector>

#include "rvq/nbsvm.hpp"

namespace rvq {

// Pair files: TSV with columns (sentence1, sentence2, label-or-score).
struct PairRow {
  std::string sentence1;
  std::string sentence2;
  std::string label;  // empty when the file has two columns
  bool has_label = false;
};

// Malformed rows raise errors naming the 1-based line number.
std::vector<PairRow> read_pairs_tsv(const std::string& path);

// Labeled classification corpora: TSV (label, sentence).
std::vector<LabeledExample> read_labeled_tsv(const std::string& path);
void write_labeled_tsv(const std::string& path, const std::vector<LabeledExample>& rows,
                       const std::string& header);

std::vector<std::string> split_tsv_line(const std::string& line);

}  // namespace rvq
