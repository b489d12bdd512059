#include "rvq/tsv.hpp"

#include <fstream>
#include <stdexcept>

#include "rvq/trainer.hpp"

namespace rvq {

std::vector<std::string> split_tsv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

std::vector<PairRow> read_pairs_tsv(const std::string& path) {
  std::vector<PairRow> rows;
  long line_no = 0;
  for (const auto& line : read_lines(path)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') continue;  // report headers are re-readable
    const auto fields = split_tsv_line(line);
    if (fields.size() < 2 || fields.size() > 3 || fields[0].empty() || fields[1].empty())
      throw std::runtime_error(path + ": malformed pair row at line " + std::to_string(line_no) +
                               " (expected sentence1<TAB>sentence2[<TAB>label])");
    PairRow row;
    row.sentence1 = fields[0];
    row.sentence2 = fields[1];
    if (fields.size() == 3) {
      row.label = fields[2];
      row.has_label = true;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<LabeledExample> read_labeled_tsv(const std::string& path) {
  std::vector<LabeledExample> rows;
  long line_no = 0;
  for (const auto& line : read_lines(path)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') continue;
    const auto fields = split_tsv_line(line);
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty())
      throw std::runtime_error(path + ": malformed labeled row at line " +
                               std::to_string(line_no) + " (expected label<TAB>sentence)");
    rows.push_back({fields[0], fields[1]});
  }
  return rows;
}

void write_labeled_tsv(const std::string& path, const std::vector<LabeledExample>& rows,
                       const std::string& header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write: " + path);
  out << "# " << header << '\n';
  for (const auto& r : rows) out << r.label << '\t' << r.text << '\n';
}

}  // namespace rvq
