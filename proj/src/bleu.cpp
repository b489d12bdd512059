#include "rvq/bleu.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "rvq/vocab.hpp"

namespace rvq {

namespace {

using NgramCounts = std::unordered_map<std::string, long>;

// \x1f never appears in whitespace-split tokens, so joined keys are unique.
NgramCounts ngram_counts(const std::vector<std::string>& tokens, int n) {
  NgramCounts counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (int j = 1; j < n; ++j) {
      key += '\x1f';
      key += tokens[i + static_cast<std::size_t>(j)];
    }
    ++counts[key];
  }
  return counts;
}

std::vector<std::string> fold(const std::vector<std::string>& tokens, bool case_fold) {
  if (!case_fold) return tokens;
  std::vector<std::string> out = tokens;
  for (auto& t : out)
    std::transform(t.begin(), t.end(), t.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

double bleu_tokens(const std::vector<std::string>& candidate,
                   const std::vector<std::vector<std::string>>& references,
                   const BleuConfig& cfg) {
  if (candidate.empty()) throw std::invalid_argument("bleu: empty candidate");
  if (references.empty()) throw std::invalid_argument("bleu: no references");
  if (cfg.max_order < 1) throw std::invalid_argument("bleu: max_order must be >= 1");

  const std::vector<std::string> cand = fold(candidate, cfg.case_fold);
  std::vector<std::vector<std::string>> refs;
  refs.reserve(references.size());
  for (const auto& r : references) {
    if (r.empty()) throw std::invalid_argument("bleu: empty reference");
    refs.push_back(fold(r, cfg.case_fold));
  }

  const long c_len = static_cast<long>(cand.size());
  // Effective reference length: closest to the candidate, ties -> shorter.
  long r_len = static_cast<long>(refs[0].size());
  for (const auto& r : refs) {
    const long rl = static_cast<long>(r.size());
    const long cur = std::abs(rl - c_len);
    const long best = std::abs(r_len - c_len);
    if (cur < best || (cur == best && rl < r_len)) r_len = rl;
  }

  double log_precision_sum = 0.0;
  for (int n = 1; n <= cfg.max_order; ++n) {
    const NgramCounts cand_counts = ngram_counts(cand, n);
    long total = 0;
    for (const auto& [gram, cnt] : cand_counts) total += cnt;

    NgramCounts max_ref;
    for (const auto& r : refs)
      for (const auto& [gram, cnt] : ngram_counts(r, n)) {
        auto it = max_ref.find(gram);
        if (it == max_ref.end())
          max_ref.emplace(gram, cnt);
        else
          it->second = std::max(it->second, cnt);
      }

    long correct = 0;
    for (const auto& [gram, cnt] : cand_counts) {
      auto it = max_ref.find(gram);
      if (it != max_ref.end()) correct += std::min(cnt, it->second);
    }

    double precision;
    if (correct == 0) {
      if (n == 1) return 0.0;
      if (!cfg.smooth_add_one) return 0.0;
      precision = 1.0 / static_cast<double>(total + 1);
    } else {
      precision = static_cast<double>(correct) / static_cast<double>(total);
    }
    log_precision_sum += std::log(precision);
  }

  const double bp = c_len >= r_len
                        ? 1.0
                        : std::exp(1.0 - static_cast<double>(r_len) / static_cast<double>(c_len));
  return 100.0 * bp * std::exp(log_precision_sum / static_cast<double>(cfg.max_order));
}

double bleu(const std::string& candidate, const std::vector<std::string>& references,
            const BleuConfig& cfg) {
  std::vector<std::vector<std::string>> ref_tokens;
  ref_tokens.reserve(references.size());
  for (const auto& r : references) ref_tokens.push_back(tokenize(r, cfg.char_level_tokens));
  return bleu_tokens(tokenize(candidate, cfg.char_level_tokens), ref_tokens, cfg);
}

}  // namespace rvq
