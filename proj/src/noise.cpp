#include "rvq/noise.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace rvq {

TokenSequence noise_sequence(const TokenSequence& x, Rng& rng, double drop_p,
                             int shuffle_window) {
  if (!(drop_p >= 0.0 && drop_p < 1.0))
    throw std::invalid_argument("noise_sequence: drop_p must lie in [0, 1)");
  if (shuffle_window < 0)
    throw std::invalid_argument("noise_sequence: shuffle_window must be >= 0");
  if (x.ids.empty()) throw std::invalid_argument("noise_sequence: empty sequence");

  std::vector<int> kept;
  do {
    kept.clear();
    for (int id : x.ids) {
      const bool reserved = id < Vocabulary::kReserved;
      if (!reserved && drop_p > 0.0 && rng.uniform() < drop_p) continue;
      kept.push_back(id);
    }
  } while (kept.empty());

  if (shuffle_window > 0 && kept.size() > 1) {
    // Stable sort of i + U[0, w+1) displaces each token by at most w.
    std::vector<std::pair<double, std::size_t>> keys(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i)
      keys[i] = {static_cast<double>(i) + rng.uniform(0.0, shuffle_window + 1.0), i};
    std::stable_sort(keys.begin(), keys.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<int> shuffled(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) shuffled[i] = kept[keys[i].second];
    kept = std::move(shuffled);
  }

  TokenSequence out;
  out.ids = std::move(kept);
  out.text = x.text;
  return out;
}

}  // namespace rvq
