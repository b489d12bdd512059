#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace rvq {

// Dense storage is row-major throughout; checkpoints serialize these buffers
// verbatim as little-endian 32-bit floats.
template <typename S>
using MatT = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename S>
using RowT = Eigen::Matrix<S, 1, Eigen::Dynamic, Eigen::RowMajor>;

using Mat = MatT<float>;
using Row = RowT<float>;

using Index = Eigen::Index;

// FNV-1a, used for voclibrary/config fingerprints embedded in reports.
inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 1469598103934665603ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t fnv1a(const std::string& s) { return fnv1a(s.data(), s.size()); }

}  // namespace rvq
