#include <algorithm>
#include <cmath>

#include "ymmb/morse_bott.hpp"

namespace ymmb {

std::uint64_t point_hash(const Vector& p) {
  // FNV-1a over coordinates rounded to 1e-6.
  std::uint64_t h = 1469598103934665603ull;
  for (int i = 0; i < p.size(); ++i) {
    const auto q = static_cast<std::int64_t>(std::llround(p[i] * 1e6));
    for (int b = 0; b < 8; ++b) {
      h ^= static_cast<std::uint64_t>((q >> (8 * b)) & 0xff);
      h *= 1099511628211ull;
    }
  }
  return h;
}

CascadeChainComplex boundary_matrices(const std::vector<Generator>& generators,
                                      const std::map<std::pair<int, int>, int>& counts) {
  CascadeChainComplex cc;
  cc.generators = generators;
  for (std::size_t i = 0; i < generators.size(); ++i) {
    if (generators[i].Ind < 0) throw std::invalid_argument("boundary_matrices: negative degree");
    cc.by_degree[generators[i].Ind].push_back(static_cast<int>(i));
  }
  for (const auto& [k, cols] : cc.by_degree) {
    if (k == 0) continue;
    auto lower = cc.by_degree.find(k - 1);
    const std::vector<int> rows = lower == cc.by_degree.end() ? std::vector<int>{} : lower->second;
    BitMatrix m(rows.size(), std::vector<std::uint8_t>(cols.size(), 0));
    for (std::size_t c = 0; c < cols.size(); ++c)
      for (std::size_t r = 0; r < rows.size(); ++r) {
        auto it = counts.find({cols[c], rows[r]});
        if (it != counts.end()) m[r][c] = static_cast<std::uint8_t>(((it->second % 2) + 2) % 2);
      }
    cc.boundaries[k] = std::move(m);
  }
  return cc;
}

int rank_mod2(BitMatrix m) {
  if (m.empty()) return 0;
  const std::size_t rows = m.size(), cols = m[0].size();
  int rank = 0;
  for (std::size_t c = 0; c < cols && static_cast<std::size_t>(rank) < rows; ++c) {
    std::size_t pivot = rank;
    while (pivot < rows && !m[pivot][c]) ++pivot;
    if (pivot == rows) continue;
    std::swap(m[pivot], m[rank]);
    for (std::size_t r = 0; r < rows; ++r)
      if (r != static_cast<std::size_t>(rank) && m[r][c])
        for (std::size_t j = c; j < cols; ++j) m[r][j] ^= m[rank][j];
    ++rank;
  }
  return rank;
}

BitMatrix multiply_mod2(const BitMatrix& a, const BitMatrix& b, int a_cols) {
  const std::size_t rows = a.size();
  const std::size_t cols = b.empty() ? 0 : b[0].size();
  BitMatrix out(rows, std::vector<std::uint8_t>(cols, 0));
  for (std::size_t i = 0; i < rows; ++i)
    for (int k = 0; k < a_cols; ++k)
      if (a[i][k])
        for (std::size_t j = 0; j < cols; ++j) out[i][j] ^= b[k][j];
  return out;
}

namespace {

std::size_t degree_size(const CascadeChainComplex& cc, int k) {
  auto it = cc.by_degree.find(k);
  return it == cc.by_degree.end() ? 0 : it->second.size();
}

}  // namespace

bool verify_chain(const CascadeChainComplex& cc) {
  for (const auto& [k, upper] : cc.boundaries) {
    auto lower = cc.boundaries.find(k - 1);
    if (lower == cc.boundaries.end()) continue;
    const BitMatrix prod = multiply_mod2(lower->second, upper, static_cast<int>(degree_size(cc, k - 1)));
    for (const auto& row : prod)
      if (std::any_of(row.begin(), row.end(), [](std::uint8_t v) { return v != 0; })) return false;
  }
  return true;
}

std::vector<int> homology(const CascadeChainComplex& cc) {
  if (!verify_chain(cc)) throw ChainNotVerified("boundary of boundary is nonzero");
  const int top = cc.max_degree();
  std::vector<int> betti(top + 1, 0);
  for (int k = 0; k <= top; ++k) {
    int rk = 0, rk1 = 0;
    if (auto it = cc.boundaries.find(k); it != cc.boundaries.end()) rk = rank_mod2(it->second);
    if (auto it = cc.boundaries.find(k + 1); it != cc.boundaries.end()) rk1 = rank_mod2(it->second);
    betti[k] = static_cast<int>(degree_size(cc, k)) - rk - rk1;
  }
  return betti;
}

}  // namespace ymmb
