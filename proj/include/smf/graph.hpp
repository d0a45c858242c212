#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "smf/matrix.hpp"
#include "smf/model.hpp"
#include "smf/rng.hpp"

// Sparse W-random graph samples and the comparison matrices built from them:
//   P    = A / (p n)                 (realized interaction weights)
//   Pbar = W(omega_i, omega_j) / n   (their conditional expectation)
//   D    = P - Pbar                  (the fluctuation the norm bounds control)
// P and Pbar are kept implicit; entries are computed on demand through one
// arithmetic path so D + Pbar == P holds bit-for-bit by construction.

namespace smf {

class GraphSample {
 public:
  int n = 0;
  double p = 1.0;
  int d = 1;
  std::uint64_t seed = 0;
  std::string kernel_id;
  std::vector<double> media;  // n*d, row-major

  bool w_const = false;
  double w_const_value = 1.0;
  std::vector<double> w_cache;  // n*n kernel values when the kernel varies

  // Adjacency, symmetric with loops allowed. Sparse samples use CSR;
  // dense samples (p > 1/8) use a bitset. Neighbor iteration is ascending
  // in j in both modes.
  bool bitset_mode = false;
  std::vector<std::uint64_t> row_ptr;   // CSR: n+1 offsets
  std::vector<std::uint32_t> cols;      // CSR: sorted column indices
  std::vector<std::uint64_t> bits;      // bitset: n rows of `words` 64-bit words
  std::size_t words = 0;
  std::uint64_t edge_count = 0;         // ones in the full symmetric matrix

  bool adjacency(int i, int j) const {
    if (bitset_mode)
      return (bits[static_cast<std::size_t>(i) * words + static_cast<std::size_t>(j) / 64] >>
              (j % 64)) & 1ull;
    const std::uint64_t lo = row_ptr[i], hi = row_ptr[i + 1];
    for (std::uint64_t k = lo; k < hi; ++k) {
      if (cols[k] == static_cast<std::uint32_t>(j)) return true;
      if (cols[k] > static_cast<std::uint32_t>(j)) return false;
    }
    return false;
  }

  template <typename F>
  void for_each_neighbor(int i, F&& f) const {
    if (bitset_mode) {
      const std::uint64_t* row = bits.data() + static_cast<std::size_t>(i) * words;
      for (std::size_t w = 0; w < words; ++w) {
        std::uint64_t word = row[w];
        while (word) {
          const int b = std::countr_zero(word);
          f(static_cast<int>(w * 64 + b));
          word &= word - 1;
        }
      }
    } else {
      const std::uint64_t lo = row_ptr[i], hi = row_ptr[i + 1];
      for (std::uint64_t k = lo; k < hi; ++k) f(static_cast<int>(cols[k]));
    }
  }

  int degree(int i) const {
    if (!bitset_mode) return static_cast<int>(row_ptr[i + 1] - row_ptr[i]);
    int deg = 0;
    const std::uint64_t* row = bits.data() + static_cast<std::size_t>(i) * words;
    for (std::size_t w = 0; w < words; ++w) deg += std::popcount(row[w]);
    return deg;
  }

  double kernel_value(int i, int j) const {
    if (w_const) return w_const_value;
    return w_cache[static_cast<std::size_t>(i) * n + j];
  }

  const double* media_of(int i) const { return media.data() + static_cast<std::size_t>(i) * d; }

  double edge_weight(int i, int j) const {        // P entry
    return adjacency(i, j) ? 1.0 / (p * static_cast<double>(n)) : 0.0;
  }
  double expected_weight(int i, int j) const {    // Pbar entry
    return kernel_value(i, j) / static_cast<double>(n);
  }
  double centered_weight(int i, int j) const {    // D entry
    return edge_weight(i, j) - expected_weight(i, j);
  }

  Matrix dense_centered() const {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = centered_weight(i, j);
    return m;
  }
};

// Samples A_{ij} ~ Bernoulli(p W(omega_i, omega_j)) independently for i <= j,
// symmetrized, loops included. Identical (seed, n, p, media, kernel) give the
// identical matrix; draws are keyed per unordered pair.
inline GraphSample sample_w_graph(const InteractionModel& model, int n, double p,
                                  const std::vector<double>& media, std::uint64_t seed) {
  if (n <= 0) throw std::invalid_argument("sample_w_graph: n must be positive");
  if (!(p > 0.0) || p > 1.0) throw std::invalid_argument("sample_w_graph: p outside (0,1]");
  if (media.size() != static_cast<std::size_t>(n) * model.d)
    throw std::invalid_argument("sample_w_graph: media size mismatch");

  GraphSample g;
  g.n = n;
  g.p = p;
  g.d = model.d;
  g.seed = seed;
  g.kernel_id = model.id;
  g.media = media;
  g.w_const = model.w_const;
  g.w_const_value = model.w_const_value;
  if (!model.w_const) {
    g.w_cache.resize(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        g.w_cache[static_cast<std::size_t>(i) * n + j] =
            model.kernel_w(g.media_of(i), g.media_of(j));
  }

  g.bitset_mode = (p > 0.125);  // CSR when p n <= n/8, dense bitset otherwise
  if (g.bitset_mode) {
    g.words = (static_cast<std::size_t>(n) + 63) / 64;
    g.bits.assign(static_cast<std::size_t>(n) * g.words, 0ull);
  }

  std::vector<std::vector<std::uint32_t>> adj;
  if (!g.bitset_mode) adj.resize(n);

  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const double w = g.kernel_value(i, j);
      if (!std::isfinite(w) || w < 0.0)
        throw std::invalid_argument("sample_w_graph: kernel value not finite/nonnegative");
      const double q = p * w;
      if (q > 1.0)
        throw std::invalid_argument("sample_w_graph: p*W exceeds 1 for a sampled pair");
      const double u = rng::keyed_uniform(seed, rng::kEdge,
                                          static_cast<std::uint64_t>(i) * n + j);
      if (u < q) {
        ++g.edge_count;
        if (i != j) ++g.edge_count;
        if (g.bitset_mode) {
          g.bits[static_cast<std::size_t>(i) * g.words + j / 64] |= 1ull << (j % 64);
          g.bits[static_cast<std::size_t>(j) * g.words + i / 64] |= 1ull << (i % 64);
        } else {
          adj[i].push_back(j);
          if (i != j) adj[j].push_back(i);
        }
      }
    }
  }
  if (!g.bitset_mode) {
    g.row_ptr.assign(n + 1, 0);
    for (int i = 0; i < n; ++i) g.row_ptr[i + 1] = g.row_ptr[i] + adj[i].size();
    g.cols.reserve(g.row_ptr[n]);
    for (int i = 0; i < n; ++i)
      for (std::uint32_t j : adj[i]) g.cols.push_back(j);  // ascending: built in order
  }
  return g;
}

inline std::vector<double> sample_media(const InteractionModel& model, int n,
                                        std::uint64_t seed) {
  std::vector<double> media(static_cast<std::size_t>(n) * model.d);
  for (int i = 0; i < n; ++i) model.sample_media(seed, i, media.data() + static_cast<std::size_t>(i) * model.d);
  return media;
}

struct RowSumStats {
  std::vector<double> s;       // S_i = 2 sum_j P_{ij}
  double mean = 0.0, min = 0.0, max = 0.0;
  double one_p_one_over_n = 0.0;   // <1, P 1> / n = (sum_i S_i) / (2n)
  double bound = 0.0;              // ||W||_inf + ||D||_{inf->1} / n
};

inline RowSumStats row_sum_stats(const GraphSample& g, double sup_w, double norm_d) {
  RowSumStats r;
  r.s.resize(g.n);
  const double inv = 1.0 / (g.p * static_cast<double>(g.n));
  double total = 0.0;
  for (int i = 0; i < g.n; ++i) {
    const double si = 2.0 * static_cast<double>(g.degree(i)) * inv;
    r.s[i] = si;
    total += si;
  }
  r.min = r.s.empty() ? 0.0 : r.s[0];
  r.max = r.min;
  for (double v : r.s) {
    r.min = std::min(r.min, v);
    r.max = std::max(r.max, v);
  }
  r.mean = g.n ? total / g.n : 0.0;
  r.one_p_one_over_n = total / (2.0 * static_cast<double>(g.n));
  r.bound = sup_w + norm_d / static_cast<double>(g.n);
  return r;
}

}  // namespace smf
