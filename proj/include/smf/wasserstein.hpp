#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

// Exact 1-D Wasserstein-1 distances. On the line, W1 equals the area
// between the two CDFs; with atomic measures both CDFs are step functions
// and the sweep below computes the integral exactly. On the circle the
// optimal coupling additionally allows a constant CDF offset; the optimum
// is the length-weighted median of the CDF difference.

namespace smf {

struct WeightedSample {
  std::vector<double> values;
  std::vector<double> weights;  // empty means equal weights 1/size

  static WeightedSample equal(std::vector<double> v) { return {std::move(v), {}}; }
};

namespace detail {

struct SortedAtoms {
  std::vector<double> x;
  std::vector<double> w;  // normalized to total mass 1
};

inline SortedAtoms normalize_sorted(const WeightedSample& s, const char* who) {
  if (s.values.empty()) throw std::invalid_argument(std::string(who) + ": empty sample");
  SortedAtoms out;
  const std::size_t n = s.values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return s.values[a] < s.values[b]; });
  out.x.reserve(n);
  out.w.reserve(n);
  double total = 0.0;
  for (std::size_t k : order) {
    const double wk = s.weights.empty() ? 1.0 : s.weights[k];
    if (!(wk >= 0.0)) throw std::invalid_argument(std::string(who) + ": negative weight");
    out.x.push_back(s.values[k]);
    out.w.push_back(wk);
    total += wk;
  }
  if (!(total > 0.0)) throw std::invalid_argument(std::string(who) + ": zero total mass");
  for (double& wk : out.w) wk /= total;
  return out;
}

}  // namespace detail

// W1 on the line between two weighted atomic measures (total mass 1 each):
// integral of |F_a - F_b| over the merged support.
inline double wasserstein_1d(const WeightedSample& a, const WeightedSample& b) {
  const auto sa = detail::normalize_sorted(a, "wasserstein_1d");
  const auto sb = detail::normalize_sorted(b, "wasserstein_1d");
  std::size_t ia = 0, ib = 0;
  double cdf_a = 0.0, cdf_b = 0.0, prev = 0.0, total = 0.0;
  bool first = true;
  while (ia < sa.x.size() || ib < sb.x.size()) {
    const double xa = ia < sa.x.size() ? sa.x[ia] : std::numeric_limits<double>::infinity();
    const double xb = ib < sb.x.size() ? sb.x[ib] : std::numeric_limits<double>::infinity();
    const double x = std::min(xa, xb);
    if (!first) total += std::fabs(cdf_a - cdf_b) * (x - prev);
    while (ia < sa.x.size() && sa.x[ia] == x) cdf_a += sa.w[ia++];
    while (ib < sb.x.size() && sb.x[ib] == x) cdf_b += sb.w[ib++];
    prev = x;
    first = false;
  }
  return total;
}

inline double wasserstein_1d(const std::vector<double>& a, const std::vector<double>& b) {
  return wasserstein_1d(WeightedSample::equal(a), WeightedSample::equal(b));
}

// Circular W1 on a circle of the given circumference. Positions are wrapped
// into [0, circumference); the rotation freedom becomes
//   W1 = min_c integral |F_a - F_b - c| dx,
// minimized by the length-weighted median of the CDF difference.
inline double circular_wasserstein_1d(const WeightedSample& a, const WeightedSample& b,
                                      double circumference) {
  if (!(circumference > 0.0))
    throw std::invalid_argument("circular_wasserstein_1d: circumference must be positive");
  auto wrap = [circumference](WeightedSample s) {
    for (double& v : s.values) {
      v = std::fmod(v, circumference);
      if (v < 0.0) v += circumference;
    }
    return s;
  };
  const auto sa = detail::normalize_sorted(wrap(a), "circular_wasserstein_1d");
  const auto sb = detail::normalize_sorted(wrap(b), "circular_wasserstein_1d");

  // Piecewise-constant G = F_a - F_b on merged breakpoints over [0, L).
  std::vector<double> seg_val, seg_len;
  std::size_t ia = 0, ib = 0;
  double cdf_a = 0.0, cdf_b = 0.0, prev = 0.0;
  while (ia < sa.x.size() || ib < sb.x.size()) {
    const double xa = ia < sa.x.size() ? sa.x[ia] : circumference;
    const double xb = ib < sb.x.size() ? sb.x[ib] : circumference;
    const double x = std::min(xa, xb);
    if (x > prev) {
      seg_val.push_back(cdf_a - cdf_b);
      seg_len.push_back(x - prev);
      prev = x;
    }
    while (ia < sa.x.size() && sa.x[ia] == x) cdf_a += sa.w[ia++];
    while (ib < sb.x.size() && sb.x[ib] == x) cdf_b += sb.w[ib++];
  }
  if (circumference > prev) {
    seg_val.push_back(cdf_a - cdf_b);
    seg_len.push_back(circumference - prev);
  }

  // Weighted median of segment values by segment length.
  std::vector<std::size_t> order(seg_val.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t s, std::size_t t) { return seg_val[s] < seg_val[t]; });
  const double half = 0.5 * circumference;
  double acc = 0.0, median = seg_val[order.back()];
  for (std::size_t k : order) {
    acc += seg_len[k];
    if (acc >= half) {
      median = seg_val[k];
      break;
    }
  }
  double total = 0.0;
  for (std::size_t k = 0; k < seg_val.size(); ++k)
    total += std::fabs(seg_val[k] - median) * seg_len[k];
  return total;
}

}  // namespace smf
