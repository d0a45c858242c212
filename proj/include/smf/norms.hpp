#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "smf/matrix.hpp"
#include "smf/rng.hpp"

// The infinity-to-one norm
//   ||M||_{inf->1} = max { ||M x||_1 : x in {-1,+1}^n }
//                  = sup { <y, M x> : x, y in [-1,1]^n }
// and its certificates. The exact value costs 2^n vector updates and is
// only feasible for small n; the ascent lower bound and the entrywise
// upper bound cover the rest.

namespace smf {

inline void require_finite(const Matrix& m, const char* who) {
  if (!m.all_finite()) throw std::invalid_argument(std::string(who) + ": non-finite entries");
}

// Exhaustive maximization over sign vectors, Gray-code order so each step
// flips one coordinate and updates M x in O(n). The norm is invariant under
// x -> -x, so the first coordinate stays fixed at +1.
inline double norm_inf_to_one_exact(const Matrix& m, int enumeration_cap = 20) {
  require_finite(m, "norm_inf_to_one_exact");
  const std::size_t n = m.rows();
  if (n != m.cols()) throw std::invalid_argument("norm_inf_to_one_exact: matrix not square");
  if (n == 0) return 0.0;
  if (static_cast<int>(n) > enumeration_cap)
    throw std::invalid_argument("norm_inf_to_one_exact: n exceeds enumeration cap");

  std::vector<double> x(n, 1.0);
  std::vector<double> v(n, 0.0);  // v = M x
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += m(i, j);
    v[i] = acc;
  }
  auto l1 = [&]() {
    double s = 0.0;
    for (double vi : v) s += std::fabs(vi);
    return s;
  };
  double best = l1();
  if (n == 1) return best;

  const std::uint64_t total = 1ull << (n - 1);
  for (std::uint64_t k = 1; k < total; ++k) {
    // Gray code: flip free coordinate ctz(k); coordinate 0 is pinned.
    const std::size_t j = static_cast<std::size_t>(std::countr_zero(k)) + 1;
    const double step = -2.0 * x[j];
    x[j] = -x[j];
    for (std::size_t i = 0; i < n; ++i) v[i] += step * m(i, j);
    const double val = l1();
    if (val > best) best = val;
  }
  return best;
}

// Entrywise upper certificate: |<y, Mx>| <= sum |M_ij| for x,y in [-1,1]^n.
inline double norm_inf_to_one_upper(const Matrix& m) {
  require_finite(m, "norm_inf_to_one_upper");
  double s = 0.0;
  for (double v : m.data()) s += std::fabs(v);
  return s;
}

namespace detail {

inline double sign_plus(double v) { return v >= 0.0 ? 1.0 : -1.0; }  // sign(0) -> +1

// One ascent pass from a given sign vector x. Alternates
//   y <- sign(M x),  x <- sign(M^T y)
// until <y, M x> stops improving, then tries single-coordinate flips of x
// (accepting any that increase ||M x||_1) and resumes the alternation.
// Returns the best objective reached; writes the argmax into x.
inline double ascend_from(const Matrix& m, std::vector<double>& x) {
  const std::size_t n = m.rows();
  std::vector<double> v(n), y(n), u(n);
  m.multiply(x, v);
  auto l1v = [&]() {
    double s = 0.0;
    for (double t : v) s += std::fabs(t);
    return s;
  };
  double best = l1v();
  for (;;) {
    bool improved = false;
    for (;;) {
      for (std::size_t i = 0; i < n; ++i) y[i] = sign_plus(v[i]);
      m.multiply_transpose(y, u);
      double cand = 0.0;
      for (double t : u) cand += std::fabs(t);
      if (cand > best) {
        best = cand;
        for (std::size_t j = 0; j < n; ++j) x[j] = sign_plus(u[j]);
        m.multiply(x, v);
        improved = true;
      } else {
        break;
      }
    }
    // Local 1-flip search; escapes the zero-gradient stall at e.g. Mx = 0.
    bool flipped = false;
    for (std::size_t j = 0; j < n; ++j) {
      const double step = -2.0 * x[j];
      double cand = 0.0;
      for (std::size_t i = 0; i < n; ++i) cand += std::fabs(v[i] + step * m(i, j));
      if (cand > best + 1e-15 * (1.0 + best)) {
        for (std::size_t i = 0; i < n; ++i) v[i] += step * m(i, j);
        x[j] = -x[j];
        best = cand;
        flipped = true;
      }
    }
    if (!flipped && !improved) break;
  }
  return best;
}

}  // namespace detail

// Alternating-ascent lower certificate. Guaranteed <= the exact norm, and
// nondecreasing in `restarts` for a fixed seed (running max over a fixed
// restart stream). Optionally reports the certifying sign vector.
inline double norm_inf_to_one_lower(const Matrix& m, int restarts, std::uint64_t seed,
                                    std::vector<double>* x_certificate = nullptr) {
  require_finite(m, "norm_inf_to_one_lower");
  if (restarts < 1) throw std::invalid_argument("norm_inf_to_one_lower: restarts must be >= 1");
  const std::size_t n = m.rows();
  if (n != m.cols()) throw std::invalid_argument("norm_inf_to_one_lower: matrix not square");
  if (n == 0) return 0.0;

  double best = 0.0;
  std::vector<double> x(n), best_x(n, 1.0);
  for (int r = 0; r < restarts; ++r) {
    for (std::size_t j = 0; j < n; ++j)
      x[j] = (rng::keyed_u64(seed, rng::kAscent, static_cast<std::uint64_t>(r), j) & 1ull) ? 1.0
                                                                                           : -1.0;
    const double val = detail::ascend_from(m, x);
    if (val > best) {
      best = val;
      best_x = x;
    }
  }
  if (x_certificate) *x_certificate = best_x;
  return best;
}

// Log of the Bennett tail bound on P(||D||_{inf->1}/n > eta):
//   n ln 4 - eta^2 n^2 p / (8 + 4 eta / (3 n)).
// Reported in log space; the bound itself underflows for moderate n.
inline double bennett_log_tail(int n, double p, double eta) {
  if (n <= 0) throw std::invalid_argument("bennett_log_tail: n must be positive");
  if (!(p > 0.0) || p > 1.0) throw std::invalid_argument("bennett_log_tail: p outside (0,1]");
  if (!(eta > 0.0) || eta > static_cast<double>(n))
    throw std::invalid_argument("bennett_log_tail: eta outside (0, n]");
  const double nn = static_cast<double>(n);
  return nn * std::log(4.0) - (eta * eta * nn * nn * p) / (8.0 + 4.0 * eta / (3.0 * nn));
}

}  // namespace smf
