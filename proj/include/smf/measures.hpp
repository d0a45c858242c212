#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "smf/dynamics.hpp"
#include "smf/model.hpp"
#include "smf/rng.hpp"
#include "smf/wasserstein.hpp"

// Double-layer empirical measures (1/n) sum_i delta_{(theta_i, omega_i)} and
// the distances used to compare them: the coupling upper bounds Delta(T) and
// its capped variant, exact Wasserstein marginals, a certified dictionary
// lower bound on d_BL, and the Gronwall-type theoretical bound.

namespace smf {

// Non-owning view of trajectories + media as an empirical path measure.
struct EmpiricalMeasure {
  const double* trajectories = nullptr;  // (steps+1) x n, time-major
  const double* media = nullptr;         // n x d
  int n = 0;
  int steps = 0;
  int d = 1;
  double dt = 0.0;
  double T = 0.0;

  double position(int t, int i) const { return trajectories[static_cast<std::size_t>(t) * n + i]; }
  const double* media_of(int i) const { return media + static_cast<std::size_t>(i) * d; }

  static EmpiricalMeasure of_sparse(const TrajectoryPair& p) {
    return {p.theta_sparse.data(), p.media.data(), p.n, p.steps, p.d, p.dt, p.T};
  }
  static EmpiricalMeasure of_dense(const TrajectoryPair& p) {
    return {p.theta_dense.data(), p.media.data(), p.n, p.steps, p.d, p.dt, p.T};
  }
  static EmpiricalMeasure of(const Ensemble& e) {
    return {e.theta.data(), e.media.data(), e.n, e.steps, e.d, e.dt, e.T};
  }
};

struct TimeMarginal {
  std::vector<double> positions;  // theta_i(t)
  const double* media = nullptr;  // paired media (view)
  int n = 0;
  int d = 1;
};

// Time-t projection (grid times only; no interpolation).
inline TimeMarginal marginal(const EmpiricalMeasure& m, double t) {
  const double raw = t / m.dt;
  const int k = static_cast<int>(std::llround(raw));
  if (k < 0 || k > m.steps || std::fabs(raw - k) > 1e-9 * std::max(1.0, raw))
    throw std::invalid_argument("marginal: t is not on the step grid");
  TimeMarginal out;
  out.n = m.n;
  out.d = m.d;
  out.media = m.media;
  out.positions.resize(m.n);
  for (int i = 0; i < m.n; ++i) out.positions[i] = m.position(k, i);
  return out;
}

struct CouplingDistanceReport {
  double delta_T = 0.0;         // Delta(T) = (1/n) sum_i sup_{s<=T} |delta_i(s)|
  double delta_T_capped = 0.0;  // same with per-particle cap at 1
  std::vector<double> per_time_delta;  // Delta(t) on the step grid
  std::vector<double> w1_marginals;    // exact W1 between time-t position marginals
};

inline CouplingDistanceReport coupling_delta(const TrajectoryPair& pair) {
  if (pair.theta_sparse.size() != pair.theta_dense.size())
    throw std::invalid_argument("coupling_delta: mismatched trajectory shapes");
  const int n = pair.n, steps = pair.steps;
  CouplingDistanceReport r;
  r.per_time_delta.resize(steps + 1);
  r.w1_marginals.resize(steps + 1);
  std::vector<double> running_sup(n, 0.0);
  std::vector<double> xs(n), xd(n);
  for (int t = 0; t <= steps; ++t) {
    const double* s = pair.sparse_at(t);
    const double* de = pair.dense_at(t);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const double di = std::fabs(s[i] - de[i]);
      if (di > running_sup[i]) running_sup[i] = di;
      acc += running_sup[i];
    }
    r.per_time_delta[t] = acc / n;
    std::copy(s, s + n, xs.begin());
    std::copy(de, de + n, xd.begin());
    std::sort(xs.begin(), xs.end());
    std::sort(xd.begin(), xd.end());
    double w1 = 0.0;
    for (int i = 0; i < n; ++i) w1 += std::fabs(xs[i] - xd[i]);
    r.w1_marginals[t] = w1 / n;
  }
  r.delta_T = r.per_time_delta[steps];
  double capped = 0.0;
  for (int i = 0; i < n; ++i) capped += std::min(running_sup[i], 1.0);
  r.delta_T_capped = capped / n;
  return r;
}

// --- dictionary lower bound on d_BL --------------------------------------

namespace detail {

// A bounded-Lipschitz test function on (path, media), normalized so
// ||h||_BL = 2(||h||_inf + ||h||_Lip) <= 1 for the ground metric
// max(sup_t |theta - theta'|, |omega - omega'|_inf).
struct BlFeature {
  bool fourier = true;
  // fourier: h0 = cos(sum_k v_k u_{c_k} + phase), rescaled by 2(1 + |v|_1)
  std::vector<int> coords;       // coordinate indices (time index, or steps+1+j for media j)
  std::vector<double> freq;
  double phase = 0.0;
  // ramp: h0 = clamp((u_c - center) * slope, -clip, clip), rescaled by 2(clip + slope)
  double center = 0.0, slope = 1.0, clip = 1.0;

  double coordinate(const EmpiricalMeasure& m, int i, int c) const {
    if (c <= m.steps) return m.position(c, i);
    return m.media_of(i)[c - (m.steps + 1)];
  }

  double eval(const EmpiricalMeasure& m, int i) const {
    if (fourier) {
      double s = phase;
      double norm1 = 0.0;
      for (std::size_t k = 0; k < coords.size(); ++k) {
        s += freq[k] * coordinate(m, i, coords[k]);
        norm1 += std::fabs(freq[k]);
      }
      return std::cos(s) / (2.0 * (1.0 + norm1));
    }
    const double u = (coordinate(m, i, coords[0]) - center) * slope;
    return std::clamp(u, -clip, clip) / (2.0 * (clip + slope));
  }

  double mean(const EmpiricalMeasure& m) const {
    double acc = 0.0;
    for (int i = 0; i < m.n; ++i) acc += eval(m, i);
    return acc / m.n;
  }
};

}  // namespace detail

// Certified lower bound on d_BL(a, b): sup over a randomized dictionary of
// BL-normalized test functions of |int h d(a - b)|. Fourier features probe
// joint path/media structure; ramp features centered between sampled atom
// values capture quantile splits of single coordinates.
inline double dbl_lower_bound(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                              int dictionary_size, std::uint64_t seed) {
  if (a.steps != b.steps || a.d != b.d || std::fabs(a.T - b.T) > 1e-12)
    throw std::invalid_argument("dbl_lower_bound: measures on different grids");
  rng::Stream st(seed, rng::kDictionary);
  const int ncoords = a.steps + 1 + a.d;
  static const double kScales[] = {0.125, 0.5, 2.0};
  double best = 0.0;
  for (int f = 0; f < dictionary_size; ++f) {
    detail::BlFeature feat;
    if (f % 2 == 0) {
      feat.fourier = true;
      const int k = 1 + static_cast<int>(st.next_below(4));
      const double scale = kScales[f % 3];
      for (int c = 0; c < k; ++c) {
        feat.coords.push_back(static_cast<int>(st.next_below(ncoords)));
        feat.freq.push_back(scale * st.next_normal());
      }
      feat.phase = kTwoPi * st.next_uniform();
    } else {
      feat.fourier = false;
      const int c = static_cast<int>(st.next_below(ncoords));
      feat.coords.push_back(c);
      const int ia = static_cast<int>(st.next_below(a.n));
      const int ib = static_cast<int>(st.next_below(b.n));
      const double va = feat.coordinate(a, ia, c);
      const double vb = feat.coordinate(b, ib, c);
      feat.center = 0.5 * (va + vb);
      feat.slope = 1.0;
      const double gap = 0.5 * std::fabs(va - vb);
      feat.clip = gap > 1e-12 ? gap : 1.0;
    }
    best = std::max(best, std::fabs(feat.mean(a) - feat.mean(b)));
  }
  return best;
}

// Right-hand side of the Wasserstein Gronwall bound for L1-Fourier
// interactions:
//   T exp{||W||_inf (2 lip_phi + lip_psi) T} * 4 ||m_phi||_TV * ||D|| / n.
inline double gronwall_wasserstein_bound(const InteractionModel& model, double norm_d, int n,
                                         double T) {
  if (!model.fourier)
    throw std::invalid_argument("gronwall_wasserstein_bound: model has no Fourier representation");
  if (norm_d < 0.0) throw std::invalid_argument("gronwall_wasserstein_bound: norm_d must be >= 0");
  const double rate = model.sup_w * (2.0 * model.lip_phi + model.lip_psi);
  return T * std::exp(rate * T) * 4.0 * tv_norm(*model.fourier) * norm_d / static_cast<double>(n);
}

}  // namespace smf
