#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "smf/model.hpp"
#include "smf/rng.hpp"

// Gaussian mollification phi_eps(x) = E[phi(x + eps N)] by Gauss-Hermite
// quadrature, the smooth bump cutoff, and the combined compactly supported
// approximation phi^{eps,R}(x) = phi_eps(x) * bump(|x|_2^2 / R^2).

namespace smf {

// Physicists' Gauss-Hermite rule: integral e^{-t^2} g(t) dt ~ sum w_k g(t_k).
// Nodes by Newton iteration on the Hermite recurrence; self-checked in tests
// against sum w = sqrt(pi) and low Gaussian moments.
struct GaussHermite {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussHermite(int m) {
    if (m < 1 || m > 64) throw std::invalid_argument("GaussHermite: order out of range");
    nodes.resize(m);
    weights.resize(m);
    const double pi_quarter = 0.7511255444649425;  // pi^{-1/4}
    for (int i = 0; i < m; ++i) {
      // Standard initial guesses, then Newton on H_m.
      double t;
      if (i == 0)
        t = std::sqrt(2.0 * m + 1.0) - 1.85575 * std::pow(2.0 * m + 1.0, -1.0 / 6.0);
      else if (i == 1)
        t = nodes[0] - 1.14 * std::pow(static_cast<double>(m), 0.426) / nodes[0];
      else if (i == 2)
        t = 1.86 * nodes[1] - 0.86 * nodes[0];
      else if (i == 3)
        t = 1.91 * nodes[2] - 0.91 * nodes[1];
      else
        t = 2.0 * nodes[i - 1] - nodes[i - 2];
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        // Orthonormal Hermite recurrence.
        double p0 = pi_quarter, p1 = 0.0;
        for (int k = 0; k < m; ++k) {
          const double p2 = p1;
          p1 = p0;
          p0 = t * std::sqrt(2.0 / (k + 1.0)) * p1 - std::sqrt(static_cast<double>(k) / (k + 1.0)) * p2;
        }
        dp = std::sqrt(2.0 * m) * p1;
        const double step = p0 / dp;
        t -= step;
        if (std::fabs(step) < 1e-15) break;
      }
      nodes[i] = t;
      weights[i] = 2.0 / (dp * dp);
    }
    // Newton found them descending; ascending is friendlier.
    for (int i = 0; i < m / 2; ++i) {
      std::swap(nodes[i], nodes[m - 1 - i]);
      std::swap(weights[i], weights[m - 1 - i]);
    }
  }
};

// Smooth bump: 1 on [-1,1], 0 outside (-2,2), exponential C-infinity
// transition in between, monotone on each side, ||bump||_inf <= 1.
inline double bump(double u) {
  const double s = std::fabs(u) - 1.0;
  if (s <= 0.0) return 1.0;
  if (s >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - s * s));
}

// Grid-estimated sup of |bump'|; the recorded constant entering the
// mollified-gradient bound.
inline double bump_derivative_max() {
  static const double value = [] {
    double best = 0.0;
    const int grid = 400000;
    for (int i = 1; i < grid; ++i) {
      const double s = static_cast<double>(i) / grid;
      const double one_minus = 1.0 - s * s;
      const double f = std::exp(1.0 - 1.0 / one_minus) * 2.0 * s / (one_minus * one_minus);
      if (f > best) best = f;
    }
    return best;
  }();
  return value;
}

// E |N_k| for a k-dimensional standard normal: sqrt(2) Gamma((k+1)/2) / Gamma(k/2).
inline double expected_normal_norm(int k) {
  if (k < 1) throw std::invalid_argument("expected_normal_norm: k must be >= 1");
  return std::sqrt(2.0) * std::tgamma((k + 1) / 2.0) / std::tgamma(k / 2.0);
}

namespace detail {

// Tensorized Gauss-Hermite approximation of E[f(x + eps N_k)], k <= 4.
inline double mollify_tensor(const std::function<double(const double*)>& f, int k, double eps,
                             const double* x, const GaussHermite& gh) {
  const int m = static_cast<int>(gh.nodes.size());
  const double root2 = std::sqrt(2.0);
  const double norm = std::pow(3.141592653589793238462643, -0.5 * k);
  double pt[4];
  double acc = 0.0;
  std::vector<int> idx(k, 0);
  for (;;) {
    double wprod = 1.0;
    for (int c = 0; c < k; ++c) {
      wprod *= gh.weights[idx[c]];
      pt[c] = x[c] + eps * root2 * gh.nodes[idx[c]];
    }
    acc += wprod * f(pt);
    int c = 0;
    for (; c < k; ++c) {
      if (++idx[c] < m) break;
      idx[c] = 0;
    }
    if (c == k) break;
  }
  return acc * norm;
}

inline double mollify_mc(const std::function<double(const double*)>& f, int k, double eps,
                         const double* x, int samples, std::uint64_t seed) {
  std::vector<double> pt(k);
  double acc = 0.0;
  for (int s = 0; s < samples; ++s) {
    for (int c = 0; c < k; ++c)
      pt[c] = x[c] + eps * rng::keyed_normal(seed, rng::kMonteCarlo, s, c);
    acc += f(pt.data());
  }
  return acc / samples;
}

}  // namespace detail

struct MollifyOptions {
  int quadrature_order = 16;
  int tensor_dim_cap = 4;
  bool mc_fallback = false;
  int mc_samples = 100000;
  std::uint64_t mc_seed = 2024;
};

// Gauss-Hermite approximation of E[f(x + eps N_k)]; deterministic for a
// fixed order. Dimensions above the tensor cap need the MC fallback.
inline double mollify(const std::function<double(const double*)>& f, int dim, double eps,
                      const double* x, const MollifyOptions& opts = {}) {
  if (!(eps > 0.0) || eps > 1.0) throw std::invalid_argument("mollify: eps outside (0, 1]");
  if (dim < 1) throw std::invalid_argument("mollify: dim must be >= 1");
  if (dim > opts.tensor_dim_cap) {
    if (!opts.mc_fallback)
      throw std::invalid_argument("mollify: dimension above tensor cap without MC fallback");
    return detail::mollify_mc(f, dim, eps, x, opts.mc_samples, opts.mc_seed);
  }
  static thread_local int cached_order = -1;
  static thread_local GaussHermite cached_rule(16);
  if (cached_order != opts.quadrature_order) {
    cached_rule = GaussHermite(opts.quadrature_order);
    cached_order = opts.quadrature_order;
  }
  return detail::mollify_tensor(f, dim, eps, x, cached_rule);
}

// The (eps, R) approximation of a model's pairwise interaction. Mollifies
// over the coordinates phi actually depends on -- a 1-D quadrature in the
// difference when phi(x,y,.) = phi0(y-x,.), the tensor rule otherwise --
// and applies the bump cutoff over the full (x, y, omega, pi) vector.
class MollifiedInteraction {
 public:
  MollifiedInteraction(const InteractionModel& model, double eps, double radius,
                       MollifyOptions opts = {})
      : model_(&model), eps_(eps), radius_(radius), opts_(opts), gh_(opts.quadrature_order) {
    if (!(eps > 0.0) || eps > 1.0)
      throw std::invalid_argument("MollifiedInteraction: eps outside (0, 1]");
    if (!(radius >= 1.0)) throw std::invalid_argument("MollifiedInteraction: R must be >= 1");
  }

  double epsilon() const { return eps_; }
  double radius() const { return radius_; }
  // Dimension whose Gaussian enters the accuracy constant E|N_k|.
  int active_dims() const { return model_->phi_active_dims; }

  // phi_eps without the cutoff.
  double mollified(double x, double y, const double* omega, const double* pi_media) const {
    if (model_->phi0) {
      // E[phi0((y-x) + eps(N2 - N1))]: 1-D rule at variance 2 eps^2.
      const double u = y - x;
      const double norm = 1.0 / std::sqrt(3.141592653589793238462643);
      double acc = 0.0;
      for (std::size_t k = 0; k < gh_.nodes.size(); ++k)
        acc += gh_.weights[k] * model_->phi0(u + 2.0 * eps_ * gh_.nodes[k], omega, pi_media);
      return acc * norm;
    }
    const double pt[2] = {x, y};
    auto f = [&](const double* q) { return model_->phi(q[0], q[1], omega, pi_media); };
    return detail::mollify_tensor(f, 2, eps_, pt, gh_);
  }

  // phi^{eps,R} = phi_eps * bump(|(x,y,omega,pi)|_2^2 / R^2).
  double operator()(double x, double y, const double* omega, const double* pi_media) const {
    double sq = x * x + y * y;
    for (int k = 0; k < model_->d; ++k)
      sq += omega[k] * omega[k] + pi_media[k] * pi_media[k];
    const double cut = bump(sq / (radius_ * radius_));
    if (cut == 0.0) return 0.0;
    return mollified(x, y, omega, pi_media) * cut;
  }

 private:
  const InteractionModel* model_;
  double eps_;
  double radius_;
  MollifyOptions opts_;
  GaussHermite gh_;
};

}  // namespace smf
