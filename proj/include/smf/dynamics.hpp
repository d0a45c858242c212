#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "smf/graph.hpp"
#include "smf/model.hpp"
#include "smf/rng.hpp"

// Euler-Maruyama integration of the coupled pair of systems: the sparse
// system driven by P = A/(pn) and the dense one driven by Pbar = W/n,
// sharing initial conditions and per-(particle, step) Brownian increments.
// All accumulations run in fixed index order, so output is byte-identical
// for any worker count, and both halves follow the same arithmetic path:
// when D == 0 the trajectories coincide bit-for-bit.

namespace smf {

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrajectoryPair {
  int n = 0;
  int steps = 0;
  double dt = 0.0;
  double T = 0.0;
  int d = 1;
  std::vector<double> theta_sparse;  // (steps+1) x n, time-major
  std::vector<double> theta_dense;
  std::vector<double> media;         // n x d
  std::vector<double> xi;
  std::uint64_t seed = 0;
  std::string model_id;
  std::uint64_t graph_fingerprint = 0;

  const double* sparse_at(int t) const { return theta_sparse.data() + static_cast<std::size_t>(t) * n; }
  const double* dense_at(int t) const { return theta_dense.data() + static_cast<std::size_t>(t) * n; }
};

struct Ensemble {
  int n = 0;
  int steps = 0;
  double dt = 0.0;
  double T = 0.0;
  int d = 1;
  std::vector<double> theta;  // (steps+1) x n
  std::vector<double> media;
  std::vector<double> xi;
  std::uint64_t seed = 0;
  std::string model_id;

  const double* at(int t) const { return theta.data() + static_cast<std::size_t>(t) * n; }
};

struct IntegrateOptions {
  double T = 1.0;
  double dt = 1e-3;
  double noise_scale = 1.0;
  std::uint64_t seed = 0;
  // Test hook: override the per-(particle, step) standard normals.
  std::function<double(int, int)> noise_override;
};

inline int step_count(double T, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("integrate: dt must be positive");
  const double raw = T / dt;
  const int steps = static_cast<int>(std::llround(raw));
  if (steps < 1 || std::fabs(raw - steps) > 1e-9 * std::max(1.0, raw))
    throw std::invalid_argument("integrate: T/dt must be integral");
  return steps;
}

// --- per-particle drift (audit surface; direct arithmetic) ---------------

// Sparse drift: sum over realized edges of P_{ij} phi(...) plus psi.
inline double drift_sparse(const InteractionModel& model, const GraphSample& g,
                           const double* state, int i) {
  if (!std::isfinite(state[i])) throw NumericalError("drift_sparse: non-finite state");
  const double scale = 1.0 / (g.p * static_cast<double>(g.n));
  double acc = 0.0;
  g.for_each_neighbor(i, [&](int j) {
    acc += model.phi(state[i], state[j], g.media_of(i), g.media_of(j));
  });
  return acc * scale + model.psi(state[i], g.media_of(i));
}

// Dense drift: full mean-field sum with weights W(omega_i, omega_j)/n.
inline double drift_dense(const InteractionModel& model, const std::vector<double>& media,
                          const double* state, int n, int i) {
  if (!std::isfinite(state[i])) throw NumericalError("drift_dense: non-finite state");
  const double* wi = media.data() + static_cast<std::size_t>(i) * model.d;
  double acc = 0.0;
  if (model.w_const) {
    for (int j = 0; j < n; ++j)
      acc += model.phi(state[i], state[j], wi, media.data() + static_cast<std::size_t>(j) * model.d);
    acc *= model.w_const_value / static_cast<double>(n);
  } else {
    for (int j = 0; j < n; ++j) {
      const double* wj = media.data() + static_cast<std::size_t>(j) * model.d;
      acc += (model.kernel_w(wi, wj) / static_cast<double>(n)) * model.phi(state[i], state[j], wi, wj);
    }
  }
  return acc + model.psi(state[i], wi);
}

// --- batch interaction evaluators ----------------------------------------

namespace detail {

// Weight view over either the realized graph, the mean-field kernel, or an
// explicit matrix. The evaluators below accumulate in ascending j for every
// view, which is what makes the D == 0 coupling exact.
struct WeightsView {
  enum Kind { kSparse, kDense, kExplicit } kind = kDense;
  const GraphSample* graph = nullptr;   // kSparse
  const InteractionModel* model = nullptr;
  const std::vector<double>* media = nullptr;
  const Matrix* matrix = nullptr;       // kExplicit
  int n = 0;

  const double* media_of(int i) const { return media->data() + static_cast<std::size_t>(i) * model->d; }
};

// Direct pairwise evaluation, O(n^2) dense / O(edges) sparse per step.
inline void interactions_direct(const WeightsView& w, const double* state, double* out) {
  const InteractionModel& m = *w.model;
  const int n = w.n;
  switch (w.kind) {
    case WeightsView::kSparse: {
      const GraphSample& g = *w.graph;
      const double scale = 1.0 / (g.p * static_cast<double>(n));
      for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        g.for_each_neighbor(i, [&](int j) {
          acc += m.phi(state[i], state[j], g.media_of(i), g.media_of(j));
        });
        out[i] = acc * scale;
      }
      break;
    }
    case WeightsView::kDense: {
      if (m.w_const) {
        const double scale = m.w_const_value / static_cast<double>(n);
        for (int i = 0; i < n; ++i) {
          double acc = 0.0;
          const double* wi = w.media_of(i);
          for (int j = 0; j < n; ++j) acc += m.phi(state[i], state[j], wi, w.media_of(j));
          out[i] = acc * scale;
        }
      } else {
        for (int i = 0; i < n; ++i) {
          double acc = 0.0;
          const double* wi = w.media_of(i);
          for (int j = 0; j < n; ++j) {
            const double* wj = w.media_of(j);
            acc += (m.kernel_w(wi, wj) / static_cast<double>(n)) * m.phi(state[i], state[j], wi, wj);
          }
          out[i] = acc;
        }
      }
      break;
    }
    case WeightsView::kExplicit: {
      const Matrix& mat = *w.matrix;
      for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        const double* wi = w.media_of(i);
        for (int j = 0; j < n; ++j) {
          const double mij = mat(i, j);
          if (mij != 0.0) acc += mij * m.phi(state[i], state[j], wi, w.media_of(j));
        }
        out[i] = acc;
      }
      break;
    }
  }
}

// Rank-one evaluation through the Fourier atoms: with
//   phi = sum_a w_a F_a(x_i, omega_i) E_a(x_j, omega_j),
// the interaction sum needs only per-atom aggregates of E. Valid for any
// weights on the sparse side and for constant kernels on the dense side.
// Cost O(n * atoms) dense, O(edges * atoms) sparse.
class FourierEvaluator {
 public:
  FourierEvaluator(const InteractionModel& model, int n)
      : model_(model), n_(n), atoms_(model.fourier->atoms) {
    e_.resize(atoms_.size() * n);
    f_.resize(atoms_.size() * n);
  }

  void precompute(const WeightsView& w, const double* state) {
    const int d = model_.d;
    for (std::size_t a = 0; a < atoms_.size(); ++a) {
      const auto& atom = atoms_[a];
      std::complex<double>* erow = e_.data() + a * n_;
      std::complex<double>* frow = f_.data() + a * n_;
      for (int j = 0; j < n_; ++j) {
        const double* wj = w.media_of(j);
        double pe = atom.z[1] * state[j];
        double pf = atom.z[0] * state[j];
        for (int k = 0; k < d; ++k) {
          pe += atom.z[2 + d + k] * wj[k];
          pf += atom.z[2 + k] * wj[k];
        }
        pe *= kTwoPi;
        pf *= kTwoPi;
        erow[j] = {std::cos(pe), std::sin(pe)};
        frow[j] = {std::cos(pf), std::sin(pf)};
      }
    }
  }

  void interactions(const WeightsView& w, double* out) {
    switch (w.kind) {
      case WeightsView::kSparse: {
        const GraphSample& g = *w.graph;
        const double scale = 1.0 / (g.p * static_cast<double>(n_));
        for (int i = 0; i < n_; ++i) {
          double acc = 0.0;
          for (std::size_t a = 0; a < atoms_.size(); ++a) {
            std::complex<double> inner(0.0, 0.0);
            const std::complex<double>* erow = e_.data() + a * n_;
            g.for_each_neighbor(i, [&](int j) { inner += erow[j]; });
            acc += (atoms_[a].weight * f_[a * n_ + i] * inner).real();
          }
          out[i] = acc * scale;
        }
        break;
      }
      case WeightsView::kDense: {
        const double scale = model_.w_const_value / static_cast<double>(n_);
        std::vector<std::complex<double>> totals(atoms_.size(), {0.0, 0.0});
        for (std::size_t a = 0; a < atoms_.size(); ++a) {
          const std::complex<double>* erow = e_.data() + a * n_;
          std::complex<double> s(0.0, 0.0);
          for (int j = 0; j < n_; ++j) s += erow[j];
          totals[a] = s;
        }
        for (int i = 0; i < n_; ++i) {
          double acc = 0.0;
          for (std::size_t a = 0; a < atoms_.size(); ++a)
            acc += (atoms_[a].weight * f_[a * n_ + i] * totals[a]).real();
          out[i] = acc * scale;
        }
        break;
      }
      case WeightsView::kExplicit:
        throw std::invalid_argument("FourierEvaluator: explicit weights use the direct path");
    }
  }

 private:
  const InteractionModel& model_;
  int n_;
  const std::vector<FourierAtom>& atoms_;
  std::vector<std::complex<double>> e_, f_;
};

inline bool fourier_path_ok(const InteractionModel& m, const WeightsView& w) {
  if (!m.fourier) return false;
  if (w.kind == WeightsView::kExplicit) return false;
  if (w.kind == WeightsView::kDense && !m.w_const) return false;
  return true;
}

struct StepStats {
  double max_interaction = 0.0;  // running max of |interaction term|
};

// Advances `state` by one Euler-Maruyama step using precomputed
// interactions + psi + shared noise.
inline void apply_step(const InteractionModel& m, const WeightsView& w, const double* state,
                       const double* interactions, const double* noise, double dt,
                       double noise_amp, double* next, StepStats* stats) {
  const int n = w.n;
  for (int i = 0; i < n; ++i) {
    const double drift = interactions[i] + m.psi(state[i], w.media_of(i));
    next[i] = state[i] + dt * drift + noise_amp * noise[i];
    if (stats) stats->max_interaction = std::max(stats->max_interaction, std::fabs(interactions[i]));
  }
}

}  // namespace detail

// Integrates one system for an arbitrary weight view. Used directly by the
// approximation and Fokker-Planck comparison flows, and as both halves of
// the coupled integrator.
inline Ensemble integrate_view(const InteractionModel& model, const detail::WeightsView& w,
                               const IntegrateOptions& opts, detail::StepStats* stats = nullptr) {
  const int n = w.n;
  const int steps = step_count(opts.T, opts.dt);
  if (opts.noise_scale < 0.0) throw std::invalid_argument("integrate: noise_scale must be >= 0");

  Ensemble e;
  e.n = n;
  e.steps = steps;
  e.dt = opts.dt;
  e.T = opts.T;
  e.d = model.d;
  e.media = *w.media;
  e.seed = opts.seed;
  e.model_id = model.id;
  e.theta.resize(static_cast<std::size_t>(steps + 1) * n);
  e.xi.resize(n);
  for (int i = 0; i < n; ++i) {
    e.xi[i] = model.sample_xi(opts.seed, i);
    e.theta[i] = e.xi[i];
  }

  std::optional<detail::FourierEvaluator> fe;
  if (detail::fourier_path_ok(model, w)) fe.emplace(model, n);
  const double noise_amp = opts.noise_scale * std::sqrt(opts.dt);
  std::vector<double> inter(n), noise(n);

  for (int t = 0; t < steps; ++t) {
    const double* cur = e.theta.data() + static_cast<std::size_t>(t) * n;
    double* nxt = e.theta.data() + static_cast<std::size_t>(t + 1) * n;
    if (fe) {
      fe->precompute(w, cur);
      fe->interactions(w, inter.data());
    } else {
      detail::interactions_direct(w, cur, inter.data());
    }
    for (int i = 0; i < n; ++i)
      noise[i] = opts.noise_override ? opts.noise_override(i, t)
                                     : rng::keyed_normal(opts.seed, rng::kNoise, i, t);
    detail::apply_step(model, w, cur, inter.data(), noise.data(), opts.dt, noise_amp, nxt, stats);
    for (int i = 0; i < n; ++i)
      if (!std::isfinite(nxt[i]))
        throw NumericalError("integrate: non-finite state at step " + std::to_string(t + 1) +
                             ", particle " + std::to_string(i));
  }
  return e;
}

inline Ensemble integrate_single(const InteractionModel& model, const GraphSample& g,
                                 const IntegrateOptions& opts) {
  detail::WeightsView w;
  w.kind = detail::WeightsView::kSparse;
  w.graph = &g;
  w.model = &model;
  w.media = &g.media;
  w.n = g.n;
  return integrate_view(model, w, opts);
}

inline Ensemble integrate_single_dense(const InteractionModel& model,
                                       const std::vector<double>& media,
                                       const IntegrateOptions& opts) {
  detail::WeightsView w;
  w.kind = detail::WeightsView::kDense;
  w.model = &model;
  w.media = &media;
  w.n = static_cast<int>(media.size() / model.d);
  return integrate_view(model, w, opts);
}

inline Ensemble integrate_single_matrix(const InteractionModel& model, const Matrix& weights,
                                        const std::vector<double>& media,
                                        const IntegrateOptions& opts) {
  detail::WeightsView w;
  w.kind = detail::WeightsView::kExplicit;
  w.matrix = &weights;
  w.model = &model;
  w.media = &media;
  w.n = static_cast<int>(weights.rows());
  return integrate_view(model, w, opts);
}

struct CoupledRunInfo {
  double max_interaction_sparse = 0.0;
  double max_interaction_dense = 0.0;
};

// The coupled pair: both systems advanced in lockstep from the same xi with
// the same increments. Both halves use the same evaluator kind, chosen once
// from the model, so identical weight matrices give identical float streams.
inline TrajectoryPair integrate_coupled(const InteractionModel& model, const GraphSample& g,
                                        const IntegrateOptions& opts,
                                        CoupledRunInfo* info = nullptr) {
  const int n = g.n;
  const int steps = step_count(opts.T, opts.dt);
  if (opts.noise_scale < 0.0) throw std::invalid_argument("integrate: noise_scale must be >= 0");

  detail::WeightsView ws, wd;
  ws.kind = detail::WeightsView::kSparse;
  ws.graph = &g;
  ws.model = &model;
  ws.media = &g.media;
  ws.n = n;
  wd.kind = detail::WeightsView::kDense;
  wd.model = &model;
  wd.media = &g.media;
  wd.n = n;

  TrajectoryPair pair;
  pair.n = n;
  pair.steps = steps;
  pair.dt = opts.dt;
  pair.T = opts.T;
  pair.d = model.d;
  pair.media = g.media;
  pair.seed = opts.seed;
  pair.model_id = model.id;
  pair.graph_fingerprint = rng::keyed_u64(g.seed, 0xF17Full, g.n, g.edge_count);
  pair.theta_sparse.resize(static_cast<std::size_t>(steps + 1) * n);
  pair.theta_dense.resize(static_cast<std::size_t>(steps + 1) * n);
  pair.xi.resize(n);
  for (int i = 0; i < n; ++i) {
    pair.xi[i] = model.sample_xi(opts.seed, i);
    pair.theta_sparse[i] = pair.xi[i];
    pair.theta_dense[i] = pair.xi[i];
  }

  std::optional<detail::FourierEvaluator> fes, fed;
  if (detail::fourier_path_ok(model, ws) && detail::fourier_path_ok(model, wd)) {
    fes.emplace(model, n);
    fed.emplace(model, n);
  }

  const double noise_amp = opts.noise_scale * std::sqrt(opts.dt);
  std::vector<double> inter_s(n), inter_d(n), noise(n);
  detail::StepStats stat_s, stat_d;

  for (int t = 0; t < steps; ++t) {
    const double* cs = pair.theta_sparse.data() + static_cast<std::size_t>(t) * n;
    const double* cd = pair.theta_dense.data() + static_cast<std::size_t>(t) * n;
    double* ns = pair.theta_sparse.data() + static_cast<std::size_t>(t + 1) * n;
    double* nd = pair.theta_dense.data() + static_cast<std::size_t>(t + 1) * n;
    if (fes) {
      fes->precompute(ws, cs);
      fes->interactions(ws, inter_s.data());
      fed->precompute(wd, cd);
      fed->interactions(wd, inter_d.data());
    } else {
      detail::interactions_direct(ws, cs, inter_s.data());
      detail::interactions_direct(wd, cd, inter_d.data());
    }
    for (int i = 0; i < n; ++i)
      noise[i] = opts.noise_override ? opts.noise_override(i, t)
                                     : rng::keyed_normal(opts.seed, rng::kNoise, i, t);
    detail::apply_step(model, ws, cs, inter_s.data(), noise.data(), opts.dt, noise_amp, ns, &stat_s);
    detail::apply_step(model, wd, cd, inter_d.data(), noise.data(), opts.dt, noise_amp, nd, &stat_d);
    for (int i = 0; i < n; ++i)
      if (!std::isfinite(ns[i]) || !std::isfinite(nd[i]))
        throw NumericalError("integrate_coupled: non-finite state at step " +
                             std::to_string(t + 1) + ", particle " + std::to_string(i));
  }
  if (info) {
    info->max_interaction_sparse = stat_s.max_interaction;
    info->max_interaction_dense = stat_d.max_interaction;
  }
  return pair;
}

}  // namespace smf
