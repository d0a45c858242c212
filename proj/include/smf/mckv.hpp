#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "smf/measures.hpp"
#include "smf/model.hpp"
#include "smf/wasserstein.hpp"

// Forward solver for the limiting nonlinear Fokker-Planck system
//   d/dt q_t^w = -d/dx (beta^w q_t^w) + (1/2) d^2/dx^2 q_t^w,
//   beta^w(x)  = sum_pi weight(pi) int phi_bar(x, y, w, pi) q_t^pi(y) dy + psi(x, w),
// over a finite set of media atoms. Conservative finite-volume splitting:
// upwind advection then explicit diffusion, both in flux form, periodic on
// [0, 2pi) for 2pi-periodic interactions and no-flux walls otherwise.

namespace smf {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DensityFlow {
  bool periodic = true;
  double x_lo = 0.0, x_hi = kTwoPi;
  int cells = 0;
  double dx = 0.0;
  double dt_pde = 0.0;
  std::vector<MediaAtom> atoms;
  std::vector<double> checkpoint_times;
  std::vector<std::vector<double>> q;  // [checkpoint][atom * cells + c]
  std::vector<double> mass_error;      // per checkpoint: max_atom |int q dx - 1|
  double clipped_mass = 0.0;           // total negative mass clipped (logged)

  double cell_center(int c) const { return x_lo + (c + 0.5) * dx; }
  int checkpoint_index(double t) const {
    for (std::size_t k = 0; k < checkpoint_times.size(); ++k)
      if (std::fabs(checkpoint_times[k] - t) <= 1e-9 * std::max(1.0, std::fabs(t)))
        return static_cast<int>(k);
    throw std::invalid_argument("DensityFlow: no checkpoint at t=" + std::to_string(t));
  }
};

struct MckvOptions {
  int media_atoms = 1;
  int grid_points = 256;
  double T = 1.0;
  double dt_pde = 0.0;        // 0: auto, largest CFL-safe step that lands on checkpoints
  int checkpoints = 8;        // intervals between stored snapshots (plus t=0)
  double domain_halfwidth = 8.0;  // truncated domain for non-periodic models
  std::uint64_t seed = 0;
};

namespace detail {

// beta assembly: K[(a,i),(b,j)] = phi_bar(x_i, y_j, w_a, w_b); per step
// beta_{a,i} = K . (weight_b * q_b(j) * dx) + psi(x_i, w_a).
class DriftAssembler {
 public:
  DriftAssembler(const InteractionModel& model, const DensityFlow& flow) : model_(model) {
    const int m = static_cast<int>(flow.atoms.size());
    const int g = flow.cells;
    cells_ = g;
    atoms_ = m;
    kernel_.resize(static_cast<std::size_t>(m) * g * m * g);
    for (int a = 0; a < m; ++a)
      for (int i = 0; i < g; ++i) {
        const double x = flow.cell_center(i);
        double* row = kernel_.data() + (static_cast<std::size_t>(a) * g + i) * (m * g);
        for (int b = 0; b < m; ++b)
          for (int j = 0; j < g; ++j)
            row[static_cast<std::size_t>(b) * g + j] =
                model.phi_bar(x, flow.cell_center(j), flow.atoms[a].omega.data(),
                              flow.atoms[b].omega.data());
      }
    psi_.resize(static_cast<std::size_t>(m) * g);
    for (int a = 0; a < m; ++a)
      for (int i = 0; i < g; ++i)
        psi_[static_cast<std::size_t>(a) * g + i] =
            model.psi(flow.cell_center(i), flow.atoms[a].omega.data());
    zero_kernel_ = true;
    for (double v : kernel_)
      if (v != 0.0) {
        zero_kernel_ = false;
        break;
      }
  }

  // q: [atom * cells + j]; out beta same layout.
  void assemble(const DensityFlow& flow, const std::vector<double>& q,
                std::vector<double>& beta) const {
    if (zero_kernel_) {
      beta = psi_;
      return;
    }
    const int m = atoms_, g = cells_;
    std::vector<double> weighted(static_cast<std::size_t>(m) * g);
    for (int b = 0; b < m; ++b)
      for (int j = 0; j < g; ++j)
        weighted[static_cast<std::size_t>(b) * g + j] =
            flow.atoms[b].weight * q[static_cast<std::size_t>(b) * g + j] * flow.dx;
    beta.assign(static_cast<std::size_t>(m) * g, 0.0);
    for (std::size_t r = 0; r < beta.size(); ++r) {
      const double* row = kernel_.data() + r * weighted.size();
      double acc = 0.0;
      for (std::size_t c = 0; c < weighted.size(); ++c) acc += row[c] * weighted[c];
      beta[r] = acc + psi_[r];
    }
  }

  double psi_sup() const {
    double s = 0.0;
    for (double v : psi_) s = std::max(s, std::fabs(v));
    return s;
  }

 private:
  const InteractionModel& model_;
  int cells_ = 0, atoms_ = 0;
  bool zero_kernel_ = false;
  std::vector<double> kernel_;
  std::vector<double> psi_;
};

// One conservative split step for a single media atom's density.
inline void advance_density(std::vector<double>& q, const double* beta, int g, double dx,
                            double dt, bool periodic, std::vector<double>& flux,
                            double* clipped) {
  // Upwind advection in flux form; face velocity is the cell average.
  flux.assign(g + 1, 0.0);
  for (int f = 1; f < g; ++f) {
    const double v = 0.5 * (beta[f - 1] + beta[f]);
    flux[f] = v > 0.0 ? v * q[f - 1] : v * q[f];
  }
  if (periodic) {
    const double v = 0.5 * (beta[g - 1] + beta[0]);
    const double fw = v > 0.0 ? v * q[g - 1] : v * q[0];
    flux[0] = fw;
    flux[g] = fw;
  }  // walls: boundary fluxes stay 0
  const double r = dt / dx;
  for (int c = 0; c < g; ++c) q[c] -= r * (flux[c + 1] - flux[c]);

  // Explicit diffusion with coefficient 1/2, flux form.
  flux.assign(g + 1, 0.0);
  const double half_over_dx = 0.5 / dx;
  for (int f = 1; f < g; ++f) flux[f] = -half_over_dx * (q[f] - q[f - 1]);
  if (periodic) {
    const double fw = -half_over_dx * (q[0] - q[g - 1]);
    flux[0] = fw;
    flux[g] = fw;
  }
  for (int c = 0; c < g; ++c) q[c] -= r * (flux[c + 1] - flux[c]);

  // Upwind + explicit diffusion preserve positivity under the CFL guard;
  // anything below the -1e-12 floor is clipped and the mass logged.
  for (int c = 0; c < g; ++c) {
    if (q[c] < -1e-12) {
      *clipped += (-1e-12 - q[c]) * dx;
      q[c] = -1e-12;
    }
  }
}

}  // namespace detail

// Discretizes the initial law on the grid (cell midpoint density, normalized).
inline std::vector<double> discretize_initial(const InteractionModel& model,
                                              const DensityFlow& flow) {
  if (!model.lambda_density)
    throw ConfigError("solve_mckv: model carries no initial density");
  std::vector<double> q(flow.cells);
  double mass = 0.0;
  for (int c = 0; c < flow.cells; ++c) {
    double x = flow.cell_center(c);
    double v = model.lambda_density(x);
    if (flow.periodic && v == 0.0) {
      // periodic models may state the density on a shifted fundamental domain
      v = std::max(model.lambda_density(x - kTwoPi), model.lambda_density(x + kTwoPi));
    }
    q[c] = v;
    mass += v * flow.dx;
  }
  if (!(mass > 0.0)) throw ConfigError("solve_mckv: initial density vanishes on the grid");
  for (double& v : q) v /= mass;
  return q;
}

inline DensityFlow solve_mckv(const InteractionModel& model, const MckvOptions& opts) {
  if (opts.grid_points < 8) throw ConfigError("solve_mckv: grid too coarse");
  if (opts.media_atoms < 1) throw ConfigError("solve_mckv: need at least one media atom");
  if (!model.media_atoms) throw ConfigError("solve_mckv: model has no media discretization");

  DensityFlow flow;
  flow.periodic = model.periodic_x;
  if (flow.periodic) {
    flow.x_lo = 0.0;
    flow.x_hi = kTwoPi;
  } else {
    flow.x_lo = -opts.domain_halfwidth;
    flow.x_hi = opts.domain_halfwidth;
  }
  flow.cells = opts.grid_points;
  flow.dx = (flow.x_hi - flow.x_lo) / flow.cells;
  flow.atoms = model.media_atoms(opts.media_atoms);
  double wsum = 0.0;
  for (const auto& a : flow.atoms) wsum += a.weight;
  if (std::fabs(wsum - 1.0) > 1e-9) throw ConfigError("solve_mckv: media weights must sum to 1");

  const int m = static_cast<int>(flow.atoms.size());
  const int g = flow.cells;
  if (static_cast<std::size_t>(m) * g > 4096)
    throw ConfigError("solve_mckv: media_atoms * grid_points too large for the kernel matrix");
  std::vector<double> q(static_cast<std::size_t>(m) * g);
  const std::vector<double> q0 = discretize_initial(model, flow);
  for (int a = 0; a < m; ++a) std::copy(q0.begin(), q0.end(), q.begin() + static_cast<std::size_t>(a) * g);

  detail::DriftAssembler assembler(model, flow);

  // CFL guard, up front, from the drift bound.
  const double beta_bound = model.sup_w * model.sup_phi + assembler.psi_sup();
  const double dt_diff = flow.dx * flow.dx / 2.0;
  const double dt_adv = beta_bound > 0.0 ? flow.dx / beta_bound : 1e100;
  double dt = opts.dt_pde;
  const double dt_max = std::min(dt_diff, dt_adv);
  if (dt > 0.0) {
    if (dt > dt_diff) throw ConfigError("solve_mckv: dt_pde violates the diffusive CFL dx^2/2");
    if (beta_bound * dt / flow.dx > 1.0)
      throw ConfigError("solve_mckv: dt_pde violates the advective CFL");
  }

  const int checkpoints = std::max(1, opts.checkpoints);
  const double t_chunk = opts.T / checkpoints;
  int steps_per_chunk;
  if (dt > 0.0) {
    steps_per_chunk = static_cast<int>(std::ceil(t_chunk / dt - 1e-12));
  } else {
    steps_per_chunk = static_cast<int>(std::ceil(t_chunk / dt_max - 1e-12));
  }
  dt = t_chunk / steps_per_chunk;
  flow.dt_pde = dt;

  flow.checkpoint_times.push_back(0.0);
  flow.q.push_back(q);
  flow.mass_error.push_back(0.0);

  std::vector<double> beta, flux;
  for (int chunk = 0; chunk < checkpoints; ++chunk) {
    for (int s = 0; s < steps_per_chunk; ++s) {
      assembler.assemble(flow, q, beta);
      for (int a = 0; a < m; ++a) {
        std::vector<double> qa(q.begin() + static_cast<std::size_t>(a) * g,
                               q.begin() + static_cast<std::size_t>(a + 1) * g);
        detail::advance_density(qa, beta.data() + static_cast<std::size_t>(a) * g, g, flow.dx,
                                dt, flow.periodic, flux, &flow.clipped_mass);
        std::copy(qa.begin(), qa.end(), q.begin() + static_cast<std::size_t>(a) * g);
      }
    }
    flow.checkpoint_times.push_back(t_chunk * (chunk + 1));
    flow.q.push_back(q);
    double err = 0.0;
    for (int a = 0; a < m; ++a) {
      double mass = 0.0;
      for (int c = 0; c < g; ++c) mass += q[static_cast<std::size_t>(a) * g + c] * flow.dx;
      err = std::max(err, std::fabs(mass - 1.0));
    }
    flow.mass_error.push_back(err);
  }
  return flow;
}

struct MixtureMarginal {
  std::vector<double> weights;                // per media atom
  std::vector<std::vector<double>> densities; // per media atom, over cells
};

// Pi_t Q: the media-weighted mixture of per-atom densities at a checkpoint.
inline MixtureMarginal mckv_marginal(const DensityFlow& flow, double t) {
  const int k = flow.checkpoint_index(t);
  MixtureMarginal out;
  const int g = flow.cells;
  for (std::size_t a = 0; a < flow.atoms.size(); ++a) {
    out.weights.push_back(flow.atoms[a].weight);
    out.densities.emplace_back(flow.q[k].begin() + a * g, flow.q[k].begin() + (a + 1) * g);
  }
  return out;
}

// Pooled x-marginal as a weighted atom list at cell midpoints.
inline WeightedSample marginal_atoms(const DensityFlow& flow, double t) {
  const auto mix = mckv_marginal(flow, t);
  WeightedSample s;
  for (int c = 0; c < flow.cells; ++c) {
    double w = 0.0;
    for (std::size_t a = 0; a < mix.weights.size(); ++a)
      w += mix.weights[a] * mix.densities[a][c] * flow.dx;
    s.values.push_back(flow.cell_center(c));
    s.weights.push_back(std::max(w, 0.0));
  }
  return s;
}

struct EmpiricalComparison {
  double pooled = 0.0;                // W1 between x-marginals (circular if periodic)
  std::vector<double> per_bucket;     // per media atom, when few atoms
};

// W1 between the empirical x-marginal at time t and the solver marginal.
inline EmpiricalComparison compare_to_empirical(const DensityFlow& flow,
                                                const EmpiricalMeasure& emp, double t) {
  const auto emp_marg = marginal(emp, t);
  const auto flow_atoms = marginal_atoms(flow, t);
  WeightedSample emp_atoms = WeightedSample::equal(emp_marg.positions);

  EmpiricalComparison out;
  if (flow.periodic)
    out.pooled = circular_wasserstein_1d(emp_atoms, flow_atoms, kTwoPi);
  else
    out.pooled = wasserstein_1d(emp_atoms, flow_atoms);

  const int m = static_cast<int>(flow.atoms.size());
  if (m <= 8 && m > 1) {
    const int k = flow.checkpoint_index(t);
    for (int a = 0; a < m; ++a) {
      WeightedSample bucket;
      for (int i = 0; i < emp.n; ++i) {
        // nearest media atom in Euclidean distance
        int best = 0;
        double best_d = 1e300;
        for (int b = 0; b < m; ++b) {
          double dsq = 0.0;
          for (int c = 0; c < emp.d; ++c) {
            const double diff = emp.media_of(i)[c] - flow.atoms[b].omega[c];
            dsq += diff * diff;
          }
          if (dsq < best_d) {
            best_d = dsq;
            best = b;
          }
        }
        if (best == a) bucket.values.push_back(emp_marg.positions[i]);
      }
      if (bucket.values.empty()) {
        out.per_bucket.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      WeightedSample atom_marg;
      for (int c = 0; c < flow.cells; ++c) {
        atom_marg.values.push_back(flow.cell_center(c));
        atom_marg.weights.push_back(std::max(flow.q[k][static_cast<std::size_t>(a) * flow.cells + c], 0.0) *
                                    flow.dx);
      }
      out.per_bucket.push_back(flow.periodic
                                   ? circular_wasserstein_1d(bucket, atom_marg, kTwoPi)
                                   : wasserstein_1d(bucket, atom_marg));
    }
  }
  return out;
}

// Freezes beta at a checkpoint's densities, advances one step, and reports
// the L1 change per unit time; near zero means a stationary self-consistent
// state. Defaults to the final checkpoint.
inline double stationarity_residual(const InteractionModel& model, const DensityFlow& flow,
                                    int checkpoint = -1) {
  const int m = static_cast<int>(flow.atoms.size());
  const int g = flow.cells;
  std::vector<double> q =
      checkpoint < 0 ? flow.q.back() : flow.q.at(static_cast<std::size_t>(checkpoint));
  detail::DriftAssembler assembler(model, flow);
  std::vector<double> beta, flux;
  assembler.assemble(flow, q, beta);
  std::vector<double> next = q;
  double clipped = 0.0;
  for (int a = 0; a < m; ++a) {
    std::vector<double> qa(next.begin() + static_cast<std::size_t>(a) * g,
                           next.begin() + static_cast<std::size_t>(a + 1) * g);
    detail::advance_density(qa, beta.data() + static_cast<std::size_t>(a) * g, g, flow.dx,
                            flow.dt_pde, flow.periodic, flux, &clipped);
    std::copy(qa.begin(), qa.end(), next.begin() + static_cast<std::size_t>(a) * g);
  }
  double l1 = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) l1 += std::fabs(next[i] - q[i]) * flow.dx;
  return l1 / flow.dt_pde;
}

}  // namespace smf
