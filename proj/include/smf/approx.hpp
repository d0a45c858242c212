#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "smf/dynamics.hpp"
#include "smf/graph.hpp"
#include "smf/measures.hpp"
#include "smf/mollify.hpp"

// The (eps, R)-approximated sparse system: same graph, same initial
// conditions, same Brownian increments, with phi replaced by the mollified
// cutoff phi^{eps,R}; exit-event accounting; and the resulting
// approximation-error bound with its explicit constant.

namespace smf {

struct ApproxRun {
  Ensemble approx;                 // trajectories under phi^{eps,R}
  std::vector<std::uint8_t> exit_flags;  // E_i(R) evaluated on the reference run
  double exit_fraction = 0.0;
  double capped_delta = 0.0;       // (1/n) sum_i min(sup_t |theta_i - theta_i^{eps,R}|, 1)
};

// Exit events on the reference trajectories:
//   E_i(R) = { sup_t |theta_i(t)| > R/4  or  |omega_i|_2 > R/4 }.
inline std::vector<std::uint8_t> exit_events(const Ensemble& reference, double radius) {
  std::vector<std::uint8_t> flags(reference.n, 0);
  const double thresh = radius / 4.0;
  for (int i = 0; i < reference.n; ++i) {
    double sup = 0.0;
    for (int t = 0; t <= reference.steps; ++t)
      sup = std::max(sup, std::fabs(reference.at(t)[i]));
    double media_sq = 0.0;
    for (int k = 0; k < reference.d; ++k) {
      const double w = reference.media[static_cast<std::size_t>(i) * reference.d + k];
      media_sq += w * w;
    }
    flags[i] = (sup > thresh || std::sqrt(media_sq) > thresh) ? 1 : 0;
  }
  return flags;
}

// Integrates the sparse system with phi^{eps,R} under the reference seed and
// increments; computes exit flags and the capped coupling distance against
// the reference. Pass the reference run when it is shared across a ladder.
inline ApproxRun run_approx_system(const InteractionModel& model, const GraphSample& g,
                                   double eps, double radius, const IntegrateOptions& opts,
                                   const Ensemble* reference = nullptr,
                                   const MollifyOptions& mopts = {}) {
  Ensemble local_ref;
  if (!reference) {
    local_ref = integrate_single(model, g, opts);
    reference = &local_ref;
  }

  MollifiedInteraction phi_eps_r(model, eps, radius, mopts);
  InteractionModel approx_model = model;
  approx_model.fourier.reset();  // mollified interaction goes through the direct path
  approx_model.phi0 = nullptr;
  approx_model.phi = [&phi_eps_r](double x, double y, const double* omega, const double* pi_media) {
    return phi_eps_r(x, y, omega, pi_media);
  };

  ApproxRun out;
  out.approx = integrate_single(approx_model, g, opts);
  out.exit_flags = exit_events(*reference, radius);
  int exits = 0;
  for (auto f : out.exit_flags) exits += f;
  out.exit_fraction = static_cast<double>(exits) / g.n;

  double capped = 0.0;
  for (int i = 0; i < g.n; ++i) {
    double sup = 0.0;
    for (int t = 0; t <= out.approx.steps; ++t)
      sup = std::max(sup, std::fabs(reference->at(t)[i] - out.approx.at(t)[i]));
    capped += std::min(sup, 1.0);
  }
  out.capped_delta = capped / g.n;
  return out;
}

// Uniform C1 bound of the good approximation family, from declared model
// constants: M = max(sup_phi, grad_phi + C1 sup_phi, grad_phi E|N_k|)
// with C1 the recorded bump-derivative constant and k the mollified dims.
inline double approx_uniform_c1_bound(const InteractionModel& model) {
  const double c1 = bump_derivative_max();
  const double en = expected_normal_norm(model.phi_active_dims);
  return std::max({model.sup_phi, model.grad_phi + c1 * model.sup_phi, model.grad_phi * en});
}

// The proof constant C = 6 max(M, sup_psi + lip_psi), exposed so bound
// checks are auditable.
inline double rapp_constant(const InteractionModel& model) {
  return 6.0 * std::max(approx_uniform_c1_bound(model), model.sup_psi + model.lip_psi);
}

// Approximation-error bound:
//   C T exp(C ||W||_inf T) (eps + ||D||_{inf->1}/n + exit fraction).
inline double rapp_bound(const InteractionModel& model, double eps, double exit_fraction,
                         double norm_d_over_n, double T) {
  const double c = rapp_constant(model);
  return c * T * std::exp(c * model.sup_w * T) * (eps + norm_d_over_n + exit_fraction);
}

// Log of the binomial exit-tail bound (e P[x, inf) / a)^{ceil(a m)}:
// returns ceil(a m) * ln(e P_tail / a); -inf sentinel when P_tail == 0.
inline double exit_tail_log_bound(double p_tail, double a, int m) {
  if (!(a > 0.0) || a > 1.0) throw std::invalid_argument("exit_tail_log_bound: a outside (0,1]");
  if (p_tail < 0.0 || p_tail > 1.0)
    throw std::invalid_argument("exit_tail_log_bound: P_tail outside [0,1]");
  if (m <= 0) throw std::invalid_argument("exit_tail_log_bound: m must be positive");
  if (p_tail == 0.0) return -std::numeric_limits<double>::infinity();
  const double k = std::ceil(a * m);
  return k * std::log(2.718281828459045235360287 * p_tail / a);
}

}  // namespace smf
