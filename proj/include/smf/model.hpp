#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "smf/rng.hpp"

// Interaction models: the ingredients (lambda, mu, phi, psi, W) of one
// system family, plus optional structure the analysis machinery can
// exploit (finite Fourier-atom representation of phi, Hamiltonian form,
// difference form phi(x,y,.) = phi0(y-x,.)).

namespace smf {

constexpr double kTwoPi = 6.283185307179586476925287;

struct FourierAtom {
  std::vector<double> z;         // frequency in R^{2d+2}, layout (z_x, z_y, z_omega, z_pi)
  std::complex<double> weight;
};

struct FourierMeasure {
  int d = 1;  // media dimension; atoms have 2d+2 coordinates
  std::vector<FourierAtom> atoms;

  // phi(x,y,omega,pi) = sum_a w_a exp(2 pi i <(x,y,omega,pi), z_a>); real part
  // is the reconstruction, imaginary part should vanish for valid measures.
  std::complex<double> eval_complex(double x, double y, const double* omega,
                                    const double* pi_media) const {
    std::complex<double> acc(0.0, 0.0);
    for (const auto& atom : atoms) {
      double phase = atom.z[0] * x + atom.z[1] * y;
      for (int k = 0; k < d; ++k) phase += atom.z[2 + k] * omega[k];
      for (int k = 0; k < d; ++k) phase += atom.z[2 + d + k] * pi_media[k];
      phase *= kTwoPi;
      acc += atom.weight * std::complex<double>(std::cos(phase), std::sin(phase));
    }
    return acc;
  }
  double eval(double x, double y, const double* omega, const double* pi_media) const {
    return eval_complex(x, y, omega, pi_media).real();
  }
};

// Total variation of a finite complex atomic measure, via the four-part
// Jordan decomposition of each weight: (Re w)^+ + (Re w)^- + (Im w)^+ + (Im w)^-.
inline double tv_norm(const FourierMeasure& m) {
  double s = 0.0;
  for (const auto& atom : m.atoms) s += std::fabs(atom.weight.real()) + std::fabs(atom.weight.imag());
  return s;
}

struct HamiltonianForm {
  // pair potential f_bar(u, omega, pi) and single-site potential g(x, omega)
  std::function<double(double, const double*, const double*)> f_bar;
  std::function<double(double, const double*)> g;
};

struct MediaAtom {
  std::vector<double> omega;
  double weight = 1.0;
};

struct InteractionModel {
  std::string id;
  std::map<std::string, double> params;

  int d = 1;  // media dimension

  std::function<double(double, double, const double*, const double*)> phi;
  std::function<double(double, const double*)> psi;
  std::function<double(const double*, const double*)> kernel_w;
  bool w_const = false;          // kernel identically w_const_value
  double w_const_value = 1.0;

  // Declared constants, audited rather than derived. Lipschitz constants use
  // the l-infinity metric on the argument tuple.
  double lip_phi = 0.0;
  double lip_psi = 0.0;
  double sup_w = 1.0;
  double sup_phi = 0.0;
  double sup_psi = 0.0;
  double grad_phi = 0.0;         // bound on |grad phi|_2 over the active coordinates
  int phi_active_dims = 2;       // coordinates phi actually depends on (for mollification)

  std::optional<FourierMeasure> fourier;
  std::optional<HamiltonianForm> hamiltonian;
  // Difference form: phi(x,y,omega,pi) = phi0(y - x, omega, pi), when it exists.
  std::function<double(double, const double*, const double*)> phi0;

  bool periodic_x = false;       // interactions 2pi-periodic in positions

  // Counter-based samplers: pure functions of (seed, index).
  std::function<double(std::uint64_t, std::uint64_t)> sample_xi;
  std::function<void(std::uint64_t, std::uint64_t, double*)> sample_media;

  // Optional extras used by the Fokker-Planck side.
  std::function<double(double)> lambda_density;    // density of the initial law
  std::function<double(double)> lambda_quantile;   // inverse CDF of the initial law
  std::function<std::vector<MediaAtom>(int)> media_atoms;  // deterministic discretization of mu

  double phi_bar(double x, double y, const double* omega, const double* pi_media) const {
    return kernel_w(omega, pi_media) * phi(x, y, omega, pi_media);
  }
};

// --- built-in models ---------------------------------------------------

// Stochastic Kuramoto: phi = kappa sin(y - x), psi(x, omega) = omega,
// W == 1, natural frequencies uniform on [freq_lo, freq_hi], initial
// phases uniform on [init_lo, init_hi].
inline InteractionModel kuramoto(double kappa, double freq_lo = -0.5, double freq_hi = 0.5,
                                 double init_lo = -3.141592653589793,
                                 double init_hi = 3.141592653589793) {
  if (!std::isfinite(kappa)) throw std::invalid_argument("kuramoto: kappa must be finite");
  InteractionModel m;
  m.id = "kuramoto";
  m.params = {{"kappa", kappa}, {"freq_lo", freq_lo}, {"freq_hi", freq_hi},
              {"init_lo", init_lo}, {"init_hi", init_hi}};
  m.d = 1;
  m.phi = [kappa](double x, double y, const double*, const double*) {
    return kappa * std::sin(y - x);
  };
  m.phi0 = [kappa](double u, const double*, const double*) { return kappa * std::sin(u); };
  m.psi = [](double, const double* omega) { return omega[0]; };
  m.kernel_w = [](const double*, const double*) { return 1.0; };
  m.w_const = true;
  m.w_const_value = 1.0;
  m.sup_w = 1.0;
  m.lip_phi = 2.0 * std::fabs(kappa);
  m.lip_psi = 1.0;
  m.sup_phi = std::fabs(kappa);
  m.sup_psi = std::max(std::fabs(freq_lo), std::fabs(freq_hi));
  m.grad_phi = std::fabs(kappa) * std::sqrt(2.0);
  m.phi_active_dims = 2;
  m.periodic_x = true;

  // Two-atom measure: kappa sin(y-x) = (kappa/2i) e^{i(y-x)} - (kappa/2i) e^{-i(y-x)},
  // frequencies scaled by 1/(2 pi) for the e^{2 pi i <.,z>} convention.
  FourierMeasure fm;
  fm.d = 1;
  const double f = 1.0 / kTwoPi;
  fm.atoms.push_back({{-f, f, 0.0, 0.0}, std::complex<double>(0.0, -kappa / 2.0)});
  fm.atoms.push_back({{f, -f, 0.0, 0.0}, std::complex<double>(0.0, kappa / 2.0)});
  m.fourier = fm;

  // Gradient form: f_bar(u) = -kappa cos(u) (so -d/dx_i of the pair energy is
  // the interaction drift) and g(x, omega) = -omega x (so -g' = psi).
  HamiltonianForm h;
  h.f_bar = [kappa](double u, const double*, const double*) { return -kappa * std::cos(u); };
  h.g = [](double x, const double* omega) { return -omega[0] * x; };
  m.hamiltonian = h;

  m.sample_xi = [init_lo, init_hi](std::uint64_t seed, std::uint64_t i) {
    return init_lo + (init_hi - init_lo) * rng::keyed_uniform(seed, rng::kInitial, i);
  };
  m.sample_media = [freq_lo, freq_hi](std::uint64_t seed, std::uint64_t i, double* out) {
    out[0] = freq_lo + (freq_hi - freq_lo) * rng::keyed_uniform(seed, rng::kMedia, i);
  };
  m.lambda_density = [init_lo, init_hi](double x) {
    return (x >= init_lo && x < init_hi) ? 1.0 / (init_hi - init_lo) : 0.0;
  };
  m.lambda_quantile = [init_lo, init_hi](double u) { return init_lo + (init_hi - init_lo) * u; };
  m.media_atoms = [freq_lo, freq_hi](int count) {
    std::vector<MediaAtom> atoms;
    atoms.reserve(count);
    for (int k = 0; k < count; ++k) {
      const double q = (k + 0.5) / count;
      atoms.push_back({{freq_lo + (freq_hi - freq_lo) * q}, 1.0 / count});
    }
    return atoms;
  };
  return m;
}

// Kuramoto with zero frequencies and initial density (1 + amp cos x)/(2 pi)
// on [0, 2 pi); the near-uniform start used for hydrodynamic comparisons.
inline InteractionModel kuramoto_perturbed(double kappa, double amp) {
  if (!(amp >= 0.0) || amp >= 1.0)
    throw std::invalid_argument("kuramoto_perturbed: amp must lie in [0,1)");
  InteractionModel m = kuramoto(kappa, 0.0, 0.0, 0.0, kTwoPi);
  m.id = "kuramoto_perturbed";
  m.params = {{"kappa", kappa}, {"amp", amp}};
  m.sup_psi = 0.0;
  m.sample_media = [](std::uint64_t, std::uint64_t, double* out) { out[0] = 0.0; };
  m.media_atoms = [](int) { return std::vector<MediaAtom>{{{0.0}, 1.0}}; };
  m.lambda_density = [amp](double x) {
    return (x >= 0.0 && x < kTwoPi) ? (1.0 + amp * std::cos(x)) / kTwoPi : 0.0;
  };
  // Invert F(x) = (x + amp sin x) / (2 pi) by Newton; F' >= (1-amp)/(2 pi) > 0.
  m.lambda_quantile = [amp](double u) {
    double x = kTwoPi * u;
    for (int it = 0; it < 60; ++it) {
      const double fx = (x + amp * std::sin(x)) / kTwoPi - u;
      const double dfx = (1.0 + amp * std::cos(x)) / kTwoPi;
      const double step = fx / dfx;
      x -= step;
      if (std::fabs(step) < 1e-15) break;
    }
    return x;
  };
  m.sample_xi = [q = m.lambda_quantile](std::uint64_t seed, std::uint64_t i) {
    return q(rng::keyed_uniform(seed, rng::kInitial, i));
  };
  return m;
}

// Spatially extended Kuramoto: media omega = (omega_s, omega_f) in [0,1]^4
// with omega_s the 3-d position and omega_f the natural frequency;
// W(omega, pi) = 1 / (1 + C |omega_s - pi_s|^alpha).
inline InteractionModel spatial_kuramoto(double kappa, double c_decay, double alpha) {
  if (!std::isfinite(kappa)) throw std::invalid_argument("spatial_kuramoto: kappa must be finite");
  if (c_decay < 0.0 || alpha < 0.0)
    throw std::invalid_argument("spatial_kuramoto: C and alpha must be >= 0");
  InteractionModel m;
  m.id = "spatial_kuramoto";
  m.params = {{"kappa", kappa}, {"C", c_decay}, {"alpha", alpha}};
  m.d = 4;
  m.phi = [kappa](double x, double y, const double*, const double*) {
    return kappa * std::sin(y - x);
  };
  m.phi0 = [kappa](double u, const double*, const double*) { return kappa * std::sin(u); };
  m.psi = [](double, const double* omega) { return omega[3]; };
  m.kernel_w = [c_decay, alpha](const double* omega, const double* pi_media) {
    const double dx = omega[0] - pi_media[0];
    const double dy = omega[1] - pi_media[1];
    const double dz = omega[2] - pi_media[2];
    const double dist = std::sqrt(dx * dx + dy * dy + dz * dz);
    return 1.0 / (1.0 + c_decay * std::pow(dist, alpha));
  };
  m.w_const = (c_decay == 0.0);
  m.w_const_value = 1.0;
  m.sup_w = 1.0;
  m.lip_phi = 2.0 * std::fabs(kappa);
  m.lip_psi = 1.0;
  m.sup_phi = std::fabs(kappa);
  m.sup_psi = 1.0;
  m.grad_phi = std::fabs(kappa) * std::sqrt(2.0);
  m.phi_active_dims = 2;
  m.periodic_x = true;

  FourierMeasure fm;
  fm.d = 4;
  const double f = 1.0 / kTwoPi;
  std::vector<double> z1{-f, f, 0, 0, 0, 0, 0, 0, 0, 0};
  std::vector<double> z2{f, -f, 0, 0, 0, 0, 0, 0, 0, 0};
  fm.atoms.push_back({z1, std::complex<double>(0.0, -kappa / 2.0)});
  fm.atoms.push_back({z2, std::complex<double>(0.0, kappa / 2.0)});
  m.fourier = fm;

  m.sample_xi = [](std::uint64_t seed, std::uint64_t i) {
    return -3.141592653589793 + kTwoPi * rng::keyed_uniform(seed, rng::kInitial, i);
  };
  m.sample_media = [](std::uint64_t seed, std::uint64_t i, double* out) {
    for (int k = 0; k < 4; ++k) out[k] = rng::keyed_uniform(seed, rng::kMedia, i, k);
  };
  m.lambda_density = [](double x) {
    return (x >= -3.141592653589793 && x < 3.141592653589793) ? 1.0 / kTwoPi : 0.0;
  };
  m.lambda_quantile = [](double u) { return -3.141592653589793 + kTwoPi * u; };
  return m;
}

// Pair energy of the Hamiltonian form:
//   H_n(x, omega) = (1/2n) sum_{i,j} f_bar(x_i - x_j, omega_i, omega_j)
//                 + sum_i g(x_i, omega_i).
inline double hamiltonian_energy(const InteractionModel& model, const std::vector<double>& x,
                                 const std::vector<double>& media) {
  if (!model.hamiltonian) throw std::invalid_argument("hamiltonian_energy: model has no (f_bar, g)");
  const std::size_t n = x.size();
  if (media.size() != n * static_cast<std::size_t>(model.d))
    throw std::invalid_argument("hamiltonian_energy: media size mismatch");
  const auto& h = *model.hamiltonian;
  double pair_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      pair_sum += h.f_bar(x[i] - x[j], &media[i * model.d], &media[j * model.d]);
  double site_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) site_sum += h.g(x[i], &media[i * model.d]);
  return pair_sum / (2.0 * static_cast<double>(n)) + site_sum;
}

// --- audits -------------------------------------------------------------

struct ModelAudit {
  double phi_lip_excess = 0.0;     // max(|phi(u)-phi(v)| - lip_phi*|u-v|_inf)
  double psi_lip_excess = 0.0;
  double w_symmetry_error = 0.0;
  double phi_bar_error = 0.0;      // phi_bar vs W * phi recomputed
  double fourier_recon_error = 0.0;
  double fourier_imag_error = 0.0;
  double phi0_oddness_error = 0.0;
};

// Randomized audit of declared constants and structural identities.
inline ModelAudit audit_model(const InteractionModel& m, int pairs = 10000,
                              std::uint64_t seed = 11u) {
  ModelAudit a;
  rng::Stream st(seed, rng::kMonteCarlo);
  const int d = m.d;
  std::vector<double> u(2 + 2 * d), v(2 + 2 * d);
  for (int t = 0; t < pairs; ++t) {
    for (auto& c : u) c = -4.0 + 8.0 * st.next_uniform();
    // Half the pairs are local perturbations, half are far apart.
    const double scale = (t % 2 == 0) ? 1e-3 : 4.0;
    double dist = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
      v[k] = u[k] + scale * (2.0 * st.next_uniform() - 1.0);
      dist = std::max(dist, std::fabs(v[k] - u[k]));
    }
    if (dist == 0.0) continue;
    const double fu = m.phi(u[0], u[1], &u[2], &u[2 + d]);
    const double fv = m.phi(v[0], v[1], &v[2], &v[2 + d]);
    a.phi_lip_excess = std::max(a.phi_lip_excess, std::fabs(fu - fv) - m.lip_phi * dist);

    double dist_psi = std::fabs(v[0] - u[0]);
    for (int k = 0; k < d; ++k) dist_psi = std::max(dist_psi, std::fabs(v[2 + k] - u[2 + k]));
    if (dist_psi > 0.0) {
      const double pu = m.psi(u[0], &u[2]);
      const double pv = m.psi(v[0], &v[2]);
      a.psi_lip_excess = std::max(a.psi_lip_excess, std::fabs(pu - pv) - m.lip_psi * dist_psi);
    }

    const double w1 = m.kernel_w(&u[2], &u[2 + d]);
    const double w2 = m.kernel_w(&u[2 + d], &u[2]);
    a.w_symmetry_error = std::max(a.w_symmetry_error, std::fabs(w1 - w2));
    a.phi_bar_error = std::max(
        a.phi_bar_error, std::fabs(m.phi_bar(u[0], u[1], &u[2], &u[2 + d]) - w1 * fu));

    if (m.fourier) {
      const auto rec = m.fourier->eval_complex(u[0], u[1], &u[2], &u[2 + d]);
      a.fourier_recon_error = std::max(a.fourier_recon_error, std::fabs(rec.real() - fu));
      a.fourier_imag_error = std::max(a.fourier_imag_error, std::fabs(rec.imag()));
    }
    if (m.phi0) {
      const double f0 = m.phi0(u[0], &u[2], &u[2 + d]);
      const double f0m = m.phi0(-u[0], &u[2], &u[2 + d]);
      a.phi0_oddness_error = std::max(a.phi0_oddness_error, std::fabs(f0 + f0m));
    }
  }
  return a;
}

// Factory by id + parameter map (the config-file entry point).
inline InteractionModel make_model(const std::string& id,
                                   const std::map<std::string, double>& params) {
  auto get = [&params](const std::string& k, double dflt) {
    auto it = params.find(k);
    return it == params.end() ? dflt : it->second;
  };
  if (id == "kuramoto")
    return kuramoto(get("kappa", 1.0), get("freq_lo", -0.5), get("freq_hi", 0.5),
                    get("init_lo", -3.141592653589793), get("init_hi", 3.141592653589793));
  if (id == "kuramoto_perturbed")
    return kuramoto_perturbed(get("kappa", 0.5), get("amp", 0.2));
  if (id == "spatial_kuramoto")
    return spatial_kuramoto(get("kappa", 1.0), get("C", 1.0), get("alpha", 2.0));
  throw std::invalid_argument("make_model: unknown model id '" + id + "'");
}

}  // namespace smf
