#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "smf/mckv.hpp"
#include "smf/model.hpp"
#include "smf/rng.hpp"
#include "smf/wasserstein.hpp"

using namespace smf;

namespace {

// Free diffusion on a truncated line from a narrow Gaussian bump; the exact
// solution is N(0, sigma0^2 + t).
InteractionModel free_diffusion_model(double sigma0) {
  InteractionModel m;
  m.id = "free_diffusion";
  m.d = 1;
  m.phi = [](double, double, const double*, const double*) { return 0.0; };
  m.psi = [](double, const double*) { return 0.0; };
  m.kernel_w = [](const double*, const double*) { return 1.0; };
  m.w_const = true;
  m.w_const_value = 1.0;
  m.sup_w = 1.0;
  m.sup_phi = 0.0;
  m.sup_psi = 0.0;
  m.lip_phi = 0.0;
  m.lip_psi = 0.0;
  m.grad_phi = 0.0;
  m.periodic_x = false;
  m.lambda_density = [sigma0](double x) {
    return std::exp(-x * x / (2.0 * sigma0 * sigma0)) / (sigma0 * std::sqrt(kTwoPi));
  };
  m.sample_xi = [](std::uint64_t, std::uint64_t) { return 0.0; };
  m.sample_media = [](std::uint64_t, std::uint64_t, double* out) { out[0] = 0.0; };
  m.media_atoms = [](int) { return std::vector<MediaAtom>{{{0.0}, 1.0}}; };
  return m;
}

double gaussian_density(double x, double var) {
  return std::exp(-x * x / (2.0 * var)) / std::sqrt(kTwoPi * var);
}

}  // namespace

TEST_CASE("uniform density is a fixed point of free and Kuramoto dynamics") {
  // phi == 0, psi == 0 on the torus: heat flow fixes the uniform density.
  auto flat = kuramoto_perturbed(0.0, 0.0);
  MckvOptions opts;
  opts.media_atoms = 1;
  opts.grid_points = 64;
  opts.T = 0.5;
  opts.checkpoints = 4;
  const auto flow = solve_mckv(flat, opts);
  const double uniform = 1.0 / kTwoPi;
  for (double v : flow.q.back()) REQUIRE_THAT(v, Catch::Matchers::WithinAbs(uniform, 1e-13));

  // kappa > 0, zero frequencies: uniform stays uniform, residual ~ 0
  const auto kur = kuramoto_perturbed(0.7, 0.0);
  const auto flow2 = solve_mckv(kur, opts);
  for (double v : flow2.q.back()) REQUIRE_THAT(v, Catch::Matchers::WithinAbs(uniform, 1e-12));
  REQUIRE(stationarity_residual(kur, flow2) <= 1e-8);
}

TEST_CASE("free diffusion matches the heat kernel within 1e-3 in L1") {
  const double sigma0 = 0.05;
  const auto m = free_diffusion_model(sigma0);
  MckvOptions opts;
  opts.media_atoms = 1;
  opts.grid_points = 1024;
  opts.T = 1.0;
  opts.checkpoints = 10;  // stores t = 0.1 among others
  opts.domain_halfwidth = 8.0;
  const auto flow = solve_mckv(m, opts);
  for (double t : {0.1, 1.0}) {
    const int k = flow.checkpoint_index(t);
    double l1 = 0.0;
    for (int c = 0; c < flow.cells; ++c)
      l1 += std::fabs(flow.q[k][c] - gaussian_density(flow.cell_center(c), sigma0 * sigma0 + t)) *
            flow.dx;
    INFO("t = " << t);
    REQUIRE(l1 <= 1e-3);
  }
}

TEST_CASE("mass is conserved to 1e-12 at every checkpoint") {
  const auto m = kuramoto_perturbed(0.5, 0.2);
  MckvOptions opts;
  opts.media_atoms = 1;
  opts.grid_points = 128;
  opts.T = 1.0;
  opts.checkpoints = 8;
  const auto flow = solve_mckv(m, opts);
  for (double e : flow.mass_error) REQUIRE(e <= 1e-12);
  REQUIRE(flow.clipped_mass == 0.0);
}

TEST_CASE("even initial data stays even under zero-frequency Kuramoto flow") {
  const auto m = kuramoto_perturbed(0.5, 0.2);  // (1 + a cos x)/2pi is even
  MckvOptions opts;
  opts.media_atoms = 1;
  opts.grid_points = 128;
  opts.T = 0.5;
  opts.checkpoints = 4;
  const auto flow = solve_mckv(m, opts);
  const auto& q = flow.q.back();
  double asym = 0.0;
  for (int c = 0; c < flow.cells; ++c)
    asym = std::max(asym, std::fabs(q[c] - q[flow.cells - 1 - c]));
  REQUIRE(asym <= 1e-8);
}

TEST_CASE("grid refinement shrinks the solution error by at least 1.5x per halving") {
  auto solve_at = [](int cells) {
    const auto m = kuramoto_perturbed(0.5, 0.2);
    MckvOptions opts;
    opts.media_atoms = 1;
    opts.grid_points = cells;
    opts.T = 0.25;
    opts.checkpoints = 1;
    return solve_mckv(m, opts);
  };
  const auto coarse = solve_at(64), mid = solve_at(128), fine = solve_at(256);
  auto err_against_fine = [&](const DensityFlow& f) {
    const int factor = fine.cells / f.cells;
    double l1 = 0.0;
    for (int c = 0; c < fine.cells; ++c)
      l1 += std::fabs(fine.q.back()[c] - f.q.back()[c / factor]) * fine.dx;
    return l1;
  };
  const double e_coarse = err_against_fine(coarse);
  const double e_mid = err_against_fine(mid);
  REQUIRE(e_mid < e_coarse);
  REQUIRE(e_coarse / e_mid >= 1.5);
}

TEST_CASE("marginals: t = 0 recovers the initial law; weights sum to one") {
  const auto m = kuramoto(0.5);
  MckvOptions opts;
  opts.media_atoms = 4;
  opts.grid_points = 64;
  opts.T = 0.125;
  opts.checkpoints = 1;
  const auto flow = solve_mckv(m, opts);
  const auto mix = mckv_marginal(flow, 0.0);
  double wsum = 0.0;
  for (double w : mix.weights) wsum += w;
  REQUIRE_THAT(wsum, Catch::Matchers::WithinAbs(1.0, 1e-12));
  // all atoms start from the same uniform initial density
  for (const auto& q : mix.densities)
    for (double v : q) REQUIRE_THAT(v, Catch::Matchers::WithinAbs(1.0 / kTwoPi, 1e-12));
  REQUIRE_THROWS_AS(mckv_marginal(flow, 0.0625), std::invalid_argument);
}

TEST_CASE("inverse-CDF samples from the solver marginal sit within 0.02 in W1") {
  const auto m = kuramoto_perturbed(0.5, 0.2);
  MckvOptions opts;
  opts.media_atoms = 1;
  opts.grid_points = 256;
  opts.T = 0.5;
  opts.checkpoints = 2;
  const auto flow = solve_mckv(m, opts);
  const auto atoms = marginal_atoms(flow, 0.5);

  // inverse-CDF sampling from the piecewise-constant marginal
  std::vector<double> cdf(atoms.values.size() + 1, 0.0);
  for (std::size_t c = 0; c < atoms.values.size(); ++c) cdf[c + 1] = cdf[c] + atoms.weights[c];
  auto sample_inverse = [&](double u) {
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u * cdf.back());
    const std::size_t c = std::min(atoms.values.size() - 1,
                                   static_cast<std::size_t>(it - cdf.begin()) - 1);
    const double frac = (u * cdf.back() - cdf[c]) / std::max(1e-300, cdf[c + 1] - cdf[c]);
    return flow.x_lo + (c + frac) * flow.dx;
  };

  const int n = 10000;
  WeightedSample emp;
  for (int i = 0; i < n; ++i)
    emp.values.push_back(sample_inverse(rng::keyed_uniform(123, rng::kMonteCarlo, i)));
  const double d_iid = circular_wasserstein_1d(emp, atoms, kTwoPi);
  REQUIRE(d_iid <= 0.02);

  // exact quantiles converge as n grows
  auto quantile_distance = [&](int count) {
    WeightedSample q;
    for (int i = 0; i < count; ++i) q.values.push_back(sample_inverse((i + 0.5) / count));
    return circular_wasserstein_1d(q, atoms, kTwoPi);
  };
  const double d1k = quantile_distance(1000), d10k = quantile_distance(10000);
  REQUIRE(d10k < d1k);
  REQUIRE(d10k <= 2.0 * flow.dx);
}

TEST_CASE("per-media-bucket comparison is populated for few atoms") {
  const auto m = kuramoto(0.5);  // frequencies uniform on [-0.5, 0.5]
  MckvOptions opts;
  opts.media_atoms = 4;
  opts.grid_points = 64;
  opts.T = 0.25;
  opts.checkpoints = 1;
  const auto flow = solve_mckv(m, opts);

  const int n = 400;
  const auto media = sample_media(m, n, 77);
  IntegrateOptions io;
  io.T = 0.25;
  io.dt = 2.5e-3;
  io.seed = 77;
  const auto dense = integrate_single_dense(m, media, io);
  const auto cmp = compare_to_empirical(flow, EmpiricalMeasure::of(dense), 0.25);
  REQUIRE(cmp.per_bucket.size() == 4);
  for (double v : cmp.per_bucket) {
    REQUIRE(std::isfinite(v));
    REQUIRE(v >= 0.0);
    REQUIRE(v < 2.0);
  }
  REQUIRE(cmp.pooled >= 0.0);
}

TEST_CASE("stationarity residual: positive on transients, stable under dt refinement") {
  const auto m = kuramoto_perturbed(0.5, 0.2);
  MckvOptions opts;
  opts.media_atoms = 1;
  opts.grid_points = 128;
  opts.T = 0.25;
  opts.checkpoints = 1;
  const auto flow = solve_mckv(m, opts);
  const double res = stationarity_residual(m, flow);
  REQUIRE(res > 1e-4);

  MckvOptions fine = opts;
  fine.dt_pde = flow.dt_pde / 2.0;
  const auto flow2 = solve_mckv(m, fine);
  const double res2 = stationarity_residual(m, flow2);
  REQUIRE(std::fabs(res - res2) <= 0.25 * res);
}

TEST_CASE("CFL violations are rejected up front") {
  const auto m = kuramoto_perturbed(0.5, 0.2);
  MckvOptions opts;
  opts.media_atoms = 1;
  opts.grid_points = 64;
  opts.T = 0.5;
  opts.checkpoints = 1;
  opts.dt_pde = 0.1;  // dx = 2pi/64 ~ 0.098, dx^2/2 ~ 0.0048
  REQUIRE_THROWS_AS(solve_mckv(m, opts), ConfigError);

  // advective violation with a strong drift and a coarse grid
  const auto fast = kuramoto(1.0, 100.0, 100.0);
  MckvOptions aopts;
  aopts.media_atoms = 1;
  aopts.grid_points = 16;  // dx ~ 0.39, dx^2/2 ~ 0.077
  aopts.T = 0.5;
  aopts.checkpoints = 1;
  aopts.dt_pde = 0.025;  // diffusive OK, advective CFL = 100 * 0.025 / 0.39 >> 1
  REQUIRE_THROWS_AS(solve_mckv(fast, aopts), ConfigError);
}
