// Acceptance suite: quantitative desk-scale checks, one printed line per
// criterion. Every tolerance is pinned here, in code.

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <vector>

#include "smf/approx.hpp"
#include "smf/config.hpp"
#include "smf/dynamics.hpp"
#include "smf/experiments.hpp"
#include "smf/graph.hpp"
#include "smf/mckv.hpp"
#include "smf/measures.hpp"
#include "smf/mollify.hpp"
#include "smf/model.hpp"
#include "smf/norms.hpp"

using namespace smf;

namespace {

void report(int criterion, bool pass, const std::string& what) {
  std::printf("[criterion %2d] %s  %s\n", criterion, pass ? "PASS" : "FAIL", what.c_str());
  std::fflush(stdout);
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

TEST_CASE("criterion 1: coupling identity at D == 0") {
  const auto model = kuramoto(1.0);
  bool all_identical = true;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const int n = 256;
    const auto media = sample_media(model, n, seed);
    const auto g = sample_w_graph(model, n, 1.0, media, seed);  // W == 1, p == 1
    IntegrateOptions opts;
    opts.T = 1.0;
    opts.dt = 1e-3;
    opts.seed = seed;
    const auto pair = integrate_coupled(model, g, opts);
    all_identical = all_identical && (pair.theta_sparse == pair.theta_dense);
  }
  report(1, all_identical, "W=1, p=1: sparse and dense trajectories bit-identical, 5 seeds");
  REQUIRE(all_identical);
}

TEST_CASE("criterion 2: norm oracle consistency on 200 random matrices") {
  int violations = 0, hits = 0;
  const int trials = 200;
  for (int trial = 0; trial < trials; ++trial) {
    const int n = 2 + trial % 11;  // n in [2, 12]
    Matrix m(n, n);
    rng::Stream st(4000 + trial, rng::kMonteCarlo);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = st.next_normal();
    const double lo = norm_inf_to_one_lower(m, 32, trial);
    const double ex = norm_inf_to_one_exact(m);
    const double up = norm_inf_to_one_upper(m);
    if (!(lo <= ex + 1e-9 && ex <= up + 1e-9)) ++violations;
    if (std::fabs(lo - ex) <= 1e-9 * (1.0 + ex)) ++hits;
  }
  std::ostringstream msg;
  msg << "lower<=exact<=upper violations: " << violations << "/200; ascent equality " << hits
      << "/200 (need >= 180)";
  const bool pass = violations == 0 && hits >= 180;
  report(2, pass, msg.str());
  REQUIRE(pass);
}

TEST_CASE("criterion 3: Bennett bound validity at n = 16") {
  const auto model = kuramoto(1.0);
  const int n = 16, reps = 500;
  bool pass = true;
  std::ostringstream msg;
  for (double p : {0.3, 0.6, 0.9}) {
    std::vector<double> norms;
    norms.reserve(reps);
    for (int rep = 0; rep < reps; ++rep) {
      const std::uint64_t seed = rng::derive_seed(31337, static_cast<std::uint64_t>(p * 100), rep);
      const auto media = sample_media(model, n, seed);
      const auto g = sample_w_graph(model, n, p, media, seed);
      norms.push_back(norm_inf_to_one_exact(g.dense_centered()) / n);
    }
    for (double eta = 0.05; eta <= 3.0001; eta += 0.05) {
      const double log_bound = bennett_log_tail(n, p, eta);
      if (log_bound >= 0.0) continue;
      const double freq =
          static_cast<double>(std::count_if(norms.begin(), norms.end(),
                                            [eta](double v) { return v > eta; })) /
          reps;
      if (freq > std::exp(log_bound)) pass = false;
    }
  }
  msg << "500 replicates per p in {0.3, 0.6, 0.9}: empirical tail <= exp(Bennett) wherever bound < 1";
  report(3, pass, msg.str());
  REQUIRE(pass);
}

TEST_CASE("criterion 4: norm concentration scaling at n = 512") {
  const auto model = kuramoto(1.0);
  const int n = 512, reps = 16;
  std::vector<double> medians;
  for (double np : {8.0, 32.0, 128.0}) {
    const double p = np / n;
    std::vector<double> vals(reps);
    detail::run_pool(2, reps, [&](int rep) {
      const std::uint64_t seed = rng::derive_seed(909, static_cast<std::uint64_t>(np), rep);
      const auto media = sample_media(model, n, seed);
      const auto g = sample_w_graph(model, n, p, media, seed);
      vals[rep] = norm_inf_to_one_lower(g.dense_centered(), 16, seed) / n;
    });
    medians.push_back(median_of(vals));
  }
  const double r1 = medians[0] / medians[1];
  const double r2 = medians[1] / medians[2];
  std::ostringstream msg;
  msg << "median lower-certificate/n at np={8,32,128}: " << medians[0] << ", " << medians[1]
      << ", " << medians[2] << "; ratios " << r1 << ", " << r2 << " (need [1.4, 3.0])";
  const bool pass = r1 >= 1.4 && r1 <= 3.0 && r2 >= 1.4 && r2 <= 3.0;
  report(4, pass, msg.str());
  REQUIRE(pass);
}

namespace {

ExperimentConfig scaling_config() {
  ExperimentConfig cfg;
  cfg.model_id = "kuramoto";
  cfg.model_params = {{"kappa", 1.0}, {"freq_lo", -0.5}, {"freq_hi", 0.5}};
  cfg.n_list = {128, 512, 2048};
  cfg.p_rule = "power";
  cfg.p_c = 1.0;
  cfg.p_gamma = 0.5;
  cfg.replicates = 8;
  cfg.T = 1.0;
  cfg.dt = 1e-3;
  cfg.dict_size = 256;
  cfg.norm_restarts = 8;
  cfg.master_seed = 2718;
  cfg.workers = 2;
  return cfg;
}

}  // namespace

TEST_CASE("criteria 5 and 12: exponential-equivalence direction and determinism") {
  const ExperimentConfig cfg = scaling_config();
  const auto model = make_model(cfg.model_id, cfg.model_params);
  const auto table1 = cmd_sweep_scaling(model, cfg);

  std::vector<double> med;
  for (const auto& row : table1.table) med.push_back(row.median_delta_T);
  const bool decreasing = med[0] > med[1] && med[1] > med[2];
  const bool factor = med[2] <= 0.6 * med[0];
  std::ostringstream msg;
  msg << "median Delta(T) at n={128,512,2048}: " << med[0] << ", " << med[1] << ", " << med[2]
      << " (strictly decreasing; last <= 0.6 x first)";
  report(5, decreasing && factor, msg.str());
  REQUIRE(decreasing);
  REQUIRE(factor);

  // criterion 12: rerun with a different worker count; identical bytes.
  ExperimentConfig cfg8 = cfg;
  cfg8.workers = 8;
  const auto table8 = cmd_sweep_scaling(model, cfg8);
  std::ostringstream a, b, ra, rb;
  write_scaling_csv(table1, a);
  write_scaling_csv(table8, b);
  write_simulate_csv(table1.runs, ra);
  write_simulate_csv(table8.runs, rb);

  // criterion 1 rerun under both worker counts as well
  ExperimentConfig c1 = cfg;
  c1.n_list = {256};
  c1.p_rule = "list";
  c1.p_list = {1.0};
  c1.replicates = 5;
  c1.workers = 1;
  const auto rows1 = cmd_simulate(model, c1);
  c1.workers = 8;
  const auto rows8 = cmd_simulate(model, c1);
  std::ostringstream ca, cb;
  write_simulate_csv(rows1, ca);
  write_simulate_csv(rows8, cb);
  bool identical_all = true;
  for (const auto& r : rows1) identical_all = identical_all && r.identical;

  const bool deterministic = a.str() == b.str() && ra.str() == rb.str() && ca.str() == cb.str();
  report(12, deterministic && identical_all,
         "workers {1,2,8} reruns of criteria 1 and 5 produce identical tables");
  REQUIRE(deterministic);
  REQUIRE(identical_all);
}

TEST_CASE("criterion 6: per-run Gronwall bound at n = 16 over 50 seeds") {
  const auto model = kuramoto(1.0);
  const int n = 16;
  int violations = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const std::uint64_t seed = rng::derive_seed(606, n, rep);
    const auto media = sample_media(model, n, seed);
    const auto g = sample_w_graph(model, n, 0.25, media, seed);  // p = n^{-1/2}
    IntegrateOptions opts;
    opts.T = 1.0;
    opts.dt = 1e-3;
    opts.seed = seed;
    const auto pair = integrate_coupled(model, g, opts);
    const auto rep_dist = coupling_delta(pair);
    const double norm = norm_inf_to_one_exact(g.dense_centered());
    const double bound = gronwall_wasserstein_bound(model, norm, n, opts.T);
    if (rep_dist.delta_T > bound + 10.0 * std::sqrt(opts.dt) * opts.T) ++violations;
  }
  std::ostringstream msg;
  msg << "Delta(T) <= Gronwall(exact ||D||) + 10 sqrt(dt) T: " << violations
      << " violations over 50 seeds";
  report(6, violations == 0, msg.str());
  REQUIRE(violations == 0);
}

TEST_CASE("criterion 7: mollifier bound grid checks on 1-D sine and 2-coordinate Kuramoto") {
  const double tol = 1e-6;
  bool pass = true;

  // 1-D sine, both ladder epsilons, R in {4, 8}.
  for (double eps : {0.1, 0.01})
    for (double radius : {4.0, 8.0}) {
      const auto r = mollify_check_sin(eps, radius);
      pass = pass && r.pass(tol);
    }

  // closed form at 1e-10
  {
    auto f = [](const double* x) { return std::sin(x[0]); };
    double worst = 0.0;
    for (int k = -100; k <= 100; ++k) {
      const double x = 0.07 * k;
      worst = std::max(worst, std::fabs(mollify(f, 1, 0.1, &x) -
                                        std::exp(-0.005) * std::sin(x)));
    }
    pass = pass && worst < 1e-10;
  }

  // 2-coordinate Kuramoto form: sup, accuracy, gradient and support bounds.
  {
    const auto model = kuramoto(1.0);
    const double eps = 0.1, radius = 8.0;
    const MollifiedInteraction mi(model, eps, radius);
    const double w0[1] = {0.0};
    const double grad_bound = model.grad_phi, sup_bound = model.sup_phi;
    const double acc_bound = eps * grad_bound * expected_normal_norm(2);
    const double fd = 1e-5;
    double worst = 0.0;
    for (int i = -30; i <= 30; ++i)
      for (int j = -30; j <= 30; ++j) {
        const double x = 0.45 * i, y = 0.45 * j;
        const double fe = mi.mollified(x, y, w0, w0);
        const double fr = mi(x, y, w0, w0);
        worst = std::max(worst, std::fabs(fe) - sup_bound);
        worst = std::max(worst, std::fabs(fr) - sup_bound);
        worst = std::max(worst, std::fabs(fe - model.phi(x, y, w0, w0)) - acc_bound);
        const double rsq = x * x + y * y;
        if (rsq <= radius * radius)
          worst = std::max(worst, std::fabs(fr - model.phi(x, y, w0, w0)) - acc_bound);
        if (rsq >= 4.0 * radius * radius && std::fabs(fr) > 0.0) worst = 1.0;
        const double gx = (mi.mollified(x + fd, y, w0, w0) - mi.mollified(x - fd, y, w0, w0)) / (2 * fd);
        const double gy = (mi.mollified(x, y + fd, w0, w0) - mi.mollified(x, y - fd, w0, w0)) / (2 * fd);
        worst = std::max(worst, std::sqrt(gx * gx + gy * gy) - grad_bound);
        const double cx = (mi(x + fd, y, w0, w0) - mi(x - fd, y, w0, w0)) / (2 * fd);
        const double cy = (mi(x, y + fd, w0, w0) - mi(x, y - fd, w0, w0)) / (2 * fd);
        worst = std::max(worst, std::sqrt(cx * cx + cy * cy) -
                                    (grad_bound + bump_derivative_max() * sup_bound));
      }
    pass = pass && worst <= tol;
  }
  report(7, pass, "mollifier sup/accuracy/gradient/support grids at tol 1e-6; sine closed form at 1e-10");
  REQUIRE(pass);
}

TEST_CASE("criterion 8: approximation-error bound over the (eps, R) ladder") {
  // Confined Kuramoto start so the cutoff region is meaningful: zero
  // frequencies, initial phases uniform on [-0.1, 0.1].
  ExperimentConfig cfg;
  cfg.model_id = "kuramoto";
  cfg.model_params = {{"kappa", 1.0}, {"freq_lo", 0.0}, {"freq_hi", 0.0},
                      {"init_lo", -0.1}, {"init_hi", 0.1}};
  cfg.n_list = {256};
  cfg.p_rule = "list";
  cfg.p_list = {0.0625};
  cfg.T = 1.0;
  cfg.dt = 1e-3;
  cfg.eps_list = {0.1, 0.01};
  cfg.r_list = {8.0, 16.0, 32.0};
  cfg.master_seed = 808;
  cfg.workers = 2;
  const auto model = make_model(cfg.model_id, cfg.model_params);
  const auto rep = cmd_approx(model, cfg);

  bool bound_ok = true, exits_ok = true;
  for (const auto& row : rep.rows) {
    bound_ok = bound_ok && row.pass;
    if (row.radius >= 16.0) exits_ok = exits_ok && row.exit_fraction == 0.0;
  }
  std::ostringstream msg;
  msg << "6 ladder cells within C T e^{CWT}(eps + ||D||/n + exits) + 10 sqrt(dt) T; "
      << "exit fraction 0 at R >= 16";
  report(8, bound_ok && exits_ok, msg.str());
  REQUIRE(bound_ok);
  REQUIRE(exits_ok);
}

TEST_CASE("criteria 9 and 10: hydrodynamic limit and Fokker-Planck oracle") {
  // Subcritical noisy Kuramoto: kappa = 0.5 < kappa_c = 1, zero frequencies,
  // perturbed-uniform start, dense system n = 2000 vs the solver at dx = 2pi/512.
  const auto model = kuramoto_perturbed(0.5, 0.2);
  MckvOptions mo;
  mo.media_atoms = 1;
  mo.grid_points = 512;
  mo.T = 2.0;
  mo.checkpoints = 8;
  const auto flow = solve_mckv(model, mo);

  const int n = 2000;
  const std::uint64_t seed = 909;
  const auto media = sample_media(model, n, seed);
  IntegrateOptions opts;
  opts.T = 2.0;
  opts.dt = 1e-3;
  opts.seed = seed;
  const auto dense = integrate_single_dense(model, media, opts);
  const auto emp = EmpiricalMeasure::of(dense);

  double w1_t1 = compare_to_empirical(flow, emp, 1.0).pooled;
  double w1_t2 = compare_to_empirical(flow, emp, 2.0).pooled;
  std::ostringstream msg;
  msg << "circular W1(empirical, PDE) at t=1: " << w1_t1 << ", t=2: " << w1_t2
      << " (need <= 0.1)";
  const bool pass9 = w1_t1 <= 0.1 && w1_t2 <= 0.1;
  report(9, pass9, msg.str());
  REQUIRE(pass9);

  // criterion 10: conservation + heat-kernel oracle.
  double mass_err = 0.0;
  for (double e : flow.mass_error) mass_err = std::max(mass_err, e);

  InteractionModel heat;
  heat.id = "free_diffusion";
  heat.d = 1;
  heat.phi = [](double, double, const double*, const double*) { return 0.0; };
  heat.psi = [](double, const double*) { return 0.0; };
  heat.kernel_w = [](const double*, const double*) { return 1.0; };
  heat.w_const = true;
  heat.sup_phi = 0.0;
  heat.sup_psi = 0.0;
  heat.periodic_x = false;
  const double sigma0 = 0.05;
  heat.lambda_density = [sigma0](double x) {
    return std::exp(-x * x / (2.0 * sigma0 * sigma0)) / (sigma0 * std::sqrt(kTwoPi));
  };
  heat.sample_xi = [](std::uint64_t, std::uint64_t) { return 0.0; };
  heat.sample_media = [](std::uint64_t, std::uint64_t, double* out) { out[0] = 0.0; };
  heat.media_atoms = [](int) { return std::vector<MediaAtom>{{{0.0}, 1.0}}; };
  MckvOptions ho;
  ho.media_atoms = 1;
  ho.grid_points = 1024;
  ho.T = 1.0;
  ho.checkpoints = 10;
  ho.domain_halfwidth = 8.0;
  const auto hflow = solve_mckv(heat, ho);
  double heat_err = 0.0;
  for (double t : {0.1, 1.0}) {
    const int k = hflow.checkpoint_index(t);
    const double var = sigma0 * sigma0 + t;
    double l1 = 0.0;
    for (int c = 0; c < hflow.cells; ++c) {
      const double x = hflow.cell_center(c);
      l1 += std::fabs(hflow.q[k][c] -
                      std::exp(-x * x / (2.0 * var)) / std::sqrt(kTwoPi * var)) *
            hflow.dx;
    }
    heat_err = std::max(heat_err, l1);
  }
  for (double e : hflow.mass_error) mass_err = std::max(mass_err, e);
  std::ostringstream msg10;
  msg10 << "max mass error " << mass_err << " (<= 1e-8); heat-kernel L1 error " << heat_err
        << " (<= 1e-3)";
  const bool pass10 = mass_err <= 1e-8 && heat_err <= 1e-3;
  report(10, pass10, msg10.str());
  REQUIRE(pass10);
}

TEST_CASE("criterion 11: Hamiltonian gradient identity") {
  const auto model = kuramoto(1.0);
  const int n = 8;
  double worst = 0.0;
  rng::Stream st(1111, rng::kMonteCarlo);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(n), media(n);
    for (int i = 0; i < n; ++i) {
      x[i] = 3.141592653589793 * (2.0 * st.next_uniform() - 1.0);
      media[i] = st.next_uniform() - 0.5;
    }
    const double h = 1e-5;
    for (int i = 0; i < n; ++i) {
      std::vector<double> xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      const double grad =
          (hamiltonian_energy(model, xp, media) - hamiltonian_energy(model, xm, media)) /
          (2.0 * h);
      worst = std::max(worst, std::fabs(drift_dense(model, media, x.data(), n, i) + grad));
    }
  }
  std::ostringstream msg;
  msg << "max |dense drift + dH/dx_i| over 100 random states: " << worst << " (<= 1e-6)";
  report(11, worst <= 1e-6, msg.str());
  REQUIRE(worst <= 1e-6);
}
