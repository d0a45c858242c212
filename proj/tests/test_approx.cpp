#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "smf/approx.hpp"
#include "smf/graph.hpp"
#include "smf/model.hpp"
#include "smf/norms.hpp"

using namespace smf;

TEST_CASE("exit tail log bound") {
  REQUIRE(exit_tail_log_bound(0.0, 0.5, 10) == -std::numeric_limits<double>::infinity());
  // P = a/e makes the bound exactly 1
  REQUIRE_THAT(exit_tail_log_bound(0.5 / 2.718281828459045, 0.5, 13),
               Catch::Matchers::WithinAbs(0.0, 1e-12));
  REQUIRE_THAT(exit_tail_log_bound(1e-3, 0.1, 100),
               Catch::Matchers::WithinAbs(-36.05170185988091, 1e-9));
  REQUIRE_THROWS_AS(exit_tail_log_bound(0.5, 0.0, 10), std::invalid_argument);
  REQUIRE_THROWS_AS(exit_tail_log_bound(1.5, 0.5, 10), std::invalid_argument);
}

TEST_CASE("rapp bound closed form and scaling") {
  const auto m = kuramoto(1.0);
  REQUIRE(rapp_bound(m, 0.0, 0.0, 0.0, 1.0) == 0.0);
  // linear in the bracketed sum
  const double b1 = rapp_bound(m, 0.1, 0.0, 0.0, 1.0);
  const double b2 = rapp_bound(m, 0.2, 0.0, 0.0, 1.0);
  REQUIRE_THAT(b2, Catch::Matchers::WithinRel(2.0 * b1, 1e-12));
  const double b3 = rapp_bound(m, 0.05, 0.03, 0.02, 1.0);
  REQUIRE_THAT(b3, Catch::Matchers::WithinRel(b1, 1e-12));  // same bracket total 0.1
  // doubling T multiplies by 2 e^{C W T}
  const double c = rapp_constant(m);
  const double ratio = rapp_bound(m, 0.1, 0.0, 0.0, 2.0) / rapp_bound(m, 0.1, 0.0, 0.0, 1.0);
  REQUIRE_THAT(ratio, Catch::Matchers::WithinRel(2.0 * std::exp(c * m.sup_w * 1.0), 1e-9));
}

TEST_CASE("uniform C1 constant is exposed and matches the declared ingredients") {
  const auto m = kuramoto(1.0);  // sup_phi = 1, grad_phi = sqrt(2), active dims 2
  const double expect_m = std::max({1.0, std::sqrt(2.0) + bump_derivative_max(),
                                    std::sqrt(2.0) * expected_normal_norm(2)});
  REQUIRE_THAT(approx_uniform_c1_bound(m), Catch::Matchers::WithinAbs(expect_m, 1e-9));
  REQUIRE_THAT(rapp_constant(m),
               Catch::Matchers::WithinAbs(6.0 * std::max(expect_m, 0.5 + 1.0), 1e-9));
}

TEST_CASE("vanishing perturbation: huge R, tiny eps reproduce the reference run") {
  const auto m = kuramoto(1.0);
  const int n = 32;
  const auto media = sample_media(m, n, 61);
  const auto g = sample_w_graph(m, n, 0.25, media, 61);
  IntegrateOptions opts;
  opts.T = 0.5;
  opts.dt = 1e-3;
  opts.seed = 61;
  const auto run = run_approx_system(m, g, 1e-6, 1000.0, opts);
  REQUIRE(run.exit_fraction == 0.0);
  REQUIRE(run.capped_delta <= 1e-4);
}

TEST_CASE("degenerate cutoff: small R forces exits and a visible distance") {
  const auto m = kuramoto(1.0);
  const int n = 32;
  const auto media = sample_media(m, n, 62);
  const auto g = sample_w_graph(m, n, 0.25, media, 62);
  IntegrateOptions opts;
  opts.T = 0.5;
  opts.dt = 1e-3;
  opts.seed = 62;
  const auto run = run_approx_system(m, g, 1.0, 1.0, opts);
  REQUIRE(run.exit_fraction > 0.0);
  REQUIRE(run.capped_delta > 0.01);
}

TEST_CASE("per-run approximation bound with the exact norm at n = 16") {
  const auto m = kuramoto(1.0);
  const int n = 16;
  for (std::uint64_t seed = 70; seed < 74; ++seed) {
    const auto media = sample_media(m, n, seed);
    const auto g = sample_w_graph(m, n, 0.25, media, seed);
    IntegrateOptions opts;
    opts.T = 0.5;
    opts.dt = 1e-3;
    opts.seed = seed;
    const Ensemble ref = integrate_single(m, g, opts);
    const double norm = norm_inf_to_one_exact(g.dense_centered()) / n;
    for (double eps : {0.1, 0.01})
      for (double radius : {8.0, 16.0}) {
        const auto run = run_approx_system(m, g, eps, radius, opts, &ref);
        const double bound = rapp_bound(m, eps, run.exit_fraction, norm, opts.T);
        REQUIRE(run.capped_delta <= bound + 10.0 * std::sqrt(opts.dt) * opts.T);
      }
  }
}

TEST_CASE("exit flags come from the reference trajectories") {
  const auto m = kuramoto(1.0);
  const int n = 24;
  const auto media = sample_media(m, n, 63);
  const auto g = sample_w_graph(m, n, 0.25, media, 63);
  IntegrateOptions opts;
  opts.T = 0.25;
  opts.dt = 1e-3;
  opts.seed = 63;
  const Ensemble ref = integrate_single(m, g, opts);
  const auto flags = exit_events(ref, 8.0);
  for (int i = 0; i < n; ++i) {
    double sup = 0.0;
    for (int t = 0; t <= ref.steps; ++t) sup = std::max(sup, std::fabs(ref.at(t)[i]));
    const bool expect = sup > 2.0 || std::fabs(ref.media[i]) > 2.0;
    REQUIRE(static_cast<bool>(flags[i]) == expect);
  }
}

TEST_CASE("Monte Carlo exit frequencies respect the binomial tail bound") {
  // kappa = 0: particles are i.i.d.; estimate the per-particle tail from an
  // independent oracle run, then compare replicate frequencies to the bound.
  const auto m = kuramoto(0.0, -0.5, 0.5, -0.5, 0.5);
  const int n = 64;
  const double threshold = 2.0;  // sup_t |theta| over [0, T]
  IntegrateOptions opts;
  opts.T = 0.25;
  opts.dt = 2.5e-3;

  auto exceed_count = [&](std::uint64_t seed) {
    const auto media = sample_media(m, n, seed);
    const auto g = sample_w_graph(m, n, 0.5, media, seed);
    IntegrateOptions o = opts;
    o.seed = seed;
    const auto e = integrate_single(m, g, o);
    int count = 0;
    for (int i = 0; i < n; ++i) {
      double sup = 0.0;
      for (int t = 0; t <= e.steps; ++t) sup = std::max(sup, std::fabs(e.at(t)[i]));
      if (sup >= threshold) ++count;
    }
    return count;
  };

  // oracle estimate of P(sup |theta_i| >= threshold) from disjoint seeds
  int oracle_hits = 0;
  const int oracle_runs = 30;
  for (int r = 0; r < oracle_runs; ++r) oracle_hits += exceed_count(5000 + r);
  const double p_tail = static_cast<double>(oracle_hits) / (oracle_runs * n);

  const double a = 0.25;
  const double log_bound = exit_tail_log_bound(p_tail, a, n);
  REQUIRE(log_bound < 0.0);  // informative regime
  int bad = 0;
  const int reps = 150;
  for (int r = 0; r < reps; ++r)
    if (exceed_count(9000 + r) > a * n) ++bad;
  REQUIRE(static_cast<double>(bad) / reps <= std::exp(log_bound) + 0.02);
}
