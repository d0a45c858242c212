// smf: simulate coupled sparse/dense interacting diffusions, check the
// matrix-norm and Gronwall bounds, solve the limiting Fokker-Planck system,
// and run the mollified-approximation ladder.
//
// Exit codes: 0 success, 2 config error, 3 numerical failure.

#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "smf/experiments.hpp"

namespace fs = std::filesystem;

namespace {

struct CliState {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = 0;
  bool emit_plot = false;
};

smf::ExperimentConfig load_config(const CliState& st) {
  smf::ExperimentConfig cfg =
      st.config_path.empty() ? smf::ExperimentConfig{} : smf::parse_config_file(st.config_path);
  if (st.seed_set) cfg.master_seed = st.seed;
  if (st.workers > 0) cfg.workers = st.workers;
  if (!st.out_dir.empty()) cfg.out_dir = st.out_dir;
  if (st.emit_plot) cfg.emit_plot_data = true;
  return cfg;
}

std::string run_stamp(const smf::ExperimentConfig& cfg, const std::string& cmd) {
  // Single comment line; consumers comparing outputs strip '#' lines.
  return "smf " + cmd + " seed=" + std::to_string(cfg.master_seed) +
         " generated=" + std::to_string(std::time(nullptr));
}

std::ofstream open_out(const smf::ExperimentConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.out_dir);
  std::ofstream out(cfg.out_dir + "/" + name);
  if (!out) throw smf::ConfigError("cannot open output file " + cfg.out_dir + "/" + name);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interacting diffusions on sparse W-random graphs"};
  app.require_subcommand(1);

  CliState st;
  app.add_option("--config", st.config_path, "experiment config file");
  app.add_option("--seed", st.seed, "master seed (overrides config)")->each([&](const std::string&) {
    st.seed_set = true;
  });
  app.add_option("--workers", st.workers, "worker threads (overrides config)");
  app.add_option("--out", st.out_dir, "output directory (overrides config)");
  app.add_flag("--emit-plot-data", st.emit_plot, "write gnuplot-ready two-column files");

  auto* simulate = app.add_subcommand("simulate", "coupled runs over the sweep; per-run distances");
  auto* sweep = app.add_subcommand("sweep-scaling", "median coupling distances across the sweep");
  auto* gstats = app.add_subcommand("graph-stats", "row-sum statistics and norm certificates");
  auto* mckv = app.add_subcommand("mckv", "solve the limiting system; compare to a dense run");
  auto* approx = app.add_subcommand("approx", "(eps, R) approximation ladder and bound checks");
  auto* mollify = app.add_subcommand("mollify-check", "mollifier bound grid assertions");
  auto* bench = app.add_subcommand("norm-bench", "exact vs certificate norms on sampled graphs");

  CLI11_PARSE(app, argc, argv);

  try {
    const smf::ExperimentConfig cfg = load_config(st);
    const smf::InteractionModel model = smf::make_model(cfg.model_id, cfg.model_params);

    if (simulate->parsed()) {
      const auto rows = smf::cmd_simulate(model, cfg);
      auto out = open_out(cfg, "simulate.csv");
      smf::write_simulate_csv(rows, out, run_stamp(cfg, "simulate"));
      std::cout << "wrote " << rows.size() << " rows to " << cfg.out_dir << "/simulate.csv\n";
    } else if (sweep->parsed()) {
      const auto table = smf::cmd_sweep_scaling(model, cfg);
      auto out = open_out(cfg, "sweep_scaling.csv");
      write_scaling_csv(table, out, run_stamp(cfg, "sweep-scaling"));
      auto runs = open_out(cfg, "sweep_runs.csv");
      smf::write_simulate_csv(table.runs, runs, run_stamp(cfg, "sweep-scaling"));
      if (cfg.emit_plot_data) smf::emit_plot_data(table, cfg.out_dir);
      std::cout << "wrote " << table.table.size() << " sweep rows to " << cfg.out_dir
                << "/sweep_scaling.csv\n";
    } else if (gstats->parsed()) {
      const auto r = smf::cmd_graph_stats(model, cfg);
      auto out = open_out(cfg, "graph_stats.json");
      nlohmann::json j;
      j["n"] = r.n;
      j["p"] = r.p;
      j["row_sum_mean"] = r.stats.mean;
      j["row_sum_min"] = r.stats.min;
      j["row_sum_max"] = r.stats.max;
      j["one_P_one_over_n"] = r.stats.one_p_one_over_n;
      j["bound"] = r.stats.bound;
      j["certificates"] = r.certificates;
      out << j.dump(2) << "\n";
      std::cout << "row-sum mean " << r.stats.mean << ", <1,P1>/n " << r.stats.one_p_one_over_n
                << " <= " << r.stats.bound << "\n";
    } else if (mckv->parsed()) {
      const auto r = smf::cmd_mckv(model, cfg);
      auto out = open_out(cfg, "mckv_compare.csv");
      write_mckv_csv(r, out, run_stamp(cfg, "mckv"));
      smf::save_density_flow(r.flow, cfg.out_dir + "/density.smfdens");
      smf::save_density_csv(r.flow, cfg.out_dir + "/mckv_mass.csv", &r.checkpoint_residuals);
      std::cout << "final residual " << r.final_residual << ", max mass error "
                << r.max_mass_error << "\n";
      for (std::size_t k = 0; k < r.compare_times.size(); ++k)
        std::cout << "W1(t=" << r.compare_times[k] << ") = " << r.w1[k] << "\n";
    } else if (approx->parsed()) {
      const auto r = smf::cmd_approx(model, cfg);
      auto out = open_out(cfg, "approx_ladder.csv");
      write_approx_csv(r, out, run_stamp(cfg, "approx"));
      bool all = true;
      for (const auto& row : r.rows) all = all && row.pass;
      std::cout << (all ? "all ladder cells within the bound\n"
                        : "BOUND VIOLATION in the ladder\n");
      if (!all) return 3;
    } else if (mollify->parsed()) {
      const auto r = smf::mollify_check_sin(0.1, 8.0);
      std::cout << "closed-form error " << r.closed_form_error << "\n"
                << "sup excess " << r.sup_excess << ", accuracy excess " << r.accuracy_excess
                << ", gradient excess " << r.gradient_excess << "\n"
                << "cutoff: support leak " << r.support_leak << ", sup excess "
                << r.cutoff_sup_excess << ", gradient excess " << r.cutoff_gradient_excess
                << ", accuracy excess " << r.cutoff_accuracy_excess << "\n"
                << "bump C1 = " << r.bump_c1 << "\n";
      if (!r.pass(1e-6)) {
        std::cout << "MOLLIFIER CHECK FAILED\n";
        return 3;
      }
      std::cout << "mollifier checks pass (tol 1e-6)\n";
    } else if (bench->parsed()) {
      const auto rows = smf::cmd_norm_bench(model, cfg);
      auto out = open_out(cfg, "norm_bench.csv");
      out << "n,p,exact,lower,upper\n";
      for (const auto& r : rows)
        out << r.n << "," << smf::format_double(r.p) << "," << smf::format_double(r.exact) << ","
            << smf::format_double(r.lower) << "," << smf::format_double(r.upper) << "\n";
      std::cout << "wrote " << rows.size() << " rows to " << cfg.out_dir << "/norm_bench.csv\n";
    }
    return 0;
  } catch (const smf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const smf::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
