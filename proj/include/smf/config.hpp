#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "smf/mckv.hpp"  // ConfigError
#include "smf/model.hpp"

// Experiment configuration: a flat, sectioned key = value text format.
// Sections are [model], [sweep], [run], [distance], [mckv], [approx],
// [output]. Unknown keys are rejected with the offending line number;
// parse -> serialize -> parse is idempotent.

namespace smf {

struct ExperimentConfig {
  // [model]
  std::string model_id = "kuramoto";
  std::map<std::string, double> model_params;

  // [sweep]
  std::vector<int> n_list = {128};
  std::string p_rule = "power";     // "power": p = p_c * n^{-p_gamma}; "list": explicit
  double p_c = 1.0;
  double p_gamma = 0.5;
  std::vector<double> p_list;
  int replicates = 1;

  // [run]
  double T = 1.0;
  double dt = 1e-3;
  double noise_scale = 1.0;

  // [distance]
  int dict_size = 512;
  int norm_restarts = 16;
  int exact_cap = 20;

  // [mckv]
  int media_atoms = 1;
  int grid_points = 256;
  double dt_pde = 0.0;
  int checkpoints = 8;
  double domain_halfwidth = 8.0;
  int mckv_dense_n = 2000;
  std::vector<double> compare_times = {1.0};

  // [approx]
  std::vector<double> eps_list = {0.1, 0.01};
  std::vector<double> r_list = {8.0, 16.0, 32.0};

  // [output]
  std::string out_dir = ".";
  std::uint64_t master_seed = 1;
  int workers = 1;
  bool emit_plot_data = false;

  double p_of(int n) const {
    if (p_rule == "power") return p_c * std::pow(static_cast<double>(n), -p_gamma);
    for (std::size_t k = 0; k < n_list.size(); ++k)
      if (n_list[k] == n) return p_list[k];
    throw ConfigError("p_of: n not present in the sweep");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

inline double parse_num(const std::string& v, int line) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config line " + std::to_string(line) + ": bad number '" + v + "'");
  }
}

}  // namespace detail

inline ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig c;
  c.model_params.clear();
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  bool saw_n = false, saw_p_list = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError("config line " + std::to_string(lineno) + ": malformed section header");
      section = t.substr(1, t.size() - 2);
      if (section != "model" && section != "sweep" && section != "run" &&
          section != "distance" && section != "mckv" && section != "approx" &&
          section != "output")
        throw ConfigError("config line " + std::to_string(lineno) + ": unknown section [" +
                          section + "]");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(t.substr(0, eq));
    const std::string val = detail::trim(t.substr(eq + 1));
    const int ln = lineno;

    if (section == "model") {
      if (key == "id")
        c.model_id = val;
      else
        c.model_params[key] = detail::parse_num(val, ln);
    } else if (section == "sweep") {
      if (key == "n") {
        c.n_list.clear();
        for (const auto& s : detail::split_csv(val))
          c.n_list.push_back(static_cast<int>(detail::parse_num(s, ln)));
        saw_n = true;
      } else if (key == "p_rule") {
        if (val != "power" && val != "list")
          throw ConfigError("config line " + std::to_string(ln) + ": p_rule must be power|list");
        c.p_rule = val;
      } else if (key == "p_c")
        c.p_c = detail::parse_num(val, ln);
      else if (key == "p_gamma")
        c.p_gamma = detail::parse_num(val, ln);
      else if (key == "p_list") {
        c.p_list.clear();
        for (const auto& s : detail::split_csv(val)) c.p_list.push_back(detail::parse_num(s, ln));
        saw_p_list = true;
      } else if (key == "replicates")
        c.replicates = static_cast<int>(detail::parse_num(val, ln));
      else
        throw ConfigError("config line " + std::to_string(ln) + ": unknown key '" + key + "'");
    } else if (section == "run") {
      if (key == "T")
        c.T = detail::parse_num(val, ln);
      else if (key == "dt")
        c.dt = detail::parse_num(val, ln);
      else if (key == "noise_scale")
        c.noise_scale = detail::parse_num(val, ln);
      else
        throw ConfigError("config line " + std::to_string(ln) + ": unknown key '" + key + "'");
    } else if (section == "distance") {
      if (key == "dict_size")
        c.dict_size = static_cast<int>(detail::parse_num(val, ln));
      else if (key == "norm_restarts")
        c.norm_restarts = static_cast<int>(detail::parse_num(val, ln));
      else if (key == "exact_cap")
        c.exact_cap = static_cast<int>(detail::parse_num(val, ln));
      else
        throw ConfigError("config line " + std::to_string(ln) + ": unknown key '" + key + "'");
    } else if (section == "mckv") {
      if (key == "media_atoms")
        c.media_atoms = static_cast<int>(detail::parse_num(val, ln));
      else if (key == "grid_points")
        c.grid_points = static_cast<int>(detail::parse_num(val, ln));
      else if (key == "dt_pde")
        c.dt_pde = detail::parse_num(val, ln);
      else if (key == "checkpoints")
        c.checkpoints = static_cast<int>(detail::parse_num(val, ln));
      else if (key == "domain_halfwidth")
        c.domain_halfwidth = detail::parse_num(val, ln);
      else if (key == "dense_n")
        c.mckv_dense_n = static_cast<int>(detail::parse_num(val, ln));
      else if (key == "compare_times") {
        c.compare_times.clear();
        for (const auto& s : detail::split_csv(val))
          c.compare_times.push_back(detail::parse_num(s, ln));
      } else
        throw ConfigError("config line " + std::to_string(ln) + ": unknown key '" + key + "'");
    } else if (section == "approx") {
      if (key == "eps") {
        c.eps_list.clear();
        for (const auto& s : detail::split_csv(val)) c.eps_list.push_back(detail::parse_num(s, ln));
      } else if (key == "R") {
        c.r_list.clear();
        for (const auto& s : detail::split_csv(val)) c.r_list.push_back(detail::parse_num(s, ln));
      } else
        throw ConfigError("config line " + std::to_string(ln) + ": unknown key '" + key + "'");
    } else if (section == "output") {
      if (key == "out_dir")
        c.out_dir = val;
      else if (key == "seed")
        c.master_seed = static_cast<std::uint64_t>(detail::parse_num(val, ln));
      else if (key == "workers")
        c.workers = static_cast<int>(detail::parse_num(val, ln));
      else if (key == "emit_plot_data")
        c.emit_plot_data = (val == "true" || val == "1");
      else
        throw ConfigError("config line " + std::to_string(ln) + ": unknown key '" + key + "'");
    } else {
      throw ConfigError("config line " + std::to_string(ln) + ": key outside any section");
    }
  }
  if (c.p_rule == "list" && (!saw_p_list || c.p_list.size() != c.n_list.size()))
    throw ConfigError("config: p_rule=list requires p_list matching n");
  if (c.replicates < 1) throw ConfigError("config: replicates must be >= 1");
  if (!(c.dt > 0.0) || !(c.T > 0.0)) throw ConfigError("config: T and dt must be positive");
  (void)saw_n;
  return c;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

inline std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream o;
  auto num = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  o << "[model]\n";
  o << "id = " << c.model_id << "\n";
  for (const auto& [k, v] : c.model_params) o << k << " = " << num(v) << "\n";
  o << "\n[sweep]\n";
  o << "n = ";
  for (std::size_t i = 0; i < c.n_list.size(); ++i) o << (i ? "," : "") << c.n_list[i];
  o << "\n";
  o << "p_rule = " << c.p_rule << "\n";
  if (c.p_rule == "power") {
    o << "p_c = " << num(c.p_c) << "\n";
    o << "p_gamma = " << num(c.p_gamma) << "\n";
  } else {
    o << "p_list = ";
    for (std::size_t i = 0; i < c.p_list.size(); ++i) o << (i ? "," : "") << num(c.p_list[i]);
    o << "\n";
  }
  o << "replicates = " << c.replicates << "\n";
  o << "\n[run]\n";
  o << "T = " << num(c.T) << "\n";
  o << "dt = " << num(c.dt) << "\n";
  o << "noise_scale = " << num(c.noise_scale) << "\n";
  o << "\n[distance]\n";
  o << "dict_size = " << c.dict_size << "\n";
  o << "norm_restarts = " << c.norm_restarts << "\n";
  o << "exact_cap = " << c.exact_cap << "\n";
  o << "\n[mckv]\n";
  o << "media_atoms = " << c.media_atoms << "\n";
  o << "grid_points = " << c.grid_points << "\n";
  o << "dt_pde = " << num(c.dt_pde) << "\n";
  o << "checkpoints = " << c.checkpoints << "\n";
  o << "domain_halfwidth = " << num(c.domain_halfwidth) << "\n";
  o << "dense_n = " << c.mckv_dense_n << "\n";
  o << "compare_times = ";
  for (std::size_t i = 0; i < c.compare_times.size(); ++i)
    o << (i ? "," : "") << num(c.compare_times[i]);
  o << "\n";
  o << "\n[approx]\n";
  o << "eps = ";
  for (std::size_t i = 0; i < c.eps_list.size(); ++i) o << (i ? "," : "") << num(c.eps_list[i]);
  o << "\n";
  o << "R = ";
  for (std::size_t i = 0; i < c.r_list.size(); ++i) o << (i ? "," : "") << num(c.r_list[i]);
  o << "\n";
  o << "\n[output]\n";
  o << "out_dir = " << c.out_dir << "\n";
  o << "seed = " << c.master_seed << "\n";
  o << "workers = " << c.workers << "\n";
  o << "emit_plot_data = " << (c.emit_plot_data ? "true" : "false") << "\n";
  return o.str();
}

// Sweep guard: p(n) ||W||_inf <= 1 for every n.
inline void validate_sweep(const ExperimentConfig& c, const InteractionModel& model) {
  for (int n : c.n_list) {
    if (n < 1) throw ConfigError("config: n must be >= 1");
    const double p = c.p_of(n);
    if (!(p > 0.0) || p > 1.0)
      throw ConfigError("config: p(n) outside (0,1] at n=" + std::to_string(n));
    if (p * model.sup_w > 1.0 + 1e-12)
      throw ConfigError("config: p(n)*sup_W exceeds 1 at n=" + std::to_string(n));
  }
}

}  // namespace smf
