#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "smf/dynamics.hpp"
#include "smf/graph.hpp"
#include "smf/mckv.hpp"
#include "smf/model.hpp"

// Persistence: graph samples as a JSON container (header, media block,
// edge list), trajectories and density flows as columnar little-endian
// binary (header + media + row-major position blocks), tables as CSV.
// Doubles print with %.17g so a round-trip is value-exact.

namespace smf {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// --- graph JSON container -------------------------------------------------

inline nlohmann::json graph_to_json(const GraphSample& g) {
  nlohmann::json j;
  j["format"] = "smf-graph-v1";
  j["n"] = g.n;
  j["p"] = g.p;
  j["d"] = g.d;
  j["seed"] = g.seed;
  j["kernel"] = g.kernel_id;
  j["media"] = g.media;
  nlohmann::json edges = nlohmann::json::array();
  for (int i = 0; i < g.n; ++i)
    g.for_each_neighbor(i, [&](int k) {
      if (k >= i) edges.push_back({i, k});
    });
  j["edges"] = std::move(edges);
  return j;
}

inline void save_graph(const GraphSample& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_graph: cannot open " + path);
  out << graph_to_json(g).dump() << "\n";
}

// Rebuilds the derived matrices through the given model's kernel.
inline GraphSample load_graph(const std::string& path, const InteractionModel& model) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_graph: cannot open " + path);
  nlohmann::json j;
  in >> j;
  if (j.value("format", "") != std::string("smf-graph-v1"))
    throw std::runtime_error("load_graph: unrecognized container format");
  GraphSample g;
  g.n = j.at("n").get<int>();
  g.p = j.at("p").get<double>();
  g.d = j.at("d").get<int>();
  g.seed = j.at("seed").get<std::uint64_t>();
  g.kernel_id = j.at("kernel").get<std::string>();
  g.media = j.at("media").get<std::vector<double>>();
  g.w_const = model.w_const;
  g.w_const_value = model.w_const_value;
  if (!model.w_const) {
    g.w_cache.resize(static_cast<std::size_t>(g.n) * g.n);
    for (int i = 0; i < g.n; ++i)
      for (int k = 0; k < g.n; ++k)
        g.w_cache[static_cast<std::size_t>(i) * g.n + k] =
            model.kernel_w(g.media_of(i), g.media_of(k));
  }
  std::vector<std::vector<std::uint32_t>> adj(g.n);
  for (const auto& e : j.at("edges")) {
    const int a = e[0].get<int>(), b = e[1].get<int>();
    adj[a].push_back(b);
    if (a != b) adj[b].push_back(a);
    g.edge_count += (a == b) ? 1 : 2;
  }
  g.bitset_mode = (g.p > 0.125);
  if (g.bitset_mode) {
    g.words = (static_cast<std::size_t>(g.n) + 63) / 64;
    g.bits.assign(static_cast<std::size_t>(g.n) * g.words, 0ull);
    for (int i = 0; i < g.n; ++i)
      for (std::uint32_t k : adj[i])
        g.bits[static_cast<std::size_t>(i) * g.words + k / 64] |= 1ull << (k % 64);
  } else {
    for (auto& row : adj) std::sort(row.begin(), row.end());
    g.row_ptr.assign(g.n + 1, 0);
    for (int i = 0; i < g.n; ++i) g.row_ptr[i + 1] = g.row_ptr[i] + adj[i].size();
    for (int i = 0; i < g.n; ++i)
      for (std::uint32_t k : adj[i]) g.cols.push_back(k);
  }
  return g;
}

inline nlohmann::json norm_certificate_json(const std::string& method, double value,
                                            const std::vector<double>* certificate = nullptr) {
  nlohmann::json j;
  j["method"] = method;
  j["value"] = value;
  if (certificate) j["certificate"] = *certificate;
  return j;
}

// Custom Fourier atoms from a JSON list:
//   { "d": 1, "atoms": [ { "z": [zx, zy, zomega..., zpi...], "re": a, "im": b }, ... ] }
inline FourierMeasure fourier_measure_from_json(const nlohmann::json& j) {
  FourierMeasure fm;
  fm.d = j.at("d").get<int>();
  const std::size_t dim = 2 + 2 * static_cast<std::size_t>(fm.d);
  for (const auto& atom : j.at("atoms")) {
    FourierAtom a;
    a.z = atom.at("z").get<std::vector<double>>();
    if (a.z.size() != dim)
      throw std::runtime_error("fourier_measure_from_json: atom frequency needs 2d+2 entries");
    a.weight = {atom.value("re", 0.0), atom.value("im", 0.0)};
    fm.atoms.push_back(std::move(a));
  }
  return fm;
}

inline FourierMeasure load_fourier_measure(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_fourier_measure: cannot open " + path);
  nlohmann::json j;
  in >> j;
  return fourier_measure_from_json(j);
}

// --- columnar binary ------------------------------------------------------

namespace detail {

inline void put_u32(std::ofstream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}
inline void put_u64(std::ofstream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), 8);
}
inline void put_f64(std::ofstream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), 8);
}
inline void put_block(std::ofstream& out, const std::vector<double>& v) {
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * 8));
}
inline std::uint32_t get_u32(std::ifstream& in) {
  std::uint32_t v;
  in.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
inline std::uint64_t get_u64(std::ifstream& in) {
  std::uint64_t v;
  in.read(reinterpret_cast<char*>(&v), 8);
  return v;
}
inline double get_f64(std::ifstream& in) {
  double v;
  in.read(reinterpret_cast<char*>(&v), 8);
  return v;
}
inline void get_block(std::ifstream& in, std::vector<double>& v, std::size_t count) {
  v.resize(count);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(count * 8));
}

}  // namespace detail

// Layout: magic "SMFTRAJ1", u32 n, u32 steps, u32 d, u32 blocks(1|2),
// f64 dt, f64 T, u64 seed, media (n*d), xi (n), then each position block
// (steps+1)*n row-major (time-major).
inline void save_trajectory_pair(const TrajectoryPair& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_trajectory_pair: cannot open " + path);
  out.write("SMFTRAJ1", 8);
  detail::put_u32(out, p.n);
  detail::put_u32(out, p.steps);
  detail::put_u32(out, p.d);
  detail::put_u32(out, 2);
  detail::put_f64(out, p.dt);
  detail::put_f64(out, p.T);
  detail::put_u64(out, p.seed);
  detail::put_block(out, p.media);
  detail::put_block(out, p.xi);
  detail::put_block(out, p.theta_sparse);
  detail::put_block(out, p.theta_dense);
}

inline TrajectoryPair load_trajectory_pair(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_trajectory_pair: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (std::string(magic, 8) != "SMFTRAJ1")
    throw std::runtime_error("load_trajectory_pair: bad magic");
  TrajectoryPair p;
  p.n = detail::get_u32(in);
  p.steps = detail::get_u32(in);
  p.d = detail::get_u32(in);
  const std::uint32_t blocks = detail::get_u32(in);
  p.dt = detail::get_f64(in);
  p.T = detail::get_f64(in);
  p.seed = detail::get_u64(in);
  detail::get_block(in, p.media, static_cast<std::size_t>(p.n) * p.d);
  detail::get_block(in, p.xi, p.n);
  detail::get_block(in, p.theta_sparse, static_cast<std::size_t>(p.steps + 1) * p.n);
  if (blocks == 2) detail::get_block(in, p.theta_dense, static_cast<std::size_t>(p.steps + 1) * p.n);
  if (!in) throw std::runtime_error("load_trajectory_pair: truncated file");
  return p;
}

// Downsampled CSV: one row per kept time, columns t, theta_0..theta_{n-1}.
inline void save_trajectory_csv(const Ensemble& e, const std::string& path, int keep_every) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_trajectory_csv: cannot open " + path);
  out << "t";
  for (int i = 0; i < e.n; ++i) out << ",theta_" << i;
  out << "\n";
  for (int t = 0; t <= e.steps; t += keep_every) {
    out << format_double(t * e.dt);
    const double* row = e.at(t);
    for (int i = 0; i < e.n; ++i) out << "," << format_double(row[i]);
    out << "\n";
  }
}

// Layout: magic "SMFDENS1", u32 cells, u32 atoms, u32 checkpoints, u32 d,
// u32 periodic, f64 x_lo, f64 x_hi, f64 dt_pde, atom media+weights,
// checkpoint times, density blocks.
inline void save_density_flow(const DensityFlow& f, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_density_flow: cannot open " + path);
  out.write("SMFDENS1", 8);
  detail::put_u32(out, f.cells);
  detail::put_u32(out, static_cast<std::uint32_t>(f.atoms.size()));
  detail::put_u32(out, static_cast<std::uint32_t>(f.checkpoint_times.size()));
  detail::put_u32(out, f.atoms.empty() ? 0 : static_cast<std::uint32_t>(f.atoms[0].omega.size()));
  detail::put_u32(out, f.periodic ? 1 : 0);
  detail::put_f64(out, f.x_lo);
  detail::put_f64(out, f.x_hi);
  detail::put_f64(out, f.dt_pde);
  for (const auto& a : f.atoms) {
    detail::put_block(out, a.omega);
    detail::put_f64(out, a.weight);
  }
  std::vector<double> times = f.checkpoint_times;
  detail::put_block(out, times);
  for (const auto& q : f.q) detail::put_block(out, q);
}

inline void save_density_csv(const DensityFlow& f, const std::string& path,
                             const std::vector<double>* residuals = nullptr) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_density_csv: cannot open " + path);
  out << "t,residual,mass_error\n";
  for (std::size_t k = 0; k < f.checkpoint_times.size(); ++k) {
    const double res = residuals && k < residuals->size() ? (*residuals)[k]
                                                           : std::numeric_limits<double>::quiet_NaN();
    out << format_double(f.checkpoint_times[k]) << "," << format_double(res) << ","
        << format_double(f.mass_error[k]) << "\n";
  }
}

}  // namespace smf
