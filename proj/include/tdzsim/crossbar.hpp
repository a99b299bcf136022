#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "tdzsim/chain.hpp"
#include "tdzsim/errors.hpp"

namespace tdzsim {

// Piezo-resistive crossbar: one element between every row and column line,
// selected through multiplexer switches of mux_r_on each, with optional
// element capacitance and lumped line capacitance to ground.
struct SensorGrid {
  int rows = 0;
  int cols = 0;
  std::vector<double> r;      // ohms, row-major
  std::vector<double> c_par;  // farads, row-major; empty means none
  double mux_r_on = 50.0;     // ohms per selected/terminated line
  double line_cap = 0.0;      // farads per line to ground

  static SensorGrid uniform(int rows, int cols, double r_ohm) {
    SensorGrid g;
    g.rows = rows;
    g.cols = cols;
    g.r.assign(static_cast<std::size_t>(rows) * cols, r_ohm);
    return g;
  }

  double res(int i, int j) const {
    return r[static_cast<std::size_t>(i) * cols + j];
  }
  double& res(int i, int j) { return r[static_cast<std::size_t>(i) * cols + j]; }
  double cap(int i, int j) const {
    return c_par.empty() ? 0.0 : c_par[static_cast<std::size_t>(i) * cols + j];
  }
  std::size_t count() const { return static_cast<std::size_t>(rows) * cols; }
};

inline void validate(const SensorGrid& g) {
  if (g.rows < 1 || g.cols < 1)
    throw config_error("grid: need at least one row and one column");
  if (g.r.size() != g.count())
    throw config_error("grid: resistance matrix size mismatch");
  if (!g.c_par.empty() && g.c_par.size() != g.count())
    throw config_error("grid: capacitance matrix size mismatch");
  for (double v : g.r)
    if (!(v > 0) || !std::isfinite(v))
      throw config_error("grid: element resistances must be positive finite");
  if (g.mux_r_on < 0) throw config_error("grid: mux_r_on must be >= 0");
}

enum class TerminationPolicy { floating, grounded, driven_guard };

inline std::string to_string(TerminationPolicy p) {
  switch (p) {
    case TerminationPolicy::floating: return "floating";
    case TerminationPolicy::grounded: return "grounded";
    default: return "driven_guard";
  }
}

// Terminal impedance of element (sel_row, sel_col): the selected row is
// driven at 1 V through mux_r_on, the selected column tied to 0 V through
// mux_r_on where the current is sensed, every other line terminated per
// policy. Solved by nodal analysis over the row/column nodes.
inline std::complex<double> equivalent_impedance(const SensorGrid& g,
                                                 int sel_row, int sel_col,
                                                 TerminationPolicy pol,
                                                 double f_hz) {
  validate(g);
  if (sel_row < 0 || sel_row >= g.rows || sel_col < 0 || sel_col >= g.cols)
    throw config_error("equivalent_impedance: selection out of range");
  using cd = std::complex<double>;
  const int n = g.rows + g.cols;
  const double w = 2.0 * std::numbers::pi * f_hz;
  const auto elem_y = [&](int i, int j) {
    return cd(1.0 / g.res(i, j), w * g.cap(i, j));
  };
  const int sr = sel_row;
  const int sc = g.rows + sel_col;

  // Per-node termination: potential and whether it exists.
  std::vector<int> term(n, 0);        // 0 none, 1 tied
  std::vector<double> term_v(n, 0.0);
  for (int k = 0; k < n; ++k) {
    if (k == sr) {
      term[k] = 1;
      term_v[k] = 1.0;
    } else if (k == sc) {
      term[k] = 1;
      term_v[k] = 0.0;
    } else if (pol == TerminationPolicy::grounded) {
      term[k] = 1;
      term_v[k] = 0.0;
    } else if (pol == TerminationPolicy::driven_guard) {
      term[k] = 1;
      term_v[k] = 1.0;
    }
  }

  const bool ideal_mux = g.mux_r_on == 0.0;
  // Free nodes: all of them when the mux has resistance, otherwise only the
  // unterminated ones.
  std::vector<int> free_idx(n, -1);
  int n_free = 0;
  for (int k = 0; k < n; ++k)
    if (!(ideal_mux && term[k])) free_idx[k] = n_free++;

  Eigen::MatrixXcd G = Eigen::MatrixXcd::Zero(n_free, n_free);
  Eigen::VectorXcd b = Eigen::VectorXcd::Zero(n_free);
  const auto forced_v = [&](int k) { return cd(term_v[k], 0.0); };

  for (int i = 0; i < g.rows; ++i) {
    for (int j = 0; j < g.cols; ++j) {
      const int a = i;
      const int c = g.rows + j;
      const cd y = elem_y(i, j);
      const int fa = free_idx[a];
      const int fc = free_idx[c];
      if (fa >= 0 && fc >= 0) {
        G(fa, fa) += y;
        G(fc, fc) += y;
        G(fa, fc) -= y;
        G(fc, fa) -= y;
      } else if (fa >= 0) {
        G(fa, fa) += y;
        b(fa) += y * forced_v(c);
      } else if (fc >= 0) {
        G(fc, fc) += y;
        b(fc) += y * forced_v(a);
      }
    }
  }
  for (int k = 0; k < n; ++k) {
    const int fk = free_idx[k];
    if (fk < 0) continue;
    if (g.line_cap > 0) G(fk, fk) += cd(0.0, w * g.line_cap);
    if (term[k] && !ideal_mux) {
      const cd g_on = 1.0 / g.mux_r_on;
      G(fk, fk) += g_on;
      b(fk) += g_on * forced_v(k);
    }
  }

  // A free node with no incident admittance cannot be solved for.
  for (int k = 0; k < n; ++k) {
    const int fk = free_idx[k];
    if (fk >= 0 && std::abs(G(fk, fk)) < 1e-18) {
      const std::string line = k < g.rows ? "row " + std::to_string(k)
                                          : "col " + std::to_string(k - g.rows);
      throw solver_error("equivalent_impedance: isolated floating " + line);
    }
  }

  Eigen::VectorXcd v(n_free);
  if (n_free > 0) {
    v = G.partialPivLu().solve(b);
    const double resid = (G * v - b).norm();
    if (!v.allFinite() || resid > 1e-9 * std::max(b.norm(), 1e-30))
      throw solver_error("equivalent_impedance: singular or ill-conditioned nodal system");
  }
  const auto node_v = [&](int k) {
    return free_idx[k] >= 0 ? v(free_idx[k]) : forced_v(k);
  };

  cd i_sense(0.0, 0.0);
  if (ideal_mux) {
    for (int i = 0; i < g.rows; ++i)
      i_sense += elem_y(i, sel_col) * node_v(i);  // column node is at 0 V
  } else {
    i_sense = node_v(sc) / g.mux_r_on;
  }
  if (std::abs(i_sense) < 1e-30)
    throw solver_error("equivalent_impedance: no sense current (open path)");
  return 1.0 / i_sense;
}

// Visit order for one frame, 48 us per sensor by default.
struct ScanPlan {
  std::vector<std::pair<int, int>> order;
  double t_meas = 48e-6;

  static ScanPlan row_major(int rows, int cols, double t_meas = 48e-6) {
    ScanPlan p;
    p.t_meas = t_meas;
    p.order.reserve(static_cast<std::size_t>(rows) * cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) p.order.emplace_back(i, j);
    return p;
  }
  double frame_time() const { return order.size() * t_meas; }
};

inline void validate(const ScanPlan& p, const SensorGrid& g) {
  if (p.order.size() != g.count())
    throw config_error("scan plan: must visit every sensor exactly once");
  std::vector<std::uint8_t> seen(g.count(), 0);
  for (auto [i, j] : p.order) {
    if (i < 0 || i >= g.rows || j < 0 || j >= g.cols)
      throw config_error("scan plan: index out of range");
    auto& s = seen[static_cast<std::size_t>(i) * g.cols + j];
    if (s) throw config_error("scan plan: duplicate sensor visit");
    s = 1;
  }
  if (!(p.t_meas > 0)) throw config_error("scan plan: t_meas must be positive");
}

enum class AcqMode { ideal, full_chain };

struct SensorRecord {
  int row = 0;
  int col = 0;
  double r_true = 0.0;
  double r_meas = std::numeric_limits<double>::quiet_NaN();
  double theta = 0.0;
  std::complex<double> z{0.0, 0.0};
  MeasFlags flags;
  int attempts = 0;
};

struct FrameReport {
  int rows = 0;
  int cols = 0;
  AcqMode mode = AcqMode::ideal;
  TerminationPolicy policy = TerminationPolicy::floating;
  std::vector<SensorRecord> sensors;  // in scan order
  double frame_time = 0.0;
  double fps = 0.0;

  const SensorRecord& at(int i, int j) const {
    for (const auto& s : sensors)
      if (s.row == i && s.col == j) return s;
    throw config_error("frame report: sensor not found");
  }
  std::vector<double> measured_matrix() const {
    std::vector<double> m(static_cast<std::size_t>(rows) * cols, 0.0);
    for (const auto& s : sensors)
      m[static_cast<std::size_t>(s.row) * cols + s.col] = s.r_meas;
    return m;
  }
};

// Scan every sensor once. Ideal mode records the nodal-model impedance
// directly; full-chain mode pushes it through excitation, driver and T-D
// readout. Per-sensor failures are flagged, never fatal to the frame.
inline FrameReport scan_frame(const SensorGrid& g, const ScanPlan& plan,
                              AcqMode mode, TerminationPolicy pol,
                              const ChainConfig& cfg,
                              std::uint64_t master_seed) {
  validate(g);
  validate(plan, g);
  FrameReport rep;
  rep.rows = g.rows;
  rep.cols = g.cols;
  rep.mode = mode;
  rep.policy = pol;
  rep.frame_time = plan.frame_time();
  rep.fps = 1.0 / rep.frame_time;
  rep.sensors.reserve(plan.order.size());
  for (auto [i, j] : plan.order) {
    SensorRecord rec;
    rec.row = i;
    rec.col = j;
    rec.r_true = g.res(i, j);
    try {
      const std::complex<double> z_eq =
          equivalent_impedance(g, i, j, pol, cfg.exc.f_exc);
      if (mode == AcqMode::ideal) {
        rec.z = z_eq;
        rec.r_meas = resistance_from_z(z_eq);
        rec.theta = std::arg(z_eq);
      } else {
        const std::uint64_t sensor_idx =
            static_cast<std::uint64_t>(i) * g.cols + j;
        const Measurement m =
            measure_auto(cfg, z_eq, Rng::stream(master_seed, 1, sensor_idx).next_u64());
        rec.z = m.z;
        rec.r_meas = m.r;
        rec.theta = std::arg(m.z);
        rec.flags = m.flags;
        rec.attempts = m.attempts;
      }
    } catch (const solver_error&) {
      rec.flags.open_circuit = true;
    } catch (const demod_error&) {
      rec.flags.saturated = true;
    }
    rep.sensors.push_back(rec);
  }
  return rep;
}

}  // namespace tdzsim
