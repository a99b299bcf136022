#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tdzsim/chain.hpp"
#include "tdzsim/coprime_dac.hpp"
#include "tdzsim/crossbar.hpp"
#include "tdzsim/errors.hpp"
#include "tdzsim/metrics.hpp"
#include "tdzsim/recon.hpp"

namespace tdzsim {

// Flat key-value configuration with one section per module. Every key has
// a default reproducing the reference operating point: 125 kHz excitation,
// 64 MHz clock, 6 phases, 48 us per measurement, 11x23 grid.
struct RunConfig {
  ExcitationSpec exc;
  CoPrimeDacSpec dac;
  DriverSpec drv;
  ReadoutSpec ro;
  RangePolicy range;
  double load_c_pad = 4.7e-12;

  std::string grid_path;
  double mux_r_on = 50.0;
  double line_cap = 0.0;
  TerminationPolicy policy = TerminationPolicy::floating;
  double t_meas = 48e-6;

  ReconSpec recon;

  double power_driver_w = 88.8e-6;
  double power_readout_w = 28e-6;
  double power_synth_w = 25e-6;
  double power_digital_w = 16.2e-6;

  std::uint64_t seed = 1;
  int repeats = 1000;
  int sweep_points = 25;
  double sweep_min = 20.0;
  double sweep_max = 500e3;
  std::vector<double> mc_loads{100.0, 1e3, 10e3, 100e3, 500e3};
  int jobs = 1;
  std::string out_dir = "out";
  double pgm_log10_min = 1.30103;  // log10(20)
  double pgm_log10_max = 5.69897;  // log10(500k)
  int thd_points = 17;
  double thd_min_a = 2e-6;
  double thd_max_a = 1e-3;

  RunConfig() {
    ro.noise_sigma = 1.6e-9;  // calibrated: 1000-repeat SNR at 1 kOhm lands near 71 dB
  }

  ChainConfig chain() const {
    ChainConfig c;
    c.exc = exc;
    c.drv = drv;
    c.ro = ro;
    c.ro.f_clk = exc.f_clk;
    c.ro.phases = exc.phases;
    c.range = range;
    c.load_c_pad = load_c_pad;
    return c;
  }

  std::vector<BudgetComponent> power_components() const {
    return {{"driver", power_driver_w},
            {"readout", power_readout_w},
            {"sig_synth", power_synth_w},
            {"digital_pll", power_digital_w}};
  }

  std::vector<double> sweep_loads() const {
    std::vector<double> loads;
    loads.reserve(static_cast<std::size_t>(sweep_points));
    if (sweep_points == 1) {
      loads.push_back(sweep_min);
      return loads;
    }
    const double l0 = std::log10(sweep_min);
    const double l1 = std::log10(sweep_max);
    for (int i = 0; i < sweep_points; ++i)
      loads.push_back(std::pow(10.0, l0 + (l1 - l0) * i / (sweep_points - 1)));
    return loads;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (...) {
    throw config_error("config: bad number for " + key + ": '" + v + "'");
  }
}

inline int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return static_cast<int>(x);
  } catch (...) {
    throw config_error("config: bad integer for " + key + ": '" + v + "'");
  }
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw config_error("config: bad flag for " + key + ": '" + v + "'");
}

inline std::vector<double> to_double_list(const std::string& key,
                                          const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (!tok.empty()) out.push_back(to_double(key, tok));
  }
  if (out.empty()) throw config_error("config: empty list for " + key);
  return out;
}

inline std::string fmt_num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace detail

inline TerminationPolicy policy_from_string(const std::string& s) {
  if (s == "floating") return TerminationPolicy::floating;
  if (s == "grounded") return TerminationPolicy::grounded;
  if (s == "driven_guard") return TerminationPolicy::driven_guard;
  throw config_error("config: unknown termination policy '" + s + "'");
}

// Raw section.key -> value map from key=value text with [section] headers
// and # comment lines.
inline std::map<std::string, std::string> parse_kv_text(
    const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw config_error("config: bad section header at line " +
                           std::to_string(lineno));
      section = detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error("config: expected key=value at line " +
                         std::to_string(lineno));
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw config_error("config: empty key at line " +
                                        std::to_string(lineno));
    kv[section.empty() ? key : section + "." + key] = val;
  }
  return kv;
}

inline RunConfig config_from_text(const std::string& text) {
  RunConfig c;
  const auto kv = parse_kv_text(text);
  using detail::to_bool;
  using detail::to_double;
  using detail::to_double_list;
  using detail::to_int;
  for (const auto& [key, v] : kv) {
    if (key == "excitation.f_exc_hz") c.exc.f_exc = to_double(key, v);
    else if (key == "excitation.f_clk_hz") c.exc.f_clk = to_double(key, v);
    else if (key == "excitation.amp_code") c.exc.amp_code = to_int(key, v);
    else if (key == "excitation.lut_bits") c.exc.lut_bits = to_int(key, v);
    else if (key == "excitation.lut_value_bits") c.exc.lut_value_bits = to_int(key, v);
    else if (key == "excitation.phases") c.exc.phases = to_int(key, v);
    else if (key == "excitation.enforce_paper_range") c.exc.enforce_paper_range = to_bool(key, v);
    else if (key == "excitation.allow_zero_amp") c.exc.allow_zero_amp = to_bool(key, v);
    else if (key == "dac.coarse_units") c.dac.coarse_units = to_int(key, v);
    else if (key == "dac.fine_units") c.dac.fine_units = to_int(key, v);
    else if (key == "dac.unit_mismatch_sigma") c.dac.unit_mismatch_sigma = to_double(key, v);
    else if (key == "dac.i_lsb_a") c.dac.i_lsb = to_double(key, v);
    else if (key == "dac.dem") c.dac.dem_enabled = to_bool(key, v);
    else if (key == "driver.i_bias_q_a") c.drv.i_bias_q = to_double(key, v);
    else if (key == "driver.i_limit_a") c.drv.i_limit = to_double(key, v);
    else if (key == "driver.i_adp_step_a") c.drv.i_adp_step = to_double(key, v);
    else if (key == "driver.i_adp_max_a") c.drv.i_adp_max = to_double(key, v);
    else if (key == "driver.hysteresis_a") c.drv.hysteresis = to_double(key, v);
    else if (key == "driver.adaptive") c.drv.adaptive_enabled = to_bool(key, v);
    else if (key == "driver.mirror_ratio") c.drv.mirror_ratio = to_int(key, v);
    else if (key == "driver.mirror_steps") {
      const auto xs = to_double_list(key, v);
      if (xs.size() != c.drv.mirror_steps.size())
        throw config_error("config: driver.mirror_steps needs 5 entries");
      for (std::size_t i = 0; i < xs.size(); ++i)
        c.drv.mirror_steps[i] = static_cast<int>(xs[i]);
    } else if (key == "driver.lin_headroom") c.drv.lin_headroom = to_double(key, v);
    else if (key == "driver.supply_v") c.drv.supply_v = to_double(key, v);
    else if (key == "driver.i_cm_a") c.drv.i_cm = to_double(key, v);
    else if (key == "readout.cycles_per_meas") c.ro.cycles_per_meas = to_int(key, v);
    else if (key == "readout.offset_code_p") c.ro.offset_code_p = to_int(key, v);
    else if (key == "readout.offset_code_n") c.ro.offset_code_n = to_int(key, v);
    else if (key == "readout.offset_lsb_a") c.ro.offset_lsb = to_double(key, v);
    else if (key == "readout.noise_sigma_a") c.ro.noise_sigma = to_double(key, v);
    else if (key == "readout.jitter_sigma_s") c.ro.jitter_sigma = to_double(key, v);
    else if (key == "readout.merge") {
      if (v == "majority") c.ro.merge = ReadoutSpec::Merge::majority;
      else if (v == "sum") c.ro.merge = ReadoutSpec::Merge::sum;
      else throw config_error("config: readout.merge must be majority|sum");
    } else if (key == "readout.p_conv_per_edge_j") c.ro.p_conv_per_edge = to_double(key, v);
    else if (key == "readout.duty_gate") c.ro.duty_gate = to_double(key, v);
    else if (key == "chain.auto_range") c.range.enabled = to_bool(key, v);
    else if (key == "chain.max_retries") c.range.max_retries = to_int(key, v);
    else if (key == "chain.target_duty") c.range.target_duty = to_double(key, v);
    else if (key == "chain.duty_high") c.range.duty_high = to_double(key, v);
    else if (key == "chain.i_m_target_a") c.range.i_m_target = to_double(key, v);
    else if (key == "chain.warmup_periods") c.range.warmup_periods = to_int(key, v);
    else if (key == "chain.load_c_pad_f") c.load_c_pad = to_double(key, v);
    else if (key == "grid.path") c.grid_path = v;
    else if (key == "grid.mux_r_on_ohm") c.mux_r_on = to_double(key, v);
    else if (key == "grid.line_cap_f") c.line_cap = to_double(key, v);
    else if (key == "grid.policy") c.policy = policy_from_string(v);
    else if (key == "grid.t_meas_s") c.t_meas = to_double(key, v);
    else if (key == "recon.method") {
      if (v == "fixed_point") c.recon.method = ReconSpec::Method::fixed_point;
      else if (v == "gauss_newton") c.recon.method = ReconSpec::Method::gauss_newton;
      else throw config_error("config: recon.method must be fixed_point|gauss_newton");
    } else if (key == "recon.max_iters") c.recon.max_iters = to_int(key, v);
    else if (key == "recon.tol") c.recon.tol = to_double(key, v);
    else if (key == "recon.damping") c.recon.damping = to_double(key, v);
    else if (key == "recon.r_min_ohm") c.recon.r_min = to_double(key, v);
    else if (key == "recon.r_max_ohm") c.recon.r_max = to_double(key, v);
    else if (key == "recon.fd_step") c.recon.fd_step = to_double(key, v);
    else if (key == "power.driver_w") c.power_driver_w = to_double(key, v);
    else if (key == "power.readout_w") c.power_readout_w = to_double(key, v);
    else if (key == "power.synth_w") c.power_synth_w = to_double(key, v);
    else if (key == "power.digital_w") c.power_digital_w = to_double(key, v);
    else if (key == "run.seed") c.seed = static_cast<std::uint64_t>(to_double(key, v));
    else if (key == "run.repeats") c.repeats = to_int(key, v);
    else if (key == "run.sweep_points") c.sweep_points = to_int(key, v);
    else if (key == "run.sweep_min_ohm") c.sweep_min = to_double(key, v);
    else if (key == "run.sweep_max_ohm") c.sweep_max = to_double(key, v);
    else if (key == "run.mc_loads_ohm") c.mc_loads = to_double_list(key, v);
    else if (key == "run.jobs") c.jobs = to_int(key, v);
    else if (key == "run.out_dir") c.out_dir = v;
    else if (key == "run.pgm_log10_min") c.pgm_log10_min = to_double(key, v);
    else if (key == "run.pgm_log10_max") c.pgm_log10_max = to_double(key, v);
    else if (key == "run.thd_points") c.thd_points = to_int(key, v);
    else if (key == "run.thd_min_a") c.thd_min_a = to_double(key, v);
    else if (key == "run.thd_max_a") c.thd_max_a = to_double(key, v);
    else throw config_error("config: unknown key '" + key + "'");
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot read config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_text(ss.str());
}

// Canonical text image of a config; hashing this pins an output file to the
// exact settings that produced it.
inline std::string canonical_text(const RunConfig& c) {
  using detail::fmt_num;
  std::ostringstream o;
  o << "[excitation]\n"
    << "f_exc_hz = " << fmt_num(c.exc.f_exc) << "\n"
    << "f_clk_hz = " << fmt_num(c.exc.f_clk) << "\n"
    << "amp_code = " << c.exc.amp_code << "\n"
    << "lut_bits = " << c.exc.lut_bits << "\n"
    << "lut_value_bits = " << c.exc.lut_value_bits << "\n"
    << "phases = " << c.exc.phases << "\n"
    << "enforce_paper_range = " << (c.exc.enforce_paper_range ? "true" : "false") << "\n"
    << "allow_zero_amp = " << (c.exc.allow_zero_amp ? "true" : "false") << "\n"
    << "[dac]\n"
    << "coarse_units = " << c.dac.coarse_units << "\n"
    << "fine_units = " << c.dac.fine_units << "\n"
    << "unit_mismatch_sigma = " << fmt_num(c.dac.unit_mismatch_sigma) << "\n"
    << "i_lsb_a = " << fmt_num(c.dac.i_lsb) << "\n"
    << "dem = " << (c.dac.dem_enabled ? "true" : "false") << "\n"
    << "[driver]\n"
    << "i_bias_q_a = " << fmt_num(c.drv.i_bias_q) << "\n"
    << "i_limit_a = " << fmt_num(c.drv.i_limit) << "\n"
    << "i_adp_step_a = " << fmt_num(c.drv.i_adp_step) << "\n"
    << "i_adp_max_a = " << fmt_num(c.drv.i_adp_max) << "\n"
    << "hysteresis_a = " << fmt_num(c.drv.hysteresis) << "\n"
    << "adaptive = " << (c.drv.adaptive_enabled ? "true" : "false") << "\n"
    << "mirror_ratio = " << c.drv.mirror_ratio << "\n";
  o << "mirror_steps = ";
  for (std::size_t i = 0; i < c.drv.mirror_steps.size(); ++i)
    o << (i ? "," : "") << c.drv.mirror_steps[i];
  o << "\n"
    << "lin_headroom = " << fmt_num(c.drv.lin_headroom) << "\n"
    << "supply_v = " << fmt_num(c.drv.supply_v) << "\n"
    << "i_cm_a = " << fmt_num(c.drv.i_cm) << "\n"
    << "[readout]\n"
    << "cycles_per_meas = " << c.ro.cycles_per_meas << "\n"
    << "offset_code_p = " << c.ro.offset_code_p << "\n"
    << "offset_code_n = " << c.ro.offset_code_n << "\n"
    << "offset_lsb_a = " << fmt_num(c.ro.offset_lsb) << "\n"
    << "noise_sigma_a = " << fmt_num(c.ro.noise_sigma) << "\n"
    << "jitter_sigma_s = " << fmt_num(c.ro.jitter_sigma) << "\n"
    << "merge = " << (c.ro.merge == ReadoutSpec::Merge::majority ? "majority" : "sum") << "\n"
    << "p_conv_per_edge_j = " << fmt_num(c.ro.p_conv_per_edge) << "\n"
    << "duty_gate = " << fmt_num(c.ro.duty_gate) << "\n"
    << "[chain]\n"
    << "auto_range = " << (c.range.enabled ? "true" : "false") << "\n"
    << "max_retries = " << c.range.max_retries << "\n"
    << "target_duty = " << fmt_num(c.range.target_duty) << "\n"
    << "duty_high = " << fmt_num(c.range.duty_high) << "\n"
    << "i_m_target_a = " << fmt_num(c.range.i_m_target) << "\n"
    << "warmup_periods = " << c.range.warmup_periods << "\n"
    << "load_c_pad_f = " << fmt_num(c.load_c_pad) << "\n"
    << "[grid]\n"
    << "path = " << c.grid_path << "\n"
    << "mux_r_on_ohm = " << fmt_num(c.mux_r_on) << "\n"
    << "line_cap_f = " << fmt_num(c.line_cap) << "\n"
    << "policy = " << to_string(c.policy) << "\n"
    << "t_meas_s = " << fmt_num(c.t_meas) << "\n"
    << "[recon]\n"
    << "method = " << (c.recon.method == ReconSpec::Method::fixed_point ? "fixed_point" : "gauss_newton") << "\n"
    << "max_iters = " << c.recon.max_iters << "\n"
    << "tol = " << fmt_num(c.recon.tol) << "\n"
    << "damping = " << fmt_num(c.recon.damping) << "\n"
    << "r_min_ohm = " << fmt_num(c.recon.r_min) << "\n"
    << "r_max_ohm = " << fmt_num(c.recon.r_max) << "\n"
    << "fd_step = " << fmt_num(c.recon.fd_step) << "\n"
    << "[power]\n"
    << "driver_w = " << fmt_num(c.power_driver_w) << "\n"
    << "readout_w = " << fmt_num(c.power_readout_w) << "\n"
    << "synth_w = " << fmt_num(c.power_synth_w) << "\n"
    << "digital_w = " << fmt_num(c.power_digital_w) << "\n"
    << "[run]\n"
    << "seed = " << c.seed << "\n"
    << "repeats = " << c.repeats << "\n"
    << "sweep_points = " << c.sweep_points << "\n"
    << "sweep_min_ohm = " << fmt_num(c.sweep_min) << "\n"
    << "sweep_max_ohm = " << fmt_num(c.sweep_max) << "\n";
  o << "mc_loads_ohm = ";
  for (std::size_t i = 0; i < c.mc_loads.size(); ++i)
    o << (i ? "," : "") << fmt_num(c.mc_loads[i]);
  o << "\n"
    << "jobs = " << c.jobs << "\n"
    << "out_dir = " << c.out_dir << "\n"
    << "pgm_log10_min = " << fmt_num(c.pgm_log10_min) << "\n"
    << "pgm_log10_max = " << fmt_num(c.pgm_log10_max) << "\n"
    << "thd_points = " << c.thd_points << "\n"
    << "thd_min_a = " << fmt_num(c.thd_min_a) << "\n"
    << "thd_max_a = " << fmt_num(c.thd_max_a) << "\n";
  return o.str();
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string config_hash(const RunConfig& c) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical_text(c))));
  return buf;
}

// Seed precedence: explicit CLI value, then TDZSIM_SEED, then the config.
inline std::uint64_t resolve_seed(const RunConfig& c, bool cli_set,
                                  std::uint64_t cli_seed) {
  if (cli_set) return cli_seed;
  if (const char* env = std::getenv("TDZSIM_SEED")) {
    try {
      return static_cast<std::uint64_t>(std::stoull(env));
    } catch (...) {
      throw config_error("TDZSIM_SEED is not a number");
    }
  }
  return c.seed;
}

}  // namespace tdzsim
