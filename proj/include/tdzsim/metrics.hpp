#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "tdzsim/chain.hpp"
#include "tdzsim/errors.hpp"
#include "tdzsim/rng.hpp"

namespace tdzsim {

inline double mean_of(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

// Population standard deviation.
inline double std_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

// Time-domain SNR of repeated readings, 20 log10(mean/std). A constant
// series returns the +inf sentinel.
inline double snr_db(const std::vector<double>& r_series) {
  if (r_series.size() < 2) throw config_error("snr_db: need >= 2 readings");
  const double s = std_of(r_series);
  if (s == 0.0) return std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(mean_of(r_series) / s);
}

// ENOB from the mean/std ratio. The default reading divides by 2*sqrt(2)*std,
// which is the interpretation consistent with published SNR/ENOB pairs; the
// literal variant log2(mean / (2*sqrt(std))) is kept behind the flag.
inline double enob_from_ratio(double mean_over_std) {
  return std::log2(mean_over_std / (2.0 * std::numbers::sqrt2));
}

inline double enob_from_snr_db(double snr) {
  return enob_from_ratio(std::pow(10.0, snr / 20.0));
}

inline double enob(const std::vector<double>& r_series,
                   bool literal_footnote = false) {
  if (r_series.size() < 2) throw config_error("enob: need >= 2 readings");
  const double s = std_of(r_series);
  if (s == 0.0) return std::numeric_limits<double>::infinity();
  if (literal_footnote)
    return std::log2(mean_of(r_series) / (2.0 * std::sqrt(s)));
  return enob_from_ratio(mean_of(r_series) / s);
}

// Schreier-style figure of merit: SNR plus 10 log10 of sampling frequency
// (sensors per frame, in kHz) over total power in mW.
inline double fom_db(double snr_db_v, double n_sensors, double frame_time_ms,
                     double power_mw) {
  if (!(n_sensors > 0) || !(frame_time_ms > 0) || !(power_mw > 0))
    throw config_error("fom_db: inputs must be positive");
  const double fs_khz = n_sensors / frame_time_ms;
  return snr_db_v + 10.0 * std::log10(fs_khz / power_mw);
}

struct BudgetComponent {
  std::string name;
  double power_w = 0.0;
};

struct BudgetReport {
  double total_w = 0.0;
  double per_sensor_w = 0.0;
  double energy_per_sensor_j = 0.0;
  double fps = 0.0;
  std::vector<BudgetComponent> components;  // as given
  std::vector<double> shares;               // same order, fraction of total
};

inline BudgetReport budget(const std::vector<BudgetComponent>& components,
                           int n_sensors, double frame_time_s) {
  if (n_sensors < 1 || !(frame_time_s > 0))
    throw config_error("budget: need sensors >= 1 and frame_time > 0");
  BudgetReport rep;
  rep.components = components;
  for (const auto& c : components) {
    if (c.power_w < 0) throw config_error("budget: negative component power");
    rep.total_w += c.power_w;
  }
  rep.per_sensor_w = rep.total_w / n_sensors;
  rep.energy_per_sensor_j = rep.total_w * frame_time_s / n_sensors;
  rep.fps = 1.0 / frame_time_s;
  rep.shares.reserve(components.size());
  for (const auto& c : components)
    rep.shares.push_back(rep.total_w > 0 ? c.power_w / rep.total_w : 0.0);
  return rep;
}

struct SweepRow {
  double load_ohm = 0.0;
  double r_meas = std::numeric_limits<double>::quiet_NaN();
  double mean_rel_err = std::numeric_limits<double>::quiet_NaN();
  double snr_db = std::numeric_limits<double>::quiet_NaN();
  MeasFlags flags;
  int attempts = 0;
};

// Full-chain single-load measurements across a set of resistive loads.
// The first (auto-ranged) conversion fixes the settings; additional repeats
// re-measure at those settings for the SNR column.
inline std::vector<SweepRow> error_sweep(const std::vector<double>& loads,
                                         const ChainConfig& cfg, int repeats,
                                         std::uint64_t seed) {
  std::vector<SweepRow> rows;
  rows.reserve(loads.size());
  for (std::size_t li = 0; li < loads.size(); ++li) {
    const double r_true = loads[li];
    SweepRow row;
    row.load_ohm = r_true;
    const std::complex<double> z =
        parallel_rc(r_true, cfg.load_c_pad, cfg.exc.f_exc);
    const Measurement base =
        measure_auto(cfg, z, Rng::stream(seed, 2, li).next_u64());
    row.flags = base.flags;
    row.attempts = base.attempts;
    row.r_meas = base.r;
    if (base.flags.short_circuit || base.flags.open_circuit ||
        base.flags.saturated) {
      rows.push_back(row);
      continue;
    }
    std::vector<double> series;
    series.reserve(static_cast<std::size_t>(std::max(1, repeats)));
    double err_acc = 0.0;
    int n = 0;
    for (int rep = 0; rep < std::max(1, repeats); ++rep) {
      Measurement m = base;
      if (rep > 0 || repeats > 1) {
        m = measure_fixed(cfg, base.settings, z,
                          Rng::stream(seed, 3, li, static_cast<std::uint64_t>(rep))
                              .next_u64());
        if (m.counts.saturated()) continue;
      }
      series.push_back(m.r);
      err_acc += std::abs(m.r - r_true) / r_true;
      ++n;
    }
    if (n > 0) row.mean_rel_err = err_acc / n;
    if (series.size() >= 2) row.snr_db = snr_db(series);
    rows.push_back(row);
  }
  return rows;
}

// Published comparison-table row; zero/negative entries mean "not stated".
struct ChipRow {
  std::string name;
  int tech_nm = 0;
  std::string supply_v;
  std::string method;
  double n_sensors = 0;
  std::string input_range;
  double power_uw = 0;
  double power_per_sensor_uw = 0;
  double energy_per_sensor_nj = 0;
  double area_per_sensor_mm2 = 0;
  std::string conv_time;
  double frame_time_ms = 0;  // for FoM recompute; 0 when unknown
  double snr_db = 0;
  double enob = 0;
  double fom_db = 0;  // published; 0 when not given
};

inline std::vector<ChipRow> comparison_table() {
  return {
      {"ISSCC20", 130, "1.2", "Voltage", 32, "249k", 70, 2.2, 0, 0.14, "N/A",
       0, 77.7, 11.4, 0},
      {"JSSC23", 180, "1.8", "Voltage", 1, "2.2k-4.4k", 12.79, 12.79, 147.3,
       2.52, "11.52ms", 11.52, 71.0, 10.3, 79.3},
      {"JSSC24a", 65, "1.8/1.0", "T-D", 208, "N/A", 1760, 8.46, 23.7, 0.0091,
       "2.81ms/frame", 2.81, 52.7, 7.3, 68.9},
      {"JSSC24b", 65, "1.2", "Voltage", 72, "<910k", 53, 0.74, 83.3, 0.06,
       "112.5ms/frame", 112.5, 70.0, 10.1, 80.8},
      {"this_work", 65, "1.2", "T-D", 253, "20-500k", 158, 0.62, 7.5, 0.0067,
       "12.2ms/frame", 12.2, 71.1, 10.3, 92.3},
  };
}

inline double recompute_fom(const ChipRow& r) {
  if (r.frame_time_ms <= 0 || r.power_uw <= 0)
    return std::numeric_limits<double>::quiet_NaN();
  return fom_db(r.snr_db, r.n_sensors, r.frame_time_ms, r.power_uw * 1e-3);
}

inline double recompute_enob(const ChipRow& r) {
  return enob_from_snr_db(r.snr_db);
}

}  // namespace tdzsim
