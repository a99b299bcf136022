#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>

#include "tdzsim/driver.hpp"
#include "tdzsim/excitation.hpp"
#include "tdzsim/readout.hpp"

namespace tdzsim {

// Gain-planning policy for a single measurement. A probe with the
// configured settings produces an impedance estimate; the retune step then
// picks mirror ratio, amplitude code and offset code so the comparator
// sees i_m near i_m_target at duty near target_duty. Saturated probes jump
// to the gain extreme first. Bounded by max_retries re-measurements.
struct RangePolicy {
  bool enabled = true;
  int max_retries = 3;
  double target_duty = 0.2;
  double duty_ok_lo = 0.08;    // acceptance window around the target
  double duty_ok_hi = 0.35;
  double duty_high = 0.45;     // flag threshold for error-amplified duty
  double i_m_target = 10e-6;   // A at the comparator
  int warmup_periods = 64;     // adaptive-bias settling budget
};

struct ChainConfig {
  ExcitationSpec exc;
  DriverSpec drv;
  ReadoutSpec ro;
  RangePolicy range;
  double load_c_pad = 4.7e-12;  // F across a bench load at the sense node
};

struct ChainSettings {
  int amp_code = 16;
  int mirror_ratio = 1;
  int offset_code_p = 0;
  int offset_code_n = 32;

  bool operator==(const ChainSettings&) const = default;
};

inline ChainSettings default_settings(const ChainConfig& cfg) {
  return {cfg.exc.amp_code, cfg.drv.mirror_ratio, cfg.ro.offset_code_p,
          cfg.ro.offset_code_n};
}

struct MeasFlags {
  bool short_circuit = false;
  bool open_circuit = false;
  bool saturated = false;
  bool inconsistent = false;    // duty pinned at 1/2, gain far too high
  bool duty_high = false;       // duty above the policy threshold
  bool retries_exhausted = false;
  bool reactive_only = false;   // no resolvable resistive part

  bool any() const {
    return short_circuit || open_circuit || saturated || inconsistent ||
           duty_high || retries_exhausted || reactive_only;
  }
  std::string str() const {
    std::string s;
    auto add = [&s](const char* t) {
      if (!s.empty()) s += ';';
      s += t;
    };
    if (short_circuit) add("short");
    if (open_circuit) add("open");
    if (saturated) add("saturated");
    if (inconsistent) add("inconsistent");
    if (duty_high) add("duty_high");
    if (retries_exhausted) add("retries_exhausted");
    if (reactive_only) add("reactive_only");
    if (s.empty()) s = "ok";
    return s;
  }
};

struct Measurement {
  TdCounts counts;
  Phasor phasor;
  std::complex<double> z{0.0, 0.0};
  double r = std::numeric_limits<double>::quiet_NaN();
  double i_th = 0.0;
  double v_peak = 0.0;
  ChainSettings settings;
  MeasFlags flags;
  int attempts = 0;
  int bias_events = 0;
  double i_bias_settled = 0.0;
  double supply_current_avg = 0.0;
  double driver_power_w = 0.0;
};

inline double resistance_from_z(std::complex<double> z) {
  const double g = std::real(1.0 / z);
  return g > 0 ? 1.0 / g : std::numeric_limits<double>::quiet_NaN();
}

inline std::complex<double> parallel_rc(double r_ohm, double c_farad,
                                        double f_hz) {
  const std::complex<double> y(1.0 / r_ohm,
                               2.0 * std::numbers::pi * f_hz * c_farad);
  return 1.0 / y;
}

// One conversion at fixed settings: settle the adaptive bias, build the
// mirrored-current signal, sample, count, demodulate.
inline Measurement measure_fixed(const ChainConfig& cfg,
                                 const ChainSettings& st,
                                 std::complex<double> z_load,
                                 std::uint64_t seed) {
  Measurement m;
  m.settings = st;
  m.v_peak = amplitude_peak(st.amp_code);

  if (z_load == std::complex<double>(0.0, 0.0)) {
    m.flags.short_circuit = true;
    m.r = 0.0;
    return m;
  }

  ExcitationSpec exc = cfg.exc;
  exc.amp_code = st.amp_code;
  validate(exc);
  DriverSpec drv = cfg.drv;
  drv.mirror_ratio = st.mirror_ratio;
  validate(drv);
  ReadoutSpec ro = cfg.ro;
  ro.offset_code_p = st.offset_code_p;
  ro.offset_code_n = st.offset_code_n;
  validate(ro);

  const double a_ideal = m.v_peak / std::abs(z_load);
  const double phi_z = std::arg(z_load);
  const auto [state, settle_periods] =
      settle_bias(drv, a_ideal, cfg.range.warmup_periods);
  (void)settle_periods;
  const double cap = linear_capability(drv, state);
  m.bias_events = state.event_count;
  m.i_bias_settled = state.i_bias_total;

  const double w = 2.0 * std::numbers::pi * exc.f_exc;
  const double ratio = static_cast<double>(drv.mirror_ratio);
  const auto diff = [&](double t) {
    const double ideal = a_ideal * std::sin(w * t - phi_z);
    return ratio * cap * std::tanh(ideal / cap);
  };

  const SampledBits bits = sample_bits(ro, diff, exc.f_exc, seed);
  m.counts = extract_counts(bits, ro);
  m.i_th = ro.net_threshold();
  m.supply_current_avg =
      state.i_bias_total + mean_abs_load(drv, state, a_ideal);
  m.driver_power_w = drv.supply_v * m.supply_current_avg;

  if (m.counts.saturated()) {
    m.flags.saturated = true;
    return m;
  }
  try {
    m.phasor = demodulate(m.counts, m.i_th);
  } catch (const demod_error&) {
    m.flags.inconsistent = true;
    return m;
  }
  m.z = to_impedance(m.phasor, m.v_peak, drv.mirror_ratio);
  m.r = resistance_from_z(m.z);
  if (!(m.r > 0) || !std::isfinite(m.r)) m.flags.reactive_only = true;
  const double duty =
      static_cast<double>(m.counts.n1) / static_cast<double>(m.counts.n0);
  m.flags.duty_high = duty > cfg.range.duty_high;
  return m;
}

// Settings for a known impedance magnitude: mirror and amplitude bring the
// comparator current near i_m_target (small against the driver capability,
// which keeps the soft-limit bias negligible), the offset code then places
// the duty near target_duty.
inline ChainSettings plan_settings(const ChainConfig& cfg, double z_mag) {
  ChainSettings best;
  double best_score = std::numeric_limits<double>::infinity();
  for (int ratio : cfg.drv.mirror_steps) {
    const double amp_ideal =
        128.0 * z_mag * cfg.range.i_m_target / static_cast<double>(ratio);
    const int amp = std::clamp(static_cast<int>(std::llround(amp_ideal)), 1, 64);
    const double i_m_pred = ratio * (amp / 128.0) / z_mag;
    const double score = std::abs(std::log(i_m_pred / cfg.range.i_m_target));
    if (score < best_score) {
      best_score = score;
      best.amp_code = amp;
      best.mirror_ratio = ratio;
    }
  }
  const double i_m_pred =
      best.mirror_ratio * (best.amp_code / 128.0) / z_mag;
  const double i_th_want =
      i_m_pred * std::cos(std::numbers::pi * cfg.range.target_duty);
  const int code = std::clamp(
      static_cast<int>(std::llround(i_th_want / cfg.ro.offset_lsb)), 1, 63);
  best.offset_code_p = 0;
  best.offset_code_n = code;
  return best;
}

inline ChainSettings max_gain_settings(const ChainConfig& cfg) {
  ChainSettings s;
  s.amp_code = 64;
  s.mirror_ratio = *std::max_element(cfg.drv.mirror_steps.begin(),
                                     cfg.drv.mirror_steps.end());
  s.offset_code_p = 0;
  s.offset_code_n = 1;
  return s;
}

inline ChainSettings min_gain_settings(const ChainConfig& cfg) {
  ChainSettings s;
  s.amp_code = 1;
  s.mirror_ratio = *std::min_element(cfg.drv.mirror_steps.begin(),
                                     cfg.drv.mirror_steps.end());
  s.offset_code_p = 0;
  s.offset_code_n = 63;
  return s;
}

// The planner may flip an adjacent code between attempts; anything within
// one LSB of amplitude or offset is the same operating point.
inline bool settings_close(const ChainSettings& a, const ChainSettings& b) {
  return a.mirror_ratio == b.mirror_ratio &&
         std::abs(a.amp_code - b.amp_code) <= 1 &&
         a.offset_code_p == b.offset_code_p &&
         std::abs(a.offset_code_n - b.offset_code_n) <= 1;
}

// Auto-ranged measurement: probe, retune from the estimate, accept once the
// duty lands in the healthy window or the planned settings stop moving.
inline Measurement measure_auto(const ChainConfig& cfg,
                                std::complex<double> z_load,
                                std::uint64_t seed) {
  ChainSettings settings = default_settings(cfg);
  const int max_attempts = 1 + std::max(0, cfg.range.max_retries);
  Measurement m;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    m = measure_fixed(cfg, settings, z_load, Rng::stream(seed, 0, attempt).next_u64());
    m.attempts = attempt + 1;
    if (m.flags.short_circuit || !cfg.range.enabled) return m;
    if (m.counts.sat_low) {
      if (settings == max_gain_settings(cfg)) {
        m.flags.open_circuit = true;
        return m;
      }
      settings = max_gain_settings(cfg);
      continue;
    }
    if (m.counts.sat_high || m.flags.inconsistent) {
      // Duty pinned at 1/2: the magnitude is at least i_th/cos(pi*d_max),
      // which bounds |Z| from above; replan for that bound.
      const double n0 = static_cast<double>(m.counts.n0);
      const double d_max = 0.5 - 1.0 / n0;
      const double i_m_lb = m.i_th / std::cos(std::numbers::pi * d_max);
      const double z_ub = settings.mirror_ratio * m.v_peak / i_m_lb;
      const ChainSettings want = plan_settings(cfg, z_ub);
      if (want == settings) return m;
      settings = want;
      continue;
    }
    const double duty =
        static_cast<double>(m.counts.n1) / static_cast<double>(m.counts.n0);
    if (duty >= cfg.range.duty_ok_lo && duty <= cfg.range.duty_ok_hi) return m;
    const ChainSettings want = plan_settings(cfg, std::abs(m.z));
    if (settings_close(want, settings)) return m;
    if (attempt + 1 >= max_attempts) {
      m.flags.retries_exhausted = true;
      return m;
    }
    settings = want;
  }
  return m;
}

}  // namespace tdzsim
