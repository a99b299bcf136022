#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tdzsim/errors.hpp"
#include "tdzsim/spectrum.hpp"

namespace tdzsim {

// Transconductance voltage driver. The output stage tracks the input onto
// the load; delivered current is soft-limited by the available bias. The
// calibration constants (lin_headroom, i_adp_max, i_limit, i_adp_step) set
// the linear-range extension and the loaded supply-current average; they
// live in the config, not in the equations.
struct DriverSpec {
  double i_bias_q = 74e-6;    // A, quiescent bias
  double i_limit = 10e-6;     // A, pre-saturation threshold margin
  double i_adp_step = 8e-6;   // A, event-driven bias increment
  double i_adp_max = 170e-6;  // A, total adaptive boost ceiling
  double hysteresis = -1.0;   // A, disengage margin; <0 -> i_adp_step
  bool adaptive_enabled = true;
  int mirror_ratio = 1;       // one of mirror_steps
  std::array<int, 5> mirror_steps{1, 5, 10, 15, 25};
  double lin_headroom = 3.3;  // beta: bias -> linear output-current capability
  double supply_v = 1.2;
  double i_cm = 15.75e-6;     // A, comparator-mirror common mode

  double hyst() const { return hysteresis < 0 ? i_adp_step : hysteresis; }
  double bias_ceiling() const {
    const int k = static_cast<int>(std::floor(i_adp_max / i_adp_step + 1e-12));
    return i_bias_q + k * i_adp_step;
  }
  bool mirror_valid() const {
    for (int m : mirror_steps)
      if (m == mirror_ratio) return true;
    return false;
  }
};

inline void validate(const DriverSpec& s) {
  if (!(s.i_bias_q > 0) || !(s.i_adp_step > 0))
    throw config_error("driver: bias and adaptive step must be positive");
  if (!(s.i_limit > 0) || s.i_limit >= s.i_bias_q)
    throw config_error("driver: need 0 < i_limit < i_bias_q");
  if (!s.mirror_valid())
    throw config_error("driver: mirror_ratio not one of the five steps");
  for (int m : s.mirror_steps)
    if (m < 1 || m > 25)
      throw config_error("driver: mirror steps must lie in 1..25");
  if (!(s.lin_headroom > 0) || !(s.supply_v > 0))
    throw config_error("driver: headroom and supply must be positive");
}

struct DriverState {
  bool adaptive_engaged = false;
  double i_bias_total = 0.0;
  int event_count = 0;
  double period_peak = 0.0;  // running |i_load| max, consumed per period
};

inline DriverState make_state(const DriverSpec& s) {
  DriverState st;
  st.i_bias_total = s.i_bias_q;
  return st;
}

inline double linear_capability(const DriverSpec& s, const DriverState& st) {
  return s.lin_headroom * st.i_bias_total;
}

struct DriveSample {
  double i_load = 0.0;
  double i_comp_p = 0.0;
  double i_comp_n = 0.0;
};

// One sample of the driver. v_in is the analytic excitation sample (real
// part is the instantaneous voltage) so complex loads evaluate as
// steady-state phasors. Only the peak tracker in `st` mutates here; bias
// moves exclusively through adaptive_bias_step.
inline DriveSample drive_sample(const DriverSpec& s, DriverState& st,
                                std::complex<double> v_in,
                                std::complex<double> z_load) {
  if (z_load == std::complex<double>(0.0, 0.0))
    throw std::domain_error("drive_sample: short circuit (z_load = 0)");
  const double ideal = std::real(v_in / z_load);
  const double cap = linear_capability(s, st);
  const double i_load = cap * std::tanh(ideal / cap);
  st.period_peak = std::max(st.period_peak, std::abs(i_load));
  DriveSample out;
  out.i_load = i_load;
  out.i_comp_p = 0.5 * i_load * s.mirror_ratio + s.i_cm;
  out.i_comp_n = -0.5 * i_load * s.mirror_ratio + s.i_cm;
  return out;
}

// Event-driven bias update, called once per excitation period with the
// period's mirrored-current peak estimate. Engages while the peak exceeds
// (i_bias_total - i_limit), stepping until headroom is restored or the
// ceiling is hit; disengages back to quiescent once the peak drops below
// the engage threshold by the hysteresis margin. At most one counted event
// per call, so bias changes only on threshold crossings.
inline void adaptive_bias_step(const DriverSpec& s, DriverState& st,
                               double i_mirror_peak_est) {
  if (!s.adaptive_enabled) return;
  if (i_mirror_peak_est < 0)
    throw std::domain_error("adaptive_bias_step: negative peak estimate");
  const double before = st.i_bias_total;
  const double ceiling = s.bias_ceiling();
  while (i_mirror_peak_est > st.i_bias_total - s.i_limit &&
         st.i_bias_total + s.i_adp_step <= ceiling + 1e-15) {
    st.i_bias_total += s.i_adp_step;
    st.adaptive_engaged = true;
  }
  if (st.adaptive_engaged &&
      i_mirror_peak_est < st.i_bias_total - s.i_limit - s.hyst()) {
    st.i_bias_total = s.i_bias_q;
    st.adaptive_engaged = false;
  }
  if (st.i_bias_total != before) ++st.event_count;
  st.period_peak = 0.0;
}

// Steady-state bias for a constant ideal current amplitude; the ratchet
// converges once no period changes the state.
inline std::pair<DriverState, int> settle_bias(const DriverSpec& s,
                                               double ideal_amp,
                                               int max_periods = 64) {
  DriverState st = make_state(s);
  for (int p = 0; p < max_periods; ++p) {
    const double cap = linear_capability(s, st);
    const double peak = cap * std::tanh(std::abs(ideal_amp) / cap);
    const int ev = st.event_count;
    adaptive_bias_step(s, st, peak);
    if (st.event_count == ev) return {st, p + 1};
  }
  return {st, max_periods};
}

// THD of the delivered current for a sine of the given ideal amplitude,
// with the bias settled first.
inline double driver_thd(const DriverSpec& spec, bool adaptive,
                         double ideal_amp, int samples_per_period = 1024,
                         int periods = 4, unsigned n_harmonics = 25) {
  DriverSpec s = spec;
  s.adaptive_enabled = adaptive;
  const auto [st, _] = settle_bias(s, ideal_amp);
  const double cap = linear_capability(s, st);
  Waveform w;
  w.rate = samples_per_period * 1.0;  // fundamental at 1 Hz, shape-only
  w.unit = "A";
  w.samples.resize(static_cast<std::size_t>(samples_per_period) * periods);
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    const double th = 2.0 * std::numbers::pi *
                      static_cast<double>(i % samples_per_period) /
                      samples_per_period;
    w.samples[i] = cap * std::tanh(ideal_amp * std::sin(th) / cap);
  }
  return thd(w, 1.0, n_harmonics);
}

// Largest sine amplitude (A of ideal load current) whose delivered-current
// THD stays within the limit. Bracketing doubles up from 1 uA, then
// bisects; THD grows with amplitude for fixed bias.
inline double linear_range(const DriverSpec& spec, bool adaptive,
                           double thd_limit) {
  if (!(thd_limit > 0) || thd_limit > 0.2)
    throw config_error("linear_range: thd_limit must lie in (0, 0.2]");
  double lo = 0.0;
  double hi = 1e-6;
  for (int i = 0; i < 48 && driver_thd(spec, adaptive, hi) <= thd_limit; ++i) {
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (driver_thd(spec, adaptive, mid) <= thd_limit)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

// Per-sample record of the bias and delivered current over a run.
struct DriverTrace {
  std::vector<double> i_bias;
  std::vector<double> i_load;
};

// Average supply power: the bias plus the delivered-current magnitude are
// drawn from the rail; the comparator-mirror common mode is booked under
// the readout budget.
inline double driver_power(const DriverSpec& s, const DriverTrace& trace) {
  if (trace.i_bias.empty()) return s.supply_v * s.i_bias_q;
  double acc = 0.0;
  for (std::size_t i = 0; i < trace.i_bias.size(); ++i)
    acc += trace.i_bias[i] + std::abs(trace.i_load[i]);
  return s.supply_v * acc / static_cast<double>(trace.i_bias.size());
}

// Mean |i_load| over one period for a settled sine drive.
inline double mean_abs_load(const DriverSpec& s, const DriverState& st,
                            double ideal_amp, int samples = 4096) {
  const double cap = linear_capability(s, st);
  double acc = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double th = 2.0 * std::numbers::pi * i / samples;
    acc += std::abs(cap * std::tanh(ideal_amp * std::sin(th) / cap));
  }
  return acc / samples;
}

}  // namespace tdzsim
