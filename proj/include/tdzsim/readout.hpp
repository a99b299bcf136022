#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <vector>

#include "tdzsim/errors.hpp"
#include "tdzsim/rng.hpp"

namespace tdzsim {

// Clocked dynamic comparator with programmable differential offset and
// phase-interleaved sampling. The net threshold is the offset-DAC
// difference; a measurement needs it nonzero.
struct ReadoutSpec {
  double f_clk = 64e6;
  int phases = 6;
  int cycles_per_meas = 6;    // excitation cycles per conversion
  int offset_code_p = 0;      // 0..63
  int offset_code_n = 16;     // 0..63
  double offset_lsb = 0.5e-6; // A per code
  double noise_sigma = 0.0;   // A, input-referred, per sample
  double jitter_sigma = 0.0;  // s, clock-edge jitter, per sample
  enum class Merge { majority, sum } merge = Merge::majority;
  // Power model: energy per comparison edge times clock rate, scaled by the
  // gated-clock duty. Defaults give 28 uW at 64 MHz.
  double p_conv_per_edge = 1.75e-12;  // J
  double duty_gate = 0.25;

  double net_threshold() const {
    return (offset_code_n - offset_code_p) * offset_lsb;
  }
};

inline void validate(const ReadoutSpec& s) {
  if (s.f_clk <= 0) throw config_error("readout: f_clk must be positive");
  if (s.phases < 1) throw config_error("readout: phases must be >= 1");
  if (s.cycles_per_meas < 1 || s.cycles_per_meas % s.phases != 0)
    throw config_error("readout: cycles_per_meas must be a multiple of phases");
  if (s.offset_code_p < 0 || s.offset_code_p > 63 || s.offset_code_n < 0 ||
      s.offset_code_n > 63)
    throw config_error("readout: offset codes must lie in 0..63");
  if (!(s.offset_lsb > 0)) throw config_error("readout: offset_lsb <= 0");
  if (s.net_threshold() == 0.0)
    throw config_error("readout: net threshold offset must be nonzero");
}

// Comparator decisions, one vector per excitation cycle. Cycle m samples
// period m with its clock shifted by m/phases of a tick, which refines the
// effective grid to phases * f_clk / f_exc positions per period.
struct SampledBits {
  std::int64_t n0_base = 0;  // clock ticks per excitation period
  int phases = 0;
  std::vector<std::vector<std::uint8_t>> bits;  // [cycle][tick]
};

template <typename DiffFn>
SampledBits sample_bits(const ReadoutSpec& spec, DiffFn&& diff_current,
                        double f_exc, std::uint64_t seed) {
  validate(spec);
  const double ratio = spec.f_clk / f_exc;
  if (std::abs(ratio - std::round(ratio)) > 1e-9)
    throw config_error("readout: f_clk/f_exc must be an integer");
  const std::int64_t n0b = static_cast<std::int64_t>(std::llround(ratio));
  const double i_th = spec.net_threshold();

  Rng rng = Rng::stream(seed, 0x7264 /* rd */, 0, 0);
  SampledBits out;
  out.n0_base = n0b;
  out.phases = spec.phases;
  out.bits.assign(spec.cycles_per_meas, {});
  for (int m = 0; m < spec.cycles_per_meas; ++m) {
    auto& row = out.bits[m];
    row.resize(static_cast<std::size_t>(n0b));
    const double frac = static_cast<double>(m % spec.phases) / spec.phases;
    for (std::int64_t n = 0; n < n0b; ++n) {
      double t = (static_cast<double>(m) * n0b + n + frac) / spec.f_clk;
      if (spec.jitter_sigma > 0) t += spec.jitter_sigma * rng.gauss();
      double v = diff_current(t);
      if (spec.noise_sigma > 0) v += spec.noise_sigma * rng.gauss();
      row[static_cast<std::size_t>(n)] = v > i_th ? 1 : 0;
    }
  }
  return out;
}

// Count triple on the effective grid. n2 is the first rising edge measured
// from the excitation phase reference (tick 0 of the window).
struct TdCounts {
  std::int64_t n0 = 0;
  std::int64_t n1 = 0;
  std::int64_t n2 = 0;
  bool sat_low = false;   // no position above threshold
  bool sat_high = false;  // every position above threshold
  bool saturated() const { return sat_low || sat_high; }
};

inline TdCounts extract_counts(const SampledBits& sb, const ReadoutSpec& spec) {
  validate(spec);
  const std::int64_t n0 = sb.n0_base * sb.phases;
  const int rounds = static_cast<int>(sb.bits.size()) / sb.phases;
  std::vector<int> votes(static_cast<std::size_t>(n0), 0);
  for (std::size_t m = 0; m < sb.bits.size(); ++m) {
    const int ph = static_cast<int>(m) % sb.phases;
    for (std::int64_t n = 0; n < sb.n0_base; ++n) {
      const std::int64_t pos = n * sb.phases + ph;
      votes[static_cast<std::size_t>(pos)] +=
          sb.bits[m][static_cast<std::size_t>(n)];
    }
  }
  std::vector<std::uint8_t> merged(static_cast<std::size_t>(n0), 0);
  for (std::int64_t p = 0; p < n0; ++p) {
    // majority with ties high; the sum rule reduces to the same comparison
    // on the per-position average.
    merged[static_cast<std::size_t>(p)] =
        2 * votes[static_cast<std::size_t>(p)] >= rounds ? 1 : 0;
  }

  TdCounts c;
  c.n0 = n0;
  for (auto b : merged) c.n1 += b;
  if (c.n1 == 0) {
    c.sat_low = true;
    return c;
  }
  if (c.n1 == n0) {
    c.sat_high = true;
    c.n1 = n0;
    return c;
  }
  // Rising edge of the principal pulse: the start of the longest circular
  // high run. For a clean single pulse this is the one 0->1 transition;
  // under noise it ignores stray flipped samples.
  std::int64_t start0 = 0;
  while (merged[static_cast<std::size_t>(start0)]) ++start0;
  std::int64_t best_len = 0, cur_len = 0, cur_start = 0;
  for (std::int64_t k = 0; k < n0; ++k) {
    const std::int64_t p = (start0 + k) % n0;
    if (merged[static_cast<std::size_t>(p)]) {
      if (cur_len == 0) cur_start = p;
      if (++cur_len > best_len) {
        best_len = cur_len;
        c.n2 = cur_start;
      }
    } else {
      cur_len = 0;
    }
  }
  return c;
}

struct Phasor {
  double i_m = 0.0;    // A
  double theta = 0.0;  // rad, in (-pi, pi]
};

inline double wrap_angle(double a) {
  const double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

// Closed-form demodulation: with duty d = n1/n0 the pulse edges sit where
// the sine crosses the threshold, so i_m = i_th / cos(pi d) and the pulse
// center fixes theta = pi/2 - 2 pi (n2 + n1/2) / n0.
inline Phasor demodulate(const TdCounts& c, double i_th) {
  if (c.saturated())
    throw demod_error(
        "demodulate: counts saturated; step mirror_ratio down or offset up");
  if (i_th == 0.0) throw demod_error("demodulate: zero threshold");
  const double d = static_cast<double>(c.n1) / static_cast<double>(c.n0);
  const double cd = std::cos(std::numbers::pi * d);
  if (std::abs(cd) < 1e-12)
    throw demod_error("demodulate: duty 1/2 is inconsistent with a nonzero threshold");
  Phasor p;
  p.i_m = i_th / cd;
  p.theta = wrap_angle(std::numbers::pi / 2.0 -
                       2.0 * std::numbers::pi *
                           (static_cast<double>(c.n2) + 0.5 * c.n1) / c.n0);
  return p;
}

// Impedance seen by the driver: |Z| = mirror_ratio * v_m / i_m at angle
// -theta_rel, theta_rel measured against the excitation reference.
inline std::complex<double> to_impedance(const Phasor& p, double v_m_peak,
                                         int mirror_ratio,
                                         double theta_ref = 0.0) {
  if (!(p.i_m > 0))
    throw std::domain_error("to_impedance: nonpositive magnitude (open circuit)");
  const double mag = mirror_ratio * v_m_peak / p.i_m;
  const double th = p.theta - theta_ref;
  return std::polar(mag, -th);
}

inline double readout_power(const ReadoutSpec& s) {
  return s.p_conv_per_edge * s.f_clk * s.duty_gate;
}

inline double conversion_time(const ReadoutSpec& s, double f_exc) {
  return s.cycles_per_meas / f_exc;
}

}  // namespace tdzsim
